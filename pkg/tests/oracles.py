"""Independent reference implementations used only by the test-suite.

Nothing here imports from ``freqreg``; every routine is a deliberately plain
restatement of a textbook procedure so that it can serve as a check on the
optimised library code.
"""

from __future__ import annotations

import itertools
import math


def astm_turning_points(series, tol=1e-12):
    """Peaks and valleys of ``series`` (plateaus merged, endpoints kept)."""
    pts = []
    for x in series:
        x = float(x)
        if pts and abs(x - pts[-1]) <= tol:
            continue
        if len(pts) >= 2 and (pts[-1] - pts[-2]) * (x - pts[-1]) > 0:
            pts[-1] = x
            continue
        pts.append(x)
    return pts


def astm_rainflow(series):
    """ASTM E1049 three-point rainflow counting.

    Returns a sorted list of ``(range, count)`` with count 1.0 for full
    cycles and 0.5 for half cycles.
    """
    points = astm_turning_points(series)
    out = []
    stack = []
    start = 0  # index into ``stack`` of the starting point S
    for p in points:
        stack.append(p)
        while len(stack) - start >= 3:
            x = abs(stack[-1] - stack[-2])
            y = abs(stack[-2] - stack[-3])
            if x < y:
                break
            if len(stack) - start == 3:
                # Y contains S: half cycle, drop S
                out.append((y, 0.5))
                start += 1
            else:
                out.append((y, 1.0))
                last = stack.pop()
                stack.pop()
                stack.pop()
                stack.append(last)
    rest = stack[start:]
    for a, b in zip(rest, rest[1:]):
        out.append((abs(b - a), 0.5))
    return sorted(out)


def power_stress(u, k, alpha):
    return k * u ** alpha


def brute_force_regulation_cost(instr, e0, e_lo, e_hi, interval, eta, energy,
                                replacement, k, alpha, pi, levels):
    """Enumerate every quantized dispatch path and return the cheapest cost.

    ``levels`` fractions of the instruction are tried at each step. Cost is
    ``pi * M * |Cr - b|_1`` plus rainflow aging on the SoC path.
    """
    best = math.inf
    for fracs in itertools.product(levels, repeat=len(instr)):
        e = e0
        soc = [e0 / energy]
        mismatch = 0.0
        ok = True
        for f, c in zip(fracs, instr):
            b = f * c
            e = e + interval * eta * max(b, 0.0) - interval * max(-b, 0.0) / eta
            if e < e_lo - 1e-9 or e > e_hi + 1e-9:
                ok = False
                break
            soc.append(e / energy)
            mismatch += abs(c - b)
        if not ok:
            continue
        aging = energy * replacement * sum(
            w * power_stress(d, k, alpha) for d, w in astm_rainflow(soc))
        best = min(best, pi * interval * mismatch + aging)
    return best
