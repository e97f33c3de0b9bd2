"""Pure-Python gap-moment kernels (fallback when the compiled core is absent).

Both backends must agree bit for bit: same summation order, same
compensation threshold, same power evaluation.
"""
import math

COMPENSATE_ABOVE = 64


def ordered_sum(terms):
    n = len(terms)
    if n <= COMPENSATE_ABOVE:
        s = 0.0
        for t in terms:
            s += t
        return s
    # Neumaier compensated summation, ascending index
    s = 0.0
    c = 0.0
    for t in terms:
        t = float(t)
        u = s + t
        if abs(s) >= abs(t):
            c += (s - u) + t
        else:
            c += (t - u) + s
        s = u
    return s + c


def gap_moment(values, target, gap_power, exponent):
    target = float(target)
    exponent = float(exponent)
    terms = []
    for v in values:
        v = float(v)
        g = target - v
        gp = g if gap_power == 1 else g * g
        if exponent == 0.0:
            terms.append(gp)
        else:
            terms.append(gp * math.pow(v, exponent))
    return ordered_sum(terms)
