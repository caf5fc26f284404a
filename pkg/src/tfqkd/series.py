"""Symmetric-polynomial series used by the analytical yield bounds.

The bound formulas contain alternating sums of exponentials over the decoy
intensities (third- and higher-order divided differences of exp).  Evaluated
literally those cancel catastrophically for the tiny intensities the decoy
method uses, so every such bracket is computed here as a factorially damped
series of complete homogeneous symmetric polynomials: all terms are positive
and the series converge to machine precision in a few dozen terms.
"""

from __future__ import annotations

import math
from functools import lru_cache

_MAX_TERMS = 200
_REL_TOL = 1e-18


def hom_sym_sum(values, degree: int) -> float:
    """Complete homogeneous symmetric polynomial h_degree(values).

    Sum of all degree-``degree`` monomials with non-decreasing index chains;
    h_0 is 1 by convention, including for an empty value set.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    hs = [0.0] * (degree + 1)
    hs[0] = 1.0
    for v in values:
        for k in range(1, degree + 1):
            hs[k] += v * hs[k - 1]
    return hs[degree]


def elem_sym(values) -> list[float]:
    """All elementary symmetric polynomials e_0 .. e_q of the values."""
    es = [1.0]
    for v in values:
        es.append(0.0)
        for k in range(len(es) - 1, 0, -1):
            es[k] += v * es[k - 1]
    return es


def exp_h_tail(values, start: int) -> float:
    """Sum over n >= start of h_{n-start}(values) / n!.

    This is the factorially damped tail of the generating series of the
    complete homogeneous polynomials; it equals the alternating-exponential
    brackets of the bound formulas divided by their Vandermonde factor, but
    is evaluated here without any cancellation (power-sum recurrence,
    k * h_k = sum_j p_j h_{k-j}, keeps every term non-negative).
    """
    return _exp_h_tail_cached(tuple(float(v) for v in values), start)


@lru_cache(maxsize=16384)
def _exp_h_tail_cached(values: tuple, start: int) -> float:
    if start < 0:
        raise ValueError("start must be >= 0")
    values = list(values)
    for v in values:
        if v < 0:
            raise ValueError("values must be >= 0")
    h = [1.0]
    p = [0.0]
    fact = float(math.factorial(start))
    total = 1.0 / fact
    for k in range(1, _MAX_TERMS):
        p.append(sum(v ** k for v in values))
        h.append(sum(p[j] * h[k - j] for j in range(1, k + 1)) / k)
        fact *= (start + k)
        term = h[k] / fact
        total += term
        if k > 3 and term < total * _REL_TOL:
            return total
    raise ArithmeticError("exp_h_tail failed to converge")  # pragma: no cover


def f_weight(values3, n: int) -> float:
    """Sign-definite weight of order n extracted from a three-intensity set.

    Explicit positive double sum; equals the Schur polynomial of shape
    (n-2, 1) in the three values.  Defined for n >= 3.
    """
    a, b, c = values3  # strongest, middle, weakest
    if n < 3:
        raise ValueError("f_weight is defined for n >= 3")
    total = 0.0
    for k in range(0, n - 2):
        inner = 0.0
        for j in range(0, n - 2 - k):
            inner += b ** (n - 2 - k - j) * a ** j
        total += c ** k * ((c + a) * inner + c * a ** (n - 2 - k))
    return total


def exp_f_tail(values3, start: int) -> float:
    """Sum over n >= start of f_weight(values3, n) / n!  (start >= 3)."""
    return _exp_f_tail_cached(tuple(float(v) for v in values3), start)


@lru_cache(maxsize=16384)
def _exp_f_tail_cached(values3: tuple, start: int) -> float:
    if start < 3:
        raise ValueError("start must be >= 3")
    total = 0.0
    for n in range(start, start + _MAX_TERMS):
        term = f_weight(values3, n) / math.factorial(n)
        total += term
        if n > start + 2 and term < total * _REL_TOL:
            return total
    raise ArithmeticError("exp_f_tail failed to converge")  # pragma: no cover


def d_n(values4, n: int) -> float:
    """Non-negative quartic-set weight D_n, defined recursively from D_4 = e_3."""
    if n < 4:
        raise ValueError("d_n is defined for n >= 4")
    vals = list(values4)
    if len(vals) != 4:
        raise ValueError("d_n expects exactly four values")
    es = elem_sym(vals)
    e3, e4 = es[3], es[4]
    d = {4: e3}
    power_sums = [None, sum(vals)]
    for j in range(2, n - 4 + 1):
        power_sums.append(sum(v ** j for v in vals))
    for i in range(5, n + 1):
        acc = 0.0
        for j in range(1, i - 4 + 1):
            acc += power_sums[j] * d[i - j]
        acc -= e4 * hom_sym_sum(vals, i - 5)
        d[i] = acc / (i - 4)
    return d[n]
