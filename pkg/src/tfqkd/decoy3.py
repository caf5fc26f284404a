"""Analytical yield upper bounds for three independent decoy intensities.

Each bound combines the nine rescaled gains with coefficients chosen so that
whole families of photon-number terms cancel; what survives is the target
yield plus a remainder of known sign, which is dropped (set to 0) or
saturated (set to 1) to obtain a certified upper bound.  Bounds exist for
the yield indices (0,0), (1,1), (2,2), (0,2), (2,0), (0,4), (4,0), (1,3)
and (3,1); every other yield is trivially bounded by 1.

The combinations cancel ten-plus digits for typical decoy intensities, so
every formula can also run in exact rational arithmetic (``exact=True``):
the inputs are binary doubles, hence exact rationals, and the only rounded
ingredients are the factorially damped series tails, which are themselves
computed from all-positive terms to full relative accuracy.  The float path
is faster and plenty for rate optimization; the exact path is what the
oracle comparisons at 1e-9 tolerances need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .channel import GainMatrix
from .errors import DegenerateIntensityError, InconsistentGainsError
from .series import exp_f_tail, exp_h_tail

TARGETS_3 = ((0, 0), (1, 1), (2, 2), (0, 2), (2, 0), (0, 4), (4, 0), (1, 3), (3, 1))

_NEGATIVE_SLACK = -1e-9
_MIN_REL_GAP = 1e-6


@dataclass
class YieldBounds:
    """Sparse map (n, m) -> certified upper bound; unlisted indices mean 1.

    ``provenance`` records which formula produced each stored entry, and
    ``warnings`` collects notes such as skipped ill-conditioned formulas.
    """

    bounds: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def get(self, n: int, m: int) -> float:
        return self.bounds.get((n, m), 1.0)

    def items(self):
        return self.bounds.items()


def check_intensities(values, label: str) -> None:
    """Reject zero or nearly coincident intensities within one party's set.

    The coefficient formulas divide both by pairwise differences and by the
    weak intensities themselves, so everything must be positive and pairwise
    separated by at least ``_MIN_REL_GAP`` relative.
    """
    vals = list(values)
    for v in vals:
        if v <= 0.0:
            raise DegenerateIntensityError(
                f"{label} intensities must be strictly positive for the bounds, got {v}")
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            gap = abs(vals[i] - vals[j]) / max(vals[i], vals[j])
            if gap < _MIN_REL_GAP:
                raise DegenerateIntensityError(
                    f"{label} intensities {vals[i]} and {vals[j]} are (nearly) equal")


def _kill_01(x):
    """Row vector orthogonal to (1,1,1) and (x0,x1,x2), normalized to lead 1."""
    x0, x1, x2 = x
    d = x1 - x2
    return (_one(x0), (x2 - x0) / d, (x0 - x1) / d)


def _kill_02(x):
    """Row vector orthogonal to (1,1,1) and the squared intensities."""
    x0, x1, x2 = x
    d = x1 * x1 - x2 * x2
    return (_one(x0), (x2 * x2 - x0 * x0) / d, (x0 * x0 - x1 * x1) / d)


def _kill_12(x):
    """Row vector orthogonal to the intensities and their squares."""
    x0, x1, x2 = x
    d = x1 - x2
    return (_one(x0), x0 * (x2 - x0) / (x1 * d), x0 * (x0 - x1) / (x2 * d))


def _one(sample):
    return Fraction(1) if isinstance(sample, Fraction) else 1.0


_VECTOR_FOR_TARGET = {
    # target -> (alice vector, bob vector); the vector names say which
    # photon-number moments each side removes.
    (0, 0): (_kill_12, _kill_12),
    (1, 1): (_kill_02, _kill_02),
    (2, 2): (_kill_01, _kill_01),
    (0, 2): (_kill_12, _kill_01),
    (2, 0): (_kill_01, _kill_12),
    (1, 3): (_kill_02, _kill_01),
    (3, 1): (_kill_01, _kill_02),
}


def cancellation_coeffs(target, mu, nu):
    """3x3 coefficient matrix c[i][j] for the gain combination of ``target``.

    The matrix is the outer product of one moment-killing vector per party;
    c[0][0] is 1 by normalization.  Fraction inputs give exact output.
    """
    target = tuple(target)
    if target not in _VECTOR_FOR_TARGET:
        raise ValueError(f"no three-decoy coefficient family for target {target}")
    mu = tuple(mu)
    nu = tuple(nu)
    if len(mu) != 3 or len(nu) != 3:
        raise ValueError("cancellation_coeffs expects three intensities per party")
    if isinstance(mu[0], Fraction) or isinstance(nu[0], Fraction):
        # Fractions hash equal to the floats they were built from, so the
        # exact path must bypass the float cache.
        return _coeffs_uncached(target, mu, nu)
    return _coeffs_cached(target, mu, nu)


def _coeffs_uncached(target, mu, nu):
    check_intensities(mu, "mu")
    check_intensities(nu, "nu")
    fa, fb = _VECTOR_FOR_TARGET[target]
    a = fa(mu)
    b = fb(nu)
    return tuple(tuple(ai * bj for bj in b) for ai in a)


@lru_cache(maxsize=8192)
def _coeffs_cached(target, mu, nu):
    return _coeffs_uncached(target, mu, nu)


@lru_cache(maxsize=256)
def _rescaled(gains: GainMatrix, mu: tuple, nu: tuple):
    """Gains multiplied by exp(mu_k + nu_l); cached per (matrix, intensities)."""
    return tuple(
        tuple(math.exp(mu_k + nu_l) * q for nu_l, q in zip(nu, row))
        for mu_k, row in zip(mu, gains.q)
    )


@lru_cache(maxsize=256)
def _rescaled_exact(gains: GainMatrix, mu: tuple, nu: tuple):
    """Exact-rational proxy of the rescaled gains (doubles taken verbatim)."""
    return tuple(
        tuple(Fraction(math.exp(mu_k + nu_l)) * Fraction(q)
              for nu_l, q in zip(nu, row))
        for mu_k, row in zip(mu, gains.q)
    )


# Per-term rounding allowance for the float path: the gain combinations are
# summed exactly (fsum), so what remains is the formation of each
# coefficient-times-gain product plus the coefficients' own rounding.
_EPS_COMBINE = 8.0 * 2.0 ** -53


def _combine(coeffs, qtilde, rows, cols, exact):
    """Gain combination and a bound on its floating-point error.

    Returns (value, error); the error is zero on the exact path.  The error
    estimate is what lets callers report certified-despite-rounding upper
    bounds: it is added on top of the raw value, which only loosens the
    bound, and it grows exactly where the combination cancels so deeply that
    double precision cannot resolve it.
    """
    terms = [coeffs[a][b] * qtilde[i][j]
             for a, i in enumerate(rows) for b, j in enumerate(cols)]
    if exact:
        return sum(terms), 0
    return math.fsum(terms), _EPS_COMBINE * math.fsum(abs(t) for t in terms)


def _clamp(raw, target, formula: str) -> float:
    raw = float(raw)
    if raw < _NEGATIVE_SLACK:
        raise InconsistentGainsError(
            f"{formula} bound for yield {target} is {raw}; the gains are not "
            f"producible by any yield profile")
    return min(max(raw, 0.0), 1.0)


def _lift(value, exact):
    return Fraction(value) if exact else value


def _raw_bound(target, qtilde, mu, nu, rows, cols, exact=False):
    """Unclamped bound for one target on a 3x3 block of rescaled gains.

    Returns (raw, error): the formula value plus a bound on its own
    floating-point error (zero on the exact path).  ``rows``/``cols`` select
    the gain-matrix indices corresponding to the (already ordered) intensity
    triples ``mu``/``nu``.  With ``exact`` the intensities, coefficients and
    gains are Fractions and the arithmetic is exact up to the series tails.
    """
    if exact and not isinstance(mu[0], Fraction):
        mu = tuple(Fraction(v) for v in mu)
        nu = tuple(Fraction(v) for v in nu)
    if target[0] == target[1] and nu > mu:
        # canonical orientation, so exchanging the parties is a bitwise
        # no-op for the party-symmetric targets too
        size = len(qtilde)
        qt_t = tuple(tuple(qtilde[i][j] for i in range(size)) for j in range(size))
        return _raw_bound(target, qt_t, nu, mu, cols, rows, exact)
    mu0, mu1, mu2 = mu
    nu0, nu1, nu2 = nu
    denom = (mu0 - mu1) * (mu0 - mu2) * (nu0 - nu1) * (nu0 - nu2)

    if target == (1, 1):
        g, gerr = _combine(cancellation_coeffs((1, 1), mu, nu), qtilde, rows, cols, exact)
        y13 = _clamp_pair(_raw_bound((1, 3), qtilde, mu, nu, rows, cols, exact),
                          (1, 3), "3-decoy")
        y31 = _clamp_pair(_raw_bound((3, 1), qtilde, mu, nu, rows, cols, exact),
                          (3, 1), "3-decoy")
        e2_nu = nu0 * nu1 + nu0 * nu2 + nu1 * nu2
        e2_mu = mu0 * mu1 + mu0 * mu2 + mu1 * mu2
        pref = (mu1 + mu2) * (nu1 + nu2) / denom
        raw = (g * pref + _lift(y13, exact) * e2_nu / 6 + _lift(y31, exact) * e2_mu / 6
               + _lift(exp_f_tail(nu, 4), exact) + _lift(exp_f_tail(mu, 4), exact))
        return raw, gerr * abs(pref)

    if target == (0, 0):
        g, gerr = _combine(cancellation_coeffs((0, 0), mu, nu), qtilde, rows, cols, exact)
        pref = mu1 * mu2 * nu1 * nu2 / denom
        return g * pref, gerr * abs(pref)
    if target == (2, 2):
        g, gerr = _combine(cancellation_coeffs((2, 2), mu, nu), qtilde, rows, cols, exact)
        return 4 * g / denom, 4 * gerr / abs(denom)
    if target in ((0, 2), (0, 4)):
        g, gerr = _combine(cancellation_coeffs((0, 2), mu, nu), qtilde, rows, cols, exact)
        if target == (0, 2):
            pref = 2 * mu1 * mu2 / denom
        else:
            h2_nu = (nu0 * nu0 + nu1 * nu1 + nu2 * nu2
                     + nu0 * nu1 + nu0 * nu2 + nu1 * nu2)
            pref = 24 * mu1 * mu2 / (denom * h2_nu)
        return g * pref, gerr * abs(pref)
    if target == (1, 3):
        g, gerr = _combine(cancellation_coeffs((1, 3), mu, nu), qtilde, rows, cols, exact)
        e1_nu = nu0 + nu1 + nu2
        tail = _lift(exp_h_tail(nu, 2), exact) * _lift(exp_f_tail(mu, 3), exact)
        pref = -6 * (mu1 + mu2) / (denom * e1_nu)
        return g * pref + 6 * tail / e1_nu, gerr * abs(pref)

    # Party-swapped targets: evaluate the mirror bound on the transposed block.
    swap = {(2, 0): (0, 2), (4, 0): (0, 4), (3, 1): (1, 3)}
    if target in swap:
        size = len(qtilde)
        qt_t = tuple(tuple(qtilde[i][j] for i in range(size)) for j in range(size))
        return _raw_bound(swap[target], qt_t, nu, mu, cols, rows, exact)
    raise ValueError(f"no three-decoy bound for target {target}")


def _clamp_pair(raw_err, target, formula: str) -> float:
    """Clamp a (raw, error) pair, crediting the rounding error upward."""
    raw, err = raw_err
    return _clamp(float(raw) + float(err), target, formula)


def bound_y3(target, gains: GainMatrix, mu, nu, exact: bool = False) -> float:
    """Certified upper bound on one yield from a 3x3 gain matrix.

    The float path adds its own rounding-error estimate before clamping, so
    the result stays a valid upper bound even where the combination cancels
    beyond double precision.  Values above 1 are clamped; values below
    -1e-9 (after the error credit) raise ``InconsistentGainsError``.
    """
    target = tuple(target)
    mu = tuple(mu)
    nu = tuple(nu)
    if gains.size != 3 or len(mu) != 3 or len(nu) != 3:
        raise ValueError("bound_y3 expects three decoys per party")
    check_intensities(mu, "mu")
    check_intensities(nu, "nu")
    qtilde = _rescaled_exact(gains, mu, nu) if exact else _rescaled(gains, mu, nu)
    return _clamp_pair(_raw_bound(target, qtilde, mu, nu, (0, 1, 2), (0, 1, 2), exact),
                       target, "3-decoy")


def yield_bounds_3(gains: GainMatrix, mu, nu, exact: bool = False) -> YieldBounds:
    """All nine three-decoy bounds for one gain matrix."""
    out = YieldBounds()
    for target in TARGETS_3:
        out.bounds[target] = bound_y3(target, gains, mu, nu, exact)
        out.provenance[target] = "3-decoy analytical"
    return out
