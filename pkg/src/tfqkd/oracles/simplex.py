"""Dense bounded-variable simplex in exact rational arithmetic.

Solves  max c.x  subject to  lower_i <= (A x)_i <= upper_i  and
x_lo <= x <= x_hi,  with every quantity converted exactly from its binary
double to a Fraction.  The decoy-state verification LPs mix constraint
coefficients spanning thirty orders of magnitude with window widths near
1e-16; any floating-point solver's feasibility tolerance leaks through the
huge dual values of the weakly-weighted rows and corrupts the optimum by
many orders more than the certificate is supposed to resolve.  Exact
pivoting with Bland's entering rule has no tolerances at all, cannot cycle,
and the problem sizes here (about a hundred variables, a few dozen rows)
keep it fast enough.
"""

from __future__ import annotations

from fractions import Fraction

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2

_MAX_ITER = 50000
_ZERO = Fraction(0)


class LinearProgramInfeasible(Exception):
    """No point satisfies all row and box constraints."""


def _to_fraction_matrix(a):
    return [[Fraction(v) for v in row] for row in a]


def solve_bounded_lp(c, a, row_lower, row_upper, x_lower, x_upper):
    """Maximize c.x with ranged rows and per-variable boxes, exactly.

    Returns (optimum, x) as floats; raises ``LinearProgramInfeasible`` when
    the constraints admit no point.  All inputs may be floats (converted
    exactly) or Fractions.
    """
    m = len(a)
    n = len(a[0]) if m else len(c)
    A = _to_fraction_matrix(a)
    cvec = [Fraction(v) for v in c]
    rlo = [Fraction(v) for v in row_lower]
    rup = [Fraction(v) for v in row_upper]
    xlo = [Fraction(v) for v in x_lower]
    xup = [Fraction(v) for v in x_upper]
    for lo_i, up_i in zip(rlo, rup):
        if lo_i > up_i:
            raise LinearProgramInfeasible("empty row window")
    for lo_i, up_i in zip(xlo, xup):
        if lo_i > up_i:
            raise LinearProgramInfeasible("empty variable box")

    # columns: n structurals, m ranged slacks, m artificials
    ncols = n + 2 * m
    lo = xlo + [_ZERO] * m + [_ZERO] * m
    hi = xup + [up_i - lo_i for lo_i, up_i in zip(rlo, rup)] + [None] * m

    tab = []
    beta = []
    status = [_AT_LOWER] * n + [_AT_UPPER] * m + [_BASIC] * m
    basis = []
    for i in range(m):
        # residual once x sits at its lower bounds and the slack at its upper
        resid = rup[i] - sum(A[i][j] * xlo[j] for j in range(n)) - (rup[i] - rlo[i])
        sign = 1 if resid >= 0 else -1
        row = [sign * A[i][j] for j in range(n)]
        row += [Fraction(sign) if k == i else _ZERO for k in range(m)]
        row += [Fraction(1) if k == i else _ZERO for k in range(m)]
        tab.append(row)
        beta.append(abs(resid))
        basis.append(n + m + i)

    def run_phase(cobj, n_allowed):
        for _ in range(_MAX_ITER):
            entering = -1
            for j in range(n_allowed):
                if status[j] == _BASIC:
                    continue
                r = cobj[j]
                for i in range(m):
                    cb = cobj[basis[i]]
                    if cb:
                        r -= cb * tab[i][j]
                if (status[j] == _AT_LOWER and r > 0) or (status[j] == _AT_UPPER and r < 0):
                    entering = j
                    direction = 1 if status[j] == _AT_LOWER else -1
                    break
            if entering < 0:
                return
            # ratio test: smallest step that drives a basic variable to a
            # bound, capped by the entering variable's own bound flip
            step = None if hi[entering] is None else hi[entering] - lo[entering]
            leaving = -1
            hit_lower = True
            for i in range(m):
                g = direction * tab[i][entering]
                if g > 0:
                    limit = (beta[i] - lo[basis[i]]) / g
                    hits_low = True
                elif g < 0:
                    if hi[basis[i]] is None:
                        continue
                    limit = (hi[basis[i]] - beta[i]) / (-g)
                    hits_low = False
                else:
                    continue
                if limit < 0:
                    limit = _ZERO
                if step is None or limit < step or (limit == step and leaving >= 0
                                                    and basis[i] < basis[leaving]):
                    step = limit
                    leaving = i
                    hit_lower = hits_low
            if step is None:
                raise ArithmeticError("unbounded linear program")
            if step:
                col = [tab[i][entering] for i in range(m)]
                for i in range(m):
                    if col[i]:
                        beta[i] -= direction * step * col[i]
            if leaving < 0:
                status[entering] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue
            new_value = (lo[entering] if direction > 0 else hi[entering]) + direction * step
            out = basis[leaving]
            status[out] = _AT_LOWER if hit_lower else _AT_UPPER
            piv = tab[leaving][entering]
            prow = tab[leaving]
            inv = 1 / piv
            tab[leaving] = [v * inv for v in prow]
            prow = tab[leaving]
            for i in range(m):
                if i == leaving:
                    continue
                f = tab[i][entering]
                if f:
                    row = tab[i]
                    tab[i] = [rv - f * pv for rv, pv in zip(row, prow)]
            basis[leaving] = entering
            status[entering] = _BASIC
            beta[leaving] = new_value
        raise ArithmeticError("simplex iteration limit exceeded")

    phase1 = [_ZERO] * (n + m) + [Fraction(-1)] * m
    run_phase(phase1, ncols)
    infeasibility = sum((beta[i] for i in range(m) if basis[i] >= n + m), _ZERO)
    if infeasibility > 0:
        raise LinearProgramInfeasible(f"phase-1 residual {float(infeasibility):.3e}")

    # drive leftover zero-level artificials out of the basis where possible
    for i in range(m):
        if basis[i] < n + m:
            continue
        for j in range(n + m):
            if status[j] != _BASIC and tab[i][j]:
                out = basis[i]
                status[out] = _AT_LOWER
                piv = tab[i][j]
                inv = 1 / piv
                tab[i] = [v * inv for v in tab[i]]
                prow = tab[i]
                for r in range(m):
                    if r != i and tab[r][j]:
                        f = tab[r][j]
                        tab[r] = [rv - f * pv for rv, pv in zip(tab[r], prow)]
                beta[i] = lo[j] if status[j] == _AT_LOWER else hi[j]
                basis[i] = j
                status[j] = _BASIC
                break
        else:
            hi[basis[i]] = _ZERO  # redundant row; pin its artificial at zero

    phase2 = cvec + [_ZERO] * (2 * m)
    run_phase(phase2, n + m)

    x = [xup[j] if status[j] == _AT_UPPER else xlo[j] for j in range(n)]
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = beta[i]
    optimum = sum((cvec[j] * x[j] for j in range(n)), _ZERO)
    return float(optimum), [float(v) for v in x]
