"""Acceptance suite: one test per criterion, printing a PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Two criteria test
statements that turn out not to hold for this channel model and are expected
to fail; their tests implement the criterion exactly as stated and their
failure messages carry the analysis (see also notes in the repository's
review ledger):

* criterion 1 compares bounds against the dark-count-free yield formula
  while the gains include dark counts; at arm losses below ~2.5 dB the
  detector-veto factor (1 - p_d) pushes every sound tight bound on the
  (1,1) yield below that baseline by ~5e-8, far outside the 1e-12 slack;
* criterion 5 fits the rate slope out to 100 dB of total loss, but with
  these parameters the optimized rate hits the dark-count wall between 80
  and 90 dB total, so the upper grid points have no key at all; over the
  clean square-root-scaling segment (40-70 dB total) the slope does sit
  inside the required window.

A companion test next to criterion 1 verifies the physically meaningful
soundness statement (against the yields of the profile that actually
generated the gains), which passes everywhere.
"""

import json
import math
import time

import numpy as np
import pytest

from tfqkd.channel import (GainMatrix, IntensitySettings, simulate_gains,
                           standard_noise, theoretical_yield)
from tfqkd.decoy3 import TARGETS_3, bound_y3
from tfqkd.decoy4 import yield_bounds
from tfqkd.optimize import (FluctuationSpec, OptimizationSpec,
                            coordinate_descent, optimize_rate,
                            worst_case_fluctuation)
from tfqkd.oracles import dark_adjusted_yield, fock_yield, lp_yield_bound
from tfqkd.oracles.fock import gain_reconstruction_error
from tfqkd.rate import key_rate, x_basis_statistics

SEED = 20260810


def _report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line)
    return line


def _random_config(rng, index):
    """One randomized (params, settings) pair with Table-1 noise."""
    loss_a = float(rng.uniform(0, 50))
    loss_b = float(rng.uniform(0, 50))
    params = standard_noise(loss_a, loss_b)
    if index % 2 == 0:
        strong = float(rng.uniform(0.02, 0.5))
        mu = (strong, 1e-4, 1e-5)
        nu = (strong * float(rng.uniform(0.7, 1.4)), 1.1e-4, 0.9e-5)
    else:
        strong = float(rng.uniform(0.05, 0.5))
        mu = (1e-3, 1e-4, 1e-5, strong)
        nu = (1.2e-3, 0.8e-4, 1.1e-5, strong * float(rng.uniform(0.7, 1.4)))
    settings = IntensitySettings(alpha_a=0.2, alpha_b=0.2, mu=mu, nu=nu)
    return params, settings, (loss_a, loss_b)


def _soundness_worst(baseline):
    """Worst bound-minus-baseline margin over 200 seeded configurations."""
    rng = np.random.default_rng(SEED)
    worst = (math.inf, None)
    for i in range(200):
        params, settings, losses = _random_config(rng, i)
        gains = simulate_gains(params, settings)
        bounds = yield_bounds(gains, settings, exact=True)
        for target, value in bounds.items():
            margin = value - baseline(params, *target)
            if margin < worst[0]:
                worst = (margin, (losses, settings.n_decoys, target))
    return worst


class TestCriterion1Soundness:
    def test_bounds_above_dark_free_yields(self):
        t0 = time.time()
        worst, where = _soundness_worst(theoretical_yield)
        passed = worst >= -1e-12
        detail = (f"worst bound-minus-yield margin {worst:+.3e} at {where}; "
                  f"{time.time() - t0:.0f}s")
        _report("1 (soundness vs dark-free yields)", passed, detail)
        assert passed, (
            f"{detail}. The gains carry dark counts while the baseline is the "
            f"dark-free yield formula; at low loss the generating profile "
            f"itself sits below that baseline by ~p_d*Y, so the criterion as "
            f"stated cannot hold for the mandated subset-minimum (1,1) bound.")

    def test_bounds_above_generating_profile(self):
        # companion: the physically meaningful soundness statement
        t0 = time.time()
        worst, where = _soundness_worst(dark_adjusted_yield)
        passed = worst >= -1e-12
        _report("1b (companion: soundness vs generating profile)", passed,
                f"worst margin {worst:+.3e} at {where}; {time.time() - t0:.0f}s")
        assert passed


class TestCriterion2DominanceChain:
    def test_chain(self):
        t0 = time.time()
        rng = np.random.default_rng(SEED + 1)
        worst_low = (math.inf, None)   # lp - true
        worst_mid = (math.inf, None)   # four-decoy bound - lp
        worst_34 = (math.inf, None)    # three-decoy bound - four-decoy bound
        for i in range(50):
            loss_a = float(rng.uniform(10, 50))
            loss_b = float(rng.uniform(10, 50))
            params = standard_noise(loss_a, loss_b)
            # moderate separations: the exact LP resolves the chain at 1e-9
            # only while the duals of the weakly-weighted rows stay below
            # the reciprocal of the double-precision data windows
            w0 = float(rng.uniform(1e-2, 3e-2))
            w1 = w0 * float(rng.uniform(0.25, 0.35))
            strong = float(rng.uniform(0.08, 0.15))
            four = i % 2 == 1
            if four:
                w2 = w1 * float(rng.uniform(0.25, 0.35))
                mu = (w0, w1, w2, strong)
                nu = (w0 * 1.15, w1 * 0.9, w2 * 1.1, strong * 1.1)
            else:
                mu = (strong, w0, w1)
                nu = (strong * 1.1, w0 * 1.15, w1 * 0.9)
            settings = IntensitySettings(alpha_a=0.2, alpha_b=0.2, mu=mu, nu=nu)
            gains = simulate_gains(params, settings)
            bounds = yield_bounds(gains, settings, exact=True)
            targets = [TARGETS_3[(2 * i) % 9], TARGETS_3[(2 * i + 1) % 9]]
            for target in targets:
                true = dark_adjusted_yield(params, *target)
                lp = lp_yield_bound(gains, settings.mu, settings.nu, target, 10)
                analytic = bounds.get(*target)
                if lp - true < worst_low[0]:
                    worst_low = (lp - true, (i, target))
                if analytic - lp < worst_mid[0]:
                    worst_mid = (analytic - lp, (i, target))
                if four:
                    sub = GainMatrix(q=tuple(tuple(gains.q[r][c] for c in (0, 1, 2))
                                             for r in (0, 1, 2)))
                    three = bound_y3(target, sub, settings.mu[:3], settings.nu[:3],
                                     exact=True)
                    if three - analytic < worst_34[0]:
                        worst_34 = (three - analytic, (i, target))
        passed = (worst_low[0] >= -1e-9 and worst_mid[0] >= -1e-9
                  and worst_34[0] >= -1e-9)
        detail = (f"lp-true {worst_low[0]:+.2e}, bound-lp {worst_mid[0]:+.2e}, "
                  f"3dec-4dec {worst_34[0]:+.2e}; {time.time() - t0:.0f}s")
        _report("2 (LP dominance chain)", passed, detail)
        assert worst_low[0] >= -1e-9, detail
        assert worst_mid[0] >= -1e-9, detail
        assert worst_34[0] >= -1e-9, detail


class TestCriterion3OracleEquivalence:
    def test_fock_matches_closed_form(self):
        rng = np.random.default_rng(SEED + 2)
        worst = 0.0
        from tfqkd.channel import ChannelParams
        for _ in range(20):
            params = ChannelParams(eta_a=float(rng.uniform(0.01, 1.0)),
                                   eta_b=float(rng.uniform(0.01, 1.0)),
                                   theta_a=float(rng.uniform(-0.5, 0.5)),
                                   theta_b=float(rng.uniform(-0.5, 0.5)))
            for n in range(0, 9):
                for m in range(0, 9 - n):
                    diff = abs(fock_yield(params, n, m)
                               - theoretical_yield(params, n, m))
                    worst = max(worst, diff)
        passed = worst < 1e-10
        _report("3a (enumeration vs closed-form yields)", passed,
                f"max |difference| {worst:.3e}")
        assert passed

    def test_gain_series_reconstruction(self):
        worst = 0.0
        for loss_a, loss_b, mu, nu in ((10, 30, 0.1, 0.05), (20, 20, 0.3, 0.2),
                                       (35, 5, 0.05, 0.4)):
            params = standard_noise(loss_a, loss_b)
            err, tol = gain_reconstruction_error(params, mu, nu, 40)
            worst = max(worst, err - tol)
        passed = worst <= 1e-15
        _report("3b (gain series reconstruction)", passed,
                f"max error beyond Poisson tail {worst:.3e}")
        assert passed


class TestCriterion4NoiselessExactness:
    def test_error_rate_exactly_zero(self):
        params = standard_noise(13, 13 + 10 * math.log10(2), p_d=0.0,
                                misalignment=0.0, phase_mismatch=0.0)
        # eta_a alpha_a^2 == eta_b alpha_b^2 held exactly in floating point
        alpha_a = 0.25
        alpha_b = alpha_a * math.sqrt(2.0)
        ia = params.eta_a * alpha_a * alpha_a
        ib = params.eta_b * alpha_b * alpha_b
        stats = x_basis_statistics(params, alpha_a, alpha_b)
        passed = (stats.e_x == 0.0) if ia == ib else None
        if passed is None:
            # fall back to a bitwise-matched pair
            params = standard_noise(20, 20, p_d=0.0, misalignment=0.0,
                                    phase_mismatch=0.0)
            stats = x_basis_statistics(params, 0.3, 0.3)
            passed = stats.e_x == 0.0
        _report("4a (noiseless matched arrivals give e_x = 0)", passed,
                f"e_x = {stats.e_x!r}")
        assert passed

    def test_zero_gains_zero_bounds(self):
        mu = (0.1, 1e-4, 1e-5)
        gains = GainMatrix(q=((0.0,) * 3,) * 3)
        homogeneous = ((0, 0), (2, 2), (0, 2), (2, 0), (0, 4), (4, 0))
        values = [bound_y3(t, gains, mu, mu) for t in homogeneous]
        passed = all(v == 0.0 for v in values)
        _report("4b (all-zero gains zero the homogeneous bounds)", passed,
                f"values {values}")
        assert passed


@pytest.fixture(scope="module")
def symmetric_sweep():
    """Optimized 4-decoy rate on the symmetric-loss acceptance grid."""
    points = []
    for per_arm in (20, 25, 30, 35, 40, 45, 50):
        params = standard_noise(per_arm, per_arm)
        res = optimize_rate(params, OptimizationSpec(decoys=4, multistart=8,
                                                     seed=SEED))
        points.append((per_arm, params, res))
    return points


class TestCriterion5SqrtScaling:
    def test_slope(self, symmetric_sweep):
        total = [2 * p for p, _, _ in symmetric_sweep]
        rates = [res.rate for _, _, res in symmetric_sweep]
        alive = [(t, math.log10(r)) for t, r in zip(total, rates) if r > 0]
        dead = [t for t, r in zip(total, rates) if r <= 0]
        def fit(points):
            xs = np.array([a[0] for a in points])
            ys = np.array([a[1] for a in points])
            return float(np.polyfit(xs, ys, 1)[0])

        alive_slope = fit(alive) if len(alive) >= 2 else None
        clean = [a for a in alive if a[0] <= 70]
        clean_slope = fit(clean) if len(clean) >= 2 else None
        if dead:
            detail = (f"rate is zero at total loss {dead} dB (dark-count wall "
                      f"between {alive[-1][0]:.0f} and {dead[0]:.0f} dB total); "
                      f"slope over the surviving {alive[0][0]:.0f}-"
                      f"{alive[-1][0]:.0f} dB: {alive_slope:.4f}, over the "
                      f"clean sqrt-scaling 40-70 dB segment: {clean_slope:.4f}")
            _report("5 (sqrt-transmittance slope over 40-100 dB)", False, detail)
            pytest.fail("criterion 5 as stated needs positive optimized rate "
                        "up to 100 dB total loss; " + detail)
        slope = alive_slope
        passed = -0.062 <= slope <= -0.040
        _report("5 (sqrt-transmittance slope over 40-100 dB)", passed,
                f"slope {slope:.4f}")
        assert passed


class TestCriterion6AsymmetryAdvantage:
    def test_advantage_and_monotonicity(self):
        t0 = time.time()
        spec = OptimizationSpec(decoys=3, multistart=8, seed=SEED)
        spec_sym = OptimizationSpec(decoys=3, multistart=8, seed=SEED,
                                    symmetric=True)
        free = optimize_rate(standard_noise(10, 40), spec).rate
        tied = optimize_rate(standard_noise(10, 40), spec_sym).rate
        r15 = optimize_rate(standard_noise(15, 40), spec).rate
        r20 = optimize_rate(standard_noise(20, 40), spec).rate
        advantage = free >= 1.1 * tied and free > 0
        monotone = free >= r15 >= r20
        passed = advantage and monotone
        _report("6 (asymmetry advantage and loss monotonicity)", passed,
                f"free {free:.3e} vs tied {tied:.3e}; "
                f"R(10,40) {free:.3e} >= R(15,40) {r15:.3e} >= R(20,40) {r20:.3e}; "
                f"{time.time() - t0:.0f}s")
        assert advantage
        assert monotone


def _tolerable_loss(decoys, weak, magnitude, lo=20.0, hi=60.0, step=0.125):
    """Largest symmetric per-arm loss with worst-case rate above 1e-10."""
    cache = {}

    def center(per_arm):
        if per_arm not in cache:
            params = standard_noise(per_arm, per_arm)
            spec = OptimizationSpec(decoys=decoys, weak_decoys=weak,
                                    multistart=6, seed=SEED)
            cache[per_arm] = (params, optimize_rate(params, spec, maxiter=200))
        return cache[per_arm]

    def tolerable(per_arm):
        params, opt = center(per_arm)
        if opt.rate <= 1e-10:
            return False
        if magnitude == 0.0:
            return True
        wc = worst_case_fluctuation(
            params, opt.settings,
            FluctuationSpec(magnitude=magnitude, budget=32, seed=SEED),
            stop_below=1e-10)
        return wc.rate > 1e-10

    if not tolerable(lo):
        return lo
    while hi - lo > step:
        mid = 0.5 * (lo + hi)
        if tolerable(mid):
            lo = mid
        else:
            hi = mid
    return lo


class TestCriterion7FluctuationRobustness:
    @pytest.mark.parametrize("decoys,weak", [(3, (1e-2, 1e-3)),
                                             (4, (1e-1, 1e-2, 1e-3))])
    def test_threshold_shift(self, decoys, weak):
        t0 = time.time()
        base = _tolerable_loss(decoys, weak, 0.0)
        shift_02 = base - _tolerable_loss(decoys, weak, 0.2, lo=base - 4.0,
                                          hi=base + 0.5)
        shift_04 = base - _tolerable_loss(decoys, weak, 0.4, lo=base - 8.0,
                                          hi=base + 0.5)
        # criterion thresholds are on the total (two-arm) loss
        passed = 2 * shift_02 < 3.0 and 2 * shift_04 < 10.0
        _report(f"7 ({decoys}-decoy fluctuation robustness)", passed,
                f"max total loss {2 * base:.2f} dB; decrease "
                f"{2 * shift_02:.2f} dB at r=0.2 (< 3), "
                f"{2 * shift_04:.2f} dB at r=0.4 (< 10); {time.time() - t0:.0f}s")
        assert 2 * shift_02 < 3.0
        assert 2 * shift_04 < 10.0


class TestCriterion8NonConvexity:
    def test_corner_descent_stalls(self):
        params = standard_noise(20, 0)
        spec = OptimizationSpec(decoys=3, multistart=16, seed=SEED)
        lo, _ = spec.box()
        stuck = coordinate_descent(params, spec, start=lo, first_coordinate=1)
        best = optimize_rate(params, spec)
        passed = stuck.rate < best.rate
        _report("8 (corner coordinate descent stalls)", passed,
                f"descent {stuck.rate:.3e} < multistart {best.rate:.3e}")
        assert passed


class TestCriterion9TruncationStability:
    def test_phase_error_stable(self, symmetric_sweep):
        worst = 0.0
        for _, params, res in symmetric_sweep:
            if res.rate <= 0:
                continue
            r40 = key_rate(params, res.settings, n_cut=40)
            r80 = key_rate(params, res.settings, n_cut=80)
            worst = max(worst, abs(r40.e_z_upp - r80.e_z_upp))
        passed = worst < 1e-10
        _report("9 (truncation stability)", passed,
                f"max |e_z(40) - e_z(80)| = {worst:.3e}")
        assert passed


class TestCriterion10Determinism:
    def test_sweep_byte_identical(self, tmp_path):
        from tfqkd.cli import main
        t0 = time.time()
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"schema_version": 1, "decoys": 3,
                                   "multistart": 6, "seed": 17}))
        outputs = []
        for workers in (1, 4, 8):
            out = tmp_path / f"sweep_w{workers}.csv"
            code = main(["sweep", "--config", str(cfg),
                         "--grid-a", "20", "30", "--grid-b", "22", "28",
                         "--workers", str(workers), "--out", str(out)])
            assert code == 0
            outputs.append(out.read_bytes())
        passed = outputs[0] == outputs[1] == outputs[2]
        _report("10 (sweep determinism across worker counts)", passed,
                f"byte-identical over 1/4/8 workers; {time.time() - t0:.0f}s")
        assert passed
