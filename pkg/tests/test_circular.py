import math

import numpy as np
import pytest
from scipy.stats import kstest

from betafluct.circular import (
    VerblunskyDraw,
    sample_verblunsky,
    prufer_evaluate,
    count_arc,
    cbe_points,
    sine_beta_window,
    default_window_size,
    _final_phases,
    _stack_draws,
    _count_arcs_block,
)
from betafluct.rng import RngStream

TWO_PI = 2.0 * math.pi


def _zero_draw(n, eta):
    return VerblunskyDraw(beta=2.0, n=n, gamma=np.zeros(n - 1, dtype=complex), eta=eta)


def test_verblunsky_n1_has_no_coefficients():
    draw = sample_verblunsky(2.0, 1, RngStream(0, 0))
    assert len(draw.gamma) == 0
    assert 0.0 <= draw.eta < TWO_PI


def test_verblunsky_validation():
    with pytest.raises(ValueError):
        sample_verblunsky(0.0, 4, RngStream(0, 0))
    with pytest.raises(ValueError):
        sample_verblunsky(2.0, 0, RngStream(0, 0))


def test_verblunsky_last_coefficient_uniform_beta2():
    # at beta = 2 the last squared modulus is Beta(1, 1)
    m = 20000
    gamma, _ = _stack_draws(2.0, 6, 21, np.arange(m))
    radius_sq = np.abs(gamma[:, -1]) ** 2
    assert kstest(radius_sq, "uniform").statistic < 1.63 / math.sqrt(m)


def test_verblunsky_first_coefficient_mean():
    # Beta(1, 10) mean is 1/11 for beta = 2, n = 11
    m = 10**5
    gamma, _ = _stack_draws(2.0, 11, 22, np.arange(m))
    assert abs(np.mean(np.abs(gamma[:, 0]) ** 2) - 1.0 / 11.0) < 0.005


def test_prufer_zero_coefficients_linear():
    draw = _zero_draw(10, 1.0)
    for k in (0, 3, 9):
        ev = prufer_evaluate(draw, 0.7, 0.0, k)
        assert ev.psi == pytest.approx((k + 1) * 0.7, abs=1e-12)


def test_prufer_offset_equivariance():
    for d in range(20):
        draw = sample_verblunsky(1.5, 20, RngStream(23, d))
        theta, a = 0.31, 0.9
        base = prufer_evaluate(draw, theta, a).psi
        shifted = prufer_evaluate(draw, theta, a + TWO_PI).psi
        assert abs(shifted - base - TWO_PI) < 1e-9


def test_prufer_full_winding_over_period():
    n = 50
    gamma, _ = _stack_draws(2.0, n, 24, np.arange(100))
    lo = _final_phases(gamma, np.array([0.13]))[:, 0]
    hi = _final_phases(gamma, np.array([0.13 + TWO_PI]))[:, 0]
    assert np.max(np.abs(hi - lo - TWO_PI * n)) < 1e-9


def test_prufer_monotone_in_theta_and_offset():
    n = 30
    gamma, _ = _stack_draws(2.0, n, 25, np.arange(100))
    thetas = np.linspace(0.0, 0.5, 100)
    psi = _final_phases(gamma, thetas)
    assert np.all(np.diff(psi, axis=1) > 0)
    psi_a = np.stack(
        [_final_phases(gamma, np.array([0.2]), a=a)[:, 0] for a in np.linspace(0, 1, 10)], axis=1
    )
    assert np.all(np.diff(psi_a, axis=1) > 0)


def test_prufer_increment_bound():
    for d in range(30):
        draw = sample_verblunsky(0.7, 40, RngStream(26, d))
        ev = prufer_evaluate(draw, 0.45, 1.1, 39, keep_trajectory=True)
        steps = np.diff(ev.trajectory) - 0.45
        assert np.max(np.abs(steps)) < TWO_PI


def test_prufer_depth_validation():
    draw = sample_verblunsky(2.0, 5, RngStream(0, 0))
    with pytest.raises(ValueError):
        prufer_evaluate(draw, 0.1, 0.0, 5)
    with pytest.raises(ValueError):
        prufer_evaluate(draw, 0.1, 0.0, -1)


def test_prufer_martingale_mean():
    # psi_k(theta, a) - k*theta is a martingale started at theta + a
    n, m = 30, 10**5
    theta, a = 0.8 / n, 0.37
    gamma, _ = _stack_draws(2.0, n, 27, np.arange(m))
    psi = _final_phases(gamma, np.array([theta]), a=a)[:, 0]
    drift = psi - (n - 1) * theta - (theta + a)
    assert abs(drift.mean()) < 5.0 * drift.std() / math.sqrt(m)


def test_count_arc_empty_and_domain():
    draw = sample_verblunsky(2.0, 8, RngStream(28, 0))
    assert count_arc(draw, 0.0) == 0
    with pytest.raises(ValueError):
        count_arc(draw, -0.1)
    with pytest.raises(ValueError):
        count_arc(draw, TWO_PI * 8)


def test_count_arc_full_circle_limit():
    n = 16
    for d in range(100):
        draw = sample_verblunsky(2.0, n, RngStream(29, d))
        assert count_arc(draw, TWO_PI * n - 1e-6) == n


def test_count_arc_tracks_phase_winding():
    # the count never strays more than one unit from psi(x/n)/(2 pi)
    n = 24
    for d in range(50):
        draw = sample_verblunsky(1.5, n, RngStream(58, d))
        for x in RngStream(59, d).generator.uniform(0, TWO_PI * n, 5):
            psi = _final_phases(draw.gamma.reshape(1, -1), np.array([x / n]))[0, 0]
            assert abs(count_arc(draw, x) - psi / TWO_PI) <= 1.0


def test_count_arc_deterministic_lattice():
    n = 12
    draw = _zero_draw(n, 1.3)
    for x in (0.5, 1.3, 2.0, 7.0, 40.0, 70.0):
        expected = math.floor((x - 1.3) / TWO_PI) + 1 if x >= 1.3 else 0
        assert count_arc(draw, x) == expected


def test_count_arc_eta_zero_excludes_origin():
    # the deterministic point at angle 0 is outside the half-open arc
    draw = _zero_draw(8, 0.0)
    assert count_arc(draw, 1e-9) == 0
    assert count_arc(draw, TWO_PI + 0.1) == 1


def test_cbe_points_lattice():
    n = 8
    draw = _zero_draw(n, 0.9)
    expected = (0.9 + TWO_PI * np.arange(n)) / n
    assert np.allclose(cbe_points(draw).points, expected, atol=1e-12)


def test_cbe_points_count_and_sorted():
    n = 16
    for d in range(1000):
        draw = sample_verblunsky(2.0, n, RngStream(30, d))
        config = cbe_points(draw)
        assert len(config.points) == n
        assert np.all(np.diff(config.points) > 0)
        assert config.points[0] >= 0.0 and config.points[-1] < TWO_PI


def test_cbe_points_solve_to_tolerance():
    n = 16
    for d in range(50):
        draw = sample_verblunsky(1.0, n, RngStream(31, d))
        pts = cbe_points(draw).points
        psi = _final_phases(draw.gamma.reshape(1, -1), pts)[0]
        residue = (psi - draw.eta + math.pi) % TWO_PI - math.pi
        # theta is bisected to ~1e-15; the phase residue scales by dpsi/dtheta,
        # which can spike to ~n/(1-|gamma|)
        assert np.max(np.abs(residue)) < 1e-7


def test_cbe_points_cross_oracle_count_arc():
    n = 16
    rng = RngStream(32, 0)
    for d in range(50):
        draw = sample_verblunsky(2.0, n, RngStream(32, d))
        pts = cbe_points(draw).points * n
        for x in rng.generator.uniform(0, TWO_PI * n, 4):
            assert count_arc(draw, x) == int(np.sum((pts > 0) & (pts <= x)))


def test_sine_window_empty():
    config = sine_beta_window(2.0, 0.0, 64, RngStream(33, 0))
    assert len(config.points) == 0
    assert config.scale == "rescaled"


def test_sine_window_guard():
    with pytest.raises(ValueError):
        sine_beta_window(2.0, 10.0, 64, RngStream(33, 0))


def test_default_window_size():
    assert default_window_size(1.0) == 4096
    assert default_window_size(100.0) == 5000


def test_sine_window_matches_count_arc():
    x_max = 12.0
    for d in range(30):
        rng = RngStream(34, d)
        config = sine_beta_window(2.0, x_max, 128, rng)
        draw = sample_verblunsky(2.0, 128, RngStream(34, d))
        assert len(config.points) == count_arc(draw, x_max)
        if len(config.points):
            assert config.points[0] > 0 and config.points[-1] <= x_max
            assert np.all(np.diff(config.points) > 0)


def test_sine_window_count_mean_centered():
    # mean count in [0, 20] converges to 20/(2 pi); the arc-count mean is
    # exactly x/(2 pi) at every n by rotation invariance
    from betafluct.stats import ScanSpec, variance_scan

    m = 10**5
    row = variance_scan(ScanSpec("sine", 2.0, 4096, (20.0,)), m=m, seed=38)[0]
    assert abs(row.mean - 20.0 / TWO_PI) < 3.0 * math.sqrt(row.variance / m)


def test_sine_window_variance_stable_under_doubling_n():
    from betafluct.stats import ScanSpec, variance_scan

    m = 10**4
    coarse = variance_scan(ScanSpec("sine", 2.0, 4096, (20.0,)), m=m, seed=39)[0]
    fine = variance_scan(ScanSpec("sine", 2.0, 8192, (20.0,)), m=m, seed=40)[0]
    ci_width = coarse.var_ci_hi - coarse.var_ci_lo
    assert abs(fine.variance - coarse.variance) < ci_width


def test_tail_bound_and_second_moment_invariant():
    # exceedance bound 12 e^{-b/12} and second-moment bound 3500 for
    # theta <= 1/n, checked at full depth on one large batch
    n, m = 50, 10**6
    theta = 1.0 / n
    a = 0.6
    hits = {12.0: 0, 24.0: 0, 48.0: 0}
    sumsq = 0.0
    for start in range(0, m, 50000):
        idx = np.arange(start, min(start + 50000, m))
        gamma, _ = _stack_draws(2.0, n, 35, idx)
        psi = _final_phases(gamma, np.array([theta]), a=a)[:, 0]
        for b in hits:
            hits[b] += int(np.sum(psi >= a + b))
        sumsq += float(np.sum((psi - a) ** 2))
    for b, h in hits.items():
        assert h / m <= 12.0 * math.exp(-b / 12.0)
    assert sumsq / m <= 3500.0


def test_regularity_statistic_stable():
    from betafluct.stats import regularity_profile

    small = regularity_profile(2.0, 100.0, m=300, seed=36)
    large = regularity_profile(2.0, 1000.0, m=300, seed=37)
    q_small = np.quantile(small, 0.99)
    q_large = np.quantile(large, 0.99)
    assert q_large < 1.25 * q_small
