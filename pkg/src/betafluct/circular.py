"""Circular beta ensemble: Verblunsky sampling, Prufer phases, arc counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream, beta_1s_sample, TWO_PI


@dataclass(frozen=True)
class VerblunskyDraw:
    """One realization of the coefficients driving a circular ensemble.

    gamma holds the n-1 disc-valued coefficients gamma_0..gamma_{n-2} whose
    squared moduli are Beta(1, beta*(n-j-1)/2); eta is the boundary phase,
    uniform on [0, 2*pi) and independent of gamma.
    """

    beta: float
    n: int
    gamma: np.ndarray
    eta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if len(self.gamma) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} coefficients, got {len(self.gamma)}")
        if len(self.gamma) and np.max(np.abs(self.gamma)) >= 1.0:
            raise ValueError("coefficients must lie in the open unit disc")
        if not 0.0 <= self.eta < TWO_PI:
            raise ValueError(f"eta must lie in [0, 2*pi), got {self.eta}")


@dataclass(frozen=True)
class PruferEvaluation:
    theta: float
    a: float
    k: int
    psi: float
    trajectory: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class PointConfiguration:
    """Sorted point set; scale is 'argument' for raw angles in [0, 2*pi),
    'rescaled' for angles multiplied by n (window coordinates)."""

    points: np.ndarray
    scale: str


def sample_verblunsky(beta: float, n: int, rng: RngStream) -> VerblunskyDraw:
    """Sample coefficients for a circular beta ensemble of n points.

    |gamma_j|^2 ~ Beta(1, beta*(n-j-1)/2) with uniform independent argument;
    eta uniform on [0, 2*pi). Draw order (squared radii, arguments, eta) is
    part of the reproducibility contract.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if n == 1:
        gamma = np.empty(0, dtype=complex)
    else:
        shape = 0.5 * beta * (n - 1.0 - np.arange(n - 1))
        radius_sq = beta_1s_sample(shape, rng)
        angles = TWO_PI * rng.generator.random(n - 1)
        gamma = np.sqrt(radius_sq) * np.exp(1j * angles)
    eta = TWO_PI * rng.generator.random()
    return VerblunskyDraw(beta=beta, n=n, gamma=gamma, eta=eta)


def _phase_step(psi, theta, g_re, g_im, ang0):
    """One Prufer increment: psi + theta + 2*Im log((1-g)/(1-g e^{i psi})).

    Both logs stay on the principal branch: 1-g and 1-g*e^{i psi} sit in the
    open disc of center 1 and radius |g| < 1, so their real parts are positive
    and no winding bookkeeping is needed.
    """
    c = np.cos(psi)
    s = np.sin(psi)
    re = 1.0 - (g_re * c - g_im * s)
    im = -(g_re * s + g_im * c)
    return psi + theta + 2.0 * (ang0 - np.arctan2(im, re))


def _final_phases(gamma: np.ndarray, thetas: np.ndarray, a: float = 0.0) -> np.ndarray:
    """psi_{J}(theta, a) for a block of draws evaluated at several thetas.

    gamma: (C, J) complex coefficients; thetas: (K,) angles shared by all
    draws. Returns the depth-J phase matrix of shape (C, K).
    """
    gamma = np.atleast_2d(gamma)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    n_draws, depth = gamma.shape
    g_re = np.ascontiguousarray(gamma.real)
    g_im = np.ascontiguousarray(gamma.imag)
    ang0 = np.arctan2(-g_im, 1.0 - g_re)
    psi = np.broadcast_to(thetas + a, (n_draws, thetas.size)).copy()
    for j in range(depth):
        psi = _phase_step(psi, thetas, g_re[:, j : j + 1], g_im[:, j : j + 1], ang0[:, j : j + 1])
    return psi


def prufer_evaluate(
    draw: VerblunskyDraw, theta: float, a: float = 0.0, k: int | None = None,
    keep_trajectory: bool = False,
) -> PruferEvaluation:
    """Evaluate the Prufer phase psi_k(theta, a), with psi_0 = theta + a.

    k defaults to n-1 (full depth). The phase is strictly increasing in theta
    and in a, and shifts exactly by 2*pi when a does.
    """
    if k is None:
        k = draw.n - 1
    if not 0 <= k <= draw.n - 1:
        raise ValueError(f"depth k must lie in [0, {draw.n - 1}], got {k}")
    g = draw.gamma[:k]
    if not keep_trajectory:
        psi = _final_phases(g.reshape(1, -1), np.array([theta]), a)[0, 0] if k else theta + a
        return PruferEvaluation(theta=theta, a=a, k=k, psi=float(psi))
    traj = np.empty(k + 1)
    traj[0] = theta + a
    g_re, g_im = g.real, g.imag
    ang0 = np.arctan2(-g_im, 1.0 - g_re)
    for j in range(k):
        traj[j + 1] = _phase_step(traj[j], theta, g_re[j], g_im[j], ang0[j])
    return PruferEvaluation(theta=theta, a=a, k=k, psi=float(traj[-1]), trajectory=traj)


def _lattice_count(psi, eta):
    """Number of lattice values eta + 2*pi*m inside the phase interval (0, psi]."""
    return np.floor((psi - eta) / TWO_PI).astype(np.int64) - int(math.floor(-eta / TWO_PI))


def count_arc(draw: VerblunskyDraw, x: float) -> int:
    """Count points with rescaled argument in (0, x], i.e. e^{iz/n} in the
    configuration for 0 < z <= x.

    Uses the winding identity: the full-depth phase is strictly increasing
    with psi(0) = 0, so the count equals the number of solutions of
    psi(theta) = eta mod 2*pi with theta in (0, x/n]. The result always lies
    within 1 of psi(x/n) / (2*pi).
    """
    if not 0.0 <= x < TWO_PI * draw.n:
        raise ValueError(f"x must lie in [0, 2*pi*n), got {x}")
    if x == 0.0:
        return 0
    psi = _final_phases(draw.gamma.reshape(1, -1), np.array([x / draw.n]))[0, 0]
    return int(_lattice_count(psi, draw.eta))


def _bisect_phase(gamma: np.ndarray, targets: np.ndarray, hi: float, iterations: int = 60) -> np.ndarray:
    """Solve psi(theta) = target for each target by monotone bisection on [0, hi]."""
    lo = np.zeros_like(targets)
    hi_arr = np.full_like(targets, hi)
    g = gamma.reshape(1, -1)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi_arr)
        vals = _final_phases(g, mid)[0]
        below = vals < targets
        lo = np.where(below, mid, lo)
        hi_arr = np.where(below, hi_arr, mid)
    return 0.5 * (lo + hi_arr)


def cbe_points(draw: VerblunskyDraw) -> PointConfiguration:
    """Extract all n points (as arguments in [0, 2*pi)) of the configuration.

    The full-depth phase increases from 0 to 2*pi*n over one period, so each
    of the n lattice values eta + 2*pi*m in [0, 2*pi*n) has a unique preimage,
    located by bisection to within 1e-12 in theta.
    """
    targets = draw.eta + TWO_PI * np.arange(draw.n, dtype=float)
    if len(draw.gamma) == 0:
        # psi(theta) = theta: the point is the lattice value itself
        points = targets
    else:
        points = _bisect_phase(draw.gamma, targets, TWO_PI)
    return PointConfiguration(points=np.sort(points), scale="argument")


def default_window_size(x_max: float) -> int:
    """Matrix size used to approximate the scaling limit on [0, x_max]."""
    return max(4096, int(math.ceil(50.0 * x_max)))


def sine_beta_window(
    beta: float, x_max: float, n: int | None = None, rng: RngStream | None = None,
) -> PointConfiguration:
    """Approximate a sine-process sample on [0, x_max] by the rescaled points
    of a size-n circular ensemble (the window points are n times the angles).

    n defaults to max(4096, ceil(50 * x_max)); any explicit n must satisfy
    n >= ceil(10 * x_max) so the window stays far from the full circle.
    """
    if x_max < 0:
        raise ValueError(f"x_max must be non-negative, got {x_max}")
    if rng is None:
        raise ValueError("an RngStream is required")
    if n is None:
        n = default_window_size(x_max)
    if n < math.ceil(10.0 * x_max):
        raise ValueError(f"n={n} too small for window length {x_max}; need n >= {math.ceil(10.0 * x_max)}")
    draw = sample_verblunsky(beta, n, rng)
    if x_max == 0.0:
        return PointConfiguration(points=np.empty(0), scale="rescaled")
    count = count_arc(draw, x_max)
    if count == 0:
        return PointConfiguration(points=np.empty(0), scale="rescaled")
    first = 0 if draw.eta > 0.0 else 1
    targets = draw.eta + TWO_PI * np.arange(first, first + count, dtype=float)
    thetas = _bisect_phase(draw.gamma, targets, x_max / n)
    return PointConfiguration(points=np.sort(n * thetas), scale="rescaled")


def _stack_draws(beta: float, n: int, master_seed: int, indices: np.ndarray):
    """Sample one draw per stream index and stack coefficients for block math.

    Returns (gamma (C, n-1) complex, eta (C,)). Each replica consumes only its
    own stream, so results do not depend on how replicas are grouped.
    """
    count = len(indices)
    gamma = np.empty((count, n - 1), dtype=complex)
    eta = np.empty(count)
    for row, idx in enumerate(indices):
        draw = sample_verblunsky(beta, n, RngStream(master_seed, int(idx)))
        gamma[row] = draw.gamma
        eta[row] = draw.eta
    return gamma, eta


def _count_arcs_block(gamma: np.ndarray, eta: np.ndarray, n: int, xs: np.ndarray) -> np.ndarray:
    """Arc counts for a block of draws at each rescaled length in xs: (C, K)."""
    psi = _final_phases(gamma, np.asarray(xs, dtype=float) / n)
    return (
        np.floor((psi - eta[:, None]) / TWO_PI).astype(np.int64)
        - np.floor(-eta[:, None] / TWO_PI).astype(np.int64)
    )
