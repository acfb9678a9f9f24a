"""Gaussian beta ensemble: tridiagonal models, Sturm counts, phase sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circlemap import AffineAction, LiftedCircleMap, Rotation, _lift_affine, lift_affine
from .rng import RngStream, chi_sample, gaussian_sample, TWO_PI

# Relative winding distance to an integer below which a sweep count is
# reported as ill-conditioned instead of silently rounded.
NEAR_DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class TridiagonalModel:
    """Symmetric tridiagonal matrix whose spectrum is a Gaussian beta ensemble.

    diag entries are N(0, 2/beta); offdiag entry p (1-based) is
    chi_{beta*(n-p)} / sqrt(beta), all independent.
    """

    beta: float
    n: int
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if len(self.diag) != self.n or len(self.offdiag) != self.n - 1:
            raise ValueError("inconsistent band lengths")

    def shifted(self, c: float) -> "TridiagonalModel":
        return TridiagonalModel(self.beta, self.n, self.diag + c, self.offdiag)


@dataclass(frozen=True)
class ConjugatedModel:
    """Diagonal-similarity image of a TridiagonalModel with pinned subdiagonal.

    The conjugated matrix has diagonal X, subdiagonal entries s_1..s_{n-1}
    with s_p = sqrt(n - p - 1/2), and superdiagonal s_{p-1} + Y_{p-1} where
    Y_{p-1} = offdiag_p^2 / s_p - s_{p-1}. Opposite off-diagonal products are
    preserved exactly, so the spectrum equals that of the source model.
    """

    n: int
    s: np.ndarray  # s_0..s_{n-1}; the last value only pads the final transfer map
    X: np.ndarray
    Y: np.ndarray  # length n-1

    def superdiag(self) -> np.ndarray:
        return self.s[:-1] + self.Y

    def transfer_params(self, ell: int) -> tuple[float, float, float]:
        """(s_ell, scale, shift) of the random factor of the ell-th transfer map."""
        s = self.s[ell]
        y = self.Y[ell] if ell < self.n - 1 else 0.0
        return s, s / (s + y), -self.X[ell] / s


@dataclass(frozen=True)
class PhaseSweep:
    """Forward/backward phase pair at a split index; count is the winding."""

    ell: int
    lam: float
    phi_fwd: float
    phi_bwd: float
    count: int
    flagged: bool


@dataclass(frozen=True)
class CarouselParams:
    """Deterministic rotation data removed from raw phases around level mu.

    n0 = (n - mu^2/4 - 1/2) clamped below by 1; rho_l are unit-modulus
    rotation factors for 0 <= l < n0; eta_l are the cumulative products
    rho_0^2 ... rho_l^2; ell is the largest integer strictly below
    n0 - mu^(2/3), clamped at 0.
    """

    mu: float
    n: int
    n0: float
    rho: np.ndarray = field(repr=False)
    ell: int
    eta: np.ndarray = field(repr=False)
    lam: float | None = None
    lambda_rel: float | None = None


def sample_tridiagonal(beta: float, n: int, rng: RngStream) -> TridiagonalModel:
    """Sample the tridiagonal model of a Gaussian beta ensemble of size n."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    diag = gaussian_sample(0.0, math.sqrt(2.0 / beta), rng, size=n)
    if n == 1:
        offdiag = np.empty(0)
    else:
        dof = beta * (n - np.arange(1, n, dtype=float))
        offdiag = chi_sample(dof, rng) / math.sqrt(beta)
    return TridiagonalModel(beta=beta, n=n, diag=np.atleast_1d(diag), offdiag=offdiag)


def conjugate_model(model: TridiagonalModel) -> ConjugatedModel:
    """Conjugate by the diagonal similarity that pins the subdiagonal to s.

    The similarity leaves the spectrum unchanged; Y absorbs the fluctuation
    of the off-diagonal entries around s.
    """
    n = model.n
    if n > 1 and np.any(model.offdiag <= 0):
        raise ValueError("off-diagonal entries must be positive to conjugate")
    s = np.sqrt(n - np.arange(n, dtype=float) - 0.5)
    y = model.offdiag**2 / s[1:] - s[:-1] if n > 1 else np.empty(0)
    return ConjugatedModel(n=n, s=s, X=model.diag.copy(), Y=y)


def sturm_count(model: TridiagonalModel, lam) -> int | np.ndarray:
    """Number of eigenvalues <= lam, by counting negative pivots of T - lam*I.

    A zero pivot is replaced by -eps*(1 + |lam|) and counted as negative,
    matching half-open interval semantics (boundary eigenvalues count).
    """
    scalar = np.isscalar(lam)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    counts = _sturm_block(model.diag[None, :], model.offdiag[None, :], lam_arr)[0]
    return int(counts[0]) if scalar else counts


def _sturm_block(diag: np.ndarray, offdiag: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """Vectorized pivot counts: diag (C, n), offdiag (C, n-1), lams (K,) -> (C, K)."""
    n = diag.shape[1]
    tiny = np.finfo(float).eps * (1.0 + np.abs(lams))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        d = diag[:, 0:1] - lams
        d = np.where(d == 0.0, -tiny, d)
        neg = (d < 0).astype(np.int64)
        for p in range(1, n):
            d = (diag[:, p : p + 1] - lams) - offdiag[:, p - 1 : p] ** 2 / d
            d = np.where(d == 0.0, -tiny, d)
            neg += d < 0
    return neg


def transfer_map(model: ConjugatedModel, ell: int, lam: float) -> LiftedCircleMap:
    """Lifted transfer map carrying the eigenvector ratio at row ell for
    spectral parameter lam: rotation by pi, then r -> r + lam/s_ell, then the
    draw-dependent affine factor.
    """
    if not 0 <= ell <= model.n - 1:
        raise ValueError(f"ell must lie in [0, {model.n - 1}], got {ell}")
    s, scale, shift = model.transfer_params(ell)
    if scale <= 0:
        raise ValueError("degenerate conjugated row: non-positive affine scale")
    return LiftedCircleMap((Rotation(math.pi), AffineAction(1.0, lam / s), AffineAction(scale, shift)))


def _sweep_forward(X, s, Y, lams, ell):
    """phi-hat at split ell: start at pi, push through transfer maps 0..ell-1.

    X, Y: (C, n) stacked draws (Y[:, n-1] is the zero pad); lams: (K,) or
    (C, K); returns (C, K).
    """
    n_draws = X.shape[0]
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    width = lams.shape[-1]
    phi = np.full((n_draws, width), math.pi)
    for l in range(ell):
        sl = s[l]
        phi = _lift_affine(phi + math.pi, 1.0, lams / sl)
        phi = _lift_affine(phi, sl / (sl + Y[:, l : l + 1]), -X[:, l : l + 1] / sl)
    return phi


def _sweep_backward(X, s, Y, lams, ell):
    """phi-check at split ell: start at 0, push through inverse maps n-1..ell."""
    n = X.shape[1]
    n_draws = X.shape[0]
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    width = lams.shape[-1]
    phi = np.zeros((n_draws, width))
    for l in range(n - 1, ell - 1, -1):
        sl = s[l]
        a = sl / (sl + Y[:, l : l + 1])
        phi = _lift_affine(phi, 1.0 / a, a * X[:, l : l + 1] / sl)
        phi = _lift_affine(phi, 1.0, -lams / sl)
        phi = phi - math.pi
    return phi


def _pad_y(model: ConjugatedModel) -> np.ndarray:
    return np.concatenate([model.Y, [0.0]])


def _sweep_phases(model: ConjugatedModel, lams, ell: int):
    X = model.X[None, :]
    Y = _pad_y(model)[None, :]
    fwd = _sweep_forward(X, model.s, Y, lams, ell)[0]
    bwd = _sweep_backward(X, model.s, Y, lams, ell)[0]
    return fwd, bwd


def phase_sweep(model: ConjugatedModel, lam: float, ell: int | None = None) -> PhaseSweep:
    """Count eigenvalues <= lam as the winding between a forward phase pushed
    from the top rows and a backward phase pushed from the bottom rows.

    The split index ell may be any value in [0, n]; the count is independent
    of it. Counts whose winding sits within 1e-8 of an integer are flagged as
    ill-conditioned rather than trusted.
    """
    if ell is None:
        ell = model.n // 2
    if not 0 <= ell <= model.n:
        raise ValueError(f"ell must lie in [0, {model.n}], got {ell}")
    fwd, bwd = _sweep_phases(model, np.array([lam], dtype=float), ell)
    winding = (fwd[0] - bwd[0]) / TWO_PI
    flagged = bool(abs(winding - round(winding)) < NEAR_DEGENERATE_TOL)
    return PhaseSweep(
        ell=ell,
        lam=float(lam),
        phi_fwd=float(fwd[0]),
        phi_bwd=float(bwd[0]),
        count=int(math.floor(winding)),
        flagged=flagged,
    )


def _sweep_counts_block(diag, offdiag, lams, ell=0):
    """Sweep counts and flags for stacked tridiagonal draws: (C, K) each."""
    n = diag.shape[1]
    s = np.sqrt(n - np.arange(n, dtype=float) - 0.5)
    y = np.empty_like(diag)
    y[:, : n - 1] = offdiag**2 / s[1:] - s[:-1]
    y[:, n - 1] = 0.0
    fwd = _sweep_forward(diag, s, y, lams, ell)
    bwd = _sweep_backward(diag, s, y, lams, ell)
    winding = (fwd - bwd) / TWO_PI
    flags = np.abs(winding - np.round(winding)) < NEAR_DEGENERATE_TOL
    return np.floor(winding).astype(np.int64), flags


def _strict_int_part(x: float) -> int:
    """Largest integer strictly smaller than x."""
    f = math.floor(x)
    return f - 1 if f == x else f


def carousel_params(mu: float, n: int, lam: float | None = None) -> CarouselParams:
    """Rotation-removal parameters at level mu for a size-n ensemble.

    When lam is given, the renormalized spectral offset 2*sqrt(n0)*(lam - mu)
    is attached as lambda_rel.
    """
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    q = mu * mu / 4.0
    n0 = max(n - q - 0.5, 1.0)
    levels = np.arange(math.ceil(n0), dtype=float)
    denom = q + n0 - levels
    rho = np.sqrt(q / denom) + 1j * np.sqrt((n0 - levels) / denom)
    ell = max(_strict_int_part(n0 - mu ** (2.0 / 3.0)), 0)
    eta = np.cumprod(rho * rho)
    lambda_rel = None if lam is None else 2.0 * math.sqrt(n0) * (lam - mu)
    return CarouselParams(mu=mu, n=n, n0=n0, rho=rho, ell=ell, eta=eta, lam=lam, lambda_rel=lambda_rel)


def _semicircle_antiderivative(x) -> np.ndarray:
    return 0.5 * x * np.sqrt(4.0 - x * x) + 2.0 * np.arcsin(0.5 * x)


def semicircle_count(n: int, lam1: float, lam2: float) -> float:
    """Expected point count on (lam1, lam2] under the semicircle profile:
    (n/2pi) * integral of sqrt((4 - x^2)_+) over [lam1/sqrt(n), lam2/sqrt(n)].
    """
    if lam1 > lam2:
        raise ValueError(f"need lam1 <= lam2, got ({lam1}, {lam2})")
    root = math.sqrt(n)
    a = min(max(lam1 / root, -2.0), 2.0) if math.isfinite(lam1) else math.copysign(2.0, lam1)
    b = min(max(lam2 / root, -2.0), 2.0) if math.isfinite(lam2) else math.copysign(2.0, lam2)
    return float(n / TWO_PI * (_semicircle_antiderivative(b) - _semicircle_antiderivative(a)))


def semicircle_residual(mu: float, n: int) -> float:
    """Difference between the accumulated rotation angles up to the carousel
    split and the semicircle mass beyond mu; stays O(1) uniformly in n.
    """
    params = carousel_params(mu, n)
    angle_sum = float(np.sum(np.angle(params.rho[: params.ell])))
    edge = min(mu / math.sqrt(n), 2.0)
    mass = 0.5 * n * (_semicircle_antiderivative(2.0) - _semicircle_antiderivative(edge))
    return angle_sum - float(mass)


def relative_phase(model: ConjugatedModel, lam: float, mu: float, ell: int) -> float:
    """Forward phase with the deterministic fast rotation removed.

    Applies the affine straightening tied to rho_ell, then subtracts the
    accumulated rotation angles 2*(pi - Arg(rho_j)) for j < ell.
    """
    params = carousel_params(mu, model.n)
    if not 0 <= ell < params.n0:
        raise ValueError(f"ell must lie in [0, n0={params.n0}), got {ell}")
    fwd, _ = _sweep_phases(model, np.array([lam], dtype=float), ell)
    rho = params.rho[ell]
    straightened = lift_affine(float(fwd[0]), 1.0 / rho.imag, -rho.real)
    correction = 2.0 * float(np.sum(math.pi - np.angle(params.rho[:ell])))
    return straightened - correction


@dataclass(frozen=True)
class CrossCountReport:
    """Outcome of comparing phase-sweep counts against Sturm counts."""

    beta: float
    n: int
    draws: int
    evaluations: int
    mismatches: int
    flagged: int

    @property
    def flagged_fraction(self) -> float:
        return self.flagged / self.evaluations if self.evaluations else 0.0


def verify_counts(
    beta: float,
    n: int,
    draws: int,
    lams_per_draw: int = 50,
    seed: int = 0,
    ell: int | None = None,
) -> CrossCountReport:
    """Cross-check the two eigenvalue counters on random spectral parameters.

    For each sampled model, lams_per_draw uniform points covering the
    spectrum are counted by phase sweep and by Sturm pivots; counts must
    agree exactly except at flagged near-degenerate points.
    """
    if draws < 1 or lams_per_draw < 1:
        raise ValueError("draws and lams_per_draw must be positive")
    if ell is None:
        ell = n // 2
    half_width = 2.0 * math.sqrt(n) + 2.0
    mismatches = 0
    flagged = 0
    for d in range(draws):
        rng = RngStream(seed, d)
        model = sample_tridiagonal(beta, n, rng)
        lams = rng.generator.uniform(-half_width, half_width, lams_per_draw)
        sweep_counts, flags = _sweep_counts_block(
            model.diag[None, :], model.offdiag[None, :], lams, ell
        )
        sturm_counts = _sturm_block(model.diag[None, :], model.offdiag[None, :], lams)
        ok = np.asarray(flags[0])
        mismatches += int(np.sum((sweep_counts[0] != sturm_counts[0]) & ~ok))
        flagged += int(np.sum(ok))
    return CrossCountReport(
        beta=beta,
        n=n,
        draws=draws,
        evaluations=draws * lams_per_draw,
        mismatches=mismatches,
        flagged=flagged,
    )


def straightening_map(model: ConjugatedModel, lam: float, mu: float, ell: int) -> LiftedCircleMap:
    """Slow-variation transfer map between consecutive straightened phases."""
    params = carousel_params(mu, model.n)
    if not 0 <= ell < params.n0 - 1:
        raise ValueError(f"ell must lie in [0, n0-1={params.n0 - 1}), got {ell}")
    rho_l = params.rho[ell]
    rho_next = params.rho[ell + 1]
    s, scale, shift = model.transfer_params(ell)
    return LiftedCircleMap(
        (
            AffineAction(1.0 / rho_l.imag, -rho_l.real).inverse(),
            AffineAction(1.0, (lam - mu) / s),
            AffineAction(scale, shift),
            AffineAction(1.0 / rho_next.imag, -rho_next.real),
        )
    )
