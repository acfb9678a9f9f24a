"""Streaming count statistics, exact beta=2 oracle, and variance scans."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circular import _count_arcs_block, _final_phases, _stack_draws
from .gaussian import _sturm_block, sample_tridiagonal, semicircle_count
from .rng import RngStream, TWO_PI

# Replicas are processed in fixed-size blocks and block results merged in
# index order, so outputs are byte-identical for any worker count.
BLOCK_SIZE = 2048
# Stream-index namespace: replicas occupy [0, 2^32); per-row bootstrap
# streams live above that.
_BOOTSTRAP_STREAM_BASE = 1 << 32
BOOTSTRAP_RESAMPLES = 1000
_WILSON_Z = 1.959963984540054  # 95%


class MomentAccumulator:
    """Single-pass mean/variance accumulator with an associative merge."""

    __slots__ = ("m", "mean", "M2", "min", "max")

    def __init__(self):
        self.m = 0
        self.mean = 0.0
        self.M2 = 0.0
        self.min = math.inf
        self.max = -math.inf

    def add(self, x: float) -> None:
        self.m += 1
        delta = x - self.mean
        self.mean += delta / self.m
        self.M2 += delta * (x - self.mean)
        self.min = min(self.min, x)
        self.max = max(self.max, x)

    @classmethod
    def from_values(cls, values) -> "MomentAccumulator":
        acc = cls()
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return acc
        acc.m = int(values.size)
        acc.mean = float(values.mean())
        acc.M2 = float(np.sum((values - acc.mean) ** 2))
        acc.min = float(values.min())
        acc.max = float(values.max())
        return acc

    @property
    def variance(self) -> float:
        return self.M2 / (self.m - 1) if self.m >= 2 else 0.0

    def merge_in(self, other: "MomentAccumulator") -> None:
        if other.m == 0:
            return
        if self.m == 0:
            self.m, self.mean, self.M2 = other.m, other.mean, other.M2
            self.min, self.max = other.min, other.max
            return
        total = self.m + other.m
        delta = other.mean - self.mean
        self.mean += delta * other.m / total
        self.M2 += other.M2 + delta * delta * self.m * other.m / total
        self.m = total
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)


def accumulate(acc: MomentAccumulator, sample: float) -> MomentAccumulator:
    """Fold one sample into the accumulator (returned for chaining)."""
    acc.add(sample)
    return acc


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Combine two accumulators as if their samples had been seen in one pass."""
    out = MomentAccumulator()
    out.merge_in(a)
    out.merge_in(b)
    return out


def cue_variance_oracle(n: int, arc_length: float) -> float:
    """Exact variance of the point count of an n-point CUE (beta = 2) in an
    arc of length L, from the moment identity E|tr U^k|^2 = min(k, n):

        Var = sum_{k>=1} 2 * min(k, n) * sin^2(k L / 2) / (pi^2 k^2).

    The k >= n tail is summed in closed form via
    sum_{k>=1} sin^2(k x) / k^2 = x (pi - x) / 2 for x in [0, pi], so the
    value is exact up to rounding, tighter than any fixed truncation.
    """
    if not 0.0 <= arc_length <= TWO_PI:
        raise ValueError(f"arc length must lie in [0, 2*pi], got {arc_length}")
    x = 0.5 * arc_length
    full = 0.5 * x * (math.pi - x)
    k = np.arange(1, n, dtype=float)
    sin2 = np.sin(k * x) ** 2
    head = float(np.sum(sin2 / k)) - n * float(np.sum(sin2 / (k * k)))
    return 2.0 / math.pi**2 * (head + n * full)


@dataclass(frozen=True)
class ScanSpec:
    """Grid description for a variance scan.

    ensemble: 'cbe' (arc counts), 'gbe' (interval counts), or 'sine' (window
    counts on the rescaled circular model). xis is the grid of scale
    variables: rescaled arc length n*|I| for cbe, sqrt(n)*(lam2 - lam1) for
    gbe, window length for sine. gbe intervals are centered at `center`.
    """

    ensemble: str
    beta: float
    n: int
    xis: tuple
    center: float = 0.0

    def __post_init__(self):
        if self.ensemble not in ("cbe", "gbe", "sine"):
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.beta <= 0 or self.n < 1:
            raise ValueError("beta must be positive and n >= 1")
        if len(self.xis) == 0:
            raise ValueError("empty scan grid")
        for xi in self.xis:
            if xi < 0:
                raise ValueError(f"scale values must be non-negative, got {xi}")
            if self.ensemble in ("cbe", "sine") and xi >= TWO_PI * self.n:
                raise ValueError(f"arc {xi} reaches around the full circle for n={self.n}")
            if self.ensemble == "sine" and self.n < math.ceil(10.0 * xi):
                raise ValueError(f"n={self.n} too small for sine window {xi}")


@dataclass(frozen=True)
class ScanRow:
    ensemble: str
    beta: float
    n: int
    interval: str
    xi: float
    m: int
    mean: float
    variance: float
    var_ci_lo: float
    var_ci_hi: float
    ref_mean: float


@dataclass(frozen=True)
class BoundFit:
    slope: float
    intercept: float
    max_ratio: float
    residuals: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TailRow:
    b: float
    hits: int
    m: int
    empirical: float
    wilson_hi: float
    bound: float


@dataclass(frozen=True)
class TailCheckResult:
    beta: float
    n: int
    theta: float
    a: float
    m: int
    rows: tuple
    second_moment: float


def default_grid(n: int, points: int = 12, cap: float | None = None) -> tuple:
    """Geometric grid of scale variables from 1 to n/2 (optionally capped)."""
    top = n / 2.0 if cap is None else min(n / 2.0, cap)
    return tuple(float(v) for v in np.geomspace(1.0, top, points))


def resolve_workers(requested: int | None) -> int:
    """0 means auto-detect (BETAFLUCT_WORKERS env var, then cpu count)."""
    if requested is None:
        return 1
    if requested < 0:
        raise ValueError(f"workers must be non-negative, got {requested}")
    if requested == 0:
        env = os.environ.get("BETAFLUCT_WORKERS")
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1
    return requested


# ----------------------------------------------------------------------
# Block execution. Tasks must stay picklable (module-level worker, plain
# tuples) so the process pool can run them; results are merged in task
# order, independent of the worker count.


def _iter_blocks(m: int):
    for start in range(0, m, BLOCK_SIZE):
        yield start, min(start + BLOCK_SIZE, m)


def _run_ordered(worker, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


def _scan_counts(task) -> np.ndarray:
    """Integer counts for replicas [start, stop) of one scan row."""
    ensemble, beta, n, x, lam_lo, lam_hi, seed, base, start, stop = task
    indices = base + np.arange(start, stop)
    if ensemble in ("cbe", "sine"):
        gamma, eta = _stack_draws(beta, n, seed, indices)
        return _count_arcs_block(gamma, eta, n, np.array([x]))[:, 0]
    diag, offdiag = _stack_models(beta, n, seed, indices)
    counts = _sturm_block(diag, offdiag, np.array([lam_lo, lam_hi]))
    return counts[:, 1] - counts[:, 0]


def _scan_worker(task):
    counts = _scan_counts(task)
    acc = MomentAccumulator.from_values(counts)
    hist = np.bincount(counts - counts.min()) if counts.size else np.empty(0, dtype=np.int64)
    offset = int(counts.min()) if counts.size else 0
    return acc.m, acc.mean, acc.M2, acc.min, acc.max, offset, hist


def _stack_models(beta: float, n: int, master_seed: int, indices: np.ndarray):
    count = len(indices)
    diag = np.empty((count, n))
    offdiag = np.empty((count, max(n - 1, 0)))
    for row, idx in enumerate(indices):
        model = sample_tridiagonal(beta, n, RngStream(master_seed, int(idx)))
        diag[row] = model.diag
        offdiag[row] = model.offdiag
    return diag, offdiag


def _merge_histograms(parts) -> tuple[np.ndarray, int]:
    """Combine (offset, bincount) pairs into one histogram over count values."""
    lo = min(offset for offset, _ in parts)
    hi = max(offset + len(hist) for offset, hist in parts)
    merged = np.zeros(hi - lo, dtype=np.int64)
    for offset, hist in parts:
        merged[offset - lo : offset - lo + len(hist)] += hist
    return merged, lo


def bootstrap_variance_ci(
    values: np.ndarray,
    weights: np.ndarray,
    rng: RngStream,
    resamples: int = BOOTSTRAP_RESAMPLES,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the sample variance of weighted data.

    The empirical distribution is given as distinct values with integer
    multiplicities; each resample is a multinomial redraw of the
    multiplicities, which is the index bootstrap expressed on the histogram.
    """
    m = int(weights.sum())
    if m < 2:
        return 0.0, 0.0
    # Most frequent category last so the multinomial's implicit remainder
    # probability is the largest one, immune to rounding of the others.
    order = np.argsort(weights, kind="stable")
    values = np.asarray(values, dtype=float)[order]
    weights = np.asarray(weights)[order]
    probs = weights / m
    table = rng.generator.multinomial(m, probs, size=resamples).astype(float)
    center = float(np.dot(values, probs))
    centered = values - center
    mean_shift = table @ centered / m
    sq = table @ (centered * centered)
    variances = (sq - m * mean_shift**2) / (m - 1)
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(variances, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def variance_scan(spec: ScanSpec, m: int, seed: int, workers: int = 1) -> list[ScanRow]:
    """Monte Carlo variance of point counts over the scan grid.

    Each grid point draws its own m independent replicas (one RngStream per
    replica, indexed by row * m + replica), so results are deterministic in
    (seed, grid, m) and identical for any worker count.
    """
    if m < 2:
        raise ValueError(f"need at least 2 replicas, got {m}")
    workers = resolve_workers(workers)
    rows = []
    for row_idx, xi in enumerate(spec.xis):
        if spec.ensemble == "gbe":
            half = 0.5 * xi / math.sqrt(spec.n)
            lam_lo, lam_hi = spec.center - half, spec.center + half
            x = 0.0
            interval = f"{lam_lo!r}:{lam_hi!r}"
            xi_out = min(xi, float(spec.n))
            ref_mean = semicircle_count(spec.n, lam_lo, lam_hi)
        else:
            x = xi
            lam_lo = lam_hi = 0.0
            interval = repr(xi / spec.n) if spec.ensemble == "cbe" else repr(float(xi))
            xi_out = float(xi)
            ref_mean = xi / TWO_PI
        base = row_idx * m
        tasks = [
            (spec.ensemble, spec.beta, spec.n, x, lam_lo, lam_hi, seed, base, start, stop)
            for start, stop in _iter_blocks(m)
        ]
        results = _run_ordered(_scan_worker, tasks, workers)
        acc = MomentAccumulator()
        hist_parts = []
        for m_blk, mean, m2, mn, mx, offset, hist in results:
            blk = MomentAccumulator()
            blk.m, blk.mean, blk.M2, blk.min, blk.max = m_blk, mean, m2, mn, mx
            acc.merge_in(blk)
            hist_parts.append((offset, hist))
        hist, lo = _merge_histograms(hist_parts)
        support = np.nonzero(hist)[0]
        ci_lo, ci_hi = bootstrap_variance_ci(
            support + lo, hist[support], RngStream(seed, _BOOTSTRAP_STREAM_BASE + row_idx)
        )
        rows.append(
            ScanRow(
                ensemble=spec.ensemble,
                beta=spec.beta,
                n=spec.n,
                interval=interval,
                xi=xi_out,
                m=acc.m,
                mean=acc.mean,
                variance=acc.variance,
                var_ci_lo=ci_lo,
                var_ci_hi=ci_hi,
                ref_mean=float(ref_mean),
            )
        )
    return rows


def fit_log_bound(rows) -> BoundFit:
    """Least-squares fit of row variances against log(2 + xi).

    Needs at least 3 rows spanning two decades of xi so the logarithmic
    shape is actually constrained.
    """
    xi = np.array([row.xi for row in rows], dtype=float)
    var = np.array([row.variance for row in rows], dtype=float)
    if len(xi) < 3:
        raise ValueError(f"need at least 3 rows to fit, got {len(xi)}")
    if xi.min() <= 0 or xi.max() / xi.min() < 100.0:
        raise ValueError("scan rows must span at least two decades of xi")
    logx = np.log(2.0 + xi)
    slope, intercept = np.polyfit(logx, var, 1)
    residuals = var - (slope * logx + intercept)
    return BoundFit(
        slope=float(slope),
        intercept=float(intercept),
        max_ratio=float(np.max(var / logx)),
        residuals=residuals,
    )


def wilson_upper(hits: int, m: int, z: float = _WILSON_Z) -> float:
    """Upper end of the Wilson score interval for a binomial proportion."""
    if m == 0:
        return 1.0
    p = hits / m
    denom = 1.0 + z * z / m
    center = p + z * z / (2 * m)
    spread = z * math.sqrt(p * (1.0 - p) / m + z * z / (4.0 * m * m))
    return min(1.0, (center + spread) / denom)


def _tail_worker(task):
    beta, n, theta, a, depth, b_grid, seed, start, stop = task
    indices = np.arange(start, stop)
    gamma, _ = _stack_draws(beta, n, seed, indices)
    psi = _final_phases(gamma[:, :depth], np.array([theta]), a)[:, 0]
    excess = psi - a
    hits = np.array([int(np.sum(excess >= b)) for b in b_grid], dtype=np.int64)
    return hits, float(np.sum(excess * excess)), len(indices)


def tail_check(
    beta: float,
    n: int,
    theta: float | None = None,
    a: float = 0.0,
    b_grid=(6.0, 12.0, 24.0, 36.0),
    m: int = 10**6,
    seed: int = 0,
    workers: int = 1,
    depth: int | None = None,
) -> TailCheckResult:
    """Empirical exceedance probabilities of the phase against the universal
    exponential bound 12 * exp(-b/12), valid for theta <= 1/n.

    Also reports the empirical second moment of (psi - a), which the same
    argument bounds by 3500. depth defaults to the full recursion n-1.
    """
    if theta is None:
        theta = 1.0 / n
    if not 0.0 <= theta <= 1.0 / n:
        raise ValueError(f"theta must lie in [0, 1/n]={1.0 / n}, got {theta}")
    if depth is None:
        depth = n - 1
    if not 0 <= depth <= n - 1:
        raise ValueError(f"depth must lie in [0, {n - 1}], got {depth}")
    workers = resolve_workers(workers)
    b_grid = tuple(float(b) for b in b_grid)
    tasks = [
        (beta, n, theta, a, depth, b_grid, seed, start, stop) for start, stop in _iter_blocks(m)
    ]
    results = _run_ordered(_tail_worker, tasks, workers)
    hits = np.zeros(len(b_grid), dtype=np.int64)
    sumsq = 0.0
    total = 0
    for blk_hits, blk_sumsq, blk_m in results:
        hits += blk_hits
        sumsq += blk_sumsq
        total += blk_m
    rows = tuple(
        TailRow(
            b=b,
            hits=int(h),
            m=total,
            empirical=float(h / total),
            wilson_hi=wilson_upper(int(h), total),
            bound=12.0 * math.exp(-b / 12.0),
        )
        for b, h in zip(b_grid, hits)
    )
    return TailCheckResult(
        beta=beta, n=n, theta=theta, a=a, m=total, rows=rows, second_moment=sumsq / total
    )


def _regularity_worker(task):
    beta, n, alpha, grid, seed, start, stop = task
    indices = np.arange(start, stop)
    gamma, eta = _stack_draws(beta, n, seed, indices)
    xs = np.asarray(grid)
    counts = _count_arcs_block(gamma, eta, n, xs)
    deviation = np.abs(counts - xs / TWO_PI) / (1.0 + xs) ** alpha
    return deviation.max(axis=1)


def regularity_profile(
    beta: float,
    x_max: float,
    m: int,
    seed: int,
    alpha: float = 0.4,
    n: int | None = None,
    points_per_decade: int = 8,
    workers: int = 1,
) -> np.ndarray:
    """Per-draw sup over a log grid in [1, x_max] of the normalized count
    deviation |N(0, x] - x/(2 pi)| / (1 + x)^alpha.

    The distribution of this statistic is expected to be stochastically
    stable as the window grows; n defaults to the minimal window guard
    ceil(10 * x_max).
    """
    if x_max < 1.0:
        raise ValueError(f"x_max must be at least 1, got {x_max}")
    if n is None:
        n = int(math.ceil(10.0 * x_max))
    if n < math.ceil(10.0 * x_max):
        raise ValueError(f"n={n} too small for window {x_max}")
    workers = resolve_workers(workers)
    npts = max(2, int(math.ceil(math.log10(x_max) * points_per_decade)) + 1)
    grid = tuple(float(v) for v in np.geomspace(1.0, x_max, npts))
    tasks = [(beta, n, alpha, grid, seed, start, stop) for start, stop in _iter_blocks(m)]
    results = _run_ordered(_regularity_worker, tasks, workers)
    return np.concatenate(results)
