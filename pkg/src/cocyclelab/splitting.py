"""Dominated splittings, Oseledets subspaces, uniform hyperbolicity and the
Sacker-Sell spectrum, all judged from singular values of finite products.

Every diagnostic over a sample first builds a table of log singular values
``L[x, t, j] = log sigma_j(A(x, n_t))`` and then works on the table.  Scaling
the cocycle by ``exp(-lam)`` only shifts the table by ``-lam * n``, which is
how the Sacker-Sell scan avoids recomputing products for every ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .cocycle import DEFAULT_BLOCK, Cocycle
from .exceptions import EmptySample, InvalidParameter, SplittingUnresolved
from .linalg import Subspace, direct_sum, intersect, subspace_angle
from .lyapunov import check_schedule, point_json


@dataclass(frozen=True)
class DominationConfig:
    """Thresholds for the finite-horizon domination and hyperbolicity tests.

    rate_floor : minimal fitted gap rate (nats/iterate) to call a splitting dominated
    slack_factor : allowed drop of the lower envelope below the fit, in fit RMS units
    slack_floor : absolute slack (nats) so exact fits do not fail on rounding
    fit_from : fraction of the schedule discarded before fitting (upper half by default)
    """

    rate_floor: float = 0.01
    slack_factor: float = 3.0
    slack_floor: float = 1e-6
    fit_from: float = 0.5
    block: int = DEFAULT_BLOCK


@dataclass(frozen=True)
class GapSeries:
    k: int
    schedule: tuple[int, ...]
    gaps: np.ndarray
    point: object = field(default=None, compare=False)

    def to_rows(self) -> list[tuple[int, float]]:
        return [(int(n), float(g)) for n, g in zip(self.schedule, self.gaps)]


@dataclass(frozen=True)
class DominationVerdict:
    """Fitted line ``log(sigma_k / sigma_{k+1}) ~ rate * n + log_offset`` over n >= n_min."""

    k: int
    dominated: bool
    rate: float
    log_offset: float
    min_gap_over_sample: float
    residual: float
    min_margin: float
    slack: float
    n_min: int

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "dominated": bool(self.dominated),
            "rate": float(self.rate),
            "log_offset": float(self.log_offset),
            "min_gap_over_sample": float(self.min_gap_over_sample),
            "residual": float(self.residual),
            "min_margin": float(self.min_margin),
            "slack": float(self.slack),
            "n_min": int(self.n_min),
        }


@dataclass(frozen=True)
class OseledetsEstimate:
    subspaces: list[Subspace]
    exponents: np.ndarray
    angles: np.ndarray
    n: int
    dims: tuple[int, ...]
    point: object = field(default=None, compare=False)

    @property
    def min_angle(self) -> float:
        off = self.angles[~np.eye(len(self.dims), dtype=bool)]
        return float(off.min()) if off.size else float(np.pi / 2)

    def to_json(self) -> dict:
        return {
            "point": point_json(self.point),
            "n": int(self.n),
            "dims": list(self.dims),
            "exponents": [float(v) for v in self.exponents],
            "angles": [[float(a) for a in row] for row in self.angles],
            "bases": [S.basis.tolist() for S in self.subspaces],
        }


@dataclass(frozen=True)
class SackerSellEstimate:
    intervals: list[tuple[float, float]]
    grid: np.ndarray
    horizon: int
    in_spectrum: np.ndarray

    @property
    def grid_step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if len(self.grid) > 1 else 0.0

    def widths(self) -> list[float]:
        return [b - a for a, b in self.intervals]

    def to_json(self) -> dict:
        return {
            "intervals": [[float(a), float(b)] for a, b in self.intervals],
            "grid_step": self.grid_step,
            "grid_min": float(self.grid[0]),
            "grid_max": float(self.grid[-1]),
            "horizon": int(self.horizon),
        }


# ---------------------------------------------------------------------------
# tables


def log_sv_table(c: Cocycle, sample: Sequence, schedule, block: int = DEFAULT_BLOCK) -> np.ndarray:
    """``L[x, t, j] = log sigma_j(A(x, n_t))``, shape ``(len(sample), len(schedule), d)``."""
    if len(sample) == 0:
        raise EmptySample("empty sample")
    sched = check_schedule(schedule)
    return c.log_svd_paths(list(sample), sched, block)


def _fit_rows(schedule, config: DominationConfig) -> np.ndarray:
    T = len(schedule)
    start = min(int(np.floor(config.fit_from * T)), T - 1)
    return np.arange(start, T)


def _domination_from_table(L: np.ndarray, schedule, k: int, config: DominationConfig) -> DominationVerdict:
    sched = np.asarray(schedule, dtype=float)
    d = L.shape[-1]
    if not 1 <= k < d:
        raise InvalidParameter(f"splitting index k={k} outside 1..{d - 1}")
    rows = _fit_rows(schedule, config)
    Y = L[:, rows, k - 1] - L[:, rows, k]
    ns = np.broadcast_to(sched[rows], Y.shape)
    x, y = ns.ravel(), Y.ravel()
    if np.ptp(x) > 0:
        A = np.column_stack([x, np.ones_like(x)])
        (rate, offset), *_ = np.linalg.lstsq(A, y, rcond=None)
    else:
        rate, offset = float(np.mean(y / x)), 0.0
    resid = y - (rate * x + offset)
    rms = float(np.sqrt(np.mean(resid**2)))
    slack = max(config.slack_factor * rms, config.slack_floor)
    margin = float(resid.min())
    dominated = bool(rate > config.rate_floor and margin >= -slack)
    return DominationVerdict(
        k=k,
        dominated=dominated,
        rate=float(rate),
        log_offset=float(offset),
        min_gap_over_sample=float((Y / ns).min()),
        residual=rms,
        min_margin=margin,
        slack=slack,
        n_min=int(sched[rows[0]]),
    )


def _hyperbolic_from_table(
    L: np.ndarray, schedule, k: int, lam: float, config: DominationConfig
) -> bool:
    """Uniform hyperbolicity of ``exp(-lam) A`` with an unstable bundle of dimension ``k``.

    ``k = 0`` (everything contracted) and ``k = d`` (everything expanded) are
    the trivial splittings.
    """
    sched = np.asarray(schedule, dtype=float)
    d = L.shape[-1]
    rows = _fit_rows(schedule, config)
    rates = L[:, rows, :] / sched[rows][None, :, None] - lam
    floor = config.rate_floor
    if k == 0:
        return bool(rates[:, :, 0].max() < -floor)
    if k == d:
        return bool(rates[:, :, d - 1].min() > floor)
    if rates[:, :, k - 1].min() <= floor or rates[:, :, k].max() >= -floor:
        return False
    return _domination_from_table(L, schedule, k, config).dominated


# ---------------------------------------------------------------------------
# public operations


def gap_series(c: Cocycle, x, k: int, schedule, block: int = DEFAULT_BLOCK) -> GapSeries:
    """``(1/n) log(sigma_k / sigma_{k+1})`` of ``A(x, n)`` along the schedule."""
    if not 1 <= k < c.dim:
        raise InvalidParameter(f"splitting index k={k} outside 1..{c.dim - 1}")
    sched = check_schedule(schedule)
    L = c.log_svd_path(x, sched, block)
    gaps = (L[:, k - 1] - L[:, k]) / np.array(sched, dtype=float)
    return GapSeries(k, tuple(sched), np.maximum(gaps, 0.0), x)


def liminf_gap(c: Cocycle, x, k: int, schedule, block: int = DEFAULT_BLOCK) -> float:
    """Smallest gap rate over the schedule (finite-horizon stand-in for the liminf)."""
    return float(gap_series(c, x, k, schedule, block).gaps.min())


def detect_domination(
    c: Cocycle, sample: Sequence, k: int, schedule, config: DominationConfig | None = None
) -> DominationVerdict:
    """Pooled least-squares fit of ``n * gap(x, n)`` against ``n`` over the sample.

    The splitting at index ``k`` is declared dominated when the fitted rate is
    above ``rate_floor`` and no sample point falls more than the slack below
    the fitted line.
    """
    config = config or DominationConfig()
    if len(sample) == 0:
        raise EmptySample("detect_domination needs a non-empty sample")
    L = log_sv_table(c, sample, schedule, config.block)
    return _domination_from_table(L, check_schedule(schedule), k, config)


def hyperbolicity_test(
    c: Cocycle, sample: Sequence, k: int, schedule, config: DominationConfig | None = None
) -> bool:
    """Dominated at ``k`` with the top ``k`` rates uniformly above ``rate_floor``
    and the remaining rates uniformly below ``-rate_floor``."""
    config = config or DominationConfig()
    if not 1 <= k < c.dim:
        raise InvalidParameter(f"splitting index k={k} outside 1..{c.dim - 1}")
    L = log_sv_table(c, sample, schedule, config.block)
    return _hyperbolic_from_table(L, check_schedule(schedule), k, 0.0, config)


def default_lambda_grid(c: Cocycle, sample: Sequence, step: float = 0.02, pad: float = 0.5) -> np.ndarray:
    """Symmetric grid ``step * j`` covering ``[-R - pad, R + pad]``, R = max |log sigma| of the generator."""
    R = 0.0
    for x in sample:
        s = np.linalg.svd(c.generator(x), compute_uv=False)
        R = max(R, abs(np.log(s[0])), abs(np.log(s[-1])))
    m = int(np.ceil((R + pad) / step - 1e-9))
    return step * np.arange(-m, m + 1)


def _merge(grid: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    intervals = []
    j = 0
    while j < len(grid):
        if mask[j]:
            start = j
            while j + 1 < len(grid) and mask[j + 1]:
                j += 1
            intervals.append((float(grid[start]), float(grid[j])))
        j += 1
    return sorted(intervals, key=lambda ab: -ab[1])


def estimate_sacker_sell(
    c: Cocycle,
    sample: Sequence,
    lam_grid=None,
    schedule=None,
    config: DominationConfig | None = None,
    grid_step: float = 0.02,
) -> SackerSellEstimate:
    """Grid values ``lam`` for which ``exp(-lam) A`` passes no hyperbolicity test,
    merged into intervals (descending)."""
    config = config or DominationConfig()
    if len(sample) == 0:
        raise EmptySample("estimate_sacker_sell needs a non-empty sample")
    if schedule is None:
        raise InvalidParameter("a schedule is required")
    sched = check_schedule(schedule)
    grid = default_lambda_grid(c, sample, grid_step) if lam_grid is None else np.asarray(lam_grid, float)
    if np.any(np.diff(grid) <= 0):
        raise InvalidParameter("lambda grid must be sorted increasing")
    L = log_sv_table(c, sample, sched, config.block)
    d = c.dim
    in_spec = np.array(
        [not any(_hyperbolic_from_table(L, sched, k, lam, config) for k in range(d + 1)) for lam in grid]
    )
    return SackerSellEstimate(_merge(grid, in_spec), grid, sched[-1], in_spec)


def oseledets_from_flags(
    Vf: np.ndarray,
    Vb: np.ndarray,
    log_sv: np.ndarray,
    n: int,
    dims: Sequence[int],
    angle_threshold: float = 0.05,
    point=None,
) -> OseledetsEstimate:
    """Build the estimate from the right singular bases ``Vf`` of ``A(x, n)`` and
    ``Vb`` of ``A(x, -n)`` and the forward log singular values."""
    dims = tuple(int(v) for v in dims)
    d = Vf.shape[0]
    D = np.concatenate([[0], np.cumsum(dims)])
    spaces, exps = [], []
    for i, di in enumerate(dims):
        F = Subspace(Vf[:, D[i]:])
        B = Subspace(Vb[:, d - D[i + 1]:])
        E, _ = intersect(F, B, di)
        spaces.append(E)
        exps.append(log_sv[D[i] : D[i + 1]].mean() / n)
    s = len(dims)
    angles = np.zeros((s, s))
    for i, j in combinations(range(s), 2):
        angles[i, j] = angles[j, i] = subspace_angle(spaces[i], spaces[j])
    est = OseledetsEstimate(spaces, np.array(exps), angles, n, dims, point)
    worst = est.min_angle
    if s > 2:
        for i in range(s):
            rest = direct_sum(*[spaces[j] for j in range(s) if j != i])
            worst = min(worst, subspace_angle(spaces[i], rest))
    if s > 1 and worst < angle_threshold:
        err = SplittingUnresolved(
            f"estimated bundles meet at angle {worst:.3g} < {angle_threshold:g} (n={n})"
        )
        err.estimate = est
        raise err
    return est


def estimate_oseledets(
    c: Cocycle,
    x,
    n: int,
    dims: Sequence[int],
    angle_threshold: float = 0.05,
    block: int = DEFAULT_BLOCK,
) -> OseledetsEstimate:
    """Oseledets subspaces at ``x`` from the forward and backward singular flags.

    ``E_i`` is the intersection of the span of the forward right singular
    vectors ``D_{i-1}+1 .. d`` with the span of the last ``D_i`` backward right
    singular vectors, ``D_i = d_1 + ... + d_i``.

    Raises
    ------
    SplittingUnresolved
        If two estimated bundles (or a bundle and the sum of the others) meet
        at an angle below ``angle_threshold``.
    """
    dims = tuple(int(v) for v in dims)
    d = c.dim
    if sum(dims) != d or any(v < 1 for v in dims):
        raise InvalidParameter(f"dims {dims} must be positive and sum to {d}")
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    fwd = c.product(x, n, block)
    bwd = c.product(x, -n, block)
    return oseledets_from_flags(
        fwd.right_singular_basis(), bwd.right_singular_basis(), fwd.log_singular_values(),
        n, dims, angle_threshold, x,
    )


def finest_dominated_splitting(
    c: Cocycle, sample: Sequence, schedule, config: DominationConfig | None = None
) -> dict[int, DominationVerdict]:
    """Domination verdict at every index ``k = 1..d-1``; the passing indices
    describe the finest dominated splitting seen at this horizon."""
    config = config or DominationConfig()
    L = log_sv_table(c, sample, schedule, config.block)
    sched = check_schedule(schedule)
    return {k: _domination_from_table(L, sched, k, config) for k in range(1, c.dim)}
