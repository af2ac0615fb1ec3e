"""Pointwise regularity probes, complete-regularity tests over samples and
finite oscillation witnesses.

None of these can certify a limit.  A probe compares the forward and backward
finite-time spectra at a few checkpoints, asks whether they agree and keep
agreeing, and watches the angles between the estimated bundles as they are
pushed along the orbit.  The verdict is one of three labels and always comes
with the numbers behind it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cocycle import DEFAULT_BLOCK, Cocycle
from .exceptions import EmptySample, InvalidParameter, SplittingUnresolved
from .linalg import Subspace, direct_sum, subspace_angle
from .lyapunov import (
    BACKWARD,
    FORWARD,
    FiniteTimeSpectrum,
    check_schedule,
    finite_spectrum_distance,
    group_exponents,
    point_json,
)
from .splitting import oseledets_from_flags

REGULAR = "regular_consistent"
IRREGULAR = "irregular_evidence"
INCONCLUSIVE = "inconclusive"

CONSISTENT = "consistent_with_complete_regularity"
NOT_REGULAR = "not_completely_regular"


@dataclass(frozen=True)
class ProbeConfig:
    tol: float = 0.02
    angle_threshold: float = 0.05
    block: int = DEFAULT_BLOCK


@dataclass(frozen=True)
class RegularityReport:
    """Finite-horizon regularity evidence at one point.

    ``discrepancy`` is ``max_k |chi_k^+ + chi_{d+1-k}^-|``: at a regular point
    the backward spectrum is the negated, reversed forward one.
    ``convergence_half_life`` is the largest change of either spectrum between
    horizons ``n/2`` and ``n``.  ``angle_decay_rate`` is the fitted slope of the
    log of the minimal angle between complementary bundles along the orbit.
    """

    forward_spectrum: FiniteTimeSpectrum
    backward_spectrum: FiniteTimeSpectrum
    discrepancy: float
    checkpoint_discrepancies: tuple[tuple[int, float], ...]
    angle_decay_rate: float
    angles: tuple[tuple[int, float], ...]
    convergence_half_life: float
    dims: tuple[int, ...]
    verdict: str
    reason: str
    n: int
    point: object = field(default=None, compare=False)

    def summary_line(self) -> str:
        where = point_json(self.point) or {}
        tag = ",".join(f"{k}={v}" for k, v in where.items() if k != "type")
        top = self.forward_spectrum.values[0]
        return (
            f"[{tag}] n={self.n} chi1={top:+.6f} disc={self.discrepancy:.4g} "
            f"angle_rate={self.angle_decay_rate:+.3g} -> {self.verdict} ({self.reason})"
        )

    def to_json(self) -> dict:
        return {
            "point": point_json(self.point),
            "n": int(self.n),
            "forward": [float(v) for v in self.forward_spectrum.values],
            "backward": [float(v) for v in self.backward_spectrum.values],
            "discrepancy": float(self.discrepancy),
            "checkpoint_discrepancies": [[int(m), float(v)] for m, v in self.checkpoint_discrepancies],
            "angle_decay_rate": float(self.angle_decay_rate),
            "angles": [[int(m), float(a)] for m, a in self.angles],
            "convergence_half_life": float(self.convergence_half_life),
            "dims": list(self.dims),
            "verdict": self.verdict,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CompleteRegularityReport:
    reports: list[RegularityReport]
    per_point_spectra: np.ndarray
    spectrum_spread: float
    uniformity_deficit: float
    verdict: str
    n: int

    def verdict_counts(self) -> dict[str, int]:
        out = {REGULAR: 0, IRREGULAR: 0, INCONCLUSIVE: 0}
        for r in self.reports:
            out[r.verdict] += 1
        return out

    def to_json(self) -> dict:
        return {
            "n": int(self.n),
            "verdict": self.verdict,
            "spectrum_spread": float(self.spectrum_spread),
            "uniformity_deficit": float(self.uniformity_deficit),
            "verdict_counts": self.verdict_counts(),
            "points": [r.to_json() for r in self.reports],
        }


@dataclass(frozen=True)
class WitnessReport:
    alpha: float
    beta: float
    i_witnesses: list[tuple[int, int, float]]
    i_failures: list[int]
    s_witnesses: list[tuple[int, int, float]]
    s_failures: list[int]

    def to_json(self) -> dict:
        def rows(ws):
            return [{"index": i, "n": n, "value": float(v)} for i, n, v in ws]

        return {
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "i_witnesses": rows(self.i_witnesses),
            "i_failures": list(self.i_failures),
            "s_witnesses": rows(self.s_witnesses),
            "s_failures": list(self.s_failures),
        }


def _aligned_discrepancy(fwd: np.ndarray, bwd: np.ndarray) -> float:
    return float(np.max(np.abs(fwd + bwd[::-1])))


def _checkpoints(n: int) -> list[int]:
    return sorted({max(1, n // 4), max(1, n // 2), n})


def _angle_tracks(c: Cocycle, xs: list, n: int, dims, spaces: list, Vf: np.ndarray, block: int):
    """Minimal angle between the fast sum ``E_1 + .. + E_j`` pushed forward to
    ``f^m x`` and the slow flag of ``A(f^m x, n - m)``, over all ``j``, for a
    group of points sharing ``dims``.

    The fast sums are pushed (a stable direction); the slow sums are re-read
    from forward singular vectors at the checkpoint, since pushing a slow
    bundle forward amplifies its rounding error.  ``Vf`` holds the forward
    right singular bases at ``m = 0``.
    """
    D = np.cumsum(dims)
    ms = sorted({0, n // 8, n // 4, n // 2})
    later = [m for m in ms if m > 0]
    fast = [
        np.stack([direct_sum(*sp[: j + 1]).basis for sp in spaces]) for j in range(len(dims) - 1)
    ]
    pushed = [c.push_forward_many(xs, F, later, block) for F in fast]
    tracks = [[] for _ in xs]
    for m in ms:
        if m == 0:
            V = Vf
        else:
            ys = [c.system.step(x, m) for x in xs]
            V = c.products(ys, n - m, block).right_singular_basis()
        for s in range(len(xs)):
            worst = np.pi / 2
            for j in range(len(fast)):
                Fm = fast[j][s] if m == 0 else pushed[j][later.index(m)][s]
                worst = min(worst, subspace_angle(Subspace(Fm), Subspace(V[s][:, D[j]:])))
            tracks[s].append((m, float(worst)))
    return tracks


def _decay_rate(track) -> float:
    ms = np.array([m for m, _ in track], dtype=float)
    la = np.log(np.maximum([a for _, a in track], 1e-300))
    if len(ms) < 2 or np.ptp(ms) == 0:
        return 0.0
    return float(np.polyfit(ms, la, 1)[0])


def probe_points(c: Cocycle, xs: Sequence, n: int, config: ProbeConfig | None = None) -> list[RegularityReport]:
    """:func:`probe_point` for several points, sharing the product computations."""
    config = config or ProbeConfig()
    xs = list(xs)
    if n < 2:
        raise InvalidParameter("probe horizon must be >= 2")
    if not xs:
        return []
    for x in xs:
        c.system.check_range(x, n)
        c.system.check_range(x, -n)
    tol = config.tol
    cps = _checkpoints(n)
    scale = np.array(cps, dtype=float)[None, :, None]
    Lf, pf = c.log_svd_paths(xs, cps, config.block, return_product=True)
    Lb, pb = c.log_svd_paths(xs, [-m for m in cps], config.block, return_product=True)
    F, B = Lf / scale, Lb / scale
    Vf, Vb = pf.right_singular_basis(), pb.right_singular_basis()
    half = cps.index(max(1, n // 2))

    dims_all, spaces_all, unresolved = [], [], []
    for s, x in enumerate(xs):
        dims = tuple(m for _, m in group_exponents(F[s, -1], rtol=0.0, atol=tol))
        dims_all.append(dims)
        spaces_all.append(None)
        unresolved.append(None)
        if len(dims) > 1:
            try:
                est = oseledets_from_flags(Vf[s], Vb[s], Lf[s, -1], n, dims, config.angle_threshold, x)
                spaces_all[s] = est.subspaces
            except SplittingUnresolved as err:
                unresolved[s] = str(err)

    tracks = [[] for _ in xs]
    groups: dict[tuple, list[int]] = {}
    for s, sp in enumerate(spaces_all):
        if sp is not None:
            groups.setdefault(dims_all[s], []).append(s)
    for dims, idx in groups.items():
        got = _angle_tracks(
            c, [xs[s] for s in idx], n, dims, [spaces_all[s] for s in idx], Vf[idx], config.block
        )
        for s, tr in zip(idx, got):
            tracks[s] = tr

    reports = []
    for s, x in enumerate(xs):
        discs = [_aligned_discrepancy(F[s, t], B[s, t]) for t in range(len(cps))]
        disc = discs[-1]
        change = float(max(np.abs(F[s, -1] - F[s, half]).max(), np.abs(B[s, -1] - B[s, half]).max()))
        rate = _decay_rate(tracks[s]) if tracks[s] else 0.0
        growing = all(b >= a for a, b in zip(discs, discs[1:]))
        if unresolved[s] is not None:
            verdict, reason = IRREGULAR, f"splitting unresolved: {unresolved[s]}"
        elif disc > tol and (growing or min(discs) > tol):
            verdict, reason = IRREGULAR, "forward/backward spectra disagree and the gap persists"
        elif rate < -tol:
            verdict, reason = IRREGULAR, "bundle angles decay exponentially"
        elif disc <= tol and abs(rate) <= tol and change < tol / 2:
            verdict, reason = REGULAR, "spectra agree, angles stable, horizon doubling consistent"
        else:
            verdict, reason = INCONCLUSIVE, "no decisive evidence at this horizon"
        reports.append(
            RegularityReport(
                forward_spectrum=FiniteTimeSpectrum(F[s, -1], n, FORWARD, x),
                backward_spectrum=FiniteTimeSpectrum(B[s, -1], n, BACKWARD, x),
                discrepancy=disc,
                checkpoint_discrepancies=tuple(zip(cps, discs)),
                angle_decay_rate=rate,
                angles=tuple(tracks[s]),
                convergence_half_life=change,
                dims=dims_all[s],
                verdict=verdict,
                reason=reason,
                n=n,
                point=x,
            )
        )
    return reports


def probe_point(c: Cocycle, x, n: int, config: ProbeConfig | None = None) -> RegularityReport:
    """Forward/backward spectra at ``n/4, n/2, n`` and the bundle angles along the orbit.

    Raises
    ------
    WindowExhausted
        If a symbolic window cannot support ``+-n`` steps from ``x``.
    """
    return probe_points(c, [x], n, config)[0]


def spectrum_spread(spectra) -> float:
    """Largest pairwise L1 distance between (sorted) finite-time spectra."""
    S = [np.asarray(s, dtype=float) for s in spectra]
    worst = 0.0
    for i in range(len(S)):
        for j in range(i + 1, len(S)):
            worst = max(worst, finite_spectrum_distance(S[i], S[j]))
    return worst


def probe_complete_regularity(
    c: Cocycle, sample: Sequence, n: int, config: ProbeConfig | None = None
) -> CompleteRegularityReport:
    """Probe every sample point and compare the spectra across points."""
    config = config or ProbeConfig()
    if len(sample) == 0:
        raise EmptySample("probe_complete_regularity needs a non-empty sample")
    reports = probe_points(c, sample, n, config)
    spectra = np.array([r.forward_spectrum.values for r in reports])
    spread = spectrum_spread(spectra)
    deficit = float(np.max(np.abs(spectra - np.median(spectra, axis=0))))
    verdicts = {r.verdict for r in reports}
    if spread > config.tol or deficit > config.tol or IRREGULAR in verdicts:
        verdict = NOT_REGULAR
    elif verdicts == {REGULAR}:
        verdict = CONSISTENT
    else:
        verdict = INCONCLUSIVE
    return CompleteRegularityReport(reports, spectra, spread, deficit, verdict, n)


def oscillation_witness(
    c: Cocycle,
    sample_I: Sequence,
    sample_S: Sequence,
    alpha: float,
    beta: float,
    schedule,
    block: int = DEFAULT_BLOCK,
) -> WitnessReport:
    """Finite-horizon membership of ``sample_I`` in ``{phi_n < alpha}`` and of
    ``sample_S`` in ``{phi_n > beta}``, ``phi_n = (1/n) log ||A(x, n)||``.

    Each witness records the first schedule time that achieves the bound.
    """
    if not alpha < beta:
        raise InvalidParameter(f"need alpha < beta, got {alpha} >= {beta}")
    sched = check_schedule(schedule)

    def scan(sample, hit):
        found, failed = [], []
        if not len(sample):
            return found, failed
        Phi = c.log_svd_paths(list(sample), sched, block)[:, :, 0] / np.array(sched, dtype=float)
        for i, phi in enumerate(Phi):
            idx = np.flatnonzero(hit(phi))
            if idx.size:
                t = int(idx[0])
                found.append((i, sched[t], float(phi[t])))
            else:
                failed.append(i)
        return found, failed

    i_found, i_failed = scan(sample_I, lambda p: p < alpha)
    s_found, s_failed = scan(sample_S, lambda p: p > beta)
    return WitnessReport(float(alpha), float(beta), i_found, i_failed, s_found, s_failed)


def common_exponent(values, width: float = 0.05) -> tuple[float, int]:
    """Centre and size of the most populated window ``[v - width, v + width]``.

    Used to estimate the shared top exponent of regular-looking points; ties
    go to the larger value.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise EmptySample("no values")
    best = (0, -np.inf)
    for lo in range(v.size):
        hi = np.searchsorted(v, v[lo] + 2 * width, side="right")
        count = hi - lo
        centre = float(0.5 * (v[lo] + v[hi - 1]))
        if (count, centre) > best:
            best = (count, centre)
    return best[1], int(best[0])
