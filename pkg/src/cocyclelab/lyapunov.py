"""Finite-time Lyapunov spectra, periodic-orbit spectra, Birkhoff averages and
the sup/inf envelopes of the norm and co-norm growth rates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cocycle import DEFAULT_BLOCK, Cocycle
from .dynamics import BaseSystem, check_periodic
from .exceptions import EmptySample, InvalidParameter

FORWARD = "forward"
BACKWARD = "backward"
MODULUS_RTOL = 1e-8


def _sign(direction: str) -> int:
    if direction == FORWARD:
        return 1
    if direction == BACKWARD:
        return -1
    raise InvalidParameter(f"direction must be 'forward' or 'backward', got {direction!r}")


def point_json(x) -> dict | None:
    return x.to_json() if hasattr(x, "to_json") else None


@dataclass(frozen=True)
class FiniteTimeSpectrum:
    """``(1/n) log sigma_k(A(x, +-n))`` for k = 1..d, in nats per iterate."""

    values: np.ndarray
    n: int
    direction: str
    point: object = field(default=None, compare=False)

    def to_json(self) -> dict:
        return {
            "point": point_json(self.point),
            "n": int(self.n),
            "direction": self.direction,
            "values": [float(v) for v in self.values],
        }


@dataclass(frozen=True)
class ExactSpectrum:
    """Distinct exponents (descending) with multiplicities."""

    pairs: tuple[tuple[float, int], ...]
    point: object = field(default=None, compare=False)
    period: int | None = None

    def __post_init__(self):
        chis = [c for c, _ in self.pairs]
        if any(int(m) < 1 for _, m in self.pairs):
            raise InvalidParameter("multiplicities must be positive")
        if any(b >= a for a, b in zip(chis, chis[1:])):
            raise InvalidParameter("exponents must be strictly decreasing")

    @property
    def exponents(self) -> np.ndarray:
        return np.array([c for c, _ in self.pairs])

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.pairs)

    def expanded(self) -> np.ndarray:
        return np.repeat(self.exponents, self.multiplicities)

    def to_json(self) -> dict:
        return {
            "point": point_json(self.point),
            "period": self.period,
            "pairs": [[float(c), int(m)] for c, m in self.pairs],
        }


@dataclass(frozen=True)
class SupEnvelope:
    schedule: tuple[int, ...]
    sup_values: np.ndarray
    inf_values: np.ndarray

    def to_json(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "sup_values": [float(v) for v in self.sup_values],
            "inf_values": [float(v) for v in self.inf_values],
        }


def geometric_schedule(max_n: int, start_exp: int = 4, stop_exp: int = 20) -> list[int]:
    """Powers of two ``2^start_exp .. 2^stop_exp`` not exceeding ``max_n``.

    ``max_n`` itself is appended when it is not a power of two.
    """
    sched = [2**e for e in range(start_exp, stop_exp + 1) if 2**e <= max_n]
    if max_n >= 1 and (not sched or sched[-1] != max_n) and max_n <= 2**stop_exp:
        sched.append(int(max_n))
    return sched


def check_schedule(schedule) -> list[int]:
    sched = [int(n) for n in schedule]
    if not sched:
        raise InvalidParameter("empty schedule")
    if sched[0] < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise InvalidParameter("schedule must be strictly increasing positive integers")
    return sched


def finite_time_spectrum(
    c: Cocycle, x, n: int, direction: str = FORWARD, block: int = DEFAULT_BLOCK
) -> FiniteTimeSpectrum:
    if n < 1:
        raise InvalidParameter("horizon must be >= 1")
    s = _sign(direction)
    values = c.stabilized_log_svd(x, s * n, block) / n
    return FiniteTimeSpectrum(values, n, direction, x)


def spectrum_path(
    c: Cocycle, x, schedule, direction: str = FORWARD, block: int = DEFAULT_BLOCK
) -> np.ndarray:
    """Finite-time spectra for every horizon of ``schedule`` in one pass; shape ``(len, d)``."""
    sched = check_schedule(schedule)
    s = _sign(direction)
    L = c.log_svd_path(x, [s * n for n in sched], block)
    return L / np.array(sched, dtype=float)[:, None]


def group_exponents(values, rtol: float = MODULUS_RTOL, atol: float = 0.0) -> tuple[tuple[float, int], ...]:
    """Cluster descending ``values`` into ``(exponent, multiplicity)`` pairs."""
    vals = np.sort(np.asarray(values, dtype=float))[::-1]
    groups: list[list[float]] = []
    for v in vals:
        if groups:
            ref = groups[-1][0]
            if abs(ref - v) <= atol + rtol * max(abs(ref), abs(v)):
                groups[-1].append(v)
                continue
        groups.append([v])
    return tuple((float(np.mean(g)), len(g)) for g in groups)


def periodic_spectrum(c: Cocycle, p, period: int) -> ExactSpectrum:
    """Lyapunov spectrum at a periodic point from the eigenvalues of ``A(p, period)``.

    Eigenvalue moduli equal to relative tolerance 1e-8 are merged into one
    exponent with multiplicity.

    Raises
    ------
    NotPeriodic
        If ``f^period(p) != p``.
    """
    check_periodic(c.system, p, period)
    M = c.evaluate(p, period)
    moduli = np.abs(np.linalg.eigvals(M))
    moduli = np.sort(moduli)[::-1]
    pairs = []
    for m in moduli:
        if pairs and abs(pairs[-1][0] - m) <= MODULUS_RTOL * max(pairs[-1][0], m):
            pairs[-1][1].append(m)
        else:
            pairs.append((m, [m]))
    out = tuple((float(np.log(np.mean(g)) / period), len(g)) for _, g in pairs)
    return ExactSpectrum(out, p, period)


def spectrum_distance(a: ExactSpectrum, b: ExactSpectrum) -> float:
    """Max ``|delta chi|`` over matched exponents; ``inf`` if multiplicity patterns differ."""
    if a.multiplicities != b.multiplicities:
        return float("inf")
    return float(np.max(np.abs(a.exponents - b.exponents)))


def finite_spectrum_distance(u, v) -> float:
    """Sum of ``|u_k - v_k|`` over the multiplicity-expanded, sorted values."""
    u = np.sort(np.asarray(u, dtype=float))[::-1]
    v = np.sort(np.asarray(v, dtype=float))[::-1]
    if u.shape != v.shape:
        return float("inf")
    return float(np.sum(np.abs(u - v)))


def birkhoff_average(
    system: BaseSystem,
    phi: Callable,
    x,
    n: int,
    direction: str = FORWARD,
    vectorized: bool = False,
) -> float:
    """``(1/n) sum_{j<n} phi(f^{+-j} x)``.

    With ``vectorized=True``, ``phi`` receives ``system.orbit_data`` arrays
    (coordinates or symbols) instead of point objects.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    s = _sign(direction)
    if s > 0:
        if vectorized:
            vals = np.asarray(phi(system.orbit_data(x, n)), dtype=float)
        else:
            vals = np.array([phi(p) for p in system.orbit(x, n)], dtype=float)
        return float(vals.sum() / n)
    if vectorized:
        here = np.asarray(phi(system.orbit_data(x, 1)), dtype=float)
        back = np.asarray(phi(system.orbit_data(x, -(n - 1))), dtype=float) if n > 1 else np.zeros(0)
        vals = np.concatenate([here, back])
    else:
        pts = [x] + (system.orbit(x, -(n - 1)) if n > 1 else [])
        vals = np.array([phi(p) for p in pts], dtype=float)
    return float(vals.sum() / n)


def sup_envelope(
    c: Cocycle, sample: Sequence, schedule, block: int = DEFAULT_BLOCK
) -> SupEnvelope:
    """Max over the sample of ``(1/n) log ||A(x,n)||`` and min of ``(1/n) log m(A(x,n))``."""
    if len(sample) == 0:
        raise EmptySample("sup_envelope needs at least one point")
    sched = check_schedule(schedule)
    paths = np.array([spectrum_path(c, x, sched, FORWARD, block) for x in sample])
    return SupEnvelope(tuple(sched), paths[:, :, 0].max(axis=0), paths[:, :, -1].min(axis=0))
