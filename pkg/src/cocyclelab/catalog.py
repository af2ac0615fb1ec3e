"""Named system/cocycle pairs with documented expected diagnostics.

Every expectation carries a provenance tag:

``PAPER``
    stated for this construction in the literature the package follows;
``TRIVIAL``
    immediate from the construction (a constant diagonal, a determinant);
``DERIVED``
    computed by an independent oracle (eigenvalues, hand expansion).

``check_expectation`` evaluates one expectation with the package's own
diagnostics, so the catalog doubles as a regression suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cocycle import Cocycle, GeneratorCocycle
from .dynamics import (
    CirclePoint,
    Rotation,
    Subshift,
    SymbolicPoint,
    ToralAutomorphism,
    TorusPoint,
    TwistMap,
    block_offsets,
    junction_offsets,
    sample_points,
)
from .exceptions import InvalidParameter, InvalidSpectrumShape
from .lyapunov import (
    FORWARD,
    check_schedule,
    finite_time_spectrum,
    geometric_schedule,
    periodic_spectrum,
)
from .regularity import (
    CONSISTENT,
    IRREGULAR,
    REGULAR,
    ProbeConfig,
    common_exponent,
    probe_complete_regularity,
)
from .splitting import DominationConfig, detect_domination, estimate_sacker_sell, hyperbolicity_test

PROVENANCE = ("PAPER", "TRIVIAL", "DERIVED")
GOLDEN_LOG = float(np.log((3 + np.sqrt(5)) / 2))


@dataclass(frozen=True)
class Expectation:
    key: str
    value: object
    provenance: str
    tol: float = 0.0
    note: str = ""

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "value": self.value,
            "provenance": self.provenance,
            "tol": self.tol,
            "note": self.note,
        }


@dataclass(frozen=True)
class NamedExample:
    """A base system, a cocycle over it and what the diagnostics should report.

    ``horizon``, ``sample_count``, ``seed`` and ``margin`` fix the run used to
    check the expectations.  ``points`` overrides random sampling when the
    example needs a specific grid (the twist map samples distinct heights).
    """

    name: str
    system: object
    cocycle: Cocycle
    expected: tuple[Expectation, ...]
    description: str = ""
    params: dict = field(default_factory=dict)
    periodic: tuple = ()
    horizon: int = 2**12
    sample_count: int = 16
    seed: int = 0
    margin: int = 0
    points: tuple | None = None

    @property
    def dim(self) -> int:
        return self.cocycle.dim

    def sample(self, count: int | None = None, seed: int | None = None, margin: int | None = None) -> list:
        if self.points is not None and count is None:
            return list(self.points)
        count = self.sample_count if count is None else count
        seed = self.seed if seed is None else seed
        margin = self.margin if margin is None else margin
        return sample_points(self.system, count, seed, margin)

    def schedule(self, horizon: int | None = None) -> list[int]:
        return geometric_schedule(horizon or self.horizon)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "system": self.system.to_json(),
            "dim": self.dim,
            "params": self.params,
            "horizon": self.horizon,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "periodic": [
                {"point": p.to_json(), "period": q} for p, q in self.periodic
            ],
            "expected": [e.to_json() for e in self.expected],
        }


def _exp(key, value, provenance, tol=0.0, note="") -> Expectation:
    if provenance not in PROVENANCE:
        raise InvalidParameter(f"unknown provenance {provenance!r}")
    return Expectation(key, value, provenance, tol, note)


def _rot(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


# ---------------------------------------------------------------------------
# constructors


def walters_cocycle(level: int = 6) -> NamedExample:
    """Antidiagonal cocycle ``[[0, e^phi], [e^-phi, 0]]`` over the subshift,
    ``phi`` = the current symbol (+1, -1 or 0)."""
    if level < 2:
        raise InvalidParameter("walters_cocycle needs level >= 2")
    system = Subshift(level)

    def batch(symbols):
        phi = np.asarray(symbols, dtype=float)
        out = np.zeros((len(phi), 2, 2))
        out[:, 0, 1] = np.exp(phi)
        out[:, 1, 0] = np.exp(-phi)
        return out

    coc = GeneratorCocycle(
        system,
        generator=lambda p: batch([p.symbol])[0],
        dim=2,
        label=f"walters(level={level})",
        batch=batch,
    )
    horizon = min(2**12, len(system.word) // 4)
    expected = (
        _exp("det_abs", 1.0, "DERIVED", 1e-12, "antidiagonal determinant is -1"),
        _exp("dominated", {"1": False}, "PAPER"),
        _exp("uniformly_hyperbolic", {"1": False}, "PAPER"),
        _exp("completely_regular", False, "PAPER"),
        _exp("sacker_sell_contains_zero", True, "PAPER"),
        _exp("common_top_exponent_positive", True, "PAPER", 0.05,
             "regular-looking points share a top exponent c > 0; c itself is estimated, not asserted"),
    )
    return NamedExample(
        "walters", system, coc, expected,
        "Walters cocycle over the Veech-like subshift (window e_K)",
        {"level": level}, (), horizon, min(64, len(system.word) - 2 * horizon), 0, horizon,
    )


def cos2pi(y):
    return np.cos(2 * np.pi * np.asarray(y, dtype=float))


def twist_diagonal(h: Callable | None = None, label: str = "cos2pi") -> NamedExample:
    """``diag(e^{h(y)}, e^{-h(y)})`` over the twist ``(x, y) -> (x + y, y)``.

    ``h`` must accept numpy arrays.  Every point is regular with exponents
    ``+-h(y)`` since ``y`` is invariant.
    """
    h = cos2pi if h is None else h
    system = TwistMap()

    def batch(coords):
        hy = np.asarray(h(np.asarray(coords)[:, 1]), dtype=float)
        out = np.zeros((len(hy), 2, 2))
        out[:, 0, 0] = np.exp(hy)
        out[:, 1, 1] = np.exp(-hy)
        return out

    coc = GeneratorCocycle(
        system,
        generator=lambda p: batch(np.array([[float(p.x), float(p.y)]]))[0],
        dim=2,
        label=f"twist_diagonal({label})",
        batch=batch,
    )
    pts = tuple(TorusPoint(Fraction(1, 3), Fraction(j, 10)) for j in range(10))
    periodic = ((TorusPoint(0, 0), 1), (TorusPoint(0, Fraction(1, 2)), 2))
    expected = [
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("lp_regular_everywhere", True, "PAPER"),
        _exp("exponents_vary", True, "PAPER", 0.02),
        _exp("completely_regular", False, "PAPER"),
    ]
    if label == "cos2pi":
        expected += [
            _exp("spectrum_at", [{"point": [0, 0], "values": [1.0, -1.0]},
                                 {"point": ["0", "1/4"], "values": [0.0, 0.0]}], "TRIVIAL", 1e-9),
            _exp("periodic_spectra", [{"point": ["0", "0"], "period": 1, "pairs": [[1.0, 1], [-1.0, 1]]},
                                      {"point": ["0", "1/2"], "period": 2, "pairs": [[1.0, 1], [-1.0, 1]]}],
                 "TRIVIAL", 1e-9),
        ]
    return NamedExample(
        "twist_diagonal", system, coc, tuple(expected),
        "diagonal cocycle over the torus twist map", {"h": label},
        periodic, 2**12, 10, 0, 0, pts,
    )


def anosov_derivative() -> NamedExample:
    """Constant generator ``[[2, 1], [1, 1]]`` over the cat map."""
    system = ToralAutomorphism(((2, 1), (1, 1)))
    coc = GeneratorCocycle(system, constant=[[2.0, 1.0], [1.0, 1.0]], label="anosov_derivative")
    p2 = next(p for p in system.periodic_points(2) if (p.x, p.y) != (0, 0))
    pairs = [[GOLDEN_LOG, 1], [-GOLDEN_LOG, 1]]
    expected = (
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("spectrum", [GOLDEN_LOG, -GOLDEN_LOG], "DERIVED", 1e-6, "log of the eigenvalues of [[2,1],[1,1]]"),
        _exp("periodic_spectra", [{"point": ["0", "0"], "period": 1, "pairs": pairs},
                                  {"point": [str(p2.x), str(p2.y)], "period": 2, "pairs": pairs}],
             "DERIVED", 1e-9),
        _exp("dominated", {"1": True}, "DERIVED"),
        _exp("domination_rate", {"1": 2 * GOLDEN_LOG}, "DERIVED", 0.02),
        _exp("uniformly_hyperbolic", {"1": True}, "DERIVED"),
        _exp("completely_regular", True, "DERIVED"),
        _exp("sacker_sell_discrete", True, "DERIVED"),
    )
    return NamedExample(
        "anosov_derivative", system, coc, expected,
        "derivative cocycle of the cat map", {},
        ((TorusPoint(0, 0), 1), (p2, 2)), 2**12, 8, 0, 0,
    )


def block_regular(
    c_list: Sequence[float],
    d_list: Sequence[int],
    rotation_speeds: Sequence[float] | None = None,
    coupling: Callable | None = None,
) -> NamedExample:
    """Block-diagonal ``e^{c_i} U_i(x)`` over the golden rotation.

    ``U_i`` rotates consecutive coordinate pairs by ``2 pi speed_i x`` (a
    trailing odd coordinate is left fixed).  ``coupling(x)``, if given, fills
    the strictly upper block-triangular part, which leaves the spectrum alone.
    """
    c_list = [float(v) for v in c_list]
    d_list = [int(v) for v in d_list]
    if len(c_list) != len(d_list) or not c_list:
        raise InvalidSpectrumShape("c_list and d_list must be non-empty and of equal length")
    if any(v < 1 for v in d_list):
        raise InvalidSpectrumShape("block dimensions must be positive")
    if any(b >= a for a, b in zip(c_list, c_list[1:])):
        raise InvalidSpectrumShape("c_list must be strictly decreasing")
    speeds = [1.0] * len(c_list) if rotation_speeds is None else [float(s) for s in rotation_speeds]
    if len(speeds) != len(c_list):
        raise InvalidSpectrumShape("one rotation speed per block")
    d = sum(d_list)
    starts = np.concatenate([[0], np.cumsum(d_list)])
    system = Rotation()

    def batch(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros((len(xs), d, d))
        for i, (ci, di, si) in enumerate(zip(c_list, d_list, speeds)):
            a = starts[i]
            scale = np.exp(ci)
            for j in range(0, di - 1, 2):
                out[:, a + j : a + j + 2, a + j : a + j + 2] = scale * _rot(2 * np.pi * si * xs)
            if di % 2:
                out[:, a + di - 1, a + di - 1] = scale
        if coupling is not None:
            w = np.asarray(coupling(xs), dtype=float)
            for i in range(len(d_list)):
                out[:, starts[i] : starts[i + 1], starts[i + 1] :] = w[:, None, None]
        return out

    coc = GeneratorCocycle(
        system,
        generator=lambda p: batch([float(p.x)])[0],
        dim=d,
        label=f"block_regular(c={c_list}, d={d_list})",
        batch=batch,
    )
    expected = [
        _exp("spectrum_pairs", [[c, m] for c, m in zip(c_list, d_list)], "PAPER", 0.01),
        _exp("completely_regular", True, "PAPER"),
        _exp("sacker_sell_discrete", True, "DERIVED"),
    ]
    if len(c_list) > 1:
        ks = {str(int(starts[i + 1])): True for i in range(len(c_list) - 1)}
        rates = {str(int(starts[i + 1])): c_list[i] - c_list[i + 1] for i in range(len(c_list) - 1)}
        expected += [_exp("dominated", ks, "DERIVED"), _exp("domination_rate", rates, "DERIVED", 0.05)]
    if abs(sum(c * m for c, m in zip(c_list, d_list))) < 1e-15:
        expected.append(_exp("det_abs", 1.0, "TRIVIAL", 1e-12))
    return NamedExample(
        "block_regular", system, coc, tuple(expected),
        "block-diagonal normal form with rotation blocks",
        {"c_list": c_list, "d_list": d_list, "rotation_speeds": speeds, "coupled": coupling is not None},
        (), 2**12, 16, 0, 0,
    )


def herman_sl2(lam: float = 2.0) -> NamedExample:
    """``R(2 pi x) diag(lam, 1/lam)`` over the golden rotation.

    ``lam = 1`` is accepted as the isometric boundary case.  Only structural
    expectations are recorded; the top exponent is reported by the
    diagnostics, not claimed here.
    """
    lam = float(lam)
    if not lam >= 1.0:
        raise InvalidParameter(f"herman_sl2 needs lam >= 1, got {lam}")
    system = Rotation()
    D = np.diag([lam, 1.0 / lam])

    def batch(xs):
        return _rot(2 * np.pi * np.asarray(xs, dtype=float)) @ D

    coc = GeneratorCocycle(
        system, generator=lambda p: batch([float(p.x)])[0], dim=2, label=f"herman_sl2({lam:g})", batch=batch
    )
    expected = [
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("symmetric_spectrum", True, "TRIVIAL", 1e-9),
    ]
    if lam == 1.0:
        expected.append(_exp("spectrum", [0.0, 0.0], "TRIVIAL", 1e-9))
    return NamedExample(
        "herman_sl2", system, coc, tuple(expected),
        "SL(2,R) cocycle: rotation composed with a fixed hyperbolic matrix", {"lam": lam},
        (), 2**12, 8, 0, 0,
    )


PERIODIC_PAIR_MODES = ("standard", "perturbed", "uniform")


def periodic_pair_example(mode: str = "standard") -> NamedExample:
    """Diagonal cocycle over the half-turn ``x -> x + 1/2``.

    ``standard``: ``diag(e, 1/e)`` on ``[0, 1/2)``, ``diag(e^3, e^-3)`` on
    ``[1/2, 1)``; every orbit has spectrum +-2.
    ``perturbed``: as standard but ``diag(e, 1/e)`` on ``[3/4, 1)`` too, so the
    orbit of 1/4 has spectrum +-1 while the orbit of 0 keeps +-2.
    ``uniform``: ``diag(e, 1/e)`` everywhere.
    """
    if mode not in PERIODIC_PAIR_MODES:
        raise InvalidParameter(f"mode must be one of {PERIODIC_PAIR_MODES}")
    system = Rotation(Fraction(1, 2))

    def batch(xs):
        xs = np.asarray(xs, dtype=float)
        a = np.ones_like(xs)
        if mode != "uniform":
            a = np.where(xs >= 0.5, 3.0, 1.0)
        if mode == "perturbed":
            a = np.where(xs >= 0.75, 1.0, a)
        out = np.zeros((len(xs), 2, 2))
        out[:, 0, 0] = np.exp(a)
        out[:, 1, 1] = np.exp(-a)
        return out

    coc = GeneratorCocycle(
        system, generator=lambda p: batch([float(p.x)])[0], dim=2, label=f"periodic_pair({mode})", batch=batch
    )
    two = [[2.0, 1], [-2.0, 1]]
    one = [[1.0, 1], [-1.0, 1]]
    spec0 = one if mode == "uniform" else two
    spec4 = two if mode == "standard" else one
    expected = (
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("periodic_spectra", [{"point": ["0"], "period": 2, "pairs": spec0},
                                  {"point": ["1/4"], "period": 2, "pairs": spec4}], "DERIVED", 1e-9,
             "2x2 diagonal products over each orbit"),
        _exp("completely_regular", mode != "perturbed", "DERIVED"),
    )
    name = "periodic_pair" if mode == "standard" else f"periodic_pair_{mode}"
    points = tuple(CirclePoint(Fraction(j, 8)) for j in range(8))
    return NamedExample(
        name, system, coc, expected,
        "period-2 diagonal cocycle used to compare periodic spectra", {"mode": mode},
        ((CirclePoint(0), 2), (CirclePoint(Fraction(1, 4)), 2)), 2**10, 8, 0, 0, points,
    )


def identity_example(d: int = 2) -> NamedExample:
    system = Rotation()
    coc = GeneratorCocycle(system, constant=np.eye(d), label=f"identity({d})")
    expected = (
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("spectrum", [0.0] * d, "TRIVIAL", 1e-12),
        _exp("dominated", {str(k): False for k in range(1, d)}, "TRIVIAL"),
        _exp("completely_regular", True, "TRIVIAL"),
        _exp("sacker_sell_discrete", True, "TRIVIAL"),
    )
    return NamedExample("identity", system, coc, expected, "identity cocycle (negative control)",
                        {"d": d}, (), 2**10, 8)


def rotation_example(theta: float = 1.0) -> NamedExample:
    system = Rotation()
    coc = GeneratorCocycle(system, constant=_rot(np.array(theta)), label=f"rotation({theta:g})")
    expected = (
        _exp("det_abs", 1.0, "TRIVIAL", 1e-12),
        _exp("spectrum", [0.0, 0.0], "TRIVIAL", 1e-12),
        _exp("dominated", {"1": False}, "TRIVIAL"),
        _exp("completely_regular", True, "TRIVIAL"),
        _exp("sacker_sell_discrete", True, "TRIVIAL"),
    )
    return NamedExample("rotation", system, coc, expected, "constant rotation cocycle (negative control)",
                        {"theta": theta}, (), 2**10, 8)


REGISTRY: dict[str, Callable[[], NamedExample]] = {
    "walters": walters_cocycle,
    "twist_diagonal": twist_diagonal,
    "anosov_derivative": anosov_derivative,
    "block_regular": lambda: block_regular((1.0, -1.0), (1, 1)),
    "block_regular_rot": lambda: block_regular((1.0, -1.0), (2, 2), (1.0, 2.0)),
    "herman_sl2": herman_sl2,
    "periodic_pair": periodic_pair_example,
    "periodic_pair_perturbed": lambda: periodic_pair_example("perturbed"),
    "periodic_pair_uniform": lambda: periodic_pair_example("uniform"),
    "identity": identity_example,
    "rotation": rotation_example,
}


def names() -> list[str]:
    return sorted(REGISTRY)


def get(name: str) -> NamedExample:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise InvalidParameter(f"unknown example {name!r}; known: {', '.join(names())}") from None


def describe(name: str) -> str:
    ex = get(name)
    lines = [f"{ex.name}: {ex.description}", f"  system: {ex.system!r}", f"  dim: {ex.dim}"]
    if ex.params:
        lines.append(f"  params: {json.dumps(ex.params, sort_keys=True)}")
    lines.append(f"  check run: horizon={ex.horizon} sample={ex.sample_count} seed={ex.seed}")
    for e in ex.expected:
        tol = f" (tol {e.tol:g})" if e.tol else ""
        lines.append(f"  [{e.provenance}] {e.key} = {json.dumps(e.value)}{tol}")
    return "\n".join(lines)


def export_expectations(names_: Sequence[str] | None = None) -> dict:
    return {n: get(n).to_json() for n in (names_ or names())}


# ---------------------------------------------------------------------------
# Walters witnesses by brute force over the window


def alternating_prefix(word_symbols: np.ndarray) -> np.ndarray:
    """``P[j] = sum_{i<j} (-1)^i phi_i``; the Walters norm over ``[o, o+n)`` is
    ``exp|P[o+n] - P[o]|``."""
    phi = np.asarray(word_symbols, dtype=np.int64)
    signs = np.where(np.arange(len(phi)) % 2 == 0, 1, -1)
    return np.concatenate([[0], np.cumsum(signs * phi)])


def walters_rates(system: Subshift, origins: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact forward and backward top exponents ``(1/n)|sum (-1)^j phi_j|`` at the origins."""
    P = alternating_prefix(system.word.symbols)
    o = np.asarray(origins, dtype=np.int64)
    return np.abs(P[o + n] - P[o]) / n, np.abs(P[o] - P[o - n]) / n


def walters_junction_points(system: Subshift, k: int, limit: int | None = None) -> list[SymbolicPoint]:
    """Points whose origin sits where a level-(k+1) block switches from ``e_k``
    to the run of ``bar(e_k)`` blocks."""
    offs = junction_offsets(system.max_level, k)
    if limit is not None:
        offs = offs[:limit]
    return [system.point(int(o)) for o in offs]


def walters_witness_offsets(
    system: Subshift, n: int, alpha: float, beta: float, count: int, margin: int | None = None
) -> tuple[list[SymbolicPoint], list[SymbolicPoint]]:
    """Origins where ``(1/n) log ||A(x, n)||`` is below ``alpha`` (near-cancellation)
    and above ``beta`` (drift-aligned), found by an exhaustive prefix-sum scan.

    The scan covers every admissible origin; ``count`` of each kind are taken
    evenly spaced among the hits so the witnesses spread over the window.
    """
    margin = n if margin is None else margin
    L = len(system.word)
    origins = np.arange(margin, L - max(margin, n))
    fwd, _ = walters_rates(system, origins, n)

    def pick(mask):
        hits = origins[mask]
        if hits.size == 0:
            return []
        idx = np.unique(np.linspace(0, hits.size - 1, min(count, hits.size)).round().astype(int))
        return [system.point(int(o)) for o in hits[idx]]

    return pick(fwd < alpha), pick(fwd > beta)


def level_blocks(system: Subshift, k: int) -> tuple[np.ndarray, np.ndarray]:
    return block_offsets(system.max_level, k)


# ---------------------------------------------------------------------------
# expectation checks


@dataclass(frozen=True)
class CheckResult:
    example: str
    key: str
    provenance: str
    passed: bool
    expected: object
    observed: object

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.example}.{self.key} [{self.provenance}] expected={json.dumps(self.expected)} observed={json.dumps(self.observed)}"


def _parse_point(system, coords):
    if isinstance(system, Rotation):
        return CirclePoint(Fraction(coords[0]))
    return TorusPoint(Fraction(coords[0]), Fraction(coords[1]))


class _Checker:
    """Lazily computed diagnostics shared by the checks of one example."""

    def __init__(self, ex: NamedExample):
        self.ex = ex
        self._cache = {}

    def memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def sample(self):
        return self.memo("sample", self.ex.sample)

    @property
    def schedule(self):
        return self.ex.schedule()

    def domination(self, k: int):
        return self.memo(("dom", k), lambda: detect_domination(self.ex.cocycle, self.sample, k, self.schedule))

    def complete(self):
        return self.memo("complete", lambda: probe_complete_regularity(self.ex.cocycle, self.sample, self.ex.horizon))

    def sacker_sell(self):
        return self.memo("ss", lambda: estimate_sacker_sell(self.ex.cocycle, self.sample, schedule=self.schedule))


def _check(ch: _Checker, e: Expectation):
    ex, c = ch.ex, ch.ex.cocycle
    key, val, tol = e.key, e.value, e.tol
    if key == "det_abs":
        dets = [abs(np.linalg.det(c.generator(x))) for x in ch.sample]
        obs = float(max(abs(v - val) for v in dets))
        return obs <= tol, obs
    if key == "spectrum":
        worst = 0.0
        for x in ch.sample:
            v = finite_time_spectrum(c, x, ex.horizon).values
            worst = max(worst, float(np.max(np.abs(v - np.asarray(val)))))
        return worst <= tol, worst
    if key == "spectrum_pairs":
        target = np.repeat([p[0] for p in val], [p[1] for p in val])
        worst = max(float(np.max(np.abs(finite_time_spectrum(c, x, ex.horizon).values - target)))
                    for x in ch.sample)
        return worst <= tol, worst
    if key == "spectrum_at":
        worst = 0.0
        for item in val:
            x = _parse_point(ex.system, item["point"])
            v = finite_time_spectrum(c, x, ex.horizon).values
            worst = max(worst, float(np.max(np.abs(v - np.asarray(item["values"])))))
        return worst <= tol, worst
    if key == "periodic_spectra":
        worst = 0.0
        for item in val:
            p = _parse_point(ex.system, item["point"])
            got = periodic_spectrum(c, p, item["period"])
            want = sorted(item["pairs"], key=lambda cm: -cm[0])
            if got.multiplicities != tuple(m for _, m in want):
                return False, got.to_json()["pairs"]
            worst = max(worst, float(np.max(np.abs(got.exponents - [c_ for c_, _ in want]))))
        return worst <= tol, worst
    if key == "dominated":
        obs = {k: ch.domination(int(k)).dominated for k in val}
        return obs == val, obs
    if key == "domination_rate":
        obs = {k: ch.domination(int(k)).rate for k in val}
        return all(abs(obs[k] - val[k]) <= tol for k in val), obs
    if key == "uniformly_hyperbolic":
        obs = {k: hyperbolicity_test(c, ch.sample, int(k), ch.schedule) for k in val}
        return obs == val, obs
    if key == "completely_regular":
        rep = ch.complete()
        obs = rep.verdict == CONSISTENT
        return obs == val, rep.verdict
    if key == "lp_regular_everywhere":
        rep = ch.complete()
        obs = all(r.verdict == REGULAR for r in rep.reports)
        return obs == val, rep.verdict_counts()
    if key == "exponents_vary":
        rep = ch.complete()
        return (rep.spectrum_spread > tol) == val, rep.spectrum_spread
    if key == "symmetric_spectrum":
        worst = max(abs(float(finite_time_spectrum(c, x, ex.horizon).values.sum())) for x in ch.sample)
        return (worst <= tol) == val, worst
    if key == "sacker_sell_discrete":
        est = ch.sacker_sell()
        ok = all(w <= 2 * est.grid_step + 1e-12 for w in est.widths()) and len(est.intervals) <= c.dim
        return ok == val, est.to_json()["intervals"]
    if key == "sacker_sell_contains_zero":
        est = ch.sacker_sell()
        obs = any(a <= 0.0 <= b for a, b in est.intervals)
        return obs == val, est.to_json()["intervals"]
    if key == "common_top_exponent_positive":
        rep = ch.complete()
        tops = [r.forward_spectrum.values[0] for r in rep.reports if r.verdict != IRREGULAR]
        if not tops:
            return not val, None
        c_hat, size = common_exponent(tops, tol)
        return (c_hat > tol) == val, {"c_hat": c_hat, "points": size}
    raise InvalidParameter(f"no check for expectation key {key!r}")


def check_example(ex: NamedExample, keys: Sequence[str] | None = None) -> list[CheckResult]:
    """Evaluate the expectations of ``ex`` (all of them, or those in ``keys``).

    An expectation without a known provenance tag always fails.
    """
    ch = _Checker(ex)
    out = []
    for e in ex.expected:
        if keys is not None and e.key not in keys:
            continue
        if e.provenance not in PROVENANCE:
            out.append(CheckResult(ex.name, e.key, str(e.provenance), False, e.value, "untagged"))
            continue
        passed, observed = _check(ch, e)
        out.append(CheckResult(ex.name, e.key, e.provenance, bool(passed), e.value, _jsonable(observed)))
    return out


def check_expectation(ex: NamedExample, expectation: Expectation) -> CheckResult:
    if expectation.provenance not in PROVENANCE:
        return CheckResult(ex.name, expectation.key, str(expectation.provenance), False, expectation.value, "untagged")
    passed, observed = _check(_Checker(ex), expectation)
    return CheckResult(ex.name, expectation.key, expectation.provenance, bool(passed), expectation.value,
                       _jsonable(observed))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v
