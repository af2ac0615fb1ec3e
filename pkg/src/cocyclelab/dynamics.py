"""Base dynamics: homeomorphisms that drive the cocycles.

Circle and torus coordinates are kept as exact rationals (floats are converted
to their exact dyadic value), so iterating forward and back returns to the
same point exactly.  Irrational rotation numbers are replaced by a continued
fraction convergent with a very large denominator.

Symbolic points live in a finite window: the word ``e_K`` of a fixed level K
together with an origin inside it.  Iterating past either end of the window
raises :class:`WindowExhausted`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from numbers import Real

import numpy as np

from .exceptions import InvalidParameter, NotEnumerable, NotPeriodic, WindowExhausted, WordTooLong

UP, DOWN, ZERO = 1, -1, 0
_TO_CHAR = {UP: "^", DOWN: "v", ZERO: "0"}
_FROM_CHAR = {"^": UP, "↑": UP, "v": DOWN, "↓": DOWN, "0": ZERO}

DEFAULT_WORD_CAP = 50_000_000


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        f = value
    elif isinstance(value, (int, np.integer)):
        f = Fraction(int(value))
    elif isinstance(value, str):
        f = Fraction(value)
    elif isinstance(value, Real):
        if not np.isfinite(value):
            raise InvalidParameter(f"non-finite coordinate {value!r}")
        f = Fraction(float(value))
    else:
        raise InvalidParameter(f"cannot use {value!r} as a coordinate")
    return f - (f.numerator // f.denominator)


# ---------------------------------------------------------------------------
# words over {^, v, 0}


class Word:
    """Immutable finite word over the alphabet {up, down, 0}.

    Symbols are stored as an ``int8`` array with up = +1, down = -1, 0 = 0.
    The textual form uses ``^``, ``v`` and ``0``.
    """

    __slots__ = ("symbols",)

    def __init__(self, symbols):
        if isinstance(symbols, str):
            try:
                arr = np.array([_FROM_CHAR[ch] for ch in symbols], dtype=np.int8)
            except KeyError as exc:
                raise InvalidParameter(f"symbol {exc.args[0]!r} not in alphabet") from None
        else:
            arr = np.array(symbols, dtype=np.int8).ravel()
            if arr.size and not np.all(np.isin(arr, (UP, DOWN, ZERO))):
                raise InvalidParameter("word symbols must be +1, -1 or 0")
        arr.setflags(write=False)
        self.symbols = arr

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.symbols[item])
        return int(self.symbols[item])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self is other or np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash((len(self), self.symbols[:64].tobytes()))

    def __str__(self) -> str:
        return "".join(_TO_CHAR[int(s)] for s in self.symbols)

    def __repr__(self) -> str:
        text = str(self) if len(self) <= 40 else f"{str(self[:37])}..."
        return f"Word({text!r}, length={len(self)})"

    def bar(self) -> "Word":
        """Swap up and down arrows; 0 is fixed."""
        return Word(-self.symbols)

    def contains(self, other: "Word") -> bool:
        if len(other) == 0:
            return True
        return self.symbols.tobytes().find(other.symbols.tobytes()) >= 0


def word_length(k: int) -> int:
    """``|e_k|`` from the recurrence ``|e_{j+1}| = 2 (j^2 + 2) |e_j| + 2``."""
    if k < 1:
        raise InvalidParameter("word level must be >= 1")
    n = 2
    for j in range(1, k):
        n = 2 * (j * j + 2) * n + 2
    return n


@lru_cache(maxsize=8)
def _build(k: int) -> Word:
    e = np.array([UP, DOWN], dtype=np.int8)
    zero = np.zeros(1, dtype=np.int8)
    for j in range(1, k):
        r = j * j + 1
        e = np.concatenate([np.tile(e, r), zero, e, np.tile(-e, r), zero, -e])
    return Word(e)


def build_word(k: int, max_length: int = DEFAULT_WORD_CAP) -> Word:
    """The word ``e_k``: ``e_1 = ^v`` and ``e_{k+1} = e_k^r 0 e_k bar(e_k)^r 0 bar(e_k)``
    with ``r = k^2 + 1``.

    Raises
    ------
    WordTooLong
        If ``|e_k|`` exceeds ``max_length``.
    """
    n = word_length(k)
    if n > max_length:
        raise WordTooLong(f"|e_{k}| = {n} exceeds the cap {max_length}")
    return _build(k)


def is_admissible(w: Word | str, k: int) -> bool:
    """True iff ``w`` occurs as a factor of ``e_k``."""
    if isinstance(w, str):
        w = Word(w)
    return build_word(k).contains(w)


def block_offsets(level: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Start offsets of every level-``k`` block inside ``e_level``.

    Returns ``(offsets, barred)`` where ``barred[i]`` tells whether the block at
    ``offsets[i]`` is ``bar(e_k)`` rather than ``e_k``.
    """
    if not 1 <= k <= level:
        raise InvalidParameter("need 1 <= k <= level")
    offsets = np.zeros(1, dtype=np.int64)
    barred = np.zeros(1, dtype=bool)
    for j in range(level - 1, k - 1, -1):
        # children of a level-(j+1) block are level-j blocks
        L = word_length(j)
        r = j * j + 1
        rel = np.concatenate(
            [
                np.arange(r) * L,
                [r * L + 1],
                (r + 1) * L + 1 + np.arange(r) * L,
                [(2 * r + 1) * L + 2],
            ]
        )
        child_bar = np.array([False] * (r + 1) + [True] * (r + 1))
        offsets = (offsets[:, None] + rel[None, :]).ravel()
        barred = (barred[:, None] ^ child_bar[None, :]).ravel()
    return offsets, barred


def junction_offsets(level: int, k: int) -> np.ndarray:
    """Offsets in ``e_level`` where a level-``(k+1)`` block switches from its
    lone ``e_k`` (after the first 0) to the run of ``bar(e_k)`` blocks.

    At these offsets the alternating drift of the Walters cocycle flips sign
    between the backward and the forward window.
    """
    if not 1 <= k < level:
        raise InvalidParameter("need 1 <= k < level")
    starts, _ = block_offsets(level, k + 1)
    L = word_length(k)
    return starts + (k * k + 2) * L + 1


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class CirclePoint:
    x: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", _frac(self.x))

    def coords(self) -> tuple[float, ...]:
        return (float(self.x),)

    def to_json(self) -> dict:
        return {"type": "circle", "x": str(self.x), "xf": float(self.x)}


@dataclass(frozen=True)
class TorusPoint:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", _frac(self.x))
        object.__setattr__(self, "y", _frac(self.y))

    def coords(self) -> tuple[float, ...]:
        return (float(self.x), float(self.y))

    def to_json(self) -> dict:
        return {
            "type": "torus",
            "x": str(self.x),
            "y": str(self.y),
            "xf": float(self.x),
            "yf": float(self.y),
        }


@dataclass(frozen=True)
class SymbolicPoint:
    """A sequence known on the finite window ``e_level``, read from ``origin``.

    Windows of level K are K-approximations of points of the subshift.
    """

    window: Word = field(repr=False)
    origin: int
    level: int

    def __post_init__(self):
        if not 0 <= self.origin < len(self.window):
            raise WindowExhausted(f"origin {self.origin} outside window of length {len(self.window)}")

    @property
    def symbol(self) -> int:
        return int(self.window.symbols[self.origin])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolicPoint):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.level == other.level
            and self.window == other.window
        )

    def __hash__(self) -> int:
        return hash((self.origin, self.level, len(self.window)))

    def room(self) -> tuple[int, int]:
        """Largest backward and forward step counts that stay in the window."""
        return self.origin, len(self.window) - 1 - self.origin

    def to_json(self) -> dict:
        return {"type": "symbolic", "level": self.level, "origin": self.origin}


# ---------------------------------------------------------------------------
# systems


def golden_rotation_number(min_denominator: int = 10**12) -> Fraction:
    """First continued fraction convergent of (sqrt 5 - 1)/2 with large denominator."""
    a, b = 1, 1
    while b < min_denominator:
        a, b = b, a + b
    return Fraction(a, b)


class BaseSystem:
    """Homeomorphism interface.

    ``orbit(x, n)`` lists ``x, f x, ..., f^{n-1} x`` for ``n > 0`` and
    ``f^{-1} x, ..., f^{n} x`` for ``n < 0``; ``orbit_data`` returns the same
    orbit as a compact numpy array (coordinates or symbols) for vectorized
    generators.
    """

    name = "system"

    def step(self, x, n: int = 1):
        raise NotImplementedError

    def orbit(self, x, n: int) -> list:
        raise NotImplementedError

    def orbit_data(self, x, n: int) -> np.ndarray:
        raise NotImplementedError

    def check_range(self, x, n: int) -> None:
        """Raise :class:`WindowExhausted` if ``f^n x`` cannot be formed."""

    def periodic_points(self, period: int, grid: int | None = None) -> list:
        raise NotEnumerable(f"{self.name}: periodic points are not enumerable")

    def to_json(self) -> dict:
        return {"type": self.name}


def _orbit_indices(n: int) -> range:
    return range(0, n) if n > 0 else range(-1, n - 1, -1)


class Rotation(BaseSystem):
    """Circle rotation ``x -> x + alpha mod 1`` with rational ``alpha``."""

    name = "rotation"

    def __init__(self, alpha=None):
        self.alpha = golden_rotation_number() if alpha is None else _frac(alpha)

    def __repr__(self) -> str:
        return f"Rotation(alpha={self.alpha})"

    def step(self, x: CirclePoint, n: int = 1) -> CirclePoint:
        return CirclePoint(x.x + n * self.alpha)

    def _numerators(self, x: CirclePoint, n: int):
        D = x.x.denominator * self.alpha.denominator // gcd(x.x.denominator, self.alpha.denominator)
        a = x.x.numerator * (D // x.x.denominator)
        p = self.alpha.numerator * (D // self.alpha.denominator)
        return D, [(a + j * p) % D for j in _orbit_indices(n)]

    def orbit(self, x: CirclePoint, n: int) -> list:
        D, nums = self._numerators(x, n)
        return [CirclePoint(Fraction(m, D)) for m in nums]

    def orbit_data(self, x: CirclePoint, n: int) -> np.ndarray:
        D, nums = self._numerators(x, n)
        return np.array([m / D for m in nums], dtype=float)

    def periodic_points(self, period: int, grid: int | None = None) -> list:
        """Rational rotations only: if ``q`` divides ``period`` every point is
        periodic and the grid points ``j / grid`` are returned (``grid`` defaults
        to ``q``); otherwise no point has that period."""
        q = self.alpha.denominator
        if period < 1:
            raise InvalidParameter("period must be >= 1")
        if q > 10**6:
            raise NotEnumerable("rotation number is a stand-in for an irrational; no periodic points")
        if period % q:
            return []
        g = q if grid is None else int(grid)
        return [CirclePoint(Fraction(j, g)) for j in range(g)]

    def to_json(self) -> dict:
        return {"type": self.name, "alpha": str(self.alpha)}


class ToralAutomorphism(BaseSystem):
    """Linear automorphism of the 2-torus given by an integer matrix with det +-1."""

    name = "toral_automorphism"

    def __init__(self, matrix=((2, 1), (1, 1))):
        M = np.array(matrix)
        if M.shape != (2, 2) or not np.all(M == np.round(M)):
            raise InvalidParameter("toral automorphism needs a 2x2 integer matrix")
        M = [[int(v) for v in row] for row in M]
        det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        if det not in (1, -1):
            raise InvalidParameter(f"determinant must be +-1, got {det}")
        self.matrix = tuple(tuple(r) for r in M)
        a, b = M[0]
        c, d = M[1]
        self.inverse = ((d * det, -b * det), (-c * det, a * det))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({[list(r) for r in self.matrix]})"

    def _iterate(self, X: int, Y: int, D: int, n: int, collect: bool):
        M = self.matrix if n >= 0 else self.inverse
        (a, b), (c, d) = M
        out = []
        if n > 0:
            for _ in range(n):
                if collect:
                    out.append((X, Y))
                X, Y = (a * X + b * Y) % D, (c * X + d * Y) % D
        else:
            for _ in range(-n):
                X, Y = (a * X + b * Y) % D, (c * X + d * Y) % D
                if collect:
                    out.append((X, Y))
        return X, Y, out

    @staticmethod
    def _ints(p: TorusPoint):
        D = p.x.denominator * p.y.denominator // gcd(p.x.denominator, p.y.denominator)
        return p.x.numerator * (D // p.x.denominator), p.y.numerator * (D // p.y.denominator), D

    def step(self, x: TorusPoint, n: int = 1) -> TorusPoint:
        X, Y, D = self._ints(x)
        X, Y, _ = self._iterate(X, Y, D, n, False)
        return TorusPoint(Fraction(X, D), Fraction(Y, D))

    def orbit(self, x: TorusPoint, n: int) -> list:
        X, Y, D = self._ints(x)
        _, _, pts = self._iterate(X, Y, D, n, True)
        return [TorusPoint(Fraction(u, D), Fraction(v, D)) for u, v in pts]

    def orbit_data(self, x: TorusPoint, n: int) -> np.ndarray:
        X, Y, D = self._ints(x)
        _, _, pts = self._iterate(X, Y, D, n, True)
        return np.array([(u / D, v / D) for u, v in pts], dtype=float).reshape(-1, 2)

    def periodic_points(self, period: int, grid: int | None = None) -> list:
        """All ``v`` with ``(A^period - I) v = 0 mod 1``, as exact rationals."""
        if period < 1:
            raise InvalidParameter("period must be >= 1")
        P = np.array(self.matrix, dtype=object)
        M = np.array([[1, 0], [0, 1]], dtype=object)
        for _ in range(period):
            M = M.dot(P)
        B = M - np.array([[1, 0], [0, 1]], dtype=object)
        (a, b), (c, d) = B.tolist()
        det = a * d - b * c
        if det == 0:
            raise NotEnumerable("A^period - I is singular: periodic points form a continuum")
        D = abs(det)
        if D > 4096:
            raise NotEnumerable(f"{D} periodic points of period {period}; too many to list")
        # v = u / D with B u = 0 mod D
        u = np.arange(D)
        U1, U2 = np.meshgrid(u, u, indexing="ij")
        ok = ((a * U1 + b * U2) % D == 0) & ((c * U1 + d * U2) % D == 0)
        return [
            TorusPoint(Fraction(int(i), D), Fraction(int(j), D))
            for i, j in zip(U1[ok], U2[ok])
        ]

    def to_json(self) -> dict:
        return {"type": self.name, "matrix": [list(r) for r in self.matrix]}


class TwistMap(ToralAutomorphism):
    """``(x, y) -> (x + y, y) mod 1``; the second coordinate is invariant."""

    name = "twist_map"

    def __init__(self):
        super().__init__(((1, 1), (0, 1)))

    def __repr__(self) -> str:
        return "TwistMap()"


class Subshift(BaseSystem):
    """Shift on the Veech-like subshift, windowed at word level ``max_level``."""

    name = "subshift"

    def __init__(self, max_level: int = 6, max_length: int = DEFAULT_WORD_CAP):
        if max_level < 1:
            raise InvalidParameter("max_level must be >= 1")
        self.max_level = max_level
        self.word = build_word(max_level, max_length)

    def __repr__(self) -> str:
        return f"Subshift(max_level={self.max_level})"

    def point(self, origin: int) -> SymbolicPoint:
        return SymbolicPoint(self.word, int(origin), self.max_level)

    def check_range(self, x: SymbolicPoint, n: int) -> None:
        back, fwd = x.room()
        if n > fwd or -n > back:
            raise WindowExhausted(
                f"cannot step {n} from origin {x.origin} in a window of length {len(x.window)}"
            )

    def step(self, x: SymbolicPoint, n: int = 1) -> SymbolicPoint:
        self.check_range(x, n)
        return SymbolicPoint(x.window, x.origin + n, x.level)

    def orbit(self, x: SymbolicPoint, n: int) -> list:
        return [SymbolicPoint(x.window, x.origin + j, x.level) for j in _orbit_indices(n)]

    def orbit_data(self, x: SymbolicPoint, n: int) -> np.ndarray:
        if n > 0:
            self.check_range(x, n - 1)
            return x.window.symbols[x.origin : x.origin + n]
        if n == 0:
            return x.window.symbols[:0]
        self.check_range(x, n)
        return x.window.symbols[x.origin + n : x.origin][::-1]

    def to_json(self) -> dict:
        return {"type": self.name, "max_level": self.max_level}


def step(system: BaseSystem, x, n: int = 1):
    """``f^n(x)``."""
    return system.step(x, n)


def periodic_points(system: BaseSystem, period: int, grid: int | None = None) -> list:
    return system.periodic_points(period, grid)


def check_periodic(system: BaseSystem, p, period: int) -> None:
    if period < 1 or system.step(p, period) != p:
        raise NotPeriodic(f"{p} is not periodic with period {period}")


def sample_symbolic_points(
    K: int, count: int, seed: int, margin: int = 0, max_length: int = DEFAULT_WORD_CAP
) -> list[SymbolicPoint]:
    """``count`` points on the window ``e_K`` with distinct pseudo-random origins.

    ``margin`` keeps every origin at least that many symbols from both ends.
    """
    if K < 2:
        raise InvalidParameter("sampling needs K >= 2")
    word = build_word(K, max_length)
    span = len(word) - 2 * margin
    if count > max(span, 0):
        raise InvalidParameter(f"cannot draw {count} distinct origins from {span} positions")
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    origins = rng.choice(span, size=count, replace=False) + margin
    return [SymbolicPoint(word, int(o), K) for o in origins]


def sample_points(system: BaseSystem, count: int, seed: int, margin: int = 0) -> list:
    """Deterministic pseudo-random points of any supported system."""
    if isinstance(system, Subshift):
        return sample_symbolic_points(system.max_level, count, seed, margin)
    rng = np.random.default_rng(seed)
    if isinstance(system, Rotation):
        return [CirclePoint(Fraction(float(u))) for u in rng.random(count)]
    if isinstance(system, ToralAutomorphism):
        return [TorusPoint(float(u), float(v)) for u, v in rng.random((count, 2))]
    raise InvalidParameter(f"no sampler for {system!r}")
