"""Linear cocycles over a base system.

A cocycle is determined by its generator ``A(x)``; for integer times

    A(x, 0)  = I
    A(x, n)  = A(f^{n-1} x) ... A(f x) A(x)                     (n > 0)
    A(x, -n) = A(f^{-n} x)^{-1} ... A(f^{-1} x)^{-1}             (n > 0)

Long products are never formed explicitly by the diagnostics.  Instead the
product is kept in a graded factorization ``Q diag(exp(logd)) T`` with Q
orthogonal, ``logd`` accumulated log magnitudes and T well conditioned; it is
re-orthogonalized after every block of ``block`` factors.  Log singular values
are read off through exterior powers of ``diag(exp(logd)) T`` scaled so that
nothing over- or underflows.

Conjugated cocycles are multiplied out through their base cocycle and the
conjugacy is applied only at the two ends of the product.  Conjugating each
factor would destroy structure (diagonal or antidiagonal factors, say) that
keeps rounding errors from being amplified along the orbit.
"""

from __future__ import annotations

import threading
from typing import Callable

import numpy as np

from .dynamics import BaseSystem
from .exceptions import InvalidOrder, InvalidParameter, SingularConjugacy, SingularGenerator
from .linalg import Subspace, left_vectors_batch, singular_values_batch, wedge_indices

DEFAULT_BLOCK = 16
DET_FLOOR = 1e-12
COND_CAP = 1e6


def exterior_power_batch(Ms: np.ndarray, i: int) -> np.ndarray:
    """Exterior power of a stack of matrices, shape ``(N, d, d) -> (N, C(d,i), C(d,i))``."""
    d = Ms.shape[-1]
    if not 1 <= i <= d:
        raise InvalidOrder(f"exterior power order {i} outside 1..{d}")
    if i == 1:
        return Ms
    rows = np.array(wedge_indices(d, i))
    sub = Ms[:, rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


class Cocycle:
    """Base class; subclasses provide :meth:`values`.

    ``values(x, n)`` returns the generator along the orbit segment used by
    ``A(x, n)``: ``A(x), A(f x), ..., A(f^{n-1} x)`` for ``n > 0`` and
    ``A(f^{-1} x), ..., A(f^{n} x)`` for ``n < 0``.
    """

    system: BaseSystem
    dim: int
    label: str
    det_floor: float = DET_FLOOR

    def values(self, x, n: int) -> np.ndarray:
        raise NotImplementedError

    def generator(self, x) -> np.ndarray:
        return self.values(x, 1)[0]

    def __call__(self, x) -> np.ndarray:
        return self.generator(x)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(label={self.label!r}, dim={self.dim})"

    # -- products -------------------------------------------------------

    def _checked(self, V: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(V)):
            raise SingularGenerator(f"{self.label}: non-finite generator value")
        if V.shape[0]:
            dets = np.abs(np.linalg.det(V))
            if dets.min() < self.det_floor:
                raise SingularGenerator(
                    f"{self.label}: |det| = {dets.min():.3g} below floor {self.det_floor:g}"
                )
        return V

    def factors(self, x, n: int) -> np.ndarray:
        """Matrices in application order whose left-accumulated product is ``A(x, n)``.

        Backward factors are inverses of the generator along the backward
        orbit, never the inverse of a long product.
        """
        if n == 0:
            return np.zeros((0, self.dim, self.dim))
        V = self._checked(np.asarray(self.values(x, n), dtype=float))
        return V if n > 0 else np.linalg.inv(V)

    def evaluate(self, x, n: int) -> np.ndarray:
        """The matrix ``A(x, n)`` as a plain product (no rescaling)."""
        P = np.eye(self.dim)
        for M in self.factors(x, n):
            P = M @ P
        return P

    def factors_many(self, points, n: int) -> np.ndarray:
        """Stacked :meth:`factors` of several points, shape ``(S, |n|, d, d)``."""
        return np.stack([self.factors(x, n) for x in points])

    def log_svd_paths(self, points, times, block: int = DEFAULT_BLOCK, return_product: bool = False):
        """Log singular values of ``A(x, t)`` for every point and every ``t``.

        ``times`` must be nonzero, of a single sign and increasing in absolute
        value.  Returns shape ``(len(points), len(times), dim)``, rows
        descending; with ``return_product`` also the final
        :class:`StabilizedProduct` (the products at the last time).
        """
        times = [int(t) for t in times]
        S = len(points)
        src, ends = self._product_route()
        prod = StabilizedProduct(self.dim, S)
        if not times:
            out = np.zeros((S, 0, self.dim))
            return (out, prod) if return_product else out
        sign = 1 if times[0] > 0 else -1
        mags = [sign * t for t in times]
        if any(m <= 0 for m in mags) or any(b < a for a, b in zip(mags, mags[1:])):
            raise InvalidParameter("times must be nonzero, single-signed and monotone")
        F = src.factors_many(points, sign * mags[-1])
        rows = []
        done = 0
        for m in mags:
            prod.push(F[:, done:m], block)
            done = m
            view = prod if ends is None else prod.framed(*ends(points, sign * m))
            rows.append(view.log_singular_values())
        out = np.stack(rows, axis=1)
        return (out, view) if return_product else out

    def log_svd_path(self, x, times, block: int = DEFAULT_BLOCK) -> np.ndarray:
        """Single-point :meth:`log_svd_paths`, shape ``(len(times), dim)``."""
        return self.log_svd_paths([x], times, block)[0]

    def stabilized_log_svd(self, x, n: int, block: int = DEFAULT_BLOCK) -> np.ndarray:
        """``log sigma_k(A(x, n))``, k = 1..d, computed without forming the product."""
        if n == 0:
            return np.zeros(self.dim)
        return self.log_svd_path(x, [n], block)[0]

    def _product_route(self):
        """``(src, ends)``: products are multiplied from ``src.factors_many``;
        ``ends(points, n)`` gives the matrices ``(L, R)`` with
        ``A(x, n) = L src(x, n) R``, or ``ends`` is None."""
        return self, None

    def products(self, points, n: int, block: int = DEFAULT_BLOCK) -> "StabilizedProduct":
        src, ends = self._product_route()
        prod = StabilizedProduct(self.dim, len(points))
        if n:
            prod.push(src.factors_many(points, n), block)
        return prod if ends is None else prod.framed(*ends(points, n))

    def product(self, x, n: int, block: int = DEFAULT_BLOCK) -> "StabilizedProduct":
        prod = self.products([x], n, block)
        prod.single = True
        return prod

    def push_forward_many(self, points, bases: np.ndarray, times, block: int = DEFAULT_BLOCK) -> list[np.ndarray]:
        """Orthonormal bases of ``A(x, t) span(bases[s])`` for every point, per ``t``.

        ``bases`` has shape ``(S, d, k)``; returns one ``(S, d, k)`` array per time.
        """
        times = [int(t) for t in times]
        if not times:
            return []
        src, ends = self._product_route()
        if ends is not None:
            _, R = ends(points, times[-1])
            outs = src.push_forward_many(points, R @ np.asarray(bases, dtype=float), times, block)
            return [np.linalg.qr(ends(points, t)[0] @ V)[0] for t, V in zip(times, outs)]
        F = self.factors_many(points, times[-1]) if times[-1] else np.zeros((len(points), 0, self.dim, self.dim))
        V = np.linalg.qr(np.asarray(bases, dtype=float))[0]
        logcond = _log_condition(F).max(axis=0).tolist() if F.shape[1] else []
        budget = float(np.log(COND_CAP))
        out, done, used, since = [], 0, 0.0, 0
        for t in times:
            for j in range(done, t):
                if since >= block or used + logcond[j] > budget:
                    V = np.linalg.qr(V)[0]
                    used, since = 0.0, 0
                V = F[:, j] @ V
                used += logcond[j]
                since += 1
            V = np.linalg.qr(V)[0]
            used, since = 0.0, 0
            done = t
            out.append(V.copy())
        return out

    def push_forward(self, x, basis: np.ndarray, times, block: int = DEFAULT_BLOCK) -> list[Subspace]:
        """Images ``A(x, t) span(basis)`` for each ``t`` in increasing ``times``."""
        outs = self.push_forward_many([x], np.asarray(basis, dtype=float)[None], times, block)
        return [Subspace(V[0]) for V in outs]


def _log_condition(F: np.ndarray) -> np.ndarray:
    """``log(sigma_1 / sigma_d)`` of every matrix in a stack ``(..., d, d)``."""
    d = F.shape[-1]
    flat = F.reshape(-1, d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        if d == 1:
            out = np.zeros(len(flat))
        elif d == 2:
            # sigma_1^2 + sigma_2^2 = |F|_fro^2 and sigma_1 sigma_2 = |det|
            h = np.einsum("nij,nij->n", flat, flat) / (2.0 * np.abs(np.linalg.det(flat)))
            out = np.log(h + np.sqrt(np.maximum(h * h - 1.0, 0.0)))
        else:
            sv = np.linalg.svd(flat, compute_uv=False)
            out = np.log(sv[:, 0]) - np.log(sv[:, -1])
    return np.where(np.isnan(out), np.inf, out).reshape(F.shape[:-2])


class StabilizedProduct:
    """Running products ``Q diag(exp(logd)) T`` of left-multiplied factors,
    for a stack of ``count`` orbits at once.

    Each block of factors is multiplied into the orthogonal part, the columns
    are sorted by their scaled norm (pre-pivoting) and a Householder QR splits
    off the new orthogonal factor; the triangular factor is split into its
    log-diagonal and a unit upper triangular part.  With ``count=None`` the
    object holds one product and accessors drop the stack axis.
    """

    def __init__(self, dim: int, count: int | None = None):
        self.dim = dim
        self.single = count is None
        S = 1 if count is None else int(count)
        self.count = S
        self.Q = np.broadcast_to(np.eye(dim), (S, dim, dim)).copy()
        self.logd = np.zeros((S, dim))
        self.T = self.Q.copy()
        self.steps = 0
        self.left = None
        self.right = None
        self._eye = np.eye(dim)
        self._upper = np.triu(np.ones((dim, dim)), 1)

    def _out(self, a):
        return a[0] if self.single else a

    def push(self, factors: np.ndarray, block: int = DEFAULT_BLOCK, cond_cap: float = COND_CAP) -> None:
        """Multiply ``factors`` (application order) into the product.

        ``factors`` is ``(N, d, d)`` for a single product or ``(S, N, d, d)``.
        A block ends after ``block`` factors or as soon as the product of the
        factors' condition numbers would exceed ``cond_cap`` for any orbit.
        """
        F = np.asarray(factors, dtype=float)
        if F.ndim == 3:
            F = F[None]
        N = F.shape[1]
        if N == 0:
            return
        block = max(1, int(block))
        logcond = _log_condition(F).max(axis=0).tolist()
        budget = float(np.log(cond_cap))
        start = 0
        while start < N:
            B = F[:, start]
            used = logcond[start]
            stop = start + 1
            while stop < N and stop - start < block and used + logcond[stop] <= budget:
                B = F[:, stop] @ B
                used += logcond[stop]
                stop += 1
            self._absorb(B)
            start = stop
        self.steps += N

    def _absorb(self, B: np.ndarray) -> None:
        P = B @ self.Q
        colnorm = np.log(np.sqrt(np.einsum("sij,sij->sj", P, P))) + self.logd
        perm = np.argsort(-colnorm, axis=1, kind="stable")
        Qn, R = np.linalg.qr(np.take_along_axis(P, perm[:, None, :], axis=2))
        rd = np.diagonal(R, axis1=1, axis2=2).copy()
        signs = np.where(rd < 0, -1.0, 1.0)
        rd *= signs
        logd_p = np.take_along_axis(self.logd, perm, axis=1)
        # strictly upper part of R / diag(R), regraded by exp(logd_j - logd_i)
        E = np.exp((logd_p[:, None, :] - logd_p[:, :, None]) * self._upper)
        Tt = (signs / rd)[:, :, None] * R * E * self._upper + self._eye
        self.T = Tt @ np.take_along_axis(self.T, perm[:, :, None], axis=1)
        self.logd = np.log(rd) + logd_p
        self.Q = Qn * signs[:, None, :]

    def framed(self, left: np.ndarray, right: np.ndarray) -> "StabilizedProduct":
        """View of ``left @ P @ right`` for bounded, invertible end matrices
        (stacks ``(S, d, d)``); the factorization itself is shared."""
        out = object.__new__(StabilizedProduct)
        out.__dict__.update(self.__dict__)
        L = np.broadcast_to(np.asarray(left, dtype=float), self.Q.shape)
        R = np.broadcast_to(np.asarray(right, dtype=float), self.Q.shape)
        out.left = L if self.left is None else L @ self.left
        out.right = R if self.right is None else self.right @ R
        return out

    def _outer(self):
        LQ = self.Q if self.left is None else self.left @ self.Q
        TR = self.T if self.right is None else self.T @ self.right
        return LQ, TR

    def _partial_log_sums(self) -> np.ndarray:
        d = self.dim
        S = np.zeros((self.count, d + 1))
        LQ, TR = self._outer()
        for i in range(1, d + 1):
            idx = np.array(wedge_indices(d, i))
            w = self.logd[:, idx].sum(axis=2)
            top = w.max(axis=1)
            W = exterior_power_batch(TR, i)
            if i < d:
                G = np.exp(w - top[:, None])[:, :, None] * W
                if self.left is not None:
                    G = exterior_power_batch(LQ, i) @ G
                S[:, i] = top + np.log(singular_values_batch(np.swapaxes(G, 1, 2))[:, 0])
            else:
                S[:, i] = top + np.log(np.abs(W[:, 0, 0] * np.linalg.det(LQ)))
        return S

    def log_singular_values(self) -> np.ndarray:
        S = self._partial_log_sums()
        return self._out(-np.sort(-np.diff(S, axis=1), axis=1))

    def log_abs_det(self):
        LQ, TR = self._outer()
        val = self.logd.sum(axis=1) + np.log(np.abs(np.linalg.det(TR) * np.linalg.det(LQ)))
        return float(val[0]) if self.single else val

    def right_singular_basis(self) -> np.ndarray:
        """Right singular vectors of the product, columns by descending singular value."""
        LQ, TR = self._outer()
        G = np.exp(self.logd - self.logd.max(axis=1, keepdims=True))[:, :, None] * TR
        if self.left is not None:
            G = LQ @ G
        return self._out(left_vectors_batch(np.swapaxes(G, 1, 2)))


# ---------------------------------------------------------------------------
# concrete cocycles


class GeneratorCocycle(Cocycle):
    """Cocycle given by a generator function on points.

    Parameters
    ----------
    system : BaseSystem
    generator : callable, point -> (d, d) array
    dim : int
    label : str
    batch : callable, optional
        Vectorized generator taking ``system.orbit_data(x, n)`` and returning
        a ``(|n|, d, d)`` array.
    constant : array, optional
        Constant generator; ``generator`` and ``batch`` are then ignored.
    memoize : bool
        Cache generator values per point (only for the non-batched path).
    """

    def __init__(
        self,
        system: BaseSystem,
        generator: Callable | None = None,
        dim: int | None = None,
        label: str = "",
        batch: Callable | None = None,
        constant=None,
        memoize: bool = False,
        det_floor: float = DET_FLOOR,
    ):
        self.system = system
        self.label = label
        self.det_floor = det_floor
        self.constant = None if constant is None else np.array(constant, dtype=float)
        if self.constant is not None:
            dim = self.constant.shape[0]
            if abs(np.linalg.det(self.constant)) < det_floor:
                raise SingularGenerator(f"{label}: constant generator is singular")
        if generator is None and self.constant is None:
            raise InvalidParameter("need a generator or a constant")
        if dim is None:
            raise InvalidParameter("dim is required for non-constant generators")
        self.dim = int(dim)
        self._generator = generator
        self._batch = batch
        self._cache = {} if memoize else None
        self._lock = threading.Lock()

    def __getstate__(self):
        # locks cannot be copied; estimators deep-copy their parameters when cloned
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def _single(self, p) -> np.ndarray:
        if self._cache is None:
            return np.asarray(self._generator(p), dtype=float)
        try:
            return self._cache[p]
        except KeyError:
            val = np.asarray(self._generator(p), dtype=float)
            with self._lock:
                self._cache.setdefault(p, val)
            return val

    def values(self, x, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros((0, self.dim, self.dim))
        if self.constant is not None:
            self.system.check_range(x, n)
            return np.broadcast_to(self.constant, (abs(n), self.dim, self.dim)).copy()
        if self._batch is not None:
            self.system.check_range(x, n)
            return np.asarray(self._batch(self.system.orbit_data(x, n)), dtype=float)
        self.system.check_range(x, n)
        return np.array([self._single(p) for p in self.system.orbit(x, n)])

    def generator(self, x) -> np.ndarray:
        if self.constant is not None:
            return self.constant.copy()
        if self._batch is not None:
            return np.asarray(self._batch(self.system.orbit_data(x, 1)), dtype=float)[0]
        return self._single(x)


class ExteriorCocycle(Cocycle):
    def __init__(self, base: Cocycle, order: int):
        from math import comb

        if not 1 <= order <= base.dim:
            raise InvalidOrder(f"exterior power order {order} outside 1..{base.dim}")
        self.base = base
        self.order = order
        self.system = base.system
        self.dim = comb(base.dim, order)
        self.label = f"wedge{order}({base.label})"
        self.det_floor = 0.0

    def values(self, x, n: int) -> np.ndarray:
        return exterior_power_batch(self.base.values(x, n), self.order)


class ScaledCocycle(Cocycle):
    """Generator multiplied by a positive scalar depending on the generator value."""

    def __init__(self, base: Cocycle, scale: Callable[[np.ndarray], np.ndarray], label: str):
        self.base = base
        self.scale = scale
        self.system = base.system
        self.dim = base.dim
        self.label = label
        self.det_floor = 0.0

    def values(self, x, n: int) -> np.ndarray:
        V = self.base.values(x, n)
        return V * self.scale(V)[:, None, None]


class ConjugateCocycle(Cocycle):
    """``B(x) = C(f x) A(x) C(x)^{-1}``, so ``B(x, n) = C(f^n x) A(x, n) C(x)^{-1}``."""

    def __init__(self, base: Cocycle, C, batch: Callable | None = None):
        self.base = base
        self.system = base.system
        self.dim = base.dim
        self.label = f"conj({base.label})"
        self.det_floor = base.det_floor
        self._const = None
        if callable(C):
            self._C = C
            self._batch = batch
        else:
            M = np.array(C, dtype=float)
            if M.shape != (self.dim, self.dim):
                raise SingularConjugacy(f"conjugacy has shape {M.shape}")
            if abs(np.linalg.det(M)) < DET_FLOOR:
                raise SingularConjugacy("constant conjugacy is singular")
            self._const = M
            self._const_inv = np.linalg.inv(M)

    def _C_along(self, x, n: int) -> np.ndarray:
        """C at the orbit points used by ``values`` and at their images."""
        if n > 0:
            if self._batch is not None:
                Cs = self._batch(self.system.orbit_data(x, n + 1))
            else:
                Cs = [self._C(p) for p in self.system.orbit(x, n + 1)]
            Cs = np.asarray(Cs, dtype=float)
            return Cs[:-1], Cs[1:]
        pts_back = n
        if self._batch is not None:
            here = np.asarray(self._batch(self.system.orbit_data(x, pts_back)), dtype=float)
            head = np.asarray(self._batch(self.system.orbit_data(x, 1)), dtype=float)
        else:
            here = np.asarray([self._C(p) for p in self.system.orbit(x, pts_back)], dtype=float)
            head = np.asarray([self._C(x)], dtype=float)
        images = np.concatenate([head, here[:-1]])
        return here, images

    def _ends(self, points, n: int):
        """``C(f^n x)`` and ``C(x)^{-1}`` for every point."""
        if self._const is not None:
            S = len(points)
            return np.broadcast_to(self._const, (S,) + self._const.shape), np.broadcast_to(self._const_inv, (S,) + self._const.shape)
        here = np.asarray([self._C(x) for x in points], dtype=float)
        there = np.asarray([self._C(self.system.step(x, n)) for x in points], dtype=float)
        if np.abs(np.linalg.det(here)).min() < DET_FLOOR:
            raise SingularConjugacy("conjugacy singular at a sample point")
        return there, np.linalg.inv(here)

    def _product_route(self):
        src, inner = self.base._product_route()

        def ends(points, n):
            L, R = self._ends(points, n)
            if inner is None:
                return L, R
            Li, Ri = inner(points, n)
            return L @ Li, Ri @ R

        return src, ends

    def values(self, x, n: int) -> np.ndarray:
        V = self.base.values(x, n)
        if n == 0:
            return V
        if self._const is not None:
            return self._const @ V @ self._const_inv
        C_here, C_next = self._C_along(x, n)
        dets = np.abs(np.linalg.det(C_here))
        if dets.min() < DET_FLOOR:
            raise SingularConjugacy("conjugacy singular along the orbit")
        return C_next @ V @ np.linalg.inv(C_here)


class DualCocycle(Cocycle):
    """Inverse-transpose cocycle ``x -> A(x)^{-T}`` over the same base.

    Its products are ``A(x, n)^{-T}``, so its singular values are the
    reciprocals of those of ``A(x, n)``.
    """

    def __init__(self, base: Cocycle):
        self.base = base
        self.system = base.system
        self.dim = base.dim
        self.label = f"dual({base.label})"
        self.det_floor = 0.0

    def values(self, x, n: int) -> np.ndarray:
        return np.swapaxes(np.linalg.inv(self.base.values(x, n)), -1, -2)


# ---------------------------------------------------------------------------
# module-level operations


def evaluate(c: Cocycle, x, n: int) -> np.ndarray:
    return c.evaluate(x, n)


def stabilized_log_svd(c: Cocycle, x, n: int, block: int = DEFAULT_BLOCK) -> np.ndarray:
    return c.stabilized_log_svd(x, n, block)


def exterior_cocycle(c: Cocycle, i: int) -> Cocycle:
    return ExteriorCocycle(c, i)


def normalize_det(c: Cocycle) -> Cocycle:
    """``|det A(x)|^{-1/d} A(x)``: every generator value gets ``|det| = 1``."""
    d = c.dim
    return ScaledCocycle(
        c, lambda V: np.abs(np.linalg.det(V)) ** (-1.0 / d), f"normalized({c.label})"
    )


def rescale(c: Cocycle, lam: float) -> Cocycle:
    """``exp(-lam) A(x)``, whose products are ``exp(-lam n) A(x, n)``."""
    factor = float(np.exp(-lam))
    return ScaledCocycle(c, lambda V: np.full(len(V), factor), f"exp(-{lam:g})*{c.label}")


def conjugate(c: Cocycle, C, batch: Callable | None = None) -> Cocycle:
    """Cohomologous cocycle ``C(f x) A(x) C(x)^{-1}``; ``C`` is a matrix or a callable."""
    return ConjugateCocycle(c, C, batch)


def dual(c: Cocycle) -> Cocycle:
    return DualCocycle(c)
