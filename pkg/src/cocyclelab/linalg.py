"""Small dense linear algebra used by every diagnostic.

The singular value decomposition is a one-sided (Hestenes) Jacobi iteration
with a fixed cyclic sweep order, so results are reproducible bit for bit on a
given platform.  Matrices here are tiny (d <= 4 for every catalog example,
wedge powers up to 6x6), which is the regime where Jacobi is both accurate
and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .exceptions import DimensionMismatch, InvalidMatrix, InvalidOrder, SingularMatrix

EPS = np.finfo(float).eps
MAX_SWEEPS = 80


def as_matrix(M) -> np.ndarray:
    """Validate ``M`` as a finite square real matrix and return a float copy."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix("matrix has non-finite entries")
    return A


@dataclass(frozen=True)
class SVDResult:
    """``M = left_basis @ diag(singular_values) @ right_basis.T``."""

    singular_values: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_basis * self.singular_values) @ self.right_basis.T


def _complete_basis(U: np.ndarray, rank: int) -> np.ndarray:
    # replace columns rank.. with an orthonormal complement of the first rank columns
    d = U.shape[0]
    basis = [U[:, j] for j in range(rank)]
    for e in np.eye(d):
        if len(basis) == U.shape[1]:
            break
        v = e.copy()
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return np.column_stack(basis)


def _hestenes(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalize the columns of ``A`` by plane rotations; returns (W, V) with W = A V."""
    W = A.copy()
    n = W.shape[1]
    V = np.eye(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = W[:, p]
                wq = W[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if gamma == 0.0 or abs(gamma) <= EPS * np.sqrt(alpha) * np.sqrt(beta):
                    continue
                with np.errstate(over="ignore"):
                    zeta = (beta - alpha) / (2.0 * gamma)
                if not np.isfinite(zeta):
                    continue
                rotated = True
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                W[:, [p, q]] = np.column_stack((c * wp - s * wq, s * wp + c * wq))
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break
    return W, V


def hestenes_batch(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """:func:`_hestenes` applied to a stack ``(S, m, n)`` with one shared sweep order.

    Every pair rotation is applied to all stack members at once; members whose
    pair already meets the convergence test get the identity rotation.
    """
    W = np.array(A, dtype=float)
    S, _, n = W.shape
    V = np.broadcast_to(np.eye(n), (S, n, n)).copy()
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = W[:, :, p]
                wq = W[:, :, q]
                alpha = np.einsum("si,si->s", wp, wp)
                beta = np.einsum("si,si->s", wq, wq)
                gamma = np.einsum("si,si->s", wp, wq)
                act = (gamma != 0.0) & (np.abs(gamma) > EPS * np.sqrt(alpha) * np.sqrt(beta))
                if not act.any():
                    continue
                with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                    zeta = (beta - alpha) / (2.0 * gamma)
                act &= np.isfinite(zeta)
                if not act.any():
                    continue
                rotated = True
                z = np.where(act, zeta, 0.0)
                big = np.abs(z) > 1e150
                with np.errstate(over="ignore"):
                    t = np.where(big, 0.5 / np.where(big, z, 1.0),
                                 np.copysign(1.0, z) / (np.abs(z) + np.hypot(1.0, np.where(big, 0.0, z))))
                t = np.where(act, t, 0.0)
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                c_, s_ = c[:, None], s[:, None]
                W[:, :, p], W[:, :, q] = c_ * wp - s_ * wq, s_ * wp + c_ * wq
                vp = V[:, :, p].copy()
                vq = V[:, :, q].copy()
                V[:, :, p] = c_ * vp - s_ * vq
                V[:, :, q] = s_ * vp + c_ * vq
        if not rotated:
            break
    return W, V


def _pow2_scale(A: np.ndarray) -> np.ndarray:
    """Power of two near the largest entry of each stack member (exact rescaling
    that keeps squared column norms away from underflow and overflow)."""
    big = np.abs(A).max(axis=(-2, -1))
    _, e = np.frexp(np.where(big > 0, big, 1.0))
    return np.ldexp(1.0, e)


def singular_values_batch(A: np.ndarray) -> np.ndarray:
    """Descending singular values of every matrix in a stack ``(S, m, n)``, ``m >= n``."""
    A = np.asarray(A, dtype=float)
    scale = _pow2_scale(A)
    W, _ = hestenes_batch(A / scale[:, None, None])
    return -np.sort(-np.sqrt(np.einsum("sij,sij->sj", W, W)), axis=1) * scale[:, None]


def left_vectors_batch(A: np.ndarray) -> np.ndarray:
    """Left singular vectors (columns, descending singular value) of a square stack.

    The orthogonalized columns are sorted and passed through a QR step, which
    normalizes them and completes the basis where columns vanished.
    """
    A = np.asarray(A, dtype=float)
    W, _ = hestenes_batch(A / _pow2_scale(A)[:, None, None])
    sigma = np.sqrt(np.einsum("sij,sij->sj", W, W))
    order = np.argsort(-sigma, axis=1, kind="stable")
    Ws = np.take_along_axis(W, order[:, None, :], axis=2)
    Q, R = np.linalg.qr(Ws)
    signs = np.where(np.diagonal(R, axis1=1, axis2=2) < 0, -1.0, 1.0)
    return Q * signs[:, None, :]


def svd(M) -> SVDResult:
    """Singular value decomposition with descending singular values.

    Raises
    ------
    InvalidMatrix
        If ``M`` is not a finite square matrix.
    """
    A = as_matrix(M)
    scale = float(_pow2_scale(A))
    W, V = _hestenes(A / scale)
    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    W = W[:, order]
    V = V[:, order]
    tiny = sigma[0] * EPS * A.shape[0] if sigma.size else 0.0
    rank = int(np.sum(sigma > tiny)) if sigma[0] > 0 else 0
    U = np.zeros_like(W)
    U[:, :rank] = W[:, :rank] / sigma[:rank]
    if rank < U.shape[1]:
        U = _complete_basis(U, rank)
    return SVDResult(sigma * scale, U, V)


def singular_values(M) -> np.ndarray:
    return svd(M).singular_values


def norm(M) -> float:
    """Operator 2-norm, the largest singular value."""
    return float(singular_values(M)[0])


def conorm(M) -> float:
    """Co-norm ``m(M) = 1 / ||M^-1||``, the smallest singular value.

    Raises
    ------
    SingularMatrix
        If ``M`` is numerically singular.
    """
    s = singular_values(M)
    if s[-1] == 0.0 or s[-1] <= s[0] * EPS * len(s):
        raise SingularMatrix("matrix is singular; co-norm undefined")
    return float(s[-1])


def wedge_indices(d: int, i: int) -> list[tuple[int, ...]]:
    """Index subsets of ``range(d)`` of size ``i`` in lexicographic order."""
    return list(combinations(range(d), i))


def exterior_power(M, i: int) -> np.ndarray:
    """Matrix of the ``i``-fold exterior power in the lexicographic wedge basis.

    Entry ``(S, T)`` is the minor ``det M[S, T]``.
    """
    A = as_matrix(M)
    d = A.shape[0]
    if not 1 <= i <= d:
        raise InvalidOrder(f"exterior power order {i} outside 1..{d}")
    if i == 1:
        return A
    idx = wedge_indices(d, i)
    rows = np.array(idx)
    # all minors at once: shape (N, N, i, i)
    sub = A[rows[:, None, :, None], rows[None, :, None, :]]
    out = np.linalg.det(sub)
    assert out.shape == (comb(d, i), comb(d, i))
    return out


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^d stored as a d x k matrix with orthonormal columns."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[1] == 0 or B.shape[1] > B.shape[0]:
            raise DimensionMismatch(f"bad subspace basis shape {B.shape}")
        if not np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10, rtol=0):
            raise InvalidMatrix("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", B)

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        """Orthonormalize the given spanning vectors (columns) by QR."""
        V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
        Q, R = np.linalg.qr(V)
        keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
        if not keep.any():
            raise InvalidMatrix("zero spanning set")
        return cls(Q[:, keep])

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _ordered(E: Subspace, F: Subspace) -> tuple[Subspace, Subspace]:
    # canonical argument order makes the angle computation exactly symmetric
    kE = (E.dim, E.basis.tobytes())
    kF = (F.dim, F.basis.tobytes())
    return (E, F) if kE <= kF else (F, E)


def principal_angles(E: Subspace, F: Subspace) -> np.ndarray:
    """All ``min(dim E, dim F)`` principal angles in ascending order (radians).

    Cosines come from the SVD of the frame product and are clamped to [-1, 1];
    angles below pi/4 are recomputed from sines, which keeps them accurate near 0.
    """
    if E.ambient_dim != F.ambient_dim:
        raise DimensionMismatch(
            f"ambient dimensions differ: {E.ambient_dim} vs {F.ambient_dim}"
        )
    A, B = _ordered(E, F)
    if A.dim > B.dim:
        A, B = B, A
    cos = np.clip(singular_values_rect(A.basis.T @ B.basis), -1.0, 1.0)
    angles = np.arccos(cos)[::-1]
    resid = A.basis - B.basis @ (B.basis.T @ A.basis)
    sin = np.clip(singular_values_rect(resid), 0.0, 1.0)[::-1]
    small = angles < np.pi / 4
    angles[small] = np.arcsin(sin[small])
    return np.sort(angles)


def singular_values_rect(M) -> np.ndarray:
    """Descending singular values of a possibly rectangular matrix."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.shape[0] < A.shape[1]:
        A = A.T
    W, _ = _hestenes(A)
    return np.sort(np.linalg.norm(W, axis=0))[::-1]


def subspace_angle(E: Subspace, F: Subspace) -> float:
    """The least principal angle between ``E`` and ``F``, in ``[0, pi/2]``."""
    return float(principal_angles(E, F)[0])


def intersect(E: Subspace, F: Subspace, dim: int) -> tuple[Subspace, float]:
    """Best ``dim``-dimensional approximate intersection of ``E`` and ``F``.

    Returns the subspace spanned by the ``dim`` principal vectors of ``E`` with
    the smallest angles to ``F`` together with the largest of those angles.
    """
    if E.ambient_dim != F.ambient_dim:
        raise DimensionMismatch("ambient dimensions differ")
    if dim > min(E.dim, F.dim):
        raise DimensionMismatch(f"cannot intersect in dimension {dim}")
    M = E.basis.T @ F.basis
    if M.shape[0] >= M.shape[1]:
        W, V = _hestenes(M)
        s = np.linalg.norm(W, axis=0)
        order = np.argsort(-s, kind="stable")
        Y = W[:, order[:dim]] / np.where(s[order[:dim]] > 0, s[order[:dim]], 1.0)
    else:
        W, V = _hestenes(M.T)
        s = np.linalg.norm(W, axis=0)
        order = np.argsort(-s, kind="stable")
        Y = V[:, order[:dim]]
    vecs = E.basis @ Y
    Q, _ = np.linalg.qr(vecs)
    cos = np.clip(s[order[dim - 1]], -1.0, 1.0)
    return Subspace(Q), float(np.arccos(cos))


def direct_sum(*spaces: Subspace) -> Subspace:
    return Subspace.span(*[S.basis[:, j] for S in spaces for j in range(S.dim)])
