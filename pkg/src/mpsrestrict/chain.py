"""Kraus families, boundary data, transfer-operator spectra and environments.

A translationally invariant chain is specified by a left-normalized Kraus
family {A_x} (sum_x A_x^dag A_x = 1), a pair of unit boundary vectors |L>,
|R>, and a geometry (lenA, lenB, lenC).  The transfer operator is the
trace-preserving map E(chi) = sum_x A_x chi A_x^dag with unital adjoint
E*(Q) = sum_x A_x^dag Q A_x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    NonConvergent,
    NotLeftNormalized,
    NotPSD,
    OutOfRange,
    ShapeMismatch,
)

__all__ = [
    "KrausFamily",
    "BoundaryPair",
    "ChainGeometry",
    "TransferFixedPoint",
    "transfer_apply",
    "transfer_adjoint_apply",
    "transfer_matrix",
    "fixed_point",
    "left_environment",
    "right_environment",
    "sqrt_env",
    "normalization_k2",
    "renormalize",
]

# Environments are computed by iterated channel application; this caps the
# iteration count (cost O(n d D^3)) rather than forming D^2 x D^2 powers.
_MAX_ENV_ITER = 10_000


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KrausFamily:
    """Ordered family {A_x}, x = 0..d-1, of D x D complex matrices.

    Left normalization sum_x A_x^dag A_x = 1 is validated at construction
    (tolerance ``atol``, default 1e-10) and never silently repaired; use
    :func:`renormalize` explicitly for non-normalized raw matrices.
    """

    ops: np.ndarray  # shape (d, D, D)
    atol: float = 1e-10

    def __post_init__(self) -> None:
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ShapeMismatch(f"expected (d, D, D) Kraus stack, got {ops.shape}")
        if ops.shape[0] < 1 or ops.shape[1] < 1:
            raise ShapeMismatch("need d >= 1 Kraus operators of dimension D >= 1")
        if not np.all(np.isfinite(ops.view(float))):
            raise ShapeMismatch("Kraus operators contain NaN or Inf")
        D = ops.shape[1]
        gram = np.einsum("xba,xbc->ac", ops.conj(), ops)
        residual = float(np.linalg.norm(gram - np.eye(D)))
        if residual > self.atol:
            raise NotLeftNormalized(residual, self.atol)
        object.__setattr__(self, "ops", _freeze(ops))

    @property
    def d(self) -> int:
        return int(self.ops.shape[0])

    @property
    def D(self) -> int:
        return int(self.ops.shape[1])

    @classmethod
    def from_matrices(
        cls, matrices: Sequence[np.ndarray], atol: float = 1e-10
    ) -> "KrausFamily":
        return cls(ops=np.stack([np.asarray(m, dtype=complex) for m in matrices]), atol=atol)


@dataclass(frozen=True)
class BoundaryPair:
    """Unit boundary vectors |L>, |R> of length D (norm checked to 1e-12)."""

    L: np.ndarray
    R: np.ndarray

    def __post_init__(self) -> None:
        L = np.asarray(self.L, dtype=complex).ravel()
        R = np.asarray(self.R, dtype=complex).ravel()
        if L.shape != R.shape:
            raise ShapeMismatch(f"boundary lengths differ: {L.shape} vs {R.shape}")
        for name, v in (("L", L), ("R", R)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(
                    f"boundary vector {name} has norm {np.linalg.norm(v)!r}, expected 1"
                )
        object.__setattr__(self, "L", _freeze(L))
        object.__setattr__(self, "R", _freeze(R))


@dataclass(frozen=True)
class ChainGeometry:
    """Site counts (lenA, lenB, lenC) with lenA, lenC >= 0 and lenB >= 1."""

    len_a: int
    len_b: int
    len_c: int

    def __post_init__(self) -> None:
        for name, v in (("len_a", self.len_a), ("len_b", self.len_b), ("len_c", self.len_c)):
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if self.len_b < 1:
            raise ValueError("len_b must be >= 1")

    @property
    def total(self) -> int:
        return int(self.len_a + self.len_b + self.len_c)


@dataclass(frozen=True)
class TransferFixedPoint:
    """Stationary state of the transfer operator with spectral diagnostics.

    ``gap`` is 1 minus the modulus of the second-largest transfer eigenvalue;
    ``primitive`` is True iff the eigenvalue-1 space is one-dimensional, no
    other eigenvalue sits on the unit circle, and rho has full rank.
    """

    rho: np.ndarray
    gap: float
    primitive: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", _freeze(self.rho))


def _check_square(K: KrausFamily, M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.shape != (K.D, K.D):
        raise ShapeMismatch(f"{what} must be {K.D}x{K.D}, got {M.shape}")
    return M


def transfer_apply(K: KrausFamily, chi: np.ndarray) -> np.ndarray:
    """E(chi) = sum_x A_x chi A_x^dag (trace preserving)."""
    chi = _check_square(K, chi, "chi")
    return np.einsum("xab,bc,xdc->ad", K.ops, chi, K.ops.conj())


def transfer_adjoint_apply(K: KrausFamily, Q: np.ndarray) -> np.ndarray:
    """E*(Q) = sum_x A_x^dag Q A_x (unital)."""
    Q = _check_square(K, Q, "Q")
    return np.einsum("xba,bc,xcd->ad", K.ops.conj(), Q, K.ops)


def transfer_matrix(K: KrausFamily) -> np.ndarray:
    """D^2 x D^2 matricization T with vec(E(chi)) = T vec(chi).

    Column-stacking convention: T = sum_x conj(A_x) (x) A_x.
    """
    D = K.D
    T = np.zeros((D * D, D * D), dtype=complex)
    for A in K.ops:
        T += np.kron(A.conj(), A)
    return T


def _unvec(v: np.ndarray, D: int) -> np.ndarray:
    # column-stacking: vec(X) concatenates the columns of X
    return v.reshape(D, D, order="F")


def fixed_point(K: KrausFamily, tol: float = 1e-10) -> TransferFixedPoint:
    """Stationary state, spectral gap and primitivity of the transfer operator.

    The eigenvalue-1 multiplicity is counted within 1e-8 of 1.  For a unique
    fixed direction, rho is that eigenvector Hermitized and normalized; for a
    degenerate fixed space, rho is the least-squares projection of 1/D onto
    the fixed eigenspace (still an exact fixed point, and basis-independent),
    with ``primitive`` False.  Full rank is decided by lambda_min(rho) > tol.
    """
    D = K.D
    T = transfer_matrix(K)
    vals, vecs = np.linalg.eig(T)

    near_one = np.abs(vals - 1.0) <= 1e-8
    mult = int(np.count_nonzero(near_one))
    if mult == 0:
        raise NonConvergent(
            f"no transfer eigenvalue within 1e-8 of 1 (closest: "
            f"{vals[np.argmin(np.abs(vals - 1.0))]!r})"
        )

    # rho from the fixed eigenspace: project vec(1/D) onto it (least squares).
    Vfix = vecs[:, near_one]
    target = np.eye(D, dtype=complex).reshape(-1, order="F") / D
    coef, *_ = np.linalg.lstsq(Vfix, target, rcond=None)
    X = _unvec(Vfix @ coef, D)

    # Hermitize: E preserves adjoints, so both Hermitian parts are fixed
    # points; keep the one carrying the trace.
    H1 = (X + X.conj().T) / 2.0
    H2 = (X - X.conj().T) / 2.0j
    H = H1 if abs(np.trace(H1)) >= abs(np.trace(H2)) else H2
    if np.trace(H).real < 0:
        H = -H
    lam, U = np.linalg.eigh(H)
    lam = np.clip(lam, 0.0, None)
    total = float(lam.sum())
    if total <= 1e-12:
        raise NonConvergent("fixed eigenspace carries no positive part")
    rho = (U * (lam / total)) @ U.conj().T
    rho = (rho + rho.conj().T) / 2.0

    resid = np.linalg.norm(transfer_apply(K, rho) - rho)
    if resid > 1e-9:
        raise NonConvergent(f"||E(rho) - rho|| = {resid:.3e} exceeds 1e-9")

    moduli = np.sort(np.abs(vals))[::-1]
    second = float(moduli[1]) if moduli.size > 1 else 0.0
    gap = 1.0 - second
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    primitive = mult == 1 and second < 1.0 - 1e-8 and lam_min > tol
    return TransferFixedPoint(rho=rho, gap=gap, primitive=primitive)


def _iterate(K: KrausFamily, M: np.ndarray, n: int, adjoint: bool) -> np.ndarray:
    if int(n) != n or n < 0:
        raise OutOfRange(f"iteration count must be a non-negative integer, got {n!r}")
    if n > _MAX_ENV_ITER:
        raise OutOfRange(f"n = {n} exceeds the environment iteration cap {_MAX_ENV_ITER}")
    out = np.asarray(M, dtype=complex)
    step = transfer_adjoint_apply if adjoint else transfer_apply
    for _ in range(int(n)):
        out = step(K, out)
    return out


def left_environment(K: KrausFamily, L: np.ndarray, n: int) -> np.ndarray:
    """sigma = E^n(|L><L|): the reduced environment after n traced-out sites."""
    L = np.asarray(L, dtype=complex).ravel()
    if L.shape != (K.D,):
        raise ShapeMismatch(f"L must have length {K.D}, got {L.shape}")
    return _iterate(K, np.outer(L, L.conj()), n, adjoint=False)


def right_environment(K: KrausFamily, R: np.ndarray, n: int) -> np.ndarray:
    """F^dag F = E*^n(|R><R|); contractive since E* is unital and |R><R| <= 1."""
    R = np.asarray(R, dtype=complex).ravel()
    if R.shape != (K.D,):
        raise ShapeMismatch(f"R must have length {K.D}, got {R.shape}")
    return _iterate(K, np.outer(R, R.conj()), n, adjoint=True)


def sqrt_env(M: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Principal square root of a PSD matrix (Hermitian, PSD, S @ S = M)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotPSD(f"expected a square matrix, got {M.shape}")
    if np.linalg.norm(M - M.conj().T) > 1e-8 * max(np.linalg.norm(M), 1.0):
        raise NotPSD("matrix is not Hermitian")
    lam, U = np.linalg.eigh((M + M.conj().T) / 2.0)
    if lam[0] < -atol:
        raise NotPSD(f"negative eigenvalue {lam[0]:.3e} beyond -{atol:.1e}")
    S = (U * np.sqrt(np.clip(lam, 0.0, None))) @ U.conj().T
    return (S + S.conj().T) / 2.0


def normalization_k2(
    K: KrausFamily,
    boundaries: BoundaryPair,
    geometry: ChainGeometry | int,
) -> float:
    """K^2 = <R| E^{|Lambda|}(|L><L|) |R>, real and in [0, 1].

    ``geometry`` may be a ChainGeometry (|Lambda| = total) or a plain site
    count; the count 0 gives the bare overlap |<R|L>|^2.
    """
    n = geometry.total if isinstance(geometry, ChainGeometry) else int(geometry)
    sig = left_environment(K, boundaries.L, n)
    val = complex(boundaries.R.conj() @ sig @ boundaries.R)
    return float(min(max(val.real, 0.0), 1.0))


def renormalize(matrices: Sequence[np.ndarray], atol: float = 1e-10) -> KrausFamily:
    """Explicit repair helper: B_x = A_x S^(-1/2) with S = sum A^dag A.

    Never applied implicitly anywhere in the package; S must be full rank.
    """
    ops = np.stack([np.asarray(m, dtype=complex) for m in matrices])
    S = np.einsum("xba,xbc->ac", ops.conj(), ops)
    lam, U = np.linalg.eigh((S + S.conj().T) / 2.0)
    if lam[0] <= 1e-12:
        raise NotPSD(f"sum A^dag A is singular (lambda_min = {lam[0]:.3e})")
    S_inv_half = (U * (1.0 / np.sqrt(lam))) @ U.conj().T
    return KrausFamily(ops=np.einsum("xab,bc->xac", ops, S_inv_half), atol=atol)
