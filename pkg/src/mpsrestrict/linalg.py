"""Dense complex linear algebra and entropic functionals.

Conventions used throughout the package:

* all entropies are in nats (natural logarithm);
* spectra are reported sorted non-increasing;
* the antisymmetric (exterior-square) subspace is spanned by
  (|i>|j> - |j>|i>)/sqrt(2) for i < j, pairs ordered lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DimensionTooSmall,
    InvalidDistribution,
    NonHermitian,
    NonSquare,
    NotDensityOperator,
    OutOfRange,
    ShapeMismatch,
)

__all__ = [
    "Spectrum",
    "herm_eigen",
    "singular_values",
    "von_neumann_entropy",
    "shannon_entropy",
    "binary_entropy",
    "g_func",
    "exterior_square",
    "clock_shift_basis",
    "gram_matrix",
    "gram_rank",
]


@dataclass(frozen=True)
class Spectrum:
    """Real values sorted non-increasing, with optional orthonormal vectors.

    ``values[i]`` pairs with column ``vectors[:, i]`` when vectors are present.
    Only the sorted values are contractual; eigenvector phases and the basis
    chosen inside degenerate clusters are solver-dependent.
    """

    values: np.ndarray
    vectors: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ShapeMismatch("spectrum values must be a flat vector")
        if np.any(np.diff(v) > 1e-12):
            raise ShapeMismatch("spectrum values must be sorted non-increasing")
        object.__setattr__(self, "values", v)


def _as_matrix(obj: np.ndarray | Sequence) -> np.ndarray:
    m = np.asarray(obj, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatch(f"expected a 2-d matrix, got shape {np.shape(obj)}")
    if not np.all(np.isfinite(m.view(float))):
        raise ShapeMismatch("matrix contains NaN or Inf entries")
    return m


def herm_eigen(H: np.ndarray, tol: float = 1e-10) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    The input must satisfy ``||H - H^dag|| <= tol * ||H||``; the returned
    eigenvalues are real and sorted non-increasing, and the reconstruction
    ``V diag(w) V^dag`` matches H to 1e-10 * ||H|| (LAPACK guarantee).
    """
    H = _as_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise NonSquare(f"expected square matrix, got {H.shape}")
    scale = np.linalg.norm(H)
    asym = np.linalg.norm(H - H.conj().T)
    if asym > tol * max(scale, 1.0):
        raise NonHermitian(f"||H - H^dag|| = {asym:.3e} exceeds {tol:.1e} * ||H||")
    w, v = np.linalg.eigh((H + H.conj().T) / 2.0)
    return Spectrum(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def singular_values(O: np.ndarray) -> Spectrum:
    """Singular values nu_1 >= nu_2 >= ... of a rectangular matrix.

    Satisfies nu_j(O)^2 = lambda_j(O^dag O).
    """
    O = _as_matrix(O)
    return Spectrum(values=np.linalg.svd(O, compute_uv=False))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -sum lambda ln lambda in nats, with 0 ln 0 := 0.

    Eigenvalues in [-1e-10, 0) are clamped to 0 (eigensolver noise on
    rank-deficient inputs); anything more negative, a trace off 1 by more
    than 1e-8, or a non-Hermitian input raises NotDensityOperator.
    """
    rho = _as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise NotDensityOperator(f"density operator must be square, got {rho.shape}")
    scale = max(np.linalg.norm(rho), 1.0)
    if np.linalg.norm(rho - rho.conj().T) > 1e-8 * scale:
        raise NotDensityOperator("density operator must be Hermitian")
    tr = complex(np.trace(rho)).real
    if abs(tr - 1.0) > 1e-8:
        raise NotDensityOperator(f"trace {tr!r} differs from 1 beyond 1e-8")
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if lam[0] < -1e-10:
        raise NotDensityOperator(f"negative eigenvalue {lam[0]:.3e} beyond -1e-10")
    lam = np.clip(lam, 0.0, 1.0)
    pos = lam[lam > 0.0]
    return float(-np.sum(pos * np.log(pos)))


def shannon_entropy(p: np.ndarray | Sequence[float]) -> float:
    """H(p) = -sum p ln p in nats, with 0 ln 0 := 0."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidDistribution("weights must be a non-empty finite vector")
    if np.min(p) < -1e-10:
        raise InvalidDistribution(f"negative weight {np.min(p):.3e}")
    if abs(p.sum() - 1.0) > 1e-10:
        raise InvalidDistribution(f"weights sum to {p.sum()!r}, not 1")
    pos = p[p > 0.0]
    return float(-np.sum(pos * np.log(pos)))


def binary_entropy(t: float) -> float:
    """H_B(t) = -t ln t - (1-t) ln(1-t), with H_B(0) = H_B(1) = 0."""
    t = float(t)
    if t < 0.0 or t > 1.0:
        raise OutOfRange(f"binary_entropy needs t in [0, 1], got {t!r}")
    out = 0.0
    if 0.0 < t:
        out -= t * np.log(t)
    if t < 1.0:
        out -= (1.0 - t) * np.log(1.0 - t)
    return float(out)


def g_func(t: float) -> float:
    """g(t) = t - t ln t with g(0) = 0; monotone increasing on [0, 1].

    Dominates the binary entropy: H_B(t) <= g(t) on [0, 1].
    """
    t = float(t)
    if t < 0.0 or t > 1.0:
        raise OutOfRange(f"g_func needs t in [0, 1], got {t!r}")
    if t == 0.0:
        return 0.0
    return float(t - t * np.log(t))


def exterior_square(O: np.ndarray) -> np.ndarray:
    """Second exterior power of O on the antisymmetric subspaces.

    For O mapping a D1-dimensional space into a D2-dimensional one, returns
    the C(D2,2) x C(D1,2) matrix of 2x2 minors

        W[(a,b), (i,j)] = O[a,i] O[b,j] - O[a,j] O[b,i],

    with row pairs a<b and column pairs i<j in lexicographic order — i.e. the
    compression of O (x) O to the antisymmetric subspaces in the basis
    (|i>|j> - |j>|i>)/sqrt(2).  Its operator norm is nu_1(O) * nu_2(O), and
    it is multiplicative: ext(O_B O_A) = ext(O_B) ext(O_A).
    """
    O = _as_matrix(O)
    d2, d1 = O.shape
    if d1 < 2 or d2 < 2:
        raise DimensionTooSmall(f"exterior square needs both dims >= 2, got {O.shape}")
    rows = np.array(list(combinations(range(d2), 2)))
    cols = np.array(list(combinations(range(d1), 2)))
    a = rows[:, 0][:, None]
    b = rows[:, 1][:, None]
    i = cols[:, 0][None, :]
    j = cols[:, 1][None, :]
    return O[a, i] * O[b, j] - O[a, j] * O[b, i]


def clock_shift_basis(D: int) -> list[np.ndarray]:
    """Unitary operator basis U_{jk} = Lambda_1^j Lambda_3^k, j,k = 0..D-1.

    Lambda_1 is the cyclic shift |n> -> |n+1 mod D|, Lambda_3 the clock
    diag(1, w, ..., w^(D-1)) with w = exp(i 2 pi / D).  The list is indexed
    flat as j*D + k.  Satisfies Tr(U_{jk}^dag U_{j'k'}) = D delta delta and the
    exchange relation U_{j'k'} U_{jk} = w^(k'j - j'k) U_{jk} U_{j'k'}.
    """
    D = int(D)
    if D < 2:
        raise DimensionTooSmall(f"clock/shift basis needs D >= 2, got {D}")
    omega = np.exp(2j * np.pi / D)
    shift = np.zeros((D, D), dtype=complex)
    for n in range(D):
        shift[(n + 1) % D, n] = 1.0
    clock = np.diag(omega ** np.arange(D))
    basis: list[np.ndarray] = []
    for j in range(D):
        sj = np.linalg.matrix_power(shift, j)
        for k in range(D):
            basis.append(sj @ np.linalg.matrix_power(clock, k))
    return basis


def gram_matrix(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Gram matrix M[x, x'] = Tr(Q_x^dag Q_x') of a list of equal-shape matrices."""
    if len(ops) == 0:
        raise ShapeMismatch("gram_matrix needs at least one operator")
    mats = [_as_matrix(o) for o in ops]
    shape = mats[0].shape
    for m in mats[1:]:
        if m.shape != shape:
            raise ShapeMismatch(f"mixed shapes {shape} vs {m.shape}")
    V = np.stack([m.ravel() for m in mats])
    return V.conj() @ V.T


def gram_rank(ops: Sequence[np.ndarray], tol: float = 1e-10) -> int:
    """Rank of the Gram matrix: eigenvalues above tol * lambda_max.

    For sets much larger than the operator space, the rank is computed from
    S = sum_x vec(Q_x) vec(Q_x)^dag, which shares the Gram matrix's nonzero
    spectrum (same lambda_max, same count above the threshold) but stays
    (D1*D2)-dimensional.
    """
    if len(ops) == 0:
        raise ShapeMismatch("gram_rank needs at least one operator")
    n_amb = int(np.prod(np.shape(ops[0])))
    if len(ops) <= max(n_amb, 64):
        lam = np.linalg.eigvalsh(gram_matrix(ops))
    else:
        mats = [_as_matrix(o) for o in ops]
        S = np.zeros((n_amb, n_amb), dtype=complex)
        for m in mats:
            v = m.ravel()
            S += np.outer(v, v.conj())
        lam = np.linalg.eigvalsh(S)
    lam_max = lam[-1] if lam.size else 0.0
    if lam_max <= 0.0:
        return 0
    return int(np.count_nonzero(lam > tol * lam_max))
