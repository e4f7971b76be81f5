"""Classical restrictions of a matrix product state.

A restriction context carries the Kraus family together with the left
environment sigma = E^{|A|}(|L><L|), the right dressing F = sqrt(E*^{|C|}
(|R><R|)) and the normalization K^2.  String probabilities are

    p(x_1..x_N) = Tr[F A_{x_N} ... A_{x_1} sigma A^dag ... A^dag F^dag] / K^2,

the post-measurement state on the traced-out regions is isospectral to the
operator inside the trace (normalized), and the average of its von Neumann
entropy over all strings drives both the quantum CMI (= twice the average
entropy for a pure global state) and the average purity Q.

All enumerations run depth-first in lexicographic string order (site 1 is
the most significant digit).  Partial sums are combined in fixed index
order, so results are bit-identical for any degree of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import (
    BoundaryPair,
    ChainGeometry,
    KrausFamily,
    fixed_point,
    left_environment,
    normalization_k2,
    right_environment,
    sqrt_env,
    transfer_adjoint_apply,
    transfer_apply,
)
from .errors import (
    EnumerationTooLarge,
    FNotContractive,
    GeometryMismatch,
    NotDensityOperator,
    SymbolOutOfRange,
    ZeroProbabilityString,
)
from .gibbs import ChainDistribution
from .linalg import Spectrum, shannon_entropy

__all__ = [
    "RestrictionContext",
    "CmiReport",
    "RestrictionSummary",
    "DEFAULT_GUARD",
    "string_probability",
    "post_measurement_spectrum",
    "average_entropy",
    "quantum_cmi",
    "average_purity_q",
    "restriction_scan",
    "window_distribution",
    "chain_distribution",
    "classical_cmi",
    "cmi_report",
]

DEFAULT_GUARD = 2_000_000  # max d^n strings per enumeration; overridable everywhere


def _check_density(sigma: np.ndarray, what: str = "sigma") -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise NotDensityOperator(f"{what} must be square, got {sigma.shape}")
    if np.linalg.norm(sigma - sigma.conj().T) > 1e-8 * max(np.linalg.norm(sigma), 1.0):
        raise NotDensityOperator(f"{what} must be Hermitian")
    lam = np.linalg.eigvalsh((sigma + sigma.conj().T) / 2.0)
    if lam[0] < -1e-10:
        raise NotDensityOperator(f"{what} has negative eigenvalue {lam[0]:.3e}")
    tr = complex(np.trace(sigma)).real
    if abs(tr - 1.0) > 1e-8:
        raise NotDensityOperator(f"{what} has trace {tr!r}, expected 1")
    return sigma


def _check_contraction(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=complex)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise FNotContractive(f"F must be square, got {F.shape}")
    lam_max = float(np.linalg.eigvalsh(F.conj().T @ F)[-1])
    if lam_max > 1.0 + 1e-10:
        raise FNotContractive(f"largest eigenvalue of F^dag F is {lam_max!r} > 1")
    return F


@dataclass(frozen=True)
class RestrictionContext:
    """Kraus family dressed with environments (sigma, F) and normalization.

    ``k2`` records the construction-geometry normalization; the per-length
    values K^2(N) = Tr(F^dag F E^N(sigma)) are computed lazily and cached, so
    probabilities sum to 1 exactly for every N.
    """

    kraus: KrausFamily
    sigma: np.ndarray
    f_op: np.ndarray
    k2: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        sigma = _check_density(self.sigma)
        f_op = _check_contraction(self.f_op)
        D = self.kraus.D
        if sigma.shape != (D, D) or f_op.shape != (D, D):
            raise FNotContractive(f"environments must be {D}x{D}")
        if self.k2 < 1e-12:
            raise ValueError(f"context rejected: K^2 = {self.k2!r} < 1e-12")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "f_op", f_op)

    @classmethod
    def stationary(cls, kraus: KrausFamily) -> "RestrictionContext":
        """Infinite-chain mode: sigma = fixed point rho, F = identity, K^2 = 1."""
        rho = fixed_point(kraus).rho
        return cls(kraus=kraus, sigma=rho, f_op=np.eye(kraus.D, dtype=complex), k2=1.0)

    @classmethod
    def from_boundaries(
        cls,
        kraus: KrausFamily,
        boundaries: BoundaryPair,
        geometry: ChainGeometry,
    ) -> "RestrictionContext":
        """Finite-chain mode: sigma = E^lenA(L), F = sqrt(E*^lenC(R))."""
        sigma = left_environment(kraus, boundaries.L, geometry.len_a)
        f2 = right_environment(kraus, boundaries.R, geometry.len_c)
        f_op = sqrt_env(f2)
        k2 = normalization_k2(kraus, boundaries, geometry)
        return cls(kraus=kraus, sigma=sigma, f_op=f_op, k2=k2)

    @property
    def sqrt_sigma(self) -> np.ndarray:
        if "sqrt_sigma" not in self._cache:
            self._cache["sqrt_sigma"] = sqrt_env(self.sigma)
        return self._cache["sqrt_sigma"]

    def k2_for(self, n: int) -> float:
        """K^2(n) = Tr(F^dag F E^n(sigma)), cached per n."""
        key = ("k2", int(n))
        if key not in self._cache:
            envs = self._cache.setdefault("envs", [np.asarray(self.sigma)])
            while len(envs) <= n:
                from .chain import transfer_apply

                envs.append(transfer_apply(self.kraus, envs[-1]))
            f2 = self.f_op.conj().T @ self.f_op
            self._cache[key] = float(np.trace(f2 @ envs[int(n)]).real)
        return self._cache[key]


@dataclass(frozen=True)
class RestrictionSummary:
    """All per-length aggregates from one pass over the d^n strings."""

    n: int
    p_sum: float
    avg_entropy: float
    avg_purity_q: float
    lam2_sum_over_k2: float  # sum of second eigenvalues / K^2 (sandwich bounds)
    f_value: float  # sum over strings of nu1*nu2 of F A..A sqrt(sigma)


@dataclass(frozen=True)
class CmiReport:
    """Classical and quantum CMI for a block of n sites, plus entropy and Q."""

    n: int
    classical_cmi: float
    quantum_cmi: float
    avg_entropy: float
    avg_purity_q: float

    def __post_init__(self) -> None:
        if not (self.classical_cmi <= self.quantum_cmi + 1e-9):
            raise ValueError(
                f"classical CMI {self.classical_cmi!r} exceeds quantum "
                f"{self.quantum_cmi!r} beyond tolerance"
            )
        if abs(self.quantum_cmi - 2.0 * self.avg_entropy) > 1e-10:
            raise ValueError("quantum CMI must equal twice the average entropy")
        if not (-1e-9 <= self.avg_purity_q <= 1.0 + 1e-9):
            raise ValueError(f"average purity {self.avg_purity_q!r} outside [0, 1]")


def _validate_string(x: Sequence[int], d: int) -> tuple[int, ...]:
    xs = tuple(int(s) for s in x)
    if len(xs) < 1:
        raise SymbolOutOfRange("measurement string must have length >= 1")
    for s in xs:
        if not (0 <= s < d):
            raise SymbolOutOfRange(f"symbol {s} outside [0, {d})")
    return xs


def _check_guard(d: int, n: int, guard: int) -> None:
    if d**n > guard:
        raise EnumerationTooLarge(f"d^n = {d**n} exceeds the guard {guard}")


def _zero_threshold(d: int, n: int) -> float:
    # strings below this probability are excluded from entropy/purity sums
    return 1e-14 * d ** (-n)


def _string_matrix(ctx: RestrictionContext, xs: tuple[int, ...]) -> np.ndarray:
    """T = F A_{x_N} ... A_{x_1} sqrt(sigma); all observables come from T T^dag."""
    P = ctx.sqrt_sigma
    for s in xs:
        P = ctx.kraus.ops[s] @ P
    return ctx.f_op @ P


def string_probability(ctx: RestrictionContext, x: Sequence[int]) -> float:
    """p(x) = ||F A_{x_N}..A_{x_1} sqrt(sigma)||_F^2 / K^2(N), non-negative."""
    xs = _validate_string(x, ctx.kraus.d)
    T = _string_matrix(ctx, xs)
    return float(np.linalg.norm(T) ** 2 / ctx.k2_for(len(xs)))


def post_measurement_spectrum(ctx: RestrictionContext, x: Sequence[int]) -> Spectrum:
    """Spectrum of the normalized post-measurement state for outcome string x."""
    xs = _validate_string(x, ctx.kraus.d)
    T = _string_matrix(ctx, xs)
    lam = np.linalg.eigvalsh(T @ T.conj().T)
    tr = float(lam.sum())
    if tr / ctx.k2_for(len(xs)) < _zero_threshold(ctx.kraus.d, len(xs)):
        raise ZeroProbabilityString(f"string {xs} has probability below threshold")
    vals = np.clip(lam[::-1] / tr, 0.0, None)
    return Spectrum(values=vals)


def _scan_chunk(
    ops: np.ndarray,
    f_op: np.ndarray | None,
    P: np.ndarray,
    depth_left: int,
    tr_floor: float,
) -> np.ndarray:
    """Sequential DFS below one prefix; returns raw accumulator sums.

    Accumulator: [sum tr, sum tr*S, sum lam1, sum lam2, sum sqrt(lam1*lam2)],
    all un-normalized (division by K^2 happens at the top).
    """
    acc = np.zeros(5)
    d = ops.shape[0]
    if depth_left == 0:
        T = P if f_op is None else f_op @ P
        lam = np.linalg.eigvalsh(T @ T.conj().T)
        tr = float(lam.sum())
        acc[0] = tr
        if tr >= tr_floor:
            lam1 = float(lam[-1])
            lam2 = float(lam[-2]) if lam.size > 1 else 0.0
            q = np.clip(lam / tr, 0.0, 1.0)
            q = q[q > 0.0]
            acc[1] = tr * float(-np.sum(q * np.log(q)))
            acc[2] = lam1
            acc[3] = max(lam2, 0.0)
            acc[4] = float(np.sqrt(max(lam1, 0.0) * max(lam2, 0.0)))
        return acc
    for s in range(d):
        acc += _scan_chunk(ops, f_op, ops[s] @ P, depth_left - 1, tr_floor)
    return acc


def restriction_scan(
    ctx: RestrictionContext,
    n: int,
    guard: int = DEFAULT_GUARD,
    threads: int = 1,
) -> RestrictionSummary:
    """One lexicographic pass over all d^n strings, aggregating everything.

    Zero-probability strings (p < 1e-14 d^-n) contribute only to the raw
    probability sum.  With ``threads`` > 1 the first symbol is fanned out to
    a thread pool and the d partial sums are combined in symbol order, so
    the result is bit-identical to the sequential one.
    """
    d = ctx.kraus.d
    _check_guard(d, n, guard)
    if n < 1:
        raise SymbolOutOfRange(f"block length must be >= 1, got {n}")
    k2 = ctx.k2_for(n)
    tr_floor = _zero_threshold(d, n) * k2
    eye = np.eye(ctx.kraus.D, dtype=complex)
    f_op = None if np.allclose(ctx.f_op, eye, atol=0.0, rtol=0.0) else ctx.f_op
    root = ctx.sqrt_sigma

    if threads > 1 and n >= 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            futures = [
                pool.submit(_scan_chunk, ctx.kraus.ops, f_op, ctx.kraus.ops[s] @ root, n - 1, tr_floor)
                for s in range(d)
            ]
            parts = [f.result() for f in futures]
        acc = np.zeros(5)
        for part in parts:  # fixed symbol order, independent of pool scheduling
            acc += part
    else:
        acc = _scan_chunk(ctx.kraus.ops, f_op, root, n, tr_floor)

    return RestrictionSummary(
        n=int(n),
        p_sum=float(acc[0] / k2),
        avg_entropy=float(acc[1] / k2),
        avg_purity_q=float(1.0 - acc[2] / k2),
        lam2_sum_over_k2=float(acc[3] / k2),
        f_value=float(acc[4]),
    )


def average_entropy(
    ctx: RestrictionContext, n: int, guard: int = DEFAULT_GUARD, threads: int = 1
) -> float:
    """<S> = sum_x p(x) S[post-measurement state(x)] over all d^n strings."""
    return restriction_scan(ctx, n, guard=guard, threads=threads).avg_entropy


def quantum_cmi(
    ctx: RestrictionContext, n: int, guard: int = DEFAULT_GUARD, threads: int = 1
) -> float:
    """I(A:C|B) of the block-dephased pure state: exactly twice <S>."""
    return 2.0 * average_entropy(ctx, n, guard=guard, threads=threads)


def average_purity_q(
    ctx: RestrictionContext, n: int, guard: int = DEFAULT_GUARD, threads: int = 1
) -> float:
    """Q = 1 - sum_x p(x) ||post-measurement state(x)||, in [0, 1]."""
    return restriction_scan(ctx, n, guard=guard, threads=threads).avg_purity_q


def window_distribution(
    ctx: RestrictionContext, m: int, guard: int = DEFAULT_GUARD
) -> ChainDistribution:
    """Joint distribution of m consecutive outcomes under the context.

    Flat table in lexicographic order (site 1 most significant digit).
    """
    d = ctx.kraus.d
    _check_guard(d, m, guard)
    k2 = ctx.k2_for(m)
    table = np.empty(d**m)
    f_op = ctx.f_op
    idx = 0

    def walk(P: np.ndarray, depth: int) -> None:
        nonlocal idx
        if depth == m:
            T = f_op @ P
            table[idx] = np.linalg.norm(T) ** 2 / k2
            idx += 1
            return
        for s in range(d):
            walk(ctx.kraus.ops[s] @ P, depth + 1)

    walk(ctx.sqrt_sigma, 0)
    return ChainDistribution(length=m, d=d, table=table)


def chain_distribution(
    K: KrausFamily,
    boundaries: BoundaryPair,
    geometry: ChainGeometry | int,
    guard: int = DEFAULT_GUARD,
) -> ChainDistribution:
    """Full-chain restriction p(x) = |<R| A_{x_n}..A_{x_1} |L>|^2 / K^2."""
    n = geometry.total if isinstance(geometry, ChainGeometry) else int(geometry)
    if n < 1:
        raise GeometryMismatch(f"chain must have >= 1 site, got {n}")
    _check_guard(K.d, n, guard)
    k2 = normalization_k2(K, boundaries, n)
    if k2 < 1e-12:
        raise ValueError(f"degenerate boundaries: K^2 = {k2!r} < 1e-12")
    d = K.d
    table = np.empty(d**n)
    R = boundaries.R
    idx = 0

    def walk(v: np.ndarray, depth: int) -> None:
        nonlocal idx
        if depth == n:
            table[idx] = abs(complex(R.conj() @ v)) ** 2 / k2
            idx += 1
            return
        for s in range(d):
            walk(K.ops[s] @ v, depth + 1)

    walk(boundaries.L.astype(complex), 0)
    return ChainDistribution(length=n, d=d, table=table)


def classical_cmi(p: ChainDistribution, geometry: ChainGeometry) -> float:
    """I(A:C|B) = H(AB) + H(BC) - H(B) - H(ABC) from marginal entropies."""
    from .gibbs import marginal

    if geometry.total != p.length:
        raise GeometryMismatch(
            f"geometry covers {geometry.total} sites but distribution has {p.length}"
        )
    a, b = geometry.len_a, geometry.len_b
    total = p.length

    def h(j: int, k: int) -> float:
        if j > k:
            return 0.0
        return shannon_entropy(marginal(p, j, k))

    h_ab = h(1, a + b)
    h_bc = h(a + 1, total)
    h_b = h(a + 1, a + b)
    h_abc = h(1, total)
    return float(h_ab + h_bc - h_b - h_abc)


def _absorb_windows(
    ctx: RestrictionContext, window_a: int, window_c: int
) -> RestrictionContext:
    """Fold unmeasured window sites into the environments.

    The block of a (window_a, n, window_c) geometry is separated from the
    context's environments by the flanking window sites, so the conditional
    state given a block outcome sees sigma' = E^{window_a}(sigma) on the left
    and F'^dag F' = E*^{window_c}(F^dag F) on the right.  For a stationary
    context both maps leave the environments invariant.
    """
    if window_a == 0 and window_c == 0:
        return ctx
    sigma = ctx.sigma
    for _ in range(window_a):
        sigma = transfer_apply(ctx.kraus, sigma)
    f2 = ctx.f_op.conj().T @ ctx.f_op
    for _ in range(window_c):
        f2 = transfer_adjoint_apply(ctx.kraus, f2)
    k2 = float(np.trace(f2 @ sigma).real)
    return RestrictionContext(
        kraus=ctx.kraus, sigma=sigma, f_op=sqrt_env(f2), k2=k2
    )


def cmi_report(
    ctx: RestrictionContext,
    n: int,
    window_a: int = 2,
    window_c: int = 2,
    guard: int = DEFAULT_GUARD,
    threads: int = 1,
) -> CmiReport:
    """Assemble the per-block CMI report.

    The quantum side conditions on everything outside the block, i.e. the
    window sites folded into the environments; the classical side probes
    only the ``window_a`` and ``window_c`` visible sites (discarding the
    environments), which can only lower the classical CMI, so the ordering
    classical <= quantum is preserved.
    """
    summary = restriction_scan(
        _absorb_windows(ctx, window_a, window_c), n, guard=guard, threads=threads
    )
    geom = ChainGeometry(len_a=window_a, len_b=n, len_c=window_c)
    dist = window_distribution(ctx, geom.total, guard=guard)
    cls = max(0.0, classical_cmi(dist, geom))
    return CmiReport(
        n=int(n),
        classical_cmi=cls,
        quantum_cmi=2.0 * summary.avg_entropy,
        avg_entropy=summary.avg_entropy,
        avg_purity_q=summary.avg_purity_q,
    )
