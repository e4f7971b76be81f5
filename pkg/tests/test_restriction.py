import itertools

import numpy as np
import pytest

from mpsrestrict.chain import BoundaryPair, ChainGeometry
from mpsrestrict.errors import (
    EnumerationTooLarge,
    GeometryMismatch,
    SymbolOutOfRange,
    ZeroProbabilityString,
)
from mpsrestrict.gibbs import marginal
from mpsrestrict.models import aklt, clock, damping, markov
from mpsrestrict.restriction import (
    CmiReport,
    RestrictionContext,
    average_entropy,
    average_purity_q,
    chain_distribution,
    classical_cmi,
    cmi_report,
    post_measurement_spectrum,
    quantum_cmi,
    restriction_scan,
    string_probability,
    window_distribution,
)


@pytest.fixture(scope="module")
def aklt_ctx():
    return RestrictionContext.stationary(aklt())


def test_stationary_context_fields(aklt_ctx):
    assert np.allclose(aklt_ctx.sigma, np.eye(2) / 2, atol=1e-12)
    assert np.allclose(aklt_ctx.f_op, np.eye(2), atol=1e-12)
    assert aklt_ctx.k2 == 1.0
    for n in range(1, 4):
        assert aklt_ctx.k2_for(n) == pytest.approx(1.0, abs=1e-12)


def test_context_rejects_bad_environments():
    K = aklt()
    with pytest.raises(Exception):
        RestrictionContext(kraus=K, sigma=np.diag([0.7, 0.7]), f_op=np.eye(2), k2=1.0)
    with pytest.raises(Exception):
        RestrictionContext(kraus=K, sigma=np.eye(2) / 2, f_op=2.0 * np.eye(2), k2=1.0)
    with pytest.raises(ValueError):
        RestrictionContext(kraus=K, sigma=np.eye(2) / 2, f_op=np.eye(2), k2=0.0)


def test_all_zeros_string_probability(aklt_ctx):
    for n in range(1, 7):
        p = string_probability(aklt_ctx, (0,) * n)
        assert p == pytest.approx(3.0 ** (-n), rel=1e-12)


def test_probabilities_sum_to_one(aklt_ctx):
    for n in (1, 2, 3):
        total = sum(
            string_probability(aklt_ctx, xs)
            for xs in itertools.product(range(3), repeat=n)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_string_validation(aklt_ctx):
    with pytest.raises(SymbolOutOfRange):
        string_probability(aklt_ctx, (0, 3))
    with pytest.raises(SymbolOutOfRange):
        string_probability(aklt_ctx, ())


def test_markov_string_probability_is_path_measure():
    ctx = RestrictionContext.stationary(markov())
    # stationary distribution of [[0.8, 0.2], [0.3, 0.7]] is (0.6, 0.4)
    assert string_probability(ctx, (1,)) == pytest.approx(0.6 * 0.2, abs=1e-12)
    assert string_probability(ctx, (0,)) == pytest.approx(0.6 * 0.8, abs=1e-12)
    # two steps must chain only compatible transitions: (0->1), (1->1)
    assert string_probability(ctx, (1, 3)) == pytest.approx(0.6 * 0.2 * 0.7, abs=1e-12)
    # incompatible pair (0->1) then (0->0) has probability zero
    assert string_probability(ctx, (1, 0)) == pytest.approx(0.0, abs=1e-15)


def test_post_measurement_spectrum(aklt_ctx):
    spec = post_measurement_spectrum(aklt_ctx, (0, 0))
    assert spec.values.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(spec.values, [0.5, 0.5], atol=1e-12)
    with pytest.raises(ZeroProbabilityString):
        post_measurement_spectrum(aklt_ctx, (1, 1))  # A_+ A_+ = 0


def test_post_measurement_isospectral_routes(aklt_ctx):
    """Spectrum of T T^dag equals that of the inner operator T^dag T."""
    K = aklt_ctx.kraus
    xs = (0, 1, 2)
    P = aklt_ctx.sqrt_sigma
    for s in xs:
        P = K.ops[s] @ P
    T = aklt_ctx.f_op @ P
    outer = np.linalg.eigvalsh(T @ T.conj().T)
    inner = np.linalg.eigvalsh(T.conj().T @ T)
    assert np.allclose(outer, inner, atol=1e-12)
    spec = post_measurement_spectrum(aklt_ctx, xs)
    assert np.allclose(spec.values, np.clip(outer[::-1], 0, None) / outer.sum(), atol=1e-12)


def test_scan_matches_naive_loop(aklt_ctx):
    n = 3
    s = restriction_scan(aklt_ctx, n)
    total_p = 0.0
    total_entropy = 0.0
    total_q = 0.0
    for xs in itertools.product(range(3), repeat=n):
        p = string_probability(aklt_ctx, xs)
        total_p += p
        if p > 1e-14 * 3.0 ** (-n):
            vals = post_measurement_spectrum(aklt_ctx, xs).values
            pos = vals[vals > 0]
            total_entropy += p * float(-(pos * np.log(pos)).sum())
            total_q += p * float(vals[0])
    assert s.p_sum == pytest.approx(total_p, abs=1e-12)
    assert s.avg_entropy == pytest.approx(total_entropy, abs=1e-12)
    assert s.avg_purity_q == pytest.approx(1.0 - total_q, abs=1e-12)


def test_aklt_frozen_aggregates(aklt_ctx):
    for n in (1, 2, 3, 4):
        assert quantum_cmi(aklt_ctx, n) == pytest.approx(
            2.0 * np.log(2.0) * 3.0 ** (-n), rel=1e-10
        )
    assert average_purity_q(aklt_ctx, 2) == pytest.approx(1.0 / 18.0, abs=1e-12)
    assert average_entropy(aklt_ctx, 1) == pytest.approx(np.log(2.0) / 3.0, rel=1e-12)


def test_purity_sandwich_tight_for_bond_two(aklt_ctx):
    """At D = 2 both sandwich inequalities collapse to Q = sum(lam2)/K^2."""
    for n in (1, 2, 3):
        s = restriction_scan(aklt_ctx, n)
        assert s.avg_purity_q == pytest.approx(s.lam2_sum_over_k2, abs=1e-12)


def test_scan_thread_determinism(aklt_ctx):
    a = restriction_scan(aklt_ctx, 4, threads=1)
    b = restriction_scan(aklt_ctx, 4, threads=3)
    assert a == b  # bit-identical fields, not merely approximately equal


def test_enumeration_guard(aklt_ctx):
    with pytest.raises(EnumerationTooLarge):
        restriction_scan(aklt_ctx, 20, guard=1000)
    with pytest.raises(EnumerationTooLarge):
        window_distribution(aklt_ctx, 20, guard=1000)


def test_finite_context_consistency():
    """Marginalizing the full finite chain over the flanks reproduces the
    window distribution of the dressed context."""
    K = damping(0.5)
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    b = BoundaryPair(L=v, R=v)
    geom = ChainGeometry(len_a=1, len_b=2, len_c=1)
    ctx = RestrictionContext.from_boundaries(K, b, geom)
    chain = chain_distribution(K, b, geom)
    window = window_distribution(ctx, 2)
    assert np.allclose(marginal(chain, 2, 3), window.table, atol=1e-12)
    assert restriction_scan(ctx, 2).p_sum == pytest.approx(1.0, abs=1e-12)


def test_degenerate_boundaries_rejected():
    # identity transition matrix is reducible; orthogonal boundaries kill K^2
    K = markov([[1.0, 0.0], [0.0, 1.0]])
    b = BoundaryPair(L=np.array([1.0, 0.0]), R=np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        chain_distribution(K, b, 2)
    with pytest.raises(ValueError):
        RestrictionContext.from_boundaries(K, b, ChainGeometry(0, 1, 0))


def test_classical_cmi_markov_vanishes():
    K = markov()
    b = BoundaryPair(L=np.array([1.0, 0.0]), R=np.array([1.0, 1.0]) / np.sqrt(2.0))
    geom = ChainGeometry(len_a=2, len_b=2, len_c=2)
    p = chain_distribution(K, b, geom)
    assert abs(classical_cmi(p, geom)) <= 1e-9


def test_classical_cmi_geometry_checks():
    K = markov()
    b = BoundaryPair(L=np.array([1.0, 0.0]), R=np.array([1.0, 1.0]) / np.sqrt(2.0))
    p = chain_distribution(K, b, 3)
    with pytest.raises(GeometryMismatch):
        classical_cmi(p, ChainGeometry(len_a=1, len_b=1, len_c=2))  # total 4 != 3
    # empty flanks are legal and give zero
    assert classical_cmi(p, ChainGeometry(len_a=0, len_b=3, len_c=0)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_cmi_report_invariants(aklt_ctx):
    rep = cmi_report(aklt_ctx, 2, window_a=2, window_c=2)
    assert rep.classical_cmi <= rep.quantum_cmi + 1e-9
    assert rep.quantum_cmi == pytest.approx(2.0 * rep.avg_entropy, abs=1e-12)
    assert 0.0 <= rep.avg_purity_q <= 1.0


def test_cmi_report_constructor_enforces_ordering():
    with pytest.raises(ValueError):
        CmiReport(n=1, classical_cmi=1.0, quantum_cmi=0.5, avg_entropy=0.25, avg_purity_q=0.1)
    with pytest.raises(ValueError):
        CmiReport(n=1, classical_cmi=0.1, quantum_cmi=0.5, avg_entropy=0.4, avg_purity_q=0.1)
    with pytest.raises(ValueError):
        CmiReport(n=1, classical_cmi=0.1, quantum_cmi=0.5, avg_entropy=0.25, avg_purity_q=1.5)


def test_quantum_cmi_beats_classical_across_models(aklt_ctx):
    for ctx in (aklt_ctx, RestrictionContext.stationary(clock(3))):
        rep = cmi_report(ctx, 2, window_a=1, window_c=1)
        assert rep.classical_cmi <= rep.quantum_cmi + 1e-9


def test_cmi_report_finite_context_absorbs_window_sites():
    # With len_a = 0 the context's sigma is the pure |L><L|, so a block
    # touching it directly would report zero entropy; the window sites in a
    # (1, n, 1) geometry must be folded into the environments first or the
    # classical CMI overshoots the quantum bound.
    from mpsrestrict.purity import haar_kraus

    rng = np.random.default_rng(3)
    K = haar_kraus(2, 2, 500)
    L = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    R = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    ctx = RestrictionContext.from_boundaries(
        K,
        BoundaryPair(L=L / np.linalg.norm(L), R=R / np.linalg.norm(R)),
        ChainGeometry(len_a=0, len_b=1, len_c=1),
    )
    rep = cmi_report(ctx, 1, window_a=1, window_c=1)
    assert rep.classical_cmi <= rep.quantum_cmi + 1e-9
    assert rep.quantum_cmi > 1e-6  # the dressed block really is entangled
    # the bare block against the pure left boundary has zero entropy
    assert restriction_scan(ctx, 1).avg_entropy == pytest.approx(0.0, abs=1e-12)
