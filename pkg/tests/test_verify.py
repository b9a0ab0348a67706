import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncglab.dirac import AlphaSequence, ProjectionChain, commutator_blocks
from ncglab.models import Element, RepresentationModel, realize
from ncglab.opcore import op_norm
from ncglab.verify import (
    boundedness_scan,
    compactness_scan,
    offdiag_check,
    summability_profile,
    truncated_commutator,
)

from conftest import random_complex, unit, weighted_shift

T = RepresentationModel.toeplitz()
K = RepresentationModel.compacts_unit()
DIAG = RepresentationModel.diagonal()
RFD = RepresentationModel.rfd([[2, 1], [3, 2]])
HARMONIC = AlphaSequence.harmonic()


def shift_commutator_oracle(N):
    # [D, s] for harmonic alpha is the weighted shift with weights alpha_{k+1} - alpha_k = 1/(k+1)
    return weighted_shift([1 / (k + 1) for k in range(1, N)])


def brute_sum(alpha_fn, p, K, chunk=10**6):
    parts = []
    for start in range(1, K + 1, chunk):
        k = np.arange(start, min(start + chunk, K + 1), dtype=float)
        parts.extend((1 + alpha_fn(k) ** 2) ** (-p / 2))
    return math.fsum(parts)


# ---- boundedness


def test_boundedness_shift_harmonic():
    rep = boundedness_scan(T, Element.shift(), HARMONIC, [4, 8, 16])
    for r in rep.records:
        oracle = np.linalg.svd(shift_commutator_oracle(r["N"]), compute_uv=False)[0]
        assert oracle == pytest.approx(0.5, abs=1e-14)
        assert r["value"] == pytest.approx(oracle, abs=1e-12)
    assert rep.verdict == "stable"


def test_boundedness_shift_linear_alpha():
    rep = boundedness_scan(T, Element.shift(), AlphaSequence.power(1), [4, 8, 16])
    assert [r["value"] for r in rep.records] == pytest.approx([1, 1, 1], abs=1e-12)
    assert np.array_equal(truncated_commutator(T, Element.shift(), AlphaSequence.power(1), 6),
                          realize(T, Element.shift(), 6))
    assert rep.verdict == "stable"


def test_boundedness_diagonal_zero():
    rep = boundedness_scan(DIAG, Element.diag(), AlphaSequence.geometric(3), [3, 6, 9])
    assert all(r["value"] == 0 for r in rep.records)
    assert rep.verdict == "stable"


def test_boundedness_growing_and_inconclusive():
    # s with alpha_k = k^2: the subdiagonal gaps 2k+1 grow with N
    rep = boundedness_scan(T, Element.shift(), AlphaSequence.power(2), [4, 8])
    assert rep.verdict == "growing"
    assert boundedness_scan(T, Element.shift(), HARMONIC, [8]).verdict == "inconclusive"
    with pytest.raises(ValueError):
        boundedness_scan(T, Element.shift(), HARMONIC, [8, 4])


def test_boundedness_matches_block_calculus():
    e = Element.shift() + Element.adj_shift(2) * 0.5 + Element.unit(3, 1)
    rep = boundedness_scan(T, e, HARMONIC, [5, 9, 17])
    for r in rep.records:
        N = r["N"]
        direct = op_norm(commutator_blocks(realize(T, e, N), ProjectionChain.singletons(N), HARMONIC))
        assert abs(direct - r["value"]) <= 1e-12


def test_scan_parallel_is_identical():
    a = boundedness_scan(T, Element.shift(), HARMONIC, [8, 16, 32])
    b = boundedness_scan(T, Element.shift(), HARMONIC, [8, 16, 32], workers=3)
    assert a == b


# ---- compactness


def test_compactness_shift_harmonic():
    rep = compactness_scan(T, Element.shift(), HARMONIC, [8, 16, 32], tail_index=2)
    assert [r["value"] for r in rep.records] == pytest.approx([1 / 4] * 3, abs=1e-12)
    top = np.sort(np.linalg.svd(shift_commutator_oracle(32), compute_uv=False))[::-1]
    assert np.allclose(rep.evidence["singular_values"], top, atol=1e-12)
    assert rep.verdict == "stable" and rep.evidence["compact_consistent"]


def test_compactness_shift_linear_alpha_fails():
    rep = compactness_scan(T, Element.shift(), AlphaSequence.power(1), [8, 16, 32], tail_index=2)
    assert [r["value"] for r in rep.records] == pytest.approx([1, 1, 1], abs=1e-12)
    assert rep.verdict == "growing" and not rep.evidence["compact_consistent"]


@pytest.mark.parametrize("e", [Element.block(1, [[1, 2], [3, 4]]), Element.block(2, np.eye(3)[::-1])])
def test_compactness_rfd_zero(e):
    rep = compactness_scan(RFD, e, HARMONIC, [8, 13, 20], tail_index=3)
    assert all(r["value"] == 0 for r in rep.records)
    assert rep.verdict == "stable"


def test_compactness_tail_index_range():
    with pytest.raises(ValueError):
        compactness_scan(T, Element.shift(), HARMONIC, [4, 8], tail_index=4)


# ---- off-diagonal bound


def test_offdiag_identity():
    res = offdiag_check(np.eye(6), ProjectionChain.singletons(6), HARMONIC)
    assert res.passed and res.norm == 0 and res.worst_ratio == 0


def test_offdiag_matrix_unit_equality():
    alpha = AlphaSequence.power(1.5)
    res = offdiag_check(unit(2, 5, 6), ProjectionChain.singletons(6), alpha)
    vals = alpha(6)
    assert res.norm == pytest.approx(abs(vals[1] - vals[4]), rel=1e-14)
    assert res.passed and res.worst_index == (2, 5)
    assert res.worst_ratio == pytest.approx(1.0, rel=1e-12)


def test_offdiag_shift_harmonic():
    N = 16
    s = realize(T, Element.shift(), N)
    res = offdiag_check(s, ProjectionChain.singletons(N), HARMONIC)
    assert res.norm == pytest.approx(0.5, abs=1e-12)
    assert res.passed
    # the tightest subdiagonal entry is the first: ||a_21|| |alpha_2 - alpha_1| / C = 1
    assert res.worst_index == (2, 1) and res.worst_ratio == pytest.approx(1.0)


def test_offdiag_repeated_alpha_skipped(rng):
    alpha = AlphaSequence.custom([1, 1, 2, 3])
    res = offdiag_check(random_complex(rng, 4), ProjectionChain.singletons(4), alpha)
    assert set(res.skipped) == {(1, 2), (2, 1)}
    assert res.passed


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2**32 - 1),
       st.sampled_from(["toeplitz", "compacts_unit", "diagonal", "rfd"]))
def test_offdiag_never_violated_on_models(N, seed, name):
    rng = np.random.default_rng(seed)
    model = RFD if name == "rfd" else RepresentationModel(name)
    gens = {
        "toeplitz": [Element.shift(), Element.adj_shift(2), Element.unit(1, 3)],
        "compacts_unit": [Element.unit(1, 2), Element.unit(3, 1), Element.identity()],
        "diagonal": [Element.diag(), Element.identity()],
        "rfd": [Element.block(1, random_complex(rng, 2)), Element.block(2, random_complex(rng, 3))],
    }[name]
    coeffs = rng.standard_normal(len(gens))
    e = gens[0] * coeffs[0]
    for g, c in zip(gens[1:], coeffs[1:]):
        e = e + g * c
    chain = ProjectionChain.singletons(N)
    assert offdiag_check(realize(model, e, N), chain, AlphaSequence.power(1.3)).passed


# ---- summability


def test_summability_harmonic_diverges():
    reps = summability_profile(HARMONIC, None, [1, 2, 4], 2**20)
    assert [r.verdict for r in reps] == ["diverging"] * 3
    assert all(r.tail_bound == math.inf for r in reps)


def test_summability_linear_alpha_p3_matches_brute_force():
    (rep,) = summability_profile(AlphaSequence.power(1), None, [3], 2**20)
    assert rep.verdict == "converged"
    brute = brute_sum(lambda k: k, 3, 10**7)
    tail = (10**7) ** -2 / 2
    assert rep.value == pytest.approx(brute + tail, rel=1e-6)
    assert rep.value == pytest.approx(brute, rel=1e-6)


def test_summability_geometric_converges():
    (rep,) = summability_profile(AlphaSequence.geometric(2), None, [0.5], 2**10)
    brute = brute_sum(lambda k: 2.0**k, 0.5, 400)
    assert rep.verdict == "converged"
    assert rep.value == pytest.approx(brute, rel=1e-12)
    assert rep.tail_bound < 1e-30


def test_summability_custom_has_no_tail_bound():
    # no continuous extension: never "converged"; increments decide between the other two
    short = AlphaSequence.custom(np.arange(1, 2**10 + 1))
    (rep,) = summability_profile(short, None, [3], 2**10)
    assert rep.verdict == "diverging" and rep.tail_bound is None
    long = AlphaSequence.custom(np.arange(1, 2**14 + 1))
    (rep,) = summability_profile(long, None, [3], 2**14)
    assert rep.verdict == "inconclusive" and rep.tail_bound is None


def test_summability_multiplicities():
    mult = [1, 2, 3] + [4] * 61
    (rep,) = summability_profile(AlphaSequence.power(1), mult, [4], 64)
    k = np.arange(1, 65)
    expected = math.fsum(np.array(mult) * (1 + k**2.0) ** -2)
    assert rep.value == pytest.approx(expected, rel=1e-14)
    assert rep.tail_bound == pytest.approx(4 * 64**-3 / 3, rel=1e-12)


def test_summability_errors():
    with pytest.raises(ValueError):
        summability_profile(HARMONIC, None, [0], 64)
    with pytest.raises(ValueError):
        summability_profile(HARMONIC, None, [1], 8)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([HARMONIC, AlphaSequence.power(0.7), AlphaSequence.geometric(1.3)]),
       st.lists(st.floats(0.1, 6), min_size=2, max_size=4, unique=True))
def test_summability_monotone_in_K_and_p(alpha, ps):
    ps = sorted(ps)
    reps = summability_profile(alpha, None, ps, 2**12)
    for r in reps:
        sums = r.partial_sums
        assert all(b >= a for a, b in zip(sums, sums[1:]))
    for lo, hi in zip(reps, reps[1:]):
        assert all(b <= a for a, b in zip(lo.partial_sums, hi.partial_sums))
