import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eaqmac.errors import AlphabetError, DimensionCap
from eaqmac.qmath import diag_state, kron_all, maximally_mixed, random_density, random_unitary
from eaqmac.typicality import (
    TypeVector,
    enumerate_type_classes,
    type_of_sequence,
    type_projector,
    typical_projector,
    typical_set,
    verify_typical_properties,
    verify_typicality_suite,
)


class TestTypes:
    def test_binary(self):
        assert type_of_sequence((0, 1, 0), 2).counts == (2, 1)

    def test_ternary(self):
        assert type_of_sequence((2, 2, 2), 3).counts == (0, 0, 3)

    def test_out_of_range(self):
        with pytest.raises(AlphabetError):
            type_of_sequence((0, 2), 2)

    @pytest.mark.parametrize("n,d,sizes", [(2, 2, [1, 2, 1]), (3, 2, [1, 3, 3, 1])])
    def test_class_sizes(self, n, d, sizes):
        assert [c.size for c in enumerate_type_classes(n, d)] == sizes

    def test_ternary_classes(self):
        classes = enumerate_type_classes(2, 3)
        assert len(classes) == 6
        assert sum(c.size for c in classes) == 9

    def test_descending_lexicographic(self):
        counts = [c.type.counts for c in enumerate_type_classes(3, 3)]
        assert counts == sorted(counts, reverse=True)

    def test_members_match_brute_force(self):
        for c in enumerate_type_classes(4, 3):
            brute = [i for i, seq in enumerate(product(range(3), repeat=4))
                     if type_of_sequence(seq, 3) == c.type]
            assert list(c.members()) == brute

    def test_cap(self):
        with pytest.raises(DimensionCap):
            enumerate_type_classes(21, 2)

    @given(st.integers(1, 7), st.integers(1, 4))
    def test_sizes_sum(self, n, d):
        if d**n > 5000:
            return
        assert sum(c.size for c in enumerate_type_classes(n, d)) == d**n

    def test_log2_prob(self):
        t = TypeVector((2, 1))
        assert t.log2_prob([0.5, 0.5]) == pytest.approx(-3)
        assert t.log2_prob([1.0, 0.0]) == -math.inf


class TestTypicalSet:
    def test_deterministic_source(self):
        ts = typical_set([1.0, 0.0], 5, 0.1)
        assert list(ts.indices) == [0]

    def test_deterministic_source_wide_delta(self):
        # frequency typicality admits the zero-probability letter once delta >= 1/n
        ts = typical_set([1.0, 0.0], 5, 0.4)
        assert [t.counts for t in ts.types] == [(5, 0), (4, 1), (3, 2)]

    def test_uniform_binary(self):
        ts = typical_set([0.5, 0.5], 4, 0.25)
        assert len(ts.indices) == 14
        assert sorted(t.counts[1] for t in ts.types) == [1, 2, 3]

    def test_mass_exact(self):
        p = [0.75, 0.25]
        ts = typical_set(p, 8, 0.15)
        brute = sum(math.comb(8, k) * 0.75 ** (8 - k) * 0.25**k for k in range(9) if abs(k / 8 - 0.25) <= 0.15)
        assert ts.mass == pytest.approx(brute, rel=1e-12)

    def test_closed_boundary(self):
        # |t - p| == delta exactly counts as typical
        ts = typical_set([0.5, 0.5], 4, 0.25)
        assert any(t.counts == (3, 1) for t in ts.types)


class TestProjectors:
    def test_n1(self):
        for c in enumerate_type_classes(1, 3):
            proj = type_projector(c.type)
            assert_allclose(proj, np.diag(np.eye(3)[c.index]))

    @pytest.mark.parametrize("counts,trace", [((1, 1), 2), ((2, 1), 3)])
    def test_trace(self, counts, trace):
        assert np.trace(type_projector(TypeVector(counts))).real == pytest.approx(trace)

    def test_pure(self, rng):
        v = random_unitary(2, rng)[:, 0]
        rho = np.outer(v, v.conj())
        tp = typical_projector(rho, 3, 0.2)
        assert tp.rank == 1
        w = kron_all([v.reshape(-1, 1)] * 3)
        assert_allclose(tp.matrix, w @ w.conj().T, atol=1e-12)

    def test_full_space(self):
        assert typical_projector(maximally_mixed(2), 2, 0.5).rank == 4

    def test_rank_21(self):
        tp = typical_projector(diag_state([0.75, 0.25]), 6, 0.1)
        assert [t.counts[1] for t in tp.types] == [1, 2]
        assert tp.rank == 21

    @pytest.mark.parametrize("seed", range(3))
    def test_projector_commutes(self, seed):
        r = np.random.default_rng(seed)
        rho = random_density(2, r).mat
        tp = typical_projector(rho, 4, 0.2)
        pm = tp.matrix
        rho_n = kron_all([rho] * 4)
        assert_allclose(pm @ pm, pm, atol=1e-10)
        assert_allclose(pm, pm.conj().T, atol=1e-10)
        assert np.max(np.abs(pm @ rho_n - rho_n @ pm)) <= 1e-12

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
    def test_rank_monotone_in_delta(self, seed, a, b):
        rho = random_density(2, np.random.default_rng(seed))
        lo, hi = sorted((a, b))
        assert typical_projector(rho, 5, lo).rank <= typical_projector(rho, 5, hi).rank

    def test_basis_projector(self, rng):
        u = random_unitary(2, rng)
        proj = type_projector(TypeVector((1, 1)), u)
        assert np.trace(proj).real == pytest.approx(2)
        assert_allclose(proj @ proj, proj, atol=1e-12)


class TestVerification:
    def test_maximally_mixed_any_c(self):
        rep = verify_typical_properties(maximally_mixed(2), 4, 0.1, 0.25)
        lo, hi = rep["q2"]["value"]
        assert lo == pytest.approx(2**-4) and hi == pytest.approx(2**-4)
        assert rep["q2"]["tightest_c"] == 0.0

    def test_exact_mass(self):
        rep = verify_typical_properties(diag_state([0.75, 0.25]), 8, 0.1, 0.25)
        expected = math.comb(8, 2) * 0.75**6 * 0.25**2
        assert rep["q1"]["value"] == pytest.approx(expected, rel=1e-12)
        assert rep["q1"]["pass"] is False

    def test_tightest_c(self):
        rep = verify_typical_properties(diag_state([0.9, 0.1]), 10, 0.05, 0.25)
        c = rep["q2"]["tightest_c"]
        assert np.isfinite(c) and c > 0
        assert rep["q2"]["pass"] and rep["q3"]["pass"] and rep["cc7"]["pass"]

    def test_suite(self):
        rep = verify_typicality_suite(diag_state([0.75, 0.25]), [4, 6, 8], 0.1, 0.25)
        assert rep["pass"]
        assert_allclose(rep["q1_values"], [0.421875, 0.65258789, 0.31146240], atol=1e-8)
        assert rep["q1_monotone"] is False

    def test_empty_typical_set(self):
        rep = verify_typical_properties(diag_state([0.75, 0.25]), 3, 0.01, 0.25)
        assert rep["rank"] == 0 and rep["q1"]["value"] == 0

    def test_zero_probability_typical(self):
        rep = verify_typical_properties(diag_state([1.0, 0.0]), 4, 0.5, 0.25)
        assert rep["q2"]["tightest_c"] is None and not rep["pass"]
