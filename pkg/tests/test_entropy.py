import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eaqmac.capacity import build_theta
from eaqmac.channels import make_collective_phase_flip
from eaqmac.entropy import (
    LabeledState,
    coherent_information,
    conditional_entropy,
    conditional_mutual_information,
    duality_violation,
    mutual_information,
    verify_entropy_lemmas,
    von_neumann_entropy,
)
from eaqmac.errors import LabelError
from eaqmac.qmath import (
    DensityOperator,
    PureState,
    diag_state,
    maximally_entangled,
    maximally_mixed,
    random_density,
    random_pure,
    substream,
    tensor_states,
)


def labeled(mat, dims, labels):
    return LabeledState(DensityOperator(mat, dims), labels)


def random_tripartite(seed, max_dim=3):
    r = np.random.default_rng(seed)
    dims = tuple(int(x) for x in r.integers(1, max_dim + 1, size=3))
    return LabeledState(random_density(int(np.prod(dims)), r, dims=dims), "ABC")


class TestVonNeumann:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_maximally_mixed(self, d):
        assert von_neumann_entropy(maximally_mixed(d)) == pytest.approx(np.log2(d))

    def test_pure(self, rng):
        assert von_neumann_entropy(random_pure(4, rng).density()) == pytest.approx(0, abs=1e-9)

    def test_binary(self):
        assert von_neumann_entropy(diag_state([0.75, 0.25])) == pytest.approx(0.811278, abs=1e-6)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_range(self, seed, d):
        h = von_neumann_entropy(random_density(d, np.random.default_rng(seed)))
        assert -1e-12 <= h <= np.log2(d) + 1e-9

    def test_additive(self):
        for t in range(100):
            r = substream(5, t)
            a, b = random_density(int(r.integers(1, 4)), r), random_density(int(r.integers(1, 4)), r)
            joint = von_neumann_entropy(tensor_states(a, b))
            assert joint == pytest.approx(von_neumann_entropy(a) + von_neumann_entropy(b), abs=1e-9)


class TestMutualInformation:
    def test_bell(self):
        s = LabeledState.from_pure(maximally_entangled(2), "AB")
        assert mutual_information(s, "A", "B") == pytest.approx(2)

    def test_product(self, rng):
        s = LabeledState(tensor_states(random_density(2, rng), random_density(3, rng)), "AB")
        assert mutual_information(s, "A", "B") == pytest.approx(0, abs=1e-9)

    def test_classical(self):
        s = labeled(np.diag([0.5, 0, 0, 0.5]), (2, 2), "AB")
        assert mutual_information(s, "A", "B") == pytest.approx(1)

    def test_overlap(self):
        s = LabeledState.from_pure(maximally_entangled(2), "AB")
        with pytest.raises(LabelError):
            mutual_information(s, "AB", "B")

    def test_unknown_label(self):
        s = LabeledState.from_pure(maximally_entangled(2), "AB")
        with pytest.raises(LabelError):
            s.entropy("Z")

    def test_label_count(self):
        with pytest.raises(LabelError):
            LabeledState(maximally_mixed(4), "AB")

    @given(st.integers(0, 2**32 - 1))
    def test_symmetric(self, seed):
        s = random_tripartite(seed)
        assert mutual_information(s, "A", "BC") == pytest.approx(mutual_information(s, "BC", "A"), abs=1e-12)


class TestConditional:
    def test_phase_flip_theta(self):
        th = build_theta(make_collective_phase_flip(2, [0.5, 0.5]), maximally_mixed(2), maximally_mixed(2)).state
        assert conditional_mutual_information(th, "A", "C", "B") == pytest.approx(2, abs=1e-9)

    def test_product_zero(self, rng):
        s = LabeledState(tensor_states(*(random_density(2, rng) for _ in range(3))), "ABC")
        assert conditional_mutual_information(s, "A", "C", "B") == pytest.approx(0, abs=1e-9)

    def test_independent_conditioning(self, rng):
        # I(A;B) = 0 implies I(A;C|B) = I(A;CB)
        s = LabeledState(tensor_states(random_density(2, rng), random_density(6, rng, dims=(2, 3))), "ABC")
        assert mutual_information(s, "A", "B") == pytest.approx(0, abs=1e-9)
        assert conditional_mutual_information(s, "A", "C", "B") == pytest.approx(
            mutual_information(s, "A", "CB"), abs=1e-9)

    def test_strong_subadditivity(self):
        for t in range(1000):
            s = random_tripartite(int(substream(6, t).integers(2**32)))
            assert conditional_mutual_information(s, "A", "C", "B") >= -1e-9

    def test_chain_rule(self):
        for t in range(200):
            s = random_tripartite(int(substream(7, t).integers(2**32)))
            lhs = mutual_information(s, "AB", "C")
            rhs = mutual_information(s, "B", "C") + conditional_mutual_information(s, "A", "C", "B")
            assert lhs == pytest.approx(rhs, abs=1e-9)


class TestCoherentInformation:
    def test_identity(self):
        s = LabeledState.from_pure(maximally_entangled(2), "AB")
        assert coherent_information(s, "A", "B") == pytest.approx(1)

    def test_depolarized(self):
        s = LabeledState(tensor_states(maximally_mixed(2), maximally_mixed(2)), "AB")
        assert coherent_information(s, "A", "B") == pytest.approx(-1)

    def test_dephased(self):
        s = labeled(np.diag([0.5, 0, 0, 0.5]), (2, 2), "AB")
        assert coherent_information(s, "A", "B") == pytest.approx(0, abs=1e-12)


class TestLemmas:
    def test_ghz(self):
        psi = PureState(np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2), (2, 2, 2))
        s = LabeledState.from_pure(psi, "ABE")
        assert conditional_entropy(s, "B", "E") == pytest.approx(0, abs=1e-12)
        assert conditional_entropy(s, "B", "A") == pytest.approx(0, abs=1e-12)

    def test_duality_random(self, rng):
        assert duality_violation(random_pure(16, rng, (2, 2, 4))) <= 1e-8

    def test_duality_product(self, rng):
        psi = np.kron(np.kron(random_pure(2, rng).amplitudes, random_pure(2, rng).amplitudes),
                      random_pure(2, rng).amplitudes)
        s = LabeledState.from_pure(PureState(psi, (2, 2, 2)), "ABE")
        assert conditional_entropy(s, "B", "E") == pytest.approx(0, abs=1e-9)
        assert conditional_entropy(s, "B", "A") == pytest.approx(0, abs=1e-9)

    def test_report(self):
        rep = verify_entropy_lemmas(50, seed=3)
        assert rep["duality"]["pass"] and rep["bound"]["pass"] and rep["ssa"]["pass"]
        assert rep["duality"]["max_violation"] <= 1e-8

    def test_reproducible(self):
        assert verify_entropy_lemmas(10, seed=1) == verify_entropy_lemmas(10, seed=1)

    def test_empty(self):
        rep = verify_entropy_lemmas(0)
        assert rep["bound"]["min_slack"] is None and rep["ssa"]["min_value"] is None
        assert_allclose(rep["duality"]["max_violation"], 0)
