import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from eaqmac.capacity import (
    OptimizerConfig,
    RegionPentagon,
    build_theta,
    build_theta_single,
    convex_hull,
    corner_points,
    dephasing_closed_form,
    ea_capacity_single,
    lagrange_residual,
    pentagon_vertices,
    phase_flip_region_closed_form,
    region_for_inputs,
    resource_corner_rates,
    single_sender_mi,
    sum_rate_bound,
    sum_rate_objective,
    trace_distance_to_product,
    union_hull,
    union_region_sample,
    verify_dephasing_maximizer,
)
from eaqmac.channels import (
    identity_channel,
    make_collective_phase_flip,
    make_completely_dephasing,
    make_depolarizing,
    random_channel,
)
from eaqmac.entropy import mutual_information
from eaqmac.errors import BadDistribution, DimensionMismatch, NotDephasing
from eaqmac.qmath import diag_state, maximally_mixed, random_density, substream

H75 = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
PI2 = maximally_mixed(2)


def phase_flip(p, d=2):
    return make_collective_phase_flip(d, p)


class TestTheta:
    def test_phase_flip_entropies(self):
        s = build_theta(phase_flip([0.5, 0.5]), PI2, PI2).state
        assert_allclose([s.entropy("A"), s.entropy("B"), s.entropy("AC"), s.entropy("BC"), s.entropy("ABC")],
                        [1, 1, 2, 2, 1], atol=1e-9)

    def test_identity_pure_inputs(self):
        pure = diag_state([1, 0])
        s = build_theta(identity_channel((2, 2)), pure, pure).state
        assert mutual_information(s, "AB", "C") == pytest.approx(0, abs=1e-9)
        assert mutual_information(s, "A", "B") == pytest.approx(0, abs=1e-9)

    def test_product_references(self):
        for t in range(10):
            r = substream(8, t)
            m = random_channel(6, 3, r, 2, (2, 3))
            s = build_theta(m, random_density(2, r), random_density(3, r)).state
            assert mutual_information(s, "A", "B") <= 1e-9

    def test_purified_marginal(self, rng):
        m = random_channel(4, 2, rng, 3, (2, 2))
        r1, r2 = random_density(2, rng), random_density(2, rng)
        full = build_theta(m, r1, r2, purified=True).state
        mixed = build_theta(m, r1, r2).state
        assert full.labels == ("A", "B", "C", "E")
        assert_allclose(full.marginal("ABC").mat, mixed.state.mat, atol=1e-12)
        assert full.entropy("ABCE") == pytest.approx(0, abs=1e-9)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_theta(phase_flip([0.5, 0.5]), maximally_mixed(3), PI2)

    def test_single_sender_routes(self, rng):
        ch = random_channel(3, 2, rng, 3)
        rho = random_density(3, rng)
        direct = mutual_information(build_theta_single(ch, rho).state, "A", "B")
        assert single_sender_mi(ch, rho) == pytest.approx(direct, abs=1e-10)

    def test_sum_rate_routes(self, rng):
        m = random_channel(6, 3, rng, 2, (2, 3))
        r1, r2 = random_density(2, rng), random_density(3, rng)
        assert sum_rate_objective(m, r1, r2) == pytest.approx(region_for_inputs(m, r1, r2).rsum, abs=1e-10)


class TestPentagon:
    def test_uniform(self):
        p = region_for_inputs(phase_flip([0.5, 0.5]), PI2, PI2)
        assert_allclose([p.r1, p.r2, p.rsum], [2, 2, 3], atol=1e-6)

    def test_noiseless(self):
        p = region_for_inputs(phase_flip([1, 0]), PI2, PI2)
        assert_allclose([p.r1, p.r2, p.rsum], [2, 2, 4], atol=1e-9)
        assert len(p.vertices) == 4

    def test_biased(self):
        p = region_for_inputs(phase_flip([0.75, 0.25]), PI2, PI2)
        assert p.rsum == pytest.approx(4 - H75, abs=1e-5)
        assert p.rsum == pytest.approx(3.188722, abs=1e-5)

    def test_vertices(self):
        assert pentagon_vertices(2, 2, 3) == [(0, 0), (2, 0), (2, 1), (1, 2), (0, 2)]

    def test_contains(self):
        p = RegionPentagon(2, 2, 3)
        assert p.contains((1, 2)) and not p.contains((2, 2))

    def test_corners(self):
        c = corner_points(RegionPentagon(2, 2, 3))
        assert c == {"O": (0, 0), "P": (2, 1), "Q": (1, 2), "R": (0, 2)}
        assert corner_points(RegionPentagon(2, 2, 4))["Q"] == (2, 2)

    def test_q_equals_mutual_information(self, rng):
        m = random_channel(4, 3, rng, 2, (2, 2))
        r1, r2 = random_density(2, rng), random_density(2, rng)
        p = region_for_inputs(m, r1, r2)
        s = build_theta(m, r1, r2).state
        assert corner_points(p)["Q"][0] == pytest.approx(mutual_information(s, "A", "C"), abs=1e-9)

    @given(st.integers(0, 2**32 - 1))
    def test_invariants_random(self, seed):
        r = np.random.default_rng(seed)
        d1, d2 = (int(x) for x in r.integers(1, 4, size=2))
        dout = int(r.integers(2, 4))
        m = random_channel(d1 * d2, dout, r, -(-d1 * d2 // dout), (d1, d2))
        p = region_for_inputs(m, random_density(d1, r), random_density(d2, r))
        assert max(p.r1, p.r2) <= p.rsum + 1e-9 and p.rsum <= p.r1 + p.r2 + 1e-9
        assert min(p.r1, p.r2) >= -1e-9


class TestClosedForm:
    @pytest.mark.parametrize("d,p,expected", [
        (2, [0.5, 0.5], (2, 2, 3)),
        (2, [1, 0], (2, 2, 4)),
        (4, [0.25] * 4, (4, 4, 6)),
    ])
    def test_values(self, d, p, expected):
        r = phase_flip_region_closed_form(d, p)
        assert_allclose([r.r1, r.r2, r.rsum], expected, atol=1e-12)

    def test_bad(self):
        with pytest.raises(BadDistribution):
            phase_flip_region_closed_form(2, [0.3, 0.3])

    @pytest.mark.parametrize("d,p", [(2, [0.9, 0.1]), (3, [0.5, 0.3, 0.2])])
    def test_matches_direct(self, d, p):
        pi = maximally_mixed(d)
        direct = region_for_inputs(phase_flip(p, d), pi, pi)
        closed = phase_flip_region_closed_form(d, p)
        assert_allclose([direct.r1, direct.r2, direct.rsum], [closed.r1, closed.r2, closed.rsum], atol=1e-9)

    def test_concavity_on_diagonal_inputs(self):
        m = phase_flip([0.6, 0.4])
        for t in range(100):
            r = substream(9, t)
            a = np.kron(np.diag(r.dirichlet([1, 1])), np.diag(r.dirichlet([1, 1])))
            b = np.kron(np.diag(r.dirichlet([1, 1])), np.diag(r.dirichlet([1, 1])))
            for lam in (0.25, 0.5, 0.75):
                mix = single_sender_mi(m, lam * a + (1 - lam) * b)
                assert mix >= lam * single_sender_mi(m, a) + (1 - lam) * single_sender_mi(m, b) - 1e-8

    @pytest.mark.parametrize("d", [2, 3])
    def test_lagrange_point(self, d):
        m = make_collective_phase_flip(d, np.full(d, 1 / d))
        assert lagrange_residual(m) <= 1e-5


class TestOptimizers:
    def test_identity_grid_oracle(self):
        # I(A;B) = 2 H(rho) for the identity channel; scan the Bloch radius
        grid = [2 * (-(x * math.log2(x) + (1 - x) * math.log2(1 - x)) if 0 < x < 1 else 0)
                for x in np.linspace(0.5, 1, 101)]
        assert max(grid) == pytest.approx(2)
        assert int(np.argmax(grid)) == 0

    def test_identity(self):
        res = ea_capacity_single(identity_channel(2))
        assert res.value == pytest.approx(2, abs=1e-3)
        assert res.value <= 2 + 1e-6
        assert all(v <= 2 + 1e-6 for v in res.start_values)

    def test_dephasing(self):
        assert ea_capacity_single(make_completely_dephasing(2)).value == pytest.approx(1, abs=1e-3)

    def test_depolarizing(self):
        assert ea_capacity_single(make_depolarizing(2)).value == pytest.approx(0, abs=1e-6)

    def test_sum_rate_uniform(self):
        res = sum_rate_bound(phase_flip([0.5, 0.5]))
        assert res.value == pytest.approx(3, abs=1e-3)
        assert trace_distance_to_product(res.argmax, (PI2, PI2)) <= 0.05

    def test_sum_rate_noiseless(self):
        assert sum_rate_bound(phase_flip([1, 0]), OptimizerConfig(starts=2)).value == pytest.approx(4, abs=1e-3)

    @pytest.mark.slow
    def test_sum_rate_qutrit(self):
        res = sum_rate_bound(make_collective_phase_flip(3, [1 / 3] * 3), OptimizerConfig(starts=2))
        assert res.value == pytest.approx(3 * math.log2(3), abs=1e-3)

    def test_single_needs_two_inputs(self):
        with pytest.raises(DimensionMismatch):
            sum_rate_bound(identity_channel(2))

    def test_deterministic(self):
        cfg = OptimizerConfig(starts=2, seed=5)
        a = ea_capacity_single(make_completely_dephasing(2), cfg)
        b = ea_capacity_single(make_completely_dephasing(2), cfg)
        assert a.as_dict() == b.as_dict()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizerConfig(step=0)


class TestUnion:
    def test_contains_closed_form(self):
        pents = union_region_sample(phase_flip([0.5, 0.5]), 1, refine=False)
        assert_allclose([pents[0].r1, pents[0].r2, pents[0].rsum], [2, 2, 3], atol=1e-9)

    def test_never_exceeds_closed_form(self):
        pents = union_region_sample(phase_flip([0.75, 0.25]), 30, OptimizerConfig(starts=1), seed=3)
        closed = phase_flip_region_closed_form(2, [0.75, 0.25])
        assert all(p.is_consistent() for p in pents)
        assert max(p.rsum for p in pents) <= closed.rsum + 1e-6

    def test_hull_ccw_from_origin(self):
        hull = union_hull([RegionPentagon(2, 1, 2.5), RegionPentagon(1, 2, 2.5)])
        assert hull[0] == (0.0, 0.0)
        area = sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]))
        assert area > 0
        assert (1.5, 1.0) not in hull  # inner vertex removed

    def test_convex_hull_square(self):
        pts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.5, 0)]
        assert convex_hull(pts) == [(0, 0), (1, 0), (1, 1), (0, 1)]


class TestCornerRates:
    def test_phase_flip(self):
        r = resource_corner_rates(phase_flip([0.5, 0.5]), PI2, PI2)
        assert_allclose(r["classical"]["Q"], [1, 2], atol=1e-9)
        assert_allclose([r["ebits"]["E1"], r["ebits"]["E2"]], [1, 1], atol=1e-9)
        assert_allclose(r["father"]["Q"]["quantum"], [0.5, 1], atol=1e-9)

    def test_identity(self):
        r = resource_corner_rates(identity_channel((2, 2)), PI2, PI2)
        assert_allclose(r["quantum"]["Q"], [1, 1], atol=1e-9)
        assert_allclose(r["quantum"]["P"], [1, 1], atol=1e-9)

    def test_pure_inputs(self):
        pure = diag_state([1, 0])
        r = resource_corner_rates(identity_channel((2, 2)), pure, pure)
        flat = [r["classical"]["Q"], r["quantum"]["Q"], r["father"]["P"]["consumed"]]
        assert_allclose(np.ravel(flat), 0, atol=1e-9)

    def test_father_consistency(self, rng):
        # I(A;C) + I(A;BE) = 2 H(A) on the pure state
        m = random_channel(4, 2, rng, 2, (2, 2))
        r = resource_corner_rates(m, random_density(2, rng), random_density(2, rng))
        total = r["father"]["Q"]["quantum"][0] + r["father"]["Q"]["consumed"][0]
        assert total == pytest.approx(r["ebits"]["E1"], abs=1e-9)


class TestDephasing:
    def test_qubit(self):
        rep = verify_dephasing_maximizer(make_completely_dephasing(2), 200)
        assert rep["pass"] and rep["min_gain"] >= -1e-8 and rep["closed_form_max_error"] <= 1e-8

    def test_phase_flip_as_single_sender(self):
        rep = verify_dephasing_maximizer(phase_flip([0.7, 0.3]), 30, seed=2)
        assert rep["pass"]

    def test_not_dephasing(self):
        with pytest.raises(NotDephasing):
            verify_dephasing_maximizer(make_depolarizing(2, 0.5), 5)

    @pytest.mark.parametrize("r", [[0.5, 0.5], [0.9, 0.1]])
    def test_closed_form_dephasing_qubit(self, r):
        # complement of Delta copies the diagonal: 2H - H = H
        h = -sum(x * math.log2(x) for x in r)
        assert dephasing_closed_form(make_completely_dephasing(2), r) == pytest.approx(h)
