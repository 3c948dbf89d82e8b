import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ardnet.ard import (
    ArdQuery,
    ArdQuerySet,
    ArdVector,
    abs_diff_range,
    alter_attr_range,
    alter_attr_threshold,
    always_true,
    ard_distance,
    builtin_query_sets,
    compute_ard,
    within_tolerance,
)
from ardnet.errors import ValidationError
from ardnet.experiments import example2_covariates, synthetic_ages
from ardnet.model import Network


@pytest.fixture
def wealth4():
    return example2_covariates()


@pytest.fixture
def wealth_queries():
    return ArdQuerySet(
        (
            ArdQuery("out-total", "outbound", always_true()),
            ArdQuery("in-total", "inbound", always_true()),
            ArdQuery(
                "out-rich", "outbound", alter_attr_threshold("wealth", "gt", 400.0)
            ),
        )
    )


class TestComputeArd:
    def test_empty_network_all_zero(self, wealth4, wealth_queries):
        psi = compute_ard(Network.empty(4), wealth4, wealth_queries)
        assert not psi.values.any()

    def test_complete_network_totals(self, wealth4, wealth_queries):
        psi = compute_ard(Network.complete(4), wealth4, wealth_queries)
        by_resp = psi.by_respondent()
        assert np.array_equal(by_resp[:, 0], [3, 3, 3, 3])
        assert np.array_equal(by_resp[:, 1], [3, 3, 3, 3])

    def test_wealth_threshold_counts(self, wealth4, wealth_queries):
        # complete graph: respondent A(600) has one alter above 400 (B);
        # respondent C(200) has two (A and B)
        psi = compute_ard(Network.complete(4), wealth4, wealth_queries)
        rich = psi.by_respondent()[:, 2]
        assert rich[0] == 1
        assert rich[2] == 2

    def test_unknown_attribute(self, wealth4):
        qs = ArdQuerySet(
            (ArdQuery("bad", "inbound", alter_attr_range("height", 0.0, 10.0)),)
        )
        with pytest.raises(ValidationError):
            compute_ard(Network.empty(4), wealth4, qs)

    def test_direction_distinction(self, wealth4, wealth_queries):
        g = Network.empty(4)
        g.set_link(0, 1, True)
        psi = compute_ard(g, wealth4, wealth_queries).by_respondent()
        assert psi[0, 0] == 1 and psi[0, 1] == 0
        assert psi[1, 0] == 0 and psi[1, 1] == 1

    def test_determinism_equal_networks(self, wealth4, wealth_queries):
        g1 = Network.random(4, 0.5, np.random.default_rng(5))
        g2 = Network(g1.adj.copy())
        assert compute_ard(g1, wealth4, wealth_queries) == compute_ard(
            g2, wealth4, wealth_queries
        )

    def test_adding_link_never_decreases_total_counts(self, wealth4, wealth_queries):
        rng = np.random.default_rng(9)
        for _ in range(30):
            g = Network.random(4, 0.4, rng)
            before = compute_ard(g, wealth4, wealth_queries).values
            zeros = np.flatnonzero(~g.adj & ~np.eye(4, dtype=bool))
            if zeros.size == 0:
                continue
            flat = int(rng.choice(zeros))
            g.set_link(flat // 4, flat % 4, True)
            after = compute_ard(g, wealth4, wealth_queries).values
            # always-true queries are monotone; threshold queries as well
            assert np.all(after >= before)


class TestDistances:
    def test_identical_vectors(self):
        a = ArdVector(np.array([1, 2, 3, 4, 0]), 5)
        assert ard_distance(a, a) == 0.0

    def test_pythagorean(self):
        a = ArdVector(np.array([3, 4, 0, 0, 0]), 5)
        b = ArdVector(np.array([0, 0, 0, 0, 0]), 5)
        assert ard_distance(a, b, "l2") == pytest.approx(5.0)
        assert ard_distance(a, b, "l1") == pytest.approx(7.0)
        assert ard_distance(a, b, "linf") == pytest.approx(4.0)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            ard_distance(ArdVector(np.array([1, 1]), 2), ArdVector(np.array([1, 1, 1, 1]), 2))

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.integers(min_value=0, max_value=3), min_size=4, max_size=4),
        st.lists(st.integers(min_value=0, max_value=3), min_size=4, max_size=4),
        st.sampled_from(["l1", "l2", "linf"]),
    )
    def test_symmetry(self, xs, ys, norm):
        a = ArdVector(np.array(xs), 4)
        b = ArdVector(np.array(ys), 4)
        assert ard_distance(a, b, norm) == ard_distance(b, a, norm)


class TestTolerance:
    def test_zero_tolerance_is_exact_match(self):
        a = ArdVector(np.array([1, 2, 0]), 3)
        b = ArdVector(np.array([1, 2, 1]), 3)
        assert within_tolerance(a, a, 0.0)
        assert not within_tolerance(a, b, 0.0)

    def test_boundary_is_closed(self):
        a = ArdVector(np.array([3, 4, 0, 0, 0]), 5)
        b = ArdVector(np.array([0, 0, 0, 0, 0]), 5)
        assert not within_tolerance(a, b, 4.99)
        assert within_tolerance(a, b, 5.0)

    def test_any_tolerance_accepts_equal(self):
        a = ArdVector(np.array([2, 2, 2]), 3)
        assert within_tolerance(a, a, 100.0)


class TestBuiltinSets:
    def test_preset_sizes(self):
        sets = builtin_query_sets()
        assert len(sets["design1"]) == 10
        assert len(sets["design2-benchmark"]) == 8
        assert len(sets["design2-augmented"]) == 16

    def test_d_psi_scaling(self):
        qs = builtin_query_sets()["design1"]
        assert qs.d_psi(30) == 300

    def test_age_bins_partition_inbound_total(self):
        # alter-age bins cover [0, inf), so the three bin counts sum to the total
        X = synthetic_ages(12, seed=3)
        qs = builtin_query_sets()["design1"]
        rng = np.random.default_rng(4)
        for _ in range(20):
            g = Network.random(12, 0.5, rng)
            by_resp = compute_ard(g, X, qs).by_respondent()
            names = qs.names()
            total_in = by_resp[:, names.index("in-total")]
            bins = (
                by_resp[:, names.index("in-age-under-25")]
                + by_resp[:, names.index("in-age-25-to-44")]
                + by_resp[:, names.index("in-age-45-up")]
            )
            assert np.array_equal(total_in, bins)

    def test_diff_bins_partition_totals(self):
        X = synthetic_ages(10, seed=6)
        rng = np.random.default_rng(8)
        for name in ("design2-benchmark", "design2-augmented"):
            qs = builtin_query_sets()[name]
            g = Network.random(10, 0.5, rng)
            by_resp = compute_ard(g, X, qs).by_respondent()
            total_out = by_resp[:, 1]
            out_bins = by_resp[:, 3::2].sum(axis=1)
            assert np.array_equal(total_out, out_bins)

    def test_round_trip_is_bit_exact(self, tmp_path):
        for name, qs in builtin_query_sets().items():
            text = qs.to_json()
            back = ArdQuerySet.from_json(text)
            assert back == qs
            assert back.to_json() == text

    def test_infinite_upper_edges_serialize(self):
        qs = builtin_query_sets()["design2-benchmark"]
        data = json.loads(qs.to_json())
        last = data["queries"][-1]["predicate"]
        assert "hi" not in last and last["lo"] == 10.0
        assert math.isinf(ArdQuerySet.from_json(qs.to_json()).queries[-1].predicate.hi)


class TestArdVector:
    def test_entries_bounded_by_n_minus_1(self):
        with pytest.raises(ValidationError):
            ArdVector(np.array([5, 0]), 2)

    def test_negative_entries_rejected(self):
        with pytest.raises(ValidationError):
            ArdVector(np.array([-1, 0]), 2)

    def test_length_must_be_multiple_of_n(self):
        with pytest.raises(ValidationError):
            ArdVector(np.array([0, 0, 0]), 2)
