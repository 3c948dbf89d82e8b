import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ardnet.errors import DomainError, ValidationError
from ardnet.model import (
    CovariateTable,
    Network,
    Theta,
    UtilityModel,
    abs_diff,
    alter_attr,
    constant,
    delta_potential,
    pair_value,
    potential,
    same_bin,
    utility,
)

from helpers import random_instance


class TestNetwork:
    def test_rejects_self_links(self):
        adj = np.zeros((3, 3), dtype=bool)
        adj[1, 1] = True
        with pytest.raises(ValidationError):
            Network(adj)

    def test_rejects_single_node(self):
        with pytest.raises(ValidationError):
            Network(np.zeros((1, 1), dtype=bool))

    def test_set_link_guards_diagonal(self):
        g = Network.empty(3)
        with pytest.raises(DomainError):
            g.set_link(2, 2, True)

    def test_toggle_round_trip(self):
        g = Network.empty(3)
        g.toggle(0, 1)
        assert g.adj[0, 1] and g.link_count() == 1
        g.toggle(0, 1)
        assert g.link_count() == 0


class TestCovariates:
    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            CovariateTable({"age": [1.0, 2.0], "wealth": [1.0, 2.0, 3.0]})

    def test_unknown_attribute(self, ages4):
        with pytest.raises(ValidationError):
            ages4.vec("height")


class TestPairValue:
    def test_age_gap_baseline(self, ages4):
        # baseline 5, one unit of penalty per year of age gap
        model = UtilityModel(direct_features=(constant(), abs_diff("age", 1.0)))
        theta = Theta(np.array([5.0, -1.0]), np.array([]), np.array([]))
        assert pair_value(model, "direct", theta, ages4, 0, 1) == pytest.approx(-5.0)

    def test_zero_coefficients(self, ages4, full_model):
        theta = Theta.zeros(full_model)
        assert pair_value(full_model, "direct", theta, ages4, 0, 1) == 0.0

    def test_scaled_age_gap(self, ages4):
        # gap of 20 years at scale 20 exactly cancels the unit baseline
        model = UtilityModel(direct_features=(constant(), abs_diff("age", 20.0)))
        theta = Theta(np.array([1.0, -1.0]), np.array([]), np.array([]))
        assert pair_value(model, "direct", theta, ages4, 2, 3) == pytest.approx(0.0)

    def test_same_node_rejected(self, ages4, full_model, full_theta):
        with pytest.raises(DomainError):
            pair_value(full_model, "direct", full_theta, ages4, 1, 1)

    def test_unknown_attribute_surfaces(self, ages4):
        model = UtilityModel(direct_features=(abs_diff("height", 1.0),))
        theta = Theta(np.array([1.0]), np.array([]), np.array([]))
        with pytest.raises(ValidationError):
            pair_value(model, "direct", theta, ages4, 0, 1)

    def test_mutual_symmetry_all_pairs(self, ages4):
        model = UtilityModel(
            direct_features=(constant(),),
            mutual_features=(constant(), abs_diff("age", 5.0), same_bin("age", 10.0)),
        )
        theta = Theta(np.array([1.0]), np.array([0.7, -0.2, 1.1]), np.array([]))
        for i in range(4):
            for j in range(4):
                if i != j:
                    assert pair_value(model, "mutual", theta, ages4, i, j) == (
                        pair_value(model, "mutual", theta, ages4, j, i)
                    )

    def test_asymmetric_mutual_feature_rejected(self, ages4):
        model = UtilityModel(
            direct_features=(constant(),), mutual_features=(alter_attr("age"),)
        )
        with pytest.raises(ValidationError):
            model.validate(ages4)


class TestPotential:
    def test_empty_network_is_zero(self, ages4, full_model, full_theta):
        assert potential(Network.empty(4), ages4, full_model, full_theta) == 0.0

    def test_zero_theta_is_zero(self, ages4, full_model):
        g = Network.complete(4)
        assert potential(g, ages4, full_model, Theta.zeros(full_model)) == 0.0

    def test_two_node_complete_by_hand(self):
        # u12 = u21 = 1, mutual value 0.5 counted once per direction: 1+1+0.5+0.5
        X = CovariateTable({"age": [40.0, 40.0]})
        model = UtilityModel(
            direct_features=(constant(),), mutual_features=(constant(),)
        )
        theta = Theta(np.array([1.0]), np.array([0.5]), np.array([]))
        assert potential(Network.complete(2), X, model, theta) == pytest.approx(3.0)

    def test_dimension_mismatch(self, ages4, full_model, full_theta):
        with pytest.raises(ValidationError):
            potential(Network.empty(5), ages4, full_model, full_theta)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            X, model, theta, g = random_instance(rng, 5)
            perm = rng.permutation(5)
            Xp = CovariateTable({"age": X.vec("age")[perm]})
            gp = Network(g.adj[np.ix_(perm, perm)])
            assert potential(gp, Xp, model, theta) == pytest.approx(
                potential(g, X, model, theta), abs=1e-10
            )


class TestUtility:
    def test_empty_network(self, ages4, full_model, full_theta):
        eps = np.zeros((4, 4))
        assert utility(0, Network.empty(4), ages4, eps, full_model, full_theta) == 0.0

    def test_direct_term_with_shock(self):
        X = CovariateTable({"age": [30.0, 20.0]})
        model = UtilityModel(direct_features=(constant(), abs_diff("age", 1.0)))
        theta = Theta(np.array([5.0, -1.0]), np.array([]), np.array([]))
        g = Network.empty(2)
        g.set_link(0, 1, True)
        eps = np.zeros((2, 2))
        eps[0, 1] = 2.0
        assert utility(0, g, X, eps, model, theta) == pytest.approx(-3.0)

    def test_indirect_chain_counts_once(self):
        # links 0->1 and 1->2: player 0 picks up one friend-of-friend term
        X = CovariateTable({"age": [30.0, 30.0, 30.0]})
        gamma2 = 0.7
        model = UtilityModel(indirect_features=(constant(),))
        theta = Theta(np.array([]), np.array([]), np.array([gamma2]))
        g = Network.empty(3)
        g.set_link(0, 1, True)
        g.set_link(1, 2, True)
        eps = np.zeros((3, 3))
        assert utility(0, g, X, eps, model, theta) == pytest.approx(gamma2)

    def test_index_out_of_range(self, ages4, full_model, full_theta):
        with pytest.raises(DomainError):
            utility(4, Network.empty(4), ages4, np.zeros((4, 4)), full_model, full_theta)


class TestDeltaPotential:
    def test_zero_theta(self, ages4, full_model):
        g = Network.complete(4)
        theta = Theta.zeros(full_model)
        assert delta_potential(g, ages4, full_model, theta, 0, 1) == 0.0

    def test_same_node_rejected(self, ages4, full_model, full_theta):
        with pytest.raises(DomainError):
            delta_potential(Network.empty(4), ages4, full_model, full_theta, 1, 1)

    def test_matches_full_recomputation(self):
        # oracle: evaluate the potential with the link present and absent
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(1000):
            X, model, theta, g = random_instance(rng, 6)
            i, j = rng.choice(6, size=2, replace=False)
            inc = delta_potential(g, X, model, theta, int(i), int(j))
            g.set_link(i, j, True)
            with_link = potential(g, X, model, theta)
            g.set_link(i, j, False)
            without_link = potential(g, X, model, theta)
            worst = max(worst, abs(inc - (with_link - without_link)))
        assert worst < 1e-10

    def test_matches_deciding_player_utility_change(self):
        # oracle: the same toggle evaluated through the player's own payoff
        rng = np.random.default_rng(43)
        eps = np.zeros((6, 6))
        worst = 0.0
        for _ in range(1000):
            X, model, theta, g = random_instance(rng, 6)
            i, j = rng.choice(6, size=2, replace=False)
            inc = delta_potential(g, X, model, theta, int(i), int(j))
            g.set_link(i, j, True)
            u_with = utility(int(i), g, X, eps, model, theta)
            g.set_link(i, j, False)
            u_without = utility(int(i), g, X, eps, model, theta)
            worst = max(worst, abs(inc - (u_with - u_without)))
        assert worst < 1e-10


class TestTheta:
    def test_vector_round_trip(self, full_model, full_theta):
        vec = full_theta.as_vector()
        back = Theta.from_vector(full_model, vec)
        assert np.array_equal(back.as_vector(), vec)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            Theta(np.array([np.inf]), np.array([]), np.array([]))

    def test_dimension_mismatch(self, full_model):
        with pytest.raises(ValidationError):
            Theta.from_vector(full_model, [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(
    width=st.floats(min_value=0.5, max_value=50.0, allow_nan=False),
    values=st.lists(
        st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
        min_size=2,
        max_size=6,
    ),
)
def test_same_bin_is_symmetric(width, values):
    X = CovariateTable({"x": values})
    f = same_bin("x", width)
    m = f.matrix(X)
    assert np.array_equal(m, m.T)
