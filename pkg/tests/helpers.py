from ardnet.model import CovariateTable, Network, Theta, UtilityModel, abs_diff, constant


def random_instance(rng, n, scale=1.0):
    """Random covariates, full model and coefficients for property tests."""
    X = CovariateTable({"age": rng.uniform(18, 80, size=n)})
    model = UtilityModel(
        direct_features=(constant(), abs_diff("age", 20.0)),
        mutual_features=(constant(),),
        indirect_features=(constant(),),
    )
    theta = Theta(
        rng.uniform(-scale, scale, size=2),
        rng.uniform(-scale, scale, size=1),
        rng.uniform(-scale, scale, size=1),
    )
    g = Network.random(n, rng.uniform(0.2, 0.8), rng)
    return X, model, theta, g
