import numpy as np
import pytest

import plrnet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def study_rules():
    """Scaling rules used by the Monte Carlo study tests."""
    rule_t = plrnet.ScalingRule(
        smoothness=2, input_dim=1, role="treatment", c_depth=0.3, c_width=0.04
    )
    rule_y = plrnet.ScalingRule(
        smoothness=2, input_dim=1, role="outcome", c_depth=0.3, c_width=0.04
    )
    return rule_t, rule_y


@pytest.fixture
def study_train():
    return plrnet.TrainConfig(
        epochs=300, batch_size=128, step_size=0.003, restarts=2, seed=0
    )


@pytest.fixture
def default_dgp():
    return plrnet.PlrDgpConfig(theta0=2.0)


def random_architecture(rng, max_depth=3, max_width=8, max_dim=3):
    depth = int(rng.integers(1, max_depth + 1))
    widths = tuple(int(rng.integers(1, max_width + 1)) for _ in range(depth))
    d = int(rng.integers(1, max_dim + 1))
    bound = float(rng.uniform(2.0, 12.0))
    return plrnet.Architecture(d, widths, bound)


def random_network(rng, **kwargs):
    from plrnet.mlp import he_init

    arch = random_architecture(rng, **kwargs)
    return plrnet.Network(arch, he_init(arch, rng))
