import math
from pathlib import Path

import numpy as np
import pytest

from replyauction import (
    Instance,
    MechanismConfig,
    OutcomeSpace,
    Policy,
    Query,
    RewardFunction,
)

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"


@pytest.fixture
def space2():
    return OutcomeSpace.of_size(2)


@pytest.fixture
def uniform2(space2):
    return Policy.from_log_weights(space2, np.zeros(2))


@pytest.fixture
def toy2(space2, uniform2):
    """K=2, ref = gen = uniform, one advertiser preferring reply 0 by ln 2."""
    reward = RewardFunction(space2, np.array([math.log(2.0), 0.0]))
    return Instance(
        query=Query("toy2"),
        space=space2,
        ref=uniform2,
        gen=uniform2,
        reports=[reward],
        config=MechanismConfig(tau=1.0, m=2, seed=0),
    )


def random_instance(rng, k=None, n=None, tau=1.0):
    """A hand-rolled random instance, independent of the instance generator."""
    k = k if k is not None else int(rng.integers(2, 9))
    n = n if n is not None else int(rng.integers(1, 4))
    space = OutcomeSpace.of_size(k)
    ref = Policy.from_log_weights(space, rng.normal(0, 1, k))
    gen = Policy.from_log_weights(space, rng.normal(0, 1, k))
    reports = [RewardFunction(space, rng.normal(0, 1, k)) for _ in range(n)]
    config = MechanismConfig(tau=tau, m=int(rng.integers(1, 7)), seed=int(rng.integers(2**31)))
    return Instance(Query("fuzz"), space, ref, gen, reports, config)
