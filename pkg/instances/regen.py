"""Regenerate the shipped instance files. Run from the repo root:

    python3 instances/regen.py
"""

from pathlib import Path

import numpy as np

from replyauction import (
    Instance,
    InstanceSpec,
    MechanismConfig,
    OutcomeSpace,
    Policy,
    Query,
    RewardFunction,
    generate,
    save_instance,
)

HERE = Path(__file__).parent


def toy2() -> Instance:
    """K=2, uniform reference = proposal, one advertiser preferring reply 0 by ln 2."""
    space = OutcomeSpace.from_texts(["reply with the brand", "reply without the brand"])
    ref = Policy.from_log_weights(space, np.zeros(2))
    reward = RewardFunction(space, np.array([np.log(2.0), 0.0]))
    return Instance(
        query=Query("toy2", "two replies, one advertiser"),
        space=space,
        ref=ref,
        gen=ref,
        reports=[reward],
        config=MechanismConfig(tau=1.0, m=2, seed=0),
    )


def k3() -> Instance:
    """K=3 with reference [0.5, 0.3, 0.2] and two single-reply advertisers."""
    space = OutcomeSpace.from_texts(["first", "second", "third"])
    ref = Policy.from_log_weights(space, np.log([0.5, 0.3, 0.2]))
    r1 = RewardFunction(space, np.array([1.0, 0.0, 0.0]))
    r2 = RewardFunction(space, np.array([0.0, 1.0, 0.0]))
    return Instance(
        query=Query("k3", "three replies, two advertisers"),
        space=space,
        ref=ref,
        gen=ref,
        reports=[r1, r2],
        config=MechanismConfig(tau=1.0, m=3, seed=0),
    )


def main() -> None:
    save_instance(toy2(), HERE / "toy2.json")
    save_instance(k3(), HERE / "k3.json")
    # K=8 with a half-strength context tilt: the proposal helps without
    # collapsing onto the target, so convergence stays measurable.
    save_instance(
        generate(InstanceSpec(k=8, n=2, tau=1.0, tilt_strength=0.5, reward_scale=1.5, seed=8)),
        HERE / "k8.json",
    )
    print("wrote", ", ".join(str(HERE / f) for f in ("toy2.json", "k3.json", "k8.json")))


if __name__ == "__main__":
    main()
