"""Oracle tests: each exact routine is checked against an independent
brute-force enumeration written inline here (itertools over ordered tuples),
so the shipped kernels and the reference math never share code."""

import itertools
import math

import numpy as np
import pytest

from replyauction import (
    BetaVector,
    Instance,
    MechanismConfig,
    OutcomeSpace,
    Query,
    RewardFunction,
    deviation_audit,
    finite_difference_gradient_check,
    induced_distribution_exact,
    induced_distribution_mc,
    offset_c,
    optimal_distribution,
    policy_from_weights,
    tv_distance,
)
from replyauction import seeds
from replyauction.errors import EnumerationTooLargeError, SpaceMismatchError
from replyauction.oracle import (
    PAYMENT_RULE_DOUBLE_OFFSET,
    PAYMENT_RULE_VALUE_SUBSTITUTED,
)
from tests.conftest import random_instance


def induced_bruteforce(instance, m):
    """Ordered-tuple enumeration with no shared code with the engine."""
    gen_p = instance.gen.probs()
    ref_p = instance.ref.probs()
    agg = np.sum([r.rewards for r in instance.reports], axis=0) if instance.reports else np.zeros(
        instance.space.size
    )
    tau = instance.config.tau
    out = np.zeros(instance.space.size)
    for tup in itertools.product(range(instance.space.size), repeat=m):
        p_tuple = math.prod(gen_p[t] for t in tup)
        if p_tuple == 0.0:
            continue
        logits = np.array([agg[t] / tau + math.log(ref_p[t]) - math.log(gen_p[t]) for t in tup])
        w = np.exp(logits - logits.max())
        probs = w / w.sum()
        for j, t in enumerate(tup):
            out[t] += p_tuple * probs[j]
    return out


class TestOptimalDistribution:
    def test_zero_rewards_identity(self, space2, uniform2):
        result = optimal_distribution(uniform2, [RewardFunction(space2, np.zeros(2))], 1.0)
        assert np.allclose(result.distribution.probs(), uniform2.probs())
        assert result.log_partition == pytest.approx(0.0, abs=1e-12)

    def test_toy2_hand_value(self, space2, uniform2):
        r = RewardFunction(space2, np.array([math.log(2), 0.0]))
        result = optimal_distribution(uniform2, [r], 1.0)
        assert np.allclose(result.distribution.probs(), [2 / 3, 1 / 3])
        assert math.exp(result.log_partition) == pytest.approx(1.5, abs=1e-12)

    def test_k3_hand_value(self):
        space = OutcomeSpace.of_size(3)
        ref = policy_from_weights(space, [0.5, 0.3, 0.2])
        r1 = RewardFunction(space, np.array([1.0, 0.0, 0.0]))
        r2 = RewardFunction(space, np.array([0.0, 1.0, 0.0]))
        result = optimal_distribution(ref, [r1, r2], 1.0)
        z = 0.5 * math.e + 0.3 * math.e + 0.2
        expected = np.array([0.5 * math.e, 0.3 * math.e, 0.2]) / z
        assert np.allclose(result.distribution.probs(), expected, atol=1e-12)
        assert math.exp(result.log_partition) == pytest.approx(z, abs=1e-12)

    def test_space_mismatch(self, uniform2):
        other = RewardFunction(OutcomeSpace.of_size(3), np.zeros(3))
        with pytest.raises(SpaceMismatchError):
            optimal_distribution(uniform2, [other], 1.0)


class TestInducedExact:
    def test_m1_equals_gen(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            inst = random_instance(rng, k=4)
            induced = induced_distribution_exact(inst, 1)
            assert np.allclose(induced.probs(), inst.gen.probs(), atol=1e-12)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(3)
        for _ in range(8):
            inst = random_instance(rng, k=3)
            for m in (2, 3, 4):
                induced = induced_distribution_exact(inst, m)
                expected = induced_bruteforce(inst, m)
                assert np.allclose(induced.probs(), expected, atol=1e-12)

    def test_toy2_tv_shrinks(self, toy2):
        opt = optimal_distribution(toy2.ref, toy2.reports, 1.0).distribution
        tv2 = tv_distance(induced_distribution_exact(toy2, 2), opt)
        tv4 = tv_distance(induced_distribution_exact(toy2, 4), opt)
        assert tv2 == pytest.approx(1 / 12, abs=1e-12)
        assert tv4 < tv2

    def test_small_tv_reachable_on_k2(self, toy2):
        # with a near-target proposal, an enumerable m takes TV below 1e-3
        from replyauction import synthetic_context_tilt

        gen = synthetic_context_tilt(toy2.ref, toy2.reports, 0.9)
        inst = Instance(toy2.query, toy2.space, toy2.ref, gen, toy2.reports, toy2.config)
        opt = optimal_distribution(inst.ref, inst.reports, 1.0).distribution
        tvs = [tv_distance(induced_distribution_exact(inst, m), opt) for m in (1, 2, 4, 8, 16, 20)]
        assert min(tvs) < 1e-3
        assert all(b <= a + 1e-12 for a, b in zip(tvs, tvs[1:]))

    def test_enumeration_cap(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, k=8)
        with pytest.raises(EnumerationTooLargeError):
            induced_distribution_exact(inst, 7)  # 8^7 > 2^20


class TestInducedMc:
    def test_point_mass(self, space2, uniform2):
        gen = policy_from_weights(space2, [0.0, 1.0])
        inst = Instance(
            Query("pm"), space2, uniform2, gen, [], MechanismConfig(tau=1.0, m=3, seed=2)
        )
        est = induced_distribution_mc(inst, 3, trials=50)
        assert np.allclose(est.probs(), [0.0, 1.0])

    def test_single_trial_one_hot(self, toy2):
        est = induced_distribution_mc(toy2, 2, trials=1)
        assert sorted(est.probs()) == [0.0, 1.0]

    def test_matches_exact_enumeration(self, toy2):
        exact = induced_distribution_exact(toy2, 4)
        est = induced_distribution_mc(toy2, 4, trials=200000, rng=seeds.substream(77, 0))
        assert np.all(np.abs(est.probs() - exact.probs()) < 0.01)

    def test_entrywise_bound_at_1e5_trials(self, toy2):
        trials = 100000
        for m in (2, 4):
            exact = induced_distribution_exact(toy2, m).probs()
            est = induced_distribution_mc(toy2, m, trials=trials, rng=seeds.substream(78, m)).probs()
            bound = 3 * np.sqrt(exact * (1 - exact) / trials) + 1e-3
            assert np.all(np.abs(est - exact) < bound)

    def test_unnormalized_estimator_unbiased(self):
        # (1/M) sum_j w(y_j) 1{y_j = y} with w = opt/gen estimates opt(y)
        rng = np.random.default_rng(11)
        inst = random_instance(rng, k=4)
        opt = optimal_distribution(inst.ref, inst.reports, inst.config.tau).distribution
        w = np.zeros(4)
        live = inst.gen.probs() > 0
        w[live] = opt.probs()[live] / inst.gen.probs()[live]
        m, trials = 8, 40000
        draws = rng.choice(4, size=(trials, m), p=inst.gen.probs())
        for y in range(4):
            est = (w[draws] * (draws == y)).sum(axis=1) / m
            se = est.std(ddof=1) / math.sqrt(trials)
            assert abs(est.mean() - opt.probs()[y]) < 3 * se + 1e-3


class TestDeviationAudit:
    def test_truthful_only_grid_passes(self, toy2):
        report = deviation_audit(
            toy2, 0, grid=lambda r: [("truthful", r)], batches=3
        )
        assert report.passed
        assert report.best_misreport_gain == pytest.approx(0.0, abs=1e-12)

    def test_default_grid_passes_toy2(self, toy2):
        report = deviation_audit(toy2, 0, batches=10)
        assert report.passed
        assert report.best_misreport_gain <= 1e-9

    def test_double_offset_still_passes(self, toy2):
        # the offset is report-independent, so doubling it cannot break
        # dominance; this is why it is not a usable negative control
        report = deviation_audit(toy2, 0, batches=5, payment_rule=PAYMENT_RULE_DOUBLE_OFFSET)
        assert report.passed

    def test_value_substituted_rule_fails(self, toy2):
        report = deviation_audit(
            toy2, 0, batches=5, payment_rule=PAYMENT_RULE_VALUE_SUBSTITUTED
        )
        assert not report.passed
        assert report.best_misreport_gain > 1e-6

    def test_shipped_instances_pass_audit_and_fail_control(self):
        from tests.conftest import INSTANCE_DIR
        from replyauction import load_instance

        for name in ("toy2.json", "k3.json", "k8.json"):
            inst = load_instance(INSTANCE_DIR / name)
            for i in range(len(inst.reports)):
                assert deviation_audit(inst, i, batches=5).passed, (name, i)
                control = deviation_audit(
                    inst, i, batches=5, payment_rule=PAYMENT_RULE_VALUE_SUBSTITUTED
                )
                assert not control.passed, (name, i)


class TestGradientCheck:
    def test_symmetric_point(self):
        err = finite_difference_gradient_check(np.zeros(3), BetaVector(np.zeros(3), 0), 1.0)
        assert err < 1e-6

    def test_toy2_slot_zero_derivative(self):
        # derivative of the utility at slot 0 equals its softmax probability 2/3
        beta = BetaVector(np.zeros(2), 0)
        r = np.array([math.log(2), 0.0])
        h = 1e-5
        from replyauction import truthful_utility

        up, down = r.copy(), r.copy()
        up[0] += h
        down[0] -= h
        grad = (truthful_utility(up, beta, 1.0, 0.0) - truthful_utility(down, beta, 1.0, 0.0)) / (2 * h)
        assert grad == pytest.approx(2 / 3, abs=1e-6)

    def test_fuzzed_instances(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            m = int(rng.integers(1, 9))
            tau = float(rng.uniform(0.3, 3.0))
            beta = BetaVector(rng.normal(0, 2, m), 0)
            r = rng.normal(0, 2, m)
            assert finite_difference_gradient_check(r, beta, tau) < 1e-5

    def test_monotone_utility_in_each_slot(self):
        from replyauction import truthful_utility

        rng = np.random.default_rng(23)
        for _ in range(50):
            m = int(rng.integers(1, 7))
            beta = BetaVector(rng.normal(0, 1, m), 0)
            r = rng.normal(0, 1, m)
            c = offset_c(beta, 1.0)
            base = truthful_utility(r, beta, 1.0, c)
            j = int(rng.integers(m))
            bumped = r.copy()
            bumped[j] += float(rng.uniform(0, 2))
            assert truthful_utility(bumped, beta, 1.0, c) >= base - 1e-12
