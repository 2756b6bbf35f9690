"""Synthetic auction instances and their on-disk format.

An instance bundles a query, a finite reply space, reference and proposal
policies, one reward function per advertiser, and the mechanism config.
Generation mirrors the shape of the experiments this engine is built to
study: a random reference categorical, advertiser policies that boost a
"brand" subset of replies, implicit rewards from the log-ratio mapping, and a
proposal tilted toward the aggregate reward.

File format (normative, schema ``replyauction-instance/1``): a JSON document
with fields ``schema``, ``query`` {id, text}, ``replies`` (list of reply
texts), ``tau``, ``m``, ``seed``, ``log_ref``, ``log_gen``, ``rewards``
(one list per advertiser), and ``spec`` (the generator parameters, or null
for hand-built instances).  Emission is deterministic: the same spec always
serializes to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import seeds
from .allocation import MechanismConfig
from .errors import InvalidSpecError, SchemaError
from .policy import DpoParams, Policy, RewardFunction, dpo_reward, synthetic_context_tilt
from .space import OutcomeSpace, Query

SCHEMA = "replyauction-instance/1"
DEFAULT_M = 8


@dataclass(frozen=True)
class InstanceSpec:
    """Generator parameters for one synthetic instance."""

    k: int
    n: int
    tau: float = 1.0
    tilt_strength: float | None = None  # None means 1/tau
    reward_scale: float = 1.5
    seed: int = 0
    brand_overlap: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidSpecError(f"k must be at least 1, got {self.k}")
        if self.n < 0:
            raise InvalidSpecError(f"n must be nonnegative, got {self.n}")
        if not self.tau > 0:
            raise InvalidSpecError(f"tau must be positive, got {self.tau}")
        if self.tilt_strength is not None and self.tilt_strength < 0:
            raise InvalidSpecError(f"tilt_strength must be nonnegative, got {self.tilt_strength}")
        if not self.reward_scale >= 0:
            raise InvalidSpecError(f"reward_scale must be nonnegative, got {self.reward_scale}")
        if not 0 <= self.brand_overlap <= 1:
            raise InvalidSpecError(f"brand_overlap must lie in [0, 1], got {self.brand_overlap}")

    @property
    def effective_tilt(self) -> float:
        return 1.0 / self.tau if self.tilt_strength is None else self.tilt_strength


@dataclass(frozen=True, eq=False)
class Instance:
    query: Query
    space: OutcomeSpace
    ref: Policy
    gen: Policy
    reports: list[RewardFunction]
    config: MechanismConfig
    spec: InstanceSpec | None = None

    @property
    def id(self) -> str:
        return self.query.id

    def baseline(self) -> "Instance":
        """The same instance with candidates drawn from the reference itself."""
        return Instance(
            query=self.query,
            space=self.space,
            ref=self.ref,
            gen=self.ref,
            reports=self.reports,
            config=self.config,
            spec=self.spec,
        )

    def with_m(self, m: int) -> "Instance":
        cfg = MechanismConfig(tau=self.config.tau, m=m, seed=self.config.seed)
        return Instance(self.query, self.space, self.ref, self.gen, self.reports, cfg, self.spec)

    def with_seed(self, seed: int) -> "Instance":
        cfg = MechanismConfig(tau=self.config.tau, m=self.config.m, seed=seed)
        return Instance(self.query, self.space, self.ref, self.gen, self.reports, cfg, self.spec)

    def with_report_zeroed(self, i: int) -> "Instance":
        """Advertiser i's report replaced by the all-zero reward function."""
        reports = list(self.reports)
        reports[i] = RewardFunction(self.space, np.zeros(self.space.size))
        return Instance(self.query, self.space, self.ref, self.gen, reports, self.config, self.spec)


def _brand_subsets(spec: InstanceSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """One boosted-reply subset per advertiser; disjoint unless overlap > 0."""
    if spec.n == 0:
        return []
    size = max(1, spec.k // (2 * spec.n))
    perm = rng.permutation(spec.k)
    stride = max(1, round(size * (1.0 - spec.brand_overlap)))
    return [perm[(i * stride) % spec.k :][:size] for i in range(spec.n)]


def generate(spec: InstanceSpec, rng: np.random.Generator | None = None) -> Instance:
    """Build a reproducible instance from its spec.

    The reference is a log-space Gaussian categorical; advertiser i's policy
    multiplies the reference by exp(reward_scale) on her brand subset, and her
    report is the induced log-ratio reward (unit regularization weight, zero
    constant).  The proposal tilts the reference toward the aggregate report
    by tilt_strength (1/tau by default; 0 means proposal = reference).
    """
    if rng is None:
        rng = seeds.substream(spec.seed, 0)
    space = OutcomeSpace.of_size(spec.k)
    ref = Policy.from_log_weights(space, rng.normal(0.0, 1.0, spec.k))

    reports = []
    for subset in _brand_subsets(spec, rng):
        boost = np.zeros(spec.k)
        boost[subset] = spec.reward_scale
        adv_policy = Policy.from_log_weights(space, ref.log_probs + boost)
        reports.append(dpo_reward(adv_policy, ref, DpoParams(tau_i=1.0, log_z_i=0.0)))

    gen = synthetic_context_tilt(ref, reports, spec.effective_tilt)
    config = MechanismConfig(tau=spec.tau, m=DEFAULT_M, seed=seeds.derive_seed(spec.seed, 1))
    query = Query(
        id=f"k{spec.k}-n{spec.n}-seed{spec.seed}",
        text=f"synthetic query (k={spec.k}, n={spec.n}, seed={spec.seed})",
    )
    return Instance(
        query=query, space=space, ref=ref, gen=gen, reports=reports, config=config, spec=spec
    )


def _log_vec_to_json(values: np.ndarray) -> list[float | None]:
    """JSON has no -inf literal; zero-probability replies serialize as null."""
    return [None if v == -np.inf else float(v) for v in values]


def _log_vec_from_json(values) -> np.ndarray:
    return np.array([-np.inf if v is None else float(v) for v in values])


def save_instance(instance: Instance, path: str | Path) -> None:
    doc = {
        "schema": SCHEMA,
        "query": {"id": instance.query.id, "text": instance.query.text},
        "replies": [r.text for r in instance.space.replies],
        "tau": instance.config.tau,
        "m": instance.config.m,
        "seed": instance.config.seed,
        "log_ref": _log_vec_to_json(instance.ref.log_probs),
        "log_gen": _log_vec_to_json(instance.gen.log_probs),
        "rewards": [r.rewards.tolist() for r in instance.reports],
        "spec": asdict(instance.spec) if instance.spec is not None else None,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_instance(path: str | Path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise SchemaError(f"{path}: expected schema {SCHEMA!r}, got {doc.get('schema')!r}")
    required = {"query", "replies", "tau", "m", "seed", "log_ref", "log_gen", "rewards"}
    missing = required - doc.keys()
    if missing:
        raise SchemaError(f"{path}: missing fields {sorted(missing)}")

    space = OutcomeSpace.from_texts(doc["replies"])
    ref = Policy(space, _log_vec_from_json(doc["log_ref"]))
    gen = Policy(space, _log_vec_from_json(doc["log_gen"]))
    reports = [RewardFunction(space, np.asarray(r, dtype=np.float64)) for r in doc["rewards"]]
    config = MechanismConfig(tau=float(doc["tau"]), m=int(doc["m"]), seed=int(doc["seed"]))
    spec = InstanceSpec(**doc["spec"]) if doc.get("spec") else None
    return Instance(
        query=Query(**doc["query"]),
        space=space,
        ref=ref,
        gen=gen,
        reports=reports,
        config=config,
        spec=spec,
    )
