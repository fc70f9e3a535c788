"""Experiment orchestration: learning-curve sweeps and GNN training studies.

Every (training size, trial) pair gets its own seed derived from the master
seed, so results do not depend on worker count or scheduling order.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .augment import AugmentSpec
from .errors import ConfigError
from .gnn import TrainConfig, accuracy, train
from .learners import LEARNERS, HypothesisClass, eval_error, fit_learner
from .problems import ExactProblem, SamplerProblem, parse_problem, sample_training_set

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    learner: str
    m: int
    trial: int
    seed: int
    metric: str
    value: float
    status: str = "ok"
    reason: str = ""
    wall_time: float = 0.0


def trial_seed(master: int, m: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, m, trial]).generate_state(1)[0])


@dataclass
class SweepConfig:
    problem: str = "example1:12"
    learners: list = field(default_factory=lambda: ["erm", "ea_erm"])
    hypothesis: str = "table"
    m_list: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    trials: int = 10
    seed: int = 0
    gamma: float = 0.0
    universe: str = "support"
    out: str = "runs/sweep"
    workers: int = 1

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.m_list, self.m_list[1:])):
            raise ConfigError("m_list must be strictly increasing")
        if not self.m_list or self.m_list[0] < 1:
            raise ConfigError("m_list must hold positive sizes")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        unknown = [l for l in self.learners if l not in LEARNERS]
        if unknown:
            raise ConfigError(f"unknown learners {unknown}")
        if self.universe not in ("support", "combinatorial"):
            raise ConfigError("universe must be 'support' or 'combinatorial'")
        HypothesisClass(self.hypothesis)


@dataclass
class ArmSpec:
    name: str
    lam: float = 0.0
    M: int = 0
    augment: Optional[AugmentSpec] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ArmSpec":
        d = dict(d)
        aug = d.pop("augment", None)
        lam = d.pop("lambda", d.pop("lam", 0.0))
        arm = cls(d.pop("name"), float(lam), int(d.pop("M", 0)),
                  AugmentSpec.from_dict(aug) if aug else None)
        if d:
            raise ConfigError(f"unknown arm keys {sorted(d)}")
        return arm

    def to_dict(self) -> dict:
        out = {"name": self.name, "lambda": self.lam, "M": self.M}
        if self.augment is not None:
            out["augment"] = {"kind": self.augment.kind, "rate": self.augment.rate}
        return out


def default_arms() -> list[ArmSpec]:
    return [
        ArmSpec("vanilla"),
        ArmSpec("pi_indist", 0.5, 2, AugmentSpec("pi_keep_fraction", 0.9)),
        ArmSpec("ood", 0.5, 2, AugmentSpec("ood_add_fraction", 1.0)),
    ]


@dataclass
class StudyConfig:
    problem: str = "ba2motifs:25"
    pool: int = 300
    test: int = 100
    m_list: list = field(default_factory=lambda: [8])
    seeds: int = 10
    seed: int = 0
    arms: list = field(default_factory=default_arms)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(e_w=0, e_s=300, lr=3e-2))
    out: str = "runs/study"
    workers: int = 1

    def __post_init__(self):
        if self.test >= self.pool:
            raise ConfigError("test set must be smaller than the pool")
        if any(b <= a for a, b in zip(self.m_list, self.m_list[1:])):
            raise ConfigError("m_list must be strictly increasing")
        if self.m_list and self.m_list[-1] > self.pool - self.test:
            raise ConfigError("largest training size exceeds the non-test pool")
        if self.pool - self.test > 700:
            raise ConfigError("toy scale only: at most 700 training graphs")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")


# ---------------------------------------------------------------------------
# config files


def _config_to_dict(cfg) -> dict:
    d = asdict(cfg)
    if isinstance(cfg, StudyConfig):
        d["arms"] = [a.to_dict() for a in cfg.arms]
        t = asdict(cfg.train)
        t["lambda"] = t.pop("lam")
        d["train"] = t
    return d


def config_hash(cfg) -> str:
    d = _config_to_dict(cfg)
    d.pop("out", None)
    d.pop("workers", None)
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def sweep_config_from_dict(d: dict) -> SweepConfig:
    known = set(SweepConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown sweep keys {sorted(unknown)}")
    return SweepConfig(**d)


def study_config_from_dict(d: dict) -> StudyConfig:
    d = dict(d)
    if "arms" in d:
        d["arms"] = [ArmSpec.from_dict(a) for a in d["arms"]]
    if "train" in d:
        d["train"] = TrainConfig.from_dict(d["train"])
    unknown = set(d) - set(StudyConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown study keys {sorted(unknown)}")
    return StudyConfig(**d)


def load_config_file(path) -> dict:
    """Read a TOML config or a manifest.json written by a previous run.

    Returns a dict with ``sweep`` and/or ``study`` sections.
    """
    path = str(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if "config" not in data or "kind" not in data:
            raise ConfigError("JSON config must be a run manifest")
        return {data["kind"]: data["config"]}
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - {"sweep", "study"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")
    return data


# ---------------------------------------------------------------------------
# learning sweeps


@functools.lru_cache(maxsize=8)
def _problem(spec: str):
    return parse_problem(spec)


def _sweep_task(cfg: SweepConfig, m: int, trial: int) -> list[RunRecord]:
    problem = _problem(cfg.problem)
    if not isinstance(problem, ExactProblem):
        raise ConfigError("learning sweeps need an exact problem")
    H = HypothesisClass(cfg.hypothesis, problem.num_classes)
    seed = trial_seed(cfg.seed, m, trial)
    T = sample_training_set(problem, m, np.random.default_rng(seed))
    universe = problem if cfg.universe == "support" else "combinatorial"
    out = []
    for name in cfg.learners:
        t0 = time.perf_counter()
        try:
            c = fit_learner(name, H, T, seed=seed, gamma=cfg.gamma, universe=universe)
            out.append(RunRecord(name, m, trial, seed, "error", eval_error(c, problem),
                                 wall_time=time.perf_counter() - t0))
        except Exception as exc:  # a failed trial is recorded, never fatal
            log.warning("trial failed: %s m=%d trial=%d: %s", name, m, trial, exc)
            out.append(RunRecord(name, m, trial, seed, "error", math.nan, "failed",
                                 f"{type(exc).__name__}: {exc}", time.perf_counter() - t0))
    return out


def _order_records(records: list[RunRecord], learners: Sequence[str]) -> list[RunRecord]:
    rank = {name: i for i, name in enumerate(learners)}
    return sorted(records, key=lambda r: (rank.get(r.learner, len(rank)), r.m, r.trial))


def _run_tasks(fn, cfg, tasks, workers: int) -> list[RunRecord]:
    records: list[RunRecord] = []
    if workers <= 1:
        for args in tasks:
            records.extend(fn(cfg, *args))
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, cfg, *args) for args in tasks]
        for fut in futures:
            records.extend(fut.result())
    return records


def run_learning_sweep(cfg: SweepConfig) -> list[RunRecord]:
    """One record per (learner, m, trial), with the exact statistical error."""
    tasks = [(m, t) for m in cfg.m_list for t in range(cfg.trials)]
    return _order_records(_run_tasks(_sweep_task, cfg, tasks, cfg.workers), cfg.learners)


# ---------------------------------------------------------------------------
# GNN training studies


@functools.lru_cache(maxsize=4)
def _study_pool(problem_spec: str, pool: int, seed: int):
    problem = _problem(problem_spec)
    if not isinstance(problem, SamplerProblem):
        raise ConfigError("training studies need a sampler problem")
    return problem.draw_many(pool, np.random.SeedSequence([seed, 0xB2]))


def _augmenter(arm: ArmSpec, pool):
    if arm.augment is None:
        return None
    spec = arm.augment
    partners = [lg for lg, _ in pool]
    return lambda lg, expl, rng: spec.apply(lg, expl, rng, partners)


def _study_task(cfg: StudyConfig, m: int, trial: int) -> list[RunRecord]:
    pool = _study_pool(cfg.problem, cfg.pool, cfg.seed)
    test = [lg for lg, _ in pool[:cfg.test]]
    rest = pool[cfg.test:]
    seed = trial_seed(cfg.seed, m, trial)
    idx = np.random.default_rng(seed).choice(len(rest), size=m, replace=False)
    data = [rest[i] for i in sorted(idx)]
    out = []
    for arm in cfg.arms:
        t0 = time.perf_counter()
        tc = TrainConfig(**{**asdict(cfg.train), "lam": arm.lam, "M": arm.M, "seed": seed})
        try:
            params = train(data, tc, _augmenter(arm, data))
            out.append(RunRecord(arm.name, m, trial, seed, "accuracy", accuracy(params, test),
                                 wall_time=time.perf_counter() - t0))
        except Exception as exc:
            log.warning("study run failed: %s m=%d trial=%d: %s", arm.name, m, trial, exc)
            out.append(RunRecord(arm.name, m, trial, seed, "accuracy", math.nan, "failed",
                                 f"{type(exc).__name__}: {exc}", time.perf_counter() - t0))
    return out


def run_training_study(cfg: StudyConfig) -> list[RunRecord]:
    """Test accuracy per (arm, training size, seed)."""
    tasks = [(m, t) for m in cfg.m_list for t in range(cfg.seeds)]
    return _order_records(_run_tasks(_study_task, cfg, tasks, cfg.workers), [a.name for a in cfg.arms])


def summarize(records: Sequence[RunRecord]) -> dict:
    """learner -> m -> mean/std (population) over successful trials."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r.learner, {}).setdefault(r.m, []).append(r)
    out = {}
    for learner, by_m in groups.items():
        out[learner] = {}
        for m in sorted(by_m):
            vals = np.array([r.value for r in by_m[m] if r.status == "ok"])
            out[learner][str(m)] = {
                "mean": float(vals.mean()) if len(vals) else None,
                "std": float(vals.std()) if len(vals) else None,
                "n": int(len(vals)),
                "failed": int(len(by_m[m]) - len(vals)),
            }
    return out


def min_m_reaching(records: Sequence[RunRecord], learner: str, eps: float) -> Optional[int]:
    """Smallest swept m whose mean error is at most ``eps``."""
    for m, stats in sorted(summarize(records).get(learner, {}).items(), key=lambda kv: int(kv[0])):
        if stats["mean"] is not None and stats["mean"] <= eps:
            return int(m)
    return None


def manifest_for(kind: str, cfg, records: Sequence[RunRecord], started: float, finished: float) -> dict:
    return {
        "kind": kind,
        "tool_version": __version__,
        "config_hash": config_hash(cfg),
        "config": _config_to_dict(cfg),
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(finished)),
        "runs": [{"learner": r.learner, "m": r.m, "trial": r.trial, "seed": r.seed,
                  "wall_time": r.wall_time} for r in records],
    }
