"""Experiment runner: config ingestion, replicated runs, CSV/JSON persistence.

A run is a pure function of ``base_seed + run_index``; replicates executed in
parallel produce output byte-identical to sequential execution because every
run owns counter-based RNG streams and aggregation reduces runs in index
order. Regret curves are logged at a fixed checkpoint cadence to bound output
size.

Output layout (per experiment directory):

- ``aggregate.csv``: header ``t,regret_kind,comparator_id,mean,stderr,n_runs``,
  one row per checkpoint per tracked regret series.
- ``meta.json``: config echo with its hash, library version, per-run seeds and
  sampled environment parameters.
- ``runs.json``: per-run checkpoint series (enables ``replay``).
- ``run_<k>.csv`` (optional): one CSV per run.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from sleeping_bandits import __version__
from sleeping_bandits.baselines import FixedOrderingPlayer, SleepingUcb, UniformRandom
from sleeping_bandits.core import RngStream, RoundTrace
from sleeping_bandits.dueling import (
    CategoriesDuelEnv,
    SiDbLedger,
    SparringDuel,
    UtilityDuelEnv,
)
from sleeping_bandits.environments import (
    StochasticEnv,
    dependent_env,
    random_dependent_env,
    random_game_env,
    rps_env,
)
from sleeping_bandits.regret import RegretLedger
from sleeping_bandits.si_exp3 import SiExp3

# The ordering-regret EXP3 baseline from the wider literature is out of scope
# here; figure-style comparisons use s_ucb and uniform instead.
BASELINE_NOTE = "comparisons use the s_ucb and uniform baselines"

CHECKPOINT_TARGET = 500

ENVIRONMENTS: dict[str, Callable] = {}
MAB_LEARNERS: dict[str, Callable] = {}
DUELING_LEARNERS: dict[str, Callable] = {}


class ConfigError(ValueError):
    """Bad experiment configuration (unknown id, invalid field)."""


@dataclass
class ExperimentConfig:
    """Everything a reproducible experiment needs, JSON round-trippable."""

    environment: str
    learner: str
    horizon: int
    runs: int = 50
    base_seed: int = 0
    environment_params: dict = field(default_factory=dict)
    learner_params: dict = field(default_factory=dict)
    checkpoint_every: int = 0  # 0 -> max(1, horizon // CHECKPOINT_TARGET)
    workers: int = 1
    save_runs: bool = True
    save_per_run_csv: bool = False

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.environment not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment {self.environment!r}")
        dueling = self.environment.startswith("duel_")
        pool = DUELING_LEARNERS if dueling else MAB_LEARNERS
        if self.learner not in pool:
            raise ConfigError(
                f"learner {self.learner!r} does not run on environment {self.environment!r}"
            )

    @property
    def cadence(self) -> int:
        return self.checkpoint_every or max(1, self.horizon // CHECKPOINT_TARGET)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RunResult:
    """Per-run checkpoint series plus final accumulators."""

    run_index: int
    seed: int
    checkpoints: list[int]
    series: dict[str, list[float]]  # "regret_kind/comparator_id" -> values
    env_params: dict
    availability_mass: float = 0.0
    final_external: Optional[list[float]] = None
    final_internal: Optional[list[list[float]]] = None
    final_learner_loss: float = 0.0
    final_duel: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(**d)


# ---------------------------------------------------------------------------
# registries
# ---------------------------------------------------------------------------


def _register_defaults() -> None:
    ENVIRONMENTS.update(
        {
            "stochastic": lambda rng, params: StochasticEnv(
                rng, n_arms=params.get("n_arms", 10),
                means=params.get("means"), avail_probs=params.get("avail_probs"),
            ),
            "dependent": lambda rng, params: dependent_env(),
            "rps": lambda rng, params: rps_env(),
            "random_dependent": lambda rng, params: random_dependent_env(
                rng, n_arms=params.get("n_arms", 5), n_templates=params.get("n_templates", 5)
            ),
            "random_game": lambda rng, params: random_game_env(
                rng, n_arms=params.get("n_arms", 10), n_templates=params.get("n_templates", 4)
            ),
            "duel_utility": lambda rng, params: UtilityDuelEnv(
                rng, n_arms=params.get("n_arms", 10),
                utilities=params.get("utilities"),
            ),
            "duel_categories": lambda rng, params: CategoriesDuelEnv(
                rng, n_arms=params.get("n_arms", 5)
            ),
        }
    )
    MAB_LEARNERS.update(
        {
            "si_exp3": lambda k, params, horizon: SiExp3(
                k, schedule=params.get("schedule", "sqrt_t"), horizon=horizon
            ),
            "s_ucb": lambda k, params, horizon: SleepingUcb(k, c=params.get("c", 2.0)),
            "uniform": lambda k, params, horizon: UniformRandom(k),
            "fixed_ordering": lambda k, params, horizon: FixedOrderingPlayer(
                tuple(int(a) - 1 for a in params["order"])
            ),
        }
    )
    DUELING_LEARNERS.update(
        {
            "sp_si_exp3": lambda k, params, horizon: (
                SiExp3(k, schedule=params.get("schedule", "sqrt_t"), horizon=horizon),
                SiExp3(k, schedule=params.get("schedule", "sqrt_t"), horizon=horizon),
            ),
            "sp_ucb": lambda k, params, horizon: (
                SleepingUcb(k, c=params.get("c", 2.0)),
                SleepingUcb(k, c=params.get("c", 2.0)),
            ),
        }
    )


_register_defaults()


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


def _mab_run(config: ExperimentConfig, run_index: int) -> RunResult:
    seed = config.base_seed + run_index
    rng_env = RngStream(seed, 0).generator()
    rng_learner = RngStream(seed, 1).generator()
    env = ENVIRONMENTS[config.environment](rng_env, config.environment_params)
    k = env.n_arms
    learner = MAB_LEARNERS[config.learner](k, config.learner_params, config.horizon)
    ledger = RegretLedger(k)
    ledger.register_comparator("optimal", env.optimal_comparator())
    cadence = config.cadence
    checkpoints: list[int] = []
    series: dict[str, list[float]] = {
        "policy/optimal": [],
        "external/max": [],
        "internal/max": [],
    }
    mass = 0.0
    for t in range(1, config.horizon + 1):
        step = env.step(rng_env)
        arm = learner.decide(step.awake, rng_learner)
        loss = float(step.loss_vector[arm])
        learner.observe(step.awake, arm, loss)
        ledger.record(
            RoundTrace(t=t, availability=step.awake, arm=arm, loss=loss,
                       loss_vector=step.loss_vector, annotation=step.annotation)
        )
        mass += len(step.awake)
        if t % cadence == 0 or t == config.horizon:
            checkpoints.append(t)
            series["policy/optimal"].append(ledger.comparator_regret("optimal"))
            series["external/max"].append(float(ledger.external.max()))
            series["internal/max"].append(float(ledger.internal.max()))
    return RunResult(
        run_index=run_index,
        seed=seed,
        checkpoints=checkpoints,
        series=series,
        env_params=env.params(),
        availability_mass=mass,
        final_external=ledger.external.tolist(),
        final_internal=ledger.internal.tolist(),
        final_learner_loss=ledger.learner_loss,
    )


def _dueling_run(config: ExperimentConfig, run_index: int) -> RunResult:
    seed = config.base_seed + run_index
    rng_env = RngStream(seed, 0).generator()
    rng_left = RngStream(seed, 1).generator()
    rng_right = RngStream(seed, 2).generator()
    env = ENVIRONMENTS[config.environment](rng_env, config.environment_params)
    k = env.n_arms
    left, right = DUELING_LEARNERS[config.learner](k, config.learner_params, config.horizon)
    duel = SparringDuel(left, right, k)
    ledger = SiDbLedger(k)
    cadence = config.cadence
    checkpoints: list[int] = []
    series: dict[str, list[float]] = {"si_db/best_available": []}
    for t in range(1, config.horizon + 1):
        avail, prefs, _ = env.step(rng_env)
        i, j, _ = duel.round(avail, prefs, rng_env, rng_left, rng_right)
        ledger.record(avail, i, j, prefs)
        if t % cadence == 0 or t == config.horizon:
            checkpoints.append(t)
            series["si_db/best_available"].append(ledger.cum_regret)
    return RunResult(
        run_index=run_index,
        seed=seed,
        checkpoints=checkpoints,
        series=series,
        env_params=env.params(),
        final_duel={
            "regret": float(ledger.cum_regret),
            "left_gap": float(ledger.cum_left_gap),
            "right_gap": float(ledger.cum_right_gap),
            "interpretable": ledger.interpretable,
        },
    )


def _run_single(config_dict: dict, run_index: int) -> RunResult:
    config = ExperimentConfig.from_dict(config_dict)
    if config.environment.startswith("duel_"):
        return _dueling_run(config, run_index)
    return _mab_run(config, run_index)


# ---------------------------------------------------------------------------
# aggregation and persistence
# ---------------------------------------------------------------------------


def _format(x: float) -> str:
    return repr(float(x))


def aggregate_rows(results: list[RunResult]) -> list[tuple]:
    """Mean and standard error per checkpoint per series, runs in index order."""
    results = sorted(results, key=lambda r: r.run_index)
    first = results[0]
    keys = sorted(first.series)
    n = len(results)
    for r in results:
        if r.checkpoints != first.checkpoints or sorted(r.series) != keys:
            raise ValueError("runs disagree on checkpoint grid or tracked series")
    rows = []
    for key in keys:
        kind, comp = key.split("/", 1)
        values = np.array([r.series[key] for r in results])  # runs x checkpoints
        means = values.mean(axis=0)
        if n > 1:
            stderr = values.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            stderr = np.zeros(values.shape[1])
        for t, m, s in zip(first.checkpoints, means, stderr):
            rows.append((t, kind, comp, m, s, n))
    return rows


def write_aggregate_csv(path: Path, rows: list[tuple]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,regret_kind,comparator_id,mean,stderr,n_runs\n")
        for t, kind, comp, mean, stderr, n in rows:
            fh.write(f"{t},{kind},{comp},{_format(mean)},{_format(stderr)},{n}\n")


def _write_run_csv(path: Path, result: RunResult) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,regret_kind,comparator_id,value\n")
        for key in sorted(result.series):
            kind, comp = key.split("/", 1)
            for t, v in zip(result.checkpoints, result.series[key]):
                fh.write(f"{t},{kind},{comp},{_format(v)}\n")


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> list[RunResult]:
    """Execute all replicate runs, write artifacts, return the run results.

    On failure a ``PARTIAL_OUTPUT`` marker file is left in the output
    directory before the exception propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "PARTIAL_OUTPUT"
    try:
        cfg_dict = config.to_dict()
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(_run_single, cfg_dict, i) for i in range(config.runs)]
                results = [f.result() for f in futures]
        else:
            results = [_run_single(cfg_dict, i) for i in range(config.runs)]
        results.sort(key=lambda r: r.run_index)
        write_aggregate_csv(out / "aggregate.csv", aggregate_rows(results))
        meta = {
            "config": cfg_dict,
            "config_hash": config.config_hash(),
            "library_version": __version__,
            "note": BASELINE_NOTE,
            "runs": [
                {"run_index": r.run_index, "seed": r.seed, "env_params": r.env_params}
                for r in results
            ],
        }
        with open(out / "meta.json", "w", newline="\n") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
            fh.write("\n")
        if config.save_runs:
            with open(out / "runs.json", "w", newline="\n") as fh:
                json.dump({"runs": [r.to_dict() for r in results]}, fh, sort_keys=True)
                fh.write("\n")
        if config.save_per_run_csv:
            for r in results:
                _write_run_csv(out / f"run_{r.run_index}.csv", r)
        if marker.exists():
            marker.unlink()
        return results
    except Exception:
        try:
            marker.write_text("experiment aborted before all artifacts were written\n")
        except OSError:
            pass
        raise


def replay(out_dir: str | Path) -> Path:
    """Rebuild ``aggregate.csv`` from the stored per-run results."""
    out = Path(out_dir)
    store = out / "runs.json"
    with open(store) as fh:
        payload = json.load(fh)
    results = [RunResult.from_dict(d) for d in payload["runs"]]
    if not results:
        raise ValueError("runs.json contains no runs")
    path = out / "aggregate.csv"
    write_aggregate_csv(path, aggregate_rows(results))
    return path


def registry_listing() -> dict[str, list[str]]:
    return {
        "environments": sorted(ENVIRONMENTS),
        "mab_learners": sorted(MAB_LEARNERS),
        "dueling_learners": sorted(DUELING_LEARNERS),
    }
