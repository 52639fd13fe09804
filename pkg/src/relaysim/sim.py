"""Multi-round simulation, metrics collection, and result analysis.

The default configuration matches the reference parameter set: 256
participants (128 miners per round, 128 owners-and-trainers), owner
budget 0.001 coins, training success probability 0.9, 100 testing
cases, selection rate 0.5, and a 0.001-coin base for all six miner
reward rates.

Two closed forms anchor the analyses. Citation coins of a participant
at its x-th upload in the round-robin setting equal x(x-1)q/2, so
cumulative income accelerates. The matched-trainer count obeys
N' = Q - s*N once owner capacity stops binding, converging to
Q / (1 + s).
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import protocol
from .economics import EconomicParams

BUCKET_LABELS = tuple(
    ["latest"] + [f"latest-{k}" for k in range(1, 10)] + ["older", "none"]
)


class SimError(ValueError):
    """Base class for simulation configuration and analysis errors."""


class InvalidSimConfig(SimError):
    """A configuration field violates its invariant."""


class InsufficientData(SimError):
    """The analysis needs more executed rounds."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; defaults reproduce the reference setting."""

    q_total_participants: int = 256
    q_miners: int = 128
    q_mo_and_t: int = 128
    q_selection_limit: int = 4
    budget_mo: float = 0.001
    pr_training: float = 0.9
    q_cases: int = 100
    s: float = 0.5
    reward_base: float = 0.001
    coin_unit: float = 1.0
    rounds: int = 200
    seed: int = 0
    mode: str = "abstract"
    # Engine toggles: deposit rule for matched trainers, whether the four
    # block winners of a round must be distinct, the round-robin oracle
    # variant, and concrete-mode model shape.
    second_price_deposits: bool = False
    distinct_miners_per_round: bool = True
    round_robin_variant: bool = False
    model_dim: int = 4
    training_rate: float = 0.25

    def __post_init__(self) -> None:
        if self.q_total_participants != self.q_miners + self.q_mo_and_t:
            raise InvalidSimConfig(
                f"q_total_participants ({self.q_total_participants}) must equal "
                f"q_miners + q_mo_and_t ({self.q_miners} + {self.q_mo_and_t})"
            )
        if not 0.0 < self.s < 1.0:
            raise InvalidSimConfig(f"s must be in (0, 1), got {self.s}")
        if not 0.0 <= self.pr_training <= 1.0:
            raise InvalidSimConfig(
                f"pr_training must be in [0, 1], got {self.pr_training}"
            )
        if self.q_selection_limit < 1:
            raise InvalidSimConfig("q_selection_limit must be >= 1")
        if self.q_cases < 1:
            raise InvalidSimConfig("q_cases must be >= 1")
        if self.rounds < 0:
            raise InvalidSimConfig("rounds must be >= 0")
        if self.budget_mo < 0 or self.reward_base < 0 or self.coin_unit < 0:
            raise InvalidSimConfig("budget_mo, reward_base, coin_unit must be >= 0")
        if self.mode not in ("abstract", "concrete"):
            raise InvalidSimConfig(f"mode must be abstract or concrete, got {self.mode!r}")
        if self.q_total_participants < 1:
            raise InvalidSimConfig("q_total_participants must be >= 1")
        if self.model_dim < 1:
            raise InvalidSimConfig("model_dim must be >= 1")
        if not 0.0 < self.training_rate < 1.0:
            raise InvalidSimConfig("training_rate must be in (0, 1)")


def params_for_simulation(config: SimConfig) -> EconomicParams:
    """Economic parameters the round engine settles with: the flat reward
    base on all six miner rates and the configured coin unit."""
    return EconomicParams(
        s=config.s,
        coin_unit=config.coin_unit,
        q_selected=config.q_selection_limit,
        q_cases=config.q_cases,
        r_cited=config.coin_unit,
        r_deposit=config.reward_base,
        r_hash_m=config.reward_base,
        r_encrypted_m=config.reward_base,
        r_case=config.reward_base,
        r_verified_m=config.reward_base,
        r_verify=config.reward_base,
    )


@dataclass(frozen=True)
class UploadRecord:
    """One upload event in the round-robin variant."""

    round: int
    participant_id: str
    upload_index: int
    cumulative_citation_coins: float


@dataclass
class Metrics:
    """Per-round time series captured after each settlement."""

    participant_ids: list[str]
    coins: list[list[float]] = field(default_factory=list)
    versions: list[list[int]] = field(default_factory=list)
    trainer_count: list[int] = field(default_factory=list)
    mo_count: list[int] = field(default_factory=list)
    success_count: list[int] = field(default_factory=list)
    minted_cumulative: list[float] = field(default_factory=list)
    forfeited_cumulative: list[float] = field(default_factory=list)
    citation_cumulative: list[float] = field(default_factory=list)
    uploads: list[UploadRecord] | None = None

    @property
    def rounds(self) -> int:
        return len(self.coins)

    def to_csv(self) -> str:
        """Plot-ready rows: (round, participant_id, coins, model_version)."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["round", "participant_id", "coins", "model_version"])
        for round_index in range(self.rounds):
            for i, pid in enumerate(self.participant_ids):
                writer.writerow([
                    round_index + 1, pid,
                    repr(self.coins[round_index][i]),
                    self.versions[round_index][i],
                ])
        return buffer.getvalue()


def version_buckets(versions: Sequence[int]) -> dict[str, int]:
    """Partition holders into latest / latest-1..9 / older / none."""
    counts = {label: 0 for label in BUCKET_LABELS}
    head = max(versions) if versions else 0
    for v in versions:
        if v == 0:
            counts["none"] += 1
        else:
            gap = head - v
            if gap == 0:
                counts["latest"] += 1
            elif gap <= 9:
                counts[f"latest-{gap}"] += 1
            else:
                counts["older"] += 1
    return counts


def bucket_shares(versions: Sequence[int]) -> dict[str, float]:
    counts = version_buckets(versions)
    total = len(versions)
    return {label: counts[label] / total for label in BUCKET_LABELS}


@dataclass
class SimRun:
    """A completed simulation: final state, metrics, and per-round logs."""

    config: SimConfig
    state: protocol.SimState | None
    metrics: Metrics
    logs: list[protocol.RoundLog]


def simulate_run(config: SimConfig) -> SimRun:
    """Run the configured number of rounds; deterministic per seed."""
    if config.round_robin_variant:
        metrics = run_round_robin(
            config.q_total_participants, config.rounds, config.coin_unit
        )
        return SimRun(config, None, metrics, [])
    rng = random.Random(config.seed)
    state = protocol.init_state(config, rng)
    params = params_for_simulation(config)
    metrics = Metrics(participant_ids=list(state.participants))
    logs: list[protocol.RoundLog] = []
    minted = forfeited = citations = 0.0
    for _ in range(config.rounds):
        state, log = protocol.run_round(state, params, config, rng)
        logs.append(log)
        minted += log.minted
        forfeited += log.forfeited
        citations += log.citation_coins
        metrics.coins.append([p.coins for p in state.participants.values()])
        metrics.versions.append([p.model_version for p in state.participants.values()])
        metrics.trainer_count.append(len(log.matches.pairs))
        metrics.mo_count.append(len(log.assignment.mos))
        metrics.success_count.append(sum(1 for t in log.training if t.success))
        metrics.minted_cumulative.append(minted)
        metrics.forfeited_cumulative.append(forfeited)
        metrics.citation_cumulative.append(citations)
    return SimRun(config, state, metrics, logs)


def run_simulation(config: SimConfig) -> Metrics:
    return simulate_run(config).metrics


def run_round_robin(
    q_participants: int, rounds: int, coin_unit: float = 1.0
) -> Metrics:
    """Deterministic single-lineage variant: one upload per round.

    Participants take turns extending one model lineage; every upload
    succeeds and pays one coin unit to each prior owner in the lineage.
    Cumulative citation coins then follow the x(x-1)q/2 closed form at
    each participant's x-th upload.
    """
    if q_participants < 1:
        raise SimError("q_participants must be >= 1")
    ids = protocol.participant_ids(q_participants)
    coins = [0.0] * q_participants
    upload_counts = [0] * q_participants
    lineage_owners: list[int] = []
    metrics = Metrics(participant_ids=ids, uploads=[])
    citations = 0.0
    for round_index in range(1, rounds + 1):
        uploader = (round_index - 1) % q_participants
        for owner in lineage_owners:
            coins[owner] += coin_unit
            citations += coin_unit
        lineage_owners.append(uploader)
        upload_counts[uploader] += 1
        metrics.uploads.append(UploadRecord(
            round=round_index,
            participant_id=ids[uploader],
            upload_index=upload_counts[uploader],
            cumulative_citation_coins=coins[uploader],
        ))
        metrics.coins.append(list(coins))
        metrics.versions.append(list(upload_counts))
        metrics.trainer_count.append(1)
        metrics.mo_count.append(1 if lineage_owners else 0)
        metrics.success_count.append(1)
        metrics.minted_cumulative.append(citations)
        metrics.forfeited_cumulative.append(0.0)
        metrics.citation_cumulative.append(citations)
    return metrics


def closed_form_coins(x: int, q: int) -> float:
    """Cumulative citation coins at the x-th round-robin upload: x(x-1)q/2."""
    if x < 1 or q < 1:
        raise SimError(f"upload index and participant count must be >= 1, got {x}, {q}")
    return x * (x - 1) * q / 2.0


def trainer_fixed_point(q_mo_and_t: int, s: float) -> float:
    """Stable matched-trainer count once capacity stops binding: Q/(1+s)."""
    if not 0.0 <= s < 1.0:
        raise SimError(f"s must be in [0, 1), got {s}")
    return q_mo_and_t / (1.0 + s)


@dataclass(frozen=True)
class SustainabilityReport:
    mean_second_difference: float
    accelerating: bool
    per_participant_quadratic_coeff: float
    closed_form_exact: bool | None

    def to_dict(self) -> dict:
        return {
            "mean_second_difference": self.mean_second_difference,
            "accelerating": self.accelerating,
            "per_participant_quadratic_coeff": self.per_participant_quadratic_coeff,
            "closed_form_exact": self.closed_form_exact,
        }


def analyze_sustainability(metrics: Metrics) -> SustainabilityReport:
    """Does citation income accelerate over rounds?

    Computes the mean second difference of cumulative citation coins
    over the last half of the run (positive means accelerating), fits a
    quadratic to each participant's cumulative-coin curve, and, for
    round-robin variant metrics, checks the closed form exactly at
    every upload.
    """
    n = metrics.rounds
    if n < 20:
        raise InsufficientData(f"need >= 20 rounds, got {n}")
    series = np.asarray(metrics.citation_cumulative, dtype=float)
    second = np.diff(series, n=2)
    tail = second[len(second) // 2:]
    mean_second = float(tail.mean())
    coins = np.asarray(metrics.coins, dtype=float)
    rounds_axis = np.arange(1, n + 1, dtype=float)
    quad_coeffs = np.polyfit(rounds_axis, coins, deg=2)[0]
    closed_form_exact = None
    if metrics.uploads is not None:
        q = len(metrics.participant_ids)
        closed_form_exact = all(
            u.cumulative_citation_coins == closed_form_coins(u.upload_index, q)
            for u in metrics.uploads
        )
    return SustainabilityReport(
        mean_second_difference=mean_second,
        accelerating=mean_second > 0.0,
        per_participant_quadratic_coeff=float(np.mean(quad_coeffs)),
        closed_form_exact=closed_form_exact,
    )


@dataclass(frozen=True)
class AccessibilityReport:
    fixed_point: float
    mean_trainer_count: float
    relative_deviation: float
    converged: bool
    bucket_shares_last: dict[str, float]
    bucket_share_series: list[dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "fixed_point": self.fixed_point,
            "mean_trainer_count": self.mean_trainer_count,
            "relative_deviation": self.relative_deviation,
            "converged": self.converged,
            "bucket_shares_last": self.bucket_shares_last,
        }


def analyze_accessibility(
    metrics: Metrics, config: SimConfig, band: float = 0.10
) -> AccessibilityReport:
    """Does the trainer count stabilize and do models spread to everyone?

    Reports the mean matched-trainer count over the last quartile
    against the Q/(1+s) fixed point (converged when within ``band``)
    and the per-round shares of participants holding each of the latest
    ten versions, an older one, or none.
    """
    n = metrics.rounds
    if n < 50:
        raise InsufficientData(f"need >= 50 rounds, got {n}")
    fixed = trainer_fixed_point(config.q_mo_and_t, config.s)
    tail = metrics.trainer_count[-(n // 4):]
    mean_count = float(np.mean(tail))
    deviation = abs(mean_count - fixed) / fixed if fixed > 0 else float("inf")
    shares = [bucket_shares(v) for v in metrics.versions]
    return AccessibilityReport(
        fixed_point=fixed,
        mean_trainer_count=mean_count,
        relative_deviation=deviation,
        converged=deviation <= band,
        bucket_shares_last=shares[-1],
        bucket_share_series=shares,
    )


def summary_json(run: SimRun, indent: int | None = 2) -> str:
    """Condensed run summary with both analyses (when enough rounds ran)."""
    payload: dict = {
        "rounds": run.metrics.rounds,
        "participants": len(run.metrics.participant_ids),
        "seed": run.config.seed,
        "mode": run.config.mode,
        "trainer_counts": run.metrics.trainer_count,
        "mo_counts": run.metrics.mo_count,
        "minted_total": run.metrics.minted_cumulative[-1] if run.metrics.rounds else 0.0,
        "forfeited_total": run.metrics.forfeited_cumulative[-1] if run.metrics.rounds else 0.0,
    }
    try:
        payload["sustainability"] = analyze_sustainability(run.metrics).to_dict()
    except InsufficientData:
        payload["sustainability"] = None
    try:
        payload["accessibility"] = analyze_accessibility(run.metrics, run.config).to_dict()
    except InsufficientData:
        payload["accessibility"] = None
    return json.dumps(payload, indent=indent)


_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind in ("bool", bool):
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise InvalidSimConfig(f"{name}: cannot parse {raw!r} as a boolean")
    if kind in ("int", int):
        try:
            return int(raw)
        except ValueError as exc:
            raise InvalidSimConfig(f"{name}: cannot parse {raw!r} as an integer") from exc
    if kind in ("float", float):
        try:
            return float(raw)
        except ValueError as exc:
            raise InvalidSimConfig(f"{name}: cannot parse {raw!r} as a number") from exc
    return raw.strip()


def config_from_mapping(mapping: dict[str, str], base: SimConfig | None = None) -> SimConfig:
    """Layer string key=value pairs over ``base`` (defaults when omitted)."""
    current = base if base is not None else SimConfig()
    kwargs = {}
    for key, raw in mapping.items():
        if key not in _FIELD_TYPES:
            raise InvalidSimConfig(f"unknown simulation parameter {key!r}")
        kwargs[key] = _coerce(key, raw)
    return replace(current, **kwargs)
