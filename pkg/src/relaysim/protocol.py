"""One full training round: bidding through settlement.

A round walks eleven steps over the shared state: (1) deposit bidding,
(2) escrowed contracts, (3) the deposit block, (4) model transmission,
(5) training with a per-trainer success probability, (6-7) digest
broadcast and the encryption block with a fresh keypair, (8-9) model
encryption and the testing block with published cases, (10) output
computation, and (11) the settlement block: verification, ranking,
deposit return or forfeit, the citation cascade up each winner's
lineage, and minted miner rewards.

Money rules: deposits are escrowed (debited on contract creation,
credited back only on return); forfeited deposits are destroyed; all
reward coins (citation plus miner) are minted by the protocol.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Sequence

from . import auction, chain as chainmod, crypto
from .serialize import digest as canonical_digest

POOL_MINER = "miner"
POOL_TRAINING = "training"

CONTRACT_ACTIVE = "Active"
CONTRACT_RETURNED = "Returned"
CONTRACT_FORFEITED = "Forfeited"

GENESIS_VERSION = 1


class ProtocolError(ValueError):
    """Base class for round-engine errors."""


class PoolSizeMismatch(ProtocolError):
    """Participant counts cannot fill the configured pools."""


class UnknownContract(ProtocolError):
    """Settlement referenced a contract that was never created."""


class ContractStateError(ProtocolError):
    """Deposit contracts only transition Active -> Returned / Forfeited."""


class LineageError(ProtocolError):
    """Lineage edges must be unique and point to strictly older versions."""


@dataclass
class Participant:
    id: str
    coins: float = 0.0
    model_version: int = 0
    model: crypto.ModelWeights | None = None
    pool: str = POOL_TRAINING
    last_round_rank: int | None = None


@dataclass
class DepositContract:
    mo_id: str
    trainer_id: str
    mo_amount: float
    t_amount: float
    round: int
    status: str = CONTRACT_ACTIVE

    def mark(self, new_status: str) -> None:
        if self.status != CONTRACT_ACTIVE:
            raise ContractStateError(
                f"contract {self.mo_id}/{self.trainer_id} already {self.status}"
            )
        if new_status not in (CONTRACT_RETURNED, CONTRACT_FORFEITED):
            raise ContractStateError(f"invalid contract status {new_status!r}")
        self.status = new_status


@dataclass
class Lineage:
    """Parent pointers per trained model, rooted at the genesis initiator."""

    genesis_id: str
    parents: dict[tuple[str, int], str] = field(default_factory=dict)

    def record(self, owner_id: str, version: int, parent_id: str) -> None:
        key = (owner_id, version)
        if key in self.parents:
            raise LineageError(f"model {key} already has a parent")
        if version <= GENESIS_VERSION:
            raise LineageError(f"trained model version must exceed {GENESIS_VERSION}")
        self.parents[key] = parent_id

    def ancestors(self, owner_id: str, version: int) -> list[str]:
        """All predecessor owners from the direct parent back to genesis."""
        result = []
        key = (owner_id, version)
        while key in self.parents:
            parent = self.parents[key]
            result.append(parent)
            key = (parent, key[1] - 1)
        return result


@dataclass(frozen=True)
class RoleAssignment:
    mos: tuple[str, ...]          # ranked best-first
    miners: tuple[str, ...]
    candidates: tuple[str, ...]


@dataclass(frozen=True)
class Transfer:
    """One signed balance change; positive credits, negative debits."""

    participant_id: str
    amount: float
    reason: str


@dataclass(frozen=True)
class TrainingOutcome:
    trainer_id: str
    mo_id: str
    received_version: int
    success: bool
    new_version: int | None


@dataclass
class RoundLog:
    round: int
    assignment: RoleAssignment
    matches: auction.MatchResult
    contracts: list[DepositContract]
    block_digests: dict[str, str]
    miners: dict[str, str]
    training: list[TrainingOutcome]
    verified: list[chainmod.VerifiedRecord]
    top_set: list[str]
    transfers: list[Transfer]
    minted: float
    forfeited: float
    citation_coins: float

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps({
            "round": self.round,
            "mos": list(self.assignment.mos),
            "miner_pool_size": len(self.assignment.miners),
            "candidate_count": len(self.assignment.candidates),
            "matches": [
                {"mo_id": p.mo_id, "trainer_id": p.trainer_id,
                 "mo_deposit": p.mo_deposit, "t_deposit": p.t_deposit}
                for p in self.matches.pairs
            ],
            "contracts": [
                {"mo_id": c.mo_id, "trainer_id": c.trainer_id,
                 "mo_amount": c.mo_amount, "t_amount": c.t_amount,
                 "status": c.status}
                for c in self.contracts
            ],
            "block_digests": self.block_digests,
            "miners": self.miners,
            "training": [
                {"trainer_id": t.trainer_id, "mo_id": t.mo_id,
                 "received_version": t.received_version,
                 "success": t.success, "new_version": t.new_version}
                for t in self.training
            ],
            "verified": [
                {"prev_owner_id": v.prev_owner_id, "trainer_id": v.trainer_id,
                 "performance": v.performance}
                for v in self.verified
            ],
            "top_set": self.top_set,
            "transfers": [
                {"participant_id": t.participant_id, "amount": t.amount,
                 "reason": t.reason}
                for t in self.transfers
            ],
            "minted": self.minted,
            "forfeited": self.forfeited,
            "citation_coins": self.citation_coins,
        }, indent=indent)


@dataclass
class SimState:
    participants: dict[str, Participant]
    chain: chainmod.Chain
    lineage: Lineage
    genesis_id: str
    round_index: int = 0
    prev_top: list[str] = field(default_factory=list)
    prev_mos: list[str] = field(default_factory=list)
    target_model: crypto.ModelWeights | None = None

    def head_version(self) -> int:
        return max(p.model_version for p in self.participants.values())

    def balances(self) -> dict[str, float]:
        return {pid: p.coins for pid, p in self.participants.items()}


def participant_ids(count: int) -> list[str]:
    width = max(3, len(str(max(count - 1, 0))))
    return [f"p{i:0{width}d}" for i in range(count)]


def init_state(config, rng: random.Random) -> SimState:
    """Fresh state: all balances zero, genesis model held by the initiator."""
    ids = participant_ids(config.q_total_participants)
    participants = {pid: Participant(id=pid) for pid in ids}
    genesis_id = ids[0]
    target = None
    if config.mode == "concrete":
        dim = config.model_dim
        target = crypto.ModelWeights(
            version=0,
            weights=tuple(rng.uniform(-1.0, 1.0) for _ in range(dim + 1)),
        )
        genesis_weights = tuple(rng.uniform(-1.0, 1.0) for _ in range(dim + 1))
        participants[genesis_id].model = crypto.ModelWeights(
            version=GENESIS_VERSION, weights=genesis_weights
        )
    participants[genesis_id].model_version = GENESIS_VERSION
    return SimState(
        participants=participants,
        chain=chainmod.new_chain(),
        lineage=Lineage(genesis_id=genesis_id),
        genesis_id=genesis_id,
        target_model=target,
    )


def allocate_roles(state: SimState, config, rng: random.Random) -> RoleAssignment:
    """Per-round role split: pinned MOs, then a fresh miner/candidate draw.

    Round one has exactly the genesis initiator as sole MO; afterwards
    the MOs are the previous round's top-ranked trainers. A round with
    no previous winners retains the best previous MO so the chain never
    loses all model owners.
    """
    if len(state.participants) != config.q_total_participants:
        raise PoolSizeMismatch(
            f"state has {len(state.participants)} participants, config says "
            f"{config.q_total_participants}"
        )
    if state.round_index == 0:
        mos = [state.genesis_id]
    elif state.prev_top:
        mos = list(state.prev_top)
    else:
        mos = [state.prev_mos[0]]
    mo_set = set(mos)
    others = [pid for pid in state.participants if pid not in mo_set]
    if len(others) < config.q_miners:
        raise PoolSizeMismatch(
            f"{len(others)} non-MO participants cannot fill {config.q_miners} miner slots"
        )
    shuffled = list(others)
    rng.shuffle(shuffled)
    miners = shuffled[:config.q_miners]
    candidates = shuffled[config.q_miners:]
    for pid, participant in state.participants.items():
        participant.pool = POOL_MINER if pid in set(miners) else POOL_TRAINING
    return RoleAssignment(tuple(mos), tuple(miners), tuple(candidates))


def rank_and_select(
    verified: Sequence[chainmod.VerifiedRecord], s: float
) -> list[str]:
    """Best performers first: floor(s * verified), clamped to at least one."""
    if not verified:
        return []
    ranked = sorted(verified, key=lambda r: (r.performance, r.trainer_id))
    count = max(1, int(s * len(verified)))
    return [r.trainer_id for r in ranked[:count]]


@dataclass(frozen=True)
class Submission:
    """Everything the settlement miner sees for one trained model."""

    mo_id: str
    trainer_id: str
    committed_digest: bytes
    ciphertext: crypto.Ciphertext
    claimed_outputs: tuple[crypto.Vector, ...]


def collect_verified(
    submissions: Sequence[Submission],
    pk: bytes,
    testing_inputs: Sequence[Sequence[float]],
    testing_truths: Sequence[Sequence[float]],
) -> list[chainmod.VerifiedRecord]:
    """Settlement-side filter: only submissions passing both verification
    parts enter the verified list (and thus become eligible for the top set)."""
    verified = []
    for sub in submissions:
        verdict = crypto.verify_submission(
            sub.committed_digest, sub.ciphertext, sub.claimed_outputs,
            pk, testing_inputs,
        )
        if not verdict.accepted:
            continue
        perf = crypto.performance_index(sub.claimed_outputs, testing_truths)
        verified.append(chainmod.VerifiedRecord(sub.mo_id, sub.trainer_id, perf))
    return verified


def _abstract_model_digest(owner_id: str, version: int) -> bytes:
    return canonical_digest(["abstract-model", owner_id, version])


def _abstract_enc_digest(owner_id: str, version: int) -> bytes:
    return canonical_digest(["abstract-encrypted-model", owner_id, version])


def _debit(p: Participant, amount: float, reason: str, transfers: list[Transfer]) -> None:
    if amount == 0.0:
        return
    if amount > p.coins + 1e-9:
        raise ProtocolError(
            f"{p.id} cannot escrow {amount} with balance {p.coins}"
        )
    p.coins = max(0.0, p.coins - amount)
    transfers.append(Transfer(p.id, -amount, reason))


def _credit(p: Participant, amount: float, reason: str, transfers: list[Transfer]) -> None:
    if amount == 0.0:
        return
    p.coins += amount
    transfers.append(Transfer(p.id, amount, reason))


def settle(
    participants: dict[str, Participant],
    top_set: Sequence[str],
    contracts: Sequence[DepositContract],
    lineage: Lineage,
    params,
    miners: dict[str, str],
    reward_counts: dict[str, int],
) -> tuple[list[Transfer], float, float, float]:
    """Deposit return/forfeit, citation cascade, and minted miner rewards.

    Returns (transfers, minted, forfeited, citation coins). Citation
    credits are aggregated per ancestor into one transfer each.
    """
    transfers: list[Transfer] = []
    top = set(top_set)
    by_trainer = {c.trainer_id: c for c in contracts}
    for trainer_id in top_set:
        if trainer_id not in by_trainer:
            raise UnknownContract(f"no contract for top-set trainer {trainer_id}")
    forfeited = 0.0
    for contract in contracts:
        if contract.trainer_id in top:
            contract.mark(CONTRACT_RETURNED)
            _credit(participants[contract.mo_id], contract.mo_amount,
                    "deposit_return_mo", transfers)
            _credit(participants[contract.trainer_id], contract.t_amount,
                    "deposit_return_t", transfers)
        else:
            contract.mark(CONTRACT_FORFEITED)
            forfeited += contract.mo_amount + contract.t_amount
    citation_totals: dict[str, float] = {}
    for trainer_id in top_set:
        version = participants[trainer_id].model_version
        for ancestor in lineage.ancestors(trainer_id, version):
            citation_totals[ancestor] = (
                citation_totals.get(ancestor, 0.0) + params.coin_unit
            )
    citation_coins = 0.0
    for ancestor_id, amount in citation_totals.items():
        _credit(participants[ancestor_id], amount, "citation", transfers)
        citation_coins += amount
    miner_rewards = {
        "DB": reward_counts["contracts"] * params.r_deposit,
        "EB": reward_counts["eb_records"] * params.r_hash_m,
        "TB": (reward_counts["enc_digests"] * params.r_encrypted_m
               + reward_counts["cases"] * params.r_case),
        "SB": (reward_counts["verified"] * params.r_verified_m
               + reward_counts["verified"] * reward_counts["cases"] * params.r_verify),
    }
    minted = citation_coins
    for kind, amount in miner_rewards.items():
        _credit(participants[miners[kind]], amount, f"miner_reward_{kind.lower()}",
                transfers)
        minted += amount
    return transfers, minted, forfeited, citation_coins


def _draw_miner(pool: list[str], rng: random.Random, distinct: bool) -> str:
    winner = chainmod.mine_winner(pool, rng)
    if distinct and len(pool) > 1:
        pool.remove(winner)
    return winner


def run_round(
    state: SimState, params, config, rng: random.Random
) -> tuple[SimState, RoundLog]:
    """Execute one complete round, mutating and returning the state."""
    round_index = state.round_index + 1
    assignment = allocate_roles(state, config, rng)
    participants = state.participants
    v_latest = state.head_version()

    # (1) bidding and matching
    mo_deposits = {
        mo: auction.mo_deposit_per_trainer(
            config.budget_mo, participants[mo].coins, config.q_selection_limit
        )
        for mo in assignment.mos
    }
    bids = [
        auction.Bid(pid, auction.trainer_bid(
            participants[pid].coins, v_latest, participants[pid].model_version
        ))
        for pid in assignment.candidates
    ]
    if config.second_price_deposits:
        pairs: list[auction.MatchPair] = []
        remaining = sorted(bids, key=lambda b: (-b.amount, b.trainer_id))
        for mo in assignment.mos:
            if not remaining:
                break
            # Affordability is baked into the per-trainer deposit, so the
            # owner's capacity is exactly the selection limit.
            selection = auction.select_trainers(
                remaining, b_mo=1.0, budget=float(config.q_selection_limit)
            )
            taken = set(selection.selected)
            pairs.extend(
                auction.MatchPair(mo, t, mo_deposits[mo], d)
                for t, d in zip(selection.selected, selection.deposits)
            )
            remaining = [b for b in remaining if b.trainer_id not in taken]
        matches = auction.MatchResult(
            tuple(pairs), tuple(b.trainer_id for b in remaining)
        )
    else:
        matches = auction.match_round(
            list(assignment.mos), bids, config.q_selection_limit, mo_deposits
        )

    # (2) contracts with escrow
    transfers: list[Transfer] = []
    contracts = []
    for pair in matches.pairs:
        contract = DepositContract(
            mo_id=pair.mo_id, trainer_id=pair.trainer_id,
            mo_amount=pair.mo_deposit, t_amount=pair.t_deposit,
            round=round_index,
        )
        _debit(participants[pair.mo_id], pair.mo_deposit, "deposit_escrow_mo", transfers)
        _debit(participants[pair.trainer_id], pair.t_deposit, "deposit_escrow_t", transfers)
        contracts.append(contract)

    miner_pool = list(assignment.miners)
    miners: dict[str, str] = {}
    block_digests: dict[str, str] = {}

    def mine(kind: str, payload: chainmod.Payload) -> None:
        tip = state.chain.tip
        header = chainmod.BlockHeader(
            height=tip.header.height + 1,
            round=round_index,
            kind=kind,
            prev_digest=chainmod.block_digest(tip),
            nonce=rng.getrandbits(64),
            timestamp=tip.header.timestamp + 1,
        )
        block = chainmod.Block(header, payload)
        chainmod.append_block(state.chain, block)
        block_digests[kind] = chainmod.block_digest(block).hex()

    # (3) deposit block
    miners["DB"] = _draw_miner(miner_pool, rng, config.distinct_miners_per_round)
    mine("DB", chainmod.DepositPayload(
        contracts=tuple(
            chainmod.ContractRecord(c.mo_id, c.trainer_id, c.mo_amount, c.t_amount)
            for c in contracts
        ),
        coinbase=chainmod.Coinbase(miners["DB"], len(contracts) * params.r_deposit),
    ))

    # (4) model transmission: possession updates before training; an equal
    # version still replaces the weights, since training continues from the
    # received model
    received: dict[str, int] = {}
    for pair in matches.pairs:
        mo = participants[pair.mo_id]
        trainer = participants[pair.trainer_id]
        received[pair.trainer_id] = mo.model_version
        if mo.model_version >= trainer.model_version:
            trainer.model_version = mo.model_version
            trainer.model = mo.model

    # (5) training
    outcomes: list[TrainingOutcome] = []
    new_digests: dict[str, bytes] = {}
    prev_digests: dict[str, bytes] = {}
    for pair in matches.pairs:
        trainer = participants[pair.trainer_id]
        mo = participants[pair.mo_id]
        success = rng.random() < config.pr_training
        v_rec = received[pair.trainer_id]
        new_version = None
        if success:
            new_version = v_rec + 1
            if config.mode == "concrete":
                # per-trainer jitter stays below the configured rate, so any
                # rate in (0, 1) remains a valid contraction
                rate = config.training_rate * (0.5 + 0.5 * rng.random())
                trained = crypto.train_toward(
                    trainer.model, state.target_model, rate, pair.mo_id
                )
                trainer.model = trained
                trainer.model_version = trained.version
                new_digests[pair.trainer_id] = crypto.model_digest(trained)
                prev_digests[pair.trainer_id] = crypto.model_digest(mo.model)
            else:
                trainer.model_version = new_version
                new_digests[pair.trainer_id] = _abstract_model_digest(
                    pair.trainer_id, new_version
                )
                prev_digests[pair.trainer_id] = _abstract_model_digest(
                    pair.mo_id, v_rec
                )
            state.lineage.record(pair.trainer_id, new_version, pair.mo_id)
        outcomes.append(TrainingOutcome(
            pair.trainer_id, pair.mo_id, v_rec, success, new_version
        ))

    # (6-7) digest broadcast, key generation, encryption block
    keypair = crypto.fhe_keygen(rng)
    miners["EB"] = _draw_miner(miner_pool, rng, config.distinct_miners_per_round)
    eb_records = tuple(
        chainmod.TrainingRecord(o.mo_id, o.trainer_id, new_digests[o.trainer_id])
        for o in outcomes
        if o.success and new_digests[o.trainer_id] != prev_digests[o.trainer_id]
    )
    mine("EB", chainmod.EncryptionPayload(pk=keypair.pk, records=eb_records))

    # (8-9) encryption and the testing block
    ciphertexts: dict[str, crypto.Ciphertext] = {}
    enc_digests = []
    for record in eb_records:
        trainer = participants[record.trainer_id]
        if config.mode == "concrete":
            ct = crypto.fhe_encrypt(keypair.pk, trainer.model)
            ciphertexts[record.trainer_id] = ct
            enc_digests.append(chainmod.EncryptedModelDigest(
                record.trainer_id, crypto.ciphertext_digest(ct)
            ))
        else:
            enc_digests.append(chainmod.EncryptedModelDigest(
                record.trainer_id,
                _abstract_enc_digest(record.trainer_id, trainer.model_version),
            ))
    miners["TB"] = _draw_miner(miner_pool, rng, config.distinct_miners_per_round)
    if config.mode == "concrete":
        dim = state.target_model.input_dim
        testing_inputs = tuple(
            tuple(rng.uniform(-1.0, 1.0) for _ in range(dim))
            for _ in range(config.q_cases)
        )
        testing_truths = tuple(
            crypto.evaluate(state.target_model, x) for x in testing_inputs
        )
    else:
        testing_inputs = tuple((rng.random(),) for _ in range(config.q_cases))
        testing_truths = tuple((rng.random(),) for _ in range(config.q_cases))
    mine("TB", chainmod.TestingPayload(
        encrypted_model_digests=tuple(enc_digests),
        testing_inputs=testing_inputs,
        testing_truths=testing_truths,
    ))

    # (10) trainers compute and broadcast outputs
    claimed: dict[str, list[crypto.Vector]] = {}
    if config.mode == "concrete":
        for record in eb_records:
            model = participants[record.trainer_id].model
            claimed[record.trainer_id] = [
                crypto.evaluate(model, x) for x in testing_inputs
            ]

    # (11) settlement block: verify, rank, settle
    miners["SB"] = _draw_miner(miner_pool, rng, config.distinct_miners_per_round)
    committed = {d.trainer_id: d.digest for d in enc_digests}
    if config.mode == "concrete":
        submissions = [
            Submission(
                record.prev_owner_id, record.trainer_id,
                committed[record.trainer_id],
                ciphertexts[record.trainer_id],
                tuple(claimed[record.trainer_id]),
            )
            for record in eb_records
        ]
        verified = collect_verified(
            submissions, keypair.pk, testing_inputs, testing_truths
        )
    else:
        verified = [
            chainmod.VerifiedRecord(record.prev_owner_id, record.trainer_id, rng.random())
            for record in eb_records
        ]
    top_set = rank_and_select(verified, config.s)
    mine("SB", chainmod.SettlementPayload(
        verified=tuple(verified), top_set=tuple(top_set)
    ))

    settle_transfers, minted, forfeited, citation_coins = settle(
        participants, top_set, contracts, state.lineage, params, miners,
        reward_counts={
            "contracts": len(contracts),
            "eb_records": len(eb_records),
            "enc_digests": len(enc_digests),
            "cases": config.q_cases,
            "verified": len(verified),
        },
    )
    transfers.extend(settle_transfers)

    # EBM in-kind reward: a copy of the round's best verified model
    if top_set:
        best = participants[top_set[0]]
        ebm = participants[miners["EB"]]
        if best.model_version > ebm.model_version:
            ebm.model_version = best.model_version
            if config.mode == "concrete":
                ebm.model = best.model

    for rank, trainer_id in enumerate(top_set):
        participants[trainer_id].last_round_rank = rank

    state.prev_top = list(top_set)
    state.prev_mos = list(assignment.mos)
    state.round_index = round_index

    log = RoundLog(
        round=round_index,
        assignment=assignment,
        matches=matches,
        contracts=contracts,
        block_digests=block_digests,
        miners=miners,
        training=outcomes,
        verified=verified,
        top_set=list(top_set),
        transfers=transfers,
        minted=minted,
        forfeited=forfeited,
        citation_coins=citation_coins,
    )
    return state, log
