"""Four-stage block chain: deposit, encryption, testing, settlement.

Each training round appends exactly four blocks in a fixed kind cycle
DB -> EB -> TB -> SB. Blocks link by SHA-256 digests over a canonical
byte serialization, so any payload mutation breaks either its own
recorded digest or the successor's back link. Proof-of-work is
simulated: the winner of each block is a uniform seeded draw from the
candidate miners, with a nonce field retained so a real puzzle could be
slotted in later.

The dump format is one JSON object per block per line, digests
hex-encoded lowercase. Each line carries the block's own digest so a
mutation of the tip is as detectable as one in the middle.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Sequence

from .serialize import DIGEST_SIZE, ZERO_DIGEST, digest as canonical_digest

KINDS = ("DB", "EB", "TB", "SB")

# Kind expected at each height: genesis occupies the SB slot of cycle 0,
# then DB, EB, TB, SB repeat.
_CYCLE = {1: "DB", 2: "EB", 3: "TB", 0: "SB"}


class ChainError(ValueError):
    """Base class for chain construction errors."""


class KindOrderViolation(ChainError):
    """Block kind does not match its position in the DB-EB-TB-SB cycle."""


class BrokenLinkage(ChainError):
    """Previous-digest or height does not match the current tip."""


class PayloadInvariantViolation(ChainError):
    """Block payload fails kind-specific validation."""


class EmptyCandidateSet(ChainError):
    """Winner selection requires at least one candidate miner."""


@dataclass(frozen=True)
class BlockHeader:
    height: int
    round: int
    kind: str
    prev_digest: bytes
    nonce: int
    timestamp: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ChainError(f"unknown block kind {self.kind!r}")
        if len(self.prev_digest) != DIGEST_SIZE:
            raise ChainError(f"prev_digest must be {DIGEST_SIZE} bytes")
        if self.height < 0 or self.round < 0:
            raise ChainError("height and round must be non-negative")


@dataclass(frozen=True)
class ContractRecord:
    """Escrow amounts of one deposit contract as stored on-chain."""

    mo_id: str
    trainer_id: str
    mo_amount: float
    t_amount: float


@dataclass(frozen=True)
class Coinbase:
    miner_id: str
    amount: float


@dataclass(frozen=True)
class DepositPayload:
    contracts: tuple[ContractRecord, ...]
    coinbase: Coinbase


@dataclass(frozen=True)
class TrainingRecord:
    """A trained-model claim: previous owner, trainer, new model digest."""

    prev_owner_id: str
    trainer_id: str
    model_digest: bytes


@dataclass(frozen=True)
class EncryptionPayload:
    pk: bytes
    records: tuple[TrainingRecord, ...]


@dataclass(frozen=True)
class EncryptedModelDigest:
    trainer_id: str
    digest: bytes


@dataclass(frozen=True)
class TestingPayload:
    __test__ = False  # not a pytest class despite the name

    encrypted_model_digests: tuple[EncryptedModelDigest, ...]
    testing_inputs: tuple[tuple[float, ...], ...]
    testing_truths: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class VerifiedRecord:
    prev_owner_id: str
    trainer_id: str
    performance: float


@dataclass(frozen=True)
class SettlementPayload:
    verified: tuple[VerifiedRecord, ...]
    top_set: tuple[str, ...]


Payload = DepositPayload | EncryptionPayload | TestingPayload | SettlementPayload

_PAYLOAD_KIND = {
    DepositPayload: "DB",
    EncryptionPayload: "EB",
    TestingPayload: "TB",
    SettlementPayload: "SB",
}


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    payload: Payload

    def __post_init__(self) -> None:
        expected = _PAYLOAD_KIND[type(self.payload)]
        if self.header.kind != expected:
            raise ChainError(
                f"payload type {type(self.payload).__name__} requires kind "
                f"{expected}, header says {self.header.kind}"
            )


def _payload_structure(payload: Payload) -> list:
    if isinstance(payload, DepositPayload):
        return [
            "DB",
            [[c.mo_id, c.trainer_id, c.mo_amount, c.t_amount] for c in payload.contracts],
            [payload.coinbase.miner_id, payload.coinbase.amount],
        ]
    if isinstance(payload, EncryptionPayload):
        return [
            "EB",
            payload.pk,
            [[r.prev_owner_id, r.trainer_id, r.model_digest] for r in payload.records],
        ]
    if isinstance(payload, TestingPayload):
        return [
            "TB",
            [[d.trainer_id, d.digest] for d in payload.encrypted_model_digests],
            [list(v) for v in payload.testing_inputs],
            [list(v) for v in payload.testing_truths],
        ]
    return [
        "SB",
        [[r.prev_owner_id, r.trainer_id, r.performance] for r in payload.verified],
        list(payload.top_set),
    ]


def block_digest(block: Block) -> bytes:
    """Deterministic 32-byte digest over the canonical header + payload."""
    h = block.header
    return canonical_digest(
        [
            "block", h.height, h.round, h.kind, h.prev_digest, h.nonce, h.timestamp,
            _payload_structure(block.payload),
        ]
    )


def expected_kind(height: int) -> str:
    return _CYCLE[height % 4]


def genesis_block() -> Block:
    """The fixed genesis block: an empty settlement at height 0."""
    header = BlockHeader(
        height=0, round=0, kind="SB", prev_digest=ZERO_DIGEST, nonce=0, timestamp=0
    )
    return Block(header, SettlementPayload(verified=(), top_set=()))


@dataclass
class Chain:
    """Single-writer block list; reads of committed blocks are safe."""

    blocks: list[Block] = field(default_factory=list)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def tip_digest(self) -> bytes:
        return block_digest(self.tip)

    def __len__(self) -> int:
        return len(self.blocks)


def new_chain() -> Chain:
    return Chain(blocks=[genesis_block()])


def validate_block(chain: Chain, block: Block, selection_rate: float | None = None) -> list[str]:
    """Kind-specific payload checks; an empty list means valid.

    EB records must differ from the predecessor model's digest recorded
    in the previous round's EB; TB input/truth case counts must match;
    SB top-set members must be verified and, when ``selection_rate`` is
    given, the top-set size must equal floor(rate * verified) clamped
    to at least one.
    """
    violations: list[str] = []
    payload = block.payload
    if isinstance(payload, EncryptionPayload):
        prior: dict[str, bytes] = {}
        for prev in reversed(chain.blocks):
            if isinstance(prev.payload, EncryptionPayload):
                prior = {r.trainer_id: r.model_digest for r in prev.payload.records}
                break
        for record in payload.records:
            previous_digest = prior.get(record.prev_owner_id)
            if previous_digest is not None and previous_digest == record.model_digest:
                violations.append(
                    f"HashUnchanged: trainer {record.trainer_id} resubmitted the "
                    f"digest of {record.prev_owner_id}'s model"
                )
    elif isinstance(payload, TestingPayload):
        if len(payload.testing_inputs) != len(payload.testing_truths):
            violations.append(
                f"CaseCountMismatch: {len(payload.testing_inputs)} inputs vs "
                f"{len(payload.testing_truths)} truths"
            )
    elif isinstance(payload, SettlementPayload):
        verified_ids = {r.trainer_id for r in payload.verified}
        for trainer_id in payload.top_set:
            if trainer_id not in verified_ids:
                violations.append(f"UnverifiedInTopSet: {trainer_id}")
        if payload.verified:
            if selection_rate is not None:
                expected = max(1, int(selection_rate * len(payload.verified)))
                if len(payload.top_set) != expected:
                    violations.append(
                        f"TopSetSizeInvalid: {len(payload.top_set)} != {expected}"
                    )
            elif not 1 <= len(payload.top_set) <= len(payload.verified):
                violations.append(
                    f"TopSetSizeInvalid: {len(payload.top_set)} of "
                    f"{len(payload.verified)} verified"
                )
        elif payload.top_set:
            violations.append("TopSetSizeInvalid: non-empty top set without verified records")
    return violations


def append_block(chain: Chain, block: Block) -> Chain:
    """Extend the chain by one block after linkage, cycle and payload checks."""
    tip = chain.tip
    want_kind = expected_kind(tip.header.height + 1)
    if block.header.kind != want_kind:
        raise KindOrderViolation(
            f"height {tip.header.height + 1} expects kind {want_kind}, "
            f"got {block.header.kind}"
        )
    if block.header.height != tip.header.height + 1:
        raise BrokenLinkage(
            f"expected height {tip.header.height + 1}, got {block.header.height}"
        )
    if block.header.prev_digest != block_digest(tip):
        raise BrokenLinkage("prev_digest does not match the current tip")
    violations = validate_block(chain, block)
    if violations:
        raise PayloadInvariantViolation("; ".join(violations))
    chain.blocks.append(block)
    return chain


def mine_winner(candidates: Sequence[str], rng: random.Random) -> str:
    """Uniform seeded draw standing in for the winner of the mining race."""
    if not candidates:
        raise EmptyCandidateSet("cannot mine with no candidate miners")
    return candidates[rng.randrange(len(candidates))]


def kind_cycle_ok(chain: Chain) -> bool:
    """True when every block sits at its cycle position."""
    return all(
        b.header.kind == expected_kind(b.header.height) and b.header.height == i
        for i, b in enumerate(chain.blocks)
    )


# --- dump format ---------------------------------------------------------

def _payload_to_json(payload: Payload) -> dict:
    if isinstance(payload, DepositPayload):
        return {
            "contracts": [
                {"mo_id": c.mo_id, "trainer_id": c.trainer_id,
                 "mo_amount": c.mo_amount, "t_amount": c.t_amount}
                for c in payload.contracts
            ],
            "coinbase": {"miner_id": payload.coinbase.miner_id,
                         "amount": payload.coinbase.amount},
        }
    if isinstance(payload, EncryptionPayload):
        return {
            "pk": payload.pk.hex(),
            "records": [
                {"prev_owner_id": r.prev_owner_id, "trainer_id": r.trainer_id,
                 "model_digest": r.model_digest.hex()}
                for r in payload.records
            ],
        }
    if isinstance(payload, TestingPayload):
        return {
            "encrypted_model_digests": [
                {"trainer_id": d.trainer_id, "digest": d.digest.hex()}
                for d in payload.encrypted_model_digests
            ],
            "testing_inputs": [list(v) for v in payload.testing_inputs],
            "testing_truths": [list(v) for v in payload.testing_truths],
        }
    return {
        "verified": [
            {"prev_owner_id": r.prev_owner_id, "trainer_id": r.trainer_id,
             "performance": r.performance}
            for r in payload.verified
        ],
        "top_set": list(payload.top_set),
    }


def _payload_from_json(kind: str, data: dict) -> Payload:
    if kind == "DB":
        return DepositPayload(
            contracts=tuple(
                ContractRecord(c["mo_id"], c["trainer_id"],
                               float(c["mo_amount"]), float(c["t_amount"]))
                for c in data["contracts"]
            ),
            coinbase=Coinbase(data["coinbase"]["miner_id"],
                              float(data["coinbase"]["amount"])),
        )
    if kind == "EB":
        return EncryptionPayload(
            pk=bytes.fromhex(data["pk"]),
            records=tuple(
                TrainingRecord(r["prev_owner_id"], r["trainer_id"],
                               bytes.fromhex(r["model_digest"]))
                for r in data["records"]
            ),
        )
    if kind == "TB":
        return TestingPayload(
            encrypted_model_digests=tuple(
                EncryptedModelDigest(d["trainer_id"], bytes.fromhex(d["digest"]))
                for d in data["encrypted_model_digests"]
            ),
            testing_inputs=tuple(tuple(float(x) for x in v) for v in data["testing_inputs"]),
            testing_truths=tuple(tuple(float(x) for x in v) for v in data["testing_truths"]),
        )
    if kind == "SB":
        return SettlementPayload(
            verified=tuple(
                VerifiedRecord(r["prev_owner_id"], r["trainer_id"],
                               float(r["performance"]))
                for r in data["verified"]
            ),
            top_set=tuple(data["top_set"]),
        )
    raise ChainError(f"unknown block kind {kind!r}")


def chain_to_jsonl(chain: Chain) -> str:
    """One JSON object per block per line, digests hex lowercase."""
    lines = []
    for block in chain.blocks:
        h = block.header
        # Compact separators: with no whitespace in a line, every byte is
        # semantic, so any single-byte mutation is detectable.
        lines.append(json.dumps({
            "height": h.height,
            "round": h.round,
            "kind": h.kind,
            "prev_digest": h.prev_digest.hex(),
            "nonce": h.nonce,
            "timestamp": h.timestamp,
            "payload": _payload_to_json(block.payload),
            "digest": block_digest(block).hex(),
        }, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def chain_from_jsonl(text: str) -> Chain:
    """Parse a dump without integrity checking (see ``verify_chain_dump``)."""
    blocks = []
    for line in text.splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        header = BlockHeader(
            height=int(data["height"]),
            round=int(data["round"]),
            kind=data["kind"],
            prev_digest=bytes.fromhex(data["prev_digest"]),
            nonce=int(data["nonce"]),
            timestamp=int(data["timestamp"]),
        )
        blocks.append(Block(header, _payload_from_json(data["kind"], data["payload"])))
    return Chain(blocks=blocks)


def verify_chain_dump(text: str) -> list[str]:
    """Revalidate a serialized chain; an empty list means intact.

    Detects any single-byte mutation: unparseable lines, recorded
    digests that no longer match the recomputed block digest, broken
    back links, kind-cycle violations and payload violations.
    """
    violations: list[str] = []
    entries = []
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            header = BlockHeader(
                height=int(data["height"]),
                round=int(data["round"]),
                kind=data["kind"],
                prev_digest=bytes.fromhex(data["prev_digest"]),
                nonce=int(data["nonce"]),
                timestamp=int(data["timestamp"]),
            )
            block = Block(header, _payload_from_json(data["kind"], data["payload"]))
            recorded = bytes.fromhex(data["digest"])
        except (ValueError, KeyError, TypeError) as exc:
            violations.append(f"Unparseable: line {lineno}: {exc}")
            continue
        entries.append((lineno, block, recorded))
    if not entries:
        violations.append("EmptyChain: no blocks")
        return violations
    partial = Chain(blocks=[])
    prev_digest = ZERO_DIGEST
    for index, (lineno, block, recorded) in enumerate(entries):
        actual = block_digest(block)
        if actual != recorded:
            violations.append(f"DigestMismatch: line {lineno}")
        if block.header.height != index:
            violations.append(f"HeightGap: line {lineno}")
        if block.header.kind != expected_kind(index):
            violations.append(f"KindOrderViolation: line {lineno}")
        if block.header.prev_digest != prev_digest:
            violations.append(f"BrokenLinkage: line {lineno}")
        violations.extend(
            f"{v}: line {lineno}" for v in validate_block(partial, block)
        )
        partial.blocks.append(block)
        prev_digest = actual
    return violations
