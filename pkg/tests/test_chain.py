import dataclasses
import random

import pytest
from scipy import stats

from relaysim.chain import (
    Block,
    BlockHeader,
    BrokenLinkage,
    Coinbase,
    ContractRecord,
    DepositPayload,
    EmptyCandidateSet,
    EncryptedModelDigest,
    EncryptionPayload,
    KindOrderViolation,
    PayloadInvariantViolation,
    SettlementPayload,
    TestingPayload,
    TrainingRecord,
    VerifiedRecord,
    append_block,
    block_digest,
    chain_from_jsonl,
    chain_to_jsonl,
    expected_kind,
    genesis_block,
    kind_cycle_ok,
    mine_winner,
    new_chain,
    verify_chain_dump,
)
from relaysim.protocol import participant_ids
from relaysim.serialize import digest as canonical_digest

GENESIS_DIGEST_HEX = "c182288e4ee4318007122e1fc03e22eae7311f5c235453bd420cf395b69e1d1e"


def _next_header(chain, kind, nonce=0):
    tip = chain.tip
    return BlockHeader(
        height=tip.header.height + 1,
        round=(tip.header.height // 4) + 1,
        kind=kind,
        prev_digest=block_digest(tip),
        nonce=nonce,
        timestamp=tip.header.timestamp + 1,
    )


def _empty_payload(kind):
    return {
        "DB": DepositPayload((), Coinbase("m0", 0.0)),
        "EB": EncryptionPayload(b"pk", ()),
        "TB": TestingPayload((), (), ()),
        "SB": SettlementPayload((), ()),
    }[kind]


def build_round(chain, records=(), top=(), verified=()):
    append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
    append_block(chain, Block(_next_header(chain, "EB"),
                              EncryptionPayload(b"pk", tuple(records))))
    append_block(chain, Block(_next_header(chain, "TB"), _empty_payload("TB")))
    append_block(chain, Block(_next_header(chain, "SB"),
                              SettlementPayload(tuple(verified), tuple(top))))
    return chain


class TestDigest:
    def test_identical_blocks_identical_digests(self):
        assert block_digest(genesis_block()) == block_digest(genesis_block())

    def test_nonce_flip_changes_digest(self):
        chain = new_chain()
        a = Block(_next_header(chain, "DB", nonce=0), _empty_payload("DB"))
        b = Block(_next_header(chain, "DB", nonce=1), _empty_payload("DB"))
        assert block_digest(a) != block_digest(b)

    def test_golden_genesis_digest(self):
        assert block_digest(genesis_block()).hex() == GENESIS_DIGEST_HEX


class TestAppend:
    def test_db_follows_genesis_sb(self):
        chain = new_chain()
        append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
        assert len(chain) == 2 and chain.tip.header.kind == "DB"

    def test_tb_after_db_is_kind_violation(self):
        chain = new_chain()
        append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
        header = dataclasses.replace(_next_header(chain, "TB"))
        with pytest.raises(KindOrderViolation):
            append_block(chain, Block(header, _empty_payload("TB")))

    def test_stale_prev_digest_is_broken_linkage(self):
        chain = new_chain()
        header = dataclasses.replace(
            _next_header(chain, "DB"), prev_digest=b"\x01" * 32
        )
        with pytest.raises(BrokenLinkage):
            append_block(chain, Block(header, _empty_payload("DB")))

    def test_all_twelve_wrong_successors_rejected(self):
        for tip_kind in ("DB", "EB", "TB", "SB"):
            for wrong in ("DB", "EB", "TB", "SB"):
                chain = new_chain()
                kinds_to_tip = {"DB": 1, "EB": 2, "TB": 3, "SB": 4}[tip_kind]
                for k in ("DB", "EB", "TB", "SB")[:kinds_to_tip]:
                    append_block(chain, Block(_next_header(chain, k), _empty_payload(k)))
                if wrong == expected_kind(chain.tip.header.height + 1):
                    continue
                with pytest.raises(KindOrderViolation):
                    append_block(
                        chain, Block(_next_header(chain, wrong), _empty_payload(wrong))
                    )

    def test_payload_violation_propagates(self):
        chain = new_chain()
        append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
        append_block(chain, Block(_next_header(chain, "EB"), _empty_payload("EB")))
        bad_tb = TestingPayload((), ((1.0,),), ())
        with pytest.raises(PayloadInvariantViolation):
            append_block(chain, Block(_next_header(chain, "TB"), bad_tb))


class TestValidate:
    def test_eb_reusing_predecessor_digest(self):
        chain = new_chain()
        stale = canonical_digest(["abstract-model", "mo1", 1])
        build_round(chain, records=[TrainingRecord("genesis", "mo1", stale)],
                    verified=[VerifiedRecord("genesis", "mo1", 0.1)], top=["mo1"])
        append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
        lazy = EncryptionPayload(b"pk", (TrainingRecord("mo1", "t2", stale),))
        with pytest.raises(PayloadInvariantViolation, match="HashUnchanged"):
            append_block(chain, Block(_next_header(chain, "EB"), lazy))

    def test_tb_case_count_mismatch(self):
        chain = new_chain()
        append_block(chain, Block(_next_header(chain, "DB"), _empty_payload("DB")))
        append_block(chain, Block(_next_header(chain, "EB"), _empty_payload("EB")))
        inputs = tuple((float(i),) for i in range(99))
        truths = tuple((float(i),) for i in range(100))
        bad = TestingPayload((), inputs, truths)
        with pytest.raises(PayloadInvariantViolation, match="CaseCountMismatch"):
            append_block(chain, Block(_next_header(chain, "TB"), bad))

    def test_sb_unverified_in_top_set(self):
        chain = new_chain()
        for k in ("DB", "EB", "TB"):
            append_block(chain, Block(_next_header(chain, k), _empty_payload(k)))
        bad = SettlementPayload(
            (VerifiedRecord("g", "t1", 0.5),), ("t1", "intruder")
        )
        with pytest.raises(PayloadInvariantViolation, match="UnverifiedInTopSet"):
            append_block(chain, Block(_next_header(chain, "SB"), bad))


class TestMineWinner:
    def test_single_candidate(self):
        assert mine_winner(["only"], random.Random(0)) == "only"

    def test_pinned_seed_42(self):
        assert mine_winner(participant_ids(128), random.Random(42)) == "p028"

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidateSet):
            mine_winner([], random.Random(0))

    def test_uniformity_chi_square(self):
        ids = participant_ids(128)
        rng = random.Random(7)
        counts = {pid: 0 for pid in ids}
        for _ in range(100_000):
            counts[mine_winner(ids, rng)] += 1
        _, p_value = stats.chisquare(list(counts.values()))
        assert p_value > 0.01


class TestDumpFormat:
    def _sample_chain(self):
        chain = new_chain()
        d1 = canonical_digest(["m", 1])
        d2 = canonical_digest(["m", 2])
        append_block(chain, Block(_next_header(chain, "DB"), DepositPayload(
            (ContractRecord("mo", "t1", 0.25, 1.0),), Coinbase("m0", 0.001)
        )))
        append_block(chain, Block(_next_header(chain, "EB"), EncryptionPayload(
            b"public-key-bytes", (TrainingRecord("mo", "t1", d1),)
        )))
        append_block(chain, Block(_next_header(chain, "TB"), TestingPayload(
            (EncryptedModelDigest("t1", d2),),
            ((0.5, -1.25),), ((2.0,),),
        )))
        append_block(chain, Block(_next_header(chain, "SB"), SettlementPayload(
            (VerifiedRecord("mo", "t1", 0.125),), ("t1",)
        )))
        return chain

    def test_round_trip_preserves_digests(self):
        chain = self._sample_chain()
        text = chain_to_jsonl(chain)
        loaded = chain_from_jsonl(text)
        assert len(loaded) == len(chain)
        for a, b in zip(chain.blocks, loaded.blocks):
            assert block_digest(a) == block_digest(b)
        assert kind_cycle_ok(loaded)
        assert chain_to_jsonl(loaded) == text

    def test_clean_dump_verifies(self):
        assert verify_chain_dump(chain_to_jsonl(self._sample_chain())) == []

    def test_single_byte_mutations_detected(self):
        text = chain_to_jsonl(self._sample_chain())
        raw = text.encode("utf-8")
        rng = random.Random(99)
        for _ in range(200):
            pos = rng.randrange(len(raw))
            replacement = rng.randrange(256)
            while replacement == raw[pos]:
                replacement = rng.randrange(256)
            mutated = raw[:pos] + bytes([replacement]) + raw[pos + 1:]
            try:
                violations = verify_chain_dump(mutated.decode("utf-8"))
            except UnicodeDecodeError:
                continue  # detected before parsing
            assert violations, f"undetected mutation at byte {pos}"
