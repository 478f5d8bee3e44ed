"""Fragment extraction: selector mapping, per-class pattern matching, tokens."""

import pytest

from evmscan.cfg import build_cfg
from evmscan.disasm import disassemble
from evmscan.fragments import (
    SEP_TOKEN,
    Fragment,
    VulnClass,
    extract_selectors,
    fragment_tokens,
    match_fragments,
)
from evmscan.synth import Assembler


def cfg_of(asm: Assembler):
    return build_cfg(disassemble(asm.assemble()))


def dispatcher(selectors_and_bodies):
    """Minimal dispatcher: DUP1 PUSH4 sel EQ PUSH2 tag JUMPI per function."""
    asm = Assembler()
    asm.push(0).op("CALLDATALOAD").push(0xE0).op("SHR")
    for i, (sel, _) in enumerate(selectors_and_bodies):
        asm.op("DUP1").push_bytes(sel).op("EQ").push_label(f"f{i}").op("JUMPI")
    asm.push(0).push(0).op("REVERT")
    for i, (_, body) in enumerate(selectors_and_bodies):
        asm.label(f"f{i}")
        body(asm)
    return asm


class TestExtractSelectors:
    def test_single_selector(self):
        asm = dispatcher([(bytes.fromhex("a9059cbb"), lambda a: a.op("STOP"))])
        cfg = cfg_of(asm)
        (sel,) = extract_selectors(cfg)
        assert sel.selector == bytes.fromhex("a9059cbb")
        assert cfg.blocks[sel.entry_block].starts_with_jumpdest()

    def test_no_push4(self):
        cfg = build_cfg(disassemble(bytes([0x60, 0x01, 0x00])))
        assert extract_selectors(cfg) == []

    def test_two_selectors(self):
        asm = dispatcher(
            [
                (b"\x11\x22\x33\x44", lambda a: a.op("STOP")),
                (b"\xaa\xbb\xcc\xdd", lambda a: a.op("STOP")),
            ]
        )
        cfg = cfg_of(asm)
        sels = extract_selectors(cfg)
        assert [s.selector for s in sels] == [b"\x11\x22\x33\x44", b"\xaa\xbb\xcc\xdd"]
        assert sels[0].entry_block != sels[1].entry_block

    def test_unresolved_target_skipped(self):
        # PUSH4 sel, EQ, PUSH1 0x7f (no block there), JUMPI
        data = bytes([0x63, 1, 2, 3, 4, 0x14, 0x60, 0x7F, 0x57, 0x00])
        assert extract_selectors(build_cfg(disassemble(data))) == []


class TestMatchFragments:
    def test_sd_block(self):
        asm = Assembler()
        asm.push(0).op("CALLER").op("SELFDESTRUCT")
        cfg = cfg_of(asm)
        (frag,) = match_fragments(cfg, VulnClass.SD)
        assert frag.seed_block == 0
        assert "SELFDESTRUCT" in frag.tokens

    def test_no_timestamp_no_tdv(self):
        asm = Assembler()
        asm.op("NUMBER").op("POP").op("STOP")
        assert match_fragments(cfg_of(asm), VulnClass.TDV) == []

    def test_timestamp_tdv(self):
        asm = Assembler()
        asm.op("TIMESTAMP").op("POP").op("STOP")
        (frag,) = match_fragments(cfg_of(asm), VulnClass.TDV)
        assert frag.seed_block == 0

    def test_av_each_arith_op(self):
        for op in ("ADD", "SUB", "MUL", "DIV"):
            asm = Assembler()
            asm.push(1).push(2).op(op).op("POP").op("STOP")
            frags = match_fragments(cfg_of(asm), VulnClass.AV)
            assert len(frags) == 1, op

    def test_rv_call_then_sstore_same_block(self):
        asm = Assembler()
        asm.op("GAS").op("CALL").push(0).push(0).op("SSTORE").op("STOP")
        (frag,) = match_fragments(cfg_of(asm), VulnClass.RV)
        assert frag.seed_block == 0

    def test_rv_call_then_sstore_successor(self):
        # call block falls through to an SSTORE block
        asm = Assembler()
        asm.op("GAS").op("CALL").op("POP")
        asm.label("next")
        asm.push(0).push(0).op("SSTORE").op("STOP")
        cfg = cfg_of(asm)
        (frag,) = match_fragments(cfg, VulnClass.RV)
        assert frag.seed_block == 0
        assert set(frag.block_ids) == {0, 1}

    def test_rv_sstore_before_call_is_safe(self):
        asm = Assembler()
        asm.push(0).push(0).op("SSTORE").op("GAS").op("CALL").op("POP").op("STOP")
        assert match_fragments(cfg_of(asm), VulnClass.RV) == []

    def test_rv_delegatecall_counts(self):
        asm = Assembler()
        asm.op("GAS").op("DELEGATECALL").push(0).push(0).op("SSTORE").op("STOP")
        assert len(match_fragments(cfg_of(asm), VulnClass.RV)) == 1

    def test_neighborhood_distance_one(self):
        # pred -> seed -> succ chain through fall-through edges
        asm = Assembler()
        asm.push(1).op("POP")                      # block 0 (pred, falls through)
        asm.label("seed")
        asm.op("CALLER").op("SELFDESTRUCT")        # block 1 (seed)
        asm.label("after")
        asm.op("STOP")                             # block 2 (unreachable from seed)
        cfg = cfg_of(asm)
        (frag,) = match_fragments(cfg, VulnClass.SD)
        assert frag.seed_block == 1
        assert frag.block_ids == (0, 1)  # SELFDESTRUCT has no successors

    def test_seed_completeness(self):
        # every SELFDESTRUCT block appears as exactly one seed
        asm = Assembler()
        asm.op("CALLER").op("SELFDESTRUCT")
        asm.op("CALLER").op("SELFDESTRUCT")
        cfg = cfg_of(asm)
        frags = match_fragments(cfg, VulnClass.SD)
        assert [f.seed_block for f in frags] == [0, 1]

    def test_determinism(self):
        asm = Assembler()
        asm.push(1).push(2).op("ADD").op("POP")
        asm.label("x")
        asm.push(3).push(4).op("MUL").op("POP").op("STOP")
        cfg = cfg_of(asm)
        assert match_fragments(cfg, VulnClass.AV) == match_fragments(cfg, VulnClass.AV)

    def test_selector_annotation(self):
        def body(a):
            a.op("CALLER").op("SELFDESTRUCT")

        asm = dispatcher([(b"\xde\xad\xbe\xef", body)])
        cfg = cfg_of(asm)
        sels = extract_selectors(cfg)
        (frag,) = match_fragments(cfg, VulnClass.SD, sels)
        assert frag.selector == b"\xde\xad\xbe\xef"


class TestFragmentTokens:
    def test_single_block_no_sep(self):
        asm = Assembler()
        asm.push(1).op("SELFDESTRUCT")
        (frag,) = match_fragments(cfg_of(asm), VulnClass.SD)
        assert fragment_tokens(frag) == ["PUSH", "SELFDESTRUCT"]

    def test_sep_between_blocks(self):
        asm = Assembler()
        asm.op("GAS").op("CALL").op("POP")
        asm.label("next")
        asm.push(0).push(0).op("SSTORE").op("STOP")
        (frag,) = match_fragments(cfg_of(asm), VulnClass.RV)
        toks = fragment_tokens(frag)
        assert toks == ["GAS", "CALL", "POP", SEP_TOKEN, "JUMPDEST", "PUSH", "PUSH", "SSTORE", "STOP"]

    def test_truncation_keeps_prefix(self):
        frag = Fragment(
            vuln_class=VulnClass.AV,
            seed_block=0,
            block_ids=(0,),
            tokens=tuple(["ADD"] * 600),
        )
        toks = fragment_tokens(frag, max_len=512)
        assert len(toks) == 512
        assert toks == ["ADD"] * 512

    def test_selector_length_enforced(self):
        from evmscan.fragments import FunctionSelector

        with pytest.raises(ValueError):
            FunctionSelector(selector=b"\x01\x02\x03", entry_block=0)
