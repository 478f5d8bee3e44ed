"""Disassembler: hex parsing, total decoding, tiling and round-trip invariants."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evmscan.disasm import OPCODES, disassemble, immediate_size, parse_hex
from evmscan.errors import MalformedHex


def tiling_oracle(data: bytes) -> list[tuple[int, int]]:
    """Independent (pc, size) walk straight off the byte ranges."""
    out = []
    pc = 0
    while pc < len(data):
        b = data[pc]
        size = 1 + (b - 0x5F if 0x60 <= b <= 0x7F else 0)
        size = min(size, len(data) - pc)
        out.append((pc, size))
        pc += size
    return out


class TestParseHex:
    def test_empty(self):
        assert parse_hex("0x").data == b""

    def test_selfdestruct_byte(self):
        assert parse_hex("0xFF").data == b"\xff"

    def test_direct_decode(self):
        assert parse_hex("0x6001600201").data == bytes([0x60, 0x01, 0x60, 0x02, 0x01])

    def test_case_and_whitespace(self):
        assert parse_hex("  0XdeadBEEF\n").data == b"\xde\xad\xbe\xef"

    def test_no_prefix(self):
        assert parse_hex("ff00").data == b"\xff\x00"

    def test_odd_digits(self):
        with pytest.raises(MalformedHex):
            parse_hex("0xabc")

    def test_non_hex(self):
        with pytest.raises(MalformedHex):
            parse_hex("0xzz")


class TestDisassemble:
    def test_push_add_matches_reference(self):
        # frozen from the standard reference disassembly of this bytecode:
        # 0x0: PUSH1 0x1 / 0x2: PUSH1 0x2 / 0x4: ADD
        stream = disassemble(bytes([0x60, 0x01, 0x60, 0x02, 0x01]))
        got = [(i.pc, i.mnemonic, i.immediate) for i in stream]
        assert got == [(0, "PUSH1", b"\x01"), (2, "PUSH1", b"\x02"), (4, "ADD", b"")]

    def test_empty(self):
        assert len(disassemble(b"")) == 0

    def test_truncated_push(self):
        stream = disassemble(bytes([0x61, 0xAA]))
        (ins,) = stream.instructions
        assert ins.mnemonic == "PUSH2"
        assert ins.immediate == b"\xaa"
        assert ins.truncated
        assert ins.pc == 0
        assert tiling_oracle(bytes([0x61, 0xAA])) == [(0, 2)]

    def test_selfdestruct(self):
        stream = disassemble(b"\xff")
        assert [(i.pc, i.mnemonic) for i in stream] == [(0, "SELFDESTRUCT")]

    def test_unknown_byte_is_invalid(self):
        stream = disassemble(b"\x0c\xef")
        assert [i.mnemonic for i in stream] == ["INVALID", "INVALID"]

    def test_truncated_only_final(self):
        stream = disassemble(bytes([0x60, 0x01, 0x7F]) + b"\x11" * 10)
        assert [i.truncated for i in stream] == [False, True]


class TestInvariants:
    @given(st.binary(max_size=600))
    def test_tiling_and_roundtrip(self, data):
        stream = disassemble(data)
        assert sum(i.size for i in stream) == len(data)
        assert stream.to_bytes() == data
        pcs = [i.pc for i in stream]
        assert pcs == sorted(set(pcs))
        assert [(i.pc, i.size) for i in stream] == tiling_oracle(data)
        # a truncated PUSH can only be the final instruction
        for ins in stream.instructions[:-1]:
            assert not ins.truncated

    @given(st.binary(max_size=300))
    def test_immediates_only_on_push(self, data):
        for ins in disassemble(data):
            if ins.immediate:
                assert ins.mnemonic.startswith("PUSH")
                if not ins.truncated:
                    assert len(ins.immediate) == immediate_size(ins.opcode_byte)

    def test_opcode_table_shape(self):
        assert OPCODES[0xFF] == "SELFDESTRUCT"
        assert OPCODES[0x5F] == "PUSH0"
        assert OPCODES[0x60] == "PUSH1"
        assert OPCODES[0x7F] == "PUSH32"
        assert 0xFC not in OPCODES
        assert immediate_size(0x7F) == 32
        assert immediate_size(0x5F) == 0
