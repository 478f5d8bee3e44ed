"""EVM bytecode disassembly.

Decoding is total: every byte sequence yields an instruction stream that
tiles the input exactly (no gaps, no overlaps), so downstream analyses never
have to handle decode failures.  Bytes without an assigned opcode decode to
INVALID; a PUSH whose immediate runs past end-of-code keeps the available
bytes and is flagged ``truncated``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import MalformedHex


def _build_opcode_table() -> dict[int, str]:
    table = {
        0x00: "STOP",
        0x01: "ADD",
        0x02: "MUL",
        0x03: "SUB",
        0x04: "DIV",
        0x05: "SDIV",
        0x06: "MOD",
        0x07: "SMOD",
        0x08: "ADDMOD",
        0x09: "MULMOD",
        0x0A: "EXP",
        0x0B: "SIGNEXTEND",
        0x10: "LT",
        0x11: "GT",
        0x12: "SLT",
        0x13: "SGT",
        0x14: "EQ",
        0x15: "ISZERO",
        0x16: "AND",
        0x17: "OR",
        0x18: "XOR",
        0x19: "NOT",
        0x1A: "BYTE",
        0x1B: "SHL",
        0x1C: "SHR",
        0x1D: "SAR",
        0x20: "KECCAK256",
        0x30: "ADDRESS",
        0x31: "BALANCE",
        0x32: "ORIGIN",
        0x33: "CALLER",
        0x34: "CALLVALUE",
        0x35: "CALLDATALOAD",
        0x36: "CALLDATASIZE",
        0x37: "CALLDATACOPY",
        0x38: "CODESIZE",
        0x39: "CODECOPY",
        0x3A: "GASPRICE",
        0x3B: "EXTCODESIZE",
        0x3C: "EXTCODECOPY",
        0x3D: "RETURNDATASIZE",
        0x3E: "RETURNDATACOPY",
        0x3F: "EXTCODEHASH",
        0x40: "BLOCKHASH",
        0x41: "COINBASE",
        0x42: "TIMESTAMP",
        0x43: "NUMBER",
        0x44: "PREVRANDAO",
        0x45: "GASLIMIT",
        0x46: "CHAINID",
        0x47: "SELFBALANCE",
        0x48: "BASEFEE",
        0x50: "POP",
        0x51: "MLOAD",
        0x52: "MSTORE",
        0x53: "MSTORE8",
        0x54: "SLOAD",
        0x55: "SSTORE",
        0x56: "JUMP",
        0x57: "JUMPI",
        0x58: "PC",
        0x59: "MSIZE",
        0x5A: "GAS",
        0x5B: "JUMPDEST",
        0x5C: "TLOAD",
        0x5D: "TSTORE",
        0x5F: "PUSH0",
        0xF0: "CREATE",
        0xF1: "CALL",
        0xF2: "CALLCODE",
        0xF3: "RETURN",
        0xF4: "DELEGATECALL",
        0xF5: "CREATE2",
        0xFA: "STATICCALL",
        0xFD: "REVERT",
        0xFE: "INVALID",
        0xFF: "SELFDESTRUCT",
    }
    for n in range(1, 33):
        table[0x5F + n] = f"PUSH{n}"
    for n in range(1, 17):
        table[0x7F + n] = f"DUP{n}"
        table[0x8F + n] = f"SWAP{n}"
    for n in range(0, 5):
        table[0xA0 + n] = f"LOG{n}"
    return table


#: byte value -> canonical mnemonic for every *assigned* opcode
OPCODES: dict[int, str] = _build_opcode_table()

#: mnemonic -> lowest byte value carrying it (SELFDESTRUCT -> 0xFF etc.)
MNEMONIC_BYTES: dict[str, int] = {name: byte for byte, name in sorted(OPCODES.items(), reverse=True)}


def immediate_size(opcode_byte: int) -> int:
    """Number of immediate data bytes following the opcode (PUSH1..PUSH32 only)."""
    if 0x60 <= opcode_byte <= 0x7F:
        return opcode_byte - 0x5F
    return 0


def mnemonic_for(opcode_byte: int) -> str:
    return OPCODES.get(opcode_byte, "INVALID")


class Instruction(NamedTuple):
    """One decoded instruction.

    ``pc`` is the byte offset of the opcode; ``immediate`` holds the PUSH data
    bytes (empty for everything else); ``truncated`` marks a trailing PUSH
    whose immediate was cut off by end-of-code.
    """

    pc: int
    opcode_byte: int
    mnemonic: str
    immediate: bytes
    truncated: bool

    @property
    def size(self) -> int:
        return 1 + len(self.immediate)

    def __str__(self) -> str:
        if self.immediate:
            return f"{self.pc:#06x}: {self.mnemonic} 0x{self.immediate.hex()}"
        return f"{self.pc:#06x}: {self.mnemonic}"


@dataclass(frozen=True)
class RawBytecode:
    """Contract bytecode plus an opaque identifier for reporting."""

    data: bytes
    source_id: str = "<memory>"


@dataclass(frozen=True)
class InstructionStream:
    """Ordered decoded instructions tiling the underlying byte sequence."""

    instructions: tuple[Instruction, ...]
    source_id: str = "<memory>"

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def to_bytes(self) -> bytes:
        """Re-serialize; inverse of :func:`disassemble` by construction."""
        return b"".join(bytes([ins.opcode_byte]) + ins.immediate for ins in self.instructions)


def parse_hex(text: str) -> RawBytecode:
    """Decode hex text (optional ``0x`` prefix, surrounding whitespace tolerated).

    Raises :class:`MalformedHex` on an odd digit count or non-hex characters.
    """
    stripped = text.strip()
    if stripped[:2] in ("0x", "0X"):
        stripped = stripped[2:]
    if len(stripped) % 2 != 0:
        raise MalformedHex(f"odd number of hex digits ({len(stripped)})")
    try:
        data = bytes.fromhex(stripped)
    except ValueError as exc:
        raise MalformedHex(f"not valid hexadecimal: {exc}") from None
    return RawBytecode(data=data)


def disassemble(code: RawBytecode | bytes, source_id: str | None = None) -> InstructionStream:
    """Decode bytecode into an instruction stream.

    Never fails: unassigned opcode bytes become INVALID instructions and a
    truncated trailing PUSH keeps whatever immediate bytes exist.
    """
    if isinstance(code, RawBytecode):
        data = code.data
        sid = source_id if source_id is not None else code.source_id
    else:
        data = bytes(code)
        sid = source_id if source_id is not None else "<memory>"

    table = OPCODES
    out: list[Instruction] = []
    append = out.append
    pc = 0
    end = len(data)
    while pc < end:
        byte = data[pc]
        if 0x60 <= byte <= 0x7F:
            want = byte - 0x5F
            imm = data[pc + 1 : pc + 1 + want]
            append(Instruction(pc, byte, table[byte], imm, len(imm) < want))
            pc += 1 + len(imm)
        else:
            append(Instruction(pc, byte, table.get(byte, "INVALID"), b"", False))
            pc += 1
    return InstructionStream(instructions=tuple(out), source_id=sid)
