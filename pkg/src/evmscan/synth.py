"""Seeded synthetic contract generator used for training and benchmarks.

Contracts are assembled from function-body templates behind a realistic
4-byte-selector dispatcher.  Positive templates plant one class's trigger
pattern (an unguarded SELFDESTRUCT, a TIMESTAMP branch, unchecked arithmetic,
an external call followed by a state write); negative "confusion" templates
contain the same opcodes in a safe arrangement (arithmetic guarded by a
comparison + JUMPI, the state write zeroed before the call), so opcode
frequencies alone cannot separate the classes while fragment structure can.
Labels are assigned by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .disasm import MNEMONIC_BYTES, disassemble
from .fragments import VulnClass


class Assembler:
    """Two-pass assembler: mnemonics + label references to bytecode."""

    def __init__(self) -> None:
        self._items: list[tuple] = []

    def op(self, mnemonic: str) -> "Assembler":
        self._items.append(("op", MNEMONIC_BYTES[mnemonic]))
        return self

    def push(self, value: int, width: int | None = None) -> "Assembler":
        if width is None:
            width = max(1, (value.bit_length() + 7) // 8)
        if not 1 <= width <= 32:
            raise ValueError("push width must be 1..32")
        self._items.append(("push", value.to_bytes(width, "big")))
        return self

    def push_bytes(self, data: bytes) -> "Assembler":
        if not 1 <= len(data) <= 32:
            raise ValueError("push data must be 1..32 bytes")
        self._items.append(("push", bytes(data)))
        return self

    def push_label(self, name: str) -> "Assembler":
        self._items.append(("push_label", name))  # fixed-width PUSH2
        return self

    def label(self, name: str) -> "Assembler":
        self._items.append(("label", name))
        return self

    def raw(self, data: bytes) -> "Assembler":
        self._items.append(("raw", bytes(data)))
        return self

    def assemble(self) -> bytes:
        # pass 1: pc per item, JUMPDEST emitted at label sites
        offsets: dict[str, int] = {}
        pc = 0
        for kind, payload in self._items:
            if kind == "op":
                pc += 1
            elif kind == "push":
                pc += 1 + len(payload)
            elif kind == "push_label":
                pc += 3
            elif kind == "label":
                if payload in offsets:
                    raise ValueError(f"duplicate label {payload!r}")
                offsets[payload] = pc
                pc += 1  # JUMPDEST
            else:  # raw
                pc += len(payload)
        if pc > 0xFFFF:
            raise ValueError("program too large for PUSH2 label references")
        # pass 2: emit
        out = bytearray()
        for kind, payload in self._items:
            if kind == "op":
                out.append(payload)
            elif kind == "push":
                out.append(0x5F + len(payload))
                out += payload
            elif kind == "push_label":
                out.append(0x61)  # PUSH2
                out += offsets[payload].to_bytes(2, "big")
            elif kind == "label":
                out.append(MNEMONIC_BYTES["JUMPDEST"])
            else:
                out += payload
        return bytes(out)


@dataclass(frozen=True)
class SyntheticContract:
    contract_id: str
    bytecode_hex: str
    labels: frozenset[VulnClass]


def _pad_noise(asm: Assembler, rng: random.Random, max_pairs: int) -> None:
    """Inert stack churn: varies opcode statistics without touching triggers."""
    for _ in range(rng.randrange(0, max_pairs + 1)):
        choice = rng.randrange(3)
        if choice == 0:
            asm.push(rng.randrange(256)).op("POP")
        elif choice == 1:
            asm.op("CALLER").op("POP")
        else:
            asm.push(rng.randrange(256)).op("DUP1").op("POP").op("POP")


def _body_sd(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    if rng.random() < 0.5:
        # owner-guarded variant; still flagged, destruction stays reachable
        ok = entry + "_ok"
        asm.op("CALLER").push_bytes(rng.randbytes(20)).op("EQ").push_label(ok).op("JUMPI")
        asm.push(0).push(0).op("REVERT")
        asm.label(ok)
    asm.op("CALLER").op("SELFDESTRUCT")


def _body_tdv(asm: Assembler, entry: str, rng: random.Random) -> None:
    ok = entry + "_ok"
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    asm.op("TIMESTAMP").push(rng.randrange(1 << 31), 4).op("GT").push_label(ok).op("JUMPI")
    asm.push(0).push(0).op("REVERT")
    asm.label(ok)
    asm.push(1).push(rng.randrange(4)).op("SSTORE").op("STOP")


def _body_filler_clock(asm: Assembler, entry: str, rng: random.Random) -> None:
    # block-number based branch: same shape as the timestamp body, no trigger
    ok = entry + "_ok"
    asm.label(entry)
    _pad_noise(asm, rng, 2)
    asm.op("NUMBER").push(rng.randrange(1 << 31), 4).op("GT").push_label(ok).op("JUMPI")
    asm.push(0).push(0).op("REVERT")
    asm.label(ok)
    asm.push(1).push(rng.randrange(4)).op("SSTORE").op("STOP")


_ARITH = ("ADD", "SUB", "MUL", "DIV")


def _body_av_unchecked(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    asm.push(4).op("CALLDATALOAD").push(0x24).op("CALLDATALOAD")
    asm.op(rng.choice(_ARITH))
    asm.push(rng.randrange(4)).op("SSTORE").op("STOP")


def _body_av_checked(asm: Assembler, entry: str, rng: random.Random) -> None:
    ok = entry + "_ok"
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    asm.push(4).op("CALLDATALOAD").push(0x24).op("CALLDATALOAD")
    asm.op(rng.choice(_ARITH))
    # overflow guard: comparison + conditional branch around a revert
    asm.op("DUP1").push(4).op("CALLDATALOAD").op(rng.choice(("LT", "GT"))).op("ISZERO")
    asm.push_label(ok).op("JUMPI")
    asm.push(0).push(0).op("REVERT")
    asm.label(ok)
    asm.push(rng.randrange(4)).op("SSTORE").op("STOP")


def _emit_call(asm: Assembler) -> None:
    # retsize retoffset argsize argoffset value target gas CALL
    asm.push(0).push(0).push(0).push(0)
    asm.push(0).op("SLOAD").op("CALLER").op("GAS").op("CALL")


def _body_rv_unsafe(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    if rng.random() < 0.5:
        # state write after the call, same block
        _emit_call(asm)
        asm.op("POP").push(0).push(0).op("SSTORE").op("STOP")
    else:
        # state write in the jump successor of the calling block
        done = entry + "_done"
        _emit_call(asm)
        asm.op("POP").push_label(done).op("JUMP")
        asm.label(done)
        asm.push(0).push(0).op("SSTORE").op("STOP")


def _body_rv_safe(asm: Assembler, entry: str, rng: random.Random) -> None:
    # checks-effects-interactions: zero the balance before the external call
    asm.label(entry)
    _pad_noise(asm, rng, 1)
    asm.push(0).op("SLOAD")
    asm.push(0).push(0).op("SSTORE")
    asm.push(0).push(0).push(0).push(0)
    asm.op("SWAP4").op("POP").push(0)  # spend the loaded amount slot
    asm.op("CALLER").op("GAS").op("CALL")
    asm.op("POP").op("STOP")


def _body_filler_store(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 3)
    asm.push(4).op("CALLDATALOAD").push(rng.randrange(8)).op("SSTORE").op("STOP")


def _body_filler_memory(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 3)
    asm.push(0x40).op("MLOAD").push(rng.randrange(256)).op("DUP2").op("MSTORE")
    asm.push(0x20).op("SWAP1").op("RETURN")


def _body_filler_hash(asm: Assembler, entry: str, rng: random.Random) -> None:
    asm.label(entry)
    _pad_noise(asm, rng, 3)
    asm.push(0xFF)  # 0xff as PUSH data, not an instruction
    asm.push(0).op("MSTORE8").push(1).push(0).op("KECCAK256").op("POP").op("STOP")


_POSITIVE_BODIES = {
    VulnClass.SD: _body_sd,
    VulnClass.TDV: _body_tdv,
    VulnClass.AV: _body_av_unchecked,
    VulnClass.RV: _body_rv_unsafe,
}

_NEGATIVE_BODIES = (_body_av_checked, _body_rv_safe, _body_filler_clock,
                    _body_filler_store, _body_filler_memory, _body_filler_hash)

_FILLER_BODIES = (_body_filler_store, _body_filler_memory, _body_filler_hash, _body_filler_clock)

#: bytes in this range have no assigned opcode and decode to INVALID
_METADATA_RANGE = (0xB0, 0xEF)


def _build_contract(rng: random.Random, positives: list[VulnClass], extra_bodies: list) -> bytes:
    asm = Assembler()
    bodies = [(cls.value.lower(), _POSITIVE_BODIES[cls]) for cls in positives]
    bodies += [(fn.__name__.removeprefix("_body_"), fn) for fn in extra_bodies]
    rng.shuffle(bodies)

    # free-memory-pointer preamble and selector dispatch
    asm.push(0x80).push(0x40).op("MSTORE")
    asm.push(4).op("CALLDATASIZE").op("LT").push_label("fallback").op("JUMPI")
    asm.push(0).op("CALLDATALOAD").push(0xE0).op("SHR")
    entries = []
    for i, (name, body) in enumerate(bodies):
        entry = f"f{i}_{name}"
        entries.append((entry, body))
        asm.op("DUP1").push_bytes(rng.randbytes(4)).op("EQ").push_label(entry).op("JUMPI")
    asm.label("fallback")
    asm.push(0).push(0).op("REVERT")
    for entry, body in entries:
        body(asm, entry, rng)

    code = asm.assemble()
    if rng.random() < 0.5:
        lo, hi = _METADATA_RANGE
        suffix = bytes(rng.randrange(lo, hi + 1) for _ in range(rng.randrange(4, 13)))
        code += suffix
    return code


def generate_synthetic_corpus(n: int, seed: int) -> list[SyntheticContract]:
    """Deterministically generate ``n`` labeled contracts (``n`` >= 8).

    The first slots of every 8-contract cycle force one positive example per
    class and one all-negative contract, so any corpus of at least 8 covers
    every class and the negative case.
    """
    if n < 8:
        raise ValueError("synthetic corpora need n >= 8")
    rng = random.Random(seed)
    classes = list(VulnClass)
    out: list[SyntheticContract] = []
    for i in range(n):
        slot = i % 8
        if slot < 4:
            positives = [classes[slot]]
            if rng.random() < 0.35:
                positives.append(rng.choice([c for c in classes if c not in positives]))
        elif slot == 4:
            positives = []
        else:
            positives = [c for c in classes if rng.random() < 0.35]
        extras = rng.sample(_NEGATIVE_BODIES, k=rng.randrange(1, 4))
        code = _build_contract(rng, positives, list(extras))
        out.append(
            SyntheticContract(
                contract_id=f"c{i:05d}",
                bytecode_hex="0x" + code.hex(),
                labels=frozenset(positives),
            )
        )
    return out


def generate_scaled_contract(seed: int, target_opcodes: int) -> SyntheticContract:
    """One contract padded with filler functions to roughly ``target_opcodes``.

    Used by throughput benchmarks; carries one positive body per class so the
    fragment pipeline has work to do at every size.
    """
    picker = random.Random(seed)
    extras: list = [_body_av_checked, _body_rv_safe]
    while True:
        # fresh rng per attempt so earlier attempts do not shift the bytes
        code = _build_contract(random.Random(seed), list(VulnClass), list(extras))
        n_ops = len(disassemble(code).instructions)
        if n_ops >= target_opcodes:
            return SyntheticContract(
                contract_id=f"scaled{target_opcodes}",
                bytecode_hex="0x" + code.hex(),
                labels=frozenset(VulnClass),
            )
        grow = max(1, (target_opcodes - n_ops) // 24)
        extras += [picker.choice(_FILLER_BODIES) for _ in range(grow)]
