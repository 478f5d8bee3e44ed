"""Basic-block recovery and control-flow edges for EVM instruction streams.

Blocks are split at leaders: the stream start, every JUMPDEST, and the
instruction following a terminator (JUMP, JUMPI, STOP, RETURN, INVALID,
REVERT, SELFDESTRUCT).  Jump targets are resolved only for the dominant
constant pattern ``PUSHn target`` immediately before the JUMP/JUMPI; anything
else is surfaced in ``unresolved_jumps`` rather than guessed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

from .disasm import Instruction, InstructionStream
from .vocab import normalize

#: opcodes that end a basic block
TERMINATORS = frozenset({"JUMP", "JUMPI", "STOP", "RETURN", "INVALID", "REVERT", "SELFDESTRUCT"})


class BlockTerminator(enum.Enum):
    JUMP = "JUMP"
    JUMPI = "JUMPI"
    STOP = "STOP"
    RETURN = "RETURN"
    REVERT = "REVERT"
    INVALID = "INVALID"
    SELFDESTRUCT = "SELFDESTRUCT"
    FALLTHROUGH = "FALLTHROUGH"
    END_OF_CODE = "END-OF-CODE"


class EdgeKind(enum.Enum):
    JUMP = "jump"
    CONDITIONAL_TAKEN = "conditional-taken"
    FALL_THROUGH = "fall-through"


@dataclass(frozen=True)
class BasicBlock:
    id: int
    instructions: tuple[Instruction, ...]
    terminator: BlockTerminator

    @property
    def start_pc(self) -> int:
        return self.instructions[0].pc

    @property
    def end_pc(self) -> int:
        return self.instructions[-1].pc

    def starts_with_jumpdest(self) -> bool:
        return self.instructions[0].mnemonic == "JUMPDEST"

    def contains(self, mnemonic: str) -> bool:
        return any(ins.mnemonic == mnemonic for ins in self.instructions)


@dataclass(frozen=True)
class Edge:
    from_block: int
    to_block: int
    kind: EdgeKind


@dataclass(frozen=True)
class Cfg:
    blocks: tuple[BasicBlock, ...]
    edges: tuple[Edge, ...]
    unresolved_jumps: tuple[int, ...]
    source_id: str = "<memory>"

    @cached_property
    def _adjacency(self) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
        succ: dict[int, list[int]] = {}
        pred: dict[int, list[int]] = {}
        for e in self.edges:
            succ.setdefault(e.from_block, []).append(e.to_block)
            pred.setdefault(e.to_block, []).append(e.from_block)
        return succ, pred

    def successors(self, block_id: int) -> list[int]:
        return self._adjacency[0].get(block_id, [])

    def predecessors(self, block_id: int) -> list[int]:
        return self._adjacency[1].get(block_id, [])


def split_blocks(stream: InstructionStream) -> list[BasicBlock]:
    """Partition the stream into basic blocks.

    Returns an empty list for an empty stream.  A trailing block that runs
    into end-of-code without a terminator gets END-OF-CODE; a block cut short
    by a following JUMPDEST gets FALLTHROUGH.
    """
    instructions = stream.instructions
    if not instructions:
        return []

    blocks: list[BasicBlock] = []
    current: list[Instruction] = []

    def close(term: BlockTerminator) -> None:
        blocks.append(BasicBlock(id=len(blocks), instructions=tuple(current), terminator=term))
        current.clear()

    for ins in instructions:
        if ins.mnemonic == "JUMPDEST" and current:
            close(BlockTerminator.FALLTHROUGH)
        current.append(ins)
        if ins.mnemonic in TERMINATORS:
            close(BlockTerminator(ins.mnemonic))
    if current:
        close(BlockTerminator.END_OF_CODE)
    return blocks


def _constant_jump_target(block: BasicBlock) -> int | None:
    """Target pc when the instruction before the final JUMP/JUMPI is a constant PUSH."""
    if len(block.instructions) < 2:
        return None
    prev = block.instructions[-2]
    if not prev.mnemonic.startswith("PUSH") or prev.truncated:
        return None
    return int.from_bytes(prev.immediate, "big")  # PUSH0 yields target 0


def resolve_edges(blocks: list[BasicBlock], source_id: str = "<memory>") -> Cfg:
    """Connect blocks with jump, conditional-taken, and fall-through edges.

    A resolved target only produces an edge when it lands on a JUMPDEST block
    start; everything else (non-constant stack targets, bad pcs) is recorded
    in ``unresolved_jumps``.  JUMPI blocks always fall through to the next
    block in pc order when one exists.
    """
    by_start_pc = {b.start_pc: b.id for b in blocks}
    edges: list[Edge] = []
    unresolved: list[int] = []

    def jump_edge(block: BasicBlock, kind: EdgeKind) -> None:
        target = _constant_jump_target(block)
        if target is None:
            unresolved.append(block.id)
            return
        target_id = by_start_pc.get(target)
        if target_id is None or not blocks[target_id].starts_with_jumpdest():
            unresolved.append(block.id)
            return
        edges.append(Edge(block.id, target_id, kind))

    for block in blocks:
        term = block.terminator
        has_next = block.id + 1 < len(blocks)
        if term is BlockTerminator.JUMP:
            jump_edge(block, EdgeKind.JUMP)
        elif term is BlockTerminator.JUMPI:
            jump_edge(block, EdgeKind.CONDITIONAL_TAKEN)
            if has_next:
                edges.append(Edge(block.id, block.id + 1, EdgeKind.FALL_THROUGH))
        elif term in (BlockTerminator.FALLTHROUGH, BlockTerminator.END_OF_CODE):
            if has_next:
                edges.append(Edge(block.id, block.id + 1, EdgeKind.FALL_THROUGH))
        # STOP / RETURN / REVERT / INVALID / SELFDESTRUCT: no outgoing edges

    return Cfg(
        blocks=tuple(blocks),
        edges=tuple(edges),
        unresolved_jumps=tuple(unresolved),
        source_id=source_id,
    )


def build_cfg(stream: InstructionStream) -> Cfg:
    """Convenience wrapper: split blocks, then resolve edges."""
    return resolve_edges(split_blocks(stream), source_id=stream.source_id)


def to_dot(cfg: Cfg) -> str:
    """Render the graph in DOT, byte-deterministic for a given Cfg.

    Node labels are the block's normalized mnemonics, newline-joined and
    wrapped in square brackets.
    """
    lines = ["digraph cfg {", "  node [shape=box fontname=monospace];"]
    for block in cfg.blocks:
        label = "[" + "\\n".join(normalize(ins.mnemonic) for ins in block.instructions) + "]"
        lines.append(f'  b{block.id} [label="{label}"];')
    for edge in sorted(cfg.edges, key=lambda e: (e.from_block, e.to_block, e.kind.value)):
        lines.append(f'  b{edge.from_block} -> b{edge.to_block} [label="{edge.kind.value}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
