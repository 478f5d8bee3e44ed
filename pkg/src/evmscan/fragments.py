"""Vulnerability-candidate fragment extraction from a contract CFG.

A fragment is a seed block matching one class's trigger pattern plus the
seed's distance-1 neighborhood (direct predecessors and successors).  The
token sequence of a fragment is the normalized mnemonics of its member
blocks in pc order, with SEP between blocks; this is the exact sequence the
encoder consumes and the line format external trainers ingest.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .cfg import BasicBlock, Cfg
from .vocab import normalize

SEP_TOKEN = "SEP"

ARITHMETIC_OPS = frozenset({"ADD", "SUB", "MUL", "DIV"})
EXTERNAL_CALL_OPS = frozenset({"CALL", "DELEGATECALL"})


class VulnClass(enum.Enum):
    """The four detected vulnerability classes."""

    RV = "RV"    # reentrancy
    AV = "AV"    # arithmetic
    SD = "SD"    # self-destruct
    TDV = "TDV"  # timestamp dependency

    @classmethod
    def from_name(cls, name: str) -> "VulnClass":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown vulnerability class {name!r}") from None


@dataclass(frozen=True)
class FunctionSelector:
    """4-byte dispatcher selector mapped to its function entry block."""

    selector: bytes
    entry_block: int

    def __post_init__(self) -> None:
        if len(self.selector) != 4:
            raise ValueError("function selectors are exactly 4 bytes")


@dataclass(frozen=True)
class Fragment:
    vuln_class: VulnClass
    seed_block: int
    block_ids: tuple[int, ...]  # seed + distance-1 neighborhood, pc order
    tokens: tuple[str, ...]     # SEP-joined member block token runs
    selector: bytes | None = None  # enclosing function, when resolvable


def extract_selectors(cfg: Cfg) -> list[FunctionSelector]:
    """Scan dispatcher code for ``PUSH4 sel, EQ, PUSH target, JUMPI`` chains.

    Emits one entry per comparison whose target resolves to a JUMPDEST block
    start; unresolved targets are skipped.
    """
    by_start_pc = {b.start_pc: b.id for b in cfg.blocks}
    found: list[FunctionSelector] = []
    for block in cfg.blocks:
        ins = block.instructions
        for i in range(len(ins) - 3):
            if (
                ins[i].mnemonic == "PUSH4"
                and not ins[i].truncated
                and ins[i + 1].mnemonic == "EQ"
                and ins[i + 2].mnemonic.startswith("PUSH")
                and not ins[i + 2].truncated
                and ins[i + 3].mnemonic == "JUMPI"
            ):
                target = int.from_bytes(ins[i + 2].immediate, "big")
                target_id = by_start_pc.get(target)
                if target_id is None or not cfg.blocks[target_id].starts_with_jumpdest():
                    continue
                found.append(FunctionSelector(selector=ins[i].immediate, entry_block=target_id))
    return found


def _block_tokens(block: BasicBlock) -> list[str]:
    return [normalize(ins.mnemonic) for ins in block.instructions]


def _neighborhood(cfg: Cfg, seed: int) -> tuple[int, ...]:
    members = {seed}
    members.update(cfg.successors(seed))
    members.update(cfg.predecessors(seed))
    return tuple(sorted(members))  # block ids are in pc order already


def _is_seed(cfg: Cfg, block: BasicBlock, cls: VulnClass) -> bool:
    if cls is VulnClass.SD:
        return block.contains("SELFDESTRUCT")
    if cls is VulnClass.TDV:
        return block.contains("TIMESTAMP")
    if cls is VulnClass.AV:
        return any(ins.mnemonic in ARITHMETIC_OPS for ins in block.instructions)
    # RV: an external call with a state write after it, either later in the
    # same block or anywhere in a direct successor.
    call_positions = [i for i, ins in enumerate(block.instructions) if ins.mnemonic in EXTERNAL_CALL_OPS]
    if not call_positions:
        return False
    first_call = call_positions[0]
    if any(ins.mnemonic == "SSTORE" for ins in block.instructions[first_call + 1 :]):
        return True
    return any(cfg.blocks[succ].contains("SSTORE") for succ in cfg.successors(block.id))


def _reverse_reachable(cfg: Cfg, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for pred in cfg.predecessors(node):
            if pred not in seen:
                seen.add(pred)
                queue.append(pred)
    return seen


def _enclosing_selector(cfg: Cfg, seed: int, selectors: list[FunctionSelector]) -> bytes | None:
    """First selector (extraction order) whose entry block reaches the seed.

    Computed as one reverse walk from the seed, so cost scales with the seed
    count rather than the dispatcher size.
    """
    sources = _reverse_reachable(cfg, seed)
    for sel in selectors:
        if sel.entry_block in sources:
            return sel.selector
    return None


def match_fragments(cfg: Cfg, cls: VulnClass, selectors: list[FunctionSelector] | None = None) -> list[Fragment]:
    """One fragment per seed block matching ``cls``, ordered by seed id.

    When ``selectors`` is given, each fragment is annotated with the first
    selector whose entry block reaches the seed.
    """
    fragments: list[Fragment] = []
    for block in cfg.blocks:
        if not _is_seed(cfg, block, cls):
            continue
        member_ids = _neighborhood(cfg, block.id)
        tokens: list[str] = []
        for k, member in enumerate(member_ids):
            if k:
                tokens.append(SEP_TOKEN)
            tokens.extend(_block_tokens(cfg.blocks[member]))
        selector = _enclosing_selector(cfg, block.id, selectors) if selectors else None
        fragments.append(
            Fragment(
                vuln_class=cls,
                seed_block=block.id,
                block_ids=member_ids,
                tokens=tuple(tokens),
                selector=selector,
            )
        )
    return fragments


def fragment_tokens(frag: Fragment, max_len: int = 512) -> list[str]:
    """Fragment token sequence truncated to ``max_len`` (prefix kept)."""
    return list(frag.tokens[:max_len])
