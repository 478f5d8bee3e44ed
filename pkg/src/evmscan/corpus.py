"""Labeled-corpus records and directory/CSV ingestion.

On disk a corpus is a directory of ``<contract_id>.hex`` files (hex text, one
contract per file) plus a labels CSV with one line per contract:
``contract_id,CLS,CLS,...`` where the class list may be empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import CorpusTooSmall
from .fragments import VulnClass
from .synth import SyntheticContract


@dataclass(frozen=True)
class LabeledContract:
    contract_id: str
    bytecode_hex: str
    labels: frozenset[VulnClass]
    path: str | None = None  # source file, when directory-loaded


def parse_labels_csv(text: str) -> dict[str, frozenset[VulnClass]]:
    labels: dict[str, frozenset[VulnClass]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        cid = fields[0].strip()
        if not cid:
            raise ValueError(f"labels line {lineno}: empty contract id")
        classes = frozenset(VulnClass.from_name(f.strip()) for f in fields[1:] if f.strip())
        if cid in labels:
            raise ValueError(f"labels line {lineno}: duplicate contract id {cid!r}")
        labels[cid] = classes
    return labels


def format_labels_csv(entries: dict[str, frozenset[VulnClass]]) -> str:
    lines = []
    for cid in sorted(entries):
        classes = sorted(cls.value for cls in entries[cid])
        lines.append(",".join([cid] + classes))
    return "\n".join(lines) + "\n"


def load_corpus(corpus_dir: str | Path, labels_path: str | Path | None = None) -> list[LabeledContract]:
    """Read every ``*.hex`` file under ``corpus_dir``; ids are file stems.

    Contracts absent from the labels file get an empty label set.
    """
    corpus_dir = Path(corpus_dir)
    labels: dict[str, frozenset[VulnClass]] = {}
    if labels_path is not None:
        labels = parse_labels_csv(Path(labels_path).read_text(encoding="ascii"))
    contracts = []
    for path in sorted(corpus_dir.glob("*.hex")):
        cid = path.stem
        contracts.append(
            LabeledContract(
                contract_id=cid,
                bytecode_hex=path.read_text(encoding="ascii"),
                labels=labels.get(cid, frozenset()),
                path=str(path),
            )
        )
    if not contracts:
        raise CorpusTooSmall(f"no *.hex files found in {corpus_dir}")
    return contracts


def write_corpus(contracts: list[SyntheticContract] | list[LabeledContract], out_dir: str | Path) -> Path:
    """Write contracts and a ``labels.csv`` into ``out_dir``; returns the labels path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: dict[str, frozenset[VulnClass]] = {}
    for c in contracts:
        (out_dir / f"{c.contract_id}.hex").write_text(c.bytecode_hex + "\n", encoding="ascii")
        entries[c.contract_id] = frozenset(c.labels)
    labels_path = out_dir / "labels.csv"
    labels_path.write_text(format_labels_csv(entries), encoding="ascii")
    return labels_path
