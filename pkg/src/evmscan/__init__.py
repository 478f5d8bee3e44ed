"""Bytecode-level smart-contract vulnerability scanner."""

__version__ = "0.1.0"

from .bundle import ModelBundle, load_bundle, save_bundle
from .cfg import Cfg, build_cfg, to_dot
from .corpus import LabeledContract, load_corpus, write_corpus
from .disasm import InstructionStream, RawBytecode, disassemble, parse_hex
from .fragments import Fragment, VulnClass, extract_selectors, match_fragments
from .pipeline import analyze_contract, evaluate, featurize_contract, scan, split_corpus, train_models
from .synth import generate_synthetic_corpus

__all__ = [
    "__version__",
    "Cfg",
    "Fragment",
    "InstructionStream",
    "LabeledContract",
    "ModelBundle",
    "RawBytecode",
    "VulnClass",
    "analyze_contract",
    "build_cfg",
    "disassemble",
    "evaluate",
    "extract_selectors",
    "featurize_contract",
    "generate_synthetic_corpus",
    "load_bundle",
    "load_corpus",
    "match_fragments",
    "parse_hex",
    "save_bundle",
    "scan",
    "split_corpus",
    "to_dot",
    "train_models",
    "write_corpus",
]
