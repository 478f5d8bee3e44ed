"""Command-line interface: a thin client over the service API.

Exit codes: 0 success, 1 input error (bad files, bad bytecode, bad requests),
2 internal error.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import click

from .client import ServiceClient, ServiceError


def _fail_input(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _client(url: str | None) -> ServiceClient:
    return ServiceClient(url=url)


def _read_corpus_payload(corpus_dir: str, labels: str | None) -> list[dict]:
    from .corpus import load_corpus
    from .errors import EvmScanError

    try:
        contracts = load_corpus(corpus_dir, labels)
    except (EvmScanError, OSError, ValueError) as exc:
        _fail_input(str(exc))
    return [
        {
            "contract_id": c.contract_id,
            "bytecode_hex": c.bytecode_hex,
            "labels": sorted(cls.value for cls in c.labels),
        }
        for c in contracts
    ]


url_option = click.option("--url", default=None, metavar="URL",
                          help="Remote service URL; default runs the service in-process.")


@click.group()
def cli() -> None:
    """Bytecode-level smart-contract vulnerability scanner."""


def main() -> None:
    """Entry point with the documented exit codes (1 input error, 2 internal)."""
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - surface as internal error
        _fail_internal(exc)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8730, show_default=True)
@click.option("--model", "model_path", default=None, type=click.Path(exists=True),
              help="Bundle to load as the resident model.")
def serve(host: str, port: int, model_path: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(model_path=model_path), host=host, port=port)


@cli.command()
@click.argument("bytecode_file", type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              help="Model bundle produced by `evmscan train`.")
@click.option("--dot", "dot_out", default=None, type=click.Path(),
              help="Also write the contract's control-flow graph as DOT.")
@click.option("--json", "as_json", is_flag=True, help="Print the full JSON report.")
@url_option
def scan(bytecode_file: str, model_path: str, dot_out: str | None, as_json: bool, url: str | None) -> None:
    """Scan one bytecode file for the four vulnerability classes."""
    try:
        hex_text = Path(bytecode_file).read_text(encoding="ascii")
        bundle_b64 = base64.b64encode(Path(model_path).read_bytes()).decode("ascii")
    except (OSError, UnicodeDecodeError) as exc:
        _fail_input(str(exc))
    payload = {
        "bytecode_hex": hex_text,
        "source_id": Path(bytecode_file).stem,
        "bundle_b64": bundle_b64,
        "include_dot": dot_out is not None,
    }
    try:
        with _client(url) as client:
            report = client.post("/scan", payload)
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    if dot_out is not None:
        Path(dot_out).write_text(report.pop("dot") or "", encoding="ascii")
    else:
        report.pop("dot", None)
    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        click.echo(f"{report['source_id']}: {report['opcode_count']} opcodes, "
                   f"{report['block_count']} blocks, {report['analysis_seconds']:.4f}s")
        for cls, verdict in report["verdicts"].items():
            prob = report["probabilities"][cls]
            mark = "VULNERABLE" if verdict else "clean"
            click.echo(f"  {cls:4s} p={prob:.4f}  {mark}")


@cli.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--features", type=click.Choice(["tfidf", "cfg", "full"]), default="full", show_default=True)
@click.option("--seed", default=0, show_default=True, help="Seed for encoder init and classifier config.")
@click.option("--encoder-weights", "encoder_weights", default=None, type=click.Path(exists=True),
              help="Interchange weight file from an external trainer (default: seeded random).")
@click.option("--workers", default=1, show_default=True, help="Parallel featurization workers.")
@url_option
def train(corpus_dir: str, labels: str, out_path: str, features: str, seed: int,
          encoder_weights: str | None, workers: int, url: str | None) -> None:
    """Train a model bundle on a labeled corpus directory."""
    payload = {
        "contracts": _read_corpus_payload(corpus_dir, labels),
        "features": features,
        "encoder": {"seed": seed},
        "gbdt": {"seed": seed},
        "workers": workers,
    }
    if encoder_weights is not None:
        payload["encoder_weights_b64"] = base64.b64encode(Path(encoder_weights).read_bytes()).decode("ascii")
    try:
        with _client(url) as client:
            result = client.post("/train", payload)
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    Path(out_path).write_bytes(base64.b64decode(result["bundle_b64"]))
    click.echo(f"trained on {result['n_contracts']} contracts "
               f"(feature_dim={result['feature_dim']}, positives={result['positives_per_class']})")
    click.echo(f"bundle written to {out_path}")


@cli.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Print the full JSON report.")
@click.option("--workers", default=1, show_default=True, help="Parallel featurization workers.")
@url_option
def eval_cmd(model_path: str, corpus_dir: str, labels: str, as_json: bool, workers: int,
             url: str | None) -> None:
    """Evaluate a model bundle against a labeled corpus."""
    payload = {
        "contracts": _read_corpus_payload(corpus_dir, labels),
        "bundle_b64": base64.b64encode(Path(model_path).read_bytes()).decode("ascii"),
        "workers": workers,
    }
    try:
        with _client(url) as client:
            report = client.post("/eval", payload)
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
        return
    click.echo(f"{report['n_contracts']} contracts, "
               f"mean analysis time {report['mean_analysis_seconds']:.4f}s")
    for cls, m in report["per_class"].items():
        click.echo(f"  {cls:4s} precision={m['precision']:.4f} recall={m['recall']:.4f} f1={m['f1']:.4f} "
                   f"(tp={m['tp']} fp={m['fp']} fn={m['fn']} tn={m['tn']})")
    click.echo(f"  macro precision={report['macro_precision']:.4f} "
               f"recall={report['macro_recall']:.4f} f1={report['macro_f1']:.4f}")


@cli.command()
@click.option("--n", "n", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@url_option
def synth(n: int, seed: int, out_dir: str, url: str | None) -> None:
    """Generate a labeled synthetic corpus into a directory."""
    try:
        with _client(url) as client:
            result = client.post("/synth", {"n": n, "seed": seed})
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    from .corpus import LabeledContract, write_corpus
    from .fragments import VulnClass

    contracts = [
        LabeledContract(
            contract_id=c["contract_id"],
            bytecode_hex=c["bytecode_hex"],
            labels=frozenset(VulnClass.from_name(name) for name in c["labels"]),
        )
        for c in result["contracts"]
    ]
    labels_path = write_corpus(contracts, out_dir)
    click.echo(f"wrote {len(contracts)} contracts to {out_dir} (labels: {labels_path})")


@cli.command("dump-fragments")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@url_option
def dump_fragments_cmd(corpus_dir: str, out_path: str, url: str | None) -> None:
    """Dump per-class fragment token records for external trainers."""
    payload = {"contracts": _read_corpus_payload(corpus_dir, None)}
    try:
        with _client(url) as client:
            result = client.post("/fragments", payload)
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    Path(out_path).write_text("\n".join(result["lines"]) + ("\n" if result["lines"] else ""), encoding="ascii")
    click.echo(f"wrote {result['n_records']} fragment records to {out_path}")


@cli.command()
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the table to a file instead of stdout.")
@url_option
def vocab(out_path: str | None, url: str | None) -> None:
    """Print or write the 80-symbol vocabulary table (shared with trainers)."""
    try:
        with _client(url) as client:
            result = client.get("/vocab")
    except ServiceError as exc:
        _fail_input(exc.detail) if exc.status_code < 500 else _fail_internal(exc)
    text = "\n".join(result["symbols"]) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text, encoding="ascii")
        click.echo(f"wrote {len(result['symbols'])} symbols to {out_path} (sha256 {result['sha256']})")
    else:
        click.echo(text, nl=False)


def _fail_internal(exc: Exception) -> None:
    click.echo(f"internal error: {exc}", err=True)
    sys.exit(2)


if __name__ == "__main__":
    main()
