"""Command line entry point: train, eval, predict, serve.

Option precedence is CLI flags > config file (flat JSON object keyed by
option name) > built-in defaults. Commands that write outputs also record
the full effective configuration next to them. Exit codes: 0 success,
1 user error (bad inputs, missing files), 2 internal error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .labels import CANONICAL_LABELS

logger = logging.getLogger(__name__)

USER_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    NotADirectoryError,
    ValueError,  # manifest/split/config/decode errors subclass ValueError
)


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"config file {path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise click.ClickException(f"config file {path}: expected a JSON object")
    return data


def _effective(ctx: click.Context) -> dict:
    """Merge defaults < config file < explicit flags for this command."""
    merged = dict(ctx.params)
    config_path = merged.pop("config", None)
    if config_path:
        file_values = _load_config_file(config_path)
        unknown = set(file_values) - set(merged)
        if unknown:
            raise click.ClickException(
                f"config file {config_path}: unknown keys {sorted(unknown)}"
            )
        for key, value in file_values.items():
            if ctx.get_parameter_source(key) != click.core.ParameterSource.COMMANDLINE:
                merged[key] = value
    return merged


def _record_config(out_dir: Path, command: str, effective: dict) -> None:
    payload = {"command": command}
    payload.update(
        {k: (str(v) if isinstance(v, Path) else v) for k, v in effective.items()}
    )
    (out_dir / "config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )


@click.group()
def cli():
    """Room-scene image classification pipeline."""
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )


_COMMON = [
    click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="JSON config file; flags override its values."),
    click.option("--seed", type=int, default=0, show_default=True,
                 help="Seed for every random choice."),
]


def common_options(func):
    for option in reversed(_COMMON):
        func = option(func)
    return func


@cli.command()
@click.option("--manifest", required=True, type=click.Path(dir_okay=False),
              help="Training manifest CSV (path,raw_tag).")
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for bundle, report, and config.")
@click.option("--backbone", default="inception_v3", show_default=True,
              help="Backbone kind (inception_v3, resnet, vgg, xception, tiny_test).")
@click.option("--pretrained/--no-pretrained", default=None,
              help="Start from generic-corpus backbone weights "
                   "[default: on, off for tiny_test].")
@click.option("--input-size", type=int, default=299, show_default=True,
              help="Square input edge length.")
@click.option("--head-width", type=int, default=1024, show_default=True)
@click.option("--dropout", type=float, default=0.5, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--rho", type=float, default=0.9, show_default=True)
@click.option("--epsilon", type=float, default=1e-7, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--epochs1", type=int, default=50, show_default=True,
              help="Epochs for the frozen-backbone stage.")
@click.option("--epochs2", type=int, default=50, show_default=True,
              help="Epochs for the end-to-end stage.")
@click.option("--train-fraction", type=str, default="9/10", show_default=True,
              help="Train share of the train/validation split (fraction or decimal).")
@click.option("--balance/--no-balance", default=True, show_default=True,
              help="Under-sample majority classes before splitting.")
@common_options
@click.pass_context
def train(ctx, **_):
    """Balance, split, train both stages, and export a model bundle."""
    from fractions import Fraction

    from .bundle import export_bundle
    from .inference import PreprocessConfig, load_image_arrays
    from .manifest import SplitSpec, load_manifest, split, undersample
    from .models import ArchitectureConfig, BackboneKind, build_classifier
    from .training import TrainingConfig, run_two_stage, seed_all

    p = _effective(ctx)
    out_dir = Path(p["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _record_config(out_dir, "train", p)

    backbone = BackboneKind(str(p["backbone"]))
    pretrained = p["pretrained"]
    if pretrained is None:
        pretrained = backbone is not BackboneKind.TINY_TEST

    manifest = load_manifest(p["manifest"])
    click.echo(f"loaded {len(manifest)} records: "
               + ", ".join(f"{l.value}={c}" for l, c in manifest.counts.items()))
    if p["balance"]:
        manifest = undersample(manifest, seed=p["seed"])
        click.echo(f"balanced to {len(manifest)} records "
                   f"({min(manifest.counts.values())} per class)")
    train_manifest, val_manifest = split(
        manifest, SplitSpec(train_fraction=Fraction(p["train_fraction"]), seed=p["seed"])
    )
    click.echo(f"split: {len(train_manifest)} train / {len(val_manifest)} validation")

    preprocess_config = PreprocessConfig(
        target_height=p["input_size"], target_width=p["input_size"]
    )
    train_data = load_image_arrays(train_manifest, preprocess_config)
    val_data = load_image_arrays(val_manifest, preprocess_config)

    architecture = ArchitectureConfig(
        backbone=backbone,
        input_shape=(p["input_size"], p["input_size"], 3),
        dropout_rate=p["dropout"],
        head_width=p["head_width"],
        pretrained=pretrained,
    )
    training_config = TrainingConfig(
        learning_rate=p["lr"],
        rho=p["rho"],
        epsilon=p["epsilon"],
        batch_size=p["batch_size"],
        epochs_stage1=p["epochs1"],
        epochs_stage2=p["epochs2"],
        seed=p["seed"],
    )
    seed_all(p["seed"])
    model = build_classifier(architecture)
    model, report = run_two_stage(model, train_data, val_data, training_config)

    report.write_jsonl(out_dir / "report.jsonl")
    bundle = export_bundle(
        model, preprocess_config, out_dir / "bundle", seed=p["seed"]
    )
    for record in report.records:
        click.echo(
            f"stage={record.stage} epoch={record.epoch} "
            f"loss={record.train_loss:.4f} acc={record.train_accuracy:.3f} "
            f"val_loss={record.val_loss:.4f} val_acc={record.val_accuracy:.3f}"
        )
    click.echo(f"bundle written to {bundle.path} ({bundle.bundle_id})")


@cli.command("eval")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(file_okay=False),
              help="Bundle directory produced by `train`.")
@click.option("--manifest", required=True, type=click.Path(dir_okay=False),
              help="Labeled test manifest CSV.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for report.json and config.json [default: bundle's parent].")
@click.option("--on-error", type=click.Choice(["abort", "skip"]), default="abort",
              show_default=True, help="Behavior for unreadable images.")
@common_options
@click.pass_context
def eval_command(ctx, **_):
    """Score a bundle against a labeled manifest; prints the metric table."""
    from .bundle import load_bundle
    from .manifest import load_manifest
    from .metrics import evaluate

    p = _effective(ctx)
    bundle = load_bundle(p["bundle_path"])
    manifest = load_manifest(p["manifest"])
    report = evaluate(bundle, manifest, on_error=p["on_error"])

    out_dir = Path(p["out"]) if p["out"] else Path(p["bundle_path"]).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    _record_config(out_dir, "eval", p)
    report.write_json(out_dir / "report.json")

    click.echo(report.table())
    click.echo(
        f"macro: precision={report.macro.precision:.4f} "
        f"recall={report.macro.recall:.4f} f1={report.macro.f1:.4f} "
        f"(n={report.sample_count}, skipped={report.skipped})"
    )
    click.echo(f"report written to {out_dir / 'report.json'}")


@cli.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(file_okay=False))
@click.option("--top", is_flag=True, default=False,
              help="Also print the winning class on a second line.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Optional directory for scores.json and config.json.")
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@common_options
@click.pass_context
def predict(ctx, **_):
    """Print the six-key score JSON for one image to stdout."""
    from .bundle import load_bundle
    from .inference import format_scores_json, top_label
    from .inference import predict as predict_scores

    p = _effective(ctx)
    bundle = load_bundle(p["bundle_path"])
    scores = predict_scores(bundle, Path(p["image"]).read_bytes())
    rendered = format_scores_json(scores)
    click.echo(rendered)
    if p["top"]:
        click.echo(f"top: {top_label(scores).value}")
    if p["out"]:
        out_dir = Path(p["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        _record_config(out_dir, "predict", p)
        (out_dir / "scores.json").write_text(rendered + "\n", encoding="utf-8")


@cli.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=5000, show_default=True)
@click.option("--max-upload-bytes", type=int, default=10 * 1024 * 1024, show_default=True)
@click.option("--timeout", type=float, default=30.0, show_default=True,
              help="Per-request timeout in seconds.")
@click.option("--concurrency", type=int, default=0, show_default=True,
              help="Max in-flight requests (0 = unlimited).")
@click.option("--cors-origin", "cors_origins", multiple=True, default=("*",),
              show_default=True, help="Allowed CORS origin (repeatable).")
@common_options
@click.pass_context
def serve(ctx, **_):
    """Load a bundle and serve the tagging endpoint until interrupted."""
    from .bundle import load_bundle
    from .service import ServiceConfig, run_server

    p = _effective(ctx)
    config = ServiceConfig(
        host=p["host"],
        port=p["port"],
        bundle_path=Path(p["bundle_path"]),
        max_upload_bytes=p["max_upload_bytes"],
        request_timeout_seconds=p["timeout"],
        worker_concurrency=p["concurrency"],
        cors_origins=tuple(p["cors_origins"]),
    )
    logger.info("effective config: %s", json.dumps(
        {k: (str(v) if isinstance(v, Path) else v) for k, v in p.items()},
        sort_keys=True,
    ))
    bundle = load_bundle(config.bundle_path)  # fail fast before binding
    try:
        run_server(config, bundle=bundle)
    except OSError as exc:
        raise click.ClickException(
            f"cannot bind {config.host}:{config.port}: {exc}"
        ) from exc


def main(argv=None) -> int:
    """Console entry point with 0/1/2 exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:
        logger.exception("internal error")
        click.echo(f"internal error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
