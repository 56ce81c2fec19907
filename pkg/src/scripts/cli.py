"""Command-line entry points for dataset generation, training, evaluation and inference."""

import logging
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click

from src.flows.evaluation.subflows import evaluation_flow
from src.flows.generation.subflows import dataset_generation_flow
from src.flows.inference.subflows import inference_flow
from src.flows.training.subflows import CHECKPOINT_DIR, training_flow
from src.models.config import RunConfig, TrainConfig
from src.models.splits import SplitKind
from src.tasks.evaluation.report import compare_reports
from src.utils.errors import ConfigError, VCRNetError
from src.utils.io.json import save_json
from src.utils.io.paths import RESOLVED_CONFIG, sanitize_filename
from src.utils.settings import settings

logger = logging.getLogger(__name__)

PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "prefect", "click")
ABLATIONS = ("text", "pose", "apparent")
VARIANTS: Dict[str, Tuple[str, ...]] = {
    "full": (),
    "w/o text": ("text",),
    "w/o pose": ("pose",),
    "w/o app": ("apparent",),
}
SPLIT_CHOICE = click.Choice([kind.value for kind in SplitKind])


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_resolved_config(
    output_dir: Path,
    command: str,
    seed: int,
    parameters: Dict[str, Any],
    train: Optional[TrainConfig] = None,
) -> Path:
    """Record every effective value of a run next to its outputs."""
    run = RunConfig(
        command=command,
        seed=seed,
        output_dir=output_dir.as_posix(),
        parameters={k: (v.as_posix() if isinstance(v, Path) else v) for k, v in parameters.items()},
        train=train,
        versions=package_versions(),
    )
    path = output_dir / RESOLVED_CONFIG
    save_json(path, run.dump())
    return path


def resolve_train_config(
    config_path: Optional[str],
    split: Optional[str],
    ablate: Tuple[str, ...],
    steps: Optional[int],
    batch: Optional[int],
    lr: Optional[float],
    seed: Optional[int],
) -> TrainConfig:
    """Config file values with command-line flags applied on top."""
    overrides: Dict[str, Any] = {"split": split, "steps": steps, "batch": batch, "lr": lr, "seed": seed}
    if ablate:
        overrides["ablations"] = {name: True for name in ablate}
    if config_path is None:
        return TrainConfig.from_dict({"seed": settings.VCRNET_SEED}, overrides)
    return TrainConfig.from_file(config_path, overrides)


def describe_ablations(config: TrainConfig) -> str:
    paths = {"text": "text guidance", "pose": "DEQ pose path", "apparent": "apparent contact features"}
    return ", ".join(
        f"{paths[name]}: {'disabled' if getattr(config.ablations, name) else 'enabled'}" for name in ABLATIONS
    )


class VCRNetGroup(click.Group):
    """Click group that turns package errors into their exit codes."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except VCRNetError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"❌ {e}", err=True)
            ctx.exit(e.exit_code)


@click.group(name="vcrnet", cls=VCRNetGroup)
@click.option("--log-level", default=None, help="Logging level (defaults to VCRNET_LOG_LEVEL)")
def cli_group(log_level: Optional[str] = None) -> None:
    """Affordance grounding from interactive/non-interactive image pairs."""
    logging.basicConfig(
        level=(log_level or settings.VCRNET_LOG_LEVEL).upper(),
        format="%(asctime)s.%(msecs)03d | %(levelname)-8s | %(name)s - %(message)s",
        datefmt="%H:%M:%S",
    )


@cli_group.command(name="generate")
@click.option("--count", type=int, required=True, help="Number of image pairs")
@click.option("--seed", type=int, default=None, help="Master seed (defaults to VCRNET_SEED)")
@click.option("--out", "out_dir", default=None, help="Dataset directory (defaults to VCRNET_DATA_DIR)")
@click.option("--size", type=int, default=224, show_default=True, help="Image side in pixels")
def generate_cli(count: int, seed: Optional[int], out_dir: Optional[str], size: int) -> None:
    """Generate a synthetic dataset with split manifests."""
    seed = settings.VCRNET_SEED if seed is None else seed
    out = Path(out_dir) if out_dir else settings.VCRNET_DATA_DIR
    info = dataset_generation_flow(out, count, seed, size)
    write_resolved_config(out, "generate", seed, {"count": count, "size": size})
    click.echo(f"✅ Wrote {info['count']} pairs to {out}")


@cli_group.command(name="train")
@click.option("--data-dir", default=None, help="Dataset directory (defaults to VCRNET_DATA_DIR)")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON or YAML config")
@click.option("--split", type=SPLIT_CHOICE, default=None, help="Split kind to train on")
@click.option("--ablate", type=click.Choice(ABLATIONS), multiple=True, help="Remove a component (repeatable)")
@click.option("--steps", type=int, default=None, help="Total optimizer steps")
@click.option("--batch", type=int, default=None, help="Pairs per step")
@click.option("--lr", type=float, default=None, help="AdamW learning rate")
@click.option("--seed", type=int, default=None, help="Training seed")
@click.option("--run-dir", default=None, help="Output directory (defaults to VCRNET_RUNS_DIR/<name>)")
@click.option("--name", default="train", show_default=True, help="Run name under VCRNET_RUNS_DIR")
@click.option("--resume", type=click.Path(file_okay=False), default=None, help="Checkpoint to continue from")
@click.option("--traces/--no-traces", default=False, help="Write every training solver trace")
def train_cli(
    data_dir: Optional[str],
    config_path: Optional[str],
    split: Optional[str],
    ablate: Tuple[str, ...],
    steps: Optional[int],
    batch: Optional[int],
    lr: Optional[float],
    seed: Optional[int],
    run_dir: Optional[str],
    name: str,
    resume: Optional[str],
    traces: bool,
) -> None:
    """Train the network and write a checkpoint and loss log."""
    config = resolve_train_config(config_path, split, ablate, steps, batch, lr, seed)
    data = Path(data_dir) if data_dir else settings.VCRNET_DATA_DIR
    out = Path(run_dir) if run_dir else settings.VCRNET_RUNS_DIR / sanitize_filename(name)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(out, "train", config.seed, {"data_dir": data, "resume": resume}, config)
    click.echo(f"Config: split={config.split.value} batch={config.batch_size} steps={config.steps}")
    click.echo(f"Ablations: {describe_ablations(config)}")

    summary = training_flow(data, out, config.dump(), resume, traces)
    losses = summary["losses"]
    final = f" (l_total {losses['l_total']:.5f})" if losses else ""
    click.echo(f"✅ Trained to step {summary['step']}{final}; checkpoint in {summary['checkpoint']}")


@cli_group.command(name="eval")
@click.option("--checkpoint", type=click.Path(file_okay=False), required=True, help="Checkpoint directory")
@click.option("--data-dir", default=None, help="Dataset directory (defaults to VCRNET_DATA_DIR)")
@click.option("--split", type=SPLIT_CHOICE, default=None, help="Split kind (defaults to the training split)")
@click.option("--subset", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--out", "out_dir", default=None, help="Report directory (defaults to <checkpoint>/../eval)")
def eval_cli(
    checkpoint: str, data_dir: Optional[str], split: Optional[str], subset: str, out_dir: Optional[str]
) -> None:
    """Score a checkpoint and write metric reports and solver diagnostics."""
    data = Path(data_dir) if data_dir else settings.VCRNET_DATA_DIR
    out = Path(out_dir) if out_dir else Path(checkpoint).parent / "eval"
    out.mkdir(parents=True, exist_ok=True)
    written = evaluation_flow(data, checkpoint, out, split, subset)
    write_resolved_config(
        out, "eval", written["seed"], {"checkpoint": checkpoint, "data_dir": data, "split": split, "subset": subset}
    )
    overall = written["overall"]
    click.echo(
        f"✅ KLD {overall['kld']:.4f}  SIM {overall['sim']:.4f}  NSS {overall['nss']:.4f}; report in {out}"
    )


@cli_group.command(name="infer")
@click.option("--checkpoint", type=click.Path(file_okay=False), required=True, help="Checkpoint directory")
@click.option("--interactive-image", type=click.Path(dir_okay=False), required=True, help="PPM with the person")
@click.option("--non-interactive-image", type=click.Path(dir_okay=False), required=True, help="PPM of the object")
@click.option("--pose", type=click.Path(dir_okay=False), required=True, help="53×3 pose TNSR")
@click.option("--out", "out_dir", required=True, help="Output directory")
def infer_cli(
    checkpoint: str, interactive_image: str, non_interactive_image: str, pose: str, out_dir: str
) -> None:
    """Predict per-part contact heatmaps for one image pair."""
    out = Path(out_dir)
    result = inference_flow(checkpoint, interactive_image, non_interactive_image, pose, out)
    write_resolved_config(
        out,
        "infer",
        result["seed"],
        {
            "checkpoint": checkpoint,
            "interactive_image": interactive_image,
            "non_interactive_image": non_interactive_image,
            "pose": pose,
        },
    )
    click.echo(f"✅ Wrote {len(result['files'])} files to {out}")


@cli_group.command(name="ablate")
@click.option("--data-dir", default=None, help="Dataset directory (defaults to VCRNET_DATA_DIR)")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON or YAML config")
@click.option("--split", type=SPLIT_CHOICE, default=None, help="Split kind")
@click.option("--steps", type=int, default=None, help="Optimizer steps per variant")
@click.option("--out", "out_dir", default=None, help="Parent directory (defaults to VCRNET_RUNS_DIR/ablation)")
def ablate_cli(
    data_dir: Optional[str], config_path: Optional[str], split: Optional[str], steps: Optional[int], out_dir: Optional[str]
) -> None:
    """Train and evaluate the full model and each single-component ablation."""
    data = Path(data_dir) if data_dir else settings.VCRNET_DATA_DIR
    out = Path(out_dir) if out_dir else settings.VCRNET_RUNS_DIR / "ablation"
    reports = {}
    for variant, ablate in VARIANTS.items():
        config = resolve_train_config(config_path, split, ablate, steps, None, None, None)
        run_dir = out / sanitize_filename(variant.replace("/", ""))
        run_dir.mkdir(parents=True, exist_ok=True)
        write_resolved_config(run_dir, "ablate", config.seed, {"data_dir": data, "variant": variant}, config)
        click.echo(f"→ {variant}: {describe_ablations(config)}")
        training_flow(data, run_dir, config.dump())
        evaluation_flow(data, run_dir / CHECKPOINT_DIR, run_dir / "eval")
        reports[variant] = run_dir / "eval"
    comparison = out / "comparison.csv"
    compare_reports(reports, comparison)
    click.echo(f"✅ Compared {len(reports)} variants in {comparison}")


@cli_group.command(name="compare")
@click.option("--report", "reports", multiple=True, required=True, help="LABEL=REPORT_DIR (repeatable)")
@click.option("--out", "out_path", required=True, help="Comparison CSV")
def compare_cli(reports: Tuple[str, ...], out_path: str) -> None:
    """Put the overall rows of several evaluation reports in one table."""
    labelled = {}
    for entry in reports:
        label, sep, directory = entry.partition("=")
        if not sep or not label or not directory:
            raise ConfigError(f"--report expects LABEL=REPORT_DIR, got {entry!r}")
        labelled[label] = directory
    comparison = compare_reports(labelled, out_path)
    click.echo(f"✅ Compared {len(comparison)} rows in {out_path}")


cli = cli_group

if __name__ == "__main__":
    cli()
