"""Training flow: batches, optimizer steps, loss log and checkpoint."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from prefect import flow, get_run_logger

from src.models.config import TrainConfig
from src.models.splits import SplitManifest
from src.models.trace import DEQTrace
from src.tasks.data.dataset import load_pairs
from src.tasks.evaluation.diagnostics import write_trace_csv
from src.tasks.training.checkpoint import build_model, restore_training_state, save_training_state
from src.tasks.training.step import LOSS_NAMES, sample_batch, train_step
from src.utils.errors import DataError, NumericalDivergenceError
from src.utils.io.atomic import atomic_write
from src.utils.io.json import load_json
from src.utils.io.paths import get_manifest_path

LOSS_LOG = "loss_log.csv"
LOSS_COLUMNS = ["step", *LOSS_NAMES]
CHECKPOINT_DIR = "checkpoint"
TRAIN_TRACES = "train_traces.csv"
DIVERGENCE_TRACES = "divergence_traces.csv"


def load_manifest(data_dir: Union[str, Path], kind: str) -> SplitManifest:
    """Read the split manifest of ``kind`` from a dataset directory."""
    raw = load_json(get_manifest_path(data_dir, kind))
    try:
        return SplitManifest.model_validate(raw)
    except ValueError as e:
        raise DataError(f"{get_manifest_path(data_dir, kind)}: invalid split manifest: {e}") from None


def read_loss_log(path: Union[str, Path], before_step: Optional[int] = None) -> List[Dict[str, float]]:
    """Rows of an existing loss log, optionally only those before ``before_step``."""
    path = Path(path)
    if not path.exists():
        return []
    frame = pd.read_csv(path)
    if before_step is not None:
        frame = frame[frame["step"] < before_step]
    return frame.to_dict(orient="records")


def write_loss_log(path: Union[str, Path], rows: List[Dict[str, float]]) -> Path:
    with atomic_write(path) as f:
        pd.DataFrame(rows, columns=LOSS_COLUMNS).to_csv(f, index=False)
    return Path(path)


@flow(name="train_model")
def training_flow(
    data_dir: Union[str, Path],
    run_dir: Union[str, Path],
    config: Dict[str, Any],
    resume: Optional[Union[str, Path]] = None,
    keep_traces: bool = False,
) -> Dict[str, Any]:
    """
    Train the affordance network on the train subset of a split.

    Args:
        data_dir: Dataset root written by the generation flow
        run_dir: Output directory for the loss log and checkpoint
        config: Training configuration as a plain mapping
        resume: Checkpoint directory to continue from; its step count is the first step run
        keep_traces: Also write every solver trace of the run to train_traces.csv

    Flow steps:
        1. Load the split manifest and its training pairs
        2. Build or restore model and optimizer
        3. Run optimizer steps, logging losses
        4. Save the checkpoint and loss log

    Returns:
        Summary with the final step, last losses and written paths

    Raises:
        NumericalDivergenceError: On a non-finite loss, after dumping the traces so far
    """
    logger = get_run_logger()
    cfg = TrainConfig.from_dict(config)
    run_dir = Path(run_dir)

    # Step 1: Data
    manifest = load_manifest(data_dir, cfg.split.value)
    pairs = load_pairs(data_dir, manifest.train)
    logger.info(f"Training on {len(pairs)} {cfg.split.value} pairs, batch {cfg.batch_size}, {cfg.steps} steps")

    # Step 2: Model
    if resume is not None:
        model, optimizer, _, checkpoint = restore_training_state(resume, cfg)
        start = checkpoint.step
    else:
        model, optimizer = build_model(cfg)
        start = 0
    log_path = run_dir / LOSS_LOG
    rows = read_loss_log(log_path, before_step=start) if resume is not None else []
    if start >= cfg.steps:
        logger.warning(f"Checkpoint is already at step {start} of {cfg.steps}; nothing to train")

    # Step 3: Steps
    traces: List[DEQTrace] = []
    for step in range(start, cfg.steps):
        batch = sample_batch(pairs, cfg.batch_size, step, cfg.seed, cfg.flip)
        try:
            result = train_step(model, optimizer, batch, cfg)
        except NumericalDivergenceError as e:
            dump = write_trace_csv(traces + e.traces, run_dir / DIVERGENCE_TRACES)
            write_loss_log(log_path, rows)
            logger.error(f"❌ Training diverged at step {step}; solver traces in {dump}")
            raise
        rows.append({"step": step, **result.losses})
        if keep_traces:
            traces.extend(result.traces)
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            logger.info(f"step {step}: " + " ".join(f"{k}={v:.5f}" for k, v in result.losses.items()))

    # Step 4: Outputs
    checkpoint_dir = run_dir / CHECKPOINT_DIR
    save_training_state(checkpoint_dir, model, optimizer, cfg, max(start, cfg.steps))
    write_loss_log(log_path, rows)
    summary: Dict[str, Any] = {
        "step": max(start, cfg.steps),
        "losses": rows[-1] if rows else {},
        "checkpoint": checkpoint_dir,
        "loss_log": log_path,
    }
    if keep_traces:
        summary["traces"] = write_trace_csv(traces, run_dir / TRAIN_TRACES)
    logger.info(f"✓ Training finished at step {summary['step']}")
    return summary
