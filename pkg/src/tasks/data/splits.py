"""Tasks for building train/val/test split manifests."""

import logging
import math
from typing import Dict, Iterable, List, Tuple, Union

from prefect import task
from prefect.cache_policies import NONE

from src.constants import defaults
from src.models.annotations import AnnotationRecord
from src.models.splits import SplitKind, SplitManifest
from src.numeric import SplitMix64
from src.utils.errors import DataError

logger = logging.getLogger(__name__)


def _pairs(records: Iterable[AnnotationRecord]) -> Dict[str, AnnotationRecord]:
    """One record per pair id; both images of a pair share their labels."""
    pairs: Dict[str, AnnotationRecord] = {}
    for record in records:
        pairs.setdefault(record.pair_id, record)
    return dict(sorted(pairs.items()))


def _split_held_out(ids: List[str]) -> Tuple[List[str], List[str]]:
    """Held-out ids split 2:1 into (test, val), val rounded down."""
    n_val = len(ids) // 3
    return ids[n_val:], ids[:n_val]


def _seen(ids: List[str], rng: SplitMix64) -> Tuple[List[str], List[str], List[str]]:
    ids = rng.shuffled(ids)
    n_train = math.floor(len(ids) * defaults.SEEN_TRAIN_FRACTION)
    n_val = math.floor(len(ids) * defaults.SEEN_VAL_FRACTION)
    return ids[:n_train], ids[n_train : n_train + n_val], ids[n_train + n_val :]


def _by_label(
    pairs: Dict[str, AnnotationRecord], attribute: str, rng: SplitMix64
) -> Tuple[List[str], List[str], List[str], Dict[str, List[str]]]:
    labels = sorted({getattr(record, attribute) for record in pairs.values()})
    if len(labels) < 2:
        raise DataError(f"cannot hold out {attribute}: only {len(labels)} distinct label(s)")
    n_held = min(max(1, round(len(labels) * defaults.HELD_OUT_FRACTION)), len(labels) - 1)
    shuffled = rng.shuffled(labels)
    held_out = set(shuffled[:n_held])

    train = [pid for pid, record in pairs.items() if getattr(record, attribute) not in held_out]
    held_ids = rng.spawn(1).shuffled([pid for pid in pairs if pid not in set(train)])
    test, val = _split_held_out(held_ids)
    if not test:
        raise DataError(f"held-out {attribute} labels {sorted(held_out)} leave no test pairs")
    partition = {"train": sorted(set(labels) - held_out), "held_out": sorted(held_out)}
    return train, val, test, partition


@task(name="build_split", cache_policy=NONE)
def build_split(
    records: Iterable[AnnotationRecord], kind: Union[SplitKind, str], seed: int
) -> SplitManifest:
    """Partition pairs for one evaluation setting.

    Args:
        records: Annotation records; pairs are identified by ``pair_id``
        kind: ``seen`` (7:2:1 train:test:val over pairs), ``obj_unseen`` or ``aff_unseen``
            (labels partitioned, held-out pairs split 2:1 test:val)
        seed: Shuffling seed; the same records and seed give the same manifest

    Raises:
        DataError: If there are no records or the labels cannot be partitioned
    """
    kind = SplitKind(kind)
    pairs = _pairs(records)
    if not pairs:
        raise DataError("cannot split an empty dataset")
    rng = SplitMix64(seed).spawn(list(SplitKind).index(kind))

    partition: Dict[str, List[str]] = {}
    if kind == SplitKind.SEEN:
        train, val, test = _seen(list(pairs), rng)
    elif kind == SplitKind.OBJ_UNSEEN:
        train, val, test, partition = _by_label(pairs, "object_label", rng)
    else:
        train, val, test, partition = _by_label(pairs, "affordance_label", rng)

    manifest = SplitManifest(kind=kind, seed=seed, train=train, val=val, test=test, partition=partition)
    logger.info(f"Split {kind.value}: {len(train)} train / {len(val)} val / {len(test)} test")
    return manifest
