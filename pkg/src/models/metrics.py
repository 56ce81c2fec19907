"""Models for evaluation results."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

REPORT_COLUMNS = ["split", "class", "part", "kld", "sim", "nss"]
CURVE_COLUMNS = ["threshold", "precision", "recall", "fmeasure"]


class MetricRow(BaseModel):
    """KLD/SIM/NSS of one predicted part channel against its ground truth."""

    split: str
    affordance: str = Field(alias="class")
    part: str
    kld: float
    sim: float
    nss: float
    sample_id: str = ""
    branch: str = "non_interactive"
    nss_degenerate: bool = False

    model_config = ConfigDict(populate_by_name=True)

    def as_record(self) -> Dict[str, object]:
        return {
            "split": self.split,
            "class": self.affordance,
            "part": self.part,
            "kld": self.kld,
            "sim": self.sim,
            "nss": self.nss,
        }


@dataclass
class CurveSamples:
    """Precision, recall and F-measure at each threshold."""

    thresholds: List[float]
    precision: List[float]
    recall: List[float]
    fmeasure: List[float]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "threshold": self.thresholds,
                "precision": self.precision,
                "recall": self.recall,
                "fmeasure": self.fmeasure,
            },
            columns=CURVE_COLUMNS,
        )


@dataclass
class MetricReport:
    """Per-row metrics with per-class, per-part and overall means.

    Averaging is per image first, then the arithmetic mean over rows.
    """

    rows: pd.DataFrame
    per_class: pd.DataFrame
    per_part: pd.DataFrame
    overall: pd.DataFrame
    curves: Optional[CurveSamples] = None
    notes: List[str] = field(default_factory=list)
