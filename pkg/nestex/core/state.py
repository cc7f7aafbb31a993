from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from nestex.core.metrics import METRICS, Report
from nestex.nn.nnkit import ModelParams
from nestex.utils.helpers import _clip


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev: Optional[Report] = None

    def log_line(self) -> str:
        """epoch, train loss, then dev F1 for TI TC AI AC PEI PEC, tab-separated."""
        cells = [str(self.epoch), f"{self.train_loss:.6f}"]
        cells += [f"{self.dev.f1(m):.4f}" if self.dev else "-" for m in METRICS]
        return "\t".join(cells)


@dataclass
class TrainState:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_score: float = float("-inf")
    best_snapshot: Optional[Dict[str, np.ndarray]] = None

    def update_from_epoch(self, record: EpochRecord, params: ModelParams) -> bool:
        """Records the epoch; keeps a parameter snapshot when dev mean F1 improves."""
        self.records.append(record)
        if record.dev is None:
            return False
        score = record.dev.mean_f1()
        if score > self.best_score:
            self.best_score = score
            self.best_epoch = record.epoch
            self.best_snapshot = params.snapshot()
            return True
        return False

    @property
    def losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    def log_text(self) -> str:
        header = "\t".join(["epoch", "loss"] + list(METRICS))
        return "\n".join([header] + [r.log_line() for r in self.records]) + "\n"

    def get_context_string(self) -> str:
        if not self.records:
            return "No epochs run"
        last = self.records[-1]
        parts = [f"EPOCHS: {len(self.records)}", f"LAST LOSS: {last.train_loss:.6f}"]
        if self.best_epoch is not None:
            parts.append(f"BEST EPOCH: {self.best_epoch}")
        if last.dev:
            parts.append("LAST DEV F1: " + " ".join(f"{m}={last.dev.f1(m):.3f}" for m in METRICS))
        return _clip("\n".join(parts), 1000)
