"""Per-iteration metric records for the learners."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunLog:
    """Rows of ``iter, wall_ms`` followed by learner-specific metrics.

    ``iter`` must strictly increase. ``wall_ms`` is measured from the
    construction of the log.
    """

    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._t0 = time.perf_counter()

    def append(self, it: int, **metrics) -> None:
        if self.rows and it <= self.rows[-1]["iter"]:
            raise ValueError(f"iteration {it} does not follow {self.rows[-1]['iter']}")
        unknown = set(metrics) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown metrics {sorted(unknown)}")
        row = {"iter": it, "wall_ms": round(1000 * (time.perf_counter() - self._t0), 3)}
        row.update({c: metrics.get(c, float("nan")) for c in self.columns})
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def last(self, name: str):
        return self.rows[-1][name] if self.rows else None

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path, include_wall: bool = True) -> None:
        """Write the log. Without wall times the file is reproducible bit-for-bit."""
        fields = ["iter"] + (["wall_ms"] if include_wall else []) + list(self.columns)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating))
                                     else v) for k, v in row.items()})
