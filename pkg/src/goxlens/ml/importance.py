"""Cross-family feature-importance ranking against a placebo column.

Importance magnitudes are not comparable between model families (split gain
vs mean absolute gradient), so the report ranks features within each family
and only the ranks travel across families. A real feature whose importance
falls below the placebo's is treated as uninformative in that family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Set

from ..errors import DataError
from .dataset import PLACEBO

__all__ = ["ImportanceReport", "importance_report"]


@dataclass(frozen=True)
class ImportanceReport:
    """Per-family importance values, ranks, and placebo comparisons.

    `ranks[family]` maps each feature to 1..n_features with 1 = most
    important; ties break on column order so rankings are deterministic.
    """

    columns: List[str]
    placebo: str
    values: Dict[str, Dict[str, float]]
    ranks: Dict[str, Dict[str, int]]
    placebo_rank: Dict[str, int]
    features_below_placebo: Dict[str, Set[str]]

    @property
    def families(self) -> List[str]:
        return list(self.values)

    def to_dict(self) -> dict:
        """JSON-ready form (sets become sorted lists)."""
        return {
            "columns": list(self.columns),
            "placebo": self.placebo,
            "families": {
                fam: {
                    "values": dict(self.values[fam]),
                    "ranks": dict(self.ranks[fam]),
                    "placebo_rank": self.placebo_rank[fam],
                    "features_below_placebo": sorted(self.features_below_placebo[fam]),
                }
                for fam in self.values
            },
        }

    def rank_table(self) -> List[List[str]]:
        """Rows of "value (rank)" cells, one row per feature, one column
        per family."""
        rows = [["feature", *self.families]]
        for name in self.columns:
            cells = [name]
            for fam in self.families:
                cells.append(f"{self.values[fam][name]!r} ({self.ranks[fam][name]})")
            rows.append(cells)
        return rows


def _rank(columns: Sequence[str], importances: Sequence[float]) -> Dict[str, int]:
    # descending importance, column order breaks ties
    order = sorted(range(len(columns)), key=lambda j: (-importances[j], j))
    ranks = {}
    for pos, j in enumerate(order):
        ranks[columns[j]] = pos + 1
    return ranks


def importance_report(models: Sequence, placebo: str = PLACEBO) -> ImportanceReport:
    """Rank features per model family and locate the placebo.

    All models must share one column layout (i.e. come from the same
    dataset). A feature lands in `features_below_placebo` for a family when
    its importance is strictly smaller than the placebo's in that family.
    """
    if not models:
        raise DataError("importance_report needs at least one model")
    columns = list(models[0].columns)
    if placebo not in columns:
        raise DataError(f"placebo column {placebo!r} not in model columns")
    values: Dict[str, Dict[str, float]] = {}
    ranks: Dict[str, Dict[str, int]] = {}
    placebo_rank: Dict[str, int] = {}
    below: Dict[str, Set[str]] = {}
    for model in models:
        if list(model.columns) != columns:
            raise DataError(
                f"model {model.family!r} was trained on different columns"
            )
        if model.family in values:
            raise DataError(f"duplicate model family {model.family!r}")
        imp = [float(v) for v in model.importances]
        for name, v in zip(columns, imp):
            if not math.isfinite(v):
                raise DataError(f"non-finite importance for {name!r} in {model.family!r}")
        fam_values = dict(zip(columns, imp))
        fam_ranks = _rank(columns, imp)
        values[model.family] = fam_values
        ranks[model.family] = fam_ranks
        placebo_rank[model.family] = fam_ranks[placebo]
        cut = fam_values[placebo]
        below[model.family] = {
            name for name in columns if name != placebo and fam_values[name] < cut
        }
    return ImportanceReport(columns, placebo, values, ranks, placebo_rank, below)
