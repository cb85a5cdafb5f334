"""Pairwise-comparison worth estimation (Bradley-Terry / pairwise Plackett-Luce
via minorization-maximization), correlation measures, and the bundled
listening-study results table."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.stats import rankdata

OUTCOMES = ("a", "b", "tie")


class NoDataError(ValueError):
    """No comparisons to fit."""


@dataclass(frozen=True)
class PairwiseComparison:
    item_a: str
    item_b: str
    outcome: str  # "a" wins, "b" wins, or "tie"

    def __post_init__(self):
        if self.item_a == self.item_b:
            raise ValueError("self-comparison is not allowed")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")


@dataclass
class WorthVector:
    """Log-worths anchored so the maximum is exactly 0 (per connected component)."""

    worths: dict[str, float]
    components: tuple[tuple[str, ...], ...]

    @property
    def connected(self) -> bool:
        return len(self.components) <= 1

    def ordering(self) -> list[str]:
        return sorted(self.worths, key=lambda item: (-self.worths[item], item))


def _connected_components(adjacency: np.ndarray) -> list[list[int]]:
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    components = []
    for start in range(n):
        if seen[start]:
            continue
        stack, members = [start], [start]
        seen[start] = True
        while stack:
            node = stack.pop()
            for nbr in np.nonzero(adjacency[node])[0]:
                if not seen[nbr]:
                    seen[nbr] = True
                    members.append(nbr)
                    stack.append(nbr)
        components.append(sorted(members))
    return components


def _fit_component(wins: np.ndarray, max_iters: int, tol: float) -> np.ndarray:
    """MM iterations for one connected component; returns log-worths, max = 0."""
    n = wins.shape[0]
    if n == 1:
        return np.zeros(1)
    total_wins = wins.sum(axis=1)
    matches = wins + wins.T
    never_wins = total_wins == 0.0
    worth = np.ones(n)
    for _ in range(max_iters):
        pair_sums = worth[:, None] + worth[None, :]
        denom = np.where(matches > 0, matches / np.where(pair_sums > 0, pair_sums, 1.0), 0.0).sum(axis=1)
        new = np.where(never_wins | (denom == 0.0), 0.0, total_wins / np.where(denom > 0, denom, 1.0))
        positive = new > 0
        scale = new[positive].max() if positive.any() else 1.0
        new = new / scale
        both = positive & (worth > 0)
        delta = np.max(np.abs(np.log(new[both]) - np.log(worth[both]))) if both.any() else 0.0
        worth = new
        if delta < tol:
            break
    with np.errstate(divide="ignore"):
        logs = np.log(worth)
    finite = np.isfinite(logs)
    if finite.any():
        logs[finite] -= logs[finite].max()
    return logs


def fit_plackett_luce(
    comparisons: list[PairwiseComparison], max_iters: int = 10000, tol: float = 1e-8
) -> WorthVector:
    """Maximum-likelihood worths from pairwise outcomes; ties count half a win
    for each side. Disconnected comparison graphs get per-component fits plus a
    warning. Items that never win come back with -inf log-worth."""
    if not comparisons:
        raise NoDataError("no comparisons given")
    items = sorted({c.item_a for c in comparisons} | {c.item_b for c in comparisons})
    index = {item: i for i, item in enumerate(items)}
    n = len(items)
    wins = np.zeros((n, n))
    for comp in comparisons:
        i, j = index[comp.item_a], index[comp.item_b]
        if comp.outcome == "a":
            wins[i, j] += 1.0
        elif comp.outcome == "b":
            wins[j, i] += 1.0
        else:
            wins[i, j] += 0.5
            wins[j, i] += 0.5

    components = _connected_components((wins + wins.T) > 0)
    if len(components) > 1:
        warnings.warn(
            f"comparison graph has {len(components)} components; fitting each separately",
            stacklevel=2,
        )
    worths: dict[str, float] = {}
    for members in components:
        logs = _fit_component(wins[np.ix_(members, members)], max_iters, tol)
        for local, global_i in enumerate(members):
            worths[items[global_i]] = float(logs[local])
    nonwinners = [item for item, value in worths.items() if not np.isfinite(value)]
    if nonwinners:
        warnings.warn(f"items with no wins have -inf log-worth: {nonwinners}", stacklevel=2)
    component_items = tuple(tuple(items[i] for i in members) for members in components)
    return WorthVector(worths, component_items)


def pearson(x, y) -> float:
    """Pearson product-moment correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ValueError("need equal-length sequences of at least 3 values")
    xc = x - x.mean()
    yc = y - y.mean()
    var_x = float(xc @ xc)
    var_y = float(yc @ yc)
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("correlation undefined for a zero-variance sequence")
    return float((xc @ yc) / np.sqrt(var_x * var_y))


def spearman(x, y) -> float:
    """Pearson correlation on fractional ranks (ties get average ranks)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ValueError("need equal-length sequences of at least 3 values")
    return pearson(rankdata(x), rankdata(y))


def load_comparisons(path) -> list[PairwiseComparison]:
    """Read an `item_a,item_b,outcome` CSV (outcome in a|b|tie)."""
    comparisons = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"item_a", "item_b", "outcome"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"comparisons CSV needs columns {sorted(required)}")
        for row in reader:
            comparisons.append(
                PairwiseComparison(row["item_a"], row["item_b"], row["outcome"].strip())
            )
    return comparisons


@dataclass(frozen=True)
class ListeningStudyRow:
    """One distortion configuration from the bundled pairwise listening study:
    its fitted log-worth and the FAD / SDR scores measured for it."""

    distortion: str
    params: str
    worth: float
    fad: float
    sdr_db: float

    @property
    def condition(self) -> str:
        return f"{self.distortion}({self.params})"


def listening_study_table() -> list[ListeningStudyRow]:
    """The bundled listening-study results (one row per evaluated configuration)."""
    text = resources.files("fadtk").joinpath("data/listening_study.csv").read_text("utf-8")
    rows = []
    for record in csv.DictReader(text.splitlines()):
        rows.append(
            ListeningStudyRow(
                distortion=record["distortion"],
                params=record["params"],
                worth=float(record["worth"]),
                fad=float(record["fad"]),
                sdr_db=float(record["sdr"]),
            )
        )
    return rows
