"""One-sided Mann-Whitney U (aligned > non-aligned) with effect sizes.

The p-value uses the normal approximation with the tie-corrected variance and
no continuity correction. ``exact_permutation_p`` enumerates labelings and is
kept as an independent check on small samples.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from .agents import DRIVERS, AgentSpec, cohorts

EXACT_MAX_N = 14

DRIVER_METRIC = {
    "loss_aversion": "las",
    "herding": "has",
    "wealth_diff": "aas",
    "mispricing": "mas",
}

DRIVER_LABELS = {
    "loss_aversion": "Loss Aversion",
    "herding": "Herding",
    "wealth_diff": "Wealth Differentiation",
    "mispricing": "Price Misalignment",
}


@dataclass(frozen=True)
class TestResult:
    U: float
    p_one_sided: float
    r_rb: float
    cliff_delta: float
    cles: float
    W: int
    L: int
    T: int
    n_A: int
    n_B: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = d.pop("p_one_sided")
        return d


def norm_sf(z: float) -> float:
    """Upper tail of the standard normal, 1 - Phi(z)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with tied values sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pairwise_counts(a: Sequence[float], b: Sequence[float]) -> tuple[int, int, int]:
    wins = losses = ties = 0
    for x in a:
        for y in b:
            if x > y:
                wins += 1
            elif x < y:
                losses += 1
            else:
                ties += 1
    return wins, losses, ties


def rank_u(a: Sequence[float], b: Sequence[float]) -> float:
    ranks = midranks(list(a) + list(b))
    n_a = len(a)
    return math.fsum(ranks[:n_a]) - n_a * (n_a + 1) / 2.0


def effect_sizes(u: float, wins: int, losses: int, n_a: int, n_b: int) -> tuple[float, float, float]:
    """(cles, rank-biserial, Cliff's delta), all oriented toward the first sample."""
    pairs = n_a * n_b
    cles = u / pairs
    return cles, 2.0 * cles - 1.0, (wins - losses) / pairs


def tie_corrected_variance(pooled: Sequence[float], n_a: int, n_b: int) -> float:
    n = n_a + n_b
    if n < 2:
        return 0.0
    tie_term = sum(t ** 3 - t for t in Counter(pooled).values())
    return (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))


def mann_whitney_one_sided(aligned: Sequence[float], non_aligned: Sequence[float]) -> TestResult:
    a = [float(x) for x in aligned]
    b = [float(y) for y in non_aligned]
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n_a, n_b = len(a), len(b)
    u = rank_u(a, b)
    wins, losses, ties = pairwise_counts(a, b)
    var = tie_corrected_variance(a + b, n_a, n_b)
    if var <= 0.0:
        return TestResult(u, 0.5, 0.0, 0.0, 0.5, wins, losses, ties, n_a, n_b, degenerate=True)
    z = (u - n_a * n_b / 2.0) / math.sqrt(var)
    cles, r_rb, delta = effect_sizes(u, wins, losses, n_a, n_b)
    return TestResult(u, norm_sf(z), r_rb, delta, cles, wins, losses, ties, n_a, n_b)


def exact_permutation_p(aligned: Sequence[float], non_aligned: Sequence[float]) -> float:
    """Share of all relabelings of the pooled values whose U reaches the observed U."""
    a, b = list(aligned), list(non_aligned)
    n_a, n = len(a), len(a) + len(b)
    if n > EXACT_MAX_N:
        raise ValueError(f"exact enumeration limited to {EXACT_MAX_N} pooled values, got {n}")
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    ranks = midranks(a + b)
    offset = n_a * (n_a + 1) / 2.0
    observed = math.fsum(ranks[:n_a]) - offset
    hits = total = 0
    for idx in itertools.combinations(range(n), n_a):
        total += 1
        if math.fsum(ranks[i] for i in idx) - offset >= observed - 1e-9:
            hits += 1
    return hits / total


def run_battery(scores: Mapping[int, Mapping[str, float]], population: Sequence[AgentSpec]) -> dict[str, TestResult]:
    """Test each driver's metric, aligned cohort against non-aligned."""
    report = {}
    for driver in DRIVERS:
        aligned, non_aligned = cohorts(list(population), driver)
        metric = DRIVER_METRIC[driver]
        missing = [i for i in aligned + non_aligned if i not in scores]
        if missing:
            raise KeyError(f"missing score rows for agents {missing}")
        report[driver] = mann_whitney_one_sided(
            [scores[i][metric] for i in aligned], [scores[i][metric] for i in non_aligned]
        )
    return report
