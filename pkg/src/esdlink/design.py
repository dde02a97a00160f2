"""Exhaustive (n, k) sweeps and constrained design selection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .analytics import (
    N_CAP,
    EsdDesign,
    Feasibility,
    LinkMetrics,
    bb84_effective_detection,
    default_postprocessing,
    esd_effective,
    feasibility,
    link_metrics,
)
from .params import DetectorParams, LinkParams, effective_deflection


class InfeasibleDesignError(Exception):
    """No grid point satisfies the query constraints."""


class Objective(str, Enum):
    MAX_NESR = "max_nesr"
    MIN_QBER = "min_qber"
    MAX_RATE = "max_rate"


@dataclass(frozen=True)
class DesignPoint:
    design: EsdDesign
    metrics: LinkMetrics


@dataclass(frozen=True)
class DesignQuery:
    objective: Objective = Objective.MAX_NESR
    n_max: int = 9
    qber_ceiling: float | None = None
    nesr_floor: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        for name in ("qber_ceiling", "nesr_floor"):
            value = getattr(self, name)
            if value is not None and not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


def grid(n_max: int) -> list[EsdDesign]:
    return [EsdDesign(n, k) for n in range(n_max + 1) for k in range(n + 1)]


def sweep(
    t: float,
    params: LinkParams,
    n_max: int,
    *,
    n_cap: int = N_CAP,
    effective_detection: Callable[[float, DetectorParams], float] = bb84_effective_detection,
    postprocessing: Callable[[float], float] = default_postprocessing,
) -> list[DesignPoint]:
    """Metrics for every 0 <= k <= n <= n_max, ordered by (n, k)."""
    if n_max > n_cap:
        raise ValueError(f"n_max={n_max} exceeds the cap {n_cap}")
    return [DesignPoint(d, link_metrics(t, d, params, effective_detection, postprocessing))
            for d in grid(n_max)]


def _score(point: DesignPoint, objective: Objective) -> float | None:
    m = point.metrics
    if objective is Objective.MAX_NESR:
        return m.nesr_logit
    if objective is Objective.MIN_QBER:
        return None if m.qber is None else -m.qber
    return m.rate


def _admissible(point: DesignPoint, query: DesignQuery) -> bool:
    m = point.metrics
    if query.qber_ceiling is not None and (m.qber is None or not m.qber < query.qber_ceiling):
        return False
    if query.nesr_floor is not None and (m.nesr is None or not m.nesr >= query.nesr_floor):
        return False
    return True


def select(points: list[DesignPoint], query: DesignQuery) -> DesignPoint:
    """Best admissible point; earlier (smaller n, then k) wins ties."""
    best: DesignPoint | None = None
    best_score = -math.inf
    for point in points:
        if not _admissible(point, query):
            continue
        score = _score(point, query.objective)
        if score is None:
            continue
        if best is None or score > best_score:
            best, best_score = point, score
    if best is None:
        raise InfeasibleDesignError("no design in the grid satisfies the constraints")
    return best


def optimize(t: float, params: LinkParams, query: DesignQuery, **kwargs) -> DesignPoint:
    # NESR is ranked by its log odds, which keeps ordering past NESR == 1.0 in floating point
    return select(sweep(t, params, query.n_max, **kwargs), query)


@dataclass(frozen=True)
class FeasibilityReport:
    gate_ok: bool
    p: float
    e_p: float
    budget: Feasibility

    @property
    def feasible(self) -> bool:
        return self.gate_ok and self.budget.feasible

    def lines(self) -> list[str]:
        return [
            f"gate_condition={'pass' if self.gate_ok else 'fail'} (P={self.p!r} vs e_P={self.e_p!r})",
            f"error_budget={'pass' if self.budget.feasible else 'fail'} "
            f"(e_C bound={self.budget.bound!r})",
            f"nesr_threshold={self.budget.nesr_threshold!r}",
            f"feasible={str(self.feasible).lower()}",
        ]


def feasibility_report(params: LinkParams) -> FeasibilityReport:
    return FeasibilityReport(
        gate_ok=esd_effective(params.gate, params.source),
        p=effective_deflection(params.gate),
        e_p=params.source.e_p,
        budget=feasibility(params.protocol, params.detector),
    )
