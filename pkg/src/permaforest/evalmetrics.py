"""Multi-objective evaluation metrics: Pareto extraction and preference
monotonicity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class ParetoPoint:
    carbon: float
    thaw: float
    lam: float = 0.0
    policy: str = ""


def dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    """a dominates b under component-wise maximization."""
    return (a.carbon >= b.carbon and a.thaw >= b.thaw
            and (a.carbon > b.carbon or a.thaw > b.thaw))


def extract_pareto_front(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Nondominated subset, ordered by carbon return.

    Sort-and-scan (O(n log n)): descending by carbon, a point survives iff it
    improves the best thaw seen so far or exactly duplicates the point that
    set it (equal points do not dominate each other).
    """
    order = sorted(points, key=lambda p: (-p.carbon, -p.thaw))
    front: list[ParetoPoint] = []
    best_thaw = -np.inf
    best_carbon = -np.inf
    for p in order:
        if p.thaw > best_thaw:
            front.append(p)
            best_thaw = p.thaw
            best_carbon = p.carbon
        elif p.thaw == best_thaw and p.carbon == best_carbon:
            front.append(p)
    return sorted(front, key=lambda p: (p.carbon, p.thaw))


def lambda_monotonicity_violations(mean_carbon_by_lambda: list[tuple[float, float]]) -> float:
    """Fraction of adjacent preference pairs where raising the carbon weight
    strictly lowered the mean carbon return.

    Input pairs are (lambda, mean carbon return); they are sorted by lambda
    here to enforce the ascending-grid precondition.
    """
    if len(mean_carbon_by_lambda) < 2:
        raise ContractViolation("monotonicity needs a preference grid of size >= 2")
    ordered = sorted(mean_carbon_by_lambda, key=lambda t: t[0])
    carbon = [c for _, c in ordered]
    violations = sum(1 for a, b in zip(carbon, carbon[1:]) if b < a)
    return violations / (len(carbon) - 1)


def hypervolume(points: list[ParetoPoint], reference: tuple[float, float]) -> float:
    """Area dominated by the nondominated set above a reference point
    (both objectives maximized). Points at or below the reference in either
    objective contribute nothing."""
    ref_c, ref_t = reference
    front = [p for p in extract_pareto_front(points)
             if p.carbon > ref_c and p.thaw > ref_t]
    seen = set()
    unique = []
    for p in front:  # duplicates add no area
        key = (p.carbon, p.thaw)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    area = 0.0
    prev_carbon = ref_c
    # ascending carbon means descending thaw along a 2-D front
    for p in unique:
        area += (p.carbon - prev_carbon) * (p.thaw - ref_t)
        prev_carbon = p.carbon
    return area


def pareto_payload(points: list[ParetoPoint]) -> dict:
    """JSON-ready point list with dominated flags plus the hypervolume of
    the front w.r.t. the componentwise minimum of the set."""
    front = set(id(p) for p in extract_pareto_front(points))
    payload = {
        "points": [
            {
                "carbon_return": p.carbon,
                "thaw_return": p.thaw,
                "lambda": p.lam,
                "policy": p.policy,
                "dominated": id(p) not in front,
            }
            for p in points
        ]
    }
    if points:
        reference = (min(p.carbon for p in points) - 1.0,
                     min(p.thaw for p in points) - 1.0)
        payload["hypervolume"] = hypervolume(points, reference)
        payload["hypervolume_reference"] = list(reference)
    return payload
