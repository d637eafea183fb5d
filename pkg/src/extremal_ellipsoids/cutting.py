"""Ellipsoid-method feasibility solver built on the slab update.

Each cut intersects the current ellipsoid with a slab along the violated
normal, replaces it by the smallest circumscribed ellipsoid of that slab,
and repeats.  Volume drops by a fixed dimension-dependent factor per
proper cut, so an empty interior is certified once the volume passes the
floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Ellipsoid, volume
from .errors import EmptyBody, EmptySlab
from .slab import GeneralSlab, ce_slab, denormalize, normalize

_NOOP_TOL = 1e-15


@dataclass(frozen=True)
class CutStepRecord:
    iteration: int
    normal: np.ndarray
    alpha: float
    beta: float
    volume_before: float
    volume_after: float
    ratio: float

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "normal": self.normal.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "volume_before": self.volume_before,
            "volume_after": self.volume_after,
            "ratio": self.ratio,
        }


@dataclass(frozen=True)
class FeasibilityProblem:
    """Halfspace-oracle feasibility instance.

    ``oracle(x)`` returns None when x is feasible, else a violated pair
    (normal, offset) meaning the feasible set satisfies <normal, x> <= offset.
    ``initial`` must contain the feasible set; ``floor`` is the volume below
    which the instance is declared infeasible.
    """

    oracle: Callable
    initial: Ellipsoid
    floor: float = 1e-12

    def __post_init__(self):
        if not self.floor > 0.0:
            raise ValueError("volume floor must be positive")


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # FEASIBLE | INFEASIBLE | BUDGET
    point: Optional[np.ndarray]
    volume: float
    records: list = field(default_factory=list)


def parallel_cut_step(e: Ellipsoid, p, a: float, b: float,
                      iteration: int = 0):
    """Smallest ellipsoid containing {x in E : a <= <p, x - center> <= b}.

    Bounds deeper than the ellipsoid extent are clamped; a slab missing the
    ellipsoid entirely raises EmptySlab.  Shallow two-sided cuts that cannot
    shrink the volume return E unchanged with ratio 1.
    """
    p = np.asarray(p, dtype=float)
    if a >= b:
        raise EmptySlab("slab bounds leave no width")
    general = GeneralSlab(e.shape, e.center, p, a, b)
    n = e.dim
    vol_before = volume(e)

    try:
        spec, frame = normalize(general)
    except EmptyBody as exc:
        raise EmptySlab(str(exc)) from exc
    alpha, beta = spec.alpha, spec.beta
    if spec.reflected:
        alpha, beta = -beta, -alpha

    if alpha * beta <= -1.0 / n + _NOOP_TOL:
        record = CutStepRecord(iteration, p, alpha, beta,
                               vol_before, vol_before, 1.0)
        return e, record

    params = ce_slab(spec)
    post = denormalize(params, frame)
    ratio = (params.a * params.b ** (n - 1)) ** -0.5
    record = CutStepRecord(iteration, p, alpha, beta,
                           vol_before, vol_before * ratio, ratio)
    return post, record


def central_cut_step(e: Ellipsoid, p, iteration: int = 0):
    """Cut through the center: the halfspace <p, x - center> <= 0."""
    p = np.asarray(p, dtype=float)
    lin = np.linalg.cholesky(e.shape)
    q = np.linalg.solve(lin, p)
    extent = float(np.linalg.norm(q))  # max of <p, x - c> over E
    if extent == 0.0:
        raise ValueError("cut normal must be nonzero")
    return parallel_cut_step(e, p, -extent, 0.0, iteration)


def solve_feasibility(problem: FeasibilityProblem, max_iter: int = 1000,
                      trace_path: Optional[str] = None) -> FeasibilityResult:
    """Run the cutting loop until feasible, provably empty, or out of budget."""
    e = problem.initial
    records: list[CutStepRecord] = []
    sink = open(trace_path, "a") if trace_path else None
    try:
        for it in range(max_iter):
            vol = volume(e)
            if vol < problem.floor:
                return FeasibilityResult("INFEASIBLE", None, vol, records)
            verdict = problem.oracle(e.center)
            if verdict is None:
                return FeasibilityResult("FEASIBLE", e.center, vol, records)
            normal, offset = verdict
            normal = np.asarray(normal, dtype=float)
            lin = np.linalg.cholesky(e.shape)
            extent = float(np.linalg.norm(np.linalg.solve(lin, normal)))
            hi = float(offset) - float(normal @ e.center)
            if hi <= -extent:
                # the allowed halfspace misses the ellipsoid entirely
                return FeasibilityResult("INFEASIBLE", None, 0.0, records)
            e, record = parallel_cut_step(e, normal, -extent,
                                          min(hi, extent), iteration=it)
            records.append(record)
            if sink is not None:
                sink.write(json.dumps(record.to_dict()) + "\n")
        return FeasibilityResult("BUDGET", None, volume(e), records)
    finally:
        if sink is not None:
            sink.close()
