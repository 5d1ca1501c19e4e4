"""
Witness search: points t of [d, d + T] with ||t lambda_j - beta_j|| <= 1/omega for every j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import mpmath
import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from klt import logger
from klt.config import DEFAULT_SCAN_CAP
from klt.errors import DomainError, ScanCapExceeded, WitnessNotFound
from klt.frequency import LinearFormInstance
from klt.policies import SearchMode
from klt.workers import run_partitioned, split_range

log = logger.get()

"""Grid points evaluated per vectorized block."""
CHUNK = 65536


@dataclass(frozen=True)
class TargetInstance:
    """
    The frequencies, the targets beta_j, the interval [d, d + T] and the accuracy 1/omega.
    """

    instance: LinearFormInstance
    betas: tuple[float, ...]
    d: float
    T: float
    omega: int

    def __post_init__(self) -> None:
        if len(self.betas) != self.instance.N:
            raise DomainError(f"expected {self.instance.N} betas, got {len(self.betas)}")
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")
        if not (math.isfinite(self.T) and math.isfinite(self.d)):
            raise DomainError(f"the interval must be finite, got d={self.d}, T={self.T}")
        if self.omega < 1:
            raise DomainError(f"omega must be a positive integer, got {self.omega}")

    @property
    def accuracy(self) -> float:
        return 1.0 / self.omega


@dataclass(frozen=True)
class Discrepancy:
    values: tuple[float, ...]
    sup: float
    sum: float


@dataclass(frozen=True)
class WitnessResult:
    """
    A located t with its discrepancy vector and the search certificate.
    """

    t: float
    """||t lambda_j - beta_j|| for each j."""
    discrepancies: tuple[float, ...]
    sup_discrepancy: float
    sum_discrepancy: float
    grid_step: float
    points_scanned: int
    interval: tuple[float, float]
    mode: SearchMode
    notes: tuple[str, ...] = field(default=())


def discrepancy(
    t: float, instance: LinearFormInstance, betas: tuple[float, ...] | list[float]
) -> Discrepancy:
    """
    Function that computes ||t lambda_j - beta_j|| at the instance precision.

    :param t: the point.
    :param instance: the frequencies.
    :param betas: the targets.
    :return: the per-coordinate distances with their sup and sum.
    """

    if len(betas) != instance.N:
        raise DomainError(f"expected {instance.N} betas, got {len(betas)}")
    with mpmath.workprec(instance.precision):
        tt = mpmath.mpf(t)
        values = []
        for lam, beta in zip(instance.evaluated, betas):
            x = tt * lam - mpmath.mpf(beta)
            values.append(float(abs(x - mpmath.nint(x))))
    return Discrepancy(tuple(values), max(values, default=0.0), math.fsum(values))


def _sup_block(
    t: npt.NDArray[np.float64], lambdas: npt.NDArray[np.float64], betas: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    x = np.outer(t, lambdas) - betas
    dist = np.abs(x - np.rint(x))
    if dist.shape[1] == 0:
        return np.zeros(len(t))
    return dist.max(axis=1)


@dataclass
class _PartResult:
    hit: tuple[float, Discrepancy] | None
    best: tuple[float, float]
    scanned: int


def scan_length(
    instance: LinearFormInstance, omega: int, slack: float | None, points: int
) -> float:
    """
    Function that returns the interval length covered by `points` grid points of the search.

    :param instance: the frequencies.
    :param omega: the inverse accuracy.
    :param slack: the grid slack, 0.1/omega when None.
    :param points: the number of grid points, usually the scan cap.
    :return: the length T.
    :raises DomainError: if every frequency is zero or the slack is not positive.
    """

    slack = slack if slack is not None else 0.1 / omega
    lam_sum = float(np.sum(np.abs(instance.floats)))
    if slack <= 0 or lam_sum == 0:
        raise DomainError(f"no search grid for slack {slack} and frequency sum {lam_sum}")
    return max(1, points - 2) * slack / lam_sum


class _Grid:
    def __init__(self, target: TargetInstance, slack: float) -> None:
        self.target = target
        lam_sum = float(np.sum(np.abs(target.instance.floats)))
        self.step = slack / lam_sum if lam_sum > 0 else target.T
        count = math.floor(target.T / self.step) + 1
        # the right endpoint joins the grid when it is not already on it
        self.endpoint = target.d + (count - 1) * self.step < target.d + target.T
        self.size = count + (1 if self.endpoint else 0)

    def points(self, lo: int, hi: int) -> npt.NDArray[np.float64]:
        idx = np.arange(lo, hi, dtype=np.float64)
        t = self.target.d + idx * self.step
        if self.endpoint and hi == self.size:
            t[-1] = self.target.d + self.target.T
        return t


def _scan_part(grid: _Grid, lo: int, hi: int, first_hit: bool, cap: int) -> _PartResult:
    target = grid.target
    lambdas = target.instance.floats
    betas = np.asarray(target.betas, dtype=np.float64)
    goal = target.accuracy
    best = (math.inf, target.d)
    scanned = 0

    for start in range(lo, hi, CHUNK):
        stop = min(hi, start + CHUNK)
        if scanned + (stop - start) > cap:
            raise ScanCapExceeded(cap, scanned + (stop - start))
        t = grid.points(start, stop)
        sup = _sup_block(t, lambdas, betas)
        scanned += stop - start

        i = int(np.argmin(sup))
        if sup[i] < best[0]:
            best = (float(sup[i]), float(t[i]))
        if first_hit:
            for j in np.flatnonzero(sup <= goal + 1e-12):
                disc = discrepancy(float(t[j]), target.instance, target.betas)
                if disc.sup <= goal + 1e-12:
                    return _PartResult((float(t[j]), disc), best, scanned)

    return _PartResult(None, best, scanned)


def _refine(target: TargetInstance, t0: float, step: float) -> float:
    lo = max(target.d, t0 - step)
    hi = min(target.d + target.T, t0 + step)
    if hi <= lo:
        return t0

    lambdas = target.instance.floats
    betas = np.asarray(target.betas, dtype=np.float64)

    def objective(t: float) -> float:
        return float(_sup_block(np.array([t]), lambdas, betas)[0])

    res = minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": step * 1e-9}
    )
    return float(res.x)


def find_witness(
    target: TargetInstance,
    mode: SearchMode = SearchMode.FIRST_HIT,
    slack: float | None = None,
    scan_cap: int = DEFAULT_SCAN_CAP,
    workers: int = 1,
) -> WitnessResult:
    """
    Function that searches [d, d + T] for a t with sup_j ||t lambda_j - beta_j|| <= 1/omega.

    The grid step is slack/sum |lambda_j|, so moving between grid points changes every
    coordinate by at most slack. First-hit mode returns the earliest qualifying grid point;
    best-in-interval mode scans the whole grid and refines around the minimum.

    :param target: the search problem.
    :param mode: the search mode.
    :param slack: the grid slack, 0.1/omega when None.
    :param scan_cap: the maximum number of grid points.
    :param workers: threads sharing contiguous parts of the grid.
    :return: the witness, re-evaluated at the instance precision.
    :raises WitnessNotFound: with the best point seen, if no grid point qualifies.
    :raises ScanCapExceeded: if the grid outgrows the cap before a hit.
    """

    slack = slack if slack is not None else 0.1 / target.omega
    if slack <= 0:
        raise DomainError(f"slack must be positive, got {slack}")
    grid = _Grid(target, slack)
    first_hit = mode is SearchMode.FIRST_HIT
    if not first_hit and grid.size > scan_cap:
        raise ScanCapExceeded(scan_cap, grid.size)

    notes = []
    zero = [j for j, v in enumerate(target.instance.floats) if v == 0.0]
    if zero:
        notes.append(f"zero frequencies at {zero}: discrepancy constant there")
        log.warning(f"degenerate frequencies at indices {zero}")

    parts = split_range(0, grid.size - 1, workers)
    per_cap = max(1, scan_cap // max(1, len(parts)))
    results = run_partitioned(
        lambda p: _scan_part(grid, p[0], p[1] + 1, first_hit, per_cap), parts, workers
    )
    scanned = sum(r.scanned for r in results)
    log.debug(f"scanned {scanned} grid points with step {grid.step:.6g}")

    def result(t: float, disc: Discrepancy) -> WitnessResult:
        return WitnessResult(
            t,
            disc.values,
            disc.sup,
            disc.sum,
            grid.step,
            scanned,
            (target.d, target.d + target.T),
            mode,
            tuple(notes),
        )

    if first_hit:
        hits = [r.hit for r in results if r.hit is not None]
        if hits:
            t, disc = min(hits, key=lambda h: h[0])
            return result(t, disc)

    _, t_best = min((r.best for r in results), key=lambda b: (b[0], b[1]))
    best = result(t_best, discrepancy(t_best, target.instance, target.betas))
    if not first_hit:
        t_ref = _refine(target, t_best, grid.step)
        refined = discrepancy(t_ref, target.instance, target.betas)
        if refined.sup < best.sup_discrepancy:
            best = result(t_ref, refined)

    if best.sup_discrepancy > target.accuracy + 1e-12:
        raise WitnessNotFound(best, grid_step=grid.step, points_scanned=scanned)
    return best


@dataclass
class LiminfTrace:
    """
    Samples of f(t) = t^(1/N)/sqrt(log t) sup_j ||t lambda_j - beta_j|| and their running minimum.
    """

    t: npt.NDArray[np.float64]
    f: npt.NDArray[np.float64]
    running_min: npt.NDArray[np.float64]
    """t ||t lambda_1||/sqrt(log t) if N = 1, t ||t lambda_1|| ||t lambda_2||/log t if N = 2."""
    special: npt.NDArray[np.float64] | None = None

    def as_columns(self) -> dict[str, Any]:
        cols: dict[str, Any] = {
            "t": self.t.tolist(),
            "f": self.f.tolist(),
            "running_min": self.running_min.tolist(),
        }
        if self.special is not None:
            cols["special"] = self.special.tolist()
            cols["special_running_min"] = np.minimum.accumulate(self.special).tolist()
        return cols


def liminf_scan(
    instance: LinearFormInstance,
    betas: tuple[float, ...] | list[float],
    t_max: float,
    samples: int = 10_000,
    integer_grid: bool = False,
) -> LiminfTrace:
    """
    Function that samples the liminf quantity of the interval corollaries over [3, t_max].

    :param instance: the frequencies.
    :param betas: the targets.
    :param t_max: the end of the range, above e.
    :param samples: the number of evenly spaced samples, ignored on the integer grid.
    :param integer_grid: sample the integers 3, 4, ..., t_max instead.
    :return: the trace.
    """

    if not t_max > math.e:
        raise DomainError(f"t_max must exceed e, got {t_max}")
    if len(betas) != instance.N:
        raise DomainError(f"expected {instance.N} betas, got {len(betas)}")
    N = instance.N

    if integer_grid:
        t = np.arange(3, math.floor(t_max) + 1, dtype=np.float64)
    else:
        t = np.linspace(3.0, t_max, max(2, samples))

    x = np.outer(t, instance.floats) - np.asarray(betas, dtype=np.float64)
    dist = np.abs(x - np.rint(x))
    logt = np.log(t)
    f = t ** (1.0 / N) / np.sqrt(logt) * dist.max(axis=1)

    special = None
    if N == 1:
        special = t * dist[:, 0] / np.sqrt(logt)
    elif N == 2:
        special = t * dist[:, 0] * dist[:, 1] / logt
    return LiminfTrace(t, f, np.minimum.accumulate(f), special)
