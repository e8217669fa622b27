import logging
from itertools import combinations, product
from typing import Optional, Sequence
import numpy as np

from engine.simulate import simulate
from models.coefficients import CoefficientPair
from models.ensemble import HoelderReport, HoelderRow, TimeGrid

logger = logging.getLogger(__name__)

_DEFAULT_TIME_POINTS = 5


def default_time_points(grid: TimeGrid, count: int = _DEFAULT_TIME_POINTS) -> list:
    return sorted({int(k) for k in np.linspace(0, grid.steps, count).round()})


def hoelder_probe(pair: CoefficientPair, grid: TimeGrid, n_particles: int, xs: Sequence, seed: int,
                  time_points: Optional[Sequence[int]] = None, workers: Optional[int] = None) -> HoelderReport:
    """Estimate E‖X_t^x − X_s^y‖² under synchronous coupling and fit Ĉ(|t − s| + ‖x − y‖²).

    One row per unordered pair of distinct (initial state, time point) nodes.
    Every initial state is simulated with the same seed. Rows with a zero
    right-hand side are reported but excluded from the fitted constant.
    """
    if len(xs) < 2:
        raise ValueError("hoelder_probe needs at least two initial states")
    indices = sorted(set(time_points)) if time_points is not None else default_time_points(grid)
    if any(k < 0 or k > grid.steps for k in indices):
        raise ValueError(f"time points must lie in 0..{grid.steps}")
    times = grid.times

    ensembles = [simulate(pair, grid, n_particles, x, seed, workers=workers) for x in xs]
    starts = [e.x0 for e in ensembles]

    rows = []
    points = list(product(range(len(xs)), indices))
    for (i, a), (j, b) in combinations(points, 2):
        space = float(np.sum((starts[i] - starts[j]) ** 2))
        gap = ensembles[i].states[:, a, :] - ensembles[j].states[:, b, :]
        lhs = float(np.mean(np.sum(gap * gap, axis=-1)))
        t, s = float(times[a]), float(times[b])
        rows.append(HoelderRow(
            pair_id=f"x={starts[i].tolist()}|y={starts[j].tolist()}|t={t!r}|s={s!r}",
            t=t, s=s, x=starts[i].tolist(), y=starts[j].tolist(),
            lhs=lhs, rhs_unit=abs(t - s) + space,
        ))


    ratios = [r.ratio for r in rows if r.ratio is not None]
    constant = max(ratios) if ratios else 0.0
    logger.info("hoelder probe for %s: %d rows, fitted constant %.6g", pair.name, len(rows), constant)
    return HoelderReport(rows=rows, constant=constant)
