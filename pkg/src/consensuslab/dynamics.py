"""Seeded multi-path simulation of X(t) = A(t) X(t-1) with per-step diagnostics.

Mode classification is driven by the diameter (largest pairwise coordinate
difference) because the three convergence modes are defined through pairwise
differences; the projection norms are recorded alongside for the
consensus-vs-stability equivalence checks.  The diameter is nonincreasing
along every path (each update takes convex combinations of coordinates),
which makes terminal values per-path infima and the estimators below
consistent for the definitional limits.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np

from .core import MatrixDistribution, RngPolicy, sample
from .projection import diameter, disagreement, make_projections
from .spectral import NumericalError

MONOTONICITY_SLACK = 1e-12

AS_CONVERGED_FRACTION = 0.99
PROB_CONVERGED_LEVEL = 0.01

PATH_CSV_COLUMNS = ("path", "t", "diameter", "disagreement_inf", "disagreement_l2")
AGGREGATE_CSV_COLUMNS = ("t", "mean_diameter", "p_exceed_eps", "max_diameter", "lp_mean")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One simulated path: diagnostics at every t = 0..T plus the final state."""

    path_id: int
    x0: np.ndarray
    diameter: np.ndarray
    disagreement_inf: np.ndarray
    disagreement_l2: np.ndarray
    final_state: np.ndarray


@dataclass(frozen=True, eq=False)
class ModeReport:
    """Empirical classification of the three convergence modes."""

    eps: float
    p: float
    horizon: int
    as_fraction: float
    prob_curve: np.ndarray  # fraction of paths with diameter(t) > eps
    lp_curve: np.ndarray  # sample mean of diameter(t)**p
    as_converged: bool
    prob_converged: bool
    lp_converged: bool

    @property
    def all_agree(self) -> bool:
        return self.as_converged == self.prob_converged == self.lp_converged

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "p": self.p,
            "horizon": self.horizon,
            "as_fraction": self.as_fraction,
            "as_converged": self.as_converged,
            "prob_converged": self.prob_converged,
            "lp_converged": self.lp_converged,
            "agreement": self.all_agree,
            "prob_curve": self.prob_curve.tolist(),
            "lp_curve": self.lp_curve.tolist(),
        }


def simulate_path(
    dist: MatrixDistribution,
    x0: np.ndarray,
    horizon: int,
    rng: np.random.Generator,
    path_id: int = 0,
) -> TrajectoryRecord:
    """Iterate the network with a fresh i.i.d. draw per step.

    The diameter is checked for monotone decrease at every step (1e-12
    slack for floating-point reassociation); a violation means a broken
    matrix draw and raises.  The disagreement max-norm is NOT monotone for
    general row-stochastic updates (a row-duplicating matrix can shift the
    coordinate mean toward one extreme and push the other further from it);
    it is monotone when the support is doubly stochastic, which tests
    assert where it applies.  The norm is always bounded by the diameter,
    which is checked here instead.
    """
    x0 = np.asarray(x0, dtype=float)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if x0.shape != (dist.n,):
        raise ValueError(f"x0 must have length {dist.n}, got shape {x0.shape}")
    proj = make_projections(dist.n)
    diam = np.empty(horizon + 1)
    dis_inf = np.empty(horizon + 1)
    dis_l2 = np.empty(horizon + 1)
    x = x0.copy()
    for t in range(horizon + 1):
        if t > 0:
            a = sample(dist, rng)
            x = a.entries @ x
        d = disagreement(x, proj)
        diam[t] = diameter(x)
        dis_inf[t] = float(np.abs(d).max())
        dis_l2[t] = float(np.linalg.norm(d))
        if t > 0:
            if diam[t] > diam[t - 1] + MONOTONICITY_SLACK:
                raise NumericalError(
                    f"diameter increased at t={t} on path {path_id}: "
                    f"{diam[t - 1]!r} -> {diam[t]!r}"
                )
            if dis_inf[t] > diam[t] + 1e-9:
                raise NumericalError(
                    f"disagreement max-norm exceeds diameter at t={t} on path {path_id}"
                )
    for arr in (diam, dis_inf, dis_l2):
        arr.setflags(write=False)
    return TrajectoryRecord(
        path_id=path_id,
        x0=x0,
        diameter=diam,
        disagreement_inf=dis_inf,
        disagreement_l2=dis_l2,
        final_state=x,
    )


def run_paths(
    dist: MatrixDistribution,
    x0: np.ndarray,
    paths: int,
    horizon: int,
    policy: RngPolicy,
    threads: int = 1,
) -> list[TrajectoryRecord]:
    """Simulate independent paths on per-path derived streams.

    Results are identical for any thread count: stream k depends only on
    (master_seed, k) and the output list is ordered by path index.
    """
    if paths < 1:
        raise ValueError(f"paths must be >= 1, got {paths}")

    def one(k: int) -> TrajectoryRecord:
        return simulate_path(dist, x0, horizon, policy.path_stream(k), path_id=k)

    if threads <= 1:
        return [one(k) for k in range(paths)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(paths)))


def summarize_modes(
    records: Sequence[TrajectoryRecord], eps: float, p: float
) -> ModeReport:
    """Aggregate per-path diagnostics into the three mode classifications."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    diam = np.stack([r.diameter for r in records])
    horizon = diam.shape[1] - 1
    prob_curve = (diam > eps).mean(axis=0)
    lp_curve = (diam ** p).mean(axis=0)
    as_fraction = float((diam[:, -1] <= eps).mean())
    report = ModeReport(
        eps=eps,
        p=p,
        horizon=horizon,
        as_fraction=as_fraction,
        prob_curve=prob_curve,
        lp_curve=lp_curve,
        as_converged=as_fraction >= AS_CONVERGED_FRACTION,
        prob_converged=float(prob_curve[-1]) <= PROB_CONVERGED_LEVEL,
        lp_converged=float(lp_curve[-1]) <= eps ** p,
    )
    prob_curve.setflags(write=False)
    lp_curve.setflags(write=False)
    return report


def estimate_modes(
    dist: MatrixDistribution,
    x0: np.ndarray,
    paths: int,
    horizon: int,
    eps: float,
    p: float,
    policy: RngPolicy,
    threads: int = 1,
) -> ModeReport:
    records = run_paths(dist, x0, paths, horizon, policy, threads=threads)
    return summarize_modes(records, eps, p)


def zero_one_probe(
    dist: MatrixDistribution,
    x0: np.ndarray,
    paths: int,
    horizon: int,
    eps: float,
    policy: RngPolicy,
) -> float:
    """Fraction of paths ending in consensus; should sit near 0 or near 1."""
    return estimate_modes(dist, x0, paths, horizon, eps, 1.0, policy).as_fraction


def shift_invariance_check(
    dist: MatrixDistribution,
    x0: np.ndarray,
    c: float,
    horizon: int,
    seed: int,
    seed_shifted: Optional[int] = None,
) -> bool:
    """Diameter series must be unchanged when x0 is shifted by a constant.

    Both runs must reuse the same matrix draws; passing a different seed for
    the shifted run is refused.
    """
    if seed_shifted is not None and seed_shifted != seed:
        raise ValueError("both runs must share one seed; the check needs identical draws")
    x0 = np.asarray(x0, dtype=float)
    policy = RngPolicy(seed)
    base = simulate_path(dist, x0, horizon, policy.path_stream(0))
    shifted = simulate_path(dist, x0 + c, horizon, policy.path_stream(0))
    return bool(np.max(np.abs(base.diameter - shifted.diameter)) <= 1e-10)


# --- emission --------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_path_csv(records: Sequence[TrajectoryRecord], fh: IO[str]) -> None:
    """Long-format per-path series; row order is path-major, then t."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PATH_CSV_COLUMNS)
    for rec in records:
        for t in range(rec.diameter.size):
            writer.writerow(
                (
                    rec.path_id,
                    t,
                    _fmt(rec.diameter[t]),
                    _fmt(rec.disagreement_inf[t]),
                    _fmt(rec.disagreement_l2[t]),
                )
            )


def write_aggregate_csv(
    records: Sequence[TrajectoryRecord], eps: float, p: float, fh: IO[str]
) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(AGGREGATE_CSV_COLUMNS)
    diam = np.stack([r.diameter for r in records])
    mean_curve = diam.mean(axis=0)
    exceed = (diam > eps).mean(axis=0)
    max_curve = diam.max(axis=0)
    lp_curve = (diam ** p).mean(axis=0)
    for t in range(diam.shape[1]):
        writer.writerow(
            (t, _fmt(mean_curve[t]), _fmt(exceed[t]), _fmt(max_curve[t]), _fmt(lp_curve[t]))
        )


def paths_as_json(records: Sequence[TrajectoryRecord]) -> list[dict]:
    return [
        {
            "path": rec.path_id,
            "diameter": rec.diameter.tolist(),
            "disagreement_inf": rec.disagreement_inf.tolist(),
            "disagreement_l2": rec.disagreement_l2.tolist(),
            "final_state": rec.final_state.tolist(),
        }
        for rec in records
    ]
