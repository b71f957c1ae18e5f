"""Expected update matrix, the random-network verdict, and the second-order lifting.

The verdict for a random network rests on the expected update matrix: the
network reaches consensus (in all three modes at once) exactly when the
second eigenvalue modulus of that expectation is below 1.  When the
expectation is only estimated by Monte Carlo, the decision band is widened
by a bootstrap-propagated uncertainty halfwidth.

The cross-validation routine runs the spectral decision and the empirical
mode estimation side by side and records any contradiction verbatim; it
never overrides either result.  A genuine contradiction is possible for
distributions supported on matrices with zero diagonal entries (the
identity-vs-swap mixture is the canonical case) and must be surfaced.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    MatrixDistribution,
    RngPolicy,
    StochasticMatrix,
    companion_block,
    sample,
    validate_matrix,
)
from .dynamics import ModeReport, estimate_modes
from .spectral import VERDICT_TOL, classify, second_eigenvalue_modulus

MIN_MC_SAMPLES = 1000
BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_SIGMA_FACTOR = 3.0


@dataclass(frozen=True, eq=False)
class ExpectedMatrix:
    """E[A(1)] under the distribution, exact or Monte Carlo estimated."""

    matrix: StochasticMatrix
    exact: bool
    sample_count: int
    entry_standard_error: float
    samples: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(eq=False)
class ConsensusVerdict:
    """Spectral consensus decision for a random network."""

    lambda2_modulus: float
    decision: str
    positive_diagonal_support: bool
    uncertainty_halfwidth: float
    discrepancy: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "lambda2_modulus": self.lambda2_modulus,
            "decision": self.decision,
            "positive_diagonal_support": self.positive_diagonal_support,
            "uncertainty_halfwidth": self.uncertainty_halfwidth,
            "discrepancy": self.discrepancy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def expected_matrix(
    dist: MatrixDistribution,
    mc_samples: int = 10000,
    rng: Optional[np.random.Generator] = None,
) -> ExpectedMatrix:
    """Mixture average for finite support, sample mean for generators.

    A convex combination of stochastic matrices is stochastic, so the result
    is validated against the same tolerances as any input matrix.
    """
    if dist.kind == "dirac":
        return ExpectedMatrix(dist.matrix, exact=True, sample_count=0, entry_standard_error=0.0)
    if dist.kind == "finite":
        mean = sum(p * m.entries for p, m in dist.atoms)
        return ExpectedMatrix(
            validate_matrix(mean), exact=True, sample_count=0, entry_standard_error=0.0
        )
    if mc_samples < MIN_MC_SAMPLES:
        raise ConfigError(
            f"generator expectation needs mc_samples >= {MIN_MC_SAMPLES}, got {mc_samples}"
        )
    if rng is None:
        raise ConfigError("generator expectation needs an RNG")
    draws = np.stack([sample(dist, rng).entries for _ in range(mc_samples)])
    mean = draws.mean(axis=0)
    se = float(draws.std(axis=0, ddof=1).max() / np.sqrt(mc_samples))
    return ExpectedMatrix(
        validate_matrix(mean),
        exact=False,
        sample_count=mc_samples,
        entry_standard_error=se,
        samples=draws,
    )


def _positive_diagonal_support(dist: MatrixDistribution, samples: Optional[np.ndarray]) -> bool:
    if dist.kind == "dirac":
        return dist.matrix.has_positive_diagonal()
    if dist.kind == "finite":
        return all(m.has_positive_diagonal() for p, m in dist.atoms if p > 0)
    assert samples is not None
    diag = samples[:, np.arange(dist.n), np.arange(dist.n)]
    return bool(np.all(diag > 0.0))


def _bootstrap_halfwidth(samples: np.ndarray, rng: np.random.Generator) -> float:
    """Spread of |lambda_2| under resampling of the Monte Carlo draws.

    Eigenvalues are smooth but not linear in the entries, so the uncertainty
    is propagated by resampling rather than perturbation theory.
    """
    m = samples.shape[0]
    values = np.empty(BOOTSTRAP_RESAMPLES)
    for b in range(BOOTSTRAP_RESAMPLES):
        idx = rng.integers(m, size=m)
        values[b] = second_eigenvalue_modulus(validate_matrix(samples[idx].mean(axis=0)))
    return float(BOOTSTRAP_SIGMA_FACTOR * values.std(ddof=1))


def random_verdict(
    dist: MatrixDistribution,
    mc_samples: int = 10000,
    rng: Optional[np.random.Generator] = None,
    tol: float = VERDICT_TOL,
) -> ConsensusVerdict:
    """Spectral consensus decision from the (possibly estimated) expectation."""
    em = expected_matrix(dist, mc_samples=mc_samples, rng=rng)
    lam2 = second_eigenvalue_modulus(em.matrix)
    if em.exact:
        halfwidth = 0.0
    else:
        halfwidth = _bootstrap_halfwidth(em.samples, rng)
    return ConsensusVerdict(
        lambda2_modulus=lam2,
        decision=classify(lam2, tol + halfwidth),
        positive_diagonal_support=_positive_diagonal_support(dist, em.samples),
        uncertainty_halfwidth=halfwidth,
    )


def discrepancy_note(verdict: ConsensusVerdict, modes: ModeReport) -> Optional[str]:
    """Text of the contradiction between spectral and empirical results, if any."""
    empirical_converged = modes.as_converged and modes.prob_converged and modes.lp_converged
    if verdict.decision == "consensus" and not empirical_converged:
        return (
            f"spectral decision is consensus (|lambda2| = {verdict.lambda2_modulus:.6g}) "
            f"but simulation did not converge (a.s. fraction {modes.as_fraction:.3g}, "
            f"terminal exceed fraction {modes.prob_curve[-1]:.3g}, "
            f"terminal L^p mean {modes.lp_curve[-1]:.6g})"
        )
    if verdict.decision != "consensus" and empirical_converged:
        return (
            f"spectral decision is {verdict.decision} "
            f"(|lambda2| = {verdict.lambda2_modulus:.6g}) but simulation converged "
            f"(a.s. fraction {modes.as_fraction:.3g})"
        )
    return None


def cross_validate(
    dist: MatrixDistribution,
    x0: np.ndarray,
    paths: int,
    horizon: int,
    eps: float,
    policy: RngPolicy,
    mc_samples: int = 10000,
    p: float = 1.0,
    threads: int = 1,
) -> ConsensusVerdict:
    """Run the spectral verdict and the simulation; report both sides verbatim."""
    verdict = random_verdict(dist, mc_samples=mc_samples, rng=policy.expectation_stream())
    modes = estimate_modes(dist, x0, paths, horizon, eps, p, policy, threads=threads)
    verdict.discrepancy = discrepancy_note(verdict, modes)
    return verdict


def lift_second_order(
    alpha: float,
    beta: float,
    dist_a: MatrixDistribution,
    dist_b: MatrixDistribution,
) -> MatrixDistribution:
    """Distribution of the block companion matrix [[alpha*A, beta*B], [I, 0]].

    Embeds the two-term recursion x(t) = alpha*A(t)x(t-1) + beta*B(t)x(t-2)
    into a first-order system on twice the dimension.  Finite or point-mass
    inputs are lifted by enumerating the independent product support;
    generator inputs fall back to joint sampling.
    """
    if alpha < 0 or beta < 0:
        raise ConfigError(f"weights must be nonnegative, got alpha={alpha!r}, beta={beta!r}")
    if abs(alpha + beta - 1.0) > 1e-12:
        raise ConfigError(f"weights must sum to 1, got {alpha!r} + {beta!r} = {alpha + beta!r}")
    if dist_a.n != dist_b.n:
        raise ConfigError(f"dimension mismatch: {dist_a.n} vs {dist_b.n}")

    if dist_a.kind == "generator" or dist_b.kind == "generator":
        return MatrixDistribution.generator(
            "lifted_pair",
            {
                "alpha": alpha,
                "beta": beta,
                "dist_a": {"n": dist_a.n, "distribution": dist_a.to_config()},
                "dist_b": {"n": dist_b.n, "distribution": dist_b.to_config()},
            },
        )

    atoms_a = dist_a.atoms if dist_a.kind == "finite" else ((1.0, dist_a.matrix),)
    atoms_b = dist_b.atoms if dist_b.kind == "finite" else ((1.0, dist_b.matrix),)
    lifted = []
    for pa, ma in atoms_a:
        for pb, mb in atoms_b:
            block = validate_matrix(companion_block(alpha, ma.entries, beta, mb.entries))
            lifted.append((pa * pb, block))
    if len(lifted) == 1:
        return MatrixDistribution.dirac(lifted[0][1])
    return MatrixDistribution.finite(lifted)
