"""Validated stochastic matrices, distributions over them, config ingestion, seeded sampling.

A stochastic matrix here is a nonnegative square matrix whose rows each sum
to one; it acts as the per-step update operator of the network.  A
distribution over such matrices is either a point mass ("dirac"), a finite
mixture of atoms ("finite"), or a named parametric generator ("generator").
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

ROW_SUM_TOL = 1e-9
NEGATIVE_ENTRY_TOL = 1e-12


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


class MatrixValidationError(ConfigError):
    """An array failed the stochastic-matrix checks."""


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """A validated row-stochastic matrix.

    Construct through :func:`validate_matrix`; the entries array is frozen
    after construction and safe to share across threads.
    """

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def has_positive_diagonal(self) -> bool:
        return bool(np.all(np.diag(self.entries) > 0.0))

    def allclose(self, other: "StochasticMatrix", tol: float = 1e-15) -> bool:
        if self.n != other.n:
            return False
        return bool(np.max(np.abs(self.entries - other.entries)) <= tol)

    def tolist(self) -> list:
        return self.entries.tolist()


def validate_matrix(raw: Any) -> StochasticMatrix:
    """Check an array against the stochastic-matrix invariants.

    Entries in [-1e-12, 0) are clamped to zero; anything more negative is an
    error.  Row sums must already be 1 within 1e-9 -- rows are never
    renormalized, a bad row sum is a config bug the caller must see.
    """
    arr = np.array(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MatrixValidationError(
            f"matrix must be square, got shape {arr.shape}"
        )
    n = arr.shape[0]
    if n < 1:
        raise MatrixValidationError("matrix dimension must be >= 1")
    if not np.all(np.isfinite(arr)):
        raise MatrixValidationError("matrix has non-finite entries")
    if np.any(arr < -NEGATIVE_ENTRY_TOL):
        i, j = np.unravel_index(np.argmin(arr), arr.shape)
        raise MatrixValidationError(
            f"negative entry {arr[i, j]!r} at ({i},{j}) below tolerance"
        )
    arr[(arr < 0.0)] = 0.0
    row_sums = arr.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > ROW_SUM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise MatrixValidationError(
            f"row {i} sums to {row_sums[i]!r}, expected 1 within {ROW_SUM_TOL}"
        )
    arr.setflags(write=False)
    return StochasticMatrix(entries=arr)


# --- parametric generators -------------------------------------------------

# name -> factory(params) returning (n, sampler); sampler(rng) yields one raw
# matrix which is then re-validated on every draw.
GeneratorFactory = Callable[[dict], tuple[int, Callable[[np.random.Generator], np.ndarray]]]

_GENERATORS: dict[str, GeneratorFactory] = {}


def _register(name: str):
    def deco(factory: GeneratorFactory) -> GeneratorFactory:
        _GENERATORS[name] = factory
        return factory

    return deco


def registered_generators() -> tuple[str, ...]:
    return tuple(sorted(_GENERATORS))


def _require_int(params: dict, key: str, minimum: int) -> int:
    if key not in params:
        raise ConfigError(f"generator params missing {key!r}")
    value = params[key]
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"generator param {key!r} must be an integer >= {minimum}, got {value!r}")
    return int(value)


@_register("pairwise_gossip")
def _pairwise_gossip(params: dict):
    n = _require_int(params, "n", 2)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def draw(rng: np.random.Generator) -> np.ndarray:
        i, j = pairs[rng.integers(len(pairs))]
        m = np.eye(n)
        m[i, i] = m[j, j] = 0.5
        m[i, j] = m[j, i] = 0.5
        return m

    return n, draw


@_register("dirichlet_rows")
def _dirichlet_rows(params: dict):
    n = _require_int(params, "n", 1)
    alpha = params.get("alpha", 1.0)
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or alpha <= 0:
        raise ConfigError(f"generator param 'alpha' must be positive, got {alpha!r}")
    conc = np.full(n, float(alpha))

    def draw(rng: np.random.Generator) -> np.ndarray:
        return rng.dirichlet(conc, size=n)

    return n, draw


@_register("lazy_permutation")
def _lazy_permutation(params: dict):
    n = _require_int(params, "n", 1)
    hold_prob = params.get("hold_prob", 0.5)
    if not isinstance(hold_prob, (int, float)) or isinstance(hold_prob, bool) or not 0.0 <= hold_prob <= 1.0:
        raise ConfigError(f"generator param 'hold_prob' must be in [0,1], got {hold_prob!r}")
    hold_prob = float(hold_prob)

    def draw(rng: np.random.Generator) -> np.ndarray:
        if rng.random() < hold_prob:
            return np.eye(n)
        perm = rng.permutation(n)
        m = np.zeros((n, n))
        m[np.arange(n), perm] = 1.0
        return m

    return n, draw


@_register("lifted_pair")
def _lifted_pair(params: dict):
    # Joint sampling for the second-order block companion form
    # [[alpha*A, beta*B], [I, 0]] when either factor is a generator kind.
    for key in ("alpha", "beta", "dist_a", "dist_b"):
        if key not in params:
            raise ConfigError(f"generator params missing {key!r}")
    alpha = float(params["alpha"])
    beta = float(params["beta"])
    if alpha < 0 or beta < 0 or abs(alpha + beta - 1.0) > 1e-12:
        raise ConfigError(
            f"lifted weights must be nonnegative and sum to 1, got {alpha!r} + {beta!r}"
        )
    dist_a = distribution_from_config(params["dist_a"])
    dist_b = distribution_from_config(params["dist_b"])
    if dist_a.n != dist_b.n:
        raise ConfigError(
            f"lifted sub-distributions disagree on dimension: {dist_a.n} vs {dist_b.n}"
        )
    n = dist_a.n

    def draw(rng: np.random.Generator) -> np.ndarray:
        a = sample(dist_a, rng).entries
        b = sample(dist_b, rng).entries
        return companion_block(alpha, a, beta, b)

    return 2 * n, draw


def companion_block(alpha: float, a: np.ndarray, b_weight: float, b: np.ndarray) -> np.ndarray:
    """Assemble the 2n x 2n block matrix [[alpha*a, b_weight*b], [I, 0]]."""
    n = a.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = alpha * a
    out[:n, n:] = b_weight * b
    out[n:, :n] = np.eye(n)
    return out


# --- distributions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixDistribution:
    """A probability distribution over n x n stochastic matrices."""

    n: int
    kind: str  # "dirac" | "finite" | "generator"
    matrix: Optional[StochasticMatrix] = None
    atoms: Optional[tuple[tuple[float, StochasticMatrix], ...]] = None
    name: Optional[str] = None
    params: Optional[dict] = None
    _draw: Optional[Callable[[np.random.Generator], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    @staticmethod
    def dirac(matrix: StochasticMatrix) -> "MatrixDistribution":
        return MatrixDistribution(n=matrix.n, kind="dirac", matrix=matrix)

    @staticmethod
    def finite(atoms: Sequence[tuple[float, StochasticMatrix]]) -> "MatrixDistribution":
        if not atoms:
            raise ConfigError("finite distribution needs at least one atom")
        probs = np.array([p for p, _ in atoms], dtype=float)
        if np.any(probs < 0):
            raise ConfigError(f"atom probabilities must be nonnegative, got {probs.tolist()}")
        total = probs.sum()
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise ConfigError(f"atom probabilities sum to {total!r}, expected 1")
        dims = {m.n for _, m in atoms}
        if len(dims) != 1:
            raise ConfigError(f"atoms have mixed dimensions {sorted(dims)}")
        return MatrixDistribution(
            n=atoms[0][1].n,
            kind="finite",
            atoms=tuple((float(p), m) for p, m in atoms),
        )

    @staticmethod
    def generator(name: str, params: dict) -> "MatrixDistribution":
        if name not in _GENERATORS:
            raise ConfigError(
                f"unknown generator {name!r}; registered: {', '.join(registered_generators())}"
            )
        n, draw = _GENERATORS[name](dict(params))
        return MatrixDistribution(n=n, kind="generator", name=name, params=dict(params), _draw=draw)

    def to_config(self) -> dict:
        """Serialize as the `distribution` object of the JSON config schema."""
        if self.kind == "dirac":
            return {"type": "dirac", "matrix": self.matrix.tolist()}
        if self.kind == "finite":
            return {
                "type": "finite",
                "atoms": [{"prob": p, "matrix": m.tolist()} for p, m in self.atoms],
            }
        return {"type": "generator", "name": self.name, "params": self.params}


def _pick_atom(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF selection: smallest k with u < cumulative prob through k."""
    acc = 0.0
    for k, p in enumerate(probs):
        acc += p
        if u < acc:
            return k
    return len(probs) - 1  # u landed in the rounding gap at the top


def sample(dist: MatrixDistribution, rng: np.random.Generator) -> StochasticMatrix:
    """Draw one matrix; every draw is re-validated."""
    if dist.kind == "dirac":
        return dist.matrix
    if dist.kind == "finite":
        k = _pick_atom([p for p, _ in dist.atoms], rng.random())
        return dist.atoms[k][1]
    try:
        raw = dist._draw(rng)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"generator {dist.name!r} failed: {exc}") from exc
    return validate_matrix(raw)


# --- seeded stream derivation ----------------------------------------------

_STREAM_PATHS = 0
_STREAM_X0 = 1
_STREAM_EXPECTATION = 2
_STREAM_BOOTSTRAP = 3


@dataclass(frozen=True)
class RngPolicy:
    """Deterministic stream derivation from a single 64-bit master seed.

    Streams are derived with numpy's SeedSequence spawn keys, a fixed mixing
    function, so (master_seed, path_index) alone determines every draw on a
    path regardless of how many threads execute.
    """

    master_seed: int

    def _stream(self, kind: int, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(kind, index))
        return np.random.Generator(np.random.PCG64(seq))

    def path_stream(self, path_index: int) -> np.random.Generator:
        return self._stream(_STREAM_PATHS, path_index)

    def x0_stream(self) -> np.random.Generator:
        return self._stream(_STREAM_X0, 0)

    def expectation_stream(self) -> np.random.Generator:
        return self._stream(_STREAM_EXPECTATION, 0)

    def bootstrap_stream(self) -> np.random.Generator:
        return self._stream(_STREAM_BOOTSTRAP, 0)


# --- configuration ---------------------------------------------------------


@dataclass
class RunParams:
    """Simulation defaults, overridable by CLI flags."""

    paths: int = 200
    horizon: int = 300
    eps: float = 1e-3
    seed: int = 0
    x0: Union[str, list] = "uniform01"
    p: float = 1.0
    mc_samples: int = 10000


def distribution_from_config(doc: dict) -> MatrixDistribution:
    """Build a distribution from {"n": ..., "distribution": {...}}."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a JSON object, got {type(doc).__name__}")
    if "distribution" not in doc:
        raise ConfigError("config missing 'distribution'")
    spec = doc["distribution"]
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("'distribution' must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "dirac":
        if "matrix" not in spec:
            raise ConfigError("dirac distribution missing 'matrix'")
        dist = MatrixDistribution.dirac(validate_matrix(spec["matrix"]))
    elif kind == "finite":
        if "atoms" not in spec or not isinstance(spec["atoms"], list):
            raise ConfigError("finite distribution needs an 'atoms' array")
        atoms = []
        for idx, atom in enumerate(spec["atoms"]):
            if not isinstance(atom, dict) or "prob" not in atom or "matrix" not in atom:
                raise ConfigError(f"atom {idx} must be an object with 'prob' and 'matrix'")
            try:
                atoms.append((float(atom["prob"]), validate_matrix(atom["matrix"])))
            except MatrixValidationError as exc:
                raise ConfigError(f"atom {idx}: {exc}") from exc
        probs_total = sum(p for p, _ in atoms)
        if abs(probs_total - 1.0) > ROW_SUM_TOL:
            raise ConfigError(f"atom probabilities sum to {round(probs_total, 12)}")
        dist = MatrixDistribution.finite(atoms)
    elif kind == "generator":
        if "name" not in spec:
            raise ConfigError("generator distribution missing 'name'")
        dist = MatrixDistribution.generator(spec["name"], spec.get("params", {}))
    else:
        raise ConfigError(f"unknown distribution type {kind!r}")
    if "n" in doc and int(doc["n"]) != dist.n:
        raise ConfigError(f"config field n={doc['n']} disagrees with distribution dimension {dist.n}")
    return dist


def load_config(source: Union[str, os.PathLike, dict]) -> tuple[MatrixDistribution, RunParams]:
    """Load a config from a file path, raw JSON text, or an already-parsed dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        if isinstance(source, os.PathLike) or (isinstance(source, str) and os.path.exists(source)):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        elif isinstance(source, str):
            text = source
        else:
            raise ConfigError(f"cannot load config from {source!r}")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error at line {exc.lineno}: {exc.msg}") from exc

    dist = distribution_from_config(doc)

    params = RunParams()
    sim = doc.get("simulation", {})
    if not isinstance(sim, dict):
        raise ConfigError("'simulation' must be an object")
    for key in sim:
        if key not in ("paths", "horizon", "eps", "seed", "x0", "p", "mc_samples"):
            raise ConfigError(f"unknown simulation field {key!r}")
    if "paths" in sim:
        params.paths = int(sim["paths"])
    if "horizon" in sim:
        params.horizon = int(sim["horizon"])
    if "eps" in sim:
        params.eps = float(sim["eps"])
    if "seed" in sim:
        params.seed = int(sim["seed"])
    if "p" in sim:
        params.p = float(sim["p"])
    if "mc_samples" in sim:
        params.mc_samples = int(sim["mc_samples"])
    if "x0" in sim:
        params.x0 = sim["x0"]
    if params.paths < 1:
        raise ConfigError("simulation.paths must be >= 1")
    if params.horizon < 1:
        raise ConfigError("simulation.horizon must be >= 1")
    if params.eps <= 0:
        raise ConfigError("simulation.eps must be > 0")
    if params.p < 1:
        raise ConfigError("simulation.p must be >= 1")
    return dist, params


def resolve_x0(x0: Union[str, Sequence[float], np.ndarray], n: int, policy: RngPolicy) -> np.ndarray:
    """Turn the config/CLI initial-state spec into a concrete vector."""
    if isinstance(x0, str):
        if x0 != "uniform01":
            raise ConfigError(f"x0 must be 'uniform01' or an array of {n} reals, got {x0!r}")
        return policy.x0_stream().random(n)
    arr = np.array(x0, dtype=float)
    if arr.shape != (n,):
        raise ConfigError(f"x0 must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("x0 has non-finite entries")
    return arr
