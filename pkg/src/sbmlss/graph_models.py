"""Erdős–Rényi / symmetric SBM samplers and the SNR parameterization."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from os import PathLike

import numpy as np

from .errors import ParameterError

__all__ = [
    "GraphSample",
    "ModelParams",
    "SnrSummary",
    "estimate_p_hat",
    "params_from_t",
    "read_edgelist",
    "replicate_rng",
    "sample_er",
    "sample_graph",
    "sample_sbm",
    "snr_summary",
    "write_edgelist",
]

SeedLike = "int | np.random.Generator | None"


def replicate_rng(seed: int, index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator for replicate ``index`` of an experiment seeded by ``seed``.

    Streams are derived with ``SeedSequence`` spawn keys, so any (seed, index,
    stream) triple is reproducible without reference to other replicates.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), int(stream)))
    return np.random.default_rng(ss)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GraphSample:
    """Undirected simple graph stored as a dense symmetric 0/1 matrix."""

    adjacency: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("adjacency must be square")
        if a.shape[0] < 2:
            raise ParameterError("need at least two nodes")
        if np.any(np.diagonal(a)):
            raise ParameterError("adjacency must have a zero diagonal")
        if not np.array_equal(a, a.T):
            raise ParameterError("adjacency must be symmetric")
        if self.labels is not None and len(self.labels) != a.shape[0]:
            raise ParameterError("labels length does not match node count")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> np.ndarray:
        """(m, 2) array of 0-based pairs with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([i, j])


@dataclass(frozen=True)
class ModelParams:
    n: int
    kappa: int = 1
    p: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        if self.kappa < 1:
            raise ParameterError(f"kappa must be >= 1, got {self.kappa}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name}={v} is not a probability")

    @property
    def p_av(self) -> float:
        if self.kappa == 1:
            return self.p
        return (self.p + (self.kappa - 1) * self.q) / self.kappa


@dataclass(frozen=True)
class SnrSummary:
    a: float
    b: float
    c: float
    t: float
    assortative: bool
    kappa: int

    @property
    def above_kesten_stigum(self) -> bool:
        return self.c > self.kappa


def _check_prob(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0) or np.isnan(p):
        raise ParameterError(f"{name}={p} is not a probability")


def _fill_symmetric(n: int, upper: np.ndarray) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.uint8)
    iu = np.triu_indices(n, 1)
    adj[iu] = upper
    return adj | adj.T


def sample_er(n: int, p: float, seed=None) -> GraphSample:
    """G(n, p): every unordered pair present independently with probability p."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    _check_prob(p)
    rng = _as_rng(seed)
    u = rng.random(n * (n - 1) // 2)
    return GraphSample(_fill_symmetric(n, u < p))


def sample_sbm(n: int, kappa: int, p: float, q: float, seed=None) -> GraphSample:
    """Symmetric SBM with i.i.d. uniform labels in {1..kappa}."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if kappa < 2:
        raise ParameterError(f"SBM needs kappa >= 2, got {kappa}")
    _check_prob(p)
    _check_prob(q, "q")
    rng = _as_rng(seed)
    labels = rng.integers(1, kappa + 1, size=n)
    i, j = np.triu_indices(n, 1)
    prob = np.where(labels[i] == labels[j], p, q)
    u = rng.random(i.size)
    return GraphSample(_fill_symmetric(n, u < prob), labels=labels)


def sample_graph(params: ModelParams, seed=None) -> GraphSample:
    if params.kappa == 1:
        return sample_er(params.n, params.p, seed)
    return sample_sbm(params.n, params.kappa, params.p, params.q, seed)


def estimate_p_hat(graph: GraphSample) -> float:
    n = graph.n
    return 2.0 * graph.edge_count / (n * (n - 1))


def snr_summary(params: ModelParams) -> SnrSummary:
    if params.kappa < 2:
        raise ParameterError("SNR is defined for kappa >= 2")
    n, k = params.n, params.kappa
    a, b = n * params.p, n * params.q
    denom = a + (k - 1) * b
    if denom == 0:
        raise ParameterError("a + (kappa-1) b = 0: degenerate parameters")
    c = (a - b) ** 2 / denom
    p_av = params.p_av
    if p_av >= 1.0:
        raise ParameterError("p_av = 1: t is undefined")
    t = sqrt(c / (2.0 * (1.0 - p_av)))
    return SnrSummary(a=a, b=b, c=c, t=t, assortative=params.p > params.q, kappa=k)


def params_from_t(n: int, p_av: float, t: float, kappa: int = 2, assortative: bool = True) -> ModelParams:
    """(p, q) with the given average probability and signal strength t.

    Inverts c = 2(1 - p_av) t^2 and a + (kappa-1) b = kappa n p_av.
    """
    if kappa < 2:
        raise ParameterError("kappa must be >= 2")
    if not 0.0 < p_av < 1.0:
        raise ParameterError(f"p_av={p_av} must lie in (0, 1)")
    if t < 0:
        raise ParameterError("t must be nonnegative")
    c = 2.0 * (1.0 - p_av) * t * t
    total = kappa * n * p_av  # a + (kappa-1) b
    d = sqrt(c * total)
    if not assortative:
        d = -d
    b = (total - d) / kappa
    a = b + d
    p, q = a / n, b / n
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ParameterError(f"t={t} infeasible at n={n}, p_av={p_av}: p={p:.4g}, q={q:.4g}")
    return ModelParams(n=n, kappa=kappa, p=p, q=q)


def write_edgelist(graph: GraphSample, path: str | PathLike) -> None:
    """Edge-list text: first line ``n``, then one ``i j`` pair (0-based, i < j) per line."""
    with open(path, "w") as fh:
        fh.write(f"{graph.n}\n")
        for i, j in graph.edges():
            fh.write(f"{i} {j}\n")


def read_edgelist(path: str | PathLike) -> GraphSample:
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParameterError(f"{path}: empty edge list")
    try:
        n = int(lines[0])
        pairs = [tuple(int(v) for v in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed edge list ({exc})") from None
    adj = np.zeros((n, n), dtype=np.uint8)
    for pair in pairs:
        if len(pair) != 2:
            raise ParameterError(f"{path}: expected 'i j', got {pair}")
        i, j = pair
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParameterError(f"{path}: invalid edge {i} {j} for n={n}")
        adj[i, j] = adj[j, i] = 1
    return GraphSample(adj)
