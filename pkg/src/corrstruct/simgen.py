"""Synthetic multiset data with a known correlation structure.

Components follow a one-factor model per component: inside the correlated
collection every set loads on a shared factor, which yields unit variance
and a common pairwise correlation. Each set mixes its components with a
random orthogonal matrix and adds Gaussian noise scaled to the SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import ActivationMatrix, CorrelationStructure, MultiSetSample, structure_to_activation

RHO_FIRST = 0.85
RHO_LAST = 0.5
RHO_CLIP = (0.05, 0.99)


class InfeasibleScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Contamination:
    """epsilon-contamination of the additive noise.

    Each sample (column) of a set is contaminated independently with
    probability eps. ``wideband``: the sample's noise vector is replaced by a
    Gaussian draw with ``scale`` times the nominal standard deviation, so
    eps = 1 swaps the noise distribution entirely. ``pointmass``: ``delta``
    is added to the listed rows of the sample in the listed sets. ``None``
    for rows or sets means all of them.
    """

    kind: str = "none"
    eps: float = 0.0
    scale: float = 3.0
    delta: float = 10.0
    rows: tuple[int, ...] | None = None
    sets: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("none", "wideband", "pointmass"):
            raise ValueError(f"unknown contamination kind {self.kind!r}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps={self.eps} must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    K: int
    J: int
    N: int
    snr_db: float = 5.0
    pi0: float = 0.7
    distribution: str = "gaussian"
    contamination: Contamination = field(default_factory=Contamination)
    I: int | None = None
    structure: CorrelationStructure | None = None

    def __post_init__(self):
        if self.K < 2 or self.J < 1 or self.N < 2:
            raise ValueError("need K >= 2, J >= 1, N >= 2")
        if not 0.0 <= self.pi0 < 1.0:
            raise ValueError(f"pi0={self.pi0} must lie in [0, 1)")
        if not np.isfinite(self.snr_db):
            raise ValueError("SNR must be finite")
        if self.distribution not in ("gaussian", "laplacian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.dim < self.J:
            raise ValueError(f"I={self.dim} must be at least J={self.J}")
        if self.structure is not None and (self.structure.J, self.structure.K) != (self.J, self.K):
            raise ValueError("fixed structure does not match J, K")

    @property
    def dim(self) -> int:
        return self.J if self.I is None else self.I

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    def with_param(self, name: str, value) -> "ScenarioConfig":
        if name in ("eps", "epsilon"):
            return replace(self, contamination=replace(self.contamination, eps=float(value)))
        if name == "snr":
            name = "snr_db"
        if name in ("K", "J", "N", "I"):
            value = int(value)
        return replace(self, **{name: value})


def _as_rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def rho_mean(j: int, D: int) -> float:
    """Mean coefficient of component j (0-based), linear from 0.85 down to 0.5."""
    if D <= 1:
        return RHO_FIRST
    return RHO_FIRST - (RHO_FIRST - RHO_LAST) / (D - 1) * j


def rho_std(D: int) -> float:
    return 0.0 if D <= 1 else 0.33 * (RHO_FIRST - RHO_LAST) / (D - 1)


def component_sizes(D: int, K: int) -> list[int]:
    """Number of correlated sets per component: the last one spans 2 sets,
    each earlier one spans one more, capped at K."""
    return [min(D + 1 - j, K) for j in range(D)]


def n_correlated(pi0: float, J: int, K: int) -> int:
    budget = (1.0 - pi0) * J * K
    D = 0
    for d in range(1, J + 1):
        if sum(component_sizes(d, K)) <= budget + 1e-9:
            D = d
    if D < 1:
        raise InfeasibleScenarioError(
            f"pi0={pi0} leaves {budget:.2f} non-zero entries in a {J}x{K} activation "
            "matrix; at least 2 are required")
    return D


def random_structure(cfg: ScenarioConfig, rng=None) -> CorrelationStructure:
    rng = _as_rng(rng)
    D = n_correlated(cfg.pi0, cfg.J, cfg.K)
    sets, rho = [], []
    sd = rho_std(D)
    for j, size in enumerate(component_sizes(D, cfg.K)):
        sets.append(frozenset(np.sort(rng.choice(cfg.K, size=size, replace=False)).tolist()))
        rho.append(float(np.clip(rng.normal(rho_mean(j, D), sd), *RHO_CLIP)))
    sets += [frozenset()] * (cfg.J - D)
    rho += [0.0] * (cfg.J - D)
    return CorrelationStructure(K=cfg.K, sets=tuple(sets), rho=tuple(rho))


def _draw(rng: np.random.Generator, dist: str, size) -> np.ndarray:
    if dist == "laplacian":
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size=size)
    return rng.standard_normal(size)


def random_orthogonal(rng: np.random.Generator, I: int, J: int) -> np.ndarray:
    """I x J matrix with orthonormal columns, QR of a Gaussian matrix with
    the signs of R's diagonal fixed positive."""
    Q, R = np.linalg.qr(rng.standard_normal((I, J)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def latent_components(cs: CorrelationStructure, N: int, rng=None,
                      distribution: str = "gaussian") -> list[np.ndarray]:
    """Per-set J x N component matrices realizing the structure."""
    rng = _as_rng(rng)
    L = cs.factor_loadings()
    shared = _draw(rng, distribution, (cs.J, N))
    out = []
    for k in range(cs.K):
        a = L[:, k:k + 1]
        own = _draw(rng, distribution, (cs.J, N))
        out.append(a * shared + np.sqrt(1.0 - a ** 2) * own)
    return out


def _contaminate(noise: np.ndarray, k: int, c: Contamination, sigma: float,
                 rng: np.random.Generator) -> np.ndarray:
    if c.kind == "none" or c.eps == 0.0:
        return noise
    if c.kind == "wideband":
        hit = rng.random(noise.shape[1]) < c.eps
        wide = c.scale * sigma * rng.standard_normal(noise.shape)
        return np.where(hit[None, :], wide, noise)
    if c.sets is not None and k not in c.sets:
        return noise
    rows = np.arange(noise.shape[0]) if c.rows is None else np.asarray(c.rows)
    hit = rng.random(noise.shape[1]) < c.eps
    out = noise.copy()
    out[np.ix_(rows, np.flatnonzero(hit))] += c.delta
    return out


def generate(cfg: ScenarioConfig, cs: CorrelationStructure | None = None,
             rng=None) -> tuple[MultiSetSample, ActivationMatrix]:
    """Draw one data realization. Returns the sample and its true activation matrix."""
    rng = _as_rng(rng)
    if cs is None:
        cs = cfg.structure if cfg.structure is not None else random_structure(cfg, rng)
    if (cs.J, cs.K) != (cfg.J, cfg.K):
        raise ValueError("structure does not match the scenario's J and K")
    S = latent_components(cs, cfg.N, rng, cfg.distribution)
    sigma = np.sqrt(cfg.noise_var)
    sets = []
    for k in range(cfg.K):
        A = random_orthogonal(rng, cfg.dim, cfg.J)
        noise = sigma * rng.standard_normal((cfg.dim, cfg.N))
        noise = _contaminate(noise, k, cfg.contamination, sigma, rng)
        sets.append(A @ S[k] + noise)
    return MultiSetSample(tuple(sets)), structure_to_activation(cs)


PRESET1_STRUCTURE = CorrelationStructure(
    K=15,
    sets=(
        frozenset(range(0, 7)),
        frozenset(range(3, 9)),
        frozenset(range(6, 11)),
        frozenset(range(9, 13)),
        frozenset(range(11, 14)),
        frozenset(range(13, 15)),
    ) + (frozenset(),) * 4,
    rho=(0.7, 0.7, 0.65, 0.6, 0.6, 0.55) + (0.0,) * 4,
)

SCENARIOS: dict[str, ScenarioConfig] = {
    "1": ScenarioConfig(K=15, J=10, N=300, snr_db=5.0, structure=PRESET1_STRUCTURE),
    "2": ScenarioConfig(K=20, J=10, N=175, snr_db=5.0, pi0=0.7),
    "3": ScenarioConfig(K=15, J=10, N=500, snr_db=5.0, pi0=0.8, distribution="laplacian"),
    "3b": ScenarioConfig(K=15, J=10, N=500, snr_db=5.0, pi0=0.9, distribution="laplacian"),
    "4": ScenarioConfig(K=25, J=10, N=600, snr_db=5.0, pi0=0.7),
    "5a": ScenarioConfig(K=12, J=6, N=1000, snr_db=5.0, pi0=0.8,
                         contamination=Contamination("wideband", eps=0.0)),
    "5b": ScenarioConfig(K=12, J=6, N=1000, snr_db=5.0, pi0=0.8,
                         contamination=Contamination("pointmass", eps=0.0,
                                                     rows=(0, 1, 2, 3),
                                                     sets=tuple(range(8)))),
}
