"""Channel and distribution data model.

Alphabets are the integer ranges ``0..k-1``. A classical channel ``W`` is a
row-stochastic matrix ``kernel[x, xhat]``; a cq channel ``D`` is a stack of
density matrices ``states[x]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import linalg
from .errors import LengthMismatch, SizeMismatch

PMF_TOL = 1e-12
ZERO_EIG = 1e-14


def as_distribution(p, name: str = "distribution") -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise ValueError(f"{name} sums to {p.sum()!r}, expected 1")
    return p


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


@dataclass(frozen=True, eq=False)
class ClassicalChannel:
    kernel: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2:
            raise ValueError("kernel must be a 2-d matrix")
        if np.any(k < 0) or np.any(np.abs(k.sum(axis=1) - 1.0) > PMF_TOL):
            raise ValueError("kernel rows must be probability vectors")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def input_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def output_size(self) -> int:
        return self.kernel.shape[1]

    def output_distribution(self, p) -> np.ndarray:
        p = as_distribution(p)
        if p.size != self.input_size:
            raise SizeMismatch(f"distribution has {p.size} symbols, channel expects {self.input_size}")
        return p @ self.kernel

    def transmit(self, word, rng: np.random.Generator) -> np.ndarray:
        """Pass a word through the memoryless channel."""
        word = np.asarray(word, dtype=np.int64)
        cdf = np.cumsum(self.kernel[word], axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(word.size)
        return (u[:, None] >= cdf).sum(axis=1).astype(np.int64)

    def to_json(self) -> dict:
        return {"kind": "classical", "kernel": self.kernel.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "ClassicalChannel":
        return cls(np.array(doc["kernel"], dtype=float))


@dataclass(frozen=True, eq=False)
class CqChannel:
    """Classical-quantum channel ``x -> states[x]``."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=complex)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise ValueError("states must have shape (input_size, dim, dim)")
        for x, rho in enumerate(s):
            linalg.check_density(rho, name=f"state[{x}]")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def input_size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @cached_property
    def decompositions(self) -> tuple:
        return tuple(linalg.spectral_decompose(rho) for rho in self.states)

    def to_json(self) -> dict:
        return {
            "kind": "cq",
            "dim": self.dim,
            "input_size": self.input_size,
            "states": [[[[z.real, z.imag] for z in row] for row in rho] for rho in self.states],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CqChannel":
        arr = np.array(doc["states"], dtype=float)
        states = arr[..., 0] + 1j * arr[..., 1]
        if states.shape != (doc["input_size"], doc["dim"], doc["dim"]):
            raise ValueError(f"states shape {states.shape} disagrees with input_size/dim")
        return cls(states)


def save_channel(channel, path) -> None:
    Path(path).write_text(json.dumps(channel.to_json(), indent=1))


def load_channel(path):
    doc = json.loads(Path(path).read_text())
    return channel_from_json(doc)


def channel_from_json(doc: dict):
    if "states" in doc:
        return CqChannel.from_json(doc)
    if "kernel" in doc:
        return ClassicalChannel.from_json(doc)
    raise ValueError("channel document needs either 'states' or 'kernel'")


# -- presets ---------------------------------------------------------------

KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
KETPLUS = np.array([1.0, 1.0]) / np.sqrt(2)


def bsc(p: float) -> ClassicalChannel:
    return ClassicalChannel(np.array([[1 - p, p], [p, 1 - p]]))


def identity_channel(k: int = 2) -> ClassicalChannel:
    return ClassicalChannel(np.eye(k))


def constant_cq(rho, input_size: int = 2) -> CqChannel:
    rho = np.asarray(rho, dtype=complex)
    return CqChannel(np.stack([rho] * input_size))


def orthogonal() -> CqChannel:
    return CqChannel(np.stack([linalg.ket_projector(KET0), linalg.ket_projector(KET1)]))


def bb84_pair() -> CqChannel:
    return CqChannel(np.stack([linalg.ket_projector(KET0), linalg.ket_projector(KETPLUS)]))


def depolarized_pair(q: float = 0.5) -> CqChannel:
    half = np.eye(2) / 2
    return CqChannel(np.stack([
        (1 - q) * linalg.ket_projector(KET0) + q * half,
        (1 - q) * linalg.ket_projector(KET1) + q * half,
    ]))


CQ_PRESETS = {
    "orthogonal": orthogonal,
    "bb84-pair": bb84_pair,
    "depolarized-pair": depolarized_pair,
}


def cq_preset(name: str, **params) -> CqChannel:
    key = name.replace(" ", "-").replace("_", "-")
    if key not in CQ_PRESETS:
        raise KeyError(f"unknown cq preset {name!r}; choose from {sorted(CQ_PRESETS)}")
    return CQ_PRESETS[key](**params)


def classical_preset(name: str, **params) -> ClassicalChannel:
    key = name.lower()
    if key == "bsc":
        return bsc(params.get("p", 0.1))
    if key == "identity":
        return identity_channel(params.get("k", 2))
    raise KeyError(f"unknown classical preset {name!r}; choose from ['bsc', 'identity']")


# -- operations ------------------------------------------------------------

def _check_sizes(d: CqChannel, p) -> np.ndarray:
    p = as_distribution(p)
    if p.size != d.input_size:
        raise SizeMismatch(f"distribution has {p.size} symbols, channel expects {d.input_size}")
    return p


def average_output(d: CqChannel, p) -> np.ndarray:
    """``D_P = sum_x P(x) D(x)``."""
    p = _check_sizes(d, p)
    return linalg.hermitize(np.tensordot(p, d.states, axes=1))


def d_nfold(d: CqChannel, word, limit: int | None = None) -> np.ndarray:
    """``D(x_1) (x) ... (x) D(x_n)``."""
    word = np.asarray(word, dtype=np.int64).reshape(-1)
    return linalg.tensor_all([d.states[x] for x in word], limit=limit)


def w_nfold_prob(w: ClassicalChannel, word, received) -> float:
    word = np.asarray(word, dtype=np.int64).reshape(-1)
    received = np.asarray(received, dtype=np.int64).reshape(-1)
    if word.size != received.size:
        raise LengthMismatch(f"word lengths differ: {word.size} vs {received.size}")
    return float(np.prod(w.kernel[word, received]))


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """Eigen-data of a cq channel under an input distribution.

    ``eigenvalues[x, y]`` is the probability of eigen-index ``y`` given ``x``
    (each row non-increasing), ``bases[x]`` holds the matching eigenvectors as
    columns, and ``output_spectrum``/``output_basis`` decompose ``D_P``.
    """

    eigenvalues: np.ndarray
    bases: np.ndarray
    output_spectrum: np.ndarray
    output_basis: np.ndarray
    input_distribution: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[1]


def _clean(w: np.ndarray) -> np.ndarray:
    # eigenvalues at rounding level are exact zeros: they must read as P(y|x) = 0
    w = w.copy()
    w[np.abs(w) <= ZERO_EIG] = 0.0
    return w


def spectral_kernel(d: CqChannel, p) -> SpectralKernel:
    p = _check_sizes(d, p)
    decs = d.decompositions
    out = linalg.spectral_decompose(average_output(d, p))
    return SpectralKernel(
        eigenvalues=_clean(np.stack([sd.eigenvalues for sd in decs])),
        bases=np.stack([sd.eigenvectors for sd in decs]),
        output_spectrum=_clean(out.eigenvalues),
        output_basis=out.eigenvectors,
        input_distribution=p,
    )


def sample_word(p, n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. word of length ``n`` by inverse-CDF sampling over ``0..k-1``."""
    return sample_words(p, (n,), rng)


def sample_words(p, shape, rng: np.random.Generator) -> np.ndarray:
    p = as_distribution(p)
    cdf = np.cumsum(p)
    last = int(np.flatnonzero(p > 0)[-1])
    cdf[last:] = 1.0
    u = rng.random(shape)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)
