"""Eavesdropper success, guessing and advantage for message partitions.

A partition is a sequence of disjoint blocks of 0-based message indices that
covers ``0..L-1``. For two blocks the optimal success probability has the
closed Helstrom form; for more blocks the pretty-good measurement supplies a
lower bound, and the pairwise trace-distance bound ``delta`` an upper bound on
the advantage.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import PartitionArityError

EXHAUSTIVE_MAX_L = 8
SAMPLED_PARTITIONS = 200


def check_partition(blocks, size: int) -> tuple:
    blocks = tuple(tuple(int(m) for m in b) for b in blocks)
    seen = [m for b in blocks for m in b]
    if any(len(b) == 0 for b in blocks):
        raise ValueError("partition blocks must be non-empty")
    if len(seen) != len(set(seen)) or sorted(seen) != list(range(size)):
        raise ValueError(f"blocks must be disjoint and cover 0..{size - 1}")
    return blocks


def check_prior(prior) -> np.ndarray:
    prior = np.asarray(prior, dtype=float)
    if prior.ndim != 1 or np.any(prior < 0) or abs(prior.sum() - 1) > 1e-12:
        raise ValueError("prior must be a probability vector")
    return prior


def block_masses(blocks, prior) -> np.ndarray:
    return np.array([prior[list(b)].sum() for b in blocks])


def guess_probability(blocks, prior) -> float:
    """Best success probability without observing anything: the heaviest block."""
    prior = check_prior(prior)
    blocks = check_partition(blocks, prior.size)
    return float(block_masses(blocks, prior).max())


def _aggregates(blocks, prior, states) -> list:
    states = np.asarray(states, dtype=complex)
    return [np.tensordot(prior[list(b)], states[list(b)], axes=1) for b in blocks]


def success_binary(blocks, prior, states) -> float:
    """Optimal two-outcome success ``(1 + ||S_0 - S_1||_tr) / 2``."""
    prior = check_prior(prior)
    blocks = check_partition(blocks, prior.size)
    if len(blocks) != 2:
        raise PartitionArityError(f"success_binary needs exactly 2 blocks, got {len(blocks)}")
    s0, s1 = _aggregates(blocks, prior, states)
    return 0.5 * (1.0 + linalg.trace_norm(linalg.hermitize(s0 - s1)))


def pgm_measurement(aggregates) -> list:
    """Pretty-good measurement ``S^{-1/2} S_pi S^{-1/2}``.

    The projector onto the kernel of ``S = sum S_pi`` is added to the first
    element so the operators sum to the identity.
    """
    total = linalg.hermitize(sum(aggregates))
    sd = linalg.spectral_decompose(total)
    scale = max(1.0, float(np.abs(sd.eigenvalues).max()))
    support = sd.eigenvalues > 1e-12 * scale
    inv_sqrt = np.zeros_like(sd.eigenvalues)
    inv_sqrt[support] = 1.0 / np.sqrt(sd.eigenvalues[support])
    v = sd.eigenvectors
    root = (v * inv_sqrt) @ v.conj().T
    kernel = (v * (~support)) @ v.conj().T
    povm = [root @ s @ root for s in aggregates]
    povm[0] = povm[0] + kernel
    return povm


def success_pgm(blocks, prior, states) -> float:
    """Success of the pretty-good measurement, a lower bound on the optimum."""
    prior = check_prior(prior)
    blocks = check_partition(blocks, prior.size)
    aggs = _aggregates(blocks, prior, states)
    povm = pgm_measurement(aggs)
    return float(sum(np.trace(f @ s).real for f, s in zip(povm, aggs)))


def max_pairwise_distance(states) -> float:
    states = list(states)
    return max((linalg.trace_distance(a, b) for a, b in itertools.combinations(states, 2)), default=0.0)


def binary_partitions(size: int):
    """All 2**(size-1) - 1 two-block partitions; message 0 always in block 0."""
    for mask in range(1, 2 ** (size - 1)):
        second = [m for m in range(1, size) if mask >> (m - 1) & 1]
        first = [m for m in range(size) if m not in second]
        yield (tuple(first), tuple(second))


def random_binary_partition(size: int, rng: np.random.Generator) -> tuple:
    while True:
        side = rng.integers(2, size=size)
        side[0] = 0
        if side.any():
            return (tuple(np.flatnonzero(side == 0).tolist()), tuple(np.flatnonzero(side == 1).tolist()))


@dataclass
class AuditRow:
    partition_id: int
    prior_id: int
    guess: float
    succ_lower: float
    succ_exact: float | None
    advantage: float
    delta_bound: float

    @property
    def passed(self) -> bool:
        return self.advantage <= self.delta_bound + 1e-9


@dataclass
class AuditReport:
    delta: float
    rows: list = field(default_factory=list)
    partitions: list = field(default_factory=list)
    exhaustive: bool = True

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def worst(self) -> AuditRow | None:
        return max(self.rows, key=lambda r: r.advantage, default=None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["partition_id", "prior_id", "guess", "succ_lower", "succ_exact_or_blank",
                      "advantage", "delta_bound", "pass"])
        for r in self.rows:
            exact = "" if r.succ_exact is None else f"{r.succ_exact:.17g}"
            out.writerow([r.partition_id, r.prior_id, f"{r.guess:.17g}", f"{r.succ_lower:.17g}", exact,
                          f"{r.advantage:.17g}", f"{r.delta_bound:.17g}", int(r.passed)])
        return buf.getvalue()


def advantage_audit(states, priors, partitions=None, *, rng: np.random.Generator | None = None
                    ) -> AuditReport:
    """Audit ``Succ - Guess <= delta`` over partitions and priors.

    With ``partitions=None`` every binary partition is audited when there are
    at most 8 messages, otherwise 200 random binary ones (``rng`` required).
    Binary partitions use the exact optimum; larger ones the PGM lower bound,
    so their advantage column is a lower bound too.
    """
    states = [np.asarray(s, dtype=complex) for s in states]
    size = len(states)
    delta = max_pairwise_distance(states)
    exhaustive = partitions is None and size <= EXHAUSTIVE_MAX_L
    if partitions is None:
        if exhaustive:
            partitions = list(binary_partitions(size))
        else:
            if rng is None:
                raise ValueError("sampling partitions needs an rng")
            partitions = [random_binary_partition(size, rng) for _ in range(SAMPLED_PARTITIONS)]
    report = AuditReport(delta, partitions=list(partitions), exhaustive=exhaustive)
    for j, prior in enumerate(priors):
        prior = check_prior(prior)
        for i, blocks in enumerate(partitions):
            guess = guess_probability(blocks, prior)
            lower = success_pgm(blocks, prior, states)
            exact = success_binary(blocks, prior, states) if len(blocks) == 2 else None
            succ = exact if exact is not None else lower
            report.rows.append(AuditRow(i, j, guess, lower, exact, succ - guess, delta))
    return report
