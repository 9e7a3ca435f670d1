"""Typicality projectors and the operator bounds built on them.

For a word ``x^n`` the conditional projector ``psi(x^n)`` keeps the
eigenvectors ``e_{y^n|x^n}`` whose eigenvalue satisfies
``n(H_P - eps) < -log P(y^n|x^n) < n(H_P + eps)``; ``theta`` does the same
for ``D_P^(x)n`` with ``U`` and ``H_U``. Both windows are open, so eigenvalues
landing exactly on an edge (and zero eigenvalues) are atypical.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, rng as rngmod
from .channels import CqChannel, as_distribution, d_nfold, sample_words, spectral_kernel
from .errors import BoundViolated, DimensionOverflow, EnumerationBudgetExceeded
from .measures import entropy_hp, entropy_hu, renyi_conditional, renyi_output
from .resolvability import ENUMERATION_BUDGET, lemma5_exponents, product_output

OPERATOR_SLACK = 1e-9


def _neglog(p: np.ndarray) -> np.ndarray:
    out = np.full(p.shape, np.inf)
    pos = p > 0
    out[pos] = -np.log(p[pos])
    return out


def _kron_sum(rows) -> np.ndarray:
    """Vector of ``sum_i rows[i][y_i]`` over ``y^n`` in lexicographic order."""
    out = np.zeros(1)
    for r in rows:
        out = (out[:, None] + r[None, :]).reshape(-1)
    return out


def _kron_prod(rows) -> np.ndarray:
    out = np.ones(1)
    for r in rows:
        out = np.outer(out, r).reshape(-1)
    return out


class TypicalityProjectors:
    """Typicality data for block length ``n`` and slack ``epsilon``."""

    def __init__(self, d: CqChannel, p, n: int, epsilon: float, limit: int | None = None):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        limit = linalg.max_dim() if limit is None else limit
        if d.dim ** n > limit:
            raise DimensionOverflow(d.dim, n, limit)
        self.d, self.n, self.epsilon = d, n, epsilon
        self.kernel = spectral_kernel(d, p)
        self.h_p = entropy_hp(d, p)
        self.h_u = entropy_hu(d, p)
        self._neglog_rows = _neglog(self.kernel.eigenvalues)
        neglog_u = _kron_sum([_neglog(self.kernel.output_spectrum)] * n)
        self.theta_mask = self._window(neglog_u, self.h_u)
        self.output_probs = _kron_prod([self.kernel.output_spectrum] * n)
        self._basis_u = linalg.tensor_all([self.kernel.output_basis] * n, limit=limit)

    def _window(self, neglog: np.ndarray, h: float) -> np.ndarray:
        n, eps = self.n, self.epsilon
        return (neglog > n * (h - eps)) & (neglog < n * (h + eps))

    # conditional side
    def eigenvalues(self, word) -> np.ndarray:
        return _kron_prod([self.kernel.eigenvalues[x] for x in word])

    def psi_mask(self, word) -> np.ndarray:
        return self._window(_kron_sum([self._neglog_rows[x] for x in word]), self.h_p)

    def basis(self, word) -> np.ndarray:
        return linalg.tensor_all([self.kernel.bases[x] for x in word])

    def psi(self, word) -> np.ndarray:
        v = self.basis(word)
        return (v * self.psi_mask(word)) @ v.conj().T

    def gamma(self, word) -> np.ndarray:
        return self.theta @ self.psi(word)

    # output side
    @property
    def theta(self) -> np.ndarray:
        v = self._basis_u
        return (v * self.theta_mask) @ v.conj().T

    @property
    def theta_rank(self) -> int:
        return int(self.theta_mask.sum())

    def overlap(self, word) -> np.ndarray:
        """``|<e_k | e_{j|x^n}>|^2`` indexed ``[k, j]``."""
        per_letter = [np.abs(self.kernel.output_basis.conj().T @ self.kernel.bases[x]) ** 2 for x in word]
        out = per_letter[0]
        for o in per_letter[1:]:
            out = np.kron(out, o)
        return out

    def typical_overlap(self, word) -> float:
        """``tr(D^n(x^n) Gamma(x^n)^dagger)`` from per-letter overlaps."""
        weights = self.eigenvalues(word) * self.psi_mask(word)
        return float(self.theta_mask @ self.overlap(word) @ weights)


def build_typicality(d: CqChannel, p, n: int, epsilon: float) -> TypicalityProjectors:
    return TypicalityProjectors(d, p, n, epsilon)


def _all_words(k: int, n: int):
    return (np.array(w, dtype=np.int64) for w in itertools.product(range(k), repeat=n))


@dataclass
class TypicalBoundsReport:
    n: int
    epsilon: float
    words_checked: int
    joint_margin: float  # min eigenvalue of exp(-n(H_P-eps)) psi - psi D psi
    output_margin: float
    theta_trace: float
    theta_trace_bound: float
    witness: object = None

    @property
    def passed(self) -> bool:
        return (self.joint_margin >= -OPERATOR_SLACK and self.output_margin >= -OPERATOR_SLACK
                and self.theta_trace < self.theta_trace_bound)


def check_typical_bounds(d: CqChannel, p, n: int, epsilon: float, words=None, *, raise_on_failure=False
                         ) -> TypicalBoundsReport:
    """Eigenvalue checks of the three operator bounds for typical terms.

    ``words`` defaults to every word in ``X^n``.
    """
    tp = build_typicality(d, p, n, epsilon)
    if words is None:
        words = list(_all_words(d.input_size, n))
    joint_scale = math.exp(-n * (tp.h_p - epsilon))
    joint_margin, witness = math.inf, None
    count = 0
    for w in words:
        w = np.asarray(w, dtype=np.int64)
        psi = tp.psi(w)
        gap = joint_scale * psi - psi @ d_nfold(d, w) @ psi
        m = float(linalg.eigvalsh(linalg.hermitize(gap))[-1])
        if m < joint_margin:
            joint_margin, witness = m, tuple(int(x) for x in w)
        count += 1
    theta = tp.theta
    out_gap = math.exp(-n * (tp.h_u - epsilon)) * theta - theta @ product_output(d, p, n) @ theta
    output_margin = float(linalg.eigvalsh(linalg.hermitize(out_gap))[-1])
    report = TypicalBoundsReport(n, epsilon, count, joint_margin, output_margin,
                                 float(np.trace(theta).real), math.exp(n * (tp.h_u + epsilon)), witness)
    if raise_on_failure and not report.passed:
        raise BoundViolated("typical-term operator bound violated", witness=report)
    return report


@dataclass
class AtypicalMassReport:
    n: int
    epsilon: float
    alphas: tuple
    joint_mass: float
    output_mass: float
    joint_bound: float
    output_bound: float
    exponents: tuple
    typical_overlap: float  # E tr(D^n(X^n) Gamma(X^n)^dagger)

    @property
    def split_margin(self) -> float:
        return self.typical_overlap - (1 - self.joint_mass - self.output_mass)

    @property
    def passed(self) -> bool:
        return (self.joint_mass <= self.joint_bound + 1e-12
                and self.output_mass <= self.output_bound + 1e-12
                and self.split_margin >= -1e-10)


def exact_atypical_masses(d: CqChannel, p, n: int, epsilon: float):
    """``(P(joint atypical), U(output atypical), E tr(D^n Gamma^dagger), projectors)``.

    Enumerates ``X^n x {0..d-1}^n`` (at most 1e6 terms), so the masses are
    exact rather than sampled.
    """
    p = as_distribution(p)
    k, dim = d.input_size, d.dim
    if (k * dim) ** n > ENUMERATION_BUDGET:
        raise EnumerationBudgetExceeded(f"(|X| d)^n = {(k * dim) ** n} exceeds {ENUMERATION_BUDGET}")
    tp = build_typicality(d, p, n, epsilon)
    joint_mass = overlap = 0.0
    for w in _all_words(k, n):
        pw = float(np.prod(p[w]))
        if pw == 0:
            continue
        probs = tp.eigenvalues(w)
        joint_mass += pw * float(probs[~tp.psi_mask(w)].sum())
        overlap += pw * tp.typical_overlap(w)
    output_mass = float(tp.output_probs[~tp.theta_mask].sum())
    return joint_mass, output_mass, overlap, tp


def atypical_mass(d: CqChannel, p, n: int, epsilon: float, alphas, *, raise_on_failure=False
                  ) -> AtypicalMassReport:
    """Exact atypical masses against the Markov bounds at one alpha choice."""
    return atypical_mass_audit(d, p, n, epsilon, [alphas], raise_on_failure=raise_on_failure)[0]


def atypical_mass_audit(d: CqChannel, p, n: int, epsilon: float, alpha_grid, *, raise_on_failure=False
                        ) -> list:
    """:func:`atypical_mass` for many ``(a1, a2, a3, a4)`` with one enumeration."""
    p = as_distribution(p)
    joint_mass, output_mass, overlap, tp = exact_atypical_masses(d, p, n, epsilon)
    reports = []
    for alphas in alpha_grid:
        comps = lemma5_exponents(tp.h_p, tp.h_u, lambda a: renyi_conditional(d, p, a),
                                 lambda a: renyi_output(d, p, a), epsilon, tuple(alphas))
        joint_bound = math.exp(-n * comps[0]) + math.exp(-n * comps[1])
        output_bound = math.exp(-n * comps[2]) + math.exp(-n * comps[3])
        report = AtypicalMassReport(n, epsilon, tuple(alphas), joint_mass, output_mass, joint_bound,
                                    output_bound, comps, overlap)
        if raise_on_failure and not report.passed:
            raise BoundViolated("atypical-mass bound violated", witness=report)
        reports.append(report)
    return reports


# -- symmetrization --------------------------------------------------------

@dataclass
class SymmetrizationReport:
    ell: int
    trials: int
    lhs: np.ndarray
    rhs_first: float   # 2 tr sqrt(E T^dagger T / ell)
    rhs_second: float  # 2 tr sqrt(E T T^dagger / ell)

    @property
    def lhs_mean(self) -> float:
        return float(np.mean(self.lhs))

    @property
    def lhs_stderr(self) -> float:
        return float(np.std(self.lhs, ddof=1) / math.sqrt(self.trials)) if self.trials > 1 else 0.0

    @property
    def passed(self) -> bool:
        return self.lhs_mean <= min(self.rhs_first, self.rhs_second) + 3 * self.lhs_stderr


def symmetrization_check(t_map, p, n: int, ell: int, trials: int, seed: int) -> SymmetrizationReport:
    """Monte Carlo ``E||T_X - E T_X||_tr`` against both square-root bounds.

    ``t_map`` maps a word of length ``n`` (an int array) to a square matrix.
    Expectations over a single word are exact sums over ``X^n``.
    """
    p = as_distribution(p)
    words = list(_all_words(p.size, n))
    if len(words) > ENUMERATION_BUDGET:
        raise EnumerationBudgetExceeded(f"|X|^n = {len(words)} exceeds {ENUMERATION_BUDGET}")
    probs = np.array([np.prod(p[w]) for w in words])
    ts = np.stack([np.asarray(t_map(w), dtype=complex) for w in words])
    mean_t = np.tensordot(probs, ts, axes=1)
    tdt = np.tensordot(probs, np.conj(np.swapaxes(ts, 1, 2)) @ ts, axes=1)
    ttd = np.tensordot(probs, ts @ np.conj(np.swapaxes(ts, 1, 2)), axes=1)
    rhs1 = 2 * float(np.trace(linalg.sqrtm_psd(linalg.hermitize(tdt / ell))).real)
    rhs2 = 2 * float(np.trace(linalg.sqrtm_psd(linalg.hermitize(ttd / ell))).real)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    lhs = np.empty(trials)
    for t in range(trials):
        g = rngmod.stream(seed, t, "symmetrization")
        idx = np.searchsorted(cdf, g.random(ell), side="right")
        lhs[t] = linalg.trace_norm(ts[idx].mean(axis=0) - mean_t)
    return SymmetrizationReport(ell, trials, lhs, rhs1, rhs2)
