"""Random-codebook resolvability for cq channels.

A standard random codebook is ``M`` words of length ``n`` drawn i.i.d. from
``P``. Its induced output state is the uniform mixture of the n-fold channel
outputs; the quantity of interest is its trace distance to ``D_P^{(x)n}``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg, rng as rngmod
from .channels import CqChannel, as_distribution, average_output, d_nfold, sample_words
from .errors import BudgetExceeded, EnumerationBudgetExceeded, NoPositiveExponent, RateTooLow
from .measures import entropy_hp, entropy_hu, holevo_information, renyi_conditional, renyi_output

MAX_CODEBOOK = 1 << 16
ENUMERATION_BUDGET = 10 ** 6
HIGH_ALPHAS = (1.25, 1.5, 2.0, 3.0)
LOW_ALPHAS = (0.5, 0.75, 0.9)


@dataclass(frozen=True, eq=False)
class Codebook:
    words: np.ndarray

    def __post_init__(self):
        w = np.array(self.words, dtype=np.int64, ndmin=2)
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def n(self) -> int:
        return self.words.shape[1]

    @property
    def m_size(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, m):
        return self.words[m]

    def __len__(self):
        return self.m_size


def sample_codebook(p, n: int, m_size: int, rng: np.random.Generator) -> Codebook:
    if n < 1 or m_size < 1:
        raise ValueError("n and M must be positive")
    return Codebook(sample_words(p, (m_size, n), rng))


def codebook_size(n: int, rate: float) -> int:
    """Smallest integer ``M`` with ``M >= exp(n R)`` (1e-9 slack for rounding)."""
    return max(1, math.ceil(math.exp(n * rate) - 1e-9))


class NfoldStates:
    """Memoised ``word -> D^n(word)`` for repeated codebook evaluations."""

    def __init__(self, d: CqChannel, limit: int | None = None):
        self.d = d
        self.limit = limit
        self._cache: dict[bytes, np.ndarray] = {}

    def __call__(self, word) -> np.ndarray:
        word = np.ascontiguousarray(word, dtype=np.int64)
        key = word.tobytes()
        out = self._cache.get(key)
        if out is None:
            out = self._cache[key] = d_nfold(self.d, word, limit=self.limit)
        return out


def codebook_output(d: CqChannel, codebook: Codebook, states: NfoldStates | None = None) -> np.ndarray:
    """``(1/M) sum_m D^n(C(m))``."""
    states = states or NfoldStates(d)
    uniq, counts = np.unique(codebook.words, axis=0, return_counts=True)
    out = sum(c * states(w) for w, c in zip(uniq, counts))
    return linalg.hermitize(out / codebook.m_size)


def product_output(d: CqChannel, p, n: int) -> np.ndarray:
    return linalg.tensor_power(average_output(d, p), n)


def resolvability_distance(d: CqChannel, p, codebook: Codebook, *, target=None, states=None) -> float:
    if target is None:
        target = product_output(d, p, codebook.n)
    return linalg.trace_distance(codebook_output(d, codebook, states), target)


# -- exponents -------------------------------------------------------------

def lemma5_exponents(h_p, h_u, h_cond, h_out, eps, alphas):
    """The four Markov exponents for atypical joint and output mass.

    ``h_cond`` and ``h_out`` are callables ``alpha -> H_alpha``.
    """
    a1, a2, a3, a4 = alphas
    return (
        (a1 - 1) * (h_cond(a1) + eps - h_p),
        (1 - a2) * (h_p + eps - h_cond(a2)),
        (a3 - 1) * (h_out(a3) + eps - h_u),
        (1 - a4) * (h_u + eps - h_out(a4)),
    )


@dataclass
class ExponentReport:
    rate: float
    holevo: float
    epsilon: float
    alphas: tuple
    components: tuple
    gamma1: float
    rate_gap: float
    gamma: float

    def to_dict(self) -> dict:
        return {
            "rate": self.rate, "holevo": self.holevo, "epsilon": self.epsilon,
            "alphas": list(self.alphas), "components": list(self.components),
            "gamma1": self.gamma1, "rate_gap": self.rate_gap, "gamma": self.gamma,
        }


def theoretical_exponent(d: CqChannel, p, rate: float, epsilon: float | None = None,
                         alphas: tuple | None = None) -> ExponentReport:
    """Decay exponent guaranteed for the expected resolvability distance.

    The atypical mass is a sum of four Markov terms, so it decays at the
    smallest of the four exponents; ``gamma1`` is that minimum and ``gamma``
    is ``min(gamma1, (R - I(P,D) - 4 eps) / 2)``. Without explicit ``alphas``
    each exponent is maximised over its own grid (``HIGH_ALPHAS`` for
    alpha_1, alpha_3 and ``LOW_ALPHAS`` for alpha_2, alpha_4).
    """
    holevo = holevo_information(d, p)
    if epsilon is None:
        epsilon = (rate - holevo) / 8
    if not epsilon > 0 or rate <= holevo + 4 * epsilon:
        raise RateTooLow(f"need R > I(P,D) + 4*eps: R={rate}, I(P,D)={holevo}, eps={epsilon}")
    h_p, h_u = entropy_hp(d, p), entropy_hu(d, p)

    def h_cond(a):
        return renyi_conditional(d, p, a)

    def h_out(a):
        return renyi_output(d, p, a)

    if alphas is None:
        best = []
        for slot, grid in enumerate((HIGH_ALPHAS, LOW_ALPHAS, HIGH_ALPHAS, LOW_ALPHAS)):
            scores = [lemma5_exponents(h_p, h_u, h_cond, h_out, epsilon, (a, a, a, a))[slot] for a in grid]
            best.append(grid[int(np.argmax(scores))])
        alphas = tuple(best)
    a1, a2, a3, a4 = alphas
    if not (a1 > 1 and a3 > 1 and 0 < a2 < 1 and 0 < a4 < 1):
        raise ValueError(f"need alpha_1, alpha_3 > 1 and alpha_2, alpha_4 in (0, 1); got {alphas}")
    comps = lemma5_exponents(h_p, h_u, h_cond, h_out, epsilon, alphas)
    if min(comps) <= 0:
        raise NoPositiveExponent(f"non-positive exponent(s) {comps} at alphas {alphas}")
    gamma1 = min(comps)
    gap = 0.5 * (rate - holevo - 4 * epsilon)
    return ExponentReport(rate, holevo, epsilon, tuple(alphas), tuple(comps), gamma1, gap, min(gamma1, gap))


# -- Monte Carlo -----------------------------------------------------------

def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ResolvabilityResult:
    n: int
    m_size: int
    trials: int
    distances: np.ndarray
    seeds: list
    rate: float | None = None
    exponent: ExponentReport | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances))

    @property
    def std_error(self) -> float:
        if self.trials < 2:
            return 0.0
        return float(np.std(self.distances, ddof=1) / math.sqrt(self.trials))

    def rows(self):
        for t, (seed, dist) in enumerate(zip(self.seeds, self.distances)):
            yield {"trial": t, "seed": seed, "n": self.n, "M": self.m_size, "distance": float(dist)}

    def summary(self) -> dict:
        exp = self.exponent
        return {
            "n": self.n, "M": self.m_size, "trials": self.trials, "rate": self.rate,
            "mean": self.mean, "std_error": self.std_error,
            "theoretical_exponent": exp.gamma if exp else None,
            "epsilon": exp.epsilon if exp else None,
            "alphas": list(exp.alphas) if exp else None,
        }


def distance_trials(d: CqChannel, p, n: int, m_size: int, trials: int, seed: int,
                    tag: str = "resolve", workers: int = 1) -> ResolvabilityResult:
    """Trace distances of ``trials`` independent codebooks of size ``m_size``."""
    p = as_distribution(p)
    target = product_output(d, p, n)
    states = NfoldStates(d)
    seeds = [rngmod.trial_seed(seed, t, f"{tag}/n={n}/M={m_size}") for t in range(trials)]

    def one(s):
        cb = sample_codebook(p, n, m_size, rngmod.stream_from_seed(s))
        return resolvability_distance(d, p, cb, target=target, states=states)

    dists = np.array(_map_ordered(one, seeds, workers))
    return ResolvabilityResult(n, m_size, trials, dists, seeds)


def estimate_expected_distance(d: CqChannel, p, n: int, rate: float, trials: int, seed: int, *,
                               max_codebook: int = MAX_CODEBOOK, tag: str = "resolve",
                               workers: int = 1) -> ResolvabilityResult:
    m_size = codebook_size(n, rate)
    if m_size > max_codebook:
        raise BudgetExceeded(f"M = {m_size} exceeds codebook budget {max_codebook}")
    res = distance_trials(d, p, n, m_size, trials, seed, tag=tag, workers=workers)
    res.rate = rate
    try:
        res.exponent = theoretical_exponent(d, p, rate)
    except (RateTooLow, NoPositiveExponent):
        res.exponent = None
    return res


def expected_codebook_output_exact(d: CqChannel, p, n: int, m_size: int) -> np.ndarray:
    """``E_C D_C`` by summing over every codebook in ``(X^n)^M``."""
    p = as_distribution(p)
    words = list(itertools.product(range(d.input_size), repeat=n))
    if len(words) ** m_size > ENUMERATION_BUDGET:
        raise EnumerationBudgetExceeded(f"{len(words)}**{m_size} codebooks exceed budget")
    probs = [float(np.prod(p[list(w)])) for w in words]
    states = NfoldStates(d)
    acc = 0
    for combo in itertools.product(range(len(words)), repeat=m_size):
        weight = float(np.prod([probs[i] for i in combo]))
        if weight == 0:
            continue
        acc = acc + weight * codebook_output(d, Codebook([words[i] for i in combo]), states)
    return acc


# -- concentration ---------------------------------------------------------

@dataclass
class ConcentrationReport:
    n: int
    m_size: int
    trials: int
    distances: np.ndarray
    thresholds: tuple
    frequencies: tuple
    bounds: tuple
    slack: tuple

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances))

    @property
    def passed(self) -> bool:
        return all(f <= b + s for f, b, s in zip(self.frequencies, self.bounds, self.slack))


def concentration_experiment(d: CqChannel, p, n: int, m_size: int, trials: int, thresholds,
                             seed: int, workers: int = 1) -> ConcentrationReport:
    """Empirical upper tail of the distance versus ``exp(-t^2 M / 2)``.

    The bounded-differences constants are ``c_m = 2/M``, so the variance
    proxy is ``1/M``. Each tail frequency may exceed its bound by at most
    three binomial standard errors (computed at the bound).
    """
    if trials < 100:
        raise ValueError("concentration_experiment needs at least 100 trials")
    res = distance_trials(d, p, n, m_size, trials, seed, tag="concentration", workers=workers)
    dev = res.distances - res.mean
    freqs, bounds, slack = [], [], []
    for t in thresholds:
        b = math.exp(-t * t * m_size / 2)
        freqs.append(float(np.mean(dev > t)))
        bounds.append(b)
        slack.append(3 * math.sqrt(b * (1 - b) / trials))
    return ConcentrationReport(n, m_size, trials, res.distances, tuple(thresholds), tuple(freqs),
                               tuple(bounds), tuple(slack))


@dataclass
class SwapReport:
    m_size: int
    changes: np.ndarray

    @property
    def bound(self) -> float:
        return 2.0 / self.m_size

    @property
    def max_change(self) -> float:
        return float(np.max(self.changes))

    @property
    def passed(self) -> bool:
        return self.max_change <= self.bound + 1e-12


def bounded_difference_check(d: CqChannel, p, n: int, m_size: int, swaps: int, seed: int) -> SwapReport:
    """Replace one random codeword ``swaps`` times and record the distance change."""
    p = as_distribution(p)
    target = product_output(d, p, n)
    states = NfoldStates(d)
    changes = []
    for t in range(swaps):
        g = rngmod.stream(seed, t, "swap")
        cb = sample_codebook(p, n, m_size, g)
        words = cb.words.copy()
        words[int(g.integers(m_size))] = sample_words(p, (n,), g)
        before = resolvability_distance(d, p, cb, target=target, states=states)
        after = resolvability_distance(d, p, Codebook(words), target=target, states=states)
        changes.append(abs(after - before))
    return SwapReport(m_size, np.array(changes))
