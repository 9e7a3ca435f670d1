"""Wiretap codes built from ``L`` independent random sub-codebooks of size ``M``.

Messages are 0-based (``0..L-1``); the decoder's fallback output is message 0.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import linalg, rng as rngmod
from .channels import ClassicalChannel, CqChannel, as_distribution
from .errors import InfeasibleBlocklength, MessageOutOfRange, RateInfeasible
from .measures import holevo_information, mutual_information_classical
from .resolvability import Codebook, NfoldStates, codebook_output, product_output, sample_codebook

INT_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class WiretapCode:
    n: int
    rate: float
    rate_tilde: float
    sub_codebooks: np.ndarray  # shape (L, M, n)
    seed: int | None = None

    @property
    def L(self) -> int:
        return self.sub_codebooks.shape[0]

    @property
    def M(self) -> int:
        return self.sub_codebooks.shape[1]

    def codebook(self, message: int) -> Codebook:
        return Codebook(self.sub_codebooks[message])

    def to_json(self) -> dict:
        return {
            "n": self.n, "L": self.L, "M": self.M, "R": self.rate, "R_tilde": self.rate_tilde,
            "seed": self.seed, "sub_codebooks": self.sub_codebooks.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WiretapCode":
        books = np.array(doc["sub_codebooks"], dtype=np.int64)
        if books.shape != (doc["L"], doc["M"], doc["n"]):
            raise ValueError(f"sub_codebooks shape {books.shape} disagrees with L, M, n")
        return cls(doc["n"], doc["R"], doc["R_tilde"], books, doc.get("seed"))


def code_sizes(n: int, rate: float, rate_tilde: float) -> tuple[int, int]:
    """Integer sizes ``(M, L)`` for the randomisation and message sets.

    ``M`` is rounded up so that ``M >= exp(n R~)``, then ``L`` is the largest
    integer with ``M L <= exp(n (R + R~))``. Raises
    :class:`InfeasibleBlocklength` when ``L >= exp(n R)`` then fails. All
    three comparisons carry a 1e-9 relative slack for rounding.
    """
    m = max(1, math.ceil(math.exp(n * rate_tilde) * (1 - INT_SLACK)))
    budget = math.exp(n * (rate + rate_tilde))
    l_size = math.floor(budget * (1 + INT_SLACK) / m)
    if l_size < 1 or l_size < math.exp(n * rate) * (1 - INT_SLACK):
        raise InfeasibleBlocklength(
            f"n={n}: M={m}, L={l_size} cannot satisfy L >= exp(nR)={math.exp(n * rate):.6g}")
    return m, l_size


def build_wiretap_code(p, w: ClassicalChannel, d: CqChannel, n: int, rate: float, rate_tilde: float,
                       seed: int) -> WiretapCode:
    p = as_distribution(p)
    i_pw = mutual_information_classical(p, w)
    i_pd = holevo_information(d, p)
    if rate >= i_pw - i_pd:
        raise RateInfeasible(f"R={rate} must be below I(P,W) - I(P,D) = {i_pw - i_pd}")
    if not i_pd < rate_tilde < i_pw - rate:
        raise RateInfeasible(f"R~={rate_tilde} must lie in ({i_pd}, {i_pw - rate})")
    m, l_size = code_sizes(n, rate, rate_tilde)
    g = rngmod.stream(seed, 0, "wiretap/code")
    books = np.stack([sample_codebook(p, n, m, g).words for _ in range(l_size)])
    return WiretapCode(n, rate, rate_tilde, books, seed)


def encode(code: WiretapCode, message: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= message < code.L:
        raise MessageOutOfRange(f"message {message} outside 0..{code.L - 1}")
    return code.sub_codebooks[message, int(rng.integers(code.M))]


@dataclass(frozen=True)
class DecoderConfig:
    threshold: float

    @classmethod
    def default(cls, code: WiretapCode, p, w: ClassicalChannel, d: CqChannel) -> "DecoderConfig":
        i_pw = mutual_information_classical(p, w)
        i_pd = holevo_information(d, p)
        return cls(code.n * (i_pw - i_pd - code.rate) / 2)


class Decoder:
    """Information-density threshold decoder over all ``L * M`` codewords.

    Decodes to ``l`` iff exactly one codeword pair ``(l, m)`` has density
    above ``n I(P,W) - threshold``; otherwise returns message 0.
    """

    def __init__(self, code: WiretapCode, p, w: ClassicalChannel, cfg: DecoderConfig):
        p = as_distribution(p)
        self.code, self.cfg = code, cfg
        i_pw = mutual_information_classical(p, w)
        if not 0 < cfg.threshold < code.n * i_pw:
            raise ValueError(f"threshold must lie in (0, n I(P,W)) = (0, {code.n * i_pw})")
        self.cutoff = code.n * i_pw - cfg.threshold
        phat = w.output_distribution(p)
        with np.errstate(divide="ignore"):
            # log W(xhat|x) - log Phat(xhat), -inf where W is zero
            self._score = np.log(w.kernel) - np.log(phat)[None, :]
        self._reachable = phat > 0
        self._flat = code.sub_codebooks.reshape(-1, code.n)

    def densities(self, received) -> np.ndarray:
        received = np.asarray(received, dtype=np.int64)
        cols = np.arange(self.code.n)
        return self._score[self._flat[:, cols], received[None, :]].sum(axis=1)

    def __call__(self, received) -> int:
        received = np.asarray(received, dtype=np.int64)
        if not np.all(self._reachable[received]):
            return 0
        hits = np.flatnonzero(self.densities(received) > self.cutoff)
        if hits.size != 1:
            return 0
        return int(hits[0] // self.code.M)


def decode(code: WiretapCode, p, w: ClassicalChannel, received, cfg: DecoderConfig) -> int:
    return Decoder(code, p, w, cfg)(received)


@dataclass
class ErrorEstimate:
    trials: int
    records: list  # (trial, message, decoded, correct)
    prior: str = "uniform"

    @property
    def errors(self) -> int:
        return sum(1 for r in self.records if not r[3])

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def std_error(self) -> float:
        q = self.rate
        return math.sqrt(q * (1 - q) / self.trials)


def estimate_average_error(code: WiretapCode, p, w: ClassicalChannel, cfg: DecoderConfig, trials: int,
                           seed: int) -> ErrorEstimate:
    """Monte Carlo over uniform messages, encoder randomness and channel noise."""
    if trials < 100:
        raise ValueError("estimate_average_error needs at least 100 trials")
    dec = Decoder(code, p, w, cfg)
    records = []
    for t in range(trials):
        g = rngmod.stream(seed, t, "wiretap/error")
        msg = int(g.integers(code.L))
        received = w.transmit(encode(code, msg, g), g)
        got = dec(received)
        records.append((t, msg, got, got == msg))
    return ErrorEstimate(trials, records)


@dataclass
class SecurityReport:
    delta: float
    certificate: float  # max_l ||D_{C_l} - D_P^(x)n||_tr
    distances_to_product: list
    worst_pair: tuple
    states: list

    @property
    def triangle_ok(self) -> bool:
        return self.delta <= 2 * self.certificate + 1e-9


def eavesdropper_states(code: WiretapCode, d: CqChannel) -> list:
    states = NfoldStates(d)
    return [codebook_output(d, code.codebook(l), states) for l in range(code.L)]


def distinguishing_security(code: WiretapCode, d: CqChannel, p) -> SecurityReport:
    """Largest pairwise trace distance between per-message eavesdropper states."""
    rhos = eavesdropper_states(code, d)
    target = product_output(d, p, code.n)
    to_product = [linalg.trace_distance(r, target) for r in rhos]
    delta, worst = 0.0, (0, 0)
    for a, b in itertools.combinations(range(code.L), 2):
        dist = linalg.trace_distance(rhos[a], rhos[b])
        if dist > delta:
            delta, worst = dist, (a, b)
    return SecurityReport(delta, max(to_product), to_product, worst, rhos)


def save_code(code: WiretapCode, path) -> None:
    with open(path, "w") as fh:
        json.dump(code.to_json(), fh)
