"""Scalar information quantities, all in nats."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .channels import ClassicalChannel, CqChannel, as_distribution, average_output, spectral_kernel
from .errors import InvalidAlpha, LengthMismatch, NumericalFailure, UnreachableOutput

DEFAULT_ALPHA_GRID = (0.5, 0.75, 0.9, 0.99, 1.01, 1.1, 1.5, 2.0)
ALPHA_MIN = 0.5
HOLEVO_CROSSCHECK_TOL = 1e-8


def xlogx(p) -> np.ndarray:
    """Elementwise ``p log p`` with ``0 log 0 := 0``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def shannon_entropy(p) -> float:
    # clamp: rounding in sum(p log p) can leave -1e-16 for point masses
    return max(0.0, float(-xlogx(np.clip(p, 0.0, None)).sum()))


def renyi_entropy(p, alpha: float) -> float:
    """Rényi entropy of a pmf; ``alpha == 1`` gives the Shannon entropy."""
    if alpha <= 0:
        raise InvalidAlpha(f"alpha must be > 0, got {alpha}")
    if alpha == 1:
        return shannon_entropy(p)
    return float(np.log(linalg.safe_power(np.clip(p, 0.0, None), alpha).sum()) / (1 - alpha))


def von_neumann_entropy(rho) -> float:
    return shannon_entropy(np.clip(linalg.eigvalsh(rho), 0.0, None))


# -- classical channel -----------------------------------------------------

def information_density(p, w: ClassicalChannel, word, received) -> float:
    """``sum_i log(W(xhat_i|x_i) / Phat(xhat_i))``; ``-inf`` if a factor is zero."""
    word = np.asarray(word, dtype=np.int64).reshape(-1)
    received = np.asarray(received, dtype=np.int64).reshape(-1)
    if word.size != received.size:
        raise LengthMismatch(f"word lengths differ: {word.size} vs {received.size}")
    phat = w.output_distribution(p)
    if np.any(phat[received] == 0):
        raise UnreachableOutput("received word contains a symbol of zero output probability")
    num = w.kernel[word, received]
    if np.any(num == 0):
        return float("-inf")
    return float(np.sum(np.log(num) - np.log(phat[received])))


def mutual_information_classical(p, w: ClassicalChannel) -> float:
    p = as_distribution(p)
    joint = p[:, None] * w.kernel
    phat = joint.sum(axis=0)
    mask = joint > 0
    ratio = w.kernel[mask] / np.broadcast_to(phat, joint.shape)[mask]
    return max(0.0, float(np.sum(joint[mask] * np.log(ratio))))


# -- cq channel ------------------------------------------------------------

def entropy_hp(d: CqChannel, p) -> float:
    sk = spectral_kernel(d, p)
    return max(0.0, float(-(sk.input_distribution @ xlogx(np.clip(sk.eigenvalues, 0.0, None)).sum(axis=1))))


def entropy_hu(d: CqChannel, p) -> float:
    return shannon_entropy(spectral_kernel(d, p).output_spectrum)


def holevo_direct(d: CqChannel, p) -> float:
    """``E tr(D(X) log D(X)) - tr(D_P log D_P)`` via matrix logarithms."""
    p = as_distribution(p)
    first = 0.0
    for px, rho in zip(p, d.states):
        if px > 0:
            first += px * np.trace(linalg.matrix_function(rho, xlogx)).real
    second = np.trace(linalg.matrix_function(average_output(d, p), xlogx)).real
    return float(first - second)


def holevo_information(d: CqChannel, p, *, crosscheck: bool = True) -> float:
    """Holevo information computed as ``H_U - H_P``.

    With ``crosscheck`` the matrix-logarithm form is evaluated too, and a
    disagreement above 1e-8 raises :class:`NumericalFailure`.
    """
    value = entropy_hu(d, p) - entropy_hp(d, p)
    if crosscheck:
        direct = holevo_direct(d, p)
        if abs(direct - value) > HOLEVO_CROSSCHECK_TOL:
            raise NumericalFailure(f"Holevo paths disagree: spectral {value!r} vs direct {direct!r}")
    return value


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise InvalidAlpha(f"alpha must be > 0, got {alpha}")


def renyi_conditional(d: CqChannel, p, alpha: float) -> float:
    """``1/(1-alpha) log E_X tr D(X)^alpha``; equals ``H_P`` at ``alpha = 1``."""
    _check_alpha(alpha)
    if alpha == 1:
        return entropy_hp(d, p)
    sk = spectral_kernel(d, p)
    moment = sk.input_distribution @ linalg.safe_power(np.clip(sk.eigenvalues, 0.0, None), alpha).sum(axis=1)
    return float(np.log(moment) / (1 - alpha))


def renyi_output(d: CqChannel, p, alpha: float) -> float:
    """``1/(1-alpha) log tr D_P^alpha``; equals ``H_U`` at ``alpha = 1``."""
    _check_alpha(alpha)
    return renyi_entropy(spectral_kernel(d, p).output_spectrum, alpha)


@dataclass
class InfoReport:
    i_pw: float | None
    i_pd: float
    h_p: float
    h_u: float
    renyi_grid: list = field(default_factory=list)
    alpha_min: float = ALPHA_MIN

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["quantity", "alpha", "value_nats"])
        if self.i_pw is not None:
            out.writerow(["i_pw", "", f"{self.i_pw:.17g}"])
        for name in ("i_pd", "h_p", "h_u"):
            out.writerow([name, "", f"{getattr(self, name):.17g}"])
        for alpha, h_cond, h_out in self.renyi_grid:
            out.writerow(["renyi_conditional", f"{alpha:.17g}", f"{h_cond:.17g}"])
            out.writerow(["renyi_output", f"{alpha:.17g}", f"{h_out:.17g}"])
        return buf.getvalue()


def info_report(d: CqChannel, p, w: ClassicalChannel | None = None, alphas=DEFAULT_ALPHA_GRID) -> InfoReport:
    return InfoReport(
        i_pw=mutual_information_classical(p, w) if w is not None else None,
        i_pd=holevo_information(d, p),
        h_p=entropy_hp(d, p),
        h_u=entropy_hu(d, p),
        renyi_grid=[(float(a), renyi_conditional(d, p, a), renyi_output(d, p, a)) for a in alphas],
    )
