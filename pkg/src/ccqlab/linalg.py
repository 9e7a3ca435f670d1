"""Dense finite-dimensional operator algebra.

Matrices are plain complex ``numpy.ndarray`` objects. Density operators are
validated with :func:`check_density` rather than wrapped in a class, so every
function here accepts anything ``np.asarray`` understands.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DimensionOverflow, NonSquare, NotHermitian, NotPSD, NumericalFailure

TOL_HERM = 1e-12
TOL_PSD = 1e-10
TOL_TRACE = 1e-10
# matrix_function tolerates slightly larger rounding than the density check
TOL_CLIP = 1e-8
DEFAULT_MAX_DIM = 4096


def max_dim() -> int:
    """Configured ceiling on Hilbert-space dimension (env ``CCQLAB_MAX_DIM``)."""
    raw = os.environ.get("CCQLAB_MAX_DIM")
    return int(raw) if raw else DEFAULT_MAX_DIM


def _square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    return a


def _herm_tol(a: np.ndarray) -> float:
    return TOL_HERM * max(1.0, float(np.max(np.abs(a), initial=0.0)))


def is_hermitian(a, tol: float | None = None) -> bool:
    a = _square(a)
    tol = _herm_tol(a) if tol is None else tol
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a[~np.eye(a.shape[0], dtype=bool)])


def hermitize(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted non-increasing, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        v = self.eigenvectors
        return (v * f(self.eigenvalues)) @ v.conj().T


def jacobi_eigh(a, *, rel_tol: float = 1e-13, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Sweeps the pairs ``(p, q)``, ``p < q``, in row-major order and stops once
    the off-diagonal Frobenius mass is at most ``rel_tol * ||a||_F``. Returns
    ``(eigenvalues, eigenvectors)`` in the solver's native (unsorted) order.
    """
    a = np.array(_square(a), dtype=complex)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    target = rel_tol * np.linalg.norm(a)
    offdiag = ~np.eye(d, dtype=bool)
    for _ in range(max_sweeps):
        if np.linalg.norm(a[offdiag]) <= target:
            return a.diagonal().real.copy(), v
        for p in range(d - 1):
            for q in range(p + 1, d):
                b = a[p, q]
                mag = abs(b)
                if mag == 0.0:
                    continue
                phase = b / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ j
    raise NumericalFailure(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def spectral_decompose(a, *, method: str = "lapack") -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues non-increasing.

    Diagonal inputs are decomposed exactly (eigenvectors are standard basis
    vectors, ties kept in index order). ``method`` selects the dense solver:
    ``"lapack"`` (``numpy.linalg.eigh``) or ``"jacobi"`` (:func:`jacobi_eigh`).
    """
    a = _square(a)
    if not is_hermitian(a):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    d = a.shape[0]
    if is_diagonal(a):
        w = a.diagonal().real.astype(float)
        v = np.eye(d, dtype=complex)
    elif method == "jacobi":
        w, v = jacobi_eigh(a)
    elif method == "lapack":
        try:
            w, v = np.linalg.eigh(hermitize(a))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(str(exc)) from exc
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return SpectralDecomposition(np.asarray(w, dtype=float)[order], np.asarray(v, dtype=complex)[:, order])


def eigvalsh(a) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, non-increasing."""
    a = _square(a)
    if is_diagonal(a):
        return np.sort(a.diagonal().real)[::-1]
    try:
        return np.linalg.eigvalsh(hermitize(a))[::-1]
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


def trace_norm(a) -> float:
    """Sum of singular values."""
    a = _square(a)
    if is_hermitian(a):
        return float(np.sum(np.abs(eigvalsh(a))))
    try:
        return float(np.sum(np.linalg.svd(a, compute_uv=False)))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


def operator_norm(a) -> float:
    a = _square(a)
    return float(np.linalg.norm(a, 2))


def trace_distance(rho, sigma) -> float:
    """``||rho - sigma||_tr`` (no factor 1/2)."""
    return trace_norm(np.asarray(rho) - np.asarray(sigma))


def _check_dim(dim: int, n: int, limit: int | None) -> None:
    limit = max_dim() if limit is None else limit
    if dim ** n > limit:
        raise DimensionOverflow(dim, n, limit)


def tensor(a, b) -> np.ndarray:
    """Kronecker product, ``(i1 i2, j1 j2) -> a[i1, j1] * b[i2, j2]``."""
    return np.kron(np.asarray(a), np.asarray(b))


def tensor_all(factors: Iterable, limit: int | None = None) -> np.ndarray:
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    total = int(np.prod([np.asarray(f).shape[0] for f in factors]))
    if total > (max_dim() if limit is None else limit):
        raise DimensionOverflow(np.asarray(factors[0]).shape[0], len(factors), max_dim() if limit is None else limit)
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f))
    return out


def tensor_power(a, n: int, limit: int | None = None) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    a = _square(a)
    _check_dim(a.shape[0], n, limit)
    out = a
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def matrix_function(a, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to the spectrum of a PSD matrix.

    Eigenvalues in ``[-1e-8, 0)`` are clipped to zero before ``f`` is applied;
    ``f`` is expected to honour ``f(0) = 0`` (e.g. ``0**alpha := 0``).
    """
    sd = spectral_decompose(a)
    if sd.eigenvalues.size and sd.eigenvalues[-1] < -TOL_CLIP:
        raise NotPSD(f"minimum eigenvalue {sd.eigenvalues[-1]:.3e} below -{TOL_CLIP}")
    w = np.clip(sd.eigenvalues, 0.0, None)
    return sd.apply(lambda _: np.asarray(f(w), dtype=float))


def sqrtm_psd(a) -> np.ndarray:
    return matrix_function(a, np.sqrt)


def safe_power(w, alpha: float) -> np.ndarray:
    """Elementwise ``w**alpha`` with ``0**alpha := 0``."""
    w = np.asarray(w, dtype=float)
    pos = w > 0
    out = np.zeros_like(w)
    out[pos] = w[pos] ** alpha
    return out


def powm_psd(a, alpha: float) -> np.ndarray:
    return matrix_function(a, lambda w: safe_power(w, alpha))


def check_density(rho, name: str = "state") -> np.ndarray:
    """Validate and return ``rho`` as a complex density matrix.

    Raises :class:`NotHermitian`, :class:`NotPSD` or ``ValueError`` (trace).
    """
    rho = _square(np.asarray(rho, dtype=complex))
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > TOL_HERM:
        raise NotHermitian(f"{name} is not Hermitian")
    w = eigvalsh(rho)
    if w[-1] < -TOL_PSD:
        raise NotPSD(f"{name} has eigenvalue {w[-1]:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TOL_TRACE:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    return rho


def is_density(rho) -> bool:
    try:
        check_density(rho)
    except (ValueError, ArithmeticError):
        return False
    return True


def ket_projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class JensenReport:
    trials: int
    dim: int
    max_gap: float
    mean_sqrt: np.ndarray
    sqrt_mean: np.ndarray

    @property
    def passed(self) -> bool:
        return self.max_gap <= 1e-8


def operator_jensen_sqrt_check(sampler: Callable[[], np.ndarray] | Iterable, trials: int) -> JensenReport:
    """Check ``E sqrt(A) <= sqrt(E A)`` in the Loewner order.

    ``sampler`` is either a zero-argument callable producing PSD matrices or
    an iterable of them; ``trials`` matrices are drawn. The report carries the
    largest eigenvalue of ``E sqrt(A) - sqrt(E A)``, which should be <= 1e-8.
    """
    draw = sampler if callable(sampler) else iter(sampler).__next__
    acc_sqrt = acc = None
    for _ in range(trials):
        a = np.asarray(draw(), dtype=complex)
        root = sqrtm_psd(a)
        acc_sqrt = root if acc_sqrt is None else acc_sqrt + root
        acc = a if acc is None else acc + a
    mean_sqrt = acc_sqrt / trials
    sqrt_mean = sqrtm_psd(hermitize(acc / trials))
    gap = float(eigvalsh(hermitize(mean_sqrt - sqrt_mean))[0])
    return JensenReport(trials, mean_sqrt.shape[0], gap, mean_sqrt, sqrt_mean)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a complex Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = r.diagonal()
    return q * (d / np.abs(d))
