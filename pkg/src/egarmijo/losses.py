"""Convex losses on density matrices, each returning a value and a Hermitian gradient.

The gradient ``f'(rho)`` is the Hermitian matrix satisfying
``f(sigma) >= f(rho) + <f'(rho), sigma - rho>`` in the Hilbert-Schmidt product.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from .dataset import MeasurementDataset
from .errors import OutOfDomain, SingularDensity
from .geometry import DensityMatrix, as_density
from .hermitian import hermitize

PROB_FLOOR = 1e-300

Evaluation = Tuple[float, np.ndarray]


class LossModel:
    """Interface for convex losses.

    Subclasses implement :meth:`evaluate`; ``value`` and ``in_domain`` derive
    from it unless a cheaper route exists.
    """

    dim: int

    def evaluate(self, rho) -> Evaluation:
        raise NotImplementedError

    def value(self, rho) -> float:
        return self.evaluate(rho)[0]

    def gradient(self, rho) -> np.ndarray:
        return self.evaluate(rho)[1]

    def in_domain(self, rho) -> bool:
        try:
            self.value(rho)
        except (OutOfDomain, SingularDensity):
            return False
        return True


class LogLikelihoodLoss(LossModel):
    """Weighted log loss ``-sum_i w_i log tr(M_i rho)``.

    With ``w = counts / n`` this is the normalized negative log-likelihood of
    a measurement dataset. Effects may be given as full matrices or, for
    projectors, as rank-one factors ``v_i`` (rows of ``vectors``).
    """

    def __init__(self, effects=None, weights=None, vectors=None):
        if vectors is not None:
            self.vectors = np.asarray(vectors, dtype=complex)
            self.effects = None
            m, self.dim = self.vectors.shape
        else:
            self.effects = np.asarray(effects, dtype=complex)
            self.vectors = None
            m, self.dim = self.effects.shape[:2]
        self.weights = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, float)
        self._diag = None
        if self.effects is not None:
            if not np.any(self.effects * (1.0 - np.eye(self.dim))):
                self._diag = np.einsum("ijj->ij", self.effects).real.copy()

    @classmethod
    def from_dataset(cls, data: MeasurementDataset) -> "LogLikelihoodLoss":
        if data.vectors is not None:
            return cls(vectors=data.vectors, weights=data.weights)
        return cls(effects=data.effects, weights=data.weights)

    def probabilities(self, rho) -> np.ndarray:
        R = np.asarray(as_density(rho).matrix)
        if self._diag is not None and not np.any(R - np.diag(np.diag(R))):
            return self._diag @ np.diag(R).real
        if self.vectors is not None:
            V = self.vectors
            return np.real(np.einsum("ij,ij->i", V.conj(), V @ R.T))
        return np.real(np.einsum("iab,ba->i", self.effects, R))

    def _check(self, p: np.ndarray) -> None:
        bad = (p <= PROB_FLOOR) & (self.weights > 0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise OutOfDomain(f"tr(M_{i} rho) = {p[i]:.3e} is not positive")

    def value(self, rho) -> float:
        p = self.probabilities(rho)
        self._check(p)
        return float(-np.dot(self.weights, np.log(p)))

    def evaluate(self, rho) -> Evaluation:
        p = self.probabilities(rho)
        self._check(p)
        value = float(-np.dot(self.weights, np.log(p)))
        c = self.weights / p
        if self.vectors is not None:
            V = self.vectors
            G = -(V.T * c) @ V.conj()
        else:
            G = -np.einsum("i,iab->ab", c, self.effects)
        return value, hermitize(G)


def simplex_log_loss(b, weights=None) -> LogLikelihoodLoss:
    """Log loss on the simplex embedded as diagonal effects ``diag(b_i)``.

    ``weights=None`` gives the ``1/n`` normalization; pass ones for the
    unnormalized two-point loss ``-log x - log y``.
    """
    b = np.asarray(b, dtype=float)
    effects = np.array([np.diag(row) for row in b], dtype=complex)
    return LogLikelihoodLoss(effects=effects, weights=weights)


def eval_log_loss_vector(b, x, weights=None) -> Tuple[float, np.ndarray]:
    """Vector log loss ``-sum_i w_i log <b_i, x>`` and its gradient."""
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.full(len(b), 1.0 / len(b)) if weights is None else np.asarray(weights, float)
    p = b @ x
    if np.any((p <= PROB_FLOOR) & (w > 0)):
        raise OutOfDomain("some <b_i, x> is not positive")
    return float(-np.dot(w, np.log(p))), -(w / p) @ b


def eval_f3(data: MeasurementDataset, rho) -> Evaluation:
    return LogLikelihoodLoss.from_dataset(data).evaluate(rho)


def _strict_spectrum(rho) -> Tuple[DensityMatrix, np.ndarray, np.ndarray]:
    rho = as_density(rho)
    loglam = rho.log_eigenvalues
    if not np.all(np.isfinite(loglam)):
        raise SingularDensity("entropy-type penalty needs a non-singular density")
    return rho, rho.eigenvalues, loglam


class HedgedLoss(LossModel):
    """``base(rho) - lam * log det(rho)``."""

    def __init__(self, base: LossModel, lam: float):
        self.base = base
        self.lam = float(lam)
        self.dim = base.dim

    def evaluate(self, rho) -> Evaluation:
        rho, _, loglam = _strict_spectrum(rho)
        f, g = self.base.evaluate(rho)
        inv = rho.spectrum.reconstruct(np.exp(-loglam))
        return f - self.lam * float(np.sum(loglam)), g - self.lam * inv


class MaxEntropyLoss(LossModel):
    """``base(rho) + lam * tr(rho log rho)``."""

    def __init__(self, base: LossModel, lam: float):
        self.base = base
        self.lam = float(lam)
        self.dim = base.dim

    def evaluate(self, rho) -> Evaluation:
        rho, lam_, loglam = _strict_spectrum(rho)
        f, g = self.base.evaluate(rho)
        pen = float(np.sum(lam_ * loglam))
        grad = rho.spectrum.reconstruct(loglam + 1.0)
        return f + self.lam * pen, g + self.lam * grad


class EntropyLeastSquaresLoss(LossModel):
    """``sum_i (y_i - tr(M_i rho))^2 + lam * tr(rho log rho)``."""

    def __init__(self, ys: Sequence[float], Ms, lam: float, dim: int = None):
        self.ys = np.asarray(ys, dtype=float)
        Ms = np.asarray(Ms, dtype=complex)
        if Ms.size == 0:
            if dim is None:
                raise ValueError("dim is required when there are no pairs")
            Ms = np.zeros((0, dim, dim), dtype=complex)
        self.Ms = Ms
        self.lam = float(lam)
        self.dim = Ms.shape[1]

    def evaluate(self, rho) -> Evaluation:
        rho, lam_, loglam = _strict_spectrum(rho)
        resid = self.ys - np.real(np.einsum("iab,ba->i", self.Ms, rho.matrix))
        pen = float(np.sum(lam_ * loglam))
        value = float(resid @ resid) + self.lam * pen
        grad = -2.0 * np.einsum("i,iab->ab", resid, self.Ms) + self.lam * rho.spectrum.reconstruct(loglam + 1.0)
        return value, hermitize(grad)


class LinearLoss(LossModel):
    """``<C, rho>``; its gradient is the constant matrix ``C``."""

    def __init__(self, C):
        self.C = hermitize(np.asarray(C, dtype=complex))
        self.dim = self.C.shape[0]

    def evaluate(self, rho) -> Evaluation:
        R = as_density(rho).matrix
        return float(np.real(np.vdot(self.C, R))), self.C


def random_traceless_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = 0.5 * (A + A.conj().T)
    H -= np.trace(H).real / d * np.eye(d)
    return H / np.linalg.norm(H)


def gradient_check(loss: LossModel, rho, H: np.ndarray, eps: float = 1e-6) -> Tuple[float, float, float]:
    """Compare ``<f'(rho), H>`` with a central difference of ``f`` along ``H``.

    Returns ``(analytic, numeric, tolerance)`` where the tolerance is
    ``max(1e-6, 1e-4 |f(rho)|)``.
    """
    R = as_density(rho).matrix
    f, g = loss.evaluate(R)
    analytic = float(np.real(np.vdot(g, H)))
    numeric = (loss.value(R + eps * H) - loss.value(R - eps * H)) / (2 * eps)
    return analytic, numeric, max(1e-6, 1e-4 * abs(f))
