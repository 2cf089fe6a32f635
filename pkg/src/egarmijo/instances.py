"""Seeded random problem instances for property checks and experiment scripts."""
from __future__ import annotations

import numpy as np

from .dataset import MeasurementDataset
from .geometry import DensityMatrix, assert_density
from .losses import HedgedLoss, LogLikelihoodLoss, LossModel, MaxEntropyLoss

LOSS_KINDS = ("f3", "hedged", "maxent")


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (A + A.conj().T)


def random_density(rng: np.random.Generator, d: int, floor: float = 0.05) -> DensityMatrix:
    """Ginibre density mixed with ``floor * I/d`` so it stays well inside the set."""
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    R = A @ A.conj().T
    R = (1.0 - floor) * R / np.trace(R).real + floor * np.eye(d) / d
    return assert_density(R, strict=True)


def random_dataset(rng: np.random.Generator, d: int, m: int = None) -> MeasurementDataset:
    """Random rank-one effects with counts in [1, 20)."""
    m = m or 3 * d
    V = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    E = np.einsum("ia,ib->iab", V, V.conj())
    return MeasurementDataset(d, E, rng.integers(1, 20, size=m), vectors=V)


def random_loss(rng: np.random.Generator, d: int, kind: str = "f3", lam: float = 0.1) -> LossModel:
    base = LogLikelihoodLoss.from_dataset(random_dataset(rng, d))
    if kind == "f3":
        return base
    if kind == "hedged":
        return HedgedLoss(base, lam)
    if kind == "maxent":
        return MaxEntropyLoss(base, lam)
    raise ValueError(kind)
