"""Measurement datasets: PSD effects with integer multiplicities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError

PSD_TOL = 1e-10


@dataclass
class MeasurementDataset:
    """Distinct effects ``M_i`` observed ``counts[i]`` times.

    ``vectors`` holds rank-one factors (``M_i = v_i v_i^H``) when every effect
    is a projector onto a pure state; losses use them for an O(m d^2) fast path.
    ``records`` keeps the compact Pauli description for datasets that came from
    Pauli measurements, so they serialize back to the same form.
    """

    dim: int
    effects: np.ndarray
    counts: np.ndarray
    vectors: Optional[np.ndarray] = None
    records: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        self.effects = np.asarray(self.effects, dtype=complex)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        m = self.counts.shape[0]
        if self.effects.shape != (m, self.dim, self.dim):
            raise ValidationError(
                f"effects shape {self.effects.shape} does not match {m} counts of dim {self.dim}"
            )
        if self.vectors is not None:
            self.vectors = np.asarray(self.vectors, dtype=complex)
        bad = np.flatnonzero(self.counts < 1)
        if bad.size:
            raise ValidationError(f"record {bad[0]}: count must be a positive integer")
        if self.n < 1:
            raise ValidationError("dataset is empty")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def format(self) -> str:
        return "pauli" if self.records is not None else "effects"

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.n

    def validate(self, tol: float = PSD_TOL) -> None:
        for i, M in enumerate(self.effects):
            if np.max(np.abs(M - M.conj().T)) > 1e-12:
                raise ValidationError(f"record {i}: effect is not Hermitian")
            lam = np.linalg.eigvalsh(M)
            if lam[0] < -tol:
                raise ValidationError(f"record {i}: effect has eigenvalue {lam[0]:.3e} < 0")


def aggregate(effects, counts=None) -> MeasurementDataset:
    """Merge bitwise-identical effects, summing their counts (first-seen order)."""
    effects = np.asarray(effects, dtype=complex)
    if counts is None:
        counts = np.ones(len(effects), dtype=np.int64)
    index = {}
    merged, merged_counts = [], []
    for M, c in zip(effects, counts):
        key = M.tobytes()
        if key in index:
            merged_counts[index[key]] += int(c)
        else:
            index[key] = len(merged)
            merged.append(M)
            merged_counts.append(int(c))
    d = effects.shape[1]
    return MeasurementDataset(d, np.array(merged), np.array(merged_counts))
