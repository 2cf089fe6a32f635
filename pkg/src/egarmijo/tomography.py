"""Synthetic Pauli-measurement tomography data and dataset files.

Each qubit is measured in the X, Y or Z eigenbasis; a setting is a string
such as ``"XZY"`` and an outcome a bit string of the same length, bit ``b``
selecting the eigenvector with eigenvalue ``(-1)^b``. Eigenvector phases are
fixed as

    Z: |0> = (1, 0),        |1> = (0, 1)
    X: |0> = (1, 1)/sqrt2,  |1> = (1, -1)/sqrt2
    Y: |0> = (1, i)/sqrt2,  |1> = (1, -i)/sqrt2

Sampling uses numpy's PCG64 generator. ``SeedSequence(seed)`` is split into
two children: the first picks a random subset of settings (when requested),
the second is spawned into one independent stream per setting, indexed by the
setting's position in the lexicographic list of all ``3^q`` settings. Outcomes
of a setting are one ``multinomial(shots, probs)`` draw from its own stream,
so results do not depend on which other settings are measured or in which
order they are processed.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence, Union

import numpy as np

from .dataset import MeasurementDataset
from .errors import ParseError, ValidationError
from .geometry import DensityMatrix, as_density, assert_density, maximally_mixed
from .hermitian import from_json_dict, to_json_dict

_S = 1.0 / np.sqrt(2.0)
PAULI_EIGENVECTORS = {
    "Z": (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)),
    "X": (np.array([_S, _S], dtype=complex), np.array([_S, -_S], dtype=complex)),
    "Y": (np.array([_S, 1j * _S]), np.array([_S, -1j * _S])),
}


class MalformedRecord(ParseError):
    pass


@dataclass(frozen=True)
class PauliRecord:
    setting: str
    outcome: str
    count: int = 1

    def __post_init__(self):
        if not isinstance(self.setting, str) or not self.setting:
            raise MalformedRecord(f"setting must be a non-empty string, got {self.setting!r}")
        bad = set(self.setting) - set("XYZ")
        if bad:
            raise MalformedRecord(f"setting {self.setting!r} has invalid characters {sorted(bad)}")
        if not isinstance(self.outcome, str) or len(self.outcome) != len(self.setting):
            raise MalformedRecord(f"outcome {self.outcome!r} does not match setting {self.setting!r}")
        if set(self.outcome) - set("01"):
            raise MalformedRecord(f"outcome {self.outcome!r} is not a bit string")
        if isinstance(self.count, bool) or not isinstance(self.count, (int, np.integer)) or self.count < 1:
            raise MalformedRecord(f"count must be a positive integer, got {self.count!r}")

    @property
    def qubits(self) -> int:
        return len(self.setting)


def effect_vector(setting: str, outcome: str) -> np.ndarray:
    """Tensor product of the per-qubit Pauli eigenvectors (qubit 0 leftmost)."""
    return reduce(np.kron, (PAULI_EIGENVECTORS[s][int(b)] for s, b in zip(setting, outcome)))


def effect_from_record(rec: PauliRecord) -> np.ndarray:
    v = effect_vector(rec.setting, rec.outcome)
    return np.outer(v, v.conj())


def all_settings(q: int) -> List[str]:
    return ["".join(s) for s in itertools.product("XYZ", repeat=q)]


def all_outcomes(q: int) -> List[str]:
    return ["".join(b) for b in itertools.product("01", repeat=q)]


def w_state(q: int) -> DensityMatrix:
    """``|W><W|`` with ``|W>`` the equal superposition of the q single-excitation states."""
    if q < 2:
        raise ValueError("the W state needs at least two qubits")
    d = 2 ** q
    psi = np.zeros(d, dtype=complex)
    for j in range(q):
        psi[1 << (q - 1 - j)] = 1.0
    psi /= np.sqrt(q)
    return assert_density(np.outer(psi, psi.conj()))


def dataset_from_records(records: Sequence[PauliRecord]) -> MeasurementDataset:
    if not records:
        raise ValidationError("no records")
    q = records[0].qubits
    for i, rec in enumerate(records):
        if rec.qubits != q:
            raise ValidationError(f"record {i}: {rec.qubits} qubits, expected {q}")
    vectors = np.array([effect_vector(r.setting, r.outcome) for r in records])
    effects = np.einsum("ia,ib->iab", vectors, vectors.conj())
    counts = np.array([r.count for r in records], dtype=np.int64)
    return MeasurementDataset(2 ** q, effects, counts, vectors=vectors, records=list(records))


def check_completeness(setting: str, tol: float = 1e-10) -> None:
    q = len(setting)
    total = sum(effect_from_record(PauliRecord(setting, b)) for b in all_outcomes(q))
    err = np.max(np.abs(total - np.eye(2 ** q)))
    if err > tol:
        raise ValidationError(f"effects of setting {setting!r} sum to I only within {err:.2e}")


@dataclass
class TomographyConfig:
    """``settings`` is ``"all"`` or ``("random", K)``; ``state`` is ``"w"``,
    ``"mixed"`` or an explicit density matrix."""

    qubits: int
    shots: int = 1000
    settings: Union[str, tuple] = "all"
    state: Union[str, np.ndarray, DensityMatrix] = "w"
    seed: int = 0

    def __post_init__(self):
        if self.qubits < 1:
            raise ValueError("qubits must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.settings != "all":
            kind, k = self.settings
            if kind != "random" or not 1 <= int(k) <= 3 ** self.qubits:
                raise ValueError(f"bad settings selection {self.settings!r}")

    def density(self) -> DensityMatrix:
        if isinstance(self.state, str):
            if self.state == "w":
                return w_state(self.qubits)
            if self.state == "mixed":
                return maximally_mixed(2 ** self.qubits)
            raise ValueError(f"unknown state {self.state!r}")
        rho = assert_density(self.state)
        if rho.dim != 2 ** self.qubits:
            raise ValueError(f"state has dim {rho.dim}, expected {2 ** self.qubits}")
        return rho


def chosen_settings(cfg: TomographyConfig, rng: np.random.Generator) -> List[int]:
    n_all = 3 ** cfg.qubits
    if cfg.settings == "all":
        return list(range(n_all))
    k = int(cfg.settings[1])
    return sorted(int(i) for i in rng.choice(n_all, size=k, replace=False))


def sample_outcomes(rho, cfg: TomographyConfig) -> MeasurementDataset:
    """Draw ``cfg.shots`` Born-rule outcomes per setting and aggregate them into records."""
    q = cfg.qubits
    rho = as_density(rho)
    if rho.dim != 2 ** q:
        raise ValueError(f"state has dim {rho.dim}, expected {2 ** q}")
    select_seq, sample_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    settings = all_settings(q)
    streams = sample_seq.spawn(len(settings))
    outcomes = all_outcomes(q)
    records = []
    for idx in chosen_settings(cfg, np.random.Generator(np.random.PCG64(select_seq))):
        setting = settings[idx]
        check_completeness(setting)
        V = np.array([effect_vector(setting, b) for b in outcomes])
        probs = np.real(np.einsum("ij,ij->i", V.conj(), V @ rho.matrix.T))
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        rng = np.random.Generator(np.random.PCG64(streams[idx]))
        counts = rng.multinomial(cfg.shots, probs)
        records.extend(PauliRecord(setting, b, int(c)) for b, c in zip(outcomes, counts) if c > 0)
    return dataset_from_records(records)


def generate(cfg: TomographyConfig) -> MeasurementDataset:
    return sample_outcomes(cfg.density(), cfg)


def dataset_to_json(ds: MeasurementDataset) -> dict:
    if ds.records is not None:
        recs = [{"setting": r.setting, "outcome": r.outcome, "count": int(r.count)} for r in ds.records]
        return {"dim": ds.dim, "format": "pauli", "records": recs}
    recs = [{"effect": to_json_dict(M), "count": int(c)} for M, c in zip(ds.effects, ds.counts)]
    return {"dim": ds.dim, "format": "effects", "records": recs}


def dataset_from_json(obj: dict) -> MeasurementDataset:
    try:
        dim = int(obj["dim"])
        fmt = obj["format"]
        raw = obj["records"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"dataset header: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ParseError("dataset has no records")
    if fmt == "pauli":
        records = []
        for i, r in enumerate(raw):
            try:
                records.append(PauliRecord(r["setting"], r["outcome"], r["count"]))
            except (KeyError, TypeError) as exc:
                raise ParseError(f"record {i}: missing field {exc}") from exc
            except MalformedRecord as exc:
                raise ParseError(f"record {i}: {exc}") from exc
        ds = dataset_from_records(records)
        if ds.dim != dim:
            raise ValidationError(f"records describe dim {ds.dim}, header says {dim}")
        for s in sorted({r.setting for r in records}):
            check_completeness(s)
        return ds
    if fmt == "effects":
        effects, counts = [], []
        for i, r in enumerate(raw):
            try:
                M = from_json_dict(r["effect"])
                c = r["count"]
            except Exception as exc:
                raise ParseError(f"record {i}: {exc}") from exc
            if M.shape[0] != dim:
                raise ValidationError(f"record {i}: effect dim {M.shape[0]}, expected {dim}")
            if isinstance(c, bool) or not isinstance(c, int) or c < 1:
                raise ValidationError(f"record {i}: count must be a positive integer")
            effects.append(M)
            counts.append(c)
        ds = MeasurementDataset(dim, np.array(effects), np.array(counts))
        ds.validate()
        return ds
    raise ParseError(f"unknown dataset format {fmt!r}")


def save_dataset(ds: MeasurementDataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_json(ds), fh, indent=1)
        fh.write("\n")


def load_dataset(path) -> MeasurementDataset:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return dataset_from_json(obj)
