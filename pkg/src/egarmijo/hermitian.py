"""Dense complex Hermitian linear algebra.

Hermitian matrices are plain ``numpy.ndarray`` objects of dtype complex128 and
shape ``(d, d)``. Every matrix function goes through one full spectral
decomposition; there is no Pade / scaling-and-squaring path.
"""
from __future__ import annotations

from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, DomainViolation, NonHermitianInput

HERMITIAN_TOL = 1e-12


class SpectralDecomposition(NamedTuple):
    """Eigenvalues (ascending) and orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        V = self.eigenvectors
        return hermitize((V * lam) @ V.conj().T)


def hermitize(X: np.ndarray) -> np.ndarray:
    """Return (X + X^H)/2 without any check."""
    return 0.5 * (X + X.conj().T)


def as_hermitian(X, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``X`` as Hermitian and return its symmetrized complex copy.

    Raises
    ------
    NonHermitianInput
        If ``X`` is not square or some entry differs from the conjugate of its
        transpose partner by more than ``tol``.
    """
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise NonHermitianInput(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonHermitianInput("matrix has non-finite entries")
    asym = np.max(np.abs(A - A.conj().T))
    if asym > tol:
        raise NonHermitianInput(f"max |X - X^H| = {asym:.3e} exceeds {tol:.1e}")
    return hermitize(A)


def _eigh(A: np.ndarray) -> SpectralDecomposition:
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SpectralDecomposition(lam, V)


def eigh(X, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    return _eigh(as_hermitian(X, tol))


Spectrum = Union[np.ndarray, SpectralDecomposition]


def _spectrum(X: Spectrum) -> SpectralDecomposition:
    if isinstance(X, SpectralDecomposition):
        return X
    return eigh(X)


def matrix_fn(
    X: Spectrum,
    g: Callable[[np.ndarray], np.ndarray],
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Apply the scalar function ``g`` to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    X : ndarray or SpectralDecomposition
        The matrix, or an already computed decomposition of it.
    g : callable
        Vectorized real function, evaluated on the eigenvalue array.
    domain : callable, optional
        Predicate returning a boolean array; every eigenvalue must satisfy it.
    """
    spec = _spectrum(X)
    lam = spec.eigenvalues
    if domain is not None:
        ok = np.asarray(domain(lam), dtype=bool)
        if not np.all(ok):
            raise DomainViolation(f"eigenvalues {lam[~ok]} outside the domain of g")
    values = np.asarray(g(lam), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainViolation("g produced non-finite values on the spectrum")
    return spec.reconstruct(values)


def expm(X: Spectrum) -> np.ndarray:
    return matrix_fn(X, np.exp)


def logm(X: Spectrum) -> np.ndarray:
    return matrix_fn(X, np.log, domain=lambda t: t > 0)


def inv(X: Spectrum) -> np.ndarray:
    return matrix_fn(X, lambda t: 1.0 / t, domain=lambda t: t != 0)


def _check_dims(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise DimensionMismatch(f"shapes {X.shape} and {Y.shape} differ")


def hs_inner(X, Y) -> float:
    """Hilbert-Schmidt inner product tr(X^H Y), real part."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    _check_dims(X, Y)
    val = np.vdot(X, Y)
    scale = max(1.0, float(np.linalg.norm(X) * np.linalg.norm(Y)))
    assert abs(val.imag) <= 1e-12 * scale, f"imaginary part {val.imag} for Hermitian inputs"
    return float(val.real)


def norm(X, kind: str = "frobenius") -> float:
    X = np.asarray(X)
    if kind == "frobenius":
        return float(np.linalg.norm(X))
    if kind == "trace":
        return float(np.sum(np.abs(eigh(X).eigenvalues)))
    raise ValueError(f"unknown norm kind {kind!r}")


def lambda_min(X: Spectrum) -> float:
    return float(_spectrum(X).eigenvalues[0])


def to_json_dict(X) -> dict:
    A = np.asarray(X, dtype=complex)
    return {
        "dim": int(A.shape[0]),
        "re": A.real.ravel().tolist(),
        "im": A.imag.ravel().tolist(),
    }


def from_json_dict(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros(d * d)), dtype=float)
    if re.size != d * d or im.size != d * d:
        raise ValueError(f"expected {d * d} entries for dim {d}")
    return as_hermitian((re + 1j * im).reshape(d, d))
