"""Density matrices, von Neumann entropy and quantum relative entropy."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NotPSD, SingularDensity, TraceNotOne
from .hermitian import HERMITIAN_TOL, SpectralDecomposition, _eigh, as_hermitian

PSD_TOL = 1e-10
TRACE_TOL = 1e-10


def kernel_tol(d: int) -> float:
    """Eigenvalues at or below this are treated as exact zeros."""
    return 1e-12 * d


class _Infinity(float):
    """+inf returned by a divergence whose kernel condition fails.

    Compares and computes like ``math.inf`` but is a distinct singleton, so
    callers can tell it apart from an overflowed finite computation.
    """

    def __repr__(self):
        return "DIVERGENCE_INFINITY"


DIVERGENCE_INFINITY = _Infinity("inf")


def is_divergence_infinity(x) -> bool:
    return x is DIVERGENCE_INFINITY


class DensityMatrix:
    """A validated (or internally produced) density matrix.

    ``log_eigenvalues`` may be supplied by producers that know the spectrum in
    log form (the EG update does); eigenvalues that underflow to zero in the
    matrix keep a finite logarithm this way.
    """

    __slots__ = ("matrix", "_spectrum", "_log_eigenvalues")

    def __init__(
        self,
        matrix: np.ndarray,
        spectrum: Optional[SpectralDecomposition] = None,
        log_eigenvalues: Optional[np.ndarray] = None,
    ):
        self.matrix = matrix
        self._spectrum = spectrum
        self._log_eigenvalues = log_eigenvalues

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectrum(self) -> SpectralDecomposition:
        if self._spectrum is None:
            self._spectrum = _eigh(self.matrix)
        return self._spectrum

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def log_eigenvalues(self) -> np.ndarray:
        """log of the eigenvalues, ``-inf`` on the numerical kernel."""
        if self._log_eigenvalues is None:
            lam = self.eigenvalues
            out = np.full(lam.shape, -np.inf)
            pos = lam > kernel_tol(self.dim)
            out[pos] = np.log(lam[pos])
            self._log_eigenvalues = out
        return self._log_eigenvalues

    @property
    def is_strict(self) -> bool:
        return bool(np.all(np.isfinite(self.log_eigenvalues)))

    def logm(self) -> np.ndarray:
        if not self.is_strict:
            raise SingularDensity("log of a singular density matrix")
        return self.spectrum.reconstruct(self.log_eigenvalues)


def assert_density(X, strict: bool = False, tol: float = HERMITIAN_TOL) -> DensityMatrix:
    """Validate ``X`` as a density matrix.

    With ``strict=True`` the matrix must also be non-singular (every eigenvalue
    above the kernel tolerance), as required for taking its logarithm.
    """
    if isinstance(X, DensityMatrix):
        rho = X
    else:
        rho = DensityMatrix(as_hermitian(X, tol))
    lam = rho.eigenvalues
    if lam[0] < -PSD_TOL:
        raise NotPSD(f"minimum eigenvalue {lam[0]:.3e} < -{PSD_TOL:.0e}")
    tr = float(np.trace(rho.matrix).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"trace {tr!r} differs from 1")
    if strict and not rho.is_strict:
        raise SingularDensity(f"minimum eigenvalue {lam[0]:.3e} is not positive")
    return rho


def as_density(X) -> DensityMatrix:
    """Wrap without validation; used on hot paths that produce valid iterates."""
    if isinstance(X, DensityMatrix):
        return X
    return DensityMatrix(np.asarray(X, dtype=complex))


def maximally_mixed(d: int) -> DensityMatrix:
    lam = np.full(d, 1.0 / d)
    spec = SpectralDecomposition(lam, np.eye(d, dtype=complex))
    return DensityMatrix(np.eye(d, dtype=complex) / d, spec)


def diagonal_density(p) -> DensityMatrix:
    """Density matrix with the given probability vector on its diagonal."""
    p = np.asarray(p, dtype=float)
    return assert_density(np.diag(p).astype(complex))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    rho = as_density(rho)
    lam = rho.eigenvalues
    loglam = rho.log_eigenvalues
    keep = np.isfinite(loglam)
    return float(max(0.0, -np.sum(lam[keep] * loglam[keep])))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Quantum relative entropy D(rho, sigma) = tr(rho log rho) - tr(rho log sigma).

    Returns ``DIVERGENCE_INFINITY`` when some kernel direction ``w`` of sigma
    carries weight ``w^H rho w`` above the kernel tolerance.
    """
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"dims {rho.dim} and {sigma.dim} differ")
    tol = kernel_tol(rho.dim)

    W = sigma.spectrum.eigenvectors
    weights = np.real(np.einsum("ij,jk,ki->i", W.conj().T, rho.matrix, W))
    log_mu = sigma.log_eigenvalues
    kernel = ~np.isfinite(log_mu)
    if np.any(weights[kernel] > tol):
        return DIVERGENCE_INFINITY

    lam = rho.eigenvalues
    log_lam = rho.log_eigenvalues
    keep = np.isfinite(log_lam)
    neg_entropy = float(np.sum(lam[keep] * log_lam[keep]))
    cross = float(np.sum(weights[~kernel] * log_mu[~kernel]))
    return neg_entropy - cross
