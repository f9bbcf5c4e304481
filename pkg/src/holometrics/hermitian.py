"""Hermitian positive forms and their ordered eigenvalues."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class HermitianForm:
    """A d x d Hermitian matrix with cached descending eigenvalues."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(H))))
        asym = float(np.max(np.abs(H - H.conj().T)))
        if asym > HERMITIAN_TOL * scale * 10:
            raise ValueError(f"matrix not Hermitian (asymmetry {asym:.3e})")
        H = 0.5 * (H + H.conj().T)
        object.__setattr__(self, "matrix", H)
        ev = np.linalg.eigvalsh(H)[::-1].copy()
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def quadratic(self, v) -> float:
        v = np.asarray(v, dtype=complex)
        return float(np.real(np.vdot(v, self.matrix @ v)))

    def sigma(self, j: int) -> float:
        """j-th largest eigenvalue, 1-indexed (sigma_1 >= ... >= sigma_d)."""
        return float(self.eigenvalues[j - 1])

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        return bool(self.eigenvalues[-1] > tol)


def singular_values(form: HermitianForm) -> np.ndarray:
    """Eigenvalues in descending order (equal to singular values for PSD)."""
    return form.eigenvalues.copy()


def minimizing_subspace(form: HermitianForm, q: int) -> np.ndarray:
    """Orthonormal basis (columns) of the q-dim subspace minimizing the max
    Rayleigh quotient; spans the eigenvectors of the q smallest eigenvalues."""
    vals, vecs = np.linalg.eigh(form.matrix)
    return vecs[:, :q]
