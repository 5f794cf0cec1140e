"""Density-operator reconstruction from projection probabilities.

:class:`StateTomography` follows the scikit-learn estimator protocol: ``X``
is a stack of projection matrices, ``y`` the observed probabilities (or one
column per state), ``fit`` solves the real linear system ``Tr(rho X_k) = y_k``
and ``predict`` returns Born probabilities of new projections.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .quantum import (
    RECONSTRUCTION_TOL,
    DensityOperator,
    Projection,
    QuantumValidationError,
    _as_matrix,
)

__all__ = [
    "UnderdeterminedError",
    "InconsistentProbabilitiesError",
    "StateTomography",
    "hermitian_features",
    "reconstruct_state",
]


class UnderdeterminedError(ValueError):
    """The measured family does not span the Hermitian operators."""


class InconsistentProbabilitiesError(ValueError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(message)


def _check_stack(X) -> np.ndarray:
    if isinstance(X, np.ndarray) and X.ndim == 3:
        stack = X.astype(complex, copy=False)
    else:
        stack = np.stack([_as_matrix(x) for x in X])
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"X must be a stack of square matrices, got shape {stack.shape}")
    return stack


def hermitian_features(X) -> np.ndarray:
    """Real feature rows f(X) with Tr(X rho) = f(X) . f(rho) for Hermitian X, rho.

    Coordinates are the diagonal, then sqrt2 * Re and sqrt2 * Im of the strict
    upper triangle.
    """
    stack = _check_stack(X)
    d = stack.shape[1]
    iu, ju = np.triu_indices(d, k=1)
    diag = np.real(stack[:, np.arange(d), np.arange(d)])
    off = stack[:, iu, ju]
    return np.concatenate([diag, np.sqrt(2) * off.real, np.sqrt(2) * off.imag], axis=1)


def _from_features(x: np.ndarray, d: int) -> np.ndarray:
    iu, ju = np.triu_indices(d, k=1)
    m = len(iu)
    rho = np.zeros((d, d), dtype=complex)
    rho[np.arange(d), np.arange(d)] = x[:d]
    upper = (x[d:d + m] + 1j * x[d + m:]) / np.sqrt(2)
    rho[iu, ju] = upper
    rho[ju, iu] = upper.conj()
    return rho


class StateTomography(BaseEstimator):
    """Least-squares state reconstruction.

    Parameters
    ----------
    rcond : float
        Relative cutoff on singular values of the design matrix.
    residual_tol : float
        Largest tolerated |Tr(rho X_k) - y_k| after fitting.
    """

    def __init__(self, rcond: float = 1e-10, residual_tol: float = RECONSTRUCTION_TOL):
        self.rcond = rcond
        self.residual_tol = residual_tol

    def fit(self, X, y):
        stack = _check_stack(X)
        A = hermitian_features(stack)
        d = stack.shape[1]
        Y = np.asarray(y, dtype=float)
        single = Y.ndim == 1
        Y2 = Y[:, None] if single else Y
        if Y2.shape[0] != A.shape[0]:
            raise ValueError(f"{A.shape[0]} projections but {Y2.shape[0]} probability rows")

        u, s, vt = np.linalg.svd(A, full_matrices=False)
        keep = s > self.rcond * s[0] if s.size else np.zeros(0, dtype=bool)
        rank = int(keep.sum())
        if rank < d * d:
            raise UnderdeterminedError(
                f"projection family has real rank {rank} < {d * d} needed for dimension {d}"
            )
        coef = vt[keep].T @ ((u[:, keep].T @ Y2) / s[keep][:, None])
        residual = float(np.abs(A @ coef - Y2).max())
        if residual > self.residual_tol:
            raise InconsistentProbabilitiesError(
                f"least-squares residual {residual:.3e} exceeds {self.residual_tol:.1e}", residual
            )
        states = []
        for col in coef.T:
            try:
                states.append(DensityOperator(_from_features(col, d)))
            except QuantumValidationError as exc:
                raise InconsistentProbabilitiesError(f"reconstructed operator is not a state: {exc}", residual)
        self.dim_ = d
        self.rank_ = rank
        self.residual_ = residual
        self.coef_ = coef[:, 0] if single else coef
        self.states_ = states
        self.state_ = states[0] if single else None
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("StateTomography is not fitted yet")
        out = hermitian_features(X) @ (self.coef_ if self.coef_.ndim == 2 else self.coef_[:, None])
        return out[:, 0] if self.coef_.ndim == 1 else out


def reconstruct_state(
    projections: Sequence[Projection], probabilities: Sequence[float], dim: int | None = None
) -> DensityOperator:
    """Unique density operator reproducing the given projection probabilities."""
    stack = _check_stack(projections)
    if dim is not None and stack.shape[1] != dim:
        raise ValueError(f"projections act on dimension {stack.shape[1]}, expected {dim}")
    return StateTomography().fit(stack, probabilities).state_
