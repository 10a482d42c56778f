"""Empirical covariance operators and the truncated componentwise estimator.

Given a trajectory X_0..X_{n-1} in an orthonormal coordinate system, the
empirical covariance is (1/n) sum X_i X_i^T and the lag-1 cross-covariance
is (1/(n-1)) sum X_{i+1} X_i^T.  The autocorrelation estimate projects the
cross-covariance onto the span of the top k_n empirical eigenvectors and
inverts the covariance on that span only:

    rho_hat = P_k D_n C_n^+ P_k,

which is the componentwise estimator written as a matrix.  The plug-in
one-step prediction is rho_hat applied to the newest state.

Inner products here are plain Euclidean ones: the coordinate system is the
model eigenbasis, which is orthonormal for the geometry the estimator needs.
The wavelet-domain weighted norms are used only for error reporting, never
inside the estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import SpectralOperator, Trajectory, evaluate_on_grid
from .wavelet import WaveletBasisSpec, besov_sup_norm, dwt_forward


class EigenGapError(RuntimeError):
    """Raised when consecutive eigenvalues have a vanishing gap."""


class TruncationRankError(RuntimeError):
    """Raised when the empirical covariance is too degenerate for the requested truncation."""


@dataclass(frozen=True)
class TruncationRule:
    """How many empirical eigenpairs the estimator keeps.

    kind "log_ceil" grows the order like ceil(ln n); kind "fixed" pins it.
    """

    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind not in ("log_ceil", "fixed"):
            raise ValueError(f"unknown truncation rule kind {self.kind!r}")
        if self.kind == "fixed" and (self.k is None or self.k < 1):
            raise ValueError("fixed rule needs k >= 1")

    @classmethod
    def log_ceil(cls) -> "TruncationRule":
        return cls(kind="log_ceil")

    @classmethod
    def fixed(cls, k: int) -> "TruncationRule":
        return cls(kind="fixed", k=k)


def truncation_order(n: int, rule: TruncationRule, p_max: int | None = None) -> int:
    """Truncation order for sample size n, clamped to [1, p_max]."""
    if n < 2:
        raise ValueError("need n >= 2")
    k = math.ceil(math.log(n)) if rule.kind == "log_ceil" else int(rule.k)
    k = max(k, 1)
    if p_max is not None:
        k = min(k, p_max)
    return k


@dataclass
class EstimatorState:
    """Everything fitted from one trajectory.

    eigenvalues/eigenvectors are the full empirical covariance eigensystem
    (descending, orthonormal columns, in model-basis coordinates);
    d_matrix is the raw cross-covariance in the same coordinates, from which
    the empirical-basis entries are eigenvectors.T @ d_matrix @ eigenvectors;
    rho_hat is the rank <= k_n estimator matrix.
    """

    n: int
    k_n: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    d_matrix: np.ndarray
    rho_hat: np.ndarray

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(self.eigenvectors, dtype=float)
        self.d_matrix = np.asarray(self.d_matrix, dtype=float)
        self.rho_hat = np.asarray(self.rho_hat, dtype=float)
        if not 1 <= self.k_n <= self.n:
            raise ValueError("need 1 <= k_n <= n")
        if np.any(np.diff(self.eigenvalues) > 1e-12) or self.eigenvalues[-1] < -1e-12:
            raise ValueError("eigenvalues must be sorted non-increasing and non-negative")
        p = self.eigenvalues.size
        gram = self.eigenvectors.T @ self.eigenvectors
        if np.abs(gram - np.eye(p)).max() > 1e-10:
            raise ValueError("eigenvector columns must be orthonormal within 1e-10")


def empirical_covariance(traj: Trajectory) -> SpectralOperator:
    """(1/n) sum of X_i X_i^T over all n states of the trajectory."""
    if len(traj) < 2:
        raise ValueError("need at least 2 states")
    x = traj.states
    m = x.T @ x / len(traj)
    return SpectralOperator(0.5 * (m + m.T), symmetric=True)


def empirical_cross_covariance(traj: Trajectory) -> SpectralOperator:
    """(1/(n-1)) sum of X_{i+1} X_i^T over consecutive pairs; not symmetric."""
    if len(traj) < 2:
        raise ValueError("need at least 2 states")
    x = traj.states
    m = x[1:].T @ x[:-1] / (len(traj) - 1)
    return SpectralOperator(m, symmetric=False)


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    near_degenerate: list[int]


def eigen_decompose(op: SpectralOperator, gap_tol: float = 1e-8) -> EigenDecomposition:
    """Full symmetric eigendecomposition, values descending.

    Positions j (1-based) whose relative gap (values[j-1] - values[j]) /
    max(values[0], tiny) falls below gap_tol are reported in near_degenerate:
    eigenvectors at those positions are not individually identifiable.
    """
    m = op.matrix
    if np.abs(m - m.T).max() > 1e-10 * max(1.0, float(np.abs(m).max())):
        raise ValueError("eigen_decompose requires a symmetric matrix")
    values, vectors = np.linalg.eigh(0.5 * (m + m.T))
    values = values[::-1]
    vectors = vectors[:, ::-1]
    scale = max(float(values[0]), 1e-300)
    gaps = np.diff(values) * -1.0
    near = [int(j + 1) for j in range(gaps.size) if gaps[j] / scale < gap_tol]
    return EigenDecomposition(values=values, vectors=vectors, near_degenerate=near)


def sign_align(empirical_vec: np.ndarray, reference_vec: np.ndarray) -> np.ndarray:
    """Reference eigenvector flipped to match the empirical one's orientation.

    The sign is +1 when the inner product is >= 0 (ties resolve to +1), so
    aligning twice gives the same result as aligning once.
    """
    empirical_vec = np.asarray(empirical_vec, dtype=float)
    reference_vec = np.asarray(reference_vec, dtype=float)
    if empirical_vec.shape != reference_vec.shape:
        raise ValueError("vectors must have the same length")
    sign = 1.0 if float(np.dot(empirical_vec, reference_vec)) >= 0.0 else -1.0
    return sign * reference_vec


def _checked_gaps(values: np.ndarray, k: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if k < 1:
        raise ValueError("need k >= 1")
    if values.size < k + 1:
        raise ValueError(f"need at least k+1 = {k + 1} eigenvalues, got {values.size}")
    gaps = values[:k] - values[1 : k + 1]
    if (gaps < 1e-12).any():
        worst = int(np.argmin(gaps)) + 1
        raise EigenGapError(
            f"eigenvalue gap at position {worst} is {gaps[worst - 1]:.3e}; "
            "spectral gaps must be positive and bounded away from zero "
            "(one-dimensional eigenspaces)"
        )
    return gaps


def gap_coefficients(values: np.ndarray, k: int) -> np.ndarray:
    """Inverse-gap constants a_1..a_k controlling eigenvector perturbations.

    a_1 = 2 sqrt(2) / (C_1 - C_2); for j >= 2 the larger of the two
    neighbouring inverse gaps enters: a_j = 2 sqrt(2) max(1/(C_{j-1}-C_j),
    1/(C_j-C_{j+1})).
    """
    gaps = _checked_gaps(values, k)
    inv = 1.0 / gaps
    out = np.empty(k)
    out[0] = 2.0 * math.sqrt(2.0) * inv[0]
    for j in range(1, k):
        out[j] = 2.0 * math.sqrt(2.0) * max(inv[j - 1], inv[j])
    return out


def max_inverse_gap(values: np.ndarray, k: int) -> float:
    """Largest inverse eigenvalue gap over the first k positions."""
    gaps = _checked_gaps(values, k)
    return float((1.0 / gaps).max())


def _state_svd(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD-based eigensystem of (1/m) X^T X for the m x p state matrix X.

    Returns (eigenvalues, eigenvectors, left_factor) where eigenvalues are
    the squared singular values over m (descending, zero-padded to p), the
    eigenvectors are the full p x p right singular basis, and left_factor
    holds the left singular vectors scaled so that X = left_factor *
    sigma @ eigenvectors.T.  Going through the singular values instead of
    the Gram matrix keeps the conditioning of downstream inversions linear
    in the spectrum spread rather than quadratic, and covers m < p without
    a separate route.
    """
    m, p = x.shape
    w, sigma, vt = np.linalg.svd(x, full_matrices=False)
    values = np.zeros(p)
    r = sigma.size
    values[:r] = sigma**2 / m
    if r == p:
        vectors = vt.T
    else:
        # fewer samples than modes: complete the right singular basis to a
        # full orthonormal one (the added columns carry eigenvalue zero)
        v_r = vt.T
        q, _ = np.linalg.qr(np.hstack([v_r, np.eye(p)]))
        vectors = q[:, :p]
        vectors[:, :r] = v_r
    return values, vectors, w


def fit_estimator(traj: Trajectory, rule: TruncationRule) -> EstimatorState:
    """Fit the truncated componentwise estimator on a trajectory.

    The sample size n is the number of states; both moment matrices inside
    the fit are averaged over the same n-1 observed transitions (X_i,
    X_{i+1}), so a noiseless trajectory with an identifiable span recovers
    the autocorrelation matrix exactly rather than up to an n/(n-1) factor.

    Requires the k_n-th empirical eigenvalue to be meaningfully positive
    (above 1e-14 times the leading one); a more degenerate spectrum demands
    a smaller truncation order rather than silent regularization.
    """
    n = len(traj)
    if n < 2:
        raise ValueError("need at least 2 states to fit")
    p = traj.dim
    k_n = truncation_order(n, rule, p_max=min(n - 1, p))
    inputs = traj.states[:-1]
    outputs = traj.states[1:]
    values, vectors, left = _state_svd(inputs)
    floor = max(float(values[0]), 0.0) * 1e-14
    if values[0] <= 0.0 or values[k_n - 1] <= floor:
        raise TruncationRankError(
            f"empirical eigenvalue {k_n} is {values[k_n - 1]:.3e} "
            f"(leading {values[0]:.3e}); use a smaller truncation order"
        )
    d = outputs.T @ inputs / (n - 1)
    # rho_hat = P_k D C^+ P_k, assembled through the singular values so only
    # one inverse power of each sigma enters
    u_k = vectors[:, :k_n]
    sigma_k = np.sqrt(values[:k_n] * (n - 1))
    core = (u_k.T @ (outputs.T @ left[:, :k_n])) / sigma_k[None, :]
    rho_hat = u_k @ core @ u_k.T
    return EstimatorState(
        n=n,
        k_n=k_n,
        eigenvalues=np.clip(values, 0.0, None),
        eigenvectors=vectors,
        d_matrix=d,
        rho_hat=rho_hat,
    )


def plug_in_predict(state: EstimatorState, x: np.ndarray) -> np.ndarray:
    """One-step-ahead prediction: the estimator applied to the newest state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (state.rho_hat.shape[1],):
        raise ValueError(f"state has dimension {state.rho_hat.shape[1]}, got {x.shape}")
    return state.rho_hat @ x


def prediction_error_besov(
    truth: np.ndarray,
    predicted: np.ndarray,
    grid_len: int,
    spec: WaveletBasisSpec,
) -> float:
    """Sup-norm of the wavelet coefficients of the prediction error.

    Both coefficient vectors are expanded on the dyadic grid, the difference
    is wavelet-transformed, and the largest coefficient magnitude is the
    reported error.
    """
    truth = np.asarray(truth, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if truth.shape != predicted.shape:
        raise ValueError("truth and prediction must have the same length")
    diff = evaluate_on_grid(truth, grid_len) - evaluate_on_grid(predicted, grid_len)
    return besov_sup_norm(dwt_forward(diff, spec))
