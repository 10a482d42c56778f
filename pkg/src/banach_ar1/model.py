"""Concrete first-order autoregressive model in a spectral sine basis.

The state covariance is diagonal in the Dirichlet eigenbasis of the interval
Laplacian: eigenfunctions sqrt(2) sin(j pi t) on [0, 1] with eigenvalues
pi^2 j^2, so the covariance eigenvalues are (1 + pi^2 j^2)^(-gamma).  The
autocorrelation and innovation-covariance matrices follow the banded forms
(1+j)^(-1.5) / exp(-|j-h|/W) and C_j (1 - rho_jj^2) / exp(-|j-h|^2/W^2).

States live in the truncated eigenbasis as length-p coefficient vectors;
trajectories iterate X_n = rho(X_{n-1}) + eps_n with Gaussian innovations
drawn through the symmetric square root of the innovation covariance.
All randomness flows through an explicit numpy Generator, so identical
parameters and generator state reproduce trajectories bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

logger = logging.getLogger(__name__)


class NoiseCovarianceError(RuntimeError):
    """Raised when the innovation covariance cannot be repaired to PSD."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the concrete autoregressive model.

    gamma must exceed 2 * beta_exponent > 1 so that the covariance decay is
    fast enough for the weighted-norm embeddings used downstream.
    """

    gamma: float
    beta_exponent: float
    width: float = 0.4
    modes: int = 50
    grid_len: int = 2048
    seed: int = 0

    def __post_init__(self):
        if not self.gamma > 2 * self.beta_exponent > 1:
            raise ValueError(
                f"need gamma > 2*beta_exponent > 1, got gamma={self.gamma}, "
                f"beta_exponent={self.beta_exponent}"
            )
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.modes < 2:
            raise ValueError("need at least 2 modes")
        if self.grid_len < 2 or self.grid_len & (self.grid_len - 1):
            raise ValueError("grid_len must be a power of two")


@dataclass
class SpectralOperator:
    """An operator as a p x p matrix in the model eigenbasis."""

    matrix: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"operator matrix must be square, got {self.matrix.shape}")
        if self.symmetric and np.abs(self.matrix - self.matrix.T).max() > 1e-12:
            raise ValueError("matrix marked symmetric but is not, within 1e-12")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class Trajectory:
    """A simulated path: states[i] is X_i in eigenbasis coordinates."""

    states: np.ndarray
    params: ModelParams | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise ValueError("states must be a 2-d array (steps x modes)")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def head(self, count: int) -> "Trajectory":
        """The first `count` states as a new trajectory."""
        return Trajectory(states=self.states[:count], params=self.params)


class StationarityResult(NamedTuple):
    holds: bool
    j0: int
    norm: float


def covariance_eigenvalues(gamma: float, count: int) -> np.ndarray:
    """(1 + pi^2 j^2)^(-gamma) for j = 1..count, strictly decreasing."""
    j = np.arange(1, count + 1, dtype=float)
    return (1.0 + np.pi**2 * j**2) ** (-gamma)


def build_covariance(params: ModelParams) -> SpectralOperator:
    """Diagonal state covariance in the eigenbasis."""
    return SpectralOperator(np.diag(covariance_eigenvalues(params.gamma, params.modes)), symmetric=True)


def eigenfunction_on_grid(j: int, grid_len: int) -> np.ndarray:
    """sqrt(2) sin(j pi t) at the dyadic midpoints t_i = (i + 1/2) / L."""
    if j < 1:
        raise ValueError("eigenfunction index must be >= 1")
    t = (np.arange(grid_len) + 0.5) / grid_len
    return np.sqrt(2.0) * np.sin(j * np.pi * t)


@lru_cache(maxsize=8)
def eigenfunctions_on_grid(modes: int, grid_len: int) -> np.ndarray:
    """Stacked eigenfunctions, shape (modes, grid_len); read-only."""
    t = (np.arange(grid_len) + 0.5) / grid_len
    j = np.arange(1, modes + 1)
    phi = np.sqrt(2.0) * np.sin(np.outer(j, np.pi * t))
    phi.setflags(write=False)
    return phi


def build_rho(params: ModelParams) -> SpectralOperator:
    """Autocorrelation matrix: (1+j)^(-1.5) on the diagonal, exp(-|j-h|/W) off it."""
    j = np.arange(1, params.modes + 1, dtype=float)
    jj, hh = np.meshgrid(j, j, indexing="ij")
    m = np.exp(-np.abs(jj - hh) / params.width)
    np.fill_diagonal(m, (1.0 + j) ** -1.5)
    return SpectralOperator(m, symmetric=True)


def build_noise_covariance(
    params: ModelParams, covariance: SpectralOperator, rho: SpectralOperator
) -> SpectralOperator:
    """Innovation covariance, repaired to be positive semi-definite.

    The banded formula C_j (1 - rho_jj^2) / exp(-|j-h|^2 / W^2) is indefinite
    once the diagonal decays below the off-diagonal band (which happens for
    every moderately large mode count), so the matrix is repaired by
    clipping negative eigenvalues at zero, the minimal symmetric PSD
    perturbation.  Raises NoiseCovarianceError if the repaired matrix is
    still indefinite beyond tolerance.
    """
    c_diag = np.diag(covariance.matrix)
    if np.abs(covariance.matrix - np.diag(c_diag)).max() > 0 or (c_diag <= 0).any():
        raise ValueError("covariance must be diagonal with positive entries")
    if rho.dim != covariance.dim:
        raise ValueError("rho and covariance dimensions differ")
    j = np.arange(1, params.modes + 1, dtype=float)
    jj, hh = np.meshgrid(j, j, indexing="ij")
    m = np.exp(-np.abs(jj - hh) ** 2 / params.width**2)
    np.fill_diagonal(m, c_diag * (1.0 - np.diag(rho.matrix) ** 2))

    w, v = np.linalg.eigh(m)
    scale = float(np.abs(w).max())
    if w[0] < 0:
        logger.info(
            "innovation covariance indefinite (min eigenvalue %.3e); clipping to PSD", w[0]
        )
        repaired = (v * np.clip(w, 0.0, None)) @ v.T
        repaired = 0.5 * (repaired + repaired.T)
    else:
        repaired = 0.5 * (m + m.T)
    w_post = np.linalg.eigvalsh(repaired)
    if w_post[0] < -1e-10 * max(scale, 1e-300):
        raise NoiseCovarianceError(
            f"repaired innovation covariance still indefinite: min eigenvalue {w_post[0]:.6e}"
        )
    return SpectralOperator(repaired, symmetric=True)


def check_stationarity(rho: SpectralOperator, j0_max: int = 10) -> StationarityResult:
    """Find the first power j <= j0_max with spectral norm of rho^j below 1."""
    power = np.eye(rho.dim)
    norm = math.inf
    for j in range(1, j0_max + 1):
        power = power @ rho.matrix
        norm = float(np.linalg.norm(power, 2))
        if norm < 1.0:
            return StationarityResult(True, j, norm)
    return StationarityResult(False, j0_max, norm)


def sample_initial_condition(covariance: SpectralOperator, rng: np.random.Generator) -> np.ndarray:
    """Independent centered Gaussians with variances C_j, truncated at 3 sigma.

    Draws outside three standard deviations are rejected and resampled, so
    the coordinates (hence any norm of the state) are almost surely bounded.
    """
    c_diag = np.diag(covariance.matrix)
    if np.abs(covariance.matrix - np.diag(c_diag)).max() > 0 or (c_diag <= 0).any():
        raise ValueError("covariance must be diagonal with positive entries")
    z = rng.standard_normal(c_diag.size)
    while True:
        bad = np.abs(z) > 3.0
        if not bad.any():
            break
        z[bad] = rng.standard_normal(int(bad.sum()))
    return np.sqrt(c_diag) * z


def symmetric_sqrt(op: SpectralOperator) -> np.ndarray:
    """Symmetric PSD square root; tiny negative eigenvalues are floored at 0."""
    w, v = np.linalg.eigh(op.matrix)
    if w[0] < -1e-10 * max(float(np.abs(w).max()), 1e-300):
        raise ValueError(f"matrix is not positive semi-definite: min eigenvalue {w[0]:.6e}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def simulate_trajectory(
    n: int,
    rho: SpectralOperator,
    noise_cov: SpectralOperator,
    x0: np.ndarray,
    rng: np.random.Generator,
    burn_in: int = 0,
) -> Trajectory:
    """Iterate X_i = rho X_{i-1} + eps_i for i = 1..n, returning X_0..X_n.

    Innovations are i.i.d. centered Gaussians with covariance noise_cov,
    drawn through its symmetric square root.  With burn_in > 0 the recursion
    first runs burn_in unrecorded steps from x0, and X_0 is the state
    reached at the end of the burn-in.
    """
    if n < 2:
        raise ValueError("need n >= 2 (downstream estimators require at least two states)")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    x0 = np.asarray(x0, dtype=float)
    p = rho.dim
    if x0.shape != (p,) or noise_cov.dim != p:
        raise ValueError("dimension mismatch between rho, noise_cov and x0")
    root = symmetric_sqrt(noise_cov)
    eps = rng.standard_normal((burn_in + n, p)) @ root.T
    x = x0
    for i in range(burn_in):
        x = rho.matrix @ x + eps[i]
    states = np.empty((n + 1, p))
    states[0] = x
    for i in range(n):
        x = rho.matrix @ x + eps[burn_in + i]
        states[i + 1] = x
    return Trajectory(states=states)


def evaluate_on_grid(x: np.ndarray, grid_len: int) -> np.ndarray:
    """Expand eigenbasis coefficients into function values at the dyadic midpoints."""
    if grid_len < 2 or grid_len & (grid_len - 1):
        raise ValueError("grid_len must be a power of two")
    x = np.asarray(x, dtype=float)
    return x @ eigenfunctions_on_grid(x.size, grid_len)


def evaluate_via_spline(x: np.ndarray, coarse_step: float, grid_len: int) -> np.ndarray:
    """Coarse-grid evaluation followed by natural cubic spline interpolation.

    Mimics generating the function on a coarse grid of step ~coarse_step and
    smoothing it back onto the fine dyadic grid; used only in the optional
    spline mode of the experiment harness.
    """
    if not 0 < coarse_step < 0.5:
        raise ValueError("coarse_step must lie in (0, 0.5)")
    x = np.asarray(x, dtype=float)
    n_nodes = round(1.0 / coarse_step) + 1
    s = np.linspace(0.0, 1.0, n_nodes)
    j = np.arange(1, x.size + 1)
    coarse = x @ (np.sqrt(2.0) * np.sin(np.outer(j, np.pi * s)))
    spline = CubicSpline(s, coarse, bc_type="natural")
    t = (np.arange(grid_len) + 0.5) / grid_len
    return spline(t)


def covariance_kernel(covariance: SpectralOperator, s: float, t: float) -> float:
    """Kernel value sum_j C_j phi_j(s) phi_j(t) at a single point pair."""
    c_diag = np.diag(covariance.matrix)
    j = np.arange(1, c_diag.size + 1)
    phi_s = np.sqrt(2.0) * np.sin(j * np.pi * s)
    phi_t = np.sqrt(2.0) * np.sin(j * np.pi * t)
    return float(np.sum(c_diag * phi_s * phi_t))


def covariance_kernel_surface(covariance: SpectralOperator, points: np.ndarray) -> np.ndarray:
    """Kernel matrix K[a, b] = kernel(points[a], points[b])."""
    c_diag = np.diag(covariance.matrix)
    j = np.arange(1, c_diag.size + 1)
    phi = np.sqrt(2.0) * np.sin(np.outer(j, np.pi * np.asarray(points, dtype=float)))
    return phi.T @ (c_diag[:, None] * phi)


def stationary_covariance(rho: SpectralOperator, noise_cov: SpectralOperator) -> np.ndarray:
    """Solve Sigma = rho Sigma rho^T + noise_cov directly.

    Vectorizes the fixed-point equation into (I - rho (x) rho) vec(Sigma) =
    vec(noise_cov); memory grows like p^4, fine for the mode counts used
    here.
    """
    p = rho.dim
    if noise_cov.dim != p:
        raise ValueError("dimension mismatch")
    a = np.eye(p * p) - np.kron(rho.matrix, rho.matrix)
    sigma = np.linalg.solve(a, noise_cov.matrix.ravel()).reshape(p, p)
    return 0.5 * (sigma + sigma.T)
