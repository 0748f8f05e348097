"""Linearized boundary measurements and pixel sensitivity matrices.

The measurement matrix V collects boundary inner products between the trig
current basis and the difference potentials; its (i, j) entry approximates
the quadratic form of the NtD difference operator.  Each pixel of the
reconstruction grid gets a sensitivity matrix S_k of gradient inner products
of the reference potentials, which is the linearized response of V to a unit
contrast on that pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fem import (DifferenceSolver, Mesh, boundary_quadrature, current_trace,
                  homogeneous_potential)
from .geometry import Pixel

# Minimum number of clipped quadrature nodes per pixel; thin slivers are
# refined until they carry at least this many, so the sensitivity matrices
# keep full rank.
MIN_QUAD_POINTS = 128


@dataclass(frozen=True)
class CurrentBasis:
    """Trig current basis: sine and cosine pairs of orders 1..n1.

    Ordering is (1, sin), (1, cos), (2, sin), (2, cos), ...; the basis is
    orthonormal in L^2 of the unit circle.
    """

    n1: int

    def __post_init__(self):
        if self.n1 < 1:
            raise ConfigError(f"number of current pairs must be >= 1, got {self.n1}")

    @property
    def size(self) -> int:
        return 2 * self.n1

    @property
    def members(self) -> list[tuple[int, str]]:
        return [(j, kind) for j in range(1, self.n1 + 1) for kind in ("sin", "cos")]


@dataclass(frozen=True)
class MeasurementMatrix:
    entries: np.ndarray       # (N, N), symmetric
    noise_level: float        # absolute Frobenius magnitude of injected noise
    seed: int | None = None

    @property
    def size(self) -> int:
        return len(self.entries)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries, "fro"))


@dataclass(frozen=True)
class SensitivityMatrix:
    pixel_index: int
    entries: np.ndarray       # (N, N), symmetric positive definite


def assemble_V(mesh: Mesh, basis: CurrentBasis) -> tuple[MeasurementMatrix, float]:
    """Measurement matrix from FEM difference solves on a fixed mesh.

    One sparse factorization is shared by all 2*n1 right-hand sides.  The
    raw matrix is symmetrized; the pre-symmetrization asymmetry is returned
    alongside as a discretization diagnostic.

    Returns
    -------
    V : MeasurementMatrix
    asymmetry : float
        Frobenius norm of the skew part before symmetrization.
    """
    solver = DifferenceSolver(mesh)
    angles, weights, (idx_a, idx_b, t) = boundary_quadrature(mesh)
    members = basis.members
    currents = np.column_stack([current_trace(j, kind, angles)
                                for j, kind in members])
    traces = np.empty((len(angles), basis.size))
    for col, (j, kind) in enumerate(members):
        d = solver.solve(j, kind).nodal_values
        traces[:, col] = d[idx_a] * (1.0 - t) + d[idx_b] * t
    raw = currents.T @ (weights[:, None] * traces)
    asymmetry = float(np.linalg.norm(raw - raw.T, "fro"))
    V = 0.5 * (raw + raw.T)
    return MeasurementMatrix(entries=V, noise_level=0.0, seed=None), asymmetry


def analytic_concentric(rho: float, sigma1: float, j: int) -> float:
    """NtD eigenvalue of the concentric-disk conductivity, by separation of variables.

    For conductivity sigma1 on the disk of radius rho and 1 outside, the trig
    current of order j is an eigenfunction with eigenvalue

        lambda_j = (1/j) * (1 + mu * rho^(2j)) / (1 - mu * rho^(2j)),
        mu = (1 - sigma1) / (1 + sigma1).

    sigma1 = 1 or rho -> 0 recover the homogeneous value 1/j, and sigma1 > 1
    lowers the eigenvalue, consistent with monotonicity.
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigError(f"inclusion radius must lie in [0, 1), got {rho}")
    if sigma1 <= 0:
        raise ConfigError(f"inclusion conductivity must be positive, got {sigma1}")
    if j < 1:
        raise ConfigError(f"current order must be >= 1, got {j}")
    mu = (1.0 - sigma1) / (1.0 + sigma1)
    q = mu * rho ** (2 * j)
    return (1.0 + q) / (1.0 - q) / j


def homogeneous_eigenvalue(j: int) -> float:
    """NtD eigenvalue 1/j of the homogeneous unit disk."""
    if j < 1:
        raise ConfigError(f"current order must be >= 1, got {j}")
    return 1.0 / j


def gradient_factor(pixel: Pixel, basis: CurrentBasis, subdiv: int = 16,
                    min_points: int = MIN_QUAD_POINTS) -> np.ndarray:
    """Weighted point-gradient factor A with S_k = A^T A.

    Rows are the sqrt(weight)-scaled Cartesian gradient components of every
    basis potential at the clipped quadrature nodes of the pixel; working
    with the factor keeps tiny eigenvalues of S_k computable (they are
    squared singular values of A).
    """
    pts, w = pixel.quadrature(subdiv=subdiv, min_points=min_points)
    q = len(pts)
    grads = np.empty((q, 2, basis.size))
    for col, (j, kind) in enumerate(basis.members):
        _, g = homogeneous_potential(j, kind, pts)
        grads[:, :, col] = g
    return (np.sqrt(w)[:, None, None] * grads).reshape(q * 2, basis.size)


def assemble_Sk(pixel: Pixel, basis: CurrentBasis, subdiv: int = 16,
                min_points: int = MIN_QUAD_POINTS) -> SensitivityMatrix:
    """Sensitivity matrix of one pixel: gradient inner products of the basis potentials."""
    A = gradient_factor(pixel, basis, subdiv=subdiv, min_points=min_points)
    S = A.T @ A
    S = 0.5 * (S + S.T)
    return SensitivityMatrix(pixel_index=pixel.index, entries=S)


def assemble_sensitivities(pixels, basis: CurrentBasis, subdiv: int = 16,
                           min_points: int = MIN_QUAD_POINTS) -> list[SensitivityMatrix]:
    return [assemble_Sk(p, basis, subdiv=subdiv, min_points=min_points)
            for p in pixels]


def add_noise(V: MeasurementMatrix, delta_rel: float, seed: int) -> MeasurementMatrix:
    """Additive matrix noise of prescribed relative Frobenius size.

    A matrix with independent uniform [-1, 1] entries (PCG64 generator,
    fixed seed) is scaled to Frobenius norm delta_rel * ||V||_F, added, and
    the sum is symmetrized.  delta_rel = 0 returns the input entries
    unchanged.
    """
    if delta_rel < 0:
        raise ConfigError(f"relative noise level must be >= 0, got {delta_rel}")
    if delta_rel == 0.0:
        return MeasurementMatrix(entries=V.entries.copy(), noise_level=0.0, seed=seed)
    n = V.size
    rng = np.random.default_rng(seed)
    E = rng.uniform(-1.0, 1.0, size=(n, n))
    delta_abs = delta_rel * V.frobenius()
    noisy = V.entries + (delta_abs / np.linalg.norm(E, "fro")) * E
    noisy = 0.5 * (noisy + noisy.T)
    return MeasurementMatrix(entries=noisy, noise_level=delta_abs, seed=seed)


def write_matrix(path, M: np.ndarray) -> None:
    """Plain-text square matrix dump: first line the size, then one row per line."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"matrix dump requires a square matrix, got shape {M.shape}")
    n = M.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{n}\n")
        for row in M:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        n = int(header.strip())
        rows = [np.array(fh.readline().split(), dtype=float) for _ in range(n)]
    M = np.vstack(rows)
    if M.shape != (n, n):
        raise ConfigError(f"matrix dump malformed: expected {n}x{n}, got {M.shape}")
    return M
