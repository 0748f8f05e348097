"""Monotonicity-based upper bounds for the pixel coefficients.

For noisy data the largest admissible coefficient on pixel k is

    beta_k = 1 / lambda_max(L^{-1} S_k L^{-T}),   L L^T = delta I + |V|,

the largest scaling of S_k that stays dominated by delta I + |V|.  The
effective box constraint is min(a, beta_k) with a the contrast bound derived
from the assumed minimum inclusion contrast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError
from .geometry import PixelClass
from .matfun import cholesky, matrix_abs, sym_eig
from .ntd import MeasurementMatrix, SensitivityMatrix

# Substitute regularization when the data are treated as exact.
DELTA_FLOOR_FRACTION = 1e-12


@dataclass(frozen=True)
class BoundsVector:
    pixel_indices: np.ndarray     # (P,)
    beta: np.ndarray              # (P,), spectral bounds
    effective_upper: np.ndarray   # (P,), min(contrast_bound, beta)
    contrast_bound: float
    delta_abs: float


def contrast_bound(gamma_min: float) -> float:
    """Largest coefficient consistent with contrasts >= gamma_min: 1 - 1/(1 + gamma_min)."""
    if gamma_min <= 0:
        raise ConfigError(f"minimum contrast must be positive, got {gamma_min}")
    return 1.0 - 1.0 / (1.0 + gamma_min)


class BetaComputer:
    """Shares the Cholesky factor of delta I + |V| across all pixels."""

    def __init__(self, V: MeasurementMatrix, delta_abs: float):
        if delta_abs < 0:
            raise ConfigError(f"noise magnitude must be >= 0, got {delta_abs}")
        vnorm = float(np.linalg.norm(V.entries, "fro"))
        if delta_abs == 0.0:
            delta_abs = DELTA_FLOOR_FRACTION * vnorm
        self.delta_abs = delta_abs
        shifted = matrix_abs(V.entries) + delta_abs * np.eye(V.size)
        self._L = cholesky(shifted)

    def beta(self, S: SensitivityMatrix) -> float:
        L = self._L
        W = scipy.linalg.solve_triangular(L, S.entries, lower=True)
        M = scipy.linalg.solve_triangular(L, W.T, lower=True)
        w, _ = sym_eig(0.5 * (M + M.T))
        lam_max = w[0]
        if lam_max <= 0:
            raise ConfigError("sensitivity matrix has no positive direction")
        return 1.0 / lam_max


def compute_beta(S: SensitivityMatrix, V: MeasurementMatrix, delta_abs: float) -> float:
    """Spectral admissibility bound for a single pixel."""
    return BetaComputer(V, delta_abs).beta(S)


def compute_bounds(sensitivities, V: MeasurementMatrix, delta_abs: float,
                   a: float) -> BoundsVector:
    """Per-pixel bounds beta_k and the effective box min(a, beta_k)."""
    computer = BetaComputer(V, delta_abs)
    beta = np.array([computer.beta(S) for S in sensitivities])
    idx = np.array([S.pixel_index for S in sensitivities])
    return BoundsVector(pixel_indices=idx, beta=beta,
                        effective_upper=np.minimum(a, beta),
                        contrast_bound=a, delta_abs=computer.delta_abs)


def write_bounds(path, bounds: BoundsVector, classes: list[PixelClass]) -> None:
    """Text table of the per-pixel bounds: pixel_id, beta, effective_upper, class."""
    if len(classes) != len(bounds.beta):
        raise ConfigError("bounds and classification have mismatched lengths")
    with open(path, "w") as fh:
        fh.write("pixel_id, beta, effective_upper, class\n")
        for k, beta, upper, cls in zip(bounds.pixel_indices, bounds.beta,
                                       bounds.effective_upper, classes):
            fh.write(f"{int(k)}, {float(beta)!r}, {float(upper)!r}, {cls.value}\n")
