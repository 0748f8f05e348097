"""Box-constrained least-squares recovery of the pixel coefficients.

The data misfit || sum_k a_k S_k - V ||_F is quadratic in the coefficient
vector once the sensitivity matrices are flattened into columns of a design
matrix.  The main solver is an accelerated projected gradient iteration with
a fixed step from the largest normal-matrix eigenvalue and momentum restart
on objective increase; a projected subgradient variant minimizes the
spectral-norm misfit instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50000


@dataclass(frozen=True)
class ReconstructionProblem:
    sensitivities: np.ndarray   # (P, N, N) stack of symmetric S_k
    target: np.ndarray          # (N, N) symmetric data matrix
    upper: np.ndarray           # (P,) per-pixel upper bounds, >= 0

    def __post_init__(self):
        S = np.asarray(self.sensitivities, dtype=float)
        if S.ndim != 3 or S.shape[1] != S.shape[2]:
            raise ConfigError(f"sensitivity stack must be (P, N, N), got {S.shape}")
        if self.target.shape != S.shape[1:]:
            raise ConfigError("target matrix size does not match the sensitivities")
        if len(self.upper) != S.shape[0]:
            raise ConfigError("upper bound vector does not match the pixel count")
        if np.any(np.asarray(self.upper) < 0):
            raise ConfigError("upper bounds must be nonnegative")

    @property
    def n_pixels(self) -> int:
        return self.sensitivities.shape[0]

    @property
    def size(self) -> int:
        return self.target.shape[0]


@dataclass(frozen=True)
class ReconstructionResult:
    coefficients: np.ndarray
    objective: float            # Frobenius (or spectral) misfit at the solution
    iterations: int
    converged: bool
    kkt_residual: float


def vectorize(problem: ReconstructionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Flatten the matrix problem: column k is S_k in row-major order.

    The Frobenius misfit equals the Euclidean misfit of the flattened
    problem, entry (i, j) landing at position i * N + j.
    """
    P = problem.n_pixels
    design = problem.sensitivities.reshape(P, -1).T.copy()
    target = problem.target.reshape(-1).copy()
    return design, target


def devectorize(column: np.ndarray) -> np.ndarray:
    """Inverse of the flattening for a single matrix column."""
    n = int(round(len(column) ** 0.5))
    if n * n != len(column):
        raise ConfigError(f"flattened length {len(column)} is not a square")
    return column.reshape(n, n)


def objective(problem: ReconstructionProblem, coefficients) -> float:
    """Frobenius misfit || sum_k a_k S_k - target ||_F."""
    a = np.asarray(coefficients, dtype=float)
    R = np.tensordot(a, problem.sensitivities, axes=(0, 0)) - problem.target
    return float(np.linalg.norm(R, "fro"))


def solve_box_ls(problem: ReconstructionProblem, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> ReconstructionResult:
    """Accelerated projected gradient on the box [0, upper]^P.

    Fixed step 1 / lambda_max(D^T D); momentum restarts whenever the
    objective would increase, which keeps accepted iterates monotone.
    Starts from zero; stopping tests the unit-step projected-gradient
    (KKT) residual against tol * (1 + ||target||).
    """
    D, v = vectorize(problem)
    H = D.T @ D
    b = D.T @ v
    upper = np.asarray(problem.upper, dtype=float)
    lam = float(np.linalg.eigvalsh(H)[-1])
    if lam <= 0:
        # all sensitivities vanish; the zero vector is trivially optimal
        return ReconstructionResult(coefficients=np.zeros(problem.n_pixels),
                                    objective=float(np.linalg.norm(v)),
                                    iterations=0, converged=True, kkt_residual=0.0)
    step = 1.0 / lam
    threshold = tol * (1.0 + float(np.linalg.norm(v)))

    def fval(a):
        r = D @ a - v
        return 0.5 * float(r @ r)

    def grad(a):
        return H @ a - b

    def project(a):
        return np.clip(a, 0.0, upper)

    x = np.zeros(problem.n_pixels)
    y = x.copy()
    t = 1.0
    fx = fval(x)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        x_new = project(y - step * grad(y))
        f_new = fval(x_new)
        if f_new > fx:
            # restart: plain projected-gradient step from x is a descent step
            y = x.copy()
            t = 1.0
            x_new = project(y - step * grad(y))
            f_new = fval(x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
        kkt = float(np.linalg.norm(x - project(x - grad(x))))
        if kkt <= threshold:
            converged = True
            break
    kkt = float(np.linalg.norm(x - project(x - grad(x))))
    return ReconstructionResult(coefficients=x, objective=objective(problem, x),
                                iterations=iterations, converged=converged,
                                kkt_residual=kkt)


def solve_spectral(problem: ReconstructionProblem, max_iter: int = 2000,
                   tol: float = 1e-6) -> ReconstructionResult:
    """Projected subgradient descent on the spectral-norm misfit.

    Steps shrink like 1/sqrt(t); the best iterate seen is returned.
    Convergence is declared when the best objective stops improving by more
    than tol * (1 + ||target||_2) over a 50-iteration window.
    """
    S = problem.sensitivities
    upper = np.asarray(problem.upper, dtype=float)
    target_norm = float(np.linalg.norm(problem.target, 2))

    def spec_misfit(a):
        R = np.tensordot(a, S, axes=(0, 0)) - problem.target
        w = np.linalg.eigvalsh(R)
        i = np.argmax(np.abs(w))
        return float(np.abs(w[i]))

    x = np.zeros(problem.n_pixels)
    best_x = x.copy()
    best_f = spec_misfit(x)
    # normalize the step length by the first subgradient magnitude
    c0 = None
    window_best = best_f
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        R = np.tensordot(x, S, axes=(0, 0)) - problem.target
        w, Q = np.linalg.eigh(0.5 * (R + R.T))
        i = int(np.argmax(np.abs(w)))
        q = Q[:, i]
        g = np.sign(w[i]) * np.einsum("i,kij,j->k", q, S, q)
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            converged = True
            break
        if c0 is None:
            c0 = 0.5 * max(np.max(upper, initial=0.0), 1e-12) * gnorm
        x = np.clip(x - (c0 / np.sqrt(iterations)) * (g / gnorm), 0.0, upper)
        f = spec_misfit(x)
        if f < best_f:
            best_f = f
            best_x = x.copy()
        if iterations % 50 == 0:
            if window_best - best_f <= tol * (1.0 + target_norm):
                converged = True
                break
            window_best = best_f
    return ReconstructionResult(coefficients=best_x, objective=best_f,
                                iterations=iterations, converged=converged,
                                kkt_residual=float("nan"))


def solve_tikhonov(problem: ReconstructionProblem, lam: float = 1e-5) -> ReconstructionResult:
    """Unconstrained ridge comparison: min ||D a - v||^2 + lam ||a||^2."""
    if lam <= 0:
        raise ConfigError(f"ridge weight must be positive, got {lam}")
    D, v = vectorize(problem)
    H = D.T @ D + lam * np.eye(problem.n_pixels)
    b = D.T @ v
    try:
        a = np.linalg.solve(H, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"ridge normal equations are singular: {exc}") from exc
    residual = float(np.linalg.norm(H @ a - b))
    return ReconstructionResult(coefficients=a, objective=objective(problem, a),
                                iterations=1, converged=True, kkt_residual=residual)
