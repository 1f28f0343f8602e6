"""Fluctuation reconstruction: stationary covariance, sampling, curvature.

Connects an effective response tensor to the statistics of an overdamped
linear Langevin model

    dp = -m p dt + sqrt(2) L dW,      L L.T = d_mat,

with decay matrix ``m = mu q_eff`` and diffusion ``d_mat = mu / beta``.
The stationary covariance ``gamma`` solves the fluctuation balance

    m.T gamma + gamma m = 2 d_mat,

and for mobilities commuting with ``q_eff`` equals ``(beta q_eff)^{-1}``:
the log-density curvature of the stationary Gaussian reproduces
``beta q_eff``, closing the loop between response and fluctuations.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from .errors import ResponseNotPD, SingularCovariance, StepTooLarge, UnstableDrift
from .reduction import check_mobility, m_from_q
from .tensor import PD_TOL, check_symmetric

# Relative margin for the Hurwitz test on decay matrices.
STABILITY_RTOL = 1e-12
# Relative residual allowed on the fluctuation-balance solution.
LYAPUNOV_RTOL = 1e-10
# Explicit Euler steps must satisfy dt * ||m||_2 < this bound.
STEP_GUARD = 0.1
# Condition-number ceiling beyond which a sample covariance is singular.
CONDITION_CEILING = 1e12
# Commutator scale below which the covariance cross-check applies.
COMMUTATOR_RTOL = 1e-10


def _check_square(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


def _check_decaying(m: np.ndarray) -> None:
    """Raise UnstableDrift unless every eigenvalue of m has positive real part."""
    w = np.linalg.eigvals(m)
    margin = STABILITY_RTOL * max(1.0, float(np.abs(m).max()))
    if not np.all(w.real > margin):
        raise UnstableDrift(
            f"decay matrix has eigenvalue with Re = {w.real.min():.3e} <= 0; "
            "no stationary state exists"
        )


@dataclasses.dataclass(frozen=True)
class LinearSDE:
    """Damped linear Langevin model ``dp = -m p dt + sqrt(2) L dW``."""

    m: np.ndarray
    d_mat: np.ndarray

    def __post_init__(self) -> None:
        m = _check_square(self.m, "m")
        d_mat = check_symmetric(self.d_mat, name="d_mat")
        if d_mat.shape != m.shape:
            raise ValueError(
                f"d_mat: expected shape {m.shape}, got {d_mat.shape}"
            )
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "d_mat", d_mat)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def is_stable(self) -> bool:
        w = np.linalg.eigvals(self.m)
        margin = STABILITY_RTOL * max(1.0, float(np.abs(self.m).max()))
        return bool(np.all(w.real > margin))


def solve_lyapunov(m, d_mat) -> np.ndarray:
    """Stationary covariance from the fluctuation balance.

    Solves ``m.T gamma + gamma m = 2 d_mat`` for symmetric ``gamma`` and
    verifies the residual against ``LYAPUNOV_RTOL * ||d_mat||_F``.

    Parameters
    ----------
    m : array_like
        Decay matrix; every eigenvalue must have positive real part.
    d_mat : array_like
        Symmetric diffusion matrix.

    Returns
    -------
    numpy.ndarray
        Symmetric solution ``gamma``.

    Raises
    ------
    UnstableDrift
        If ``m`` is not a strict decay matrix.
    """
    m_arr = _check_square(m, "m")
    d_arr = check_symmetric(d_mat, name="d_mat")
    if d_arr.shape != m_arr.shape:
        raise ValueError(f"d_mat: expected shape {m_arr.shape}, got {d_arr.shape}")
    _check_decaying(m_arr)
    gamma = scipy.linalg.solve_continuous_lyapunov(m_arr.T, 2.0 * d_arr)
    gamma = 0.5 * (gamma + gamma.T)
    residual = np.linalg.norm(m_arr.T @ gamma + gamma @ m_arr - 2.0 * d_arr)
    if residual > LYAPUNOV_RTOL * np.linalg.norm(d_arr):
        raise ArithmeticError(
            f"fluctuation-balance residual {residual:.3e} exceeds tolerance"
        )
    return gamma


def stationary_gaussian(mu, q_eff, beta: float) -> np.ndarray:
    """Predicted log-density curvature ``beta * q_eff`` of the stationary state.

    Requires positive definite ``mu`` and ``q_eff`` and positive ``beta``.
    When ``mu`` commutes with ``q_eff`` the prediction is cross-checked
    against the fluctuation-balance covariance: ``gamma^{-1}`` must match
    ``beta * q_eff`` to within ``1e-8`` relative error.

    Raises
    ------
    ResponseNotPD
        If ``q_eff`` has an eigenvalue at or below the PD tolerance.
    """
    mu_arr = check_mobility(mu)
    q_arr = check_symmetric(q_eff, name="q_eff")
    if q_arr.shape != mu_arr.shape:
        raise ValueError(f"shape mismatch: mu {mu_arr.shape}, q_eff {q_arr.shape}")
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive, got {beta}")
    w = np.linalg.eigvalsh(q_arr)
    tol = PD_TOL * max(1.0, float(np.abs(w).max()))
    if w.min() <= tol:
        raise ResponseNotPD(
            f"q_eff eigenvalue {w.min():.3e} <= tolerance {tol:.3e}"
        )
    predicted = beta * q_arr
    commutator = np.linalg.norm(mu_arr @ q_arr - q_arr @ mu_arr)
    scale = np.linalg.norm(mu_arr) * np.linalg.norm(q_arr)
    if commutator <= COMMUTATOR_RTOL * max(1.0, scale):
        gamma = solve_lyapunov(m_from_q(mu_arr, q_arr), mu_arr / beta)
        recovered = np.linalg.inv(gamma)
        err = np.linalg.norm(recovered - predicted) / np.linalg.norm(predicted)
        if err > 1e-8:
            raise ArithmeticError(
                f"covariance route disagrees with beta * q_eff: {err:.3e}"
            )
    return predicted


def simulate_sde(
    sde: LinearSDE, dt: float, n_steps: int, burn_in: int = 0, seed=0
) -> np.ndarray:
    """Sample the Langevin model with explicit Euler steps.

    Iterates ``p <- p - m p dt + sqrt(2 dt) L z`` from the origin, discards
    ``burn_in`` steps and returns the following ``n_steps`` states as an
    ``(n_steps, dim)`` array.

    Raises
    ------
    UnstableDrift
        If the decay matrix is not strictly stable.
    StepTooLarge
        If ``dt * ||m||_2 >= 0.1``; larger steps make the explicit scheme
        inaccurate or divergent.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if not isinstance(n_steps, (int, np.integer)) or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    if not isinstance(burn_in, (int, np.integer)) or burn_in < 0:
        raise ValueError(f"burn_in must be a non-negative integer, got {burn_in}")
    if not sde.is_stable():
        raise UnstableDrift("decay matrix has an eigenvalue with Re <= 0")
    opnorm = np.linalg.norm(sde.m, 2)
    if dt * opnorm >= STEP_GUARD:
        raise StepTooLarge(
            f"dt * ||m||_2 = {dt * opnorm:.3e} >= {STEP_GUARD}; reduce dt"
        )

    w, v = np.linalg.eigh(sde.d_mat)
    floor = -1e-12 * max(1.0, float(np.abs(w).max()))
    if w.min() < floor:
        raise ValueError(
            f"d_mat eigenvalue {w.min():.3e} below PSD tolerance {floor:.3e}"
        )
    sqrt_d = v * np.sqrt(np.clip(w, 0.0, None))

    rng = np.random.default_rng(seed)
    total = burn_in + int(n_steps)
    kicks = np.sqrt(2.0 * dt) * (rng.standard_normal((total, sde.dim)) @ sqrt_d.T)
    out = np.empty((total, sde.dim))
    p = np.zeros(sde.dim)
    for step in range(total):
        p = p - (sde.m @ p) * dt + kicks[step]
        out[step] = p
    return out[burn_in:]


def estimate_log_curvature(samples) -> np.ndarray:
    """Inverse sample covariance as the empirical log-density curvature.

    Parameters
    ----------
    samples : array_like
        ``(n, d)`` stationary samples with ``n > 10 * d**2``.

    Raises
    ------
    SingularCovariance
        If the sample covariance has a non-positive eigenvalue or condition
        number above ``CONDITION_CEILING``.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError(f"samples: expected (n, d) with n >= 2, got {arr.shape}")
    n, d = arr.shape
    if n <= 10 * d * d:
        raise ValueError(
            f"need more than {10 * d * d} samples for dimension {d}, got {n}"
        )
    cov = np.atleast_2d(np.cov(arr, rowvar=False))
    w, v = np.linalg.eigh(cov)
    if w.min() <= 0.0 or w.max() / w.min() > CONDITION_CEILING:
        raise SingularCovariance(
            f"sample covariance spectrum [{w.min():.3e}, {w.max():.3e}] "
            "is numerically singular"
        )
    curvature = (v / w) @ v.T
    return 0.5 * (curvature + curvature.T)


def einstein_check(d_mat, mu, beta: float) -> float:
    """Relative deviation of the diffusion from ``mu / beta``."""
    d_arr = check_symmetric(d_mat, name="d_mat")
    mu_arr = check_mobility(mu)
    if d_arr.shape != mu_arr.shape:
        raise ValueError(f"shape mismatch: d_mat {d_arr.shape}, mu {mu_arr.shape}")
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive, got {beta}")
    target = mu_arr / beta
    return float(np.linalg.norm(d_arr - target) / np.linalg.norm(target))


@dataclasses.dataclass(eq=False)
class ReconstructionReport:
    """Outputs of an end-to-end fluctuation reconstruction."""

    gamma: np.ndarray
    g_eff: np.ndarray
    curvature_target: np.ndarray
    einstein_residual: float
    beta: float


def reconstruct(
    mu,
    q_eff,
    beta: float,
    d_mat=None,
    dt: float | None = None,
    n_steps: int = 100_000,
    burn_in: int = 1_000,
    seed=0,
) -> ReconstructionReport:
    """Recover the response tensor from simulated fluctuations.

    Builds the Langevin model with decay ``mu q_eff`` and diffusion
    ``d_mat`` (default ``mu / beta``), solves the fluctuation balance for
    the stationary covariance, samples the dynamics and estimates the
    log-density curvature from the samples.  With the default diffusion the
    curvature estimate converges to ``beta * q_eff``.

    ``dt`` defaults to half the step guard, ``0.05 / ||m||_2``.

    Raises
    ------
    UnstableDrift
        If ``q_eff`` is not positive definite, so the decay matrix fails
        the Hurwitz test and no stationary state exists.
    """
    mu_arr = check_mobility(mu)
    q_arr = check_symmetric(q_eff, name="q_eff")
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive, got {beta}")
    m = m_from_q(mu_arr, q_arr)
    diffusion = mu_arr / beta if d_mat is None else check_symmetric(d_mat, "d_mat")
    gamma = solve_lyapunov(m, diffusion)
    if dt is None:
        dt = 0.5 * STEP_GUARD / np.linalg.norm(m, 2)
    sde = LinearSDE(m=m, d_mat=diffusion)
    samples = simulate_sde(sde, dt=dt, n_steps=n_steps, burn_in=burn_in, seed=seed)
    g_eff = estimate_log_curvature(samples)
    return ReconstructionReport(
        gamma=gamma,
        g_eff=g_eff,
        curvature_target=beta * q_arr,
        einstein_residual=einstein_check(diffusion, mu_arr, beta),
        beta=float(beta),
    )
