"""Discrete coarse-graining flow on symmetric tensors with signature tracking.

Each step eliminates a batch of fast directions from an evolving tangential
response tensor ``q_t``:

    q_t  <-  N( q_t - zeta * Sigma_k + a_k * A_k )

where ``Sigma_k`` is a random positive semidefinite elimination load,
``A_k`` a random traceless unit-norm anisotropy with amplitude
``a_k = a0 * exp(-beta_decay * k)``, and ``N`` a normalization that fixes
the overall scale without touching the signature.  The normal sector is a
fixed positive scalar ``q_n``, so the signature of the full tensor
``diag(q_n, q_t)`` is the tangential signature plus one positive count.

Randomness contract
-------------------
A trajectory consumes its generator in a documented order so runs are
reproducible and replayable through the public samplers:

1. anisotropy draws, skipped entirely when ``a0 == 0``: one batched call
   ``sample_anisotropy_batch(d_tan, n_draws, rng)`` with ``n_draws = 1``
   (quenched, the single matrix is reused every step) or ``k_max``
   (annealed, one matrix per step);
2. elimination-load draws, skipped entirely when ``zeta == 0``: one batched
   call ``sample_sigma_batch(model, d_tan, k_max, rng)``.

The evolution itself draws nothing.  Batched runs over many trajectories
give each trajectory its own generator, so a batch is bitwise identical to
the corresponding sequence of single-trajectory runs.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .errors import DegenerateDraw, FlowCollapsed, ZeroTensor
from .tensor import SIGNATURE_TOL, check_symmetric

# Frobenius norm below which a tensor counts as collapsed to zero.
ZERO_FLOOR = 1e-14
# Absolute |trace| floor below which trace normalization falls back to Frobenius.
TRACE_FLOOR = 1e-8
# Resample budget for degenerate anisotropy draws (initial try not counted).
RESAMPLE_BUDGET = 8


class NormMode(str, enum.Enum):
    """Scale-fixing rule applied after every flow step."""

    FROBENIUS = "frobenius"
    TRACE = "trace"


class Disorder(str, enum.Enum):
    """Anisotropy disorder protocol: fresh each step or frozen per trajectory."""

    ANNEALED = "annealed"
    QUENCHED = "quenched"


@dataclasses.dataclass(frozen=True)
class LognormalGaussian:
    """Elimination load from a Gaussian coupling and a lognormal fast block.

    The fast block is ``r diag(exp(sigma_log * z)) r.T`` with Haar-random
    rotation ``r`` and standard normal ``z``; the coupling is an i.i.d.
    Gaussian ``(d_tan, d_fast)`` matrix scaled by ``1 / sqrt(d_fast)``.  The
    load is the Schur-complement correction ``b C^{-1} b.T``, evaluated in
    the eigenbasis of the fast block.
    """

    sigma_log: float = 1.0
    d_fast: int | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma_log) and self.sigma_log > 0):
            raise ValueError(f"sigma_log must be positive, got {self.sigma_log}")
        if self.d_fast is not None and (
            not isinstance(self.d_fast, (int, np.integer)) or self.d_fast < 1
        ):
            raise ValueError(f"d_fast must be a positive integer, got {self.d_fast}")


@dataclasses.dataclass(frozen=True)
class Wishart:
    """Elimination load ``g g.T`` with ``g`` an i.i.d. Gaussian
    ``(d_tan, rank)`` matrix scaled by ``1 / sqrt(rank)`` so the mean load
    is the identity."""

    rank: int | None = None

    def __post_init__(self) -> None:
        if self.rank is not None and (
            not isinstance(self.rank, (int, np.integer)) or self.rank < 1
        ):
            raise ValueError(f"rank must be a positive integer, got {self.rank}")


SchurModel = LognormalGaussian | Wishart


@dataclasses.dataclass(frozen=True)
class FlowConfig:
    """Parameters of a single flow run.

    ``q_init`` defaults to the identity.  ``target_n_minus`` is the
    negative-count threshold defining first passage.
    """

    zeta: float = 0.0
    a0: float = 0.0
    d_tan: int = 3
    q_n: float = 1.0
    beta_decay: float = 0.05
    k_max: int = 100
    norm_mode: NormMode = NormMode.FROBENIUS
    schur_model: SchurModel = LognormalGaussian()
    disorder: Disorder = Disorder.ANNEALED
    target_n_minus: int = 3
    q_init: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.d_tan, (int, np.integer)) or self.d_tan < 1:
            raise ValueError(f"d_tan must be a positive integer, got {self.d_tan}")
        if not isinstance(self.k_max, (int, np.integer)) or self.k_max < 1:
            raise ValueError(f"k_max must be a positive integer, got {self.k_max}")
        for name in ("zeta", "a0", "beta_decay"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if not (np.isfinite(self.q_n) and self.q_n > 0):
            raise ValueError(f"q_n must be positive, got {self.q_n}")
        if self.a0 > 0 and self.d_tan < 2:
            raise ValueError("anisotropy requires d_tan >= 2")
        if (
            not isinstance(self.target_n_minus, (int, np.integer))
            or not 0 <= self.target_n_minus <= self.d_tan
        ):
            raise ValueError(
                f"target_n_minus must lie in [0, {self.d_tan}], got {self.target_n_minus}"
            )
        object.__setattr__(self, "norm_mode", NormMode(self.norm_mode))
        object.__setattr__(self, "disorder", Disorder(self.disorder))
        if not isinstance(self.schur_model, (LognormalGaussian, Wishart)):
            raise TypeError(
                "schur_model must be a LognormalGaussian or Wishart instance"
            )
        if self.q_init is not None:
            q0 = check_symmetric(self.q_init, name="q_init")
            if q0.shape != (self.d_tan, self.d_tan):
                raise ValueError(
                    f"q_init: expected shape {(self.d_tan, self.d_tan)}, got {q0.shape}"
                )
            object.__setattr__(self, "q_init", q0)

    def initial_state(self) -> np.ndarray:
        return np.eye(self.d_tan) if self.q_init is None else self.q_init.copy()


@dataclasses.dataclass(eq=False)
class TrajectoryRecord:
    """Per-step classification of one flow trajectory.

    Arrays run over states ``0 .. n_steps`` (entry 0 is the initial state).
    The signature counts refer to the full tensor ``diag(q_n, q_t)``;
    ``q`` and ``s_opnorm`` are the isotropic weight and traceless operator
    norm of the tangential block alone.  ``first_passage`` is the first step
    whose negative count equals the target, ``None`` when censored.  A
    collapsed trajectory carries the valid prefix only.
    """

    n_plus: np.ndarray
    n_minus: np.ndarray
    n_zero: np.ndarray
    q: np.ndarray
    s_opnorm: np.ndarray
    separation_holds: np.ndarray
    first_passage: int | None
    censored: bool
    collapsed: bool

    @property
    def n_steps(self) -> int:
        return len(self.q) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            self.first_passage == other.first_passage
            and self.censored == other.censored
            and self.collapsed == other.collapsed
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in (
                    "n_plus",
                    "n_minus",
                    "n_zero",
                    "q",
                    "s_opnorm",
                    "separation_holds",
                )
            )
        )


def sample_sigma_batch(model: SchurModel, d_tan: int, n: int, rng) -> np.ndarray:
    """Draw ``n`` elimination loads as an ``(n, d_tan, d_tan)`` array.

    Draw order for :class:`LognormalGaussian`: fast-block log-eigenvalues
    ``z`` with shape ``(n, d_fast)``, then the rotation seed ``(n, d_fast,
    d_fast)``, then the coupling ``(n, d_tan, d_fast)``.  For
    :class:`Wishart`: a single ``(n, d_tan, rank)`` draw.
    """
    if not isinstance(d_tan, (int, np.integer)) or d_tan < 1:
        raise ValueError(f"d_tan must be a positive integer, got {d_tan}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if isinstance(model, LognormalGaussian):
        d_fast = model.d_fast if model.d_fast is not None else int(d_tan)
        z = rng.standard_normal((n, d_fast))
        rot = _haar_rotation(rng.standard_normal((n, d_fast, d_fast)))
        b = rng.standard_normal((n, d_tan, d_fast)) / np.sqrt(d_fast)
        w = b @ rot
        sigma = (w * np.exp(-model.sigma_log * z)[:, None, :]) @ w.transpose(0, 2, 1)
    elif isinstance(model, Wishart):
        rank = model.rank if model.rank is not None else int(d_tan)
        g = rng.standard_normal((n, d_tan, rank)) / np.sqrt(rank)
        sigma = g @ g.transpose(0, 2, 1)
    else:
        raise TypeError(f"unknown elimination-load model: {model!r}")
    return 0.5 * (sigma + sigma.transpose(0, 2, 1))


def sample_sigma(model: SchurModel, d_tan: int, rng) -> np.ndarray:
    """Draw one elimination load (batch of one)."""
    return sample_sigma_batch(model, d_tan, 1, rng)[0]


def _haar_rotation(g: np.ndarray) -> np.ndarray:
    """Haar-distributed orthogonal matrices from Gaussian seeds via QR.

    The QR sign ambiguity is fixed by forcing positive diagonal entries of
    ``r``, which makes the distribution exactly Haar.
    """
    rot, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return rot * np.where(diag < 0.0, -1.0, 1.0)[..., None, :]


def sample_anisotropy_batch(d_tan: int, n: int, rng) -> np.ndarray:
    """Draw ``n`` traceless unit-Frobenius symmetric anisotropies.

    Each draw symmetrizes an i.i.d. Gaussian matrix, projects out the trace
    and normalizes to unit Frobenius norm.  Draws whose projected norm falls
    below the zero floor are redrawn, up to ``RESAMPLE_BUDGET`` times.
    """
    if not isinstance(d_tan, (int, np.integer)) or d_tan < 2:
        raise ValueError(f"d_tan must be an integer >= 2, got {d_tan}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    eye = np.eye(d_tan)
    out = np.empty((n, d_tan, d_tan))
    pending = np.arange(n)
    for _ in range(1 + RESAMPLE_BUDGET):
        g = rng.standard_normal((pending.size, d_tan, d_tan))
        s = 0.5 * (g + g.transpose(0, 2, 1))
        s -= (np.trace(s, axis1=1, axis2=2) / d_tan)[:, None, None] * eye
        norm = np.sqrt(np.einsum("kij,kij->k", s, s))
        good = norm >= ZERO_FLOOR
        out[pending[good]] = s[good] / norm[good, None, None]
        pending = pending[~good]
        if pending.size == 0:
            return out
    raise DegenerateDraw(
        f"{pending.size} anisotropy draw(s) degenerate after "
        f"{RESAMPLE_BUDGET} resamples"
    )


def sample_anisotropy(d_tan: int, rng) -> np.ndarray:
    """Draw one anisotropy matrix (batch of one)."""
    return sample_anisotropy_batch(d_tan, 1, rng)[0]


def anisotropy_strength(a0: float, beta_decay: float, k):
    """Per-step anisotropy amplitude ``a0 * exp(-beta_decay * k)``.

    ``k`` counts steps from zero, so the first update uses exactly ``a0``.
    Accepts a scalar or array ``k``.
    """
    if not (np.isfinite(a0) and a0 >= 0):
        raise ValueError(f"a0 must be finite and non-negative, got {a0}")
    if not (np.isfinite(beta_decay) and beta_decay >= 0):
        raise ValueError(f"beta_decay must be finite and non-negative, got {beta_decay}")
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise ValueError("step index k must be non-negative")
    out = a0 * np.exp(-beta_decay * k_arr)
    return float(out) if np.isscalar(k) else out


def _scale_factors(upd: np.ndarray, mode: NormMode):
    """Per-slice normalization scale and zero-collapse mask.

    ``upd`` has shape ``(n, d, d)``.  Frobenius mode rescales to unit
    Frobenius norm.  Trace mode rescales so ``|trace| == d`` whenever the
    trace magnitude is at least ``TRACE_FLOOR``, falling back to Frobenius
    below that.  Slices with Frobenius norm below ``ZERO_FLOOR`` are flagged
    and assigned unit scale.
    """
    d = upd.shape[-1]
    fro = np.sqrt(np.einsum("kij,kij->k", upd, upd))
    zero = fro < ZERO_FLOOR
    safe_fro = np.where(zero, 1.0, fro)
    fro_scale = 1.0 / safe_fro
    if mode is NormMode.TRACE:
        tr = np.trace(upd, axis1=1, axis2=2)
        tr_ok = np.abs(tr) >= TRACE_FLOOR
        safe_tr = np.where(tr_ok, np.abs(tr), 1.0)
        scale = np.where(tr_ok, d / safe_tr, fro_scale)
    else:
        scale = fro_scale
    return np.where(zero, 1.0, scale), zero


def normalize(q_t, mode: NormMode = NormMode.FROBENIUS) -> np.ndarray:
    """Rescale a symmetric tensor without changing its signature.

    Raises
    ------
    ZeroTensor
        If the Frobenius norm is below ``ZERO_FLOOR``.
    """
    q = check_symmetric(q_t, name="q_t")
    scale, zero = _scale_factors(q[None], NormMode(mode))
    if zero[0]:
        raise ZeroTensor(f"norm {np.linalg.norm(q):.3e} below floor {ZERO_FLOOR}")
    return q * scale[0]


def flow_step(q_t, sigma, a, a_k: float, zeta: float, mode: NormMode) -> np.ndarray:
    """One flow update: subtract the load, add anisotropy, renormalize.

    Computes ``N(q_t - zeta * sigma + a_k * a)`` with the symmetric part
    taken before normalization.  Multiplying by a positive scale never moves
    eigenvalues across zero, so the signature after the update is decided by
    the un-normalized combination alone.
    """
    q = np.asarray(q_t, dtype=float)
    sig = np.asarray(sigma, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    if (
        not (q.shape == sig.shape == a_arr.shape)
        or q.ndim != 2
        or q.shape[0] != q.shape[1]
    ):
        raise ValueError(
            f"shape mismatch: q_t {q.shape}, sigma {sig.shape}, a {a_arr.shape}"
        )
    if not (np.isfinite(a_k) and np.isfinite(zeta)):
        raise ValueError("a_k and zeta must be finite")
    upd = q - zeta * sig + a_k * a_arr
    upd = 0.5 * (upd + upd.T)
    scale, zero = _scale_factors(upd[None], NormMode(mode))
    if zero[0]:
        raise ZeroTensor(
            f"update norm {np.linalg.norm(upd):.3e} below floor {ZERO_FLOOR}"
        )
    return upd * scale[0]


def embed_full(q_t, q_n: float) -> np.ndarray:
    """Full tensor ``diag(q_n, q_t)`` with the scalar normal sector first."""
    q = check_symmetric(q_t, name="q_t")
    if not (np.isfinite(q_n) and q_n > 0):
        raise ValueError(f"q_n must be positive, got {q_n}")
    d = q.shape[0]
    full = np.zeros((d + 1, d + 1))
    full[0, 0] = q_n
    full[1:, 1:] = q
    return full


def _run_batch(config: FlowConfig, rngs) -> list[TrajectoryRecord]:
    """Run one trajectory per generator, vectorized across the batch.

    Every trajectory consumes only its own generator, in the documented
    order, so the records are bitwise identical to single runs.
    """
    n = len(rngs)
    d = config.d_tan
    k_max = config.k_max
    annealed = config.disorder is Disorder.ANNEALED

    a_all = None
    if config.a0 > 0:
        n_draws = k_max if annealed else 1
        a_all = np.empty((n, n_draws, d, d))
        for t, rng in enumerate(rngs):
            a_all[t] = sample_anisotropy_batch(d, n_draws, rng)
    sig_all = None
    if config.zeta > 0:
        sig_all = np.empty((n, k_max, d, d))
        for t, rng in enumerate(rngs):
            sig_all[t] = sample_sigma_batch(config.schur_model, d, k_max, rng)

    a_k = anisotropy_strength(config.a0, config.beta_decay, np.arange(k_max))
    states = np.empty((n, k_max + 1, d, d))
    q = np.broadcast_to(config.initial_state(), (n, d, d)).copy()
    states[:, 0] = q
    alive = np.ones(n, dtype=bool)
    # Index of the first invalid state; k_max + 1 means the run completed.
    collapse_at = np.full(n, k_max + 1)

    for k in range(k_max):
        upd = q
        if sig_all is not None:
            upd = upd - config.zeta * sig_all[:, k]
        if a_all is not None:
            upd = upd + a_k[k] * a_all[:, k if annealed else 0]
        upd = 0.5 * (upd + upd.transpose(0, 2, 1))
        scale, zero = _scale_factors(upd, config.norm_mode)
        newly = alive & zero
        collapse_at[newly] = k + 1
        alive &= ~zero
        q = upd * scale[:, None, None]
        states[:, k + 1] = q

    eigs = np.linalg.eigvalsh(states.reshape(-1, d, d)).reshape(n, k_max + 1, d)
    q_iso = np.trace(states, axis1=2, axis2=3) / d
    opnorm = np.maximum(np.abs(eigs[..., 0]), np.abs(eigs[..., -1]))
    band = SIGNATURE_TOL * np.maximum(1.0, opnorm)
    n_minus = (eigs < -band[..., None]).sum(axis=-1)
    n_plus = (eigs > band[..., None]).sum(axis=-1)
    s_opnorm = np.maximum(
        np.abs(eigs[..., 0] - q_iso), np.abs(eigs[..., -1] - q_iso)
    )
    separation = np.abs(q_iso) > s_opnorm
    hit = n_minus == config.target_n_minus

    records = []
    for t in range(n):
        last = k_max if alive[t] else int(collapse_at[t]) - 1
        sl = slice(0, last + 1)
        passages = np.flatnonzero(hit[t, sl])
        first = int(passages[0]) if passages.size else None
        records.append(
            TrajectoryRecord(
                n_plus=n_plus[t, sl].copy() + 1,
                n_minus=n_minus[t, sl].copy(),
                n_zero=d - n_plus[t, sl] - n_minus[t, sl],
                q=q_iso[t, sl].copy(),
                s_opnorm=s_opnorm[t, sl].copy(),
                separation_holds=separation[t, sl].copy(),
                first_passage=first,
                censored=first is None,
                collapsed=not alive[t],
            )
        )
    return records


def run_trajectory(config: FlowConfig, seed) -> TrajectoryRecord:
    """Run a single flow trajectory from a fresh generator.

    ``seed`` is passed to ``numpy.random.default_rng`` unchanged, so a
    sequence seed like ``[master, cell, index]`` reproduces the exact
    trajectory a batched grid run would produce at that position.

    Raises
    ------
    FlowCollapsed
        If the tensor collapses below the zero floor mid-run; the partial
        record is attached to the exception.
    """
    record = _run_batch(config, [np.random.default_rng(seed)])[0]
    if record.collapsed:
        raise FlowCollapsed(
            f"trajectory collapsed at step {record.n_steps + 1}", record=record
        )
    return record
