"""Slow-fast elimination of linear dynamics and response/drift bridges.

A linear generator split into slow and fast sectors,

    d/dt [x_s, x_f] = [[k_ss, k_sf], [k_fs, k_ff]] [x_s, x_f],

reduces, when the fast sector relaxes much faster than the slow one, to the
effective slow generator ``k_ss - k_sf k_ff^{-1} k_fs`` obtained by slaving
the fast variables to the slow ones.  This is the dynamical counterpart of
the Schur complement on quadratic forms.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import FastSectorUnstable
from .tensor import check_symmetric

# Relative floor used when testing Re(lambda) < 0 for the fast block.
STABILITY_RTOL = 1e-12


def _as_matrix(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


@dataclasses.dataclass(frozen=True)
class BlockGenerator:
    """Linear generator in block form over slow and fast sectors."""

    k_ss: np.ndarray
    k_sf: np.ndarray
    k_fs: np.ndarray
    k_ff: np.ndarray

    def __post_init__(self) -> None:
        k_ss = _as_matrix(self.k_ss, "k_ss")
        k_ff = _as_matrix(self.k_ff, "k_ff")
        if k_ss.shape[0] != k_ss.shape[1]:
            raise ValueError(f"k_ss: expected square, got {k_ss.shape}")
        if k_ff.shape[0] != k_ff.shape[1]:
            raise ValueError(f"k_ff: expected square, got {k_ff.shape}")
        d_s, d_f = k_ss.shape[0], k_ff.shape[0]
        k_sf = _as_matrix(self.k_sf, "k_sf")
        k_fs = _as_matrix(self.k_fs, "k_fs")
        if k_sf.shape != (d_s, d_f):
            raise ValueError(f"k_sf: expected shape {(d_s, d_f)}, got {k_sf.shape}")
        if k_fs.shape != (d_f, d_s):
            raise ValueError(f"k_fs: expected shape {(d_f, d_s)}, got {k_fs.shape}")
        object.__setattr__(self, "k_ss", k_ss)
        object.__setattr__(self, "k_sf", k_sf)
        object.__setattr__(self, "k_fs", k_fs)
        object.__setattr__(self, "k_ff", k_ff)

    @property
    def d_s(self) -> int:
        return self.k_ss.shape[0]

    @property
    def d_f(self) -> int:
        return self.k_ff.shape[0]

    def full(self) -> np.ndarray:
        """Assemble the full generator matrix."""
        return np.vstack(
            [np.hstack([self.k_ss, self.k_sf]), np.hstack([self.k_fs, self.k_ff])]
        )


def check_fast_stable(k_ff) -> bool:
    """True if every eigenvalue of the fast block has negative real part.

    The test uses a relative margin: ``Re(lambda) < -STABILITY_RTOL *
    max(1, ||k_ff||)`` so roundoff-level marginal modes count as unstable.
    """
    arr = _as_matrix(k_ff, "k_ff")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"k_ff: expected square, got {arr.shape}")
    w = np.linalg.eigvals(arr)
    margin = STABILITY_RTOL * max(1.0, float(np.abs(arr).max()))
    return bool(np.all(w.real < -margin))


def eliminate_fast(k: BlockGenerator) -> np.ndarray:
    """Effective slow generator ``k_ss - k_sf k_ff^{-1} k_fs``.

    Raises
    ------
    FastSectorUnstable
        If the fast block is not strictly stable; the slaved fast state
        would not track the slow sector and the reduction is invalid.
    """
    if not check_fast_stable(k.k_ff):
        raise FastSectorUnstable(
            "fast block has an eigenvalue with non-negative real part"
        )
    return k.k_ss - k.k_sf @ np.linalg.solve(k.k_ff, k.k_fs)


def fast_slave(k: BlockGenerator, x_s) -> np.ndarray:
    """Quasi-stationary fast state ``x_f = -k_ff^{-1} k_fs x_s``."""
    x_s = np.asarray(x_s, dtype=float)
    if x_s.shape != (k.d_s,):
        raise ValueError(f"x_s: expected shape {(k.d_s,)}, got {x_s.shape}")
    if not check_fast_stable(k.k_ff):
        raise FastSectorUnstable(
            "fast block has an eigenvalue with non-negative real part"
        )
    return -np.linalg.solve(k.k_ff, k.k_fs @ x_s)


def check_mobility(mu) -> np.ndarray:
    """Validate a mobility matrix: symmetric positive definite.

    Returns the symmetrized array.  Raises ``ValueError`` if any eigenvalue
    is ``<= PD_TOL * max(1, ||mu||_op)``.
    """
    from .tensor import PD_TOL

    arr = check_symmetric(mu, name="mu")
    w = np.linalg.eigvalsh(arr)
    tol = PD_TOL * max(1.0, float(np.abs(w).max()))
    if w.min() <= tol:
        raise ValueError(
            f"mu: eigenvalue {w.min():.3e} <= tolerance {tol:.3e}; "
            "mobility must be positive definite"
        )
    return arr


def k_from_q(mu, q) -> np.ndarray:
    """Relaxation generator ``k = -mu q`` of ``dx/dt = k x``."""
    mu_arr = check_mobility(mu)
    q_arr = check_symmetric(q, name="q")
    if q_arr.shape != mu_arr.shape:
        raise ValueError(f"shape mismatch: mu {mu_arr.shape}, q {q_arr.shape}")
    return -(mu_arr @ q_arr)


def m_from_q(mu, q) -> np.ndarray:
    """Decay matrix ``m = mu q`` of the damped form ``dx/dt = -m x``."""
    return -k_from_q(mu, q)
