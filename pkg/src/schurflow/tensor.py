"""Symmetric-tensor algebra: block elimination, inertia, spectral margins.

The functions here operate on real symmetric matrices stored as plain
``numpy.ndarray`` objects.  Inputs are validated with :func:`check_symmetric`,
which tolerates roundoff-level asymmetry and returns an exactly symmetrized
copy; downstream code may therefore assume exact symmetry.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

from .errors import FastSectorNotPD

# Relative asymmetry tolerated by check_symmetric.
SYMMETRY_RTOL = 1e-12
# Relative floor below which a fast-sector eigenvalue is treated as non-positive.
PD_TOL = 1e-10
# Default relative band within which an eigenvalue counts as zero.
SIGNATURE_TOL = 1e-10


class Signature(NamedTuple):
    """Inertia of a symmetric matrix: eigenvalue counts by sign."""

    n_plus: int
    n_minus: int
    n_zero: int


class IsoTracelessSplit(NamedTuple):
    """Isotropic weight ``q`` and traceless remainder ``s`` of a tensor."""

    q: float
    s: np.ndarray


class SeparationResult(NamedTuple):
    """Outcome of the isotropic/traceless dominance test."""

    holds: bool
    q: float
    s_opnorm: float


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return the symmetric part ``(m + m.T) / 2``."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def check_symmetric(m, name: str = "matrix") -> np.ndarray:
    """Validate a square symmetric matrix and return a symmetrized copy.

    Parameters
    ----------
    m : array_like
        Candidate matrix.  Must be 2-D, square, finite, and symmetric up to
        a relative tolerance of ``SYMMETRY_RTOL * (1 + max |m|)``.
    name : str
        Label used in error messages.

    Returns
    -------
    numpy.ndarray
        ``(m + m.T) / 2`` as a float array, exactly symmetric.

    Raises
    ------
    ValueError
        If the input is not square, not finite, or too asymmetric.
    """
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name}: dimension must be at least 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    scale = 1.0 + np.abs(arr).max()
    asym = np.abs(arr - arr.T).max()
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"{name}: asymmetry {asym:.3e} exceeds tolerance {SYMMETRY_RTOL * scale:.3e}"
        )
    return 0.5 * (arr + arr.T)


@dataclasses.dataclass(frozen=True)
class BlockQuadratic:
    """Quadratic form split into retained and fast sectors.

    The full matrix is ``[[a, b], [b.T, c]]`` with ``a`` the retained
    (slow) block of size ``d_s``, ``c`` the fast block of size ``d_f`` and
    ``b`` the ``(d_s, d_f)`` coupling.  ``a`` and ``c`` are symmetrized on
    construction; positive definiteness of ``c`` is checked only where it
    is actually required (:func:`schur_complement`).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        a = check_symmetric(self.a, name="a")
        c = check_symmetric(self.c, name="c")
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 2 or b.shape != (a.shape[0], c.shape[0]):
            raise ValueError(
                f"b: expected shape {(a.shape[0], c.shape[0])}, got {b.shape}"
            )
        if not np.all(np.isfinite(b)):
            raise ValueError("b: entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def d_s(self) -> int:
        return self.a.shape[0]

    @property
    def d_f(self) -> int:
        return self.c.shape[0]

    def full(self) -> np.ndarray:
        """Assemble the full ``(d_s + d_f)``-dimensional symmetric matrix."""
        top = np.hstack([self.a, self.b])
        bottom = np.hstack([self.b.T, self.c])
        return np.vstack([top, bottom])


def schur_complement(q: BlockQuadratic) -> np.ndarray:
    """Eliminate the fast sector of a block quadratic form.

    Returns the effective retained-sector tensor ``a - b c^{-1} b.T``.  The
    inverse is taken through the eigendecomposition of ``c``, which doubles
    as the positive-definiteness check.

    Parameters
    ----------
    q : BlockQuadratic
        Block form whose fast block ``c`` must be positive definite.

    Returns
    -------
    numpy.ndarray
        Symmetric effective tensor of size ``d_s``.

    Raises
    ------
    FastSectorNotPD
        If any eigenvalue of ``c`` is ``<= PD_TOL * max(1, ||c||_op)``.
    """
    w, v = np.linalg.eigh(q.c)
    tol = PD_TOL * max(1.0, float(np.abs(w).max()))
    if w.min() <= tol:
        raise FastSectorNotPD(
            f"fast block has eigenvalue {w.min():.3e} <= tolerance {tol:.3e}"
        )
    bv = q.b @ v
    correction = (bv / w) @ bv.T
    return symmetrize(q.a - correction)


def signature(m, tol: float = SIGNATURE_TOL) -> Signature:
    """Count eigenvalues by sign with a spectral-scale zero band.

    Eigenvalues within ``tol * max(1, ||m||_op)`` of zero count as zero.

    Parameters
    ----------
    m : array_like
        Symmetric matrix.
    tol : float
        Non-negative relative width of the zero band.

    Returns
    -------
    Signature
        ``(n_plus, n_minus, n_zero)`` summing to the dimension.
    """
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    arr = check_symmetric(m)
    w = np.linalg.eigvalsh(arr)
    band = tol * max(1.0, float(np.abs(w).max()))
    n_plus = int(np.count_nonzero(w > band))
    n_minus = int(np.count_nonzero(w < -band))
    return Signature(n_plus, n_minus, arr.shape[0] - n_plus - n_minus)


def iso_traceless(m) -> IsoTracelessSplit:
    """Split ``m = q I + s`` into isotropic weight and traceless part."""
    arr = check_symmetric(m)
    q = float(np.trace(arr)) / arr.shape[0]
    s = arr - q * np.eye(arr.shape[0])
    return IsoTracelessSplit(q, s)


def operator_norm(m) -> float:
    """Spectral norm (largest absolute eigenvalue) of a symmetric matrix."""
    w = np.linalg.eigvalsh(check_symmetric(m))
    return float(max(abs(w[0]), abs(w[-1])))


def separation_check(m) -> SeparationResult:
    """Test whether the isotropic part dominates the traceless remainder.

    With ``m = q I + s``, dominance ``|q| > ||s||_op`` guarantees every
    eigenvalue of ``m`` shares the sign of ``q``, so the inertia is decided
    by the isotropic weight alone.
    """
    q, s = iso_traceless(m)
    s_norm = operator_norm(s) if s.shape[0] > 0 else 0.0
    return SeparationResult(abs(q) > s_norm, q, s_norm)


def stability_margin(m) -> float:
    """Distance of the spectrum from zero: ``min_i |lambda_i(m)|``."""
    w = np.linalg.eigvalsh(check_symmetric(m))
    return float(np.abs(w).min())


def perturbation_preserves_signature(m, a) -> bool:
    """Check the spectral-perturbation bound ``||a||_op < min_i |lambda_i(m)|``.

    When this returns True, eigenvalue interlacing guarantees that
    ``signature(m + a) == signature(m)`` for the exact (tol = 0) inertia:
    each eigenvalue moves by at most ``||a||_op`` and so cannot cross zero.
    """
    m_arr = check_symmetric(m, name="m")
    a_arr = check_symmetric(a, name="a")
    if m_arr.shape != a_arr.shape:
        raise ValueError(
            f"shape mismatch: m is {m_arr.shape}, a is {a_arr.shape}"
        )
    return operator_norm(a_arr) < stability_margin(m_arr)
