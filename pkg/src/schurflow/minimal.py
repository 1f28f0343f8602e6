"""Minimal coherence-sensitivity model for the elimination threshold.

A deliberately small block form isolates how retained-sector stability is
lost as the slow-fast coupling grows: the retained block is the identity,
the coupling is ``chi * b0`` and the fast block is ``g`` times the
identity.  Elimination then gives ``I - (chi**2 / g) * b0 @ b0.T``, whose
smallest eigenvalue crosses zero at ``chi = sqrt(g) / sigma_max(b0)``.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .contour import BoundaryCurve, find_contour
from .tensor import BlockQuadratic, schur_complement


@dataclasses.dataclass(frozen=True)
class MinimalModelSpec:
    """Coupling strength ``chi``, fast-sector stiffness ``g`` and the fixed
    coupling direction ``b0`` (defaults to the rectangular identity)."""

    chi: float = 0.0
    g: float = 1.0
    d_s: int = 2
    d_f: int = 2
    b0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.chi) and self.chi >= 0):
            raise ValueError(f"chi must be finite and non-negative, got {self.chi}")
        if not (np.isfinite(self.g) and self.g > 0):
            raise ValueError(f"g must be positive, got {self.g}")
        for name in ("d_s", "d_f"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.b0 is not None:
            b0 = np.asarray(self.b0, dtype=float)
            if b0.shape != (self.d_s, self.d_f):
                raise ValueError(
                    f"b0: expected shape {(self.d_s, self.d_f)}, got {b0.shape}"
                )
            if not np.all(np.isfinite(b0)):
                raise ValueError("b0: entries must be finite")
            if np.linalg.norm(b0) == 0.0:
                raise ValueError("b0 must be non-zero")
            object.__setattr__(self, "b0", b0)

    def coupling(self) -> np.ndarray:
        return np.eye(self.d_s, self.d_f) if self.b0 is None else self.b0.copy()


def build_blocks(spec: MinimalModelSpec) -> BlockQuadratic:
    """Assemble the block form ``[[I, chi b0], [chi b0.T, g I]]``."""
    return BlockQuadratic(
        a=np.eye(spec.d_s),
        b=spec.chi * spec.coupling(),
        c=spec.g * np.eye(spec.d_f),
    )


def b_eff_final(spec: MinimalModelSpec) -> float:
    """Smallest eigenvalue of the eliminated retained-sector tensor.

    Positive means the retained sector survives elimination; the zero
    crossing marks the sensitivity threshold.
    """
    q_eff = schur_complement(build_blocks(spec))
    return float(np.linalg.eigvalsh(q_eff)[0])


@dataclasses.dataclass(eq=False)
class ScanResult:
    """Threshold scan over a ``(chi, g)`` grid."""

    chi_values: np.ndarray
    g_values: np.ndarray
    b_eff: np.ndarray
    contour: BoundaryCurve


def scan(chi_values, g_values, template: MinimalModelSpec | None = None) -> ScanResult:
    """Evaluate ``b_eff_final`` on a grid and trace its zero contour.

    ``template`` fixes everything except ``chi`` and ``g``, which are
    overridden cell by cell.
    """
    chi = np.asarray(chi_values, dtype=float)
    g = np.asarray(g_values, dtype=float)
    if template is None:
        template = MinimalModelSpec()
    b_eff = np.empty((chi.size, g.size))
    for i, chi_i in enumerate(chi):
        for j, g_j in enumerate(g):
            b_eff[i, j] = b_eff_final(
                dataclasses.replace(template, chi=float(chi_i), g=float(g_j))
            )
    contour = find_contour(chi, g, b_eff, 0.0)
    return ScanResult(chi_values=chi, g_values=g, b_eff=b_eff, contour=contour)
