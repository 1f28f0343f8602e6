"""Ensemble statistics of flow trajectories over parameter grids.

A grid run sweeps the anisotropy amplitude ``a0`` (rows) against the
elimination strength ``zeta`` (columns), runs ``n_traj`` independent
trajectories per cell and aggregates final-state sector occupation,
first-passage times and censoring.  Cell ``(i, j)`` has flat index
``i * n_zeta + j`` and trajectory ``t`` in that cell uses the generator
seeded with ``[master_seed, cell_index, t]``; results are therefore
independent of execution order and worker count.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .contour import BoundaryCurve, find_contour
from .errors import NoValidRecords
from .flow import FlowConfig, TrajectoryRecord, _run_batch


def _check_axis_values(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name}: expected a non-empty 1-D array")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name}: values must be finite and non-negative")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name}: values must be strictly increasing")
    return arr


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Parameter grid, trajectory count and seeding for an ensemble run."""

    a0_values: np.ndarray
    zeta_values: np.ndarray
    n_traj: int
    master_seed: int
    base_config: FlowConfig = FlowConfig()

    def __post_init__(self) -> None:
        object.__setattr__(self, "a0_values", _check_axis_values(self.a0_values, "a0_values"))
        object.__setattr__(
            self, "zeta_values", _check_axis_values(self.zeta_values, "zeta_values")
        )
        if not isinstance(self.n_traj, (int, np.integer)) or self.n_traj < 1:
            raise ValueError(f"n_traj must be a positive integer, got {self.n_traj}")
        if not isinstance(self.master_seed, (int, np.integer)) or self.master_seed < 0:
            raise ValueError(
                f"master_seed must be a non-negative integer, got {self.master_seed}"
            )
        if not isinstance(self.base_config, FlowConfig):
            raise TypeError("base_config must be a FlowConfig")

    @property
    def n_cells(self) -> int:
        return self.a0_values.size * self.zeta_values.size

    def cell_config(self, cell_index: int) -> FlowConfig:
        """Flow configuration of the given flat cell index."""
        i, j = divmod(cell_index, self.zeta_values.size)
        return dataclasses.replace(
            self.base_config,
            a0=float(self.a0_values[i]),
            zeta=float(self.zeta_values[j]),
        )


@dataclasses.dataclass(eq=False)
class GridResult:
    """Aggregated statistics of a grid run.

    ``p_sector[i, j, m]`` is the fraction of valid trajectories in cell
    ``(i, j)`` whose final state has ``m`` negative directions.
    ``mean_fpt`` is NaN where every trajectory was censored.
    """

    a0_values: np.ndarray
    zeta_values: np.ndarray
    p_sector: np.ndarray
    mean_fpt: np.ndarray
    censored_fraction: np.ndarray
    n_valid: np.ndarray
    n_traj: int
    master_seed: int

    @property
    def n_sectors(self) -> int:
        return self.p_sector.shape[2]

    @property
    def d_tan(self) -> int:
        return self.n_sectors - 1


def sector_probability(records: list[TrajectoryRecord], n_minus: int) -> float:
    """Fraction of records whose final state carries ``n_minus`` negative
    directions.  Records are used as given; filter collapsed ones upstream."""
    if not records:
        raise ValueError("records must be non-empty")
    hits = sum(1 for r in records if int(r.n_minus[-1]) == n_minus)
    return hits / len(records)


def mean_first_passage(records: list[TrajectoryRecord]):
    """Mean first-passage step over uncensored records.

    Returns ``(mean, censored_fraction)``; the mean is ``None`` when every
    record is censored (fraction 1.0) or the list is empty (fraction NaN).
    """
    if not records:
        return None, float("nan")
    times = [r.first_passage for r in records if not r.censored]
    censored_fraction = 1.0 - len(times) / len(records)
    if not times:
        return None, 1.0
    return float(np.mean(times)), censored_fraction


def _run_cell(args):
    spec, cell_index = args
    config = spec.cell_config(cell_index)
    rngs = [
        np.random.default_rng([spec.master_seed, cell_index, t])
        for t in range(spec.n_traj)
    ]
    records = _run_batch(config, rngs)
    valid = [r for r in records if not r.collapsed]
    if not valid:
        i, j = divmod(cell_index, spec.zeta_values.size)
        raise NoValidRecords(
            f"cell (a0={spec.a0_values[i]}, zeta={spec.zeta_values[j]}): "
            f"all {spec.n_traj} trajectories collapsed"
        )
    p = np.array(
        [sector_probability(valid, m) for m in range(config.d_tan + 1)]
    )
    mean_fpt, censored_fraction = mean_first_passage(valid)
    return (
        cell_index,
        p,
        np.nan if mean_fpt is None else mean_fpt,
        censored_fraction,
        len(valid),
    )


def run_grid(spec: GridSpec, parallelism: int = 1) -> GridResult:
    """Run every grid cell and aggregate sector statistics.

    ``parallelism`` distributes cells over worker processes; the output is
    bitwise independent of the worker count because every trajectory owns a
    generator derived from ``[master_seed, cell_index, trajectory_index]``.
    """
    if not isinstance(parallelism, (int, np.integer)) or parallelism < 1:
        raise ValueError(f"parallelism must be a positive integer, got {parallelism}")
    n_a0, n_zeta = spec.a0_values.size, spec.zeta_values.size
    tasks = [(spec, idx) for idx in range(spec.n_cells)]
    if parallelism == 1:
        cell_outputs = [_run_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=int(parallelism)) as pool:
            cell_outputs = list(pool.map(_run_cell, tasks))

    n_sectors = spec.base_config.d_tan + 1
    p_sector = np.empty((n_a0, n_zeta, n_sectors))
    mean_fpt = np.empty((n_a0, n_zeta))
    censored = np.empty((n_a0, n_zeta))
    n_valid = np.empty((n_a0, n_zeta), dtype=int)
    for cell_index, p, fpt, cens, valid in cell_outputs:
        i, j = divmod(cell_index, n_zeta)
        p_sector[i, j] = p
        mean_fpt[i, j] = fpt
        censored[i, j] = cens
        n_valid[i, j] = valid
    return GridResult(
        a0_values=spec.a0_values.copy(),
        zeta_values=spec.zeta_values.copy(),
        p_sector=p_sector,
        mean_fpt=mean_fpt,
        censored_fraction=censored,
        n_valid=n_valid,
        n_traj=spec.n_traj,
        master_seed=int(spec.master_seed),
    )


def extract_boundary(
    result: GridResult, sector: int | None = None, level: float = 0.5
) -> BoundaryCurve:
    """Contour of a sector-occupation probability field.

    Extracts the ``p_sector == level`` curve in the ``(a0, zeta)`` plane for
    the given sector (default: the fully inverted tangential sector
    ``d_tan``).
    """
    if sector is None:
        sector = result.d_tan
    if not 0 <= sector < result.n_sectors:
        raise ValueError(f"sector must lie in [0, {result.d_tan}], got {sector}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie strictly between 0 and 1, got {level}")
    if result.a0_values.size < 2 or result.zeta_values.size < 2:
        raise ValueError("boundary extraction requires a grid of at least 2 x 2")
    return find_contour(
        result.a0_values, result.zeta_values, result.p_sector[:, :, sector], level
    )


def boundary_support(
    curve: BoundaryCurve, a0_values, zeta_values
) -> set[tuple[int, int]]:
    """Grid nodes adjacent to a boundary curve.

    Each contour point lies on a grid edge; both end nodes of that edge are
    counted as support.  Returns a set of ``(i, j)`` index pairs into
    ``(a0_values, zeta_values)``.
    """
    a0 = np.asarray(a0_values, dtype=float)
    zeta = np.asarray(zeta_values, dtype=float)
    support: set[tuple[int, int]] = set()
    for x, y in curve.points():
        support.update(
            (i, j)
            for i in _bracket_indices(a0, x)
            for j in _bracket_indices(zeta, y)
        )
    return support


def _bracket_indices(axis: np.ndarray, value: float) -> tuple[int, ...]:
    """Indices of the node(s) bracketing a coordinate on a grid axis."""
    exact = np.flatnonzero(axis == value)
    if exact.size:
        return (int(exact[0]),)
    hi = int(np.searchsorted(axis, value))
    lo = hi - 1
    out = tuple(k for k in (lo, hi) if 0 <= k < axis.size)
    return out


def default_grid_spec(master_seed: int, **overrides) -> GridSpec:
    """Reference grid: 20 x 20 cells over moderate anisotropy and
    elimination strength, 100 trajectories of 100 steps each."""
    kwargs = dict(
        a0_values=np.linspace(0.0, 1.0, 20),
        zeta_values=np.linspace(0.0, 0.3, 20),
        n_traj=100,
        master_seed=master_seed,
        base_config=FlowConfig(),
    )
    kwargs.update(overrides)
    return GridSpec(**kwargs)
