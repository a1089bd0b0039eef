"""Plane-stress cantilever plate surrogate of the wing.

The plate spans ``y`` from the clamped root (0) to the tip and the chord runs
along ``x``. An elliptic lift distribution acts in the chordwise direction on
one spanwise nodal line, so the plate bends in its own plane. All elements are
identical rectangles, which means a single element stiffness matrix scaled by
each element's damage factor assembles the whole system.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .config import PlateConfig
from .exceptions import DomainError, SolverError
from .model_library import DamageScenario, LoadCase, StrainField
from .sensor_layout import SensorLayout, installed_layout

__all__ = (
    "PlateModel",
    "calibrate_reference_weight",
    "predict_strain",
    "solve_plate",
)

logger = logging.getLogger(__name__)

_RESIDUAL_TOLERANCE = 1e-8
_GAUSS_POINTS = 1.0 / np.sqrt(3.0)
# local node order of the bilinear quad, counter-clockwise from (-1, -1)
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


def _shape_derivatives(xi: float, eta: float, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    dn_dx = _XI * (1.0 + _ETA * eta) / 4.0 * (2.0 / a)
    dn_dy = _ETA * (1.0 + _XI * xi) / 4.0 * (2.0 / b)
    return dn_dx, dn_dy


@dataclass(frozen=True)
class PlateModel:
    """Linear-elastic finite element model of the damaged plate.

    Every solve is a pure function of the scenario; unit-load solutions and gauge
    strain operators are cached and shared between threads.

    Args:
        config: Geometry, mesh, material, damage regions and loading
    """

    config: PlateConfig = field(default_factory=PlateConfig)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)
    _unit_solutions: dict[tuple[float, float], np.ndarray] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )
    _operators: dict[SensorLayout, sparse.csr_matrix] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    @property
    def element_width(self) -> float:
        return self.config.chord / self.config.n_chord

    @property
    def element_length(self) -> float:
        return self.config.span / self.config.n_span

    @property
    def n_nodes(self) -> int:
        return (self.config.n_chord + 1) * (self.config.n_span + 1)

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    def node_index(self, i_chord: int, j_span: int) -> int:
        return j_span * (self.config.n_chord + 1) + i_chord

    @cached_property
    def element_stiffness(self) -> np.ndarray:
        """8x8 stiffness of one undamaged element, dofs interleaved as (u_x, u_y) per node."""
        m = self.config.material
        d = (
            m.youngs_modulus
            / (1.0 - m.poisson_ratio**2)
            * np.array(
                [[1.0, m.poisson_ratio, 0.0], [m.poisson_ratio, 1.0, 0.0], [0.0, 0.0, (1 - m.poisson_ratio) / 2]]
            )
        )
        a, b = self.element_width, self.element_length
        ke = np.zeros((8, 8))
        for xi in (-_GAUSS_POINTS, _GAUSS_POINTS):
            for eta in (-_GAUSS_POINTS, _GAUSS_POINTS):
                dn_dx, dn_dy = _shape_derivatives(xi, eta, a, b)
                bm = np.zeros((3, 8))
                bm[0, ::2] = dn_dx
                bm[1, 1::2] = dn_dy
                bm[2, ::2] = dn_dy
                bm[2, 1::2] = dn_dx
                ke += m.thickness * bm.T @ d @ bm * (a * b / 4.0)
        return ke

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Element-to-dof map, shape (n_elements, 8), elements ordered chord-fastest."""
        nx, ny = self.config.n_chord, self.config.n_span
        ie, je = np.meshgrid(np.arange(nx), np.arange(ny))
        n0 = (je * (nx + 1) + ie).ravel()
        nodes = np.stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1], axis=1)
        conn = np.empty((nodes.shape[0], 8), dtype=np.int64)
        conn[:, ::2] = 2 * nodes
        conn[:, 1::2] = 2 * nodes + 1
        return conn

    @cached_property
    def element_centroids(self) -> np.ndarray:
        """Centroids as planform fractions (chord, span), shape (n_elements, 2)."""
        nx, ny = self.config.n_chord, self.config.n_span
        xc = (np.arange(nx) + 0.5) / nx
        yc = (np.arange(ny) + 0.5) / ny
        gx, gy = np.meshgrid(xc, yc)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    @cached_property
    def region_masks(self) -> tuple[np.ndarray, ...]:
        """One boolean element mask per damage region, by centroid."""
        cx, cy = self.element_centroids[:, 0], self.element_centroids[:, 1]
        return tuple(
            (r.chord_range[0] <= cx) & (cx <= r.chord_range[1]) & (r.span_range[0] <= cy) & (cy <= r.span_range[1])
            for r in self.config.damage_regions
        )

    @cached_property
    def free_dofs(self) -> np.ndarray:
        if not self.config.clamped_root:
            return np.arange(self.n_dofs)
        root = np.arange(self.config.n_chord + 1)
        fixed = np.concatenate([2 * root, 2 * root + 1])
        return np.setdiff1d(np.arange(self.n_dofs), fixed)

    def element_factors(self, scenario: DamageScenario) -> np.ndarray:
        if len(self.region_masks) > 2:
            raise DomainError("Damage scenarios parameterize exactly two regions")
        factors = np.ones(self.connectivity.shape[0])
        for mask, mu in zip(self.region_masks, scenario.values, strict=False):
            factors[mask] = 1.0 - mu / 100.0
        return factors

    def stiffness(self, scenario: DamageScenario) -> sparse.csr_matrix:
        """Global stiffness matrix before boundary conditions."""
        scenario.check_solvable()
        conn = self.connectivity
        rows = np.repeat(conn, 8, axis=1).ravel()
        cols = np.tile(conn, (1, 8)).ravel()
        values = (self.element_factors(scenario)[:, None, None] * self.element_stiffness).ravel()
        return sparse.coo_matrix((values, (rows, cols)), shape=(self.n_dofs, self.n_dofs)).tocsr()

    @cached_property
    def unit_load_vector(self) -> np.ndarray:
        """Nodal forces of an elliptic chordwise line load integrating to one."""
        cfg = self.config
        i_load = round(cfg.load_chord_fraction * cfg.n_chord)
        y_nodes = np.linspace(0.0, cfg.span, cfg.n_span + 1)
        points, weights = np.polynomial.legendre.leggauss(8)
        nodal = np.zeros(cfg.n_span + 1)
        for j in range(cfg.n_span):
            y0, y1 = y_nodes[j], y_nodes[j + 1]
            y = 0.5 * (y1 - y0) * points + 0.5 * (y1 + y0)
            q = np.sqrt(np.clip(1.0 - (y / cfg.span) ** 2, 0.0, None)) * weights * 0.5 * (y1 - y0)
            nodal[j] += np.sum(q * (y1 - y) / (y1 - y0))
            nodal[j + 1] += np.sum(q * (y - y0) / (y1 - y0))
        nodal /= nodal.sum()
        f = np.zeros(self.n_dofs)
        nodes = np.array([self.node_index(i_load, j) for j in range(cfg.n_span + 1)])
        f[2 * nodes] = nodal
        return f

    def load_vector(self, load: LoadCase) -> np.ndarray:
        return load.total_lift * self.unit_load_vector

    def load_case(self, load_factor: float) -> LoadCase:
        return LoadCase(load_factor=load_factor, reference_weight=self.config.reference_weight)

    def _unit_solution(self, scenario: DamageScenario) -> np.ndarray:
        key = scenario.values
        with self._lock:
            cached = self._unit_solutions.get(key)
        if cached is not None:
            return cached
        k = self.stiffness(scenario)
        free = self.free_dofs
        k_ff = k[free][:, free].tocsc()
        f_ff = self.unit_load_vector[free]
        try:
            u_ff = splu(k_ff).solve(f_ff)
        except RuntimeError as e:
            raise SolverError(f"Stiffness matrix is singular for {scenario}: {e}") from e
        residual = np.linalg.norm(k_ff @ u_ff - f_ff)
        if not np.all(np.isfinite(u_ff)) or residual > _RESIDUAL_TOLERANCE * np.linalg.norm(f_ff):
            raise SolverError(f"Plate solve for {scenario} did not converge (residual {residual:.3e})")
        u = np.zeros(self.n_dofs)
        u[free] = u_ff
        u.setflags(write=False)
        logger.debug("Solved plate for %s, max unit displacement %.3e", scenario, np.abs(u).max())
        with self._lock:
            return self._unit_solutions.setdefault(key, u)

    def solve(self, scenario: DamageScenario, load: LoadCase) -> np.ndarray:
        """Nodal displacements, shape (n_dofs,), interleaved (u_x, u_y)."""
        return load.total_lift * self._unit_solution(scenario)

    def strain_energy(self, scenario: DamageScenario, load: LoadCase) -> float:
        return 0.5 * float(self.load_vector(load) @ self.solve(scenario, load))

    def strain_operator(self, layout: SensorLayout) -> sparse.csr_matrix:
        """Sparse matrix mapping nodal displacements to spanwise strain at each gauge of the layout.

        Each row holds the four shape-function derivatives of the element under the gauge, so a
        gauge reads the same strain whichever layout it belongs to.
        """
        with self._lock:
            cached = self._operators.get(layout)
        if cached is not None:
            return cached
        cfg = self.config
        a, b = self.element_width, self.element_length
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for row, gauge in enumerate(layout):
            if not (0.0 <= gauge.x <= 1.0 and 0.0 <= gauge.y <= 1.0):
                raise DomainError(f"Gauge {gauge.id} lies outside the plate")
            x, y = gauge.x * cfg.chord, gauge.y * cfg.span
            ie = min(int(x // a), cfg.n_chord - 1)
            je = min(int(y // b), cfg.n_span - 1)
            xi = 2.0 * (x - ie * a) / a - 1.0
            eta = 2.0 * (y - je * b) / b - 1.0
            _, dn_dy = _shape_derivatives(xi, eta, a, b)
            rows += [row] * 4
            cols += self.connectivity[je * cfg.n_chord + ie, 1::2].tolist()
            vals += dn_dy.tolist()
        op = sparse.csr_matrix((vals, (rows, cols)), shape=(len(layout), self.n_dofs))
        with self._lock:
            return self._operators.setdefault(layout, op)

    def predict_strain(self, scenario: DamageScenario, load: LoadCase, layout: SensorLayout) -> StrainField:
        """Spanwise strain at every gauge, microstrain, compression positive."""
        scenario.check_solvable()
        strain = -1e6 * (self.strain_operator(layout) @ self.solve(scenario, load))
        return StrainField(
            gauge_ids=tuple(g.id for g in layout),
            positions=tuple((g.x, g.y) for g in layout),
            microstrain=strain,
        )


def solve_plate(model: PlateModel, scenario: DamageScenario, load: LoadCase) -> np.ndarray:
    """Displacement field solving ``K(mu) u = f`` with the root clamped."""
    return model.solve(scenario, load)


def predict_strain(
    model: PlateModel, scenario: DamageScenario, load: LoadCase, layout: SensorLayout
) -> StrainField:
    return model.predict_strain(scenario, load, layout)


def calibrate_reference_weight(
    model: PlateModel,
    target_microstrain: float = 1000.0,
    load_factor: float = 3.0,
    layout: SensorLayout | None = None,
    gauge_ids: Sequence[int] | None = None,
) -> float:
    """Reference weight that puts the pristine peak gauge strain at ``target_microstrain``.

    Strain is linear in the total lift, so the current reference weight is
    rescaled by the ratio of target to observed peak. A bisection on the
    weight would converge to the same value; the ratio reaches it with one
    pristine solve.
    """
    layout = layout if layout is not None else installed_layout(model.config.damage_regions)
    ids = tuple(gauge_ids) if gauge_ids is not None else layout.usable_ids
    field_ = model.predict_strain(DamageScenario(0.0, 0.0), model.load_case(load_factor), layout)
    peak = float(np.abs(field_.select(ids)).max())
    if peak == 0.0:
        raise SolverError("Pristine plate shows no strain at the calibration gauges")
    weight = model.config.reference_weight * target_microstrain / peak
    logger.info("Calibrated reference weight %.6g (peak %.1f microstrain at L=%g)", weight, peak, load_factor)
    return weight
