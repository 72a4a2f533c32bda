"""Tensor-product grids, quadrature, finite differences and Sobolev diagnostics.

Everything downstream works on `Field` objects: plain numpy arrays tied to a
`Grid`. Grids are tensor products of labelled 1D axes ('r...' electronic,
'R...' nuclear) with trapezoidal quadrature weights. Derivatives are
second-order central differences with Dirichlet-zero ghost values outside the
grid, which makes the kinetic operator exactly symmetric under the trapezoidal
inner product (the two discretizations are matched on purpose).

Reductions use numpy's deterministic pairwise summation, so repeated runs on
the same machine reproduce norms bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "GridError",
    "AxisSpec",
    "GridSpec",
    "Grid",
    "Field",
    "build_grid",
    "inner_product",
    "norm",
    "fiber_inner_product",
    "fiber_norm",
    "marginal_norm",
    "expand_nuclear",
    "apply_kinetic",
    "adjointness_residual",
    "has_boundary_support",
    "second_difference",
    "central_difference",
    "boundary_layer_mask",
    "SobolevEntry",
    "SobolevReport",
    "sobolev_report",
]


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


@dataclass(frozen=True)
class AxisSpec:
    """One axis of a tensor grid. `label` starts with 'r' (electronic) or 'R' (nuclear)."""

    label: str
    lower: float
    upper: float
    count: int

    def validate(self) -> None:
        if not (self.label.startswith("r") or self.label.startswith("R")):
            raise GridError(f"axis label {self.label!r} must start with 'r' or 'R'")
        if self.count < 3:
            raise GridError(f"axis {self.label!r}: need at least 3 points, got {self.count}")
        if not self.upper > self.lower:
            raise GridError(f"axis {self.label!r}: upper {self.upper} must exceed lower {self.lower}")

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.count - 1)

    @property
    def is_nuclear(self) -> bool:
        return self.label.startswith("R")


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[AxisSpec, ...]

    def validate(self) -> None:
        if not self.axes:
            raise GridError("grid needs at least one axis")
        labels = [a.label for a in self.axes]
        if len(set(labels)) != len(labels):
            raise GridError(f"duplicate axis labels: {labels}")
        for a in self.axes:
            a.validate()


def _trapezoid_weights(axis: AxisSpec) -> np.ndarray:
    w = np.full(axis.count, axis.spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid with per-axis coordinates and trapezoidal weights."""

    spec: GridSpec
    coords: tuple[np.ndarray, ...]
    weights_1d: tuple[np.ndarray, ...]

    @property
    def axes(self) -> tuple[AxisSpec, ...]:
        return self.spec.axes

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(a.spacing for a in self.axes)

    @property
    def weight(self) -> np.ndarray:
        """Full tensor weight array (same shape as fields)."""
        w = self.weights_1d[0]
        for wi in self.weights_1d[1:]:
            w = np.multiply.outer(w, wi)
        return w

    @property
    def nuclear_axes(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.axes) if a.is_nuclear)

    @property
    def electronic_axes(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.axes) if not a.is_nuclear)

    def axis_index(self, label: str) -> int:
        for i, a in enumerate(self.axes):
            if a.label == label:
                return i
        raise GridError(f"no axis labelled {label!r}")

    def nuclear_subgrid(self) -> "Grid":
        idx = self.nuclear_axes
        if not idx:
            raise GridError("grid has no nuclear axes")
        return build_grid(GridSpec(tuple(self.axes[i] for i in idx)))

    def meshes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords, indexing="ij"))

    def same_as(self, other: "Grid") -> bool:
        return self.spec == other.spec

    def __eq__(self, other: object) -> bool:  # identity by spec; coords derive from it
        return isinstance(other, Grid) and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(self.spec)


def build_grid(spec: GridSpec) -> Grid:
    """Build a grid from its spec. Weights reproduce the domain volume to ~1e-15."""
    spec.validate()
    coords = tuple(np.linspace(a.lower, a.upper, a.count) for a in spec.axes)
    weights = tuple(_trapezoid_weights(a) for a in spec.axes)
    return Grid(spec=spec, coords=coords, weights_1d=weights)


@dataclass
class Field:
    """Array of values over a Grid. Values must be finite everywhere."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")

    def copy_with(self, values: np.ndarray) -> "Field":
        return Field(values=values, grid=self.grid)

    def __add__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.values + other.values, self.grid)

    def __sub__(self, other: "Field") -> "Field":
        _require_same_grid(self, other)
        return Field(self.values - other.values, self.grid)

    def __mul__(self, scalar: complex) -> "Field":
        return Field(self.values * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(-self.values, self.grid)


def _require_same_grid(u: Field, v: Field) -> None:
    if not u.grid.same_as(v.grid):
        raise GridError("fields live on different grids")


def require_nuclear(f: Field, what: str = "field") -> None:
    if f.grid.electronic_axes:
        raise GridError(f"{what} must live on a nuclear-only grid")


def inner_product(u: Field, v: Field) -> complex:
    """Quadrature-weighted <u, v>, conjugate-linear in the first argument."""
    _require_same_grid(u, v)
    val = np.sum(np.conj(u.values) * v.values * u.grid.weight)
    return complex(val) if np.iscomplexobj(u.values) or np.iscomplexobj(v.values) else float(val)


def norm(u: Field) -> float:
    return float(np.sqrt(np.sum(np.abs(u.values) ** 2 * u.grid.weight).real))


def _electronic_weight(grid: Grid) -> np.ndarray:
    """Weight array over electronic axes only, broadcastable to the full shape."""
    shape = [1] * grid.ndim
    w = np.ones(1)
    out = np.ones([1] * grid.ndim)
    for i in grid.electronic_axes:
        shape_i = [1] * grid.ndim
        shape_i[i] = grid.shape[i]
        out = out * grid.weights_1d[i].reshape(shape_i)
    return out


def fiber_inner_product(u: Field, v: Field) -> Field:
    """<u, v>_r per nuclear point: integrate over electronic axes only."""
    _require_same_grid(u, v)
    grid = u.grid
    el = grid.electronic_axes
    if not el:
        raise GridError("grid has no electronic axes to integrate out")
    vals = np.sum(np.conj(u.values) * v.values * _electronic_weight(grid), axis=el)
    return Field(vals, grid.nuclear_subgrid())


def fiber_norm(u: Field) -> Field:
    """||u||_r per nuclear point (real, nonnegative)."""
    grid = u.grid
    el = grid.electronic_axes
    if not el:
        raise GridError("grid has no electronic axes to integrate out")
    vals = np.sqrt(np.sum(np.abs(u.values) ** 2 * _electronic_weight(grid), axis=el).real)
    return Field(vals, grid.nuclear_subgrid())


def marginal_norm(psi: Field) -> Field:
    """Nuclear marginal amplitude n(R) = (integral over r of |psi|^2)^(1/2).

    Requires both electronic and nuclear axes on the grid.
    """
    if not psi.grid.nuclear_axes:
        raise GridError("marginal requires nuclear axes")
    return fiber_norm(psi)


def expand_nuclear(f: Field, full_grid: Grid) -> np.ndarray:
    """Broadcast a nuclear-grid field over the full grid shape."""
    require_nuclear(f)
    nuc = full_grid.nuclear_axes
    if tuple(full_grid.axes[i] for i in nuc) != f.grid.axes:
        raise GridError("nuclear field does not match the full grid's nuclear axes")
    shape = [1] * full_grid.ndim
    for k, i in enumerate(nuc):
        shape[i] = f.grid.shape[k]
    return f.values.reshape(shape)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _shift(values: np.ndarray, axis: int, step: int) -> np.ndarray:
    """Shift along an axis filling with Dirichlet-zero ghosts."""
    out = np.zeros_like(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if step > 0:
        src[axis] = slice(step, None)
        dst[axis] = slice(None, -step)
    else:
        src[axis] = slice(None, step)
        dst[axis] = slice(-step, None)
    out[tuple(dst)] = values[tuple(src)]
    return out


def second_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shift(values, axis, +1) - 2.0 * values + _shift(values, axis, -1)) / (h * h)


def central_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (_shift(values, axis, +1) - _shift(values, axis, -1)) / (2.0 * h)


def apply_kinetic(
    u: Field,
    axis_coefficients: dict[str, float],
    cross_coefficients: dict[tuple[str, str], float] | None = None,
) -> Field:
    """Apply T u = -sum_a c_a d^2u/da^2 - sum_{a!=b} c_ab d^2u/(da db).

    `axis_coefficients` maps axis labels to c_a (e.g. 1/(2m)); every grid axis
    must be covered. Cross terms use central first differences on each axis,
    which keeps the operator symmetric (each D_a is skew-adjoint under the
    matched trapezoidal product).
    """
    grid = u.grid
    labels = {a.label for a in grid.axes}
    if set(axis_coefficients) != labels:
        raise GridError(
            f"kinetic coefficients {sorted(axis_coefficients)} do not match grid axes {sorted(labels)}"
        )
    out = np.zeros_like(u.values)
    for label, c in axis_coefficients.items():
        if c == 0.0:
            continue
        i = grid.axis_index(label)
        out -= c * second_difference(u.values, i, grid.axes[i].spacing)
    if cross_coefficients:
        for (la, lb), c in cross_coefficients.items():
            if c == 0.0:
                continue
            if la == lb:
                raise GridError("cross coefficient on identical axes; fold it into axis_coefficients")
            i, j = grid.axis_index(la), grid.axis_index(lb)
            di = central_difference(u.values, i, grid.axes[i].spacing)
            out -= c * central_difference(di, j, grid.axes[j].spacing)
    return Field(out, grid)


def boundary_layer_mask(grid: Grid, layers: int = 1) -> np.ndarray:
    """Boolean array, True on points within `layers` of any grid edge."""
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.ndim):
        sl = [slice(None)] * grid.ndim
        sl[axis] = slice(None, layers)
        mask[tuple(sl)] = True
        sl[axis] = slice(-layers, None)
        mask[tuple(sl)] = True
    return mask


def has_boundary_support(f: Field, layers: int = 1, tol: float = 0.0) -> bool:
    edge = boundary_layer_mask(f.grid, layers)
    return bool(np.any(np.abs(f.values[edge]) > tol))


def adjointness_residual(
    u: Field,
    h: Field,
    axis_coefficients: dict[str, float] | None = None,
) -> float:
    """|<T u, h> - <u, T h>| for the kinetic operator T.

    Discrete stand-in for the defining identity of distributional derivatives:
    with h vanishing on the boundary layer the value sits at round-off; if h
    leaks onto the boundary the ghost-value truncation shows up here.
    """
    _require_same_grid(u, h)
    if axis_coefficients is None:
        axis_coefficients = {a.label: 1.0 for a in u.grid.axes}
    tu = apply_kinetic(u, axis_coefficients)
    th = apply_kinetic(h, axis_coefficients)
    return abs(inner_product(tu, h) - inner_product(u, th))


# ---------------------------------------------------------------------------
# Sobolev refinement diagnostics
# ---------------------------------------------------------------------------

DIVERGENCE_SLOPE = 0.1       # log(norm) vs log(1/h) slope above which we call divergence
CONVERGENCE_RELCHANGE = 1e-2  # successive relative change below which we call convergence


@dataclass(frozen=True)
class SobolevEntry:
    spacing: float
    l2: float
    h1: float
    h2: float


@dataclass(frozen=True)
class SobolevReport:
    """Norm ladder across grid refinements plus per-norm verdicts.

    Verdicts: 'diverging' if the log-log slope over the last two levels
    exceeds DIVERGENCE_SLOPE, 'converging' if the final relative change is
    below CONVERGENCE_RELCHANGE, else 'inconclusive'.
    """

    entries: tuple[SobolevEntry, ...]
    verdicts: dict[str, str]

    def norms(self, which: str) -> np.ndarray:
        return np.array([getattr(e, which) for e in self.entries])


def _verdict(values: np.ndarray, spacings: np.ndarray) -> str:
    a, b = values[-2], values[-1]
    if a == 0.0 and b == 0.0:
        return "converging"
    slope = (np.log(b) - np.log(a)) / (np.log(1.0 / spacings[-1]) - np.log(1.0 / spacings[-2]))
    if slope > DIVERGENCE_SLOPE:
        return "diverging"
    if abs(b - a) < CONVERGENCE_RELCHANGE * max(abs(a), abs(b)):
        return "converging"
    return "inconclusive"


def _field_norms(f: Field, weight: np.ndarray | None, window: np.ndarray | None) -> tuple[float, float, float]:
    grid = f.grid
    w = grid.weight if weight is None else grid.weight * weight
    if window is not None:
        w = np.where(window, w, 0.0)
    d1 = [central_difference(f.values, i, grid.axes[i].spacing) for i in range(grid.ndim)]
    d2 = [second_difference(f.values, i, grid.axes[i].spacing) for i in range(grid.ndim)]
    l2 = np.sum(np.abs(f.values) ** 2 * w).real
    h1 = sum(np.sum(np.abs(g) ** 2 * w).real for g in d1)
    h2 = sum(np.sum(np.abs(g) ** 2 * w).real for g in d2)
    return float(np.sqrt(l2)), float(np.sqrt(h1)), float(np.sqrt(h2))


def sobolev_report(
    family: Sequence[Field],
    weight: Callable[[Grid], np.ndarray] | None = None,
    window: Callable[[Grid], np.ndarray] | None = None,
) -> SobolevReport:
    """Norm ladder for a refinement family of the same analytic profile.

    `family` must hold at least three fields ordered by decreasing spacing.
    `weight` (optional) maps a grid to an extra quadrature weight, e.g. a
    radial volume factor; `window` restricts norms to a bounded subdomain.
    """
    if len(family) < 3:
        raise GridError("sobolev_report needs at least 3 refinement levels")
    spacings = [max(f.grid.spacings) for f in family]
    if not all(a > b for a, b in zip(spacings, spacings[1:])):
        raise GridError("refinement levels must have strictly decreasing spacing")
    entries = []
    for f in family:
        wgt = weight(f.grid) if weight is not None else None
        win = window(f.grid) if window is not None else None
        l2, h1, h2 = _field_norms(f, wgt, win)
        entries.append(SobolevEntry(spacing=max(f.grid.spacings), l2=l2, h1=h1, h2=h2))
    hs = np.array([e.spacing for e in entries])
    verdicts = {
        which: _verdict(np.array([getattr(e, which) for e in entries]), hs)
        for which in ("l2", "h1", "h2")
    }
    return SobolevReport(entries=tuple(entries), verdicts=verdicts)
