"""Reduced-dimension internal Hamiltonians and collision-set geometry.

Three concrete models, all in units hbar = 1, e^2/(4 pi eps0) = 1, m_e = 1:

* ``coupled_harmonic``: V = k1 R^2 / 2 + k2 (r - c R)^2 / 2. Exactly solvable
  through normal modes; smooth everywhere, so the collision set is empty.
* ``soft_coulomb_diatomic``: one electronic coordinate r and one internuclear
  coordinate R with V = 1/sqrt(R^2+a^2) - 1/sqrt((r-R/2)^2+b^2)
  - 1/sqrt((r+R/2)^2+b^2). Regularized Coulomb; empty collision set by
  convention as long as a, b > 0.
* ``radial_hydrogenic``: a single radial coordinate rho > 0 with the true
  -Z/rho singularity at the electron-nucleus collision rho = 0. Fields for
  this model hold the reduced radial function u(rho) = rho * psi(rho), which
  turns the 3D radial problem into a plain 1D Dirichlet problem (u(0) = 0)
  and keeps every potential evaluation finite; ``radial_wavefunction``
  recovers psi = u / rho. The grid must not contain the point rho = 0.

The nuclear kinetic term is T_n = -(1/(2 mu)) d^2/dR^2 and the electronic one
-(1/(2 m)) d^2/dr^2; an optional mass-polarization coefficient 1/M_N adds
-(1/(2 M_N)) d^2/dr^2 for the single-electron models (the i = j term of the
cross-gradient sum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grids import (
    AxisSpec,
    Field,
    Grid,
    GridError,
    GridSpec,
    apply_kinetic,
    build_grid,
    marginal_norm,
)

__all__ = [
    "ModelError",
    "HarmonicParams",
    "SoftCoulombParams",
    "RadialParams",
    "ModelHamiltonian",
    "build_model",
    "model_grid",
    "radial_grid",
    "apply_internal_hamiltonian",
    "apply_clamped_hamiltonian",
    "CollisionMask",
    "collision_mask",
    "CuspReport",
    "cusp_report",
    "radial_wavefunction",
]


class ModelError(ValueError):
    """Invalid model parameters or model/grid mismatch."""


@dataclass(frozen=True)
class HarmonicParams:
    k1: float = 1.0
    k2: float = 1.0
    coupling: float = 1.0

    def validate(self) -> None:
        if self.k1 <= 0 or self.k2 <= 0:
            raise ModelError("harmonic spring constants must be positive")


@dataclass(frozen=True)
class SoftCoulombParams:
    softening_nuclear: float = 1.0    # a
    softening_electronic: float = 1.0  # b

    def validate(self) -> None:
        if self.softening_nuclear <= 0 or self.softening_electronic <= 0:
            raise ModelError(
                "soft-Coulomb softening lengths must be positive; "
                "a true singularity is only supported by radial_hydrogenic"
            )


@dataclass(frozen=True)
class RadialParams:
    charge: float = 1.0  # Z

    def validate(self) -> None:
        if self.charge <= 0:
            raise ModelError("charge must be positive")


ModelKind = Literal["coupled_harmonic", "soft_coulomb_diatomic", "radial_hydrogenic"]


@dataclass(frozen=True)
class ModelHamiltonian:
    kind: ModelKind
    electron_mass: float
    reduced_mass: float
    mass_polarization: float  # 1/M_N, 0 switches the term off
    params: HarmonicParams | SoftCoulombParams | RadialParams

    @property
    def is_singular(self) -> bool:
        return self.kind == "radial_hydrogenic"

    def kinetic_coefficients(self, grid: Grid) -> dict[str, float]:
        c_el = 0.5 / self.electron_mass + 0.5 * self.mass_polarization
        c_nuc = 0.5 / self.reduced_mass
        return {a.label: (c_nuc if a.is_nuclear else c_el) for a in grid.axes}

    def electronic_kinetic_coefficients(self, grid: Grid) -> dict[str, float]:
        c_el = 0.5 / self.electron_mass + 0.5 * self.mass_polarization
        coeffs = {}
        for a in grid.axes:
            if a.is_nuclear:
                raise ModelError("clamped Hamiltonian acts on electronic-only grids")
            coeffs[a.label] = c_el
        return coeffs

    def potential(self, grid: Grid) -> np.ndarray:
        """Potential on every grid point; raises if a point hits a singularity."""
        if self.kind == "coupled_harmonic":
            r, R = _r_and_R(grid)
            p: HarmonicParams = self.params  # type: ignore[assignment]
            return 0.5 * p.k1 * R**2 + 0.5 * p.k2 * (r - p.coupling * R) ** 2
        if self.kind == "soft_coulomb_diatomic":
            r, R = _r_and_R(grid)
            p: SoftCoulombParams = self.params  # type: ignore[assignment]
            a2 = p.softening_nuclear**2
            b2 = p.softening_electronic**2
            return (
                1.0 / np.sqrt(R**2 + a2)
                - 1.0 / np.sqrt((r - R / 2) ** 2 + b2)
                - 1.0 / np.sqrt((r + R / 2) ** 2 + b2)
            )
        rho = _radial_rho(grid)
        p: RadialParams = self.params  # type: ignore[assignment]
        return -p.charge / rho

    def clamped_potential(self, electronic_grid: Grid, R_value: float) -> np.ndarray:
        if self.kind == "radial_hydrogenic":
            raise ModelError("radial model has no nuclear coordinate to clamp")
        (r,) = electronic_grid.meshes()
        if self.kind == "coupled_harmonic":
            p: HarmonicParams = self.params  # type: ignore[assignment]
            return 0.5 * p.k1 * R_value**2 + 0.5 * p.k2 * (r - p.coupling * R_value) ** 2
        p = self.params  # type: ignore[assignment]
        a2 = p.softening_nuclear**2
        b2 = p.softening_electronic**2
        return (
            1.0 / np.sqrt(R_value**2 + a2)
            - 1.0 / np.sqrt((r - R_value / 2) ** 2 + b2)
            - 1.0 / np.sqrt((r + R_value / 2) ** 2 + b2)
        )


def _r_and_R(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    if len(grid.electronic_axes) != 1 or len(grid.nuclear_axes) != 1:
        raise ModelError("model expects exactly one electronic and one nuclear axis")
    meshes = grid.meshes()
    return meshes[grid.electronic_axes[0]], meshes[grid.nuclear_axes[0]]


def _radial_rho(grid: Grid) -> np.ndarray:
    if grid.ndim != 1 or grid.nuclear_axes:
        raise ModelError("radial model expects a single electronic axis")
    rho = grid.coords[0]
    if np.any(rho <= 0.0):
        raise ModelError(
            "radial grid touches the collision point rho <= 0; offset the grid "
            "so no node sits on the singularity"
        )
    return rho


def build_model(
    kind: ModelKind,
    reduced_mass: float = 1.0,
    electron_mass: float = 1.0,
    mass_polarization: float = 0.0,
    **params,
) -> ModelHamiltonian:
    if electron_mass <= 0 or reduced_mass <= 0:
        raise ModelError("masses must be positive")
    if mass_polarization < 0:
        raise ModelError("mass-polarization coefficient must be nonnegative")
    if kind == "coupled_harmonic":
        p = HarmonicParams(**params)
    elif kind == "soft_coulomb_diatomic":
        p = SoftCoulombParams(**params)
    elif kind == "radial_hydrogenic":
        p = RadialParams(**params)
    else:
        raise ModelError(f"unknown model kind {kind!r}")
    p.validate()
    return ModelHamiltonian(
        kind=kind,
        electron_mass=electron_mass,
        reduced_mass=reduced_mass,
        mass_polarization=mass_polarization,
        params=p,
    )


def model_grid(r_span: tuple[float, float, int], R_span: tuple[float, float, int]) -> Grid:
    """Two-axis grid (one electronic, one nuclear) from (lower, upper, count) spans."""
    return build_grid(
        GridSpec(
            (
                AxisSpec("r", r_span[0], r_span[1], r_span[2]),
                AxisSpec("R", R_span[0], R_span[1], R_span[2]),
            )
        )
    )


def radial_grid(extent: float, count: int) -> Grid:
    """Radial grid with nodes at i*h, i = 1..count, h = extent/count.

    The implied Dirichlet ghost node sits exactly at rho = 0, where the
    reduced radial function vanishes, so the boundary condition is exact and
    no node touches the singularity.
    """
    h = extent / count
    return build_grid(GridSpec((AxisSpec("r", h, extent, count),)))


def apply_internal_hamiltonian(model: ModelHamiltonian, u: Field) -> Field:
    """H' u = kinetic + potential, on the model's full grid."""
    V = model.potential(u.grid)
    out = apply_kinetic(u, model.kinetic_coefficients(u.grid))
    return Field(out.values + V * u.values, u.grid)


def apply_clamped_hamiltonian(model: ModelHamiltonian, R_value: float, u: Field) -> Field:
    """Clamped-nuclei Hamiltonian at parameter R: electronic kinetic + V(r; R)."""
    if model.kind == "radial_hydrogenic":
        raise ModelError("radial model has no nuclear coordinate to clamp")
    V = model.clamped_potential(u.grid, R_value)
    out = apply_kinetic(u, model.electronic_kinetic_coefficients(u.grid))
    return Field(out.values + V * u.values, u.grid)


def clamped_range_check(model: ModelHamiltonian, full_grid: Grid, R_value: float) -> None:
    i = full_grid.nuclear_axes[0]
    a = full_grid.axes[i]
    if not (a.lower <= R_value <= a.upper):
        raise ModelError(f"clamped R = {R_value} outside the grid range [{a.lower}, {a.upper}]")


@dataclass(frozen=True)
class CollisionMask:
    """Tube masks around the collision manifolds.

    ``sigma`` marks points within the tube radius of any collision,
    ``sigma_n`` the nuclear-only sub-mask (always a subset, constant along
    electronic fibers). Softened models report empty masks: with every
    singularity regularized there is no collision set to exclude.
    """

    sigma: np.ndarray
    sigma_n: np.ndarray
    tube_radius: float

    def nuclear_values(self, grid: Grid) -> np.ndarray:
        """Reduce sigma_n to the nuclear subgrid (it is fiber-constant)."""
        el = grid.electronic_axes
        if not el:
            return self.sigma_n
        return np.all(self.sigma_n | ~self.sigma_n, axis=el) & np.any(self.sigma_n, axis=el) | (
            np.all(self.sigma_n, axis=el)
        )


def collision_mask(model: ModelHamiltonian, grid: Grid, tube_radius: float) -> CollisionMask:
    if tube_radius < 0:
        raise ModelError("tube radius must be nonnegative")
    shape = grid.shape
    empty = np.zeros(shape, dtype=bool)
    if tube_radius == 0.0 or not model.is_singular:
        return CollisionMask(sigma=empty, sigma_n=empty.copy(), tube_radius=tube_radius)
    rho = _radial_rho(grid)
    sigma = np.abs(rho) < tube_radius
    # the only collision of the radial model is electron-nucleus, not nuclear-nuclear
    return CollisionMask(sigma=sigma, sigma_n=empty, tube_radius=tube_radius)


@dataclass(frozen=True)
class CuspReport:
    """Logarithmic-derivative estimate at the collision point.

    ``estimate`` is None when the wavefunction vanishes at the collision
    (node flag set); ``kato_value`` is the analytic -Z * m_e target.
    """

    estimate: float | None
    kato_value: float
    node_flag: bool
    power_fit: float


def cusp_report(psi: Field, model: ModelHamiltonian, n_points: int = 4) -> CuspReport:
    if model.kind != "radial_hydrogenic":
        raise ModelError("cusp report applies to the radial hydrogenic model")
    p: RadialParams = model.params  # type: ignore[assignment]
    kato = -p.charge * model.electron_mass
    rho = psi.grid.coords[0][:n_points]
    vals = np.real(psi.values[:n_points]).copy()
    if vals[min(2, len(vals) - 1)] < 0:
        vals = -vals
    if np.any(vals <= 0.0):
        return CuspReport(estimate=None, kato_value=kato, node_flag=True, power_fit=np.inf)
    # power fit psi ~ c rho^p over the first nodes; p near 0 means finite value,
    # p >= 1/2 signals a node at the collision
    logs = np.log(vals)
    power = float(np.polyfit(np.log(rho), logs, 1)[0])
    if power >= 0.5:
        return CuspReport(estimate=None, kato_value=kato, node_flag=True, power_fit=power)
    h = psi.grid.axes[0].spacing
    s1 = (logs[1] - logs[0]) / h
    s2 = (logs[2] - logs[1]) / h
    m1 = 0.5 * (rho[0] + rho[1])
    m2 = 0.5 * (rho[1] + rho[2])
    estimate = float(s1 - (s2 - s1) / (m2 - m1) * m1)
    return CuspReport(estimate=estimate, kato_value=kato, node_flag=False, power_fit=power)


def radial_wavefunction(model: ModelHamiltonian, u: Field) -> Field:
    """psi = u / rho for the reduced-radial representation."""
    if model.kind != "radial_hydrogenic":
        raise ModelError("reduced radial representation is specific to the radial model")
    rho = u.grid.coords[0]
    return Field(u.values / rho, u.grid)


def normalized_marginal(psi: Field) -> Field:
    """Marginal amplitude of a normalized state (convenience wrapper)."""
    return marginal_norm(psi)
