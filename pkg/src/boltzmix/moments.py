"""Kernel bases, moment projections, and macro-micro decomposition.

Two-species fields are arrays of shape (..., 2, n^3): the last axis is
the velocity lattice, the second-to-last the species.  Leading axes
(spatial nodes, batches) broadcast through every projection.

Two nested null spaces matter.  The species-diagonal linearization
annihilates ten fields (per-species mass, momentum, energy directions);
the full mixture linearization annihilates only the six combinations
with matched velocity and temperature.  Projections onto both spans are
Gram-based, so they are exactly idempotent and self-adjoint on the
discrete grid; the continuum coefficient formulas (weights 1, 1/2, 1/3)
are also provided since the solvers' moment extraction uses them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from boltzmix.velocity_space import VelocityGrid


@dataclass
class MomentState:
    """Coefficients of the mixture-kernel projection."""

    rho1: np.ndarray
    rho2: np.ndarray
    u: np.ndarray      # (..., 3)
    theta: np.ndarray


@dataclass
class PCoefficients:
    """Coefficients of the per-species kernel projection."""

    a: np.ndarray      # (..., 2)
    b: np.ndarray      # (..., 2, 3)
    c: np.ndarray      # (..., 2)


class PairProjector:
    """Gram-based orthogonal projector onto a span of pair fields."""

    def __init__(self, fields: np.ndarray, grid: VelocityGrid):
        self.fields = np.asarray(fields, dtype=float)   # (k, 2, n^3)
        self.grid = grid
        wf = self.fields * grid.weights
        gram = np.einsum("ksv,lsv->kl", wf, self.fields)
        self.gram = gram
        self.dual = np.einsum("kl,lsv->ksv", np.linalg.inv(gram), wf)
        self.condition_number = float(np.linalg.cond(gram))

    def coefficients(self, g: np.ndarray) -> np.ndarray:
        return np.einsum("...sv,ksv->...k", g, self.dual)

    def apply(self, g: np.ndarray) -> np.ndarray:
        return np.einsum("...k,ksv->...sv", self.coefficients(g), self.fields)

    def complement(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g) - self.apply(g)


def species_kernel_basis(grid: VelocityGrid) -> np.ndarray:
    """Ten pair fields spanning the species-diagonal null space.

    Order: [mass1, mass2, mom1_x.._z, mom2_x.._z, energy1, energy2],
    i.e. ([sqrtM,0], [0,sqrtM], [v_i sqrtM,0], [0,v_i sqrtM],
    [(|v|^2/3-1)sqrtM,0], [0,(|v|^2/3-1)sqrtM]).
    """
    sm = grid.sqrt_maxwellian()
    z = np.zeros_like(sm)
    v = grid.nodes
    e = (grid.speed_squared() / 3.0 - 1.0) * sm
    fields = [
        [sm, z], [z, sm],
        [v[:, 0] * sm, z], [v[:, 1] * sm, z], [v[:, 2] * sm, z],
        [z, v[:, 0] * sm], [z, v[:, 1] * sm], [z, v[:, 2] * sm],
        [e, z], [z, e],
    ]
    return np.array(fields)


def mixture_kernel_basis(grid: VelocityGrid) -> np.ndarray:
    """Six pair fields spanning the mixture null space.

    Masses stay per-species; momentum and temperature directions are
    matched across species: the last entry is (1/2)(|v|^2-3) sqrtM in
    both components.
    """
    psi = species_kernel_basis(grid)
    phi = np.empty((6,) + psi.shape[1:])
    phi[0] = psi[0]
    phi[1] = psi[1]
    for i in range(3):
        phi[2 + i] = psi[2 + i] + psi[5 + i]
    phi[5] = 1.5 * (psi[8] + psi[9])
    return phi


_PAIR_INDEX = ((0, 1), (0, 2), (1, 2))


def seventeen_moment_basis(grid: VelocityGrid) -> np.ndarray:
    """The seventeen-moment pair basis used by the macro-micro monitors.

    Order: [m1, m2, mom1_x..z, mom2_x..z, sq_x..z (v_i^2 both species),
    cube_x..z (v_i |v|^2 both), shear_xy, shear_xz, shear_yz].
    """
    sm = grid.sqrt_maxwellian()
    z = np.zeros_like(sm)
    v = grid.nodes
    s2 = grid.speed_squared()
    fields = [[sm, z], [z, sm]]
    for i in range(3):
        fields.append([v[:, i] * sm, z])
    for i in range(3):
        fields.append([z, v[:, i] * sm])
    for i in range(3):
        q = v[:, i] ** 2 * sm
        fields.append([q, q])
    for i in range(3):
        q = v[:, i] * s2 * sm
        fields.append([q, q])
    for i, j in _PAIR_INDEX:
        q = v[:, i] * v[:, j] * sm
        fields.append([q, q])
    return np.array(fields)


class MomentMachine:
    """All projections and moment extractions for one velocity grid."""

    def __init__(self, grid: VelocityGrid):
        self.grid = grid
        self.species_basis = species_kernel_basis(grid)
        self.mixture_basis = mixture_kernel_basis(grid)
        self.basis17 = seventeen_moment_basis(grid)
        self.proj_species = PairProjector(self.species_basis, grid)
        self.proj_mixture = PairProjector(self.mixture_basis, grid)
        self.proj_17 = PairProjector(self.basis17, grid)
        sm = grid.sqrt_maxwellian()
        s2 = grid.speed_squared()
        w = grid.weights
        # moment observables against sqrt(M)
        self._obs_rho = sm * w
        self._obs_u = grid.nodes * (sm * w)[:, None]          # (n^3, 3)
        self._obs_theta = (s2 / 3.0 - 1.0) * sm * w
        self._obs_theta5 = (s2 / 5.0 - 1.0) * sm * w
        # dual functionals of the per-species kernel coefficients
        self._dual_a = (2.5 - 0.5 * s2) * sm * w
        self._dual_c = (s2 / 6.0 - 0.5) * sm * w

    # -- mixture projection (six-field kernel) ------------------------------

    def project_mixture(self, g: np.ndarray, use_gram: bool = True):
        """Project onto the mixture kernel; returns (MomentState, fluid part).

        With ``use_gram`` (default) the coefficients come from the
        discrete Gram solve so the projection is exactly idempotent;
        otherwise the continuum weights (1, 1/2, 1/3) are used.
        """
        g = np.asarray(g)
        if use_gram:
            c = self.proj_mixture.coefficients(g)
        else:
            raw = np.einsum("...sv,ksv->...k", g,
                            self.mixture_basis * self.grid.weights)
            c = raw * np.array([1.0, 1.0, 0.5, 0.5, 0.5, 1.0 / 3.0])
        recon = np.einsum("...k,ksv->...sv", c, self.mixture_basis)
        state = MomentState(rho1=c[..., 0], rho2=c[..., 1],
                            u=c[..., 2:5], theta=c[..., 5])
        return state, recon

    def project_species(self, g: np.ndarray, use_gram: bool = True):
        """Project onto the per-species kernel; returns (PCoefficients, part).

        Continuum coefficient functionals: a_l = <g_l, (5/2 - |v|^2/2) sqrtM>,
        b_lk = <g_l, v_k sqrtM>, c_l = <g_l, (|v|^2/6 - 1/2) sqrtM>, with
        reconstruction (a_l + b_l . v + c_l |v|^2) sqrtM.
        """
        g = np.asarray(g)
        if use_gram:
            c = self.proj_species.coefficients(g)
            recon = np.einsum("...k,ksv->...sv", c, self.species_basis)
            a = c[..., 0:2]
            b = np.stack([c[..., 2:5], c[..., 5:8]], axis=-2)
            # energy coefficients: basis uses (|v|^2/3 - 1) sqrtM; convert to
            # the (a, b, c)-parameterization a + b.v + c |v|^2
            e = c[..., 8:10]
            coeffs = PCoefficients(a=a - e, b=b, c=e / 3.0)
            return coeffs, recon
        a = np.einsum("...sv,v->...s", g, self._dual_a)
        b = np.einsum("...sv,vj->...sj", g, self._obs_u)
        c = np.einsum("...sv,v->...s", g, self._dual_c)
        sm = self.grid.sqrt_maxwellian()
        s2 = self.grid.speed_squared()
        recon = (a[..., None] * sm
                 + np.einsum("...sj,vj->...sv", b, self.grid.nodes) * sm
                 + c[..., None] * (s2 * sm))
        return PCoefficients(a=a, b=b, c=c), recon

    # -- seventeen-moment projection -----------------------------------------

    def project_17(self, f: np.ndarray) -> np.ndarray:
        """Least-squares coefficients of the seventeen-moment expansion."""
        return self.proj_17.coefficients(f)

    # -- macro-micro ----------------------------------------------------------

    def macro_micro_split(self, g: np.ndarray, which: str = "calL"):
        """g = fluid + micro with respect to one of the two kernels."""
        if which == "calL":
            fluid = self.proj_mixture.apply(g)
        elif which == "L":
            fluid = self.proj_species.apply(g)
        else:
            raise ValueError("which must be 'L' or 'calL'")
        return fluid, np.asarray(g) - fluid

    # -- hydrodynamic moments ---------------------------------------------------

    def extract_hydro_moments(self, g: np.ndarray):
        """Per-species (rho, u, theta) moments against sqrt(M).

        rho_l = <g_l, sqrtM>, u_l = <g_l, v sqrtM>,
        theta_l = <g_l, (|v|^2/3 - 1) sqrtM>.
        """
        g = np.asarray(g)
        rho = np.einsum("...sv,v->...s", g, self._obs_rho)
        u = np.einsum("...sv,vj->...sj", g, self._obs_u)
        theta = np.einsum("...sv,v->...s", g, self._obs_theta)
        return rho, u, theta

    def theta_observable(self, g: np.ndarray) -> np.ndarray:
        """<g_l, (|v|^2/5 - 1) sqrtM>: the moment that converges to the
        fluid temperature in the hydrodynamic limit."""
        return np.einsum("...sv,v->...s", np.asarray(g), self._obs_theta5)

    def infinitesimal_maxwellian(self, rho, u, theta) -> np.ndarray:
        """Kernel element [rho + u.v + theta (|v|^2-3)/2] sqrtM per species.

        rho, theta: (..., 2); u: (..., 2, 3).  Returns (..., 2, n^3).
        """
        sm = self.grid.sqrt_maxwellian()
        s2 = self.grid.speed_squared()
        rho = np.asarray(rho, dtype=float)
        u = np.asarray(u, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = (rho[..., None] * sm
               + np.einsum("...j,vj->...v", u, self.grid.nodes) * sm
               + theta[..., None] * (0.5 * (s2 - 3.0) * sm))
        return out
