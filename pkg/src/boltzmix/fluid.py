"""Pseudo-spectral solver for the two-fluid incompressible NSF family.

One solver covers all six limiting systems: per-species flags toggle
the advection and diffusion terms, while the inter-species velocity and
temperature relaxation (rates 1/sigma and 1/lambda) is always present.
The linear part (diffusion + coupling) is integrated exactly per
Fourier mode by exponentiating the symmetric 2x2 species-coupling
matrix; advection is explicit (integrating-factor Heun) with 2/3-rule
dealiasing; incompressibility is enforced by spectral Leray projection.

Spatial domain: the periodic torus [0, 2pi)^d with d in {1, 2}.  Fluid
velocities keep three components in either case; in 1-D the only
solenoidal content is the shear components u_y(x), u_z(x) (u_x collapses
to its mean), and in 2-D the third component rides along as an advected,
coupled, diffused scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from boltzmix.regimes import RegimeId, SpeciesFlags, classify
from boltzmix.transport import TransportCoefficients


class FluidError(RuntimeError):
    pass


def spatial_wavenumbers(dim: int, n: int):
    """Wavenumber arrays, |k|^2, inverse Laplacian, and the 2/3 mask."""
    if dim not in (1, 2):
        raise FluidError("spatial dimension must be 1 or 2")
    k1 = np.fft.fftfreq(n, d=1.0 / n)  # integer wavenumbers on [0, 2pi)
    if dim == 1:
        kvec = [k1]
        ksq = k1**2
    else:
        kx, ky = np.meshgrid(k1, k1, indexing="ij")
        kvec = [kx, ky]
        ksq = kx**2 + ky**2
    inv_ksq = np.zeros_like(ksq)
    nz = ksq > 0
    inv_ksq[nz] = 1.0 / ksq[nz]
    cut = n // 3
    mask = np.ones(ksq.shape, dtype=bool)
    for kk in kvec:
        mask &= np.abs(kk) <= cut
    return kvec, ksq, inv_ksq, mask


@dataclass
class FluidState:
    """Two-species fluid fields on the periodic grid.

    u has shape (2, 3, *spatial); theta has shape (2, *spatial).
    """

    u: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def copy(self) -> "FluidState":
        return FluidState(self.u.copy(), self.theta.copy(), self.t)

    def swapped(self) -> "FluidState":
        return FluidState(self.u[::-1].copy(), self.theta[::-1].copy(), self.t)


def default_flags() -> RegimeId:
    return classify(1.0, 1.0, 1.0)


class FluidSolver:
    """Two-fluid incompressible NSF stepper with regime flags."""

    def __init__(self, dim: int, n: int, coeffs: TransportCoefficients,
                 flags: RegimeId | None = None, cfl: float = 0.4):
        self.dim = dim
        self.n = n
        self.coeffs = coeffs
        self.flags = flags if flags is not None else default_flags()
        self.cfl = cfl
        self.kvec, self.ksq, self.inv_ksq, self.dealias = spatial_wavenumbers(dim, n)
        self.dx = 2.0 * np.pi / n
        self.shape = (n,) * dim
        self._axes = tuple(range(-dim, 0))

    # -- spectral helpers -----------------------------------------------------

    def fft(self, f):
        return np.fft.fftn(f, axes=self._axes)

    def ifft(self, fh):
        return np.real(np.fft.ifftn(fh, axes=self._axes))

    def grad_hat(self, fh):
        """Spectral gradient components of a scalar (stacked on axis 0)."""
        return np.stack([1j * k * fh for k in self.kvec])

    def div_hat(self, wh):
        """Divergence of the first ``dim`` components of a stacked field."""
        out = np.zeros(wh.shape[1:], dtype=complex)
        for a in range(self.dim):
            out += 1j * self.kvec[a] * wh[a]
        return out

    def leray_hat(self, wh):
        """Fourier-space Leray projection acting on the active components."""
        phi = -self.div_hat(wh) * self.inv_ksq   # hat of Lap^-1 div w
        out = wh.copy()
        for a in range(self.dim):
            out[a] = wh[a] - 1j * self.kvec[a] * phi
        return out

    def leray(self, w):
        """Physical-space Leray projection of a (..., 3, *spatial) field."""
        wh = self.fft(np.asarray(w, dtype=float))
        moved = np.moveaxis(wh, -self.dim - 1, 0)
        proj = self.leray_hat(moved)
        return self.ifft(np.moveaxis(proj, 0, -self.dim - 1))

    def divergence(self, u):
        uh = self.fft(u)
        moved = np.moveaxis(uh, -self.dim - 1, 0)
        return self.ifft(self.div_hat(moved))

    # -- linear propagator ----------------------------------------------------

    def _pair_factor(self, visc1, visc2, couple, dt):
        """exp(-dt D) for D = [[v1 k^2 + c, -c], [-c, v2 k^2 + c]] per mode."""
        a1 = visc1 * self.ksq + couple
        a2 = visc2 * self.ksq + couple
        b = -couple
        m = 0.5 * (a1 + a2)
        d = 0.5 * (a1 - a2)
        r = np.sqrt(d * d + b * b)
        em = np.exp(-m * dt)
        rd = r * dt
        cosh = np.cosh(rd)
        # sinh(r dt)/r with the r -> 0 limit
        small = r < 1e-14
        sinc = np.where(small, dt, np.sinh(np.where(small, 1.0, rd))
                        / np.where(small, 1.0, r))
        e11 = em * (cosh - sinc * d)
        e22 = em * (cosh + sinc * d)
        e12 = em * (-sinc * b)
        return e11, e12, e22

    def _apply_pair(self, fh, factors):
        """Apply the per-mode 2x2 propagator along the species axis (0)."""
        e11, e12, e22 = factors
        out = np.empty_like(fh)
        out[0] = e11 * fh[0] + e12 * fh[1]
        out[1] = e12 * fh[0] + e22 * fh[1]
        return out

    # -- nonlinear terms --------------------------------------------------------

    def _advection_u(self, u):
        """-(u . grad) u per species, dealiased; zero where advection is off."""
        out = np.zeros_like(u)
        for s in range(2):
            if not self.flags.species[s].advect:
                continue
            uh = self.fft(u[s])
            for c in range(3):
                acc = np.zeros(self.shape)
                for a in range(self.dim):
                    dc = self.ifft(self.dealias * 1j * self.kvec[a] * uh[c])
                    ua = self.ifft(self.dealias * uh[a])
                    acc += ua * dc
                out[s, c] = -acc
        return out

    def _advection_theta(self, u, theta):
        out = np.zeros_like(theta)
        for s in range(2):
            if not self.flags.species[s].advect:
                continue
            th = self.fft(theta[s])
            uh = self.fft(u[s])
            acc = np.zeros(self.shape)
            for a in range(self.dim):
                dth = self.ifft(self.dealias * 1j * self.kvec[a] * th)
                ua = self.ifft(self.dealias * uh[a])
                acc += ua * dth
            out[s] = -acc
        return out

    # -- stepping -----------------------------------------------------------------

    def max_speed(self, state: FluidState) -> float:
        return float(np.max(np.abs(state.u[:, : self.dim])))

    def stable_dt(self, state: FluidState) -> float:
        advecting = any(f.advect for f in self.flags.species)
        if not advecting:
            return self.dx * self.cfl  # no advective restriction; keep sane
        return self.cfl * self.dx / max(self.max_speed(state), 1e-12)

    def step(self, state: FluidState, dt: float) -> FluidState:
        """One integrating-factor Heun step of the flagged system."""
        advecting = any(f.advect for f in self.flags.species)
        if advecting and dt > 1.0001 * self.cfl * self.dx / max(
                self.max_speed(state), 1e-300):
            raise FluidError(f"dt = {dt} violates the advective CFL bound")
        mu1 = self.coeffs.mu if self.flags.species[0].diffuse else 0.0
        mu2 = self.coeffs.mu if self.flags.species[1].diffuse else 0.0
        ka1 = self.coeffs.kappa if self.flags.species[0].diffuse else 0.0
        ka2 = self.coeffs.kappa if self.flags.species[1].diffuse else 0.0
        cs = (1.0 / self.coeffs.sigma) if self.flags.coupling else 0.0
        cl = (1.0 / self.coeffs.lam) if self.flags.coupling else 0.0
        fac_u = self._pair_factor(mu1, mu2, cs, dt)
        fac_t = self._pair_factor(ka1, ka2, cl, dt)

        uh = self.fft(state.u)
        th = self.fft(state.theta)
        nu0 = self.fft(self._advection_u(state.u))
        nt0 = self.fft(self._advection_theta(state.u, state.theta))

        # predictor
        u1h = self._apply_pair(uh + dt * nu0, fac_u)
        t1h = self._apply_pair(th + dt * nt0, fac_t)
        u1h = self._project_species(u1h)
        u1 = self.ifft(u1h)
        t1 = self.ifft(t1h)

        # corrector
        nu1 = self.fft(self._advection_u(u1))
        nt1 = self.fft(self._advection_theta(u1, t1))
        unew = self._apply_pair(uh, fac_u) + 0.5 * dt * (
            self._apply_pair(nu0, fac_u) + nu1)
        tnew = self._apply_pair(th, fac_t) + 0.5 * dt * (
            self._apply_pair(nt0, fac_t) + nt1)
        unew = self._project_species(unew)

        out = FluidState(self.ifft(unew), self.ifft(tnew), state.t + dt)
        if not (np.all(np.isfinite(out.u)) and np.all(np.isfinite(out.theta))):
            raise FluidError(f"non-finite fluid state at t = {out.t}")
        return out

    def _project_species(self, uh):
        for s in range(2):
            uh[s] = self.leray_hat(uh[s])
        return uh

    def run(self, state: FluidState, t_end: float, dt: float | None = None,
            callback=None) -> FluidState:
        while state.t < t_end - 1e-12:
            h = dt if dt is not None else self.stable_dt(state)
            h = min(h, t_end - state.t)
            state = self.step(state, h)
            if callback is not None:
                callback(state)
        return state

    # -- derived fields ------------------------------------------------------------

    def pressure(self, state: FluidState) -> np.ndarray:
        """Zero-mean pressure per species from the Poisson equation.

        Lap p_l = -div[(u_l . grad) u_l + coupling]; the coupling part is
        divergence-free so only advection contributes.
        """
        adv = -self._advection_u(state.u)  # + (u . grad) u
        out = np.zeros((2,) + self.shape)
        for s in range(2):
            ah = self.fft(adv[s])
            moved = np.moveaxis(ah, -self.dim - 1, 0)
            # Lap p = -div(adv)  =>  p_hat = div_hat(adv) / |k|^2
            ph = self.div_hat(moved) * self.inv_ksq
            ph.flat[0] = 0.0
            out[s] = self.ifft(ph)
        return out

    def energy(self, state: FluidState):
        """Kinetic/thermal energies and dissipation functionals."""
        w = (2.0 * np.pi / self.n) ** self.dim
        ke = 0.5 * w * np.sum(state.u**2, axis=tuple(range(1, state.u.ndim)))
        th = w * np.sum(state.theta**2, axis=tuple(range(1, state.theta.ndim)))
        grad_sq = np.zeros(2)
        for s in range(2):
            uh = self.fft(state.u[s])
            g2 = 0.0
            for a in range(self.dim):
                g2 += np.sum(np.abs(1j * self.kvec[a] * uh) ** 2)
            grad_sq[s] = g2 * w / self.n**self.dim
        udiff = np.sqrt(w * np.sum((state.u[0] - state.u[1]) ** 2))
        tdiff = np.sqrt(w * np.sum((state.theta[0] - state.theta[1]) ** 2))
        div_max = max(np.max(np.abs(self.divergence(state.u[0]))),
                      np.max(np.abs(self.divergence(state.u[1]))))
        return {"ke": ke, "theta_sq": th, "grad_u_sq": grad_sq,
                "u_diff": udiff, "theta_diff": tdiff, "div_max": float(div_max)}


def taylor_green(dim: int, n: int, amplitude: float = 0.1,
                 species_factor: float = 1.0):
    """Divergence-free Taylor-Green style initial fields.

    Returns (u, theta) with u of shape (2, 3, *spatial).  Species 2 is
    species 1 scaled by ``species_factor`` (use -1 for anti-phase, 1 for
    identical).  In 1-D the flow is the shear (0, a sin x, 0).
    """
    x = 2.0 * np.pi * np.arange(n) / n
    u = np.zeros((2, 3) + (n,) * dim)
    theta = np.zeros((2,) + (n,) * dim)
    if dim == 1:
        u[0, 1] = amplitude * np.sin(x)
        theta[0] = amplitude * np.cos(x)
    else:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        u[0, 0] = amplitude * np.sin(xx) * np.cos(yy)
        u[0, 1] = -amplitude * np.cos(xx) * np.sin(yy)
        theta[0] = amplitude * np.cos(xx) * np.cos(yy)
    u[1] = species_factor * u[0]
    theta[1] = species_factor * theta[0]
    return u, theta
