"""Collision operators for the two-species mixture.

The quadrature family (hard sphere, Maxwellian molecule) evaluates the
bilinear operator on the velocity lattice; its linearization about the
global Maxwellian is assembled once per (grid, kernel) into dense
matrices and reused everywhere.  A BGK relaxation surrogate with the
same kernel/coercivity structure and closed-form transport coefficients
anchors the test suite.

Conventions
-----------
Fields are stored as L^2 functions of v (Gaussian-decaying, like
``poly * sqrt(M)``).  The quadrature kernels act on the perturbation
amplitude ``g / sqrt(M)`` with all Maxwellian factors evaluated
analytically inside the quadrature, so no small-denominator division of
quadrature output ever happens; conversions between the two pictures
multiply or divide by the exact nodal sqrt(M), which only rescales and
is stable.

The bilinear operator comes in two flavors.  ``symmetric`` is the
half-sum form whose two-slot version is symmetric under argument
exchange; it coincides with the classical operator on the diagonal and
backs ``gamma_hat``.  The *pair* linearization ``l_hat_pair`` keeps the
directed slots (own species against the background, background against
the partner species); that is what gives the cross-species momentum and
energy exchange its sign, a six-dimensional vector kernel, and finite
positive coupling conductivities.  On the diagonal the two flavors
agree, so ``l_hat`` is flavor-independent.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from boltzmix import _engine
from boltzmix.velocity_space import (
    GramProjector,
    GridError,
    SphereQuadrature,
    VelocityGrid,
    build_sphere,
    maxwellian,
)

_ENGINE_VERSION = 3

QUADRATURE_KINDS = ("hard_sphere", "maxwellian_molecule")
KERNEL_KINDS = QUADRATURE_KINDS + ("bgk",)


def post_collision(v, v_star, sigma):
    """Pre/post collision velocity map for equal masses.

    v' = v - [(v - v_*) . sigma] sigma and v'_* = v_* + [(v - v_*) . sigma] sigma;
    the pair conserves momentum exactly and kinetic energy to roundoff.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if abs(np.dot(sigma, sigma) - 1.0) > 1e-10:
        raise ValueError("sigma must be a unit vector")
    h = np.dot(v - v_star, sigma)
    return v - h * sigma, v_star + h * sigma


@dataclass(frozen=True)
class CollisionKernel:
    """Collision kernel description.

    For quadrature kinds, B(|d|, cos t) = amplitude * |d|**gamma * b(cos t)
    with the angular profile b given as polynomial coefficients in
    cos t (default: constant 1/(4 pi), i.e. unit angular mass).  For the
    BGK kind, ``bgk_nu`` is the relaxation rate and ``bgk_nu_exchange``
    the inter-species exchange rate (defaults to ``bgk_nu``).
    """

    kind: str = "hard_sphere"
    gamma: float = 1.0
    amplitude: float = 1.0
    b_coeffs: tuple = (1.0 / (4.0 * np.pi),)
    bgk_nu: float = 1.0
    bgk_nu_exchange: float | None = None
    conservative_fix: bool = False
    interp_order: int = 2
    extrap_cells: float = 0.5

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "hard_sphere" and self.gamma != 1.0:
            object.__setattr__(self, "gamma", 1.0)
        if self.kind == "maxwellian_molecule" and self.gamma != 0.0:
            object.__setattr__(self, "gamma", 0.0)
        if self.kind in QUADRATURE_KINDS:
            if self.gamma not in (0.0, 1.0):
                raise ValueError("quadrature kernels support gamma in {0, 1}")
            c = np.linspace(-1.0, 1.0, 101)
            if np.polynomial.polynomial.polyval(c, np.asarray(self.b_coeffs)).min() < 0:
                raise ValueError("angular profile must be non-negative on [-1, 1]")
        if self.kind == "bgk" and self.bgk_nu <= 0:
            raise ValueError("bgk relaxation rate must be positive")
        if self.interp_order not in (1, 2, 3):
            raise ValueError("interpolation order must be 1, 2 or 3")
        if self.amplitude <= 0:
            raise ValueError("kernel amplitude must be positive")

    @property
    def nu_exchange(self) -> float:
        return self.bgk_nu if self.bgk_nu_exchange is None else self.bgk_nu_exchange


def _fold_sphere(sphere: SphereQuadrature):
    """Half-sphere directions; the engine doubles via the even angular part."""
    dirs, w = sphere.directions, sphere.weights
    upper = dirs[:, 2] > 0.0
    if upper.sum() * 2 != len(w):
        # scheme without exact +/- pairing: no fold
        return dirs, w, 1.0
    return dirs[upper], w[upper], 2.0


def _fold_bcoeffs(b_coeffs, doubling):
    """Effective angular polynomial b(c) + b(-c) over the half sphere."""
    b = np.asarray(b_coeffs, dtype=float)
    if doubling == 1.0:
        return b
    out = b.copy()
    out[1::2] = 0.0
    return out * doubling


def _cache_dir():
    root = os.environ.get("BOLTZMIX_CACHE")
    if root is None:
        root = os.path.join(os.path.expanduser("~"), ".cache", "boltzmix")
    return root


class QuadratureOperator:
    """Hard-sphere / Maxwellian-molecule collision operators on one grid."""

    def __init__(self, kernel: CollisionKernel, grid: VelocityGrid,
                 sphere: SphereQuadrature | None = None):
        if kernel.kind not in QUADRATURE_KINDS:
            raise ValueError("QuadratureOperator needs a quadrature kernel kind")
        self.kernel = kernel
        self.grid = grid
        self.sphere = sphere if sphere is not None else build_sphere()
        dirs, w, doubling = _fold_sphere(self.sphere)
        self._sig = np.ascontiguousarray(dirs)
        self._wsig = np.ascontiguousarray(w)
        self._bcoef = np.ascontiguousarray(_fold_bcoeffs(kernel.b_coeffs, doubling))
        self._sqrtM = grid.sqrt_maxwellian()
        self._M = maxwellian(grid)
        self._sexp = np.exp(-grid.speed_squared() / 4.0)
        inv = self._invariant_fields()
        self._inv_proj = GramProjector(inv, grid)
        self._mats = None
        self._eig = None

    # -- invariant machinery ------------------------------------------------

    def _invariant_fields(self) -> np.ndarray:
        g = self.grid
        sm = g.sqrt_maxwellian()
        return np.stack([
            sm,
            g.nodes[:, 0] * sm,
            g.nodes[:, 1] * sm,
            g.nodes[:, 2] * sm,
            g.speed_squared() * sm,
        ])

    def conservative_project(self, out: np.ndarray, form: str = "l2") -> np.ndarray:
        """Least-squares removal of the collision-invariant moments.

        ``form='l2'`` cleans an L^2 field against {sqrt(M), v sqrt(M),
        |v|^2 sqrt(M)}; ``form='distribution'`` cleans a distribution
        field against {1, v, |v|^2} using Maxwellian-localized shift
        directions so the fix stays in the physical region.
        """
        if form == "l2":
            return self._inv_proj.complement(out)
        g = self.grid
        reps = np.stack([
            np.ones(g.size), g.nodes[:, 0], g.nodes[:, 1], g.nodes[:, 2],
            g.speed_squared(),
        ])
        shifts = reps * self._M
        moments = (reps * g.weights) @ out
        gram = (reps * g.weights) @ shifts.T
        coef = np.linalg.solve(gram, moments)
        return out - coef @ shifts

    # -- matrices -----------------------------------------------------------

    def _cache_key(self) -> str:
        k = self.kernel
        g = self.grid
        payload = (
            f"v{_ENGINE_VERSION}|{g.n}|{g.radius}|{k.kind}|{k.gamma}|{k.amplitude}|"
            f"{tuple(k.b_coeffs)}|{self.sphere.scheme}|{self.sphere.size}|"
            f"{k.interp_order}|{k.extrap_cells}|{int(k.conservative_fix)}"
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:24]

    def matrices(self):
        """(own-slot, partner-slot) halves of the linearized operator.

        Assembled once per (grid, kernel), symmetrized (each half is
        self-adjoint in the continuum), optionally cleaned against the
        collision invariants, and cached in memory and on disk.
        """
        if self._mats is not None:
            return self._mats
        path = os.path.join(_cache_dir(), f"lhat_{self._cache_key()}.npz")
        if os.path.exists(path):
            with np.load(path) as dat:
                self._mats = (dat["mself"], dat["mcross"])
            return self._mats
        g = self.grid
        k = self.kernel
        mself, mcross = _engine.assemble_lhat(
            self._sexp, g.axis[0], 1.0 / g.dv, g.n, self._sig, self._wsig,
            self._bcoef, k.gamma, k.amplitude, k.interp_order, k.extrap_cells,
        )
        mself = 0.5 * (mself + mself.T)
        mcross = 0.5 * (mcross + mcross.T)
        if k.conservative_fix:
            total = mself + mcross
            pf = self._inv_proj.fields
            wf = pf * g.weights
            # delta = total - P^perp total P^perp, split evenly across halves
            pt = pf.T @ (np.linalg.solve(self._inv_proj._gram, wf @ total))
            clean = total - pt
            clean = clean - (clean @ wf.T) @ np.linalg.solve(
                self._inv_proj._gram, pf)
            delta = 0.5 * (total - clean)
            mself = mself - delta
            mcross = mcross - delta
        self._mats = (mself, mcross)
        try:
            os.makedirs(_cache_dir(), exist_ok=True)
            np.savez(path, mself=mself, mcross=mcross)
        except OSError:
            pass
        return self._mats

    def lhat_matrix(self) -> np.ndarray:
        ms, mc = self.matrices()
        return ms + mc

    def _eigensystem(self):
        if self._eig is None:
            w, v = np.linalg.eigh(self.lhat_matrix())
            self._eig = (np.maximum(w, 0.0), v)
        return self._eig

    # -- bilinear operators ---------------------------------------------------

    def q_bilinear(self, f: np.ndarray, g: np.ndarray,
                   symmetric: bool = True) -> np.ndarray:
        """Bilinear collision operator on distribution-valued fields."""
        self.grid.check_field(f)
        self.grid.check_field(g)
        k = self.kernel
        gr = self.grid
        out = _engine.qfield(
            np.ascontiguousarray(f, dtype=float),
            np.ascontiguousarray(g, dtype=float),
            gr.axis[0], 1.0 / gr.dv, gr.n, self._sig, self._wsig, self._bcoef,
            k.gamma, k.amplitude, k.interp_order, k.extrap_cells, symmetric,
        )
        if k.conservative_fix:
            out = self.conservative_project(out, form="distribution")
        return out

    def gamma_hat(self, g: np.ndarray, h: np.ndarray,
                  symmetric: bool = True) -> np.ndarray:
        """Gamma-hat(g, h) = Q(g sqrt(M), h sqrt(M)) / sqrt(M), on L^2 fields."""
        k = self.kernel
        gr = self.grid
        amp_out = _engine.gamma_amp(
            np.ascontiguousarray(g / self._sqrtM),
            np.ascontiguousarray(h / self._sqrtM),
            self._M, gr.axis[0], 1.0 / gr.dv, gr.n, self._sig, self._wsig,
            self._bcoef, k.gamma, k.amplitude, k.interp_order, k.extrap_cells,
            symmetric,
        )
        out = amp_out * self._sqrtM
        if k.conservative_fix:
            out = self.conservative_project(out)
        return out

    def gamma_hat_batch(self, gs: np.ndarray, hs: np.ndarray) -> np.ndarray:
        """Symmetrized gamma_hat over batched field pairs (nb, n^3)."""
        k = self.kernel
        gr = self.grid
        amp_out = _engine.gamma_amp_batch(
            np.ascontiguousarray(gs / self._sqrtM),
            np.ascontiguousarray(hs / self._sqrtM),
            self._M, gr.axis[0], 1.0 / gr.dv, gr.n, self._sig, self._wsig,
            self._bcoef, k.gamma, k.amplitude, k.interp_order, k.extrap_cells,
        )
        out = amp_out * self._sqrtM
        if k.conservative_fix:
            out = np.stack([self.conservative_project(o) for o in out])
        return out

    # -- linearized operators -------------------------------------------------

    def l_hat(self, g: np.ndarray) -> np.ndarray:
        return self.lhat_matrix() @ g

    def l_hat_self(self, g: np.ndarray) -> np.ndarray:
        return self.matrices()[0] @ g

    def l_hat_cross(self, g: np.ndarray) -> np.ndarray:
        return self.matrices()[1] @ g

    def l_hat_pair(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        ms, mc = self.matrices()
        return ms @ g + mc @ h

    def implicit_solve(self, b: np.ndarray, c: float) -> np.ndarray:
        """Solve (I + c * Lhat) x = b along the last axis (c >= 0)."""
        w, v = self._eigensystem()
        coeff = (b @ v) / (1.0 + c * w)
        return coeff @ v.T

    def ker_square(self, g: np.ndarray) -> np.ndarray:
        """Pointwise amplitude square: (g / sqrt(M))^2 * sqrt(M)."""
        return g * g / self._sqrtM

    def ker_square_pair(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        return g * h / self._sqrtM

    @property
    def ker_l_projector(self) -> GramProjector:
        """Orthogonal projector onto the single-species kernel span."""
        return self._inv_proj


class BGKOperator:
    """Relaxation surrogate with the same kernel structure as l_hat.

    l_hat relaxes at rate nu toward the kernel projection; the pair
    operator exchanges the momentum and thermal-energy components of
    the two species at rate nu_exchange through the projector Pi onto
    span{v_i sqrt(M), (|v|^2 - 3) sqrt(M)}.  Closed forms: mu = kappa =
    1/nu, sigma = 2/nu_exchange, lambda = 10/(3 nu_exchange).
    """

    def __init__(self, kernel: CollisionKernel, grid: VelocityGrid,
                 sphere: SphereQuadrature | None = None):
        if kernel.kind != "bgk":
            raise ValueError("BGKOperator needs kernel kind 'bgk'")
        self.kernel = kernel
        self.grid = grid
        self.sphere = sphere if sphere is not None else build_sphere()
        self.nu = kernel.bgk_nu
        self.nu_ex = kernel.nu_exchange
        sm = grid.sqrt_maxwellian()
        v = grid.nodes
        s2 = grid.speed_squared()
        self._sqrtM = sm
        self.ker_projector = GramProjector(
            np.stack([sm, v[:, 0] * sm, v[:, 1] * sm, v[:, 2] * sm, s2 * sm]),
            grid,
        )
        self.exchange_projector = GramProjector(
            np.stack([v[:, 0] * sm, v[:, 1] * sm, v[:, 2] * sm, (s2 - 3.0) * sm]),
            grid,
        )

    def q_bilinear(self, f, g, symmetric=True):
        raise GridError("the bgk kernel has no bilinear quadrature form")

    def l_hat(self, g: np.ndarray) -> np.ndarray:
        return self.nu * self.ker_projector.complement(g)

    def l_hat_self(self, g: np.ndarray) -> np.ndarray:
        return self.l_hat(g) + 0.5 * self.nu_ex * self.exchange_projector.apply(g)

    def l_hat_cross(self, g: np.ndarray) -> np.ndarray:
        return -0.5 * self.nu_ex * self.exchange_projector.apply(g)

    def l_hat_pair(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        return self.l_hat(g) + 0.5 * self.nu_ex * self.exchange_projector.apply(g - h)

    def gamma_hat(self, g: np.ndarray, h: np.ndarray,
                  symmetric: bool = True) -> np.ndarray:
        return 0.5 * self.l_hat(self.ker_square_pair(g, h))

    def gamma_hat_batch(self, gs: np.ndarray, hs: np.ndarray) -> np.ndarray:
        prod = gs * hs / self._sqrtM
        return 0.5 * self.nu * (prod - self.ker_projector.apply(prod))

    def ker_square(self, g: np.ndarray) -> np.ndarray:
        return g * g / self._sqrtM

    def ker_square_pair(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        return g * h / self._sqrtM

    def implicit_solve(self, b: np.ndarray, c: float) -> np.ndarray:
        pb = self.ker_projector.apply(b)
        return pb + (b - pb) / (1.0 + c * self.nu)

    def conservative_project(self, out: np.ndarray, form: str = "l2") -> np.ndarray:
        if form != "l2":
            raise ValueError("bgk fields are L^2 fields")
        return self.ker_projector.complement(out)

    @property
    def ker_l_projector(self) -> GramProjector:
        return self.ker_projector


def make_operator(kernel: CollisionKernel, grid: VelocityGrid,
                  sphere: SphereQuadrature | None = None):
    if kernel.kind == "bgk":
        return BGKOperator(kernel, grid, sphere)
    return QuadratureOperator(kernel, grid, sphere)


# -- vector operators on species pairs ---------------------------------------


def vector_L(op, gpair: np.ndarray) -> np.ndarray:
    """L g = (l_hat g1, l_hat g2)."""
    return np.stack([op.l_hat(gpair[0]), op.l_hat(gpair[1])])


def vector_calL(op, gpair: np.ndarray) -> np.ndarray:
    """Full linearization including the cross-species exchange."""
    g1, g2 = gpair
    return np.stack([
        op.l_hat_pair(g1, g2) + op.l_hat(g1),
        op.l_hat_pair(g2, g1) + op.l_hat(g2),
    ])


def vector_Gamma(op, gpair: np.ndarray, hpair: np.ndarray | None = None) -> np.ndarray:
    h = gpair if hpair is None else hpair
    return np.stack([
        op.gamma_hat(gpair[0], h[0]),
        op.gamma_hat(gpair[1], h[1]),
    ])


def vector_GammaTilde(op, gpair: np.ndarray, hpair: np.ndarray | None = None) -> np.ndarray:
    h = gpair if hpair is None else hpair
    return np.stack([
        op.gamma_hat(gpair[0], h[1]),
        op.gamma_hat(gpair[1], h[0]),
    ])


# -- reference (oracle) implementations ---------------------------------------


def _axis_weights_py(t, n, order, extrap):
    w = np.zeros(order + 1)
    base, ok = 0, True
    if t < -extrap or t > (n - 1) + extrap:
        return 0, w, False
    if order == 1:
        base = min(max(int(np.floor(t)), 0), n - 2)
        s = t - base
        w[:] = (1.0 - s, s)
    elif order == 2:
        base = min(max(int(np.floor(t + 0.5)) - 1, 0), n - 3)
        s = t - (base + 1)
        w[:] = (0.5 * s * (s - 1), 1 - s * s, 0.5 * s * (s + 1))
    else:
        base = min(max(int(np.floor(t)) - 1, 0), n - 4)
        s = t - (base + 1)
        w[:] = (
            -s * (s - 1) * (s - 2) / 6.0,
            0.5 * (s * s - 1) * (s - 2),
            -0.5 * s * (s + 1) * (s - 2),
            s * (s * s - 1) / 6.0,
        )
    return base, w, ok


def _interp_py(values, grid, p, order, extrap):
    n = grid.n
    t = (np.asarray(p) - grid.axis[0]) / grid.dv
    parts = []
    for a in range(3):
        base, w, ok = _axis_weights_py(t[a], n, order, extrap)
        if not ok:
            return 0.0, False
        parts.append((base, w))
    v3 = values.reshape(grid.shape)
    acc = 0.0
    for a in range(order + 1):
        for b in range(order + 1):
            for c in range(order + 1):
                acc += (parts[0][1][a] * parts[1][1][b] * parts[2][1][c]
                        * v3[parts[0][0] + a, parts[1][0] + b, parts[2][0] + c])
    return acc, True


def q_bilinear_direct(f, g, grid: VelocityGrid, sphere: SphereQuadrature,
                      kernel: CollisionKernel, symmetric: bool = True) -> np.ndarray:
    """Direct O(N^6 Nsig) summation oracle for ``q_bilinear``.

    Same discretization, full sphere, plain Python loops.  Only viable
    on very small grids.
    """
    n3 = grid.size
    out = np.zeros(n3)
    nodes = grid.nodes
    bco = np.asarray(kernel.b_coeffs)
    for iv in range(n3):
        v = nodes[iv]
        acc = 0.0
        for jv in range(n3):
            u = nodes[jv]
            d = v - u
            dn = np.sqrt(d @ d)
            if dn == 0.0:
                continue
            bmag = kernel.amplitude * dn**kernel.gamma
            for ks in range(sphere.size):
                s = sphere.directions[ks]
                h = d @ s
                vp = v - h * s
                vq = u + h * s
                fp, ok1 = _interp_py(f, grid, vp, kernel.interp_order, kernel.extrap_cells)
                gq, ok2 = _interp_py(g, grid, vq, kernel.interp_order, kernel.extrap_cells)
                if not (ok1 and ok2):
                    continue
                wb = sphere.weights[ks] * bmag * np.polynomial.polynomial.polyval(
                    h / dn, bco)
                if symmetric:
                    fq, _ = _interp_py(f, grid, vq, kernel.interp_order, kernel.extrap_cells)
                    gp, _ = _interp_py(g, grid, vp, kernel.interp_order, kernel.extrap_cells)
                    acc += wb * (fp * gq + fq * gp - f[iv] * g[jv] - f[jv] * g[iv])
                else:
                    acc += wb * (fp * gq - f[iv] * g[jv])
        out[iv] = acc
    out *= grid.dv**3
    if symmetric:
        out *= 0.5
    return out


def lhat_pair_direct(g, h, grid: VelocityGrid, sphere: SphereQuadrature,
                     kernel: CollisionKernel) -> np.ndarray:
    """Direct-sum oracle for the amplitude-form pair linearization.

    Implements, on L^2 fields g and h with amplitudes ghat and hhat,

      -(1/sqrt(M)) [Q_dir(g sqrt(M), M) + Q_dir(M, h sqrt(M))]

    with analytic Maxwellian factors, matching the assembled matrices.
    """
    n3 = grid.size
    nodes = grid.nodes
    sexp = np.exp(-grid.speed_squared() / 4.0)
    ghat = g / grid.sqrt_maxwellian()
    hhat = h / grid.sqrt_maxwellian()
    bco = np.asarray(kernel.b_coeffs)
    out = np.zeros(n3)
    for iv in range(n3):
        v = nodes[iv]
        sv = sexp[iv]
        acc = 0.0
        for jv in range(n3):
            u = nodes[jv]
            d = v - u
            dn = np.sqrt(d @ d)
            if dn == 0.0:
                continue
            bmag = kernel.amplitude * dn**kernel.gamma
            su = sexp[jv]
            for ks in range(sphere.size):
                s = sphere.directions[ks]
                hh = d @ s
                vp = v - hh * s
                vq = u + hh * s
                gp, ok1 = _interp_py(ghat, grid, vp, kernel.interp_order,
                                     kernel.extrap_cells)
                hq, ok2 = _interp_py(hhat, grid, vq, kernel.interp_order,
                                     kernel.extrap_cells)
                if not (ok1 and ok2):
                    continue
                wb = sphere.weights[ks] * bmag * np.polynomial.polynomial.polyval(
                    hh / dn, bco)
                sp = np.exp(-0.25 * (vp @ vp))
                sq = sv * su / sp
                acc -= wb * su * (gp * sq - ghat[iv] * su)
                acc -= wb * su * (hq * sp - hhat[jv] * sv)
        out[iv] = acc
    return out * grid.dv**3 * (2.0 * np.pi) ** (-1.5) * grid.sqrt_maxwellian()
