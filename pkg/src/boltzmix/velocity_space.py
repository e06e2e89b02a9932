"""Discrete velocity-space infrastructure.

A truncated uniform lattice on [-R, R]^3 with midpoint quadrature
weights carries every velocity-dependent field in the package.  The
lattice is cell-centered (nodes at -R + (i + 1/2) dv), so an even node
count never places a node at v = 0.  Directions on the unit sphere are
integrated with a product Gauss-Legendre rule in cos(theta) times a
uniform rule in phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

INV_SQRT_2PI_CUBED = (2.0 * np.pi) ** (-1.5)


class GridError(ValueError):
    """Raised for invalid grid parameters or mismatched grids."""


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered velocity lattice with midpoint weights.

    Attributes
    ----------
    radius : float
        Half-width R of the cube [-R, R]^3.
    n : int
        Nodes per axis (even, >= 8).
    axis : ndarray, shape (n,)
        1-D node coordinates, shared by the three axes.
    nodes : ndarray, shape (n**3, 3)
        Full lattice in C order (axis 0 slowest).
    weights : ndarray, shape (n**3,)
        Midpoint weights, all equal to dv**3; their sum is (2R)^3.
    """

    radius: float
    n: int
    axis: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dv: float

    def __post_init__(self):
        # lazy caches; object is logically immutable
        object.__setattr__(self, "_cache", {})

    @property
    def size(self) -> int:
        return self.n**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def speed(self) -> np.ndarray:
        """|v| per node."""
        return np.sqrt(self.speed_squared())

    def speed_squared(self) -> np.ndarray:
        key = "speed2"
        if key not in self._cache:
            self._cache[key] = np.einsum("ij,ij->i", self.nodes, self.nodes)
        return self._cache[key]

    def sqrt_maxwellian(self) -> np.ndarray:
        """sqrt(M) at the nodes for the global Maxwellian M_[1,0,1]."""
        key = "sqrtM"
        if key not in self._cache:
            self._cache[key] = np.sqrt(INV_SQRT_2PI_CUBED) * np.exp(
                -self.speed_squared() / 4.0
            )
        return self._cache[key]

    def require_same(self, other: "VelocityGrid"):
        if self is other:
            return
        if self.n != other.n or self.radius != other.radius:
            raise GridError("velocity grids do not match")

    def check_field(self, values: np.ndarray):
        values = np.asarray(values)
        if values.shape[-1] != self.size:
            raise GridError(
                f"field length {values.shape[-1]} does not match grid size {self.size}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite entries")


def build_grid(radius: float, n: int) -> VelocityGrid:
    """Build the velocity lattice.

    Preconditions: ``n`` even and >= 8 (a centered lattice avoids a
    node at v = 0, which the upwind transport sweep cannot classify),
    ``radius`` >= 4 so the global Maxwellian loses less than 1e-3 mass
    to truncation.
    """
    if n < 8 or n % 2 != 0:
        raise GridError(f"points per axis must be even and >= 8, got {n}")
    if radius < 4.0:
        raise GridError(f"velocity radius must be >= 4, got {radius}")
    dv = 2.0 * radius / n
    axis = -radius + (np.arange(n) + 0.5) * dv
    ax0, ax1, ax2 = np.meshgrid(axis, axis, axis, indexing="ij")
    nodes = np.column_stack([ax0.ravel(), ax1.ravel(), ax2.ravel()])
    weights = np.full(n**3, dv**3)
    return VelocityGrid(radius=float(radius), n=int(n), axis=axis, nodes=nodes,
                        weights=weights, dv=dv)


@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature for the unit sphere: directions and weights.

    The product scheme is Gauss-Legendre in cos(theta) crossed with a
    uniform (trapezoid-exact) rule in phi; weights sum to 4*pi.
    """

    directions: np.ndarray
    weights: np.ndarray
    scheme: str = "gl"

    @property
    def size(self) -> int:
        return len(self.weights)


def build_sphere(n_theta: int = 6, n_phi: int = 12, scheme: str = "gl") -> SphereQuadrature:
    if scheme != "gl":
        raise GridError(f"unknown sphere quadrature scheme {scheme!r}")
    if n_theta < 2 or n_phi < 4:
        raise GridError("sphere quadrature needs n_theta >= 2 and n_phi >= 4")
    mu, wmu = np.polynomial.legendre.leggauss(n_theta)  # mu = cos(theta)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    wphi = 2.0 * np.pi / n_phi
    s = np.sqrt(1.0 - mu**2)
    dirs = np.empty((n_theta * n_phi, 3))
    w = np.empty(n_theta * n_phi)
    k = 0
    for i in range(n_theta):
        for j in range(n_phi):
            dirs[k] = (s[i] * np.cos(phi[j]), s[i] * np.sin(phi[j]), mu[i])
            w[k] = wmu[i] * wphi
            k += 1
    return SphereQuadrature(directions=dirs, weights=w, scheme=scheme)


def maxwellian(grid: VelocityGrid, rho: float = 1.0, u=(0.0, 0.0, 0.0),
               theta: float = 1.0) -> np.ndarray:
    """Maxwellian rho * (2 pi theta)^(-3/2) exp(-|v-u|^2 / (2 theta)) at the nodes."""
    if rho <= 0.0:
        raise ValueError(f"density must be positive, got {rho}")
    if theta <= 0.0:
        raise ValueError(f"temperature must be positive, got {theta}")
    u = np.asarray(u, dtype=float)
    d = grid.nodes - u
    return rho * (2.0 * np.pi * theta) ** (-1.5) * np.exp(
        -np.einsum("ij,ij->i", d, d) / (2.0 * theta)
    )


def inner_product(f: np.ndarray, g: np.ndarray, grid: VelocityGrid,
                  weight: str = "unit") -> float:
    """L^2_v pairing sum(f * g * omega * w); omega is 1 or the collision frequency."""
    grid.check_field(f)
    grid.check_field(g)
    if weight == "unit":
        return float(np.dot(f * grid.weights, g))
    if weight == "nu":
        return float(np.dot(f * grid.weights * collision_frequency(grid), g))
    raise ValueError(f"unknown inner-product weight {weight!r}")


def norm(f: np.ndarray, grid: VelocityGrid, weight: str = "unit") -> float:
    return float(np.sqrt(max(inner_product(f, f, grid, weight), 0.0)))


class GramProjector:
    """Orthogonal projector onto the span of a family of grid fields.

    Coefficients come from a Gram solve in the weighted inner product,
    so idempotency holds to machine precision on the discrete grid even
    where continuum orthogonality relations pick up truncation error.
    """

    def __init__(self, fields: np.ndarray, grid: VelocityGrid):
        self.grid = grid
        self.fields = np.atleast_2d(np.asarray(fields, dtype=float))
        wf = self.fields * grid.weights
        gram = wf @ self.fields.T
        self._wfields = wf
        self._gram = gram
        self._chol = np.linalg.cholesky(gram)
        self.condition_number = float(np.linalg.cond(gram))

    def coefficients(self, g: np.ndarray) -> np.ndarray:
        m = self._wfields @ np.atleast_2d(g).T
        c = np.linalg.solve(self._chol, m)
        c = np.linalg.solve(self._chol.T, c)
        return c.T.squeeze()

    def apply(self, g: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(self.coefficients(g))
        out = c @ self.fields
        return out.reshape(np.shape(g))

    def complement(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g) - self.apply(g)


def collision_frequency(grid: VelocityGrid) -> np.ndarray:
    """nu(v) = sum_w |v - v_*| M(v_*) dv_*, by lattice quadrature.

    Evaluated as an exact (zero-padded) lattice correlation of the
    |.|-kernel with the Maxwellian, so it equals the direct double sum
    up to FFT roundoff.  Cached on the grid.
    """
    key = "nu"
    cache = grid._cache
    if key not in cache:
        n = grid.n
        m3 = maxwellian(grid).reshape(grid.shape)
        offsets = np.arange(-(n - 1), n) * grid.dv
        o0, o1, o2 = np.meshgrid(offsets, offsets, offsets, indexing="ij")
        kernel = np.sqrt(o0**2 + o1**2 + o2**2)
        # (kernel * M)[i + n - 1] = sum_j |v_i - v_j| M(v_j); kernel is even
        conv = fftconvolve(kernel, m3, mode="valid")
        nu = conv.ravel() * grid.dv**3
        cache[key] = np.maximum(nu, 0.0)
    return cache[key]
