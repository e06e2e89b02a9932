"""Transport coefficients of the two-fluid limit.

The viscosity and heat conductivity come from inverting the linearized
operator on the orthogonal complement of its kernel:

    A_i = (1/2)(|v|^2 - 5) v_i sqrt(M),
    B_ij = (v_i v_j - |v|^2 delta_ij / 3) sqrt(M),

solve  Lhat Ahat = A  and  Lhat Bhat = B  on Ker^perp, then

    kappa = (2/5) <Ahat_1, A_1>,    mu = <Bhat_12, B_12>,

with the other components serving as isotropy cross-checks.  The
inter-species coupling conductivities are the momentum and thermal
exchange rates of the pair linearization: with e_i = v_i sqrt(M) and
q = (|v|^2 - 3)/2 sqrt(M),

    1/sigma  = <l_hat_pair(e_1, 0), e_1>,
    1/lambda = (2/5) <l_hat_pair(q, 0), (|v|^2 - 5)/2 sqrt(M)>,

which are exactly the coefficients multiplying (u_l - u_n) and the
(5/2)(theta_l - theta_n) pair in the moment equations (the own-slot and
partner-slot contributions are equal and opposite, so either slot
determines the coupling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from boltzmix.velocity_space import VelocityGrid, inner_product, norm


class SolverError(RuntimeError):
    """Conjugate-direction iteration failed to reach tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def ab_fields(grid: VelocityGrid):
    """The viscous-flux generators (A, B).

    Returns A with shape (3, n^3) and B with shape (6, n^3) ordered
    [(0,1), (0,2), (1,2), (0,0), (1,1), (2,2)]; the diagonal entries
    are trace-free pointwise.
    """
    sm = grid.sqrt_maxwellian()
    v = grid.nodes
    s2 = grid.speed_squared()
    A = np.stack([0.5 * (s2 - 5.0) * v[:, i] * sm for i in range(3)])
    pairs = [(0, 1), (0, 2), (1, 2)]
    B = [v[:, i] * v[:, j] * sm for i, j in pairs]
    B += [(v[:, i] * v[:, i] - s2 / 3.0) * sm for i in range(3)]
    return A, np.stack(B)


B_INDEX = ((0, 1), (0, 2), (1, 2), (0, 0), (1, 1), (2, 2))


def solve_lhat(op, y: np.ndarray, tol: float = 1e-8, max_iter: int = 500,
               warn=None) -> np.ndarray:
    """Solve Lhat x = y on Ker^perp by deflated conjugate gradients.

    The right-hand side is projected onto Ker^perp first (a warning
    callback fires if it had a kernel component); every iterate is
    re-projected so roundoff cannot drift into the null space.
    """
    grid = op.grid
    proj = op.ker_l_projector
    y = np.asarray(y, dtype=float)
    ny = norm(y, grid)
    if ny == 0.0:
        return np.zeros_like(y)
    ycl = proj.complement(y)
    if warn is not None and norm(y - ycl, grid) > 1e-8 * ny:
        warn("right-hand side had a kernel component; projected away")
    y = ycl
    ny = norm(y, grid)
    if ny == 0.0:
        return np.zeros_like(y)
    x = np.zeros_like(y)
    r = y.copy()
    p = r.copy()
    rs = inner_product(r, r, grid)
    for _ in range(max_iter):
        ap = proj.complement(op.l_hat(p))
        denom = inner_product(p, ap, grid)
        if denom <= 0.0:
            raise SolverError("conjugate direction lost positivity "
                              f"(p.Ap = {denom:.3e})", residual=np.sqrt(rs) / ny)
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        x = proj.complement(x)
        r = proj.complement(r)
        rs_new = inner_product(r, r, grid)
        if np.sqrt(rs_new) <= tol * ny:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise SolverError(
        f"no convergence after {max_iter} iterations "
        f"(relative residual {np.sqrt(rs) / ny:.3e})",
        residual=np.sqrt(rs) / ny)


@dataclass
class TransportCoefficients:
    """Dimensionless transport coefficients of the limit system."""

    mu: float
    kappa: float
    sigma: float
    lam: float

    def __post_init__(self):
        for name in ("mu", "kappa", "sigma", "lam"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise SolverError(f"transport coefficient {name} = {v} "
                                  "is not finite and positive")


@dataclass
class TransportReport:
    coeffs: TransportCoefficients
    kappa_components: np.ndarray
    mu_components: np.ndarray
    kappa_spread: float
    mu_spread: float
    solve_residuals: dict
    sigma_antisymmetry: float
    sigma_components: np.ndarray
    lambda_value: float


def _spread(vals: np.ndarray) -> float:
    m = np.mean(vals)
    return float((np.max(vals) - np.min(vals)) / abs(m)) if m != 0 else np.inf


def compute_mu_kappa(op, tol: float = 1e-8, max_iter: int = 500):
    """Viscosity and heat conductivity via <Bhat, B> and (2/5)<Ahat, A>.

    Isotropy diagnostics: the three diagonal estimates of kappa and the
    component estimates of mu implied by the isotropic tensor pairing
    <Bhat_ij, B_kl> = mu (d_ik d_jl + d_il d_jk - (2/3) d_ij d_kl).
    """
    grid = op.grid
    A, B = ab_fields(grid)
    residuals = {}
    kap = np.empty(3)
    for i in range(3):
        ahat = solve_lhat(op, A[i], tol=tol, max_iter=max_iter)
        res = norm(op.l_hat(ahat) - op.ker_l_projector.complement(A[i]), grid)
        residuals[f"A{i}"] = res / max(norm(A[i], grid), 1e-300)
        kap[i] = 0.4 * inner_product(ahat, A[i], grid)
    mu_est = []
    bhats = []
    for k in range(6):
        bhat = solve_lhat(op, B[k], tol=tol, max_iter=max_iter)
        bhats.append(bhat)
        res = norm(op.l_hat(bhat) - op.ker_l_projector.complement(B[k]), grid)
        residuals[f"B{B_INDEX[k]}"] = res / max(norm(B[k], grid), 1e-300)
    for k in range(3):          # off-diagonal pairs: <Bhat_ij, B_ij> = mu
        mu_est.append(inner_product(bhats[k], B[k], grid))
    for k in range(3, 6):       # diagonal pairs: <Bhat_ii, B_ii> = (4/3) mu
        mu_est.append(0.75 * inner_product(bhats[k], B[k], grid))
    mu_est = np.asarray(mu_est)
    return (float(np.mean(mu_est)), float(np.mean(kap)), mu_est, kap,
            residuals)


def compute_sigma_lambda(op):
    """Inter-species coupling conductivities from the pair linearization."""
    grid = op.grid
    sm = grid.sqrt_maxwellian()
    zero = np.zeros(grid.size)
    inv_sigma = np.empty(3)
    anti = 0.0
    for i in range(3):
        e = grid.nodes[:, i] * sm
        own = inner_product(op.l_hat_pair(e, zero), e, grid)
        partner = inner_product(op.l_hat_pair(zero, e), e, grid)
        inv_sigma[i] = own
        anti = max(anti, abs(own + partner) / max(abs(own), 1e-300))
    q = 0.5 * (grid.speed_squared() - 3.0) * sm
    qt = 0.5 * (grid.speed_squared() - 5.0) * sm
    inv_lambda = 0.4 * inner_product(op.l_hat_pair(q, zero), qt, grid)
    return inv_sigma, float(inv_lambda), float(anti)


def compute_transport(op, tol: float = 1e-8, max_iter: int = 500) -> TransportReport:
    """Full transport table {mu, kappa, sigma, lambda} with diagnostics."""
    mu, kappa, mu_est, kap_est, residuals = compute_mu_kappa(
        op, tol=tol, max_iter=max_iter)
    inv_sigma, inv_lambda, anti = compute_sigma_lambda(op)
    sigma = 1.0 / float(np.mean(inv_sigma))
    lam = 1.0 / inv_lambda if inv_lambda != 0 else np.inf
    coeffs = TransportCoefficients(mu=mu, kappa=kappa, sigma=sigma, lam=lam)
    return TransportReport(
        coeffs=coeffs,
        kappa_components=kap_est,
        mu_components=mu_est,
        kappa_spread=_spread(kap_est),
        mu_spread=_spread(mu_est),
        solve_residuals=residuals,
        sigma_antisymmetry=anti,
        sigma_components=1.0 / inv_sigma,
        lambda_value=lam,
    )
