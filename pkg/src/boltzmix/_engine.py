"""Numba kernels for the collision quadrature.

All kernels share one discretization: for every output node v, sum over
partner nodes v_* and hemisphere directions sigma (the +/- sigma fold is
exact because the collision map is even in sigma), with

    v' = v - [(v - v_*) . sigma] sigma,    v'_* = v_* + [(v - v_*) . sigma] sigma.

Off-lattice values are tensor-Lagrange interpolated (order 1, 2 or 3).
A tuple whose v' or v'_* leaves the node hull by more than
``extrap_cells`` cells (per axis) is dropped atomically: its gain and
loss terms vanish together, which is what keeps the discrete collision
invariants clean.

Three evaluation modes:

* ``qfield``       -- bilinear operator on raw distribution values.
* ``gamma_amp``    -- bilinear operator on perturbation amplitudes with
                      the Maxwellian weight M(v_*) folded into the
                      quadrature (no division by sqrt(M) anywhere).
* ``assemble_lhat``-- dense matrices of the two linearized half
                      operators (own-species slot and partner slot) as
                      maps between L^2 fields.

Parallelism is over output rows only, so results are deterministic.
"""

import numpy as np
from numba import njit, prange

F64 = np.float64


@njit(cache=True, inline="always")
def _axis_weights(t, n, order, extrap, w):
    """Stencil base index and Lagrange weights along one axis.

    ``t`` is the point in grid coordinates (node i sits at t = i).
    Returns (base, ok); weights are written into w[0:order+1].
    """
    if t < -extrap or t > (n - 1) + extrap:
        return 0, False
    if order == 1:
        base = int(np.floor(t))
        if base < 0:
            base = 0
        elif base > n - 2:
            base = n - 2
        s = t - base
        w[0] = 1.0 - s
        w[1] = s
    elif order == 2:
        base = int(np.floor(t + 0.5)) - 1
        if base < 0:
            base = 0
        elif base > n - 3:
            base = n - 3
        s = t - (base + 1)
        w[0] = 0.5 * s * (s - 1.0)
        w[1] = 1.0 - s * s
        w[2] = 0.5 * s * (s + 1.0)
    else:  # order == 3
        base = int(np.floor(t)) - 1
        if base < 0:
            base = 0
        elif base > n - 4:
            base = n - 4
        s = t - (base + 1)
        w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0
        w[1] = 0.5 * (s * s - 1.0) * (s - 2.0)
        w[2] = -0.5 * s * (s + 1.0) * (s - 2.0)
        w[3] = s * (s * s - 1.0) / 6.0
    return base, True


@njit(cache=True, inline="always")
def _gather(values, n, bx, by, bz, wx, wy, wz, order):
    """Tensor-product gather-sum over one interpolation stencil."""
    acc = 0.0
    for a in range(order + 1):
        wa = wx[a]
        ia = (bx + a) * n * n
        for b in range(order + 1):
            wab = wa * wy[b]
            iab = ia + (by + b) * n
            for c in range(order + 1):
                acc += wab * wz[c] * values[iab + bz + c]
    return acc


@njit(cache=True, inline="always")
def _bpoly(coeffs, x):
    acc = 0.0
    for i in range(len(coeffs) - 1, -1, -1):
        acc = acc * x + coeffs[i]
    return acc


@njit(cache=True, parallel=True)
def qfield(f, g, axis0, inv_dv, n, sig, wsig, bcoef, gamma, amp,
           order, extrap, symmetric):
    """Bilinear collision operator on distribution values.

    Output node v gets  c * sum_{v*, sigma} w B(|d|, cos) [bracket] dv^3
    with the 4-term symmetrized bracket (c = 1/2) or the directed
    2-term bracket (c = 1).
    """
    n3 = n * n * n
    nsig = sig.shape[0]
    out = np.zeros(n3, dtype=F64)
    for iv in prange(n3):
        i0 = iv // (n * n)
        i1 = (iv // n) % n
        i2 = iv % n
        vx = axis0 + i0 / inv_dv
        vy = axis0 + i1 / inv_dv
        vz = axis0 + i2 / inv_dv
        fv = f[iv]
        gv = g[iv]
        wx1 = np.empty(4, dtype=F64)
        wy1 = np.empty(4, dtype=F64)
        wz1 = np.empty(4, dtype=F64)
        wx2 = np.empty(4, dtype=F64)
        wy2 = np.empty(4, dtype=F64)
        wz2 = np.empty(4, dtype=F64)
        acc = 0.0
        for jv in range(n3):
            j0 = jv // (n * n)
            j1 = (jv // n) % n
            j2 = jv % n
            ux = axis0 + j0 / inv_dv
            uy = axis0 + j1 / inv_dv
            uz = axis0 + j2 / inv_dv
            dx = vx - ux
            dy = vy - uy
            dz = vz - uz
            dn2 = dx * dx + dy * dy + dz * dz
            if dn2 == 0.0:
                continue
            dn = np.sqrt(dn2)
            if gamma == 1.0:
                bmag = amp * dn
            elif gamma == 0.0:
                bmag = amp
            else:
                bmag = amp * dn**gamma
            fu = f[jv]
            gu = g[jv]
            for ks in range(nsig):
                sx = sig[ks, 0]
                sy = sig[ks, 1]
                sz = sig[ks, 2]
                h = dx * sx + dy * sy + dz * sz
                px = vx - h * sx
                py = vy - h * sy
                pz = vz - h * sz
                qx = ux + h * sx
                qy = uy + h * sy
                qz = uz + h * sz
                bx1, ok = _axis_weights((px - axis0) * inv_dv, n, order, extrap, wx1)
                if not ok:
                    continue
                by1, ok = _axis_weights((py - axis0) * inv_dv, n, order, extrap, wy1)
                if not ok:
                    continue
                bz1, ok = _axis_weights((pz - axis0) * inv_dv, n, order, extrap, wz1)
                if not ok:
                    continue
                bx2, ok = _axis_weights((qx - axis0) * inv_dv, n, order, extrap, wx2)
                if not ok:
                    continue
                by2, ok = _axis_weights((qy - axis0) * inv_dv, n, order, extrap, wy2)
                if not ok:
                    continue
                bz2, ok = _axis_weights((qz - axis0) * inv_dv, n, order, extrap, wz2)
                if not ok:
                    continue
                wB = wsig[ks] * bmag * _bpoly(bcoef, h / dn)
                fp = _gather(f, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                gq = _gather(g, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                if symmetric:
                    fq = _gather(f, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                    gp = _gather(g, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                    acc += wB * (fp * gq + fq * gp - fv * gu - fu * gv)
                else:
                    acc += wB * (fp * gq - fv * gu)
        out[iv] = acc
    scale = (1.0 / inv_dv) ** 3
    if symmetric:
        scale *= 0.5
    return out * scale


@njit(cache=True, parallel=True)
def gamma_amp(p, q, mstar, axis0, inv_dv, n, sig, wsig, bcoef, gamma, amp,
              order, extrap, symmetric):
    """Bilinear operator on amplitudes with weight M(v_*).

    Returns the amplitude of Gamma-hat(p sqrt(M), q sqrt(M)); the caller
    multiplies by sqrt(M) to recover the L^2 field.
    """
    n3 = n * n * n
    nsig = sig.shape[0]
    out = np.zeros(n3, dtype=F64)
    for iv in prange(n3):
        i0 = iv // (n * n)
        i1 = (iv // n) % n
        i2 = iv % n
        vx = axis0 + i0 / inv_dv
        vy = axis0 + i1 / inv_dv
        vz = axis0 + i2 / inv_dv
        pv = p[iv]
        qv = q[iv]
        wx1 = np.empty(4, dtype=F64)
        wy1 = np.empty(4, dtype=F64)
        wz1 = np.empty(4, dtype=F64)
        wx2 = np.empty(4, dtype=F64)
        wy2 = np.empty(4, dtype=F64)
        wz2 = np.empty(4, dtype=F64)
        acc = 0.0
        for jv in range(n3):
            j0 = jv // (n * n)
            j1 = (jv // n) % n
            j2 = jv % n
            ux = axis0 + j0 / inv_dv
            uy = axis0 + j1 / inv_dv
            uz = axis0 + j2 / inv_dv
            dx = vx - ux
            dy = vy - uy
            dz = vz - uz
            dn2 = dx * dx + dy * dy + dz * dz
            if dn2 == 0.0:
                continue
            dn = np.sqrt(dn2)
            if gamma == 1.0:
                bmag = amp * dn
            elif gamma == 0.0:
                bmag = amp
            else:
                bmag = amp * dn**gamma
            bmag *= mstar[jv]
            pu = p[jv]
            qu = q[jv]
            for ks in range(nsig):
                sx = sig[ks, 0]
                sy = sig[ks, 1]
                sz = sig[ks, 2]
                h = dx * sx + dy * sy + dz * sz
                px = vx - h * sx
                py = vy - h * sy
                pz = vz - h * sz
                qx = ux + h * sx
                qy = uy + h * sy
                qz = uz + h * sz
                bx1, ok = _axis_weights((px - axis0) * inv_dv, n, order, extrap, wx1)
                if not ok:
                    continue
                by1, ok = _axis_weights((py - axis0) * inv_dv, n, order, extrap, wy1)
                if not ok:
                    continue
                bz1, ok = _axis_weights((pz - axis0) * inv_dv, n, order, extrap, wz1)
                if not ok:
                    continue
                bx2, ok = _axis_weights((qx - axis0) * inv_dv, n, order, extrap, wx2)
                if not ok:
                    continue
                by2, ok = _axis_weights((qy - axis0) * inv_dv, n, order, extrap, wy2)
                if not ok:
                    continue
                bz2, ok = _axis_weights((qz - axis0) * inv_dv, n, order, extrap, wz2)
                if not ok:
                    continue
                wB = wsig[ks] * bmag * _bpoly(bcoef, h / dn)
                pp = _gather(p, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                qq = _gather(q, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                if symmetric:
                    pq = _gather(p, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                    qp = _gather(q, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                    acc += wB * (pp * qq + pq * qp - pv * qu - pu * qv)
                else:
                    acc += wB * (pp * qq - pv * qu)
        out[iv] = acc
    scale = (1.0 / inv_dv) ** 3
    if symmetric:
        scale *= 0.5
    return out * scale


@njit(cache=True, parallel=True)
def assemble_lhat(sexp, axis0, inv_dv, n, sig, wsig, bcoef, gamma,
                  amp, order, extrap):
    """Dense matrices of the linearized half operators on L^2 fields.

    ``sexp`` holds exp(-|v|^2/4) per node.  Row v of the own-species
    half map (mself) discretizes

        g -> - sum_{v*, sigma} w B sqrt(M(v*)) [ghat(v') sqrt(M(v'*))
                                                - ghat(v) sqrt(M(v*))]

    written on L^2 fields g = ghat sqrt(M); mcross is the partner-slot
    analogue with v' and v'_* exchanged.  The Gaussian factors use the
    exact invariant |v'|^2 + |v'_*|^2 = |v|^2 + |v_*|^2.
    """
    n3 = n * n * n
    nsig = sig.shape[0]
    mself = np.zeros((n3, n3), dtype=F64)
    mcross = np.zeros((n3, n3), dtype=F64)
    for iv in prange(n3):
        i0 = iv // (n * n)
        i1 = (iv // n) % n
        i2 = iv % n
        vx = axis0 + i0 / inv_dv
        vy = axis0 + i1 / inv_dv
        vz = axis0 + i2 / inv_dv
        sv = sexp[iv]
        wx1 = np.empty(4, dtype=F64)
        wy1 = np.empty(4, dtype=F64)
        wz1 = np.empty(4, dtype=F64)
        wx2 = np.empty(4, dtype=F64)
        wy2 = np.empty(4, dtype=F64)
        wz2 = np.empty(4, dtype=F64)
        rs = mself[iv]
        rc = mcross[iv]
        for jv in range(n3):
            j0 = jv // (n * n)
            j1 = (jv // n) % n
            j2 = jv % n
            ux = axis0 + j0 / inv_dv
            uy = axis0 + j1 / inv_dv
            uz = axis0 + j2 / inv_dv
            dx = vx - ux
            dy = vy - uy
            dz = vz - uz
            dn2 = dx * dx + dy * dy + dz * dz
            if dn2 == 0.0:
                continue
            dn = np.sqrt(dn2)
            if gamma == 1.0:
                bmag = amp * dn
            elif gamma == 0.0:
                bmag = amp
            else:
                bmag = amp * dn**gamma
            su = sexp[jv]
            for ks in range(nsig):
                sx = sig[ks, 0]
                sy = sig[ks, 1]
                sz = sig[ks, 2]
                h = dx * sx + dy * sy + dz * sz
                px = vx - h * sx
                py = vy - h * sy
                pz = vz - h * sz
                qx = ux + h * sx
                qy = uy + h * sy
                qz = uz + h * sz
                bx1, ok = _axis_weights((px - axis0) * inv_dv, n, order, extrap, wx1)
                if not ok:
                    continue
                by1, ok = _axis_weights((py - axis0) * inv_dv, n, order, extrap, wy1)
                if not ok:
                    continue
                bz1, ok = _axis_weights((pz - axis0) * inv_dv, n, order, extrap, wz1)
                if not ok:
                    continue
                bx2, ok = _axis_weights((qx - axis0) * inv_dv, n, order, extrap, wx2)
                if not ok:
                    continue
                by2, ok = _axis_weights((qy - axis0) * inv_dv, n, order, extrap, wy2)
                if not ok:
                    continue
                bz2, ok = _axis_weights((qz - axis0) * inv_dv, n, order, extrap, wz2)
                if not ok:
                    continue
                wB = wsig[ks] * bmag * _bpoly(bcoef, h / dn)
                p2 = px * px + py * py + pz * pz
                sp = np.exp(-0.25 * p2)            # exp(-|v'|^2/4)
                sq = sv * su / sp                  # exp(-|v'_*|^2/4), exact identity
                # own-species slot: -wB su [ ghat(v') sq - ghat(v) su ]
                # on L^2 fields: column j gets an extra factor sv/s_j
                wgain = wB * su * sq * sv
                for a in range(order + 1):
                    wa = wgain * wx1[a]
                    ia = (bx1 + a) * n * n
                    for b in range(order + 1):
                        wab = wa * wy1[b]
                        iab = ia + (by1 + b) * n
                        for c in range(order + 1):
                            col = iab + bz1 + c
                            rs[col] -= wab * wz1[c] / sexp[col]
                rs[iv] += wB * su * su
                # partner slot: -wB su [ ghat(v'_*) sp - ghat(v_*) sv ]
                wgain = wB * su * sp * sv
                for a in range(order + 1):
                    wa = wgain * wx2[a]
                    ia = (bx2 + a) * n * n
                    for b in range(order + 1):
                        wab = wa * wy2[b]
                        iab = ia + (by2 + b) * n
                        for c in range(order + 1):
                            col = iab + bz2 + c
                            rc[col] -= wab * wz2[c] / sexp[col]
                rc[jv] += wB * sv * sv
    scale = (1.0 / inv_dv) ** 3
    # inline the (2 pi)^(-3/2) normalization of M(v_*)
    scale *= (2.0 * np.pi) ** (-1.5)
    for i in range(n3):
        for j in range(n3):
            mself[i, j] *= scale
            mcross[i, j] *= scale
    return mself, mcross


@njit(cache=True, parallel=True)
def gamma_amp_batch(pbatch, qbatch, mstar, axis0, inv_dv, n, sig, wsig,
                    bcoef, gamma, amp, order, extrap):
    """Symmetrized ``gamma_amp`` over a batch of amplitude pairs.

    pbatch, qbatch have shape (nbatch, n^3); the batch axis is
    parallelized jointly with the output rows.
    """
    nb = pbatch.shape[0]
    n3 = n * n * n
    nsig = sig.shape[0]
    out = np.zeros((nb, n3), dtype=F64)
    ntask = nb * n3
    for task in prange(ntask):
        ib = task // n3
        iv = task % n3
        p = pbatch[ib]
        q = qbatch[ib]
        i0 = iv // (n * n)
        i1 = (iv // n) % n
        i2 = iv % n
        vx = axis0 + i0 / inv_dv
        vy = axis0 + i1 / inv_dv
        vz = axis0 + i2 / inv_dv
        pv = p[iv]
        qv = q[iv]
        wx1 = np.empty(4, dtype=F64)
        wy1 = np.empty(4, dtype=F64)
        wz1 = np.empty(4, dtype=F64)
        wx2 = np.empty(4, dtype=F64)
        wy2 = np.empty(4, dtype=F64)
        wz2 = np.empty(4, dtype=F64)
        acc = 0.0
        for jv in range(n3):
            j0 = jv // (n * n)
            j1 = (jv // n) % n
            j2 = jv % n
            ux = axis0 + j0 / inv_dv
            uy = axis0 + j1 / inv_dv
            uz = axis0 + j2 / inv_dv
            dx = vx - ux
            dy = vy - uy
            dz = vz - uz
            dn2 = dx * dx + dy * dy + dz * dz
            if dn2 == 0.0:
                continue
            dn = np.sqrt(dn2)
            if gamma == 1.0:
                bmag = amp * dn
            elif gamma == 0.0:
                bmag = amp
            else:
                bmag = amp * dn**gamma
            bmag *= mstar[jv]
            pu = p[jv]
            qu = q[jv]
            for ks in range(nsig):
                sx = sig[ks, 0]
                sy = sig[ks, 1]
                sz = sig[ks, 2]
                h = dx * sx + dy * sy + dz * sz
                px = vx - h * sx
                py = vy - h * sy
                pz = vz - h * sz
                qx = ux + h * sx
                qy = uy + h * sy
                qz = uz + h * sz
                bx1, ok = _axis_weights((px - axis0) * inv_dv, n, order, extrap, wx1)
                if not ok:
                    continue
                by1, ok = _axis_weights((py - axis0) * inv_dv, n, order, extrap, wy1)
                if not ok:
                    continue
                bz1, ok = _axis_weights((pz - axis0) * inv_dv, n, order, extrap, wz1)
                if not ok:
                    continue
                bx2, ok = _axis_weights((qx - axis0) * inv_dv, n, order, extrap, wx2)
                if not ok:
                    continue
                by2, ok = _axis_weights((qy - axis0) * inv_dv, n, order, extrap, wy2)
                if not ok:
                    continue
                bz2, ok = _axis_weights((qz - axis0) * inv_dv, n, order, extrap, wz2)
                if not ok:
                    continue
                wB = wsig[ks] * bmag * _bpoly(bcoef, h / dn)
                pp = _gather(p, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                qq = _gather(q, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                pq = _gather(p, n, bx2, by2, bz2, wx2, wy2, wz2, order)
                qp = _gather(q, n, bx1, by1, bz1, wx1, wy1, wz1, order)
                acc += wB * (pp * qq + pq * qp - pv * qu - pu * qv)
        out[ib, iv] = acc
    return out * (0.5 * (1.0 / inv_dv) ** 3)
