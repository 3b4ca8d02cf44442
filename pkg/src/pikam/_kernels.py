"""Compiled kernels for trig-polynomial fields and the w-flow integrators.

A field is passed around packed as four arrays::

    coeff  (T,)        float64
    powers (T, k + m)  int64    exponents on (I, z)
    wave   (T, k)      int64    Fourier indices on phi
    phase  (T,)        float64

and points are flat vectors ``x = (I_1..I_k, z_1..z_m, phi_1..phi_k)``.
Every loop here is strictly sequential so results do not depend on how
orbits are batched or scheduled.
"""

import numpy as np
import numba as nb


@nb.njit(cache=True)
def _ipow(base, p):
    r = 1.0
    for _ in range(p):
        r *= base
    return r


@nb.njit(cache=True)
def _monomial(coeff, powers, t, x, nd, skip_a, skip_b):
    # product over polynomial coordinates, skipping up to two of them
    r = coeff[t]
    for a in range(nd):
        if a == skip_a or a == skip_b:
            continue
        p = powers[t, a]
        if p:
            r *= _ipow(x[a], p)
    return r


@nb.njit(cache=True)
def _argument(wave, phase, t, x, k, nd):
    s = phase[t]
    for j in range(k):
        w = wave[t, j]
        if w:
            s += w * x[nd + j]
    return s


@nb.njit(cache=True)
def field_value(coeff, powers, wave, phase, x, k, m):
    nd = k + m
    total = 0.0
    for t in range(coeff.shape[0]):
        mono = _monomial(coeff, powers, t, x, nd, -1, -1)
        total += mono * np.cos(_argument(wave, phase, t, x, k, nd))
    return total


@nb.njit(cache=True)
def field_gradient(coeff, powers, wave, phase, x, k, m, out):
    """Overwrite ``out`` with the exact gradient of the field at ``x``."""
    nd = k + m
    for a in range(nd + k):
        out[a] = 0.0
    for t in range(coeff.shape[0]):
        has_pow = False
        for a in range(nd):
            if powers[t, a]:
                has_pow = True
                break
        has_wave = False
        for j in range(k):
            if wave[t, j]:
                has_wave = True
                break
        arg = _argument(wave, phase, t, x, k, nd)
        if has_pow:
            cs = np.cos(arg)
            for a in range(nd):
                p = powers[t, a]
                if p:
                    d = p * _ipow(x[a], p - 1) * _monomial(coeff, powers, t, x, nd, a, -1)
                    out[a] += d * cs
        if has_wave:
            sn = np.sin(arg)
            mono = _monomial(coeff, powers, t, x, nd, -1, -1)
            for j in range(k):
                w = wave[t, j]
                if w:
                    out[nd + j] -= mono * w * sn


@nb.njit(cache=True)
def field_hessian(coeff, powers, wave, phase, x, k, m, out):
    nd = k + m
    dim = nd + k
    for a in range(dim):
        for b in range(dim):
            out[a, b] = 0.0
    for t in range(coeff.shape[0]):
        arg = _argument(wave, phase, t, x, k, nd)
        cs = np.cos(arg)
        sn = np.sin(arg)
        mono = _monomial(coeff, powers, t, x, nd, -1, -1)
        for a in range(nd):
            pa = powers[t, a]
            if pa == 0:
                continue
            # d/da of the monomial, reused for the mixed (poly, angle) block
            da = pa * _ipow(x[a], pa - 1) * _monomial(coeff, powers, t, x, nd, a, -1)
            for j in range(k):
                w = wave[t, j]
                if w:
                    out[a, nd + j] -= da * w * sn
                    out[nd + j, a] -= da * w * sn
            if pa >= 2:
                out[a, a] += (pa * (pa - 1) * _ipow(x[a], pa - 2)
                              * _monomial(coeff, powers, t, x, nd, a, -1) * cs)
            for b in range(a + 1, nd):
                pb = powers[t, b]
                if pb == 0:
                    continue
                dab = (pa * pb * _ipow(x[a], pa - 1) * _ipow(x[b], pb - 1)
                       * _monomial(coeff, powers, t, x, nd, a, b) * cs)
                out[a, b] += dab
                out[b, a] += dab
        for i in range(k):
            wi = wave[t, i]
            if wi == 0:
                continue
            for j in range(k):
                wj = wave[t, j]
                if wj:
                    out[nd + i, nd + j] -= mono * wi * wj * cs


@nb.njit(cache=True)
def _record_slots(steps, record_every):
    n = steps // record_every + 1
    if steps % record_every:
        n += 1
    return n


@nb.njit(cache=True)
def splitting_run(b_coeff, b_pow, b_wave, b_phase,
                  p_coeff, p_pow, p_wave, p_phase,
                  e_coeff, e_pow, e_wave, e_phase,
                  k, m, x0, h, steps, record_every):
    """Strang splitting for H(I) + eps H1(phi): half kick, drift, half kick.

    ``p_*`` must already carry the eps scaling.  Returns the recorded step
    indices, states and energies.
    """
    nd = k + m
    dim = nd + k
    n_rec = _record_slots(steps, record_every)
    idx = np.empty(n_rec, dtype=np.int64)
    xs = np.empty((n_rec, dim))
    energy = np.empty(n_rec)
    x = x0.copy()
    g = np.empty(dim)
    idx[0] = 0
    xs[0, :] = x
    energy[0] = field_value(e_coeff, e_pow, e_wave, e_phase, x, k, m)
    r = 1
    half = 0.5 * h
    gp = np.empty(dim)
    # the closing kick of one step and the opening kick of the next see the
    # same angles, so the perturbation gradient is evaluated once per step
    field_gradient(p_coeff, p_pow, p_wave, p_phase, x, k, m, gp)
    for s in range(1, steps + 1):
        for i in range(k):
            x[i] -= half * gp[nd + i]
        field_gradient(b_coeff, b_pow, b_wave, b_phase, x, k, m, g)
        for i in range(k):
            x[nd + i] += h * g[i]
        field_gradient(p_coeff, p_pow, p_wave, p_phase, x, k, m, gp)
        for i in range(k):
            x[i] -= half * gp[nd + i]
        if s % record_every == 0 or s == steps:
            idx[r] = s
            xs[r, :] = x
            energy[r] = field_value(e_coeff, e_pow, e_wave, e_phase, x, k, m)
            r += 1
    return idx, xs, energy


@nb.njit(cache=True)
def _w_velocity(g, k, m, out):
    nd = k + m
    for i in range(k):
        out[i] = -g[nd + i]
        out[nd + i] = g[i]
    for a in range(k, nd):
        out[a] = 0.0


@nb.njit(cache=True)
def midpoint_step(e_coeff, e_pow, e_wave, e_phase, k, m, x, h, tol, max_iter):
    """One implicit-midpoint step of the w-flow, in place.

    Solves ``d = h F(x + d/2)`` for the increment ``d`` by fixed-point
    iteration, switching to Newton with the exact Hessian once the fixed
    point has used 10 iterations.  Returns False on non-convergence.
    """
    nd = k + m
    dim = nd + k
    g = np.empty(dim)
    f = np.empty(dim)
    y = np.empty(dim)
    d = np.empty(dim)
    hess = np.empty((dim, dim))
    field_gradient(e_coeff, e_pow, e_wave, e_phase, x, k, m, g)
    _w_velocity(g, k, m, f)
    for a in range(dim):
        d[a] = h * f[a]
    for it in range(max_iter):
        for a in range(dim):
            y[a] = x[a] + 0.5 * d[a]
        field_gradient(e_coeff, e_pow, e_wave, e_phase, y, k, m, g)
        _w_velocity(g, k, m, f)
        if it < 10:
            change = 0.0
            scale = 1.0
            for a in range(dim):
                nxt = h * f[a]
                change = max(change, abs(nxt - d[a]))
                scale = max(scale, abs(nxt))
                d[a] = nxt
        else:
            # residual G(d) = d - h F(x + d/2), Jacobian 1 - (h/2) Pi Hess
            field_hessian(e_coeff, e_pow, e_wave, e_phase, y, k, m, hess)
            jac = np.eye(dim)
            res = np.empty(dim)
            for a in range(dim):
                res[a] = d[a] - h * f[a]
            for i in range(k):
                for b in range(dim):
                    jac[i, b] += 0.5 * h * hess[nd + i, b]
                    jac[nd + i, b] -= 0.5 * h * hess[i, b]
            step = np.linalg.solve(jac, res)
            change = 0.0
            scale = 1.0
            for a in range(dim):
                d[a] -= step[a]
                change = max(change, abs(step[a]))
                scale = max(scale, abs(d[a]))
        if change <= tol * scale:
            for a in range(dim):
                x[a] += d[a]
            return True
    return False


@nb.njit(cache=True)
def midpoint_run(e_coeff, e_pow, e_wave, e_phase, k, m, x0, h, steps,
                 record_every, tol, max_iter):
    """Implicit midpoint for the w-flow of an arbitrary H'(I, phi).

    The last return value is the index of the step that failed to
    converge, or -1.
    """
    dim = 2 * k + m
    n_rec = _record_slots(steps, record_every)
    idx = np.empty(n_rec, dtype=np.int64)
    xs = np.empty((n_rec, dim))
    energy = np.empty(n_rec)
    x = x0.copy()
    idx[0] = 0
    xs[0, :] = x
    energy[0] = field_value(e_coeff, e_pow, e_wave, e_phase, x, k, m)
    r = 1
    for s in range(1, steps + 1):
        z_keep = x[k:k + m].copy()
        if not midpoint_step(e_coeff, e_pow, e_wave, e_phase, k, m, x, h, tol, max_iter):
            return idx[:r], xs[:r], energy[:r], s
        x[k:k + m] = z_keep
        if s % record_every == 0 or s == steps:
            idx[r] = s
            xs[r, :] = x
            energy[r] = field_value(e_coeff, e_pow, e_wave, e_phase, x, k, m)
            r += 1
    return idx, xs, energy, -1


@nb.njit(cache=True)
def correlation_slope(tau, w_re, w_im, nu):
    """``|F(nu)|^2`` and its derivative in ``nu``, ``F = sum a_j exp(-i nu tau_j)``."""
    f_re = 0.0
    f_im = 0.0
    d_re = 0.0
    d_im = 0.0
    for j in range(tau.shape[0]):
        c = np.cos(nu * tau[j])
        s = np.sin(nu * tau[j])
        re = w_re[j] * c + w_im[j] * s
        im = w_im[j] * c - w_re[j] * s
        f_re += re
        f_im += im
        d_re += tau[j] * im
        d_im -= tau[j] * re
    return f_re * f_re + f_im * f_im, 2.0 * (f_re * d_re + f_im * d_im)
