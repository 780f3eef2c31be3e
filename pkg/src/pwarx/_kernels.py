"""Compiled inner loops of the iterative regression solvers.

The vectors involved are tiny (at most a few dozen entries), so per-call
numpy overhead dominates; these loops are compiled with numba when it is
available and run as plain Python otherwise.
"""
import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def quad(H, c, bb, x):
    d = x.shape[0]
    f = bb
    for i in range(d):
        hx = 0.0
        for j in range(d):
            hx += H[i, j] * x[j]
        f += x[i] * hx - 2.0 * c[i] * x[i]
    return f


@njit(cache=True)
def norm_inf(x):
    m = 0.0
    for i in range(x.shape[0]):
        a = abs(x[i])
        if a > m:
            m = a
    return m


@njit(cache=True)
def prox_linf_inplace(v, tau, out):
    """out <- argmin_x 0.5||x - v||^2 + tau ||x||_inf (Moreau decomposition)."""
    d = v.shape[0]
    if tau <= 0.0:
        for i in range(d):
            out[i] = v[i]
        return
    total = 0.0
    for i in range(d):
        total += abs(v[i])
    if total <= tau:
        for i in range(d):
            out[i] = 0.0
        return
    s = np.sort(np.abs(v))[::-1]
    css = 0.0
    shift = 0.0
    for k in range(d):
        css += s[k]
        if (s[k] * (k + 1.0) - css) + tau > 0.0:
            shift = (css - tau) / (k + 1.0)
    # v - proj_l1(v, tau) clips every entry to [-shift, shift]
    for i in range(d):
        a = v[i]
        if a > shift:
            out[i] = shift
        elif a < -shift:
            out[i] = -shift
        else:
            out[i] = a


@njit(cache=True)
def fista_linf(H, c, bb, nu, L, modulus, x0, tol, xtol, max_iters, slack):
    d = x0.shape[0]
    x = x0.copy()
    y = x0.copy()
    z = np.empty(d)
    w = np.empty(d)
    fx = quad(H, c, bb, x) + nu * norm_inf(x)
    hist = np.empty(max_iters + 1)
    hist[0] = fx
    nh = 1
    t = 1.0
    step = 1.0 / L
    just_restarted = False
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        for i in range(d):
            g = 0.0
            for j in range(d):
                g += H[i, j] * y[j]
            w[i] = y[i] - step * 2.0 * (g - c[i])
        prox_linf_inplace(w, nu * step, z)
        fz = quad(H, c, bb, z) + nu * norm_inf(z)
        if fz > fx + slack:
            if just_restarted:
                converged = True
                break
            for i in range(d):
                y[i] = x[i]
            t = 1.0
            just_restarted = True
            continue
        just_restarted = False
        dec = fx - fz
        # subgradient residual L (y - z) + 2 H (z - y)
        r2 = 0.0
        for i in range(d):
            g = 0.0
            for j in range(d):
                g += H[i, j] * (z[j] - y[j])
            r = L * (y[i] - z[i]) + 2.0 * g
            r2 += r * r
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        for i in range(d):
            y[i] = z[i] + beta * (z[i] - x[i])
            x[i] = z[i]
        fx = fz
        t = t_next
        hist[nh] = fx
        nh += 1
        if stop(dec, fx, np.sqrt(r2), modulus, x, tol, xtol):
            converged = True
            break
    return x, fx, it, converged, hist[:nh]


@njit(cache=True)
def stop(dec, f, resid, modulus, x, tol, xtol):
    if dec > tol * abs(f):
        return False
    if modulus <= 0.0:
        return True
    return resid / modulus <= xtol * max(1.0, norm_inf(x))


@njit(cache=True)
def cd_elastic_net(H, c, bb, nu, modulus, x0, tol, xtol, max_iters):
    d = x0.shape[0]
    x = x0.copy()
    half_nu = 0.5 * nu
    f = quad(H, c, bb, x) + nu * np.sum(np.abs(x))
    hist = np.empty(max_iters + 1)
    hist[0] = f
    nh = 1
    converged = False
    sweep = 0
    while sweep < max_iters:
        sweep += 1
        for i in range(d):
            hii = H[i, i]
            if hii <= 0.0:
                x[i] = 0.0
                continue
            r = c[i]
            for j in range(d):
                if j != i:
                    r -= H[i, j] * x[j]
            if r > half_nu:
                x[i] = (r - half_nu) / hii
            elif r < -half_nu:
                x[i] = (r + half_nu) / hii
            else:
                x[i] = 0.0
        f_new = quad(H, c, bb, x) + nu * np.sum(np.abs(x))
        hist[nh] = f_new
        nh += 1
        dec = f - f_new
        f = f_new
        # minimal-norm subgradient
        r2 = 0.0
        for i in range(d):
            g = 0.0
            for j in range(d):
                g += H[i, j] * x[j]
            g = 2.0 * (g - c[i])
            if x[i] > 0.0:
                r = g + nu
            elif x[i] < 0.0:
                r = g - nu
            else:
                r = max(abs(g) - nu, 0.0)
            r2 += r * r
        if stop(dec, f, np.sqrt(r2), modulus, x, tol, xtol):
            converged = True
            break
    return x, f, sweep, converged, hist[:nh]
