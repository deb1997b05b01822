"""Compiled per-trial loop for the conditional-ML Monte Carlo.

Mirrors ``simulation.trial_batch`` with ``decoder="conditional"``: same
uniform layout, same inverse-CDF normals, same slicer and the same
first-minimum tie rule. Candidate distances are evaluated through the
expansion ``||y||^2 - 2 q.s + s.G.s`` (exact up to rounding, and valid
because the sliced block of ``G`` is diagonal); the winner's metric is then
recomputed directly. Weight matrices are passed in sparse form
(``nz_t, nz_a, nz_v, nz_count`` per symbol). Real-orthogonality of the
sliced columns is not re-checked here; the caller verifies it once from
the weight matrices.
"""

import math

import numpy as np
from numba import njit, vectorize


@njit(cache=True, error_model="numpy")
def _ppf(u):
    # Wichura AS241 (PPND16); q = u - 1/2 shifted half an ulp so u = 0 maps
    # to a finite value and 0.5 - |q| is exact in the tails.
    q = u - 0.5 + 2.0 ** -54
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e+3 * r
                     + 3.3430575583588128105e+4) * r
                    + 6.7265770927008700853e+4) * r
                   + 4.5921953931549871457e+4) * r
                  + 1.3731693765509461125e+4) * r
                 + 1.9715909503065514427e+3) * r
                + 1.3314166789178437745e+2) * r
               + 3.3871328727963666080e+0) * q
        den = (((((((5.2264952788528545610e+3 * r
                     + 2.8729085735721942674e+4) * r
                    + 3.9307895800092710610e+4) * r
                   + 2.1213794301586595867e+4) * r
                  + 5.3941960214247511077e+3) * r
                 + 6.8718700749205790830e+2) * r
                + 4.2313330701600911252e+1) * r
               + 1.0)
        return num / den
    r = math.sqrt(-math.log(0.5 - abs(q)))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r
                     + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r
                   + 1.27045825245236838258e+0) * r
                  + 3.64784832476320460504e+0) * r
                 + 5.76949722146069140550e+0) * r
                + 4.63033784615654529590e+0) * r
               + 1.42343711074968357734e+0)
        den = (((((((1.05075007164441684324e-9 * r
                     + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r
                   + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r
                 + 1.67638483018380384940e+0) * r
                + 2.05319162663775882187e+0) * r
               + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r
                     + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r
                   + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r
                 + 1.78482653991729133580e+0) * r
                + 5.46378491116411436990e+0) * r
               + 6.65790464350110377720e+0)
        den = (((((((2.04426310338993978564e-15 * r
                     + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r
                   + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r
                 + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r
               + 1.0)
    x = num / den
    return -x if q < 0.0 else x


@vectorize(["float64(float64)"], cache=True)
def std_normal(u):
    """Standard normal quantile of ``u + 2**-54`` for ``u`` in [0, 1)."""
    return _ppf(u)


def sparse_betas(betas, tol=1e-15):
    nsym = betas.shape[0]
    width = max(int(np.sum(np.abs(b) > tol)) for b in betas)
    nz_t = np.zeros((nsym, width), np.int64)
    nz_a = np.zeros((nsym, width), np.int64)
    nz_v = np.zeros((nsym, width), np.complex128)
    count = np.zeros(nsym, np.int64)
    for k, b in enumerate(betas):
        tt, aa = np.nonzero(np.abs(b) > tol)
        count[k] = len(tt)
        nz_t[k, :len(tt)] = tt
        nz_a[k, :len(tt)] = aa
        nz_v[k, :len(tt)] = b[tt, aa]
    return nz_t, nz_a, nz_v, count


@njit(cache=True, error_model="numpy")
def conditional_trials(u, nz_t, nz_a, nz_v, nz_count, t, nt, pam, cand,
                       ortho, cond, nr, n0):
    n_trials = u.shape[0]
    nsym = nz_t.shape[0]
    n_o = ortho.shape[0]
    n_c = cond.shape[0]
    nh = nt * nr
    nw = t * nr
    n = t * nr
    side = pam.shape[0]
    lim = float(side - 1)
    noise_scale = math.sqrt(n0 / 2.0)
    h_scale = math.sqrt(0.5)

    s_out = np.empty((n_trials, nsym))
    shat_out = np.empty((n_trials, nsym))
    metric = np.empty(n_trials)

    g = np.empty(2 * (nh + nw))
    h = np.empty((nt, nr), np.complex128)
    y = np.empty(n, np.complex128)
    hc = np.empty((nsym, n), np.complex128)
    q_o = np.empty(n_o)
    d_o = np.empty(n_o)
    g_oc = np.empty((n_o, n_c))
    q_c = np.empty(n_c)
    g_cc = np.empty((n_c, n_c))
    xo = np.empty(n_o)
    best_xo = np.empty(n_o)

    for b in range(n_trials):
        for p in range(2 * (nh + nw)):
            g[p] = _ppf(u[b, p])
        norm = 0.0
        for a in range(nt):
            for i in range(nr):
                re = h_scale * g[a * nr + i]
                im = h_scale * g[nh + a * nr + i]
                h[a, i] = complex(re, im)
                norm += re * re + im * im

        off = 2 * (nh + nw)
        for k in range(nsym):
            j = int(u[b, off + k] * side)
            if j > side - 1:
                j = side - 1
            s_out[b, k] = pam[j]

        # hc[k] = vec(beta_k H); r = sum_k hc[k] s_k + w
        for k in range(nsym):
            for m in range(n):
                hc[k, m] = 0j
            for e in range(nz_count[k]):
                tt = nz_t[k, e]
                a = nz_a[k, e]
                v = nz_v[k, e]
                for i in range(nr):
                    hc[k, i * t + tt] += v * h[a, i]
        for i in range(nr):
            for tt in range(t):
                y[i * t + tt] = complex(noise_scale * g[2 * nh + i * t + tt],
                                        noise_scale * g[2 * nh + nw + i * t + tt])
        for k in range(nsym):
            sk = s_out[b, k]
            if sk != 0.0:
                for m in range(n):
                    y[m] += hc[k, m] * sk

        # Matched-filter outputs and the Gram entries the candidates need.
        yy = 0.0
        for m in range(n):
            yy += y[m].real * y[m].real + y[m].imag * y[m].imag
        for p in range(n_o):
            col = hc[ortho[p]]
            acc = 0.0
            nrm = 0.0
            for m in range(n):
                acc += col[m].real * y[m].real + col[m].imag * y[m].imag
                nrm += col[m].real * col[m].real + col[m].imag * col[m].imag
            q_o[p] = acc
            d_o[p] = nrm
            for j in range(n_c):
                other = hc[cond[j]]
                acc = 0.0
                for m in range(n):
                    acc += (col[m].real * other[m].real
                            + col[m].imag * other[m].imag)
                g_oc[p, j] = acc
        for j in range(n_c):
            col = hc[cond[j]]
            acc = 0.0
            for m in range(n):
                acc += col[m].real * y[m].real + col[m].imag * y[m].imag
            q_c[j] = acc
            for l in range(n_c):
                other = hc[cond[l]]
                acc = 0.0
                for m in range(n):
                    acc += (col[m].real * other[m].real
                            + col[m].imag * other[m].imag)
                g_cc[j, l] = acc

        # ||z - H_o x_o||^2 with z = y - H_c c, expanded so that each
        # candidate costs O(n_o * n_c) instead of O(n * nsym).
        best = np.inf
        best_c = 0
        for c in range(cand.shape[0]):
            zz = yy
            for j in range(n_c):
                cj = cand[c, j]
                zz -= 2.0 * cj * q_c[j]
                for l in range(n_c):
                    zz += cj * cand[c, l] * g_cc[j, l]
            dist = zz
            for p in range(n_o):
                corr = q_o[p]
                for j in range(n_c):
                    corr -= g_oc[p, j] * cand[c, j]
                v = corr / norm
                odd = abs(2.0 * np.rint((v - 1.0) / 2.0) + 1.0)
                if odd > lim:
                    odd = lim
                xp = odd if v >= 0 else -odd
                xo[p] = xp
                dist += xp * (xp * d_o[p] - 2.0 * corr)
            if dist < best:
                best = dist
                best_c = c
                for p in range(n_o):
                    best_xo[p] = xo[p]
        for p in range(n_o):
            shat_out[b, ortho[p]] = best_xo[p]
        for j in range(n_c):
            shat_out[b, cond[j]] = cand[best_c, j]

        dist = 0.0
        for m in range(n):
            acc = y[m]
            for k in range(nsym):
                acc -= hc[k, m] * shat_out[b, k]
            dist += acc.real * acc.real + acc.imag * acc.imag
        metric[b] = math.sqrt(dist)
    return s_out, shat_out, metric
