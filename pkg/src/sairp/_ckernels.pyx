# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops in ``sairp._pykernels``.

Every function mirrors its Python counterpart operation for operation. The
extension is built with floating-point contraction disabled, so both versions
produce bit-identical doubles.
"""

from libc.stdint cimport int64_t
from libc.math cimport INFINITY


def bellman_epoch(int i, double[::1] v_next, double[::1] v_out, int64_t[::1] pol_out,
                  int M, int Phi, int C, double[::1] rho, int64_t[:, :, ::1] capnext,
                  double[:, ::1] pmf, double[:, ::1] surv, double[:, ::1] emin,
                  double Kt, double Jt, double Lt, int64_t[::1] act_a1,
                  int64_t[::1] act_a2, int64_t[::1] a2cap, int use_cap, int monotone,
                  double[:, :, ::1] cache, int use_cache):
    cdef Py_ssize_t A = act_a1.shape[0]
    cdef Py_ssize_t s1, row, cap, s, ai, k, n, base, nc, best_a, lim, bound
    cdef int64_t a1, a2, ap, am
    cdef double best, rc, q, acc
    with nogil:
        for s1 in range(M + 1):
            row = s1 * C
            v_out[row] = v_next[row]
            pol_out[row] = 0
            bound = M
            for cap in range(1, C):
                s = row + cap
                best = -INFINITY
                best_a = -1
                rc = rho[cap]
                lim = M - s1
                if use_cap and a2cap[cap] < lim:
                    lim = a2cap[cap]
                if monotone and bound < lim:
                    lim = bound
                for ai in range(A):
                    a1 = act_a1[ai]
                    a2 = act_a2[ai]
                    if a2 > lim:
                        continue
                    if a1 >= 0:
                        ap = a1
                        am = 0
                    else:
                        ap = 0
                        am = -a1
                    if am > s1 or am > Phi or ap > M - s1 - a2 or ap > Phi:
                        continue
                    n = s1 - am
                    base = a2 + ap
                    nc = capnext[cap, ap + am, a2]
                    q = rc * emin[i, n] - Kt * <double>ap + Jt * <double>am - Lt * <double>a2
                    acc = 0.0
                    if use_cache:
                        for k in range(n + 1):
                            acc += cache[s, ai, k] * v_next[(base + k) * C + nc]
                    else:
                        acc += surv[i, n] * v_next[base * C + nc]
                        for k in range(1, n + 1):
                            acc += pmf[i, n - k] * v_next[(base + k) * C + nc]
                    q = q + acc
                    if q > best:
                        best = q
                        best_a = ai
                v_out[s] = best
                pol_out[s] = best_a
                if monotone:
                    bound = act_a2[best_a]


def policy_epoch(int i, double[::1] v_next, double[::1] v_out, int64_t[::1] pol,
                 int M, int C, double[::1] rho, int64_t[:, :, ::1] capnext,
                 double[:, ::1] pmf, double[:, ::1] surv, double[:, ::1] emin,
                 double Kt, double Jt, double Lt, int64_t[::1] act_a1,
                 int64_t[::1] act_a2):
    cdef Py_ssize_t s1, row, cap, s, ai, k, n, base, nc
    cdef int64_t a1, a2, ap, am
    cdef double q, acc
    with nogil:
        for s1 in range(M + 1):
            row = s1 * C
            v_out[row] = v_next[row]
            for cap in range(1, C):
                s = row + cap
                ai = pol[s]
                a1 = act_a1[ai]
                a2 = act_a2[ai]
                if a1 >= 0:
                    ap = a1
                    am = 0
                else:
                    ap = 0
                    am = -a1
                n = s1 - am
                base = a2 + ap
                nc = capnext[cap, ap + am, a2]
                q = rho[cap] * emin[i, n] - Kt * <double>ap + Jt * <double>am - Lt * <double>a2
                acc = 0.0
                acc += surv[i, n] * v_next[base * C + nc]
                for k in range(1, n + 1):
                    acc += pmf[i, n - k] * v_next[(base + k) * C + nc]
                v_out[s] = q + acc


cdef inline void _project(double[::1] v, Py_ssize_t M, Py_ssize_t C, Py_ssize_t s1,
                          Py_ssize_t cap, double z) noexcept nogil:
    cdef Py_ssize_t r, c, c0, idx
    v[s1 * C + cap] = z
    r = s1
    while r <= M:
        if r == s1:
            c0 = cap + 1
        else:
            if v[r * C + cap] >= z:
                break
            c0 = cap
        c = c0
        while c < C:
            idx = r * C + c
            if v[idx] < z:
                v[idx] = z
            else:
                break
            c += 1
        r += 1
    r = s1
    while r >= 0:
        if r == s1:
            c0 = cap - 1
        else:
            if v[r * C + cap] <= z:
                break
            c0 = cap
        c = c0
        while c > 0:
            idx = r * C + c
            if v[idx] > z:
                v[idx] = z
            else:
                break
            c -= 1
        r -= 1


def project(double[::1] v, int M, int C, int s1, int cap, double z):
    _project(v, M, C, s1, cap, z)


def adp_batch(double[:, ::1] V, double[:, ::1] u, double[::1] alphas, int adaptive,
              double[:, ::1] st_bias, double[:, ::1] st_nu, double[:, ::1] st_lam,
              int64_t[:, ::1] st_count, double inner_w, double alpha_min, int monotone,
              int64_t[::1] init_states, Py_ssize_t ref_state, double[::1] trace,
              double[::1] step_used, int M, int Phi, int C, int T, double[::1] rho,
              int64_t[:, :, ::1] capnext, double[:, ::1] emin, double[:, ::1] cdf,
              double[::1] K, double[::1] J, double[::1] L, int64_t[::1] act_a1,
              int64_t[::1] act_a2):
    cdef Py_ssize_t A = act_a1.shape[0]
    cdef Py_ssize_t n_init = init_states.shape[0]
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t b, j, s, i, s1, cap, d, ai, n, sw, nxt, best_next
    cdef int64_t a1, a2, ap, am, cnt
    cdef double ub, Kt, Jt, Lt, rc, best, q, old, eta, e, bias, nu, lam_prev
    cdef double sigma2, alpha, first_alpha, z
    with nogil:
        for b in range(B):
            j = <Py_ssize_t>(u[b, 0] * n_init)
            if j >= n_init:
                j = n_init - 1
            s = init_states[j]
            first_alpha = -1.0
            for i in range(T):
                s1 = s // C
                cap = s - s1 * C
                if cap == 0:
                    break
                d = 0
                ub = u[b, i + 1]
                while d < M and ub >= cdf[i, d]:
                    d += 1
                Kt = K[i]
                Jt = J[i]
                Lt = L[i]
                rc = rho[cap]
                best = -INFINITY
                best_next = -1
                for ai in range(A):
                    a1 = act_a1[ai]
                    a2 = act_a2[ai]
                    if a2 > M - s1:
                        continue
                    if a1 >= 0:
                        ap = a1
                        am = 0
                    else:
                        ap = 0
                        am = -a1
                    if am > s1 or am > Phi or ap > M - s1 - a2 or ap > Phi:
                        continue
                    n = s1 - am
                    sw = d if d < n else n
                    nxt = (s1 + a2 + ap - am - sw) * C + capnext[cap, ap + am, a2]
                    q = rc * emin[i, n] - Kt * <double>ap + Jt * <double>am - Lt * <double>a2
                    q = q + V[i + 1, nxt]
                    if q > best:
                        best = q
                        best_next = nxt
                old = V[i, s]
                if adaptive:
                    cnt = st_count[i, s] + 1
                    st_count[i, s] = cnt
                    eta = inner_w / (inner_w + <double>cnt - 1.0)
                    e = best - old
                    bias = (1.0 - eta) * st_bias[i, s] + eta * e
                    nu = (1.0 - eta) * st_nu[i, s] + eta * (e * e)
                    lam_prev = st_lam[i, s]
                    if nu <= 0.0:
                        alpha = 1.0
                    else:
                        sigma2 = (nu - bias * bias) / (1.0 + lam_prev)
                        alpha = 1.0 - sigma2 / nu
                        if alpha < alpha_min:
                            alpha = alpha_min
                        elif alpha > 1.0:
                            alpha = 1.0
                    st_bias[i, s] = bias
                    st_nu[i, s] = nu
                    st_lam[i, s] = (1.0 - alpha) * (1.0 - alpha) * lam_prev + alpha * alpha
                else:
                    alpha = alphas[b]
                if first_alpha < 0.0:
                    first_alpha = alpha
                z = (1.0 - alpha) * old + alpha * best
                if monotone:
                    _project(V[i], M, C, s1, cap, z)
                else:
                    V[i, s] = z
                s = best_next
            trace[b] = V[0, ref_state]
            step_used[b] = first_alpha
