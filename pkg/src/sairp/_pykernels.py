"""Pure-Python implementation of the hot loops.

The compiled module ``sairp._ckernels`` exposes the same functions with the
same signatures. Both versions perform the floating-point operations in the
same order, so they return identical results.
"""

from __future__ import annotations

import math

NEG_INF = -math.inf


def bellman_epoch(i, v_next, v_out, pol_out, M, Phi, C, rho, capnext, pmf, surv,
                  emin, Kt, Jt, Lt, act_a1, act_a2, a2cap, use_cap, monotone,
                  cache, use_cache):
    """One Bellman backup over all states of epoch row ``i``.

    ``use_cap`` limits replacements by ``a2cap``. ``monotone`` makes the
    allowed replacement count non-increasing as capacity rises, for each full
    count. ``use_cache`` reads transition probabilities from ``cache[s, a, k]``
    instead of the pmf/survival rows. Outcomes are always summed in ascending
    order of the next full count.
    """
    A = len(act_a1)
    for s1 in range(M + 1):
        row = s1 * C
        v_out[row] = v_next[row]
        pol_out[row] = 0
        bound = M
        for cap in range(1, C):
            s = row + cap
            best = NEG_INF
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
                q = rc * emin[i, n] - Kt * ap + Jt * am - Lt * a2
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


def policy_epoch(i, v_next, v_out, pol, M, C, rho, capnext, pmf, surv, emin,
                 Kt, Jt, Lt, act_a1, act_a2):
    """Backup of a fixed decision rule ``pol`` (action indices) for epoch row ``i``."""
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
            q = rho[cap] * emin[i, n] - Kt * ap + Jt * am - Lt * a2
            acc = 0.0
            acc += surv[i, n] * v_next[base * C + nc]
            for k in range(1, n + 1):
                acc += pmf[i, n - k] * v_next[(base + k) * C + nc]
            v_out[s] = q + acc


def project(v, M, C, s1, cap, z):
    """Monotone projection of ``z`` at ``(s1, cap)`` onto a monotone table row.

    ``v`` is the flattened table of one epoch and must already be monotone
    under the componentwise order, away from the absorbing column. Each scan
    stops at the first entry that already satisfies the order.
    """
    v[s1 * C + cap] = z
    for r in range(s1, M + 1):
        c0 = cap + 1 if r == s1 else cap
        if r != s1 and v[r * C + cap] >= z:
            break
        for c in range(c0, C):
            idx = r * C + c
            if v[idx] < z:
                v[idx] = z
            else:
                break
    for r in range(s1, -1, -1):
        c0 = cap - 1 if r == s1 else cap
        if r != s1 and v[r * C + cap] <= z:
            break
        for c in range(c0, 0, -1):
            idx = r * C + c
            if v[idx] > z:
                v[idx] = z
            else:
                break


def adp_batch(V, u, alphas, adaptive, st_bias, st_nu, st_lam, st_count, inner_w,
              alpha_min, monotone, init_states, ref_state, trace, step_used,
              M, Phi, C, T, rho, capnext, emin, cdf, K, J, L, act_a1, act_a2):
    """Run ``len(u)`` ADP iterations in place on ``V`` (rows 0..T, row T pinned).

    Row ``b`` of ``u`` holds the uniforms for iteration ``b``:
    - ``u[b, 0]`` picks the initial state among ``init_states``.
    - ``u[b, i + 1]`` samples ``min(D, M)`` at epoch row ``i``.
    """
    A = len(act_a1)
    n_init = len(init_states)
    for b in range(u.shape[0]):
        j = int(u[b, 0] * n_init)
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
            best = NEG_INF
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
                q = rc * emin[i, n] - Kt * ap + Jt * am - Lt * a2
                q = q + V[i + 1, nxt]
                if q > best:
                    best = q
                    best_next = nxt
            old = V[i, s]
            if adaptive:
                cnt = st_count[i, s] + 1
                st_count[i, s] = cnt
                eta = inner_w / (inner_w + cnt - 1.0)
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
                project(V[i], M, C, s1, cap, z)
            else:
                V[i, s] = z
            s = best_next
        trace[b] = V[0, ref_state]
        step_used[b] = first_alpha
