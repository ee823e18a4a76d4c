# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, sqrt, tanh, fabs

cnp.import_array()

ctypedef double f8
ctypedef cnp.int64_t i8


cdef inline f8 _softplus(f8 x) noexcept nogil:
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline f8 _sigmoid(f8 x) noexcept nogil:
    return 0.5 * (1.0 + tanh(0.5 * x))


cdef inline f8 _lrelu(f8 a, f8 slope) noexcept nogil:
    return a if a > 0 else slope * a


cdef inline f8 _dlrelu(f8 a, f8 slope) noexcept nogil:
    return 1.0 if a > 0 else slope


def reachable(const i8[::1] pa_ptr, const i8[::1] pa_idx, const i8[::1] ch_ptr,
              const i8[::1] ch_idx, sources, observed):
    cdef Py_ssize_t n = pa_ptr.shape[0] - 1
    cdef const cnp.uint8_t[::1] src = np.ascontiguousarray(sources, dtype=np.uint8)
    cdef const cnp.uint8_t[::1] obs = np.ascontiguousarray(observed, dtype=np.uint8)
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef cnp.uint8_t[::1] anc = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] seen = np.zeros((n, 2), dtype=np.uint8)
    cdef i8[::1] stack = np.empty(2 * n + 1, dtype=np.int64)
    cdef Py_ssize_t top = 0, v, k, w
    cdef int direction
    with nogil:
        for v in range(n):
            if obs[v]:
                anc[v] = 1
                stack[top] = v
                top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for k in range(pa_ptr[v], pa_ptr[v + 1]):
                w = pa_idx[k]
                if not anc[w]:
                    anc[w] = 1
                    stack[top] = w
                    top += 1
        # stack entries encode (node, direction) as 2*node + direction
        for v in range(n):
            if src[v]:
                seen[v, 0] = 1
                stack[top] = 2 * v
                top += 1
        while top > 0:
            top -= 1
            v = stack[top] >> 1
            direction = stack[top] & 1
            if not obs[v]:
                out[v] = 1
            if direction == 0 and not obs[v]:
                for k in range(pa_ptr[v], pa_ptr[v + 1]):
                    w = pa_idx[k]
                    if not seen[w, 0]:
                        seen[w, 0] = 1
                        stack[top] = 2 * w
                        top += 1
                for k in range(ch_ptr[v], ch_ptr[v + 1]):
                    w = ch_idx[k]
                    if not seen[w, 1]:
                        seen[w, 1] = 1
                        stack[top] = 2 * w + 1
                        top += 1
            elif direction == 1:
                if not obs[v]:
                    for k in range(ch_ptr[v], ch_ptr[v + 1]):
                        w = ch_idx[k]
                        if not seen[w, 1]:
                            seen[w, 1] = 1
                            stack[top] = 2 * w + 1
                            top += 1
                if anc[v]:
                    for k in range(pa_ptr[v], pa_ptr[v + 1]):
                        w = pa_idx[k]
                        if not seen[w, 0]:
                            seen[w, 0] = 1
                            stack[top] = 2 * w
                            top += 1
    return out_arr


def knn_coverage(ref, radii, query):
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    # widest balls first: covered queries exit early
    order = np.argsort(-radii, kind="stable")
    cdef const f8[:, ::1] R = np.ascontiguousarray(ref[order])
    cdef const f8[::1] r2 = np.ascontiguousarray(radii[order] ** 2)
    cdef const f8[:, ::1] Q = query
    cdef Py_ssize_t nq = Q.shape[0], nr = R.shape[0], p = Q.shape[1]
    out_arr = np.zeros(nq, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef Py_ssize_t i, j, c
    cdef f8 acc, diff, lim
    with nogil:
        for i in range(nq):
            for j in range(nr):
                lim = r2[j]
                acc = 0.0
                for c in range(p):
                    diff = Q[i, c] - R[j, c]
                    acc = acc + diff * diff
                    if acc > lim:
                        break
                if acc <= lim:
                    out[i] = 1
                    break
    return out_arr


cdef void _dense(const f8[:, ::1] X, const f8[:, ::1] W, const f8[::1] b, f8[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t B = X.shape[0], n_in = X.shape[1], n_out = W.shape[0], r, o, i
    cdef f8 acc
    for r in range(B):
        for o in range(n_out):
            acc = b[o]
            for i in range(n_in):
                acc = acc + X[r, i] * W[o, i]
            out[r, o] = acc


cdef void _lrelu_into(const f8[:, ::1] A, f8[:, ::1] H, f8 slope) noexcept nogil:
    cdef Py_ssize_t r, o
    for r in range(A.shape[0]):
        for o in range(A.shape[1]):
            H[r, o] = _lrelu(A[r, o], slope)


cdef void _dense_grad(const f8[:, ::1] G, const f8[:, ::1] A, f8[:, ::1] gW, f8[::1] gb) noexcept nogil:
    # gW += G^T A ; gb += column sums of G
    cdef Py_ssize_t B = G.shape[0], n_out = G.shape[1], n_in = A.shape[1], r, o, i
    cdef f8 g
    for r in range(B):
        for o in range(n_out):
            g = G[r, o]
            gb[o] = gb[o] + g
            for i in range(n_in):
                gW[o, i] = gW[o, i] + g * A[r, i]


cdef void _back(const f8[:, ::1] G, const f8[:, ::1] W, const f8[:, ::1] pre, f8[:, ::1] out,
                f8 slope, bint gate) noexcept nogil:
    # out = (G W) * lrelu'(pre) when gate, else G W
    cdef Py_ssize_t B = G.shape[0], n_out = G.shape[1], n_in = W.shape[1], r, o, i
    cdef f8 acc
    for r in range(B):
        for i in range(n_in):
            acc = 0.0
            for o in range(n_out):
                acc = acc + G[r, o] * W[o, i]
            if gate:
                acc = acc * _dlrelu(pre[r, i], slope)
            out[r, i] = acc


cdef object _disc_pass(list Ws, list bs, const f8[:, ::1] X, int mode, f8 slope,
                       list gWs, list gbs, bint want_input):
    """mode 0: loss softplus(-logit); mode 1: softplus(logit). Mean over rows."""
    cdef Py_ssize_t B = X.shape[0], nl = len(Ws), k, r
    cdef list acts = [X]
    cdef list pres = []
    cdef f8[:, ::1] a, h
    for k in range(nl):
        W = Ws[k]
        a = np.empty((B, W.shape[0]))
        _dense(acts[k], W, bs[k], a)
        pres.append(a)
        if k < nl - 1:
            h = np.empty((B, W.shape[0]))
            _lrelu_into(a, h, slope)
            acts.append(h)
    cdef f8[:, ::1] logit = pres[nl - 1]
    cdef f8[:, ::1] g = np.empty((B, 1))
    cdef f8 loss = 0.0, l
    for r in range(B):
        l = logit[r, 0]
        if mode == 0:
            loss += _softplus(-l)
            g[r, 0] = (_sigmoid(l) - 1.0) / B
        else:
            loss += _softplus(l)
            g[r, 0] = _sigmoid(l) / B
    loss /= B
    cdef f8[:, ::1] gprev
    for k in range(nl - 1, -1, -1):
        if gWs is not None:
            _dense_grad(g, acts[k], gWs[k], gbs[k])
        if k > 0 or want_input:
            W = Ws[k]
            gprev = np.empty((B, W.shape[1]))
            if k > 0:
                _back(g, W, pres[k - 1], gprev, slope, True)
            else:
                _back(g, W, g, gprev, slope, False)
            g = gprev
    if want_input:
        return loss, np.asarray(g)
    return loss, None


def disc_logits(list Ws, list bs, X, double slope):
    cdef const f8[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t B = Xv.shape[0], nl = len(Ws), k
    cdef f8[:, ::1] cur = np.array(Xv)
    cdef f8[:, ::1] a
    for k in range(nl):
        W = Ws[k]
        a = np.empty((B, W.shape[0]))
        _dense(cur, W, bs[k], a)
        if k < nl - 1:
            _lrelu_into(a, a, slope)
        cur = a
    return np.asarray(cur)[:, 0].copy()


def disc_grads(list Ws, list bs, real, fake, double slope):
    gWs = [np.zeros_like(W) for W in Ws]
    gbs = [np.zeros_like(b) for b in bs]
    lr_, _ = _disc_pass(Ws, bs, np.ascontiguousarray(real, dtype=np.float64), 0, slope, gWs, gbs, False)
    lf_, _ = _disc_pass(Ws, bs, np.ascontiguousarray(fake, dtype=np.float64), 1, slope, gWs, gbs, False)
    return float(lr_ + lf_), gWs, gbs


cdef void _gen_run(list gp, const f8[:, ::1] mask, const i8[::1] order, const f8[:, ::1] Z, const f8[:, ::1] S, f8 slope,
                   const f8[::1] tau, f8[:, ::1] X, f8[:, ::1] RX, f8[:, :, ::1] U, f8[:, :, :, ::1] PRE,
                   f8[:, :, :, ::1] HS, bint keep, bint hard):
    cdef const f8[:, ::1] W_in = gp[0]
    cdef const f8[::1] b_in = gp[1]
    cdef const f8[:, :, :, ::1] PW = gp[2]
    cdef const f8[:, :, ::1] Pb = gp[3]
    cdef const f8[:, ::1] W_out = gp[4]
    cdef const f8[::1] b_out = gp[5]
    cdef Py_ssize_t B = Z.shape[0], d = Z.shape[1], h = W_in.shape[0], npv = PW.shape[0]
    cdef Py_ssize_t jj, j, r, o, i, l
    cdef f8 acc, relaxed
    cdef f8[::1] u = np.empty(d + 1)
    cdef f8[::1] hcur = np.empty(h)
    cdef f8[::1] hnext = np.empty(h)
    with nogil:
        for jj in range(order.shape[0]):
            j = order[jj]
            for r in range(B):
                for i in range(d):
                    u[i] = X[r, i] * mask[j, i]
                u[d] = Z[r, j]
                for o in range(h):
                    acc = b_in[o]
                    for i in range(d + 1):
                        acc = acc + W_in[o, i] * u[i]
                    if keep:
                        PRE[j, 0, r, o] = acc
                    hcur[o] = _lrelu(acc, slope)
                    if keep:
                        HS[j, 0, r, o] = hcur[o]
                if keep:
                    for i in range(d + 1):
                        U[j, r, i] = u[i]
                for l in range(npv):
                    for o in range(h):
                        acc = Pb[l, j, o]
                        for i in range(h):
                            acc = acc + PW[l, j, o, i] * hcur[i]
                        if keep:
                            PRE[j, l + 1, r, o] = acc
                        hnext[o] = _lrelu(acc, slope)
                    for o in range(h):
                        hcur[o] = hnext[o]
                        if keep:
                            HS[j, l + 1, r, o] = hcur[o]
                acc = b_out[j]
                for i in range(h):
                    acc = acc + W_out[j, i] * hcur[i]
                if tau[j] > 0.0:
                    relaxed = _sigmoid((acc - S[r, j]) / tau[j])
                    if keep:
                        RX[r, j] = relaxed
                    if hard:
                        X[r, j] = 1.0 if acc > S[r, j] else 0.0
                    else:
                        X[r, j] = relaxed
                else:
                    X[r, j] = acc


def gen_forward(list gp, mask, order, Z, S, double slope, tau, bint hard=False):
    cdef const f8[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    X = np.zeros((Zv.shape[0], Zv.shape[1]))
    _gen_run(gp, np.ascontiguousarray(mask, dtype=np.float64), np.ascontiguousarray(order, dtype=np.int64),
             Zv, np.ascontiguousarray(S, dtype=np.float64), slope, np.ascontiguousarray(tau, dtype=np.float64),
             X, None, None, None, None, False, hard)
    return X


def gen_grads(list gp, mask, order, Z, S, list Ws, list bs, double slope, tau, bint hard=False):
    cdef const f8[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const f8[:, ::1] M = np.ascontiguousarray(mask, dtype=np.float64)
    cdef const i8[::1] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef const f8[:, ::1] W_in = gp[0]
    cdef const f8[:, :, :, ::1] PW = gp[2]
    cdef const f8[:, ::1] W_out = gp[4]
    cdef Py_ssize_t B = Zv.shape[0], d = Zv.shape[1], h = W_in.shape[0], npv = PW.shape[0]
    X = np.zeros((B, d))
    cdef f8[:, :, ::1] U = np.empty((d, B, d + 1))
    cdef f8[:, :, :, ::1] PRE = np.empty((d, npv + 1, B, h))
    cdef f8[:, :, :, ::1] HS = np.empty((d, npv + 1, B, h))
    cdef const f8[::1] tv = np.ascontiguousarray(tau, dtype=np.float64)
    cdef f8[:, ::1] Xv = np.zeros((B, d))
    _gen_run(gp, M, od, Zv, np.ascontiguousarray(S, dtype=np.float64), slope, tv, X, Xv, U, PRE, HS, True, hard)
    loss, gX_arr = _disc_pass(Ws, bs, X, 0, slope, None, None, True)
    cdef f8[:, ::1] gX = gX_arr
    grads = [np.zeros_like(p) for p in gp]
    cdef f8[:, ::1] gW_in = grads[0]
    cdef f8[::1] gb_in = grads[1]
    cdef f8[:, :, :, ::1] gPW = grads[2]
    cdef f8[:, :, ::1] gPb = grads[3]
    cdef f8[:, ::1] gW_out = grads[4]
    cdef f8[::1] gb_out = grads[5]
    cdef f8[::1] dh = np.empty(h)
    cdef f8[::1] da = np.empty(h)
    cdef Py_ssize_t jj, j, r, o, i, l
    cdef f8 g, acc
    with nogil:
        for jj in range(od.shape[0] - 1, -1, -1):
            j = od[jj]
            for r in range(B):
                g = gX[r, j]
                if tv[j] > 0.0:
                    g = g * Xv[r, j] * (1.0 - Xv[r, j]) / tv[j]
                gb_out[j] = gb_out[j] + g
                for i in range(h):
                    gW_out[j, i] = gW_out[j, i] + g * HS[j, npv, r, i]
                    dh[i] = g * W_out[j, i]
                for l in range(npv - 1, -1, -1):
                    for o in range(h):
                        da[o] = dh[o] * _dlrelu(PRE[j, l + 1, r, o], slope)
                        gPb[l, j, o] = gPb[l, j, o] + da[o]
                        for i in range(h):
                            gPW[l, j, o, i] = gPW[l, j, o, i] + da[o] * HS[j, l, r, i]
                    for i in range(h):
                        acc = 0.0
                        for o in range(h):
                            acc = acc + da[o] * PW[l, j, o, i]
                        dh[i] = acc
                for o in range(h):
                    da[o] = dh[o] * _dlrelu(PRE[j, 0, r, o], slope)
                    gb_in[o] = gb_in[o] + da[o]
                    for i in range(d + 1):
                        gW_in[o, i] = gW_in[o, i] + da[o] * U[j, r, i]
                for i in range(d):
                    if M[j, i] != 0.0:
                        acc = 0.0
                        for o in range(h):
                            acc = acc + da[o] * W_in[o, i]
                        gX[r, i] = gX[r, i] + acc * M[j, i]
    return float(loss), grads


def adam_update(param, grad, m, v, long step, double lr, double l2, double beta1, double beta2, double eps):
    cdef f8[::1] p = param.reshape(-1)
    cdef const f8[::1] gr = grad.reshape(-1)
    cdef f8[::1] mm = m.reshape(-1)
    cdef f8[::1] vv = v.reshape(-1)
    cdef f8 c1 = 1.0 - beta1 ** step
    cdef f8 c2 = 1.0 - beta2 ** step
    cdef f8 g
    cdef Py_ssize_t i
    with nogil:
        for i in range(p.shape[0]):
            g = gr[i] + 2.0 * l2 * p[i]
            mm[i] = beta1 * mm[i] + (1.0 - beta1) * g
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * g * g
            p[i] = p[i] - lr * (mm[i] / c1) / (sqrt(vv[i] / c2) + eps)
