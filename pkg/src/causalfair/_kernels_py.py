"""Pure numpy implementations of the hot kernels.

Signatures mirror the compiled ``_kernels`` extension exactly; see
``causalfair.kernels`` for how one of the two is picked at import.

Network layouts
---------------
Discriminator: lists ``Ws``/``bs`` of dense layers ``d -> h -> ... -> h -> 1``
with leaky-ReLU on hidden layers and a raw logit output.

Generator ``gp``: ``[W_in (h, d+1), b_in (h,), PW (L-1, d, h, h), Pb (L-1, d, h),
W_out (d, h), b_out (d,)]``. Node ``j`` sees ``[x * mask[j], z_j]`` through the
shared input layer, then its private hidden layers ``PW[:, j]`` and output head.
``tau[j]`` selects the head: 0 is linear, a positive value gives the relaxed
Bernoulli ``sigmoid((out - S[:, j]) / tau[j])`` where ``S`` holds logistic noise.
With ``hard`` set, binary heads emit the rounded draw ``out > S[:, j]`` while
gradients still flow through the relaxed value (straight-through).
"""

import numpy as np


def reachable(pa_ptr, pa_idx, ch_ptr, ch_idx, sources, observed):
    """Nodes connected to ``sources`` by an active trail given ``observed``.

    CSR adjacency (``pa_ptr``/``pa_idx`` for parents, ``ch_ptr``/``ch_idx``
    for children); ``sources`` and ``observed`` are uint8 masks. Returns a
    uint8 mask. Observed nodes are never reported as reachable.
    """
    n = len(pa_ptr) - 1
    observed = np.asarray(observed, dtype=bool)
    # ancestors of the observed set, inclusive
    anc = observed.copy()
    stack = list(np.flatnonzero(observed))
    while stack:
        v = stack.pop()
        for p in pa_idx[pa_ptr[v]:pa_ptr[v + 1]]:
            if not anc[p]:
                anc[p] = True
                stack.append(p)
    # direction 0: arrived from a child (moving up), 1: from a parent (down)
    seen = np.zeros((n, 2), dtype=bool)
    out = np.zeros(n, dtype=np.uint8)
    stack = []
    for v in np.flatnonzero(sources):
        seen[v, 0] = True
        stack.append((v, 0))
    while stack:
        v, direction = stack.pop()
        if not observed[v]:
            out[v] = 1
        if direction == 0 and not observed[v]:
            for p in pa_idx[pa_ptr[v]:pa_ptr[v + 1]]:
                if not seen[p, 0]:
                    seen[p, 0] = True
                    stack.append((p, 0))
            for c in ch_idx[ch_ptr[v]:ch_ptr[v + 1]]:
                if not seen[c, 1]:
                    seen[c, 1] = True
                    stack.append((c, 1))
        elif direction == 1:
            if not observed[v]:
                for c in ch_idx[ch_ptr[v]:ch_ptr[v + 1]]:
                    if not seen[c, 1]:
                        seen[c, 1] = True
                        stack.append((c, 1))
            if anc[v]:
                for p in pa_idx[pa_ptr[v]:pa_ptr[v + 1]]:
                    if not seen[p, 0]:
                        seen[p, 0] = True
                        stack.append((p, 0))
    return out


def knn_coverage(ref, radii, query):
    """Mask of query rows lying inside at least one ball ``(ref[i], radii[i])``."""
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    query = np.ascontiguousarray(query, dtype=np.float64)
    r2 = np.asarray(radii, dtype=np.float64) ** 2
    ref_sq = np.einsum("ij,ij->i", ref, ref)
    out = np.zeros(len(query), dtype=np.uint8)
    chunk = max(1, 2_000_000 // max(1, len(ref)))
    for start in range(0, len(query), chunk):
        q = query[start:start + chunk]
        d2 = np.einsum("ij,ij->i", q, q)[:, None] + ref_sq[None, :] - 2.0 * (q @ ref.T)
        # expansion round-off must not uncover exact duplicates
        tol = 1e-9 * (np.abs(d2) + r2[None, :]) + 1e-12
        out[start:start + chunk] = np.any(d2 <= r2[None, :] + tol, axis=1)
    return out


def _lrelu(a, slope):
    return np.where(a > 0, a, slope * a)


def _dlrelu(a, slope):
    return np.where(a > 0, 1.0, slope)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def disc_logits(Ws, bs, X, slope):
    h = X
    for W, b in zip(Ws[:-1], bs[:-1]):
        h = _lrelu(h @ W.T + b, slope)
    return (h @ Ws[-1].T + bs[-1])[:, 0]


def _disc_backward(Ws, bs, X, dlogit, slope, want_params=True):
    acts = [X]
    pre = []
    h = X
    for W, b in zip(Ws[:-1], bs[:-1]):
        a = h @ W.T + b
        pre.append(a)
        h = _lrelu(a, slope)
        acts.append(h)
    g = dlogit[:, None]
    gWs = [None] * len(Ws)
    gbs = [None] * len(bs)
    for k in range(len(Ws) - 1, -1, -1):
        if want_params:
            gWs[k] = g.T @ acts[k]
            gbs[k] = g.sum(axis=0)
        g = g @ Ws[k]
        if k > 0:
            g = g * _dlrelu(pre[k - 1], slope)
    return gWs, gbs, g


def disc_grads(Ws, bs, real, fake, slope):
    """Loss ``mean softplus(-D(real)) + mean softplus(D(fake))`` and its parameter gradients."""
    lr_ = disc_logits(Ws, bs, real, slope)
    lf_ = disc_logits(Ws, bs, fake, slope)
    loss = _softplus(-lr_).mean() + _softplus(lf_).mean()
    gWr, gbr, _ = _disc_backward(Ws, bs, real, (_sigmoid(lr_) - 1.0) / len(real), slope)
    gWf, gbf, _ = _disc_backward(Ws, bs, fake, _sigmoid(lf_) / len(fake), slope)
    return float(loss), [a + b for a, b in zip(gWr, gWf)], [a + b for a, b in zip(gbr, gbf)]


def _gen_layers(gp):
    W_in, b_in, PW, Pb, W_out, b_out = gp
    return W_in, b_in, list(zip(PW, Pb)), W_out, b_out


def _gen_run(gp, mask, order, Z, S, slope, tau, keep, hard):
    W_in, b_in, private, W_out, b_out = _gen_layers(gp)
    B, d = Z.shape
    X = np.zeros((B, d))
    relaxed = np.zeros((B, d))
    cache = {}
    for j in order:
        u = np.empty((B, d + 1))
        u[:, :d] = X * mask[j]
        u[:, d] = Z[:, j]
        a = u @ W_in.T + b_in
        pres = [a]
        h = _lrelu(a, slope)
        hs = [h]
        for PW, Pb in private:
            a = h @ PW[j].T + Pb[j]
            pres.append(a)
            h = _lrelu(a, slope)
            hs.append(h)
        out = h @ W_out[j] + b_out[j]
        if tau[j] > 0:
            relaxed[:, j] = _sigmoid((out - S[:, j]) / tau[j])
            X[:, j] = (out > S[:, j]).astype(np.float64) if hard else relaxed[:, j]
        else:
            X[:, j] = out
        if keep:
            cache[j] = (u, pres, hs)
    cache["relaxed"] = relaxed
    return X, cache


def gen_forward(gp, mask, order, Z, S, slope, tau, hard=False):
    return _gen_run(gp, mask, order, Z, S, slope, tau, False, hard)[0]


def gen_grads(gp, mask, order, Z, S, Ws, bs, slope, tau, hard=False):
    """Non-saturating generator loss ``mean softplus(-D(G(Z)))`` and gradients for ``gp``."""
    W_in, b_in, private, W_out, b_out = _gen_layers(gp)
    X, cache = _gen_run(gp, mask, order, Z, S, slope, tau, True, hard)
    R = cache["relaxed"]
    logits = disc_logits(Ws, bs, X, slope)
    loss = float(_softplus(-logits).mean())
    _, _, gX = _disc_backward(Ws, bs, X, (_sigmoid(logits) - 1.0) / len(X), slope, want_params=False)
    grads = [np.zeros_like(p) for p in gp]
    d = X.shape[1]
    for j in order[::-1]:
        u, pres, hs = cache[j]
        g = gX[:, j]
        if tau[j] > 0:
            g = g * R[:, j] * (1.0 - R[:, j]) / tau[j]
        grads[-2][j] += g @ hs[-1]
        grads[-1][j] += g.sum()
        dh = np.outer(g, W_out[j])
        for k in range(len(private) - 1, -1, -1):
            da = dh * _dlrelu(pres[k + 1], slope)
            grads[2][k, j] += da.T @ hs[k]
            grads[3][k, j] += da.sum(axis=0)
            dh = da @ private[k][0][j]
        da = dh * _dlrelu(pres[0], slope)
        grads[0] += da.T @ u
        grads[1] += da.sum(axis=0)
        gX += (da @ W_in)[:, :d] * mask[j]
    return loss, grads


def adam_update(param, grad, m, v, step, lr, l2, beta1, beta2, eps):
    """In-place Adam step on ``param``; ``l2`` adds ``2*l2*param`` to the gradient."""
    g = grad + 2.0 * l2 * param
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    param -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
