import numpy as np
import pytest

from causalfair import _kernels_py as P
from causalfair import kernels

try:
    from causalfair import _kernels as C
except ImportError:  # pure-Python install
    C = None

needs_ext = pytest.mark.skipif(C is None, reason="compiled extension not built")
SLOPE = 0.2


def setup(seed=0, d=5, h=7, B=9, npv=1):
    rng = np.random.default_rng(seed)
    mask = np.zeros((d, d))
    for c, p in ((2, 0), (2, 1), (3, 2), (4, 0), (4, 3)):
        mask[c, p] = 1.0
    order = np.array([1, 0, 2, 3, 4])
    gp = [rng.normal(size=(h, d + 1)), rng.normal(size=h), rng.normal(size=(npv, d, h, h)) * 0.5,
          rng.normal(size=(npv, d, h)), rng.normal(size=(d, h)), rng.normal(size=d)]
    Ws = [rng.normal(size=(h, d)), rng.normal(size=(h, h)), rng.normal(size=(1, h))]
    bs = [rng.normal(size=h), rng.normal(size=h), rng.normal(size=1)]
    Z = rng.normal(size=(B, d))
    S = rng.logistic(size=(B, d))
    tau = np.array([0.0, 0.2, 0.5, 0.0, 1.0])
    real = rng.normal(size=(B, d))
    return dict(mask=mask, order=order, gp=gp, Ws=Ws, bs=bs, Z=Z, S=S, tau=tau, real=real)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
@pytest.mark.parametrize("hard", [False, True], ids=["relaxed", "straight-through"])
def test_generator_backends_agree(hard):
    s = setup()
    a = C.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, s["tau"], hard)
    b = P.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, s["tau"], hard)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    la, ga = C.gen_grads(s["gp"], s["mask"], s["order"], s["Z"], s["S"], s["Ws"], s["bs"], SLOPE, s["tau"], hard)
    lb, gb = P.gen_grads(s["gp"], s["mask"], s["order"], s["Z"], s["S"], s["Ws"], s["bs"], SLOPE, s["tau"], hard)
    assert la == pytest.approx(lb, rel=1e-12)
    for x, y in zip(ga, gb):
        assert np.allclose(x, y, rtol=1e-10, atol=1e-12)


@needs_ext
def test_discriminator_backends_agree():
    s = setup(1)
    assert np.allclose(C.disc_logits(s["Ws"], s["bs"], s["real"], SLOPE), P.disc_logits(s["Ws"], s["bs"], s["real"], SLOPE))
    la, gwa, gba = C.disc_grads(s["Ws"], s["bs"], s["real"], s["Z"], SLOPE)
    lb, gwb, gbb = P.disc_grads(s["Ws"], s["bs"], s["real"], s["Z"], SLOPE)
    assert la == pytest.approx(lb, rel=1e-12)
    for x, y in zip(gwa + gba, gwb + gbb):
        assert np.allclose(x, y, rtol=1e-10, atol=1e-12)


def _finite_difference(loss, arrays, rng, eps=1e-6, picks=6):
    errs = []
    for arr in arrays:
        flat = arr.reshape(-1)
        for idx in rng.choice(flat.size, size=min(picks, flat.size), replace=False):
            old = flat[idx]
            flat[idx] = old + eps
            up = loss()
            flat[idx] = old - eps
            down = loss()
            flat[idx] = old
            errs.append((idx, (up - down) / (2 * eps)))
    return errs


@pytest.mark.parametrize("impl", [P, pytest.param(C, marks=needs_ext)], ids=["python", "cython"])
def test_generator_gradients_match_finite_differences(impl):
    s = setup(2)
    args = lambda: (s["gp"], s["mask"], s["order"], s["Z"], s["S"], s["Ws"], s["bs"], SLOPE, s["tau"])
    _, grads = impl.gen_grads(*args())
    rng = np.random.default_rng(0)
    for k, (p, g) in enumerate(zip(s["gp"], grads)):
        for idx, fd in _finite_difference(lambda: impl.gen_grads(*args())[0], [p], rng):
            assert g.reshape(-1)[idx] == pytest.approx(fd, rel=1e-4, abs=1e-7), (k, idx)


@pytest.mark.parametrize("impl", [P, pytest.param(C, marks=needs_ext)], ids=["python", "cython"])
def test_discriminator_gradients_match_finite_differences(impl):
    s = setup(3)
    _, gW, gb = impl.disc_grads(s["Ws"], s["bs"], s["real"], s["Z"], SLOPE)
    rng = np.random.default_rng(1)
    for p, g in zip(s["Ws"] + s["bs"], gW + gb):
        loss = lambda: impl.disc_grads(s["Ws"], s["bs"], s["real"], s["Z"], SLOPE)[0]
        for idx, fd in _finite_difference(loss, [p], rng):
            assert g.reshape(-1)[idx] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_relaxed_head_rounds_to_threshold_rule():
    s = setup(4, B=400)
    X = P.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, s["tau"])
    linear = s["tau"].copy()
    linear[1] = 0.0
    # node 1 has no parents, so switching its head off exposes the raw score
    raw = P.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, linear)[:, 1]
    assert np.all((X[:, 1] >= 0) & (X[:, 1] <= 1))
    assert np.array_equal(X[:, 1] >= 0.5, raw > s["S"][:, 1])


@pytest.mark.parametrize("impl", [P, pytest.param(C, marks=needs_ext)], ids=["python", "cython"])
def test_straight_through_forward_is_rounded(impl):
    s = setup(4, B=300)
    soft = impl.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, s["tau"], False)
    hard = impl.gen_forward(s["gp"], s["mask"], s["order"], s["Z"], s["S"], SLOPE, s["tau"], True)
    binary = s["tau"] > 0
    assert set(np.unique(hard[:, binary])) <= {0.0, 1.0}
    # node 1 is a root, so its relaxed value rounds to the hard draw exactly
    assert np.array_equal(hard[:, 1], (soft[:, 1] >= 0.5).astype(float))
    # continuous roots are untouched
    assert np.array_equal(hard[:, 0], soft[:, 0])


@pytest.mark.parametrize("impl", [P, pytest.param(C, marks=needs_ext)], ids=["python", "cython"])
def test_adam_update_reference(impl):
    rng = np.random.default_rng(5)
    p = rng.normal(size=(4, 3))
    g = rng.normal(size=(4, 3))
    m = rng.normal(size=(4, 3)) * 0.1
    v = np.abs(rng.normal(size=(4, 3))) * 0.1
    lr, l2, b1, b2, eps, step = 1e-3, 1e-4, 0.5, 0.999, 1e-8, 3
    gg = g + 2 * l2 * p
    m_ref = b1 * m + (1 - b1) * gg
    v_ref = b2 * v + (1 - b2) * gg * gg
    p_ref = p - lr * (m_ref / (1 - b1**step)) / (np.sqrt(v_ref / (1 - b2**step)) + eps)
    impl.adam_update(p, g, m, v, step, lr, l2, b1, b2, eps)
    assert np.allclose(p, p_ref, rtol=1e-12) and np.allclose(m, m_ref) and np.allclose(v, v_ref)


@needs_ext
def test_reachable_and_coverage_agree():
    rng = np.random.default_rng(6)
    ref = rng.normal(size=(60, 3))
    radii = rng.uniform(0.2, 0.8, 60)
    query = rng.normal(size=(80, 3))
    assert np.array_equal(C.knn_coverage(ref, radii, query), P.knn_coverage(ref, radii, query))
    # chain 0 -> 1 -> 2 with collider 3 <- 2, 3 <- 4
    pa_ptr = np.array([0, 0, 1, 2, 4, 4], dtype=np.int64)
    pa_idx = np.array([0, 1, 2, 4], dtype=np.int64)
    ch_ptr = np.array([0, 1, 2, 3, 3, 4], dtype=np.int64)
    ch_idx = np.array([1, 2, 3, 3], dtype=np.int64)
    for obs in ([0, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 1, 0]):
        src = np.array([1, 0, 0, 0, 0], dtype=np.uint8)
        o = np.array(obs, dtype=np.uint8)
        assert np.array_equal(C.reachable(pa_ptr, pa_idx, ch_ptr, ch_idx, src, o),
                              P.reachable(pa_ptr, pa_idx, ch_ptr, ch_idx, src, o))
