import numpy as np
import pytest

from finslertwist import curvature, fd, metrics
from finslertwist.curvature import DegeneratePointError, MetricJets, curvature_bundle
from finslertwist.metrics import TangentPoint, custom_metric, euclidean_metric, randers_metric, riemannian_metric

RANDERS = randers_metric(2, [["1", "0"], ["0", "1"]], ["0.5", "0"])
RIEMANN = riemannian_metric(2, [["1", "0"], ["0", "1+x1^2"]])


def _samples(dim, count, seed):
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        y = rng.standard_normal(dim)
        y /= np.linalg.norm(y)
        pts.append(TangentPoint(rng.uniform(-1, 1, dim), y * rng.uniform(0.5, 2.0)))
    return pts


def _norm_scale(arr):
    return max(1.0, float(np.max(np.abs(arr))))


def test_fundamental_tensor_euclidean_is_identity():
    g, ginv = curvature.fundamental_tensor(euclidean_metric(3), TangentPoint([0.1] * 3, [1.0, 2.0, -1.0]))
    assert np.allclose(g, np.eye(3), atol=1e-14)
    assert np.allclose(ginv, np.eye(3), atol=1e-14)


def test_fundamental_tensor_randers_matches_finite_differences():
    pt = TangentPoint([0.0, 0.0], [1.0, 1.0])
    g, ginv = curvature.fundamental_tensor(RANDERS, pt)

    def f2(yv):
        return float(metrics.f_squared(RANDERS, [0.0, 0.0], list(yv)))

    for a in range(2):
        for b in range(2):
            want = 0.5 * fd.fd_partial(f2, pt.y, [a, b], h=1e-2)
            assert abs(g[a, b] - want) <= 1e-5 * max(1.0, abs(want))
    assert np.max(np.abs(g @ ginv - np.eye(2))) <= 1e-10


def test_spray_vanishes_for_base_independent_metrics():
    for pt in _samples(2, 5, 0):
        assert np.max(np.abs(curvature.spray(RANDERS, pt))) == 0.0


def test_spray_against_hand_christoffel():
    pt = TangentPoint([1.0, 0.3], [1.0, 1.0])
    G = curvature.spray(RIEMANN, pt)
    # Gamma^2_{12} = x1/(1+x1^2) and Gamma^1_{22} = -x1 at x1=1
    assert G[1] == pytest.approx(0.5, rel=1e-12)
    assert G[0] == pytest.approx(-0.5, rel=1e-12)


def test_spray_is_positively_2_homogeneous():
    for pt in _samples(2, 5, 1):
        g1 = curvature.spray(RIEMANN, pt)
        g2 = curvature.spray(RIEMANN, TangentPoint(pt.x, 2.0 * pt.y))
        assert np.max(np.abs(g2 - 4.0 * g1)) <= 1e-10 * _norm_scale(g1)


def test_cartan_zero_for_riemannian_and_deicke():
    for pt in _samples(2, 5, 2):
        b = curvature_bundle(RIEMANN, pt)
        assert np.max(np.abs(b.cartan)) <= 1e-12
        assert np.max(np.abs(b.mean_cartan)) <= 1e-12


def test_cartan_randers_matches_finite_differences_of_g():
    pt = TangentPoint([0.0, 0.0], [1.2, 0.7])
    C = curvature_bundle(RANDERS, pt).cartan

    def g_entry(a, b):
        def f(yv):
            return metrics.fiber_hessian(RANDERS, [0.0, 0.0], yv)[a, b]

        return f

    for a in range(2):
        for b in range(2):
            for c in range(2):
                want = 0.5 * fd.central_diff(g_entry(a, b), pt.y, c, 1e-2)
                assert abs(C[a, b, c] - want) <= 1e-5 * max(1.0, abs(want))


def test_raised_cartan_identity():
    for pt in _samples(2, 10, 3):
        mj = MetricJets(RANDERS, pt)
        direct = mj.cartan_raised_pair(0)
        from_raising = np.einsum("ap,bq,pqc->abc", mj.g_inv, mj.g_inv, mj.cartan)
        assert np.max(np.abs(direct - from_raising)) <= 1e-9


def test_berwald_zero_for_minkowski_and_riemannian():
    for pt in _samples(2, 5, 4):
        assert np.max(np.abs(curvature.berwald(RANDERS, pt))) == 0.0
        assert np.max(np.abs(curvature.berwald(RIEMANN, pt))) <= 1e-12


def test_landsberg_zero_when_berwald_zero():
    for pt in _samples(2, 5, 5):
        b = curvature_bundle(RANDERS, pt)
        assert np.max(np.abs(b.cartan)) > 1e-3  # genuinely non-Riemannian
        assert np.max(np.abs(b.landsberg)) == 0.0
        assert np.max(np.abs(b.mean_landsberg)) == 0.0
        br = curvature_bundle(RIEMANN, pt)
        assert np.max(np.abs(br.landsberg)) <= 1e-12


NONTRIVIAL = randers_metric(
    2,
    [["1+0.2*x2^2", "0"], ["0", "1+0.3*x1^2"]],
    ["0.4", "0.1*x1"],
)


def test_total_symmetry_and_euler_contractions():
    for pt in _samples(2, 10, 6):
        b = curvature_bundle(NONTRIVIAL, pt)
        for tensor in (b.cartan, b.landsberg):
            scale = _norm_scale(tensor)
            for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
                assert np.max(np.abs(tensor - tensor.transpose(perm))) <= 1e-9 * scale
        y = pt.y
        assert np.max(np.abs(np.einsum("abc,a->bc", b.cartan, y))) <= 1e-9 * _norm_scale(b.cartan)
        assert np.max(np.abs(np.einsum("abc,a->bc", b.landsberg, y))) <= 1e-9 * _norm_scale(b.landsberg)
        assert np.max(np.abs(np.einsum("lbcd,b->lcd", b.berwald, y))) <= 1e-9 * _norm_scale(b.berwald)


def test_trace_identities_recomputed_independently():
    for pt in _samples(2, 5, 7):
        b = curvature_bundle(NONTRIVIAL, pt)
        d = 2
        for a in range(d):
            i_a = sum(b.cartan[a, i, j] * b.g_inv[i, j] for i in range(d) for j in range(d))
            j_a = sum(b.landsberg[a, i, j] * b.g_inv[i, j] for i in range(d) for j in range(d))
            assert b.mean_cartan[a] == pytest.approx(i_a, rel=1e-12, abs=1e-12)
            assert b.mean_landsberg[a] == pytest.approx(j_a, rel=1e-12, abs=1e-12)


def test_lowered_inverse_cartan_contractions():
    # exact consequences of y_l g^{lp} = y^p:
    #   y_l C^{lp}_k = 0
    #   y_l C^{lp}_{k;j} = -C^p_{kj}
    #   y_l C^{lp}_{k;j;i} = -C^p_{kj;i} - g_{li} C^{lp}_{k;j}
    for pt in _samples(2, 10, 8):
        mj = MetricJets(NONTRIVIAL, pt)
        ylow = mj.y_lower
        c1 = np.einsum("l,lpk->pk", ylow, mj.cartan_raised_pair(0))
        assert np.max(np.abs(c1)) <= 1e-8
        c2 = np.einsum("l,lpkj->pkj", ylow, mj.cartan_raised_pair(1)) + mj.cartan_raised_one
        assert np.max(np.abs(c2)) <= 1e-8
        c3 = (
            np.einsum("l,lpkji->pkji", ylow, mj.cartan_raised_pair(2))
            + mj.cartan_raised_one_vertical
            + np.einsum("li,lpkj->pkji", mj.g, mj.cartan_raised_pair(1))
        )
        assert np.max(np.abs(c3)) <= 1e-8


def test_homogeneity_degrees_of_bundle():
    for pt in _samples(2, 5, 9):
        b1 = curvature_bundle(NONTRIVIAL, pt)
        b2 = curvature_bundle(NONTRIVIAL, TangentPoint(pt.x, 2.0 * pt.y))
        checks = [
            (b2.g, b1.g),
            (b2.cartan, 0.5 * b1.cartan),
            (b2.berwald, 0.5 * b1.berwald),
            (b2.landsberg, b1.landsberg),
            (b2.mean_cartan, 0.5 * b1.mean_cartan),
        ]
        for got, want in checks:
            assert np.max(np.abs(got - want)) <= 1e-10 * _norm_scale(want)


def test_degenerate_hessian_raises():
    flat = custom_metric(2, "(y1+y2)^2")
    with pytest.raises(DegeneratePointError):
        curvature.fundamental_tensor(flat, TangentPoint([0.0, 0.0], [1.0, 0.5]))


def test_berwald_nonzero_with_base_dependence_matches_fd():
    spec = NONTRIVIAL
    pt = TangentPoint([0.4, -0.3], [1.0, 0.8])
    B = curvature.berwald(spec, pt)
    assert np.max(np.abs(B)) > 1e-4

    def spray_entry(l):
        def f(yv):
            return curvature.spray(spec, TangentPoint(pt.x, yv))[l]

        return f

    for l in range(2):
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    want = fd.fd_partial(spray_entry(l), pt.y, [i, j, k], h=1e-2)
                    assert abs(B[l, i, j, k] - want) <= 1e-3 * max(1.0, abs(want))
