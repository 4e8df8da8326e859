import numpy as np
import pytest

from finslertwist import metrics
from finslertwist.metrics import (
    MetricDefinitionError,
    TangentPoint,
    custom_metric,
    euclidean_metric,
    f_squared,
    fiber_hessian,
    homogeneity_check,
    randers_metric,
    riemannian_metric,
    validate_strong_convexity,
)


RANDERS = randers_metric(2, [["1", "0"], ["0", "1"]], ["0.5", "0"])


def _sphere_samples(dim, count, seed, split=None):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        y = rng.standard_normal(dim)
        y /= np.linalg.norm(y)
        out.append(TangentPoint(rng.uniform(-1, 1, dim), y * rng.uniform(0.5, 2.0), split=split))
    return out


def test_euclidean_f_squared():
    assert f_squared(euclidean_metric(2), [0.0, 0.0], [3.0, 4.0]) == 25.0


def test_randers_closed_form():
    assert f_squared(RANDERS, [0.0, 0.0], [1.0, 0.0]) == pytest.approx(2.25, rel=1e-15)


def test_riemannian_direct_substitution():
    ri = riemannian_metric(2, [["1", "0"], ["0", "x1^2+1"]])
    assert f_squared(ri, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0, rel=1e-15)


def test_convexity_euclidean_identity_hessian():
    eu = euclidean_metric(3)
    samples = _sphere_samples(3, 5, 1)
    report = validate_strong_convexity(eu, samples)
    assert report.all_passed
    for pt in samples:
        assert np.allclose(fiber_hessian(eu, pt.x, pt.y), np.eye(3))


def test_convexity_randers_passes():
    report = validate_strong_convexity(RANDERS, _sphere_samples(2, 20, 2))
    assert report.all_passed
    assert all(c.min_eigenvalue > 0 for c in report.checks)


def test_convexity_indefinite_custom_fails_everywhere():
    bad = custom_metric(2, "y1^2-y2^2")
    report = validate_strong_convexity(bad, _sphere_samples(2, 10, 3))
    assert not report.all_passed
    assert all(not c.passed for c in report.checks)


def test_convexity_rejects_large_one_form():
    wide = randers_metric(2, [["1", "0"], ["0", "1"]], ["1.5", "0"])
    report = validate_strong_convexity(wide, _sphere_samples(2, 3, 4))
    assert all(not c.passed for c in report.checks)
    assert all(c.error for c in report.checks)


def test_homogeneity_euclidean_exact():
    pt = TangentPoint([0.0, 0.0], [1.0, 2.0])
    assert homogeneity_check(euclidean_metric(2), pt, [2.0]) == 0.0


def test_homogeneity_randers():
    pt = TangentPoint([0.3, -0.2], [1.0, 0.4])
    assert homogeneity_check(RANDERS, pt, [0.5, 2.0, 3.0]) <= 1e-12


def test_homogeneity_rational_custom():
    ratio = custom_metric(2, "y1^4/(y1^2+y2^2)+y2^2")
    pt = TangentPoint([0.0, 0.0], [0.7, 1.1])
    assert homogeneity_check(ratio, pt, [2.0]) <= 1e-12


def test_euler_identities():
    from finslertwist import jets

    for spec in (RANDERS, riemannian_metric(2, [["1", "0"], ["0", "x1^2+1"]])):
        for pt in _sphere_samples(2, 10, 5):
            ctx = jets.jet_context(("y", "y"), 0, 2)
            yj = [jets.lift_variable(ctx, a, pt.y[a]) for a in range(2)]
            F2 = spec.f_squared([float(v) for v in pt.x], yj)
            contracted = sum(pt.y[a] * F2.partial([1 if b == a else 0 for b in range(2)]) for a in range(2))
            assert contracted == pytest.approx(2.0 * F2.value, rel=1e-10)
            hess = fiber_hessian(spec, pt.x, pt.y)
            assert pt.y @ hess @ pt.y == pytest.approx(F2.value, rel=1e-10)


def test_riemannian_hessian_is_fiber_independent():
    ri = riemannian_metric(2, [["1", "x1*x2"], ["0", "x1^2+1"]])
    x = [0.4, 0.8]
    h1 = fiber_hessian(ri, x, [1.0, 0.2])
    h2 = fiber_hessian(ri, x, [-0.3, 1.4])
    assert np.max(np.abs(h1 - h2)) <= 1e-12


def test_tangent_point_slit_checks():
    pt = TangentPoint([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], split=2)
    assert not pt.slit_ok()
    ok = TangentPoint([0.0] * 4, [1.0, 0.0, 0.5, 0.0], split=2)
    assert ok.slit_ok()
    assert np.array_equal(ok.y1, [1.0, 0.0])
    assert np.array_equal(ok.y2, [0.5, 0.0])


def test_definition_errors():
    with pytest.raises(MetricDefinitionError):
        riemannian_metric(2, [["1", "0"]])
    with pytest.raises(MetricDefinitionError):
        randers_metric(2, [["1", "0"], ["0", "1"]], ["0.5"])
    with pytest.raises(MetricDefinitionError):
        euclidean_metric(0)
    with pytest.raises(MetricDefinitionError):
        TangentPoint([0.0, 0.0], [1.0])
