import math

import numpy as np
import pytest

from ultraglab import asymptotics as asy
from ultraglab.errors import DimMismatch, DomainError, GeometryError, UnknownBuiltin
from ultraglab.gevrey import CutoffProfile
from ultraglab.nets import (Box, EqualityMode, GenPoint, argmax_path, builtin_net, catalog,
                            classical_point, combine, compose_polynomial, constant_net, derivative,
                            equality_test, gen_point_equiv, interval, point_value, tensor, zero_net)

X = np.linspace(-2, 2, 801)
SUP_BOX = Box((-4.0,), (4.0,), (1024,))


def test_box_validation():
    with pytest.raises(GeometryError):
        Box((0.0,), (-1.0,), (8,))
    with pytest.raises(GeometryError):
        Box((0.0,), (1.0,), (6,))
    b = Box((-1.0,), (1.0,), (8,))
    assert b.dx == (0.25,)
    assert b.axis(0)[0] == -1.0 and b.axis(0)[-1] == 0.75


def test_builtin_values():
    assert builtin_net("gaussian").value(0.3, 0.0) == 1
    assert builtin_net("cauchy").value(0.1, 0.0) == pytest.approx(-10j)
    assert builtin_net("paper_sec3_counterexample").value(0.1, 0.0) == 0


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin):
        builtin_net("nope")


def test_catalog_sorted():
    names = [n for n, _ in catalog()]
    assert names == sorted(names)
    assert "cauchy" in names and "paper_sec3_counterexample" in names


def test_evaluation_is_deterministic():
    f = builtin_net("mollified_heaviside")
    a, b = f.value(0.01, X), f.value(0.01, X)
    assert np.array_equal(a, b)


def test_combine_identities():
    f = builtin_net("cauchy")
    assert np.array_equal(combine(f, zero_net(), "add").value(0.05, X), f.value(0.05, X))
    d = builtin_net("mollified_delta")
    sq = combine(d, d, "mul").value(0.05, X)
    assert np.allclose(sq, d.value(0.05, X) ** 2, rtol=0, atol=1e-12)


def test_combine_dim_mismatch():
    with pytest.raises(DimMismatch):
        combine(builtin_net("gaussian"), builtin_net("gaussian", dim=2), "add")


def test_mul_support_is_intersection():
    d = builtin_net("mollified_delta")
    b = builtin_net("gevrey_bump", center=0.5)
    s = combine(d, b, "mul").support(0.01)
    assert s.lo[0] >= max(d.support(0.01).lo[0], b.support(0.01).lo[0]) - 1e-15
    assert s.hi[0] <= min(d.support(0.01).hi[0], b.support(0.01).hi[0]) + 1e-15


def test_gaussian_times_cauchy_moderate(model2):
    h = combine(builtin_net("gaussian"), builtin_net("cauchy"), "mul")
    assert asy.classify_function_net(h, SUP_BOX, 2, model2).verdict is asy.Verdict.MODERATE


def test_derivative_gaussian_peak():
    assert abs(derivative(builtin_net("gaussian"), (1,)).value(0.1, 0.0)) < 1e-15


def test_derivative_heaviside_is_delta():
    e = 0.05
    x = np.linspace(-0.5, 0.5, 2001)
    dh = derivative(builtin_net("mollified_heaviside"), (1,)).value(e, x)
    assert np.max(np.abs(dh - builtin_net("mollified_delta").value(e, x))) <= 1e-6


def test_derivative_heaviside_fd_path():
    e = 0.05
    x = np.linspace(-0.5, 0.5, 401)
    h = builtin_net("mollified_heaviside")
    fd = h._fd((1,), e, [x], None)
    ref = builtin_net("mollified_delta").value(e, x)
    assert np.max(np.abs(fd - ref)) <= 1e-4 * np.max(np.abs(ref))


def test_fd_vs_analytic_gaussian():
    g = builtin_net("gaussian")
    x = Box((-8.0,), (8.0,), (4096,)).axis(0)
    for k in (1, 2, 3):
        fd = g._fd((k,), 0.1, [x], 16.0 / 4096)
        assert np.max(np.abs(fd - g.deriv((k,), 0.1, x))) <= 1e-6


def test_derivative_path_recorded():
    assert derivative(builtin_net("gaussian"), (1,)).provenance["path"] == "analytic"
    assert derivative(builtin_net("gevrey_bump"), (1,)).provenance["path"] == "finite_difference"
    with pytest.raises(DomainError):
        derivative(builtin_net("gaussian"), (0,))


def test_leibniz_consistency():
    f, g = builtin_net("gaussian", width=0.7), builtin_net("cauchy", pole=0.2)
    p = combine(f, g, "mul")
    e = 0.05
    for k in (1, 2, 3):
        direct = p.deriv((k,), e, X)
        expand = sum(math.comb(k, j) * f.deriv((j,), e, X) * g.deriv((k - j,), e, X) for j in range(k + 1))
        assert np.max(np.abs(direct - expand)) <= 1e-8 * max(1.0, np.max(np.abs(expand)))
        fd = p._fd((k,), e, [X], 1e-3)
        assert np.max(np.abs(fd - direct)) <= 1e-4 * np.max(np.abs(direct))


def test_compose_polynomial():
    d = builtin_net("mollified_delta")
    assert np.allclose(compose_polynomial(d, [0, 0, 1]).value(0.05, X), combine(d, d, "mul").value(0.05, X),
                       rtol=1e-12, atol=0)
    assert np.all(compose_polynomial(d, [1]).value(0.05, X) == 1)


def test_compose_polynomial_moderate(model2):
    f = compose_polynomial(builtin_net("gaussian"), [0, -2, 0, 1])
    assert asy.classify_function_net(f, SUP_BOX, 2, model2).verdict is asy.Verdict.MODERATE


def test_compose_derivative_faa_di_bruno():
    c = builtin_net("cauchy")
    p = compose_polynomial(c, [1, 0, 0, 2])
    e, x = 0.2, np.linspace(-1, 1, 101)
    ref = c.value(e, x)
    d1 = c.deriv((1,), e, x)
    d2 = c.deriv((2,), e, x)
    want = 12 * ref * d1**2 + 6 * ref**2 * d2
    assert np.allclose(p.deriv((2,), e, x), want, rtol=1e-10)


def test_tensor():
    t = tensor(builtin_net("gaussian"), builtin_net("cauchy"))
    assert t.value(0.1, 0.0, 0.0) == pytest.approx(-10j)
    h = builtin_net("mollified_heaviside", dim=2, axis=1)
    assert h.value(0.01, 5.0, 1.0) == pytest.approx(1.0)
    assert h.value(0.01, 1.0, -1.0) == pytest.approx(0.0, abs=1e-14)


def test_point_value_classical_counterexample():
    f = builtin_net("paper_sec3_counterexample")
    model = asy.scale_exponent(2.0)
    gn = point_value(f, classical_point(0.5), model)
    assert gn.classification.verdict is asy.Verdict.EXACT_ZERO


def test_point_value_generalized_counterexample():
    sigma = 1.5
    f = builtin_net("paper_sec3_counterexample", sigma=sigma)
    model = asy.scale_exponent(sigma)
    path = GenPoint(lambda e: np.array([0.5 * e]), True, interval(-1, 1))
    gn = point_value(f, path, model)
    for e, v in gn.values:
        assert v == pytest.approx(0.5 * e * math.exp(-e ** -model.s), rel=1e-12)
    assert gn.classification.verdict is asy.Verdict.NEGLIGIBLE
    assert gn.classification.k_hat == pytest.approx(1.0, abs=0.2)
    assert not gn.classification.is_negligible_at(2.0)


def test_point_value_gaussian_constant(model2):
    gn = point_value(builtin_net("gaussian"), classical_point(0.0), model2)
    assert all(v == 1 for _, v in gn.values)
    assert gn.classification.verdict is asy.Verdict.MODERATE
    assert gn.classification.k_hat == pytest.approx(0.0, abs=1e-9)


def test_point_value_out_of_witness(model2):
    from ultraglab.errors import OutOfDomain
    bad = GenPoint(lambda e: np.array([1 / e]), True, interval(-1, 1))
    with pytest.raises(OutOfDomain):
        point_value(builtin_net("gaussian"), bad, model2)


def test_gen_point_equiv(model2):
    x = GenPoint(lambda e: np.array([0.3]), True, interval(-1, 1))
    ok, cls = gen_point_equiv(x, x, model2)
    assert ok and cls.verdict is asy.Verdict.EXACT_ZERO
    y = GenPoint(lambda e: np.array([0.3 + math.exp(-3 * e ** -model2.s)]), True, interval(-1, 1))
    ok, cls = gen_point_equiv(x, y, model2)
    assert ok and cls.k_hat == pytest.approx(3.0, rel=1e-3)
    z = GenPoint(lambda e: np.array([0.3 + e]), True, interval(-1, 1))
    ok, cls = gen_point_equiv(x, z, model2)
    assert not ok


def test_point_value_independent_of_representative(model2):
    f = builtin_net("cauchy", pole=0.1)
    x = GenPoint(lambda e: np.array([0.3]), True, interval(-1, 1))
    y = GenPoint(lambda e: np.array([0.3 + math.exp(-3 * e ** -model2.s)]), True, interval(-1, 1))
    a, b = point_value(f, x, model2), point_value(f, y, model2)
    diff = [(e, va - vb) for (e, va), (_, vb) in zip(a.values, b.values)]
    assert asy.classify_scalar_net(diff, model2).verdict in (asy.Verdict.NEGLIGIBLE, asy.Verdict.EXACT_ZERO)


def test_argmax_witness_not_negligible():
    sigma = 1.5
    f = builtin_net("paper_sec3_counterexample", sigma=sigma)
    model = asy.scale_exponent(sigma)
    w = argmax_path(f, interval(-1.0, 1.0, 2048))
    assert not point_value(f, w, model).classification.is_negligible_at(2.0)


def test_tsense_range():
    with pytest.raises(DomainError):
        EqualityMode.tsense(1.5, 2.0)
    EqualityMode.tsense(5.0, 2.0)


TESTS = [CutoffProfile(2.0, 0.25, 0.5, (c,)) for c in (-0.2, 0.0, 0.3)]
EQ_BOX = Box((-2.0,), (2.0,), (1024,))


def test_equality_same_net(model2):
    f = builtin_net("cauchy")
    assert equality_test(f, f, EqualityMode.strong(), [], model2, EQ_BOX).holds


def test_equality_different_mollifiers(model2):
    a = builtin_net("mollified_delta", sigma=2.0)
    b = builtin_net("mollified_delta", sigma=3.0)
    assert equality_test(a, b, EqualityMode.associated(), TESTS, model2, EQ_BOX).holds
    assert not equality_test(a, b, EqualityMode.strong(), TESTS, model2, EQ_BOX).holds


def test_equality_hierarchy(model2):
    osc = builtin_net("decaying_oscillation", rate=2.0)
    g = builtin_net("gaussian")
    cases = [(g, combine(g, osc, "add")), (builtin_net("mollified_delta", sigma=2.0),
                                             builtin_net("mollified_delta", sigma=3.0))]
    modes = [EqualityMode.strong(), EqualityMode.tsense(5.0, 2.0), EqualityMode.tsense(2.0, 2.0),
             EqualityMode.associated()]
    for f, h in cases:
        held = [equality_test(f, h, m, TESTS, model2, EQ_BOX).holds for m in modes]
        # a stronger equality never holds without the weaker ones
        for i in range(len(held)):
            if held[i]:
                assert all(held[i:])
    assert all(equality_test(g, combine(g, osc, "add"), m, TESTS, model2, EQ_BOX).holds for m in modes)


def test_constant_net_shape():
    c = constant_net(2.0)
    assert c.value(0.1, X).shape == X.shape
    assert np.all(c.deriv((1,), 0.1, X) == 0)
