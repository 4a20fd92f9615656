import itertools
import math

import numpy as np
import pytest

from ultraglab import asymptotics as asy
from ultraglab import microlocal as ml
from ultraglab.errors import CoefficientNotRegular, GeometryError, PartitionMismatch, SupportError
from ultraglab.nets import Box, builtin_net, combine, constant_net
from ultraglab.spectral import DEFAULT_CONFIG, cone_partition

G = asy.DEFAULT_GRID
DX = DEFAULT_CONFIG.dx
P1 = cone_partition(1)
PROBES = ml.probe_grid((0.0,), 3)


@pytest.fixture(scope="module")
def nets():
    return {"delta": builtin_net("mollified_delta"), "cauchy": builtin_net("cauchy"),
            "heaviside": builtin_net("mollified_heaviside"), "gaussian": builtin_net("gaussian"),
            "bump": builtin_net("gevrey_bump")}


@pytest.fixture(scope="module")
def wf_delta(nets):
    return ml.wave_front(nets["delta"], PROBES, G)


def test_regular_masked_gaussian(nets):
    v = ml.regularity_test(combine(nets["gaussian"], nets["bump"], "mul"), G)
    assert v.regular and not v.failing_bins


def test_delta_not_regular(nets):
    v = ml.regularity_test(nets["delta"], G)
    assert not v.regular
    assert sorted(v.failing_bins) == [0, 1]
    assert all(f.k2 < 0.1 for f in v.bin_fits.values())


def test_delta_squared_not_regular(nets):
    d = nets["delta"]
    assert not ml.regularity_test(combine(d, d, "mul"), G).regular


def test_regularity_needs_support(nets):
    with pytest.raises(SupportError):
        ml.regularity_test(nets["gaussian"], G)
    assert ml.regularity_test(nets["gaussian"], G, box=Box((-8.0,), (8.0,), (256,))).regular


def test_regularity_verdict_invariant(nets):
    for f in (nets["delta"], nets["bump"]):
        v = ml.regularity_test(f, G)
        assert v.regular == (not v.failing_bins)


def test_sigma_cones(nets):
    assert ml.sigma_cone(nets["delta"], G).members == {0, 1}
    assert ml.sigma_cone(combine(nets["cauchy"], nets["bump"], "mul"), G).members == {0}
    assert ml.sigma_cone(combine(nets["gaussian"], nets["bump"], "mul"), G).members == frozenset()


def test_local_cones(nets):
    assert ml.local_cone(nets["delta"], 0.0, G).members == {0, 1}
    assert ml.local_cone(nets["delta"], 0.5, G).members == frozenset()
    assert ml.local_cone(nets["cauchy"], 0.0, G).members == {0}


def test_local_cone_geometry(nets):
    box = Box((-1.0,), (1.0,), (32,))
    with pytest.raises(GeometryError):
        ml.local_cone(nets["delta"], 0.95, G, box=box)


def test_cone_set_members_checked():
    with pytest.raises(PartitionMismatch):
        ml.ConeSet(P1, {0, 5})


def test_sing_support(nets, wf_delta):
    pts = ml.sing_support(nets["delta"], PROBES, G)
    assert pts and all(abs(p[0]) <= 2 * DX + 1e-12 for p in pts)
    assert (0.0,) in pts
    assert ml.sing_support(nets["gaussian"], PROBES, G) == []
    both = ml.sing_support(combine(nets["delta"], nets["gaussian"], "add"), PROBES, G)
    assert (0.0,) in both and all(abs(p[0]) <= 2 * DX + 1e-12 for p in both)


def test_projection_property(nets, wf_delta):
    independent = ml.sing_support(nets["delta"], PROBES, G)
    assert wf_delta.point_coords() == independent


def test_compact_support_projection(nets, wf_delta):
    cone = ml.sigma_cone(nets["delta"], G).members
    assert wf_delta.bins() == set(cone)


@pytest.mark.parametrize("name,bins", [("delta", {0, 1}), ("cauchy", {0}), ("heaviside", {0, 1}),
                                       ("gaussian", set())])
def test_wave_fronts(nets, name, bins):
    wf = ml.wave_front(nets[name], PROBES, G)
    assert wf.bins() == bins
    if bins:
        idx = int(np.argmin(np.abs(PROBES)))
        assert wf.cone_at(idx) == bins
        assert all(abs(p[0]) <= 2 * DX + 1e-12 for p in wf.point_coords())


def test_wave_front_records(wf_delta):
    recs = wf_delta.to_records()
    assert recs and set(recs[0]) == {"x_index", "x", "bin", "theta_range", "k1", "k2", "residual"}
    assert wf_delta.entries == sorted(wf_delta.entries)


def test_threads_do_not_change_results(nets, wf_delta):
    ml.set_threads(4)
    try:
        wf = ml.wave_front(nets["delta"], PROBES, G)
    finally:
        ml.set_threads(1)
    assert wf.entries == wf_delta.entries
    assert wf.diagnostics == wf_delta.diagnostics


def _wf(entries, part, grid=None):
    grid = np.zeros((1, part.dim)) if grid is None else grid
    return ml.WaveFrontEstimate(sorted(entries), {}, grid, part)


def test_cone_sum_1d():
    s = ml.cone_sum(_wf([(0, 0)], P1), _wf([(0, 0)], P1), dilation=0)
    assert s.sum_only == {(0, 0)} and s.zero_flags == {0: False}
    s = ml.cone_sum(_wf([(0, 0), (0, 1)], P1), _wf([(0, 0), (0, 1)], P1), dilation=0)
    assert s.zero_flags[0]


def test_cone_sum_partition_mismatch():
    with pytest.raises(PartitionMismatch):
        ml.cone_sum(_wf([(0, 0)], P1), _wf([(0, 0)], cone_partition(2)))


def _brute(part, a, b):
    out = set()
    weights = np.linspace(0.05, 1.0, 20)
    for u in part.boundary_directions(a):
        for v in part.boundary_directions(b):
            for s, t in itertools.product(weights, weights):
                w = s * u + t * v
                if np.hypot(*w) > 1e-9:
                    out.add(int(part.bin_of(w)))
    return out


@pytest.mark.parametrize("nbins", [8, 16])
def test_cone_sum_2d_brute_force(nbins):
    part = cone_partition(2, nbins)
    near0 = [0, nbins - 1]
    near90 = [nbins // 4 - 1, nbins // 4]
    s = ml.cone_sum(_wf([(0, b) for b in near0], part), _wf([(0, b) for b in near90], part), dilation=1)
    assert not s.zero_flags[0]
    got = {b for _, b in s.sum_only}
    brute = set().union(*(_brute(part, a, b) for a in near0 for b in near90))
    assert brute <= got <= part.dilate(brute, 1)
    # the sum spans the quarter turn between the two cones
    assert set(range(nbins // 4)) <= got


def test_cone_sum_2d_opposite():
    part = cone_partition(2, 8)
    s = ml.cone_sum(_wf([(0, 1)], part), _wf([(0, 5)], part))
    assert s.zero_flags[0]


def test_product_cauchy_squared(nets):
    v = ml.product_wavefront_check(nets["cauchy"], nets["cauchy"], PROBES, G)
    assert v.status == "Passed"
    assert v.details["wf_fg"].bins() <= {0}


def test_product_delta_squared_hypothesis_fails(nets):
    v = ml.product_wavefront_check(nets["delta"], nets["delta"], PROBES, G)
    assert v.status == "HypothesisFailed"
    assert "wf_fg" not in v.details


def test_pdo_derivative_on_delta(nets, wf_delta):
    v = ml.pdo_wavefront_check(nets["delta"], [((1,), constant_net(1.0))], PROBES, G, wf_f=wf_delta)
    assert v.passed
    assert v.details["wf_pf"].bins() == wf_delta.bins()


def test_pdo_multiplier_and_identity(nets, wf_delta):
    g = builtin_net("gaussian", center=0.25, width=2.0)
    assert ml.pdo_wavefront_check(nets["delta"], [((0,), g)], PROBES, G, wf_f=wf_delta).passed
    v = ml.pdo_wavefront_check(nets["delta"], [((0,), constant_net(1.0))], PROBES, G, wf_f=wf_delta)
    assert v.passed and v.details["wf_pf"].entries == wf_delta.entries


def test_pdo_rejects_singular_coefficient(nets):
    with pytest.raises(CoefficientNotRegular):
        ml.pdo_wavefront_check(nets["gaussian"], [((0,), nets["delta"])], PROBES, G)


def test_fit_bin_flat_and_saturated():
    model = asy.scale_exponent(2.0)
    flat = [(e, x, 1.0) for e in (1e-2, 1e-3, 1e-4) for x in (4.0, 8.0)]
    fails, fit = ml.fit_bin(flat, model)
    assert fails and fit.k2 == 0.0
    fails, fit = ml.fit_bin([], model)
    assert not fails and fit is ml.SATURATED_FIT
    decay = [(e, x, math.exp(-2 * math.sqrt(x))) for e in (1e-2, 1e-3) for x in (4.0, 8.0, 16.0, 32.0)]
    fails, fit = ml.fit_bin(decay, model)
    assert not fails and fit.k2 == pytest.approx(2.0, rel=1e-6)
