import math

import numpy as np
import pytest

from ultraglab import asymptotics as asy
from ultraglab.errors import BadBinCount, EmptyBin, GeometryError
from ultraglab.gevrey import CutoffProfile
from ultraglab.nets import Box, builtin_net, combine, constant_net, zero_net
from ultraglab.spectral import (DEFAULT_CONFIG, SpectralProfile, cone_partition, directional_profile,
                                local_transform, saturated_tail, spectrum_rows, windowed_spectrum)

EPS = [1e-2, 1e-3]


def test_partition_1d():
    p = cone_partition(1)
    assert [b.label for b in p.bins] == ["+", "-"]
    assert list(p.bin_of(np.array([3.0, -2.0, 0.0]))) == [0, 1, 0]
    with pytest.raises(BadBinCount):
        cone_partition(1, 4)


def test_partition_2d():
    p = cone_partition(2, 8)
    for b in p.bins:
        lo, hi = b.theta
        assert hi - lo == pytest.approx(math.pi / 4)
    assert p.bins[0].theta[0] == 0.0
    b = int(p.bin_of(np.array([1.0, 1.0])))
    lo, hi = p.bins[b].theta
    assert lo <= math.pi / 4 <= hi
    assert int(p.bin_of(np.array([1.0, 0.1]))) == 0
    assert p.opposite(0) == 4
    with pytest.raises(BadBinCount):
        cone_partition(2, 12)


def test_partition_covers_circle():
    for n in (8, 16, 32):
        p = cone_partition(2, n)
        ang = np.linspace(0, 2 * math.pi, 1000, endpoint=False)
        ids = p.bin_of(np.stack([np.cos(ang), np.sin(ang)], axis=-1))
        assert set(ids.tolist()) == set(range(n))
        assert p.bins[-1].theta[1] == pytest.approx(2 * math.pi)


def test_zero_net_spectrum():
    w = CutoffProfile(2.0, 0.5, 1.0, (0.0,))
    for prof in windowed_spectrum(zero_net(), w, EPS):
        assert prof.samples and all(m == 0 for _, _, m, _ in prof.samples)


def test_gaussian_transform_oracle():
    w = CutoffProfile(2.0, 10.0, 12.0, (0.0,))
    xi, F, _, _ = local_transform(builtin_net("gaussian"), w, 0.1)
    sel = (np.abs(xi) >= 0.5) & (np.abs(xi) <= 5.0)
    exact = math.sqrt(2 * math.pi) * np.exp(-xi[sel] ** 2 / 2)
    assert np.max(np.abs(F[sel] - exact) / exact) <= 1e-6


def test_cauchy_negative_bin_small():
    e = 1e-3
    w = CutoffProfile(2.0, 0.5, 1.0, (0.0,))
    xi, F, _, _ = local_transform(builtin_net("cauchy"), w, e)
    pos = (xi > 5) & (xi < 200)
    neg = (xi < -5) & (xi > -200)
    # one-sided oracle -2 pi i e^(-eps xi) on xi > 0
    assert np.median(np.abs(F[pos])) == pytest.approx(2 * math.pi, rel=0.2)
    prof = windowed_spectrum(builtin_net("cauchy"), w, [e])
    minus = sorted((x, m) for _, x, m, _ in prof[1].samples)
    mags = np.array([m for _, m in minus])
    x = np.array([x for x, _ in minus])
    # Gevrey leakage envelope of the window: log|F| falls at least linearly in |xi|^(1/2)
    slope = np.polyfit(np.sqrt(x[mags > 1e-12]), np.log(mags[mags > 1e-12]), 1)[0]
    assert slope < -0.5
    assert np.max(mags[x > 100]) < 1e-4 * 2 * math.pi


def test_window_outside_box():
    box = Box((-1.0,), (1.0,), (64,))
    w = CutoffProfile(2.0, 0.5, 1.0, (0.5,), box)
    with pytest.raises(GeometryError):
        windowed_spectrum(builtin_net("gaussian"), w, EPS)


def test_parseval():
    w = CutoffProfile(2.0, 0.25, 0.5, (0.1,))
    f = builtin_net("cauchy")
    for e in EPS:
        xi, F, _, h = local_transform(f, w, e)
        N = F.size
        M = int(math.ceil(w.r_outer / h))
        x = 0.1 + h * np.arange(-M, M + 1)
        g = w(x) * f.value(e, x)
        space = h * np.sum(np.abs(g) ** 2)
        spec = np.sum(np.abs(F) ** 2) / (N * h)
        assert spec == pytest.approx(space, rel=1e-10)


def test_linearity():
    w = CutoffProfile(2.0, 0.25, 0.5, (0.0,))
    f, g = builtin_net("cauchy"), builtin_net("cauchy", pole=0.1)
    for e in EPS:
        _, A, _, _ = local_transform(f, w, e)
        _, B, _, _ = local_transform(g, w, e)
        _, C, _, _ = local_transform(combine(f, g, "add"), w, e)
        assert np.max(np.abs(C - A - B)) <= 1e-12 * np.max(np.abs(C))


def test_shift_covariance():
    w = CutoffProfile(2.0, 0.25, 0.5, (0.0,))
    h = DEFAULT_CONFIG.h
    f0 = builtin_net("gaussian", center=0.0, width=0.1)
    f1 = builtin_net("gaussian", center=h, width=0.1)
    xi, A, _, _ = local_transform(f0, w, 0.1)
    _, B, _, _ = local_transform(f1, w.moved((h,)), 0.1)
    assert np.max(np.abs(B - A * np.exp(-1j * xi * h))) <= 1e-12 * np.max(np.abs(A))
    assert np.max(np.abs(np.abs(B) - np.abs(A))) <= 1e-12 * np.max(np.abs(A))


def test_directional_profile_rules():
    p = SpectralProfile(0, [(0.1, 2.0, 5.0, False)])
    assert directional_profile([p], 0) == [(0.1, 2.0, 5.0)]
    q = SpectralProfile(0, [(0.1, 2.0, 7.0, False), (0.1, 4.0, 1.0, True)])
    assert directional_profile([p, q], 0) == [(0.1, 2.0, 7.0)]
    with pytest.raises(EmptyBin):
        directional_profile([p], 1)


def test_saturated_tail():
    p = SpectralProfile(0, [(0.1, 2.0, 1.0, False), (0.1, 4.0, 0.0, True),
                            (0.01, 2.0, 1.0, False), (0.01, 4.0, 0.0, True)])
    assert saturated_tail([p], 0)
    p.samples.append((0.001, 4.0, 1.0, False))
    assert not saturated_tail([p], 0)


def test_delta_profile_flat_until_inverse_eps():
    d = builtin_net("mollified_delta")
    w = CutoffProfile(2.0, 0.5, 1.0, (0.0,))
    e = 1e-2
    for prof in windowed_spectrum(d, w, [e]):
        rows = [(x, m) for _, x, m, _ in prof.samples if x < 0.5 / e]
        mags = np.array([m for _, m in rows])
        assert len(rows) >= 4
        assert np.max(mags) / np.min(mags) < 1.01


def test_2d_spectrum_bins():
    f = builtin_net("mollified_heaviside", dim=2, axis=0)
    w = CutoffProfile(2.0, 0.25, 0.5, (0.0, 0.0))
    profs = windowed_spectrum(f, w, [1e-2])
    assert len(profs) == 8
    top = {p.bin: max(m for _, x, m, _ in p.samples if x > 100) for p in profs}
    # a jump across x1 = 0 radiates along the xi_1 axis: bins 0, 3, 4, 7
    assert min(top[b] for b in (0, 3, 4, 7)) > 100 * max(top[b] for b in (1, 2, 5, 6))


def test_spectrum_rows():
    w = CutoffProfile(2.0, 0.5, 1.0, (0.0,))
    rows = spectrum_rows("g", windowed_spectrum(builtin_net("gaussian"), w, EPS))
    assert rows[0][0] == "g" and rows[0][1] == [0.0]
    assert all(len(r) == 7 for r in rows)
