"""Regularity tests, singular cones and wave-front estimates.

A direction bin is singular at a point when the two-scale fit of the
localized spectrum fails: k2 below ``k2_min`` or residual above ``r_max``.
The local cone intersects the failing sets of a nested window family.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .errors import CoefficientNotRegular, DegenerateDesign, GeometryError, InsufficientData, PartitionMismatch, SupportError
from .gevrey import CutoffProfile
from .nets import combine, derivative
from .spectral import (DEFAULT_CONFIG, cone_partition, directional_profile, global_window,
                       saturated_tail, windowed_spectrum)


@dataclass(frozen=True)
class MicrolocalPolicy:
    k2_min: float = 0.2
    r_max: float = 0.5
    eps0: float = 1e-2
    nuisance: bool = True
    inner_cells: float = 8.0
    outer_cells: float = 16.0
    family: tuple = (1.0, 1.0 / 3.0, 1.0 / 9.0)
    bin_dilation: int = 1
    cell_dilation: int = 2
    k_cap: float = 50.0


DEFAULT_POLICY = MicrolocalPolicy()

_threads = 1


def set_threads(n):
    """Worker threads for per-probe work; results keep probe order."""
    global _threads
    _threads = max(1, int(n))


def _map(fn, items):
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(_threads) as ex:
        return list(ex.map(fn, items))


# stands in for a bin whose spectrum sank below the floor before it could be fitted
SATURATED_FIT = asy.TwoScaleFit(float("nan"), 0.0, 50.0, 0.0)


def fit_bin(rows, model, policy=DEFAULT_POLICY, floored=False):
    """(fails, fit) for one bin's (eps, xi, magnitude) rows.

    ``floored`` marks a spectrum that reached the noise floor below the top
    shell at every eps; its decay outruns the fitted law, so the residual
    gate is not applied."""
    try:
        fit = asy.fit_two_scale(rows, model, nuisance=policy.nuisance)
    except (InsufficientData, DegenerateDesign):
        if rows and len({x for _, x, _ in rows}) < 3 and len(rows) >= 6:
            # a spectrum pinned to very few shells is flat, not decaying
            return True, asy.TwoScaleFit(float("nan"), 0.0, 0.0, 0.0, len(rows))
        return False, SATURATED_FIT
    bad_shape = fit.residual_rms > policy.r_max and not floored
    return (fit.k2 < policy.k2_min or bad_shape), fit


def _fit_grid(grid, policy):
    return grid.below(policy.eps0) if hasattr(grid, "below") else [e for e in grid if e <= policy.eps0]


@dataclass
class RegularityVerdict:
    regular: bool
    fit: asy.TwoScaleFit
    failing_bins: list
    bin_fits: dict = field(default_factory=dict)


def regularity_test(f, grid, partition=None, model=None, policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG,
                    box=None):
    """Two-scale fit per bin of the spectrum of f under a unit plateau covering
    its support.  A net without compact support is localized to ``box``."""
    if f.support is None and box is None:
        raise SupportError(f"net {f.id!r} has no compact support")
    model = model or asy.scale_exponent(f.provenance.get("sigma", 2.0))
    partition = partition or cone_partition(f.dim)
    eps = list(_fit_grid(grid, policy))
    if f.support is None:
        window = _box_window(box, model.sigma)
        radius = float(np.max(np.subtract(box.hi, box.lo))) / 2
    else:
        window = global_window(f, eps)
        radius = max(float(np.max(np.subtract(f.support(e).hi, f.support(e).lo))) / 2 for e in eps)
    profiles = windowed_spectrum(f, window, eps, partition, cfg, radius=radius)
    fits, failing = {}, []
    for b in partition.bins:
        fails, fit = fit_bin(directional_profile(profiles, b.id), model, policy,
                            saturated_tail(profiles, b.id))
        fits[b.id] = fit
        if fails:
            failing.append(b.id)
    worst = min(fits.values(), key=lambda t: t.k2)
    return RegularityVerdict(not failing, worst, failing, fits)


def _box_window(box, sigma):
    c = tuple(0.5 * (np.asarray(box.lo) + np.asarray(box.hi)))
    r = float(np.min(np.subtract(box.hi, box.lo))) / 2
    return CutoffProfile(sigma, r / 2, r, c)


@dataclass
class ConeSet:
    partition: object
    members: frozenset
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.members = frozenset(self.members)
        if not self.members <= {b.id for b in self.partition.bins}:
            raise PartitionMismatch("cone members outside the partition")


def sigma_cone(f, grid, partition=None, model=None, policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG):
    partition = partition or cone_partition(f.dim)
    v = regularity_test(f, grid, partition, model, policy, cfg)
    return ConeSet(partition, v.failing_bins, v.bin_fits)


def window_family(x0, sigma, dim, policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG):
    c = tuple(float(v) for v in np.atleast_1d(x0))
    if len(c) != dim:
        raise GeometryError("probe point dimension differs from the net")
    return [CutoffProfile(sigma, policy.inner_cells * cfg.dx * s, policy.outer_cells * cfg.dx * s, c)
            for s in policy.family]


def local_cone(f, x0, grid, partition=None, model=None, policy=DEFAULT_POLICY,
               cfg=DEFAULT_CONFIG, box=None):
    """Bins failing for every window of the family (smallest window first)."""
    model = model or asy.scale_exponent(f.provenance.get("sigma", 2.0))
    partition = partition or cone_partition(f.dim)
    eps = list(_fit_grid(grid, policy))
    windows = window_family(x0, model.sigma, f.dim, policy, cfg)
    if box is not None:
        for w in windows:
            if not box.contains_box(w.support()):
                raise GeometryError(f"window of radius {w.r_outer} at {x0} leaves the box")
    members = {b.id for b in partition.bins}
    diag = {}
    for w in reversed(windows):
        profiles = windowed_spectrum(f, w, eps, partition, cfg)
        failing = set()
        for b in sorted(members):
            fails, fit = fit_bin(directional_profile(profiles, b), model, policy,
                                saturated_tail(profiles, b))
            diag[b] = fit
            if fails:
                failing.add(b)
        members &= failing
        if not members:
            break
    return ConeSet(partition, members, {b: diag[b] for b in members})


def probe_grid(center, half_cells, step_cells=1, dim=1, cfg=DEFAULT_CONFIG):
    offs = cfg.dx * step_cells * np.arange(-half_cells, half_cells + 1)
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if dim == 1:
        return c[0] + offs
    X, Y = np.meshgrid(c[0] + offs, c[1] + offs, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _points(probes):
    p = np.asarray(probes, dtype=float)
    return p.reshape(-1, 1) if p.ndim == 1 else p


def sing_support(f, probes, grid, partition=None, model=None, policy=DEFAULT_POLICY,
                 cfg=DEFAULT_CONFIG, box=None):
    pts = _points(probes)
    cones = _map(lambda p: local_cone(f, p, grid, partition, model, policy, cfg, box), pts)
    return [tuple(float(v) for v in p) for p, c in zip(pts, cones) if c.members]


@dataclass
class WaveFrontEstimate:
    entries: list
    diagnostics: dict
    grid: np.ndarray
    partition: object

    def points(self):
        return sorted({i for i, _ in self.entries})

    def point_coords(self):
        return [tuple(float(v) for v in self.grid[i]) for i in self.points()]

    def cone_at(self, i):
        return {b for j, b in self.entries if j == i}

    def bins(self):
        return {b for _, b in self.entries}

    def to_records(self):
        recs = []
        for i, b in self.entries:
            fit = self.diagnostics[(i, b)]
            bn = self.partition.bins[b]
            theta = list(bn.theta) if bn.theta is not None else [bn.sign]
            x = self.grid[i].tolist()
            recs.append({"x_index": int(i), "x": x[0] if len(x) == 1 else x, "bin": int(b),
                         "theta_range": theta, "k1": fit.k1, "k2": fit.k2,
                         "residual": fit.residual_rms})
        return recs


def wave_front(f, probes, grid, partition=None, model=None, policy=DEFAULT_POLICY,
               cfg=DEFAULT_CONFIG, box=None):
    partition = partition or cone_partition(f.dim)
    pts = _points(probes)
    entries, diag = [], {}
    cones = _map(lambda p: local_cone(f, p, grid, partition, model, policy, cfg, box), pts)
    for i, cone in enumerate(cones):
        for b in sorted(cone.members):
            entries.append((i, b))
            diag[(i, b)] = cone.diagnostics[b]
    return WaveFrontEstimate(entries, diag, pts, partition)


# -- cone arithmetic -----------------------------------------------------------

def _arc_bins(partition, a, b):
    """Bins met by the closed convex cone spanned by the representatives of a and b."""
    if partition.dim == 1:
        return {a} if a == b else set()
    ta = 0.5 * sum(partition.bins[a].theta)
    tb = 0.5 * sum(partition.bins[b].theta)
    d = (tb - ta + math.pi) % (2 * math.pi) - math.pi
    lo, hi = (ta, ta + d) if d >= 0 else (ta + d, ta)
    w = 2 * math.pi / partition.size
    out = set()
    for k in range(partition.size):
        s0, s1 = k * w, (k + 1) * w
        for shift in (-2 * math.pi, 0.0, 2 * math.pi):
            if s0 + shift <= hi and s1 + shift > lo:
                out.add(k)
    return out


def pair_sum(partition, a, b, dilation=1):
    """(bins of rep(a) + rep(b) cone with dilation, zero_flag)."""
    if b == partition.opposite(a):
        return set(), True
    return partition.dilate(_arc_bins(partition, a, b), dilation), False


@dataclass
class ConeSum:
    entries: set
    zero_flags: dict
    sum_only: set


def cone_sum(A, B, dilation=1):
    if A.partition != B.partition:
        raise PartitionMismatch("wave fronts use different partitions")
    if A.grid.shape != B.grid.shape or not np.allclose(A.grid, B.grid):
        raise PartitionMismatch("wave fronts use different probe grids")
    part = A.partition
    entries = set(A.entries) | set(B.entries)
    flags, only = {}, set()
    for i in sorted(set(A.points()) & set(B.points())):
        flag = False
        for a in A.cone_at(i):
            for b in B.cone_at(i):
                bins, z = pair_sum(part, a, b, dilation)
                flag = flag or z
                only |= {(i, k) for k in bins}
        flags[i] = flag
    return ConeSum(entries | only, flags, only)


def _included(est, ref_entries, partition, cells, bins, cfg=DEFAULT_CONFIG):
    """Entries of est not covered by ref within the spatial/bin tolerances."""
    bad = []
    pts = est.grid
    for i, b in est.entries:
        ok = False
        for j, c in ref_entries:
            if np.max(np.abs(pts[i] - pts[j])) <= cells * cfg.dx + 1e-12 and b in partition.dilate({c}, bins):
                ok = True
                break
        if not ok:
            bad.append((i, b))
    return bad


@dataclass
class CheckVerdict:
    status: str        # Passed, Failed or HypothesisFailed
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "Passed"


def wf_included(est, ref, policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG):
    bins = policy.bin_dilation if est.partition.dim > 1 else 0
    return _included(est, set(ref.entries), est.partition, policy.cell_dilation, bins, cfg)


def product_wavefront_check(f, g, probes, grid, partition=None, model=None,
                            policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG, box=None):
    partition = partition or cone_partition(f.dim)
    A = wave_front(f, probes, grid, partition, model, policy, cfg, box)
    B = wave_front(g, probes, grid, partition, model, policy, cfg, box)
    dil = policy.bin_dilation if partition.dim > 1 else 0
    cs = cone_sum(A, B, dil)
    details = {"wf_f": A, "wf_g": B, "cone_sum": cs,
               "tolerance": {"bins": dil, "cells": policy.cell_dilation}}
    if any(cs.zero_flags.values()):
        details["zero_points"] = [i for i, z in cs.zero_flags.items() if z]
        return CheckVerdict("HypothesisFailed", details)
    fg = combine(f, g, "mul")
    C = wave_front(fg, probes, grid, partition, model, policy, cfg, box)
    bad = _included(C, cs.entries, partition, policy.cell_dilation, dil, cfg)
    details.update({"wf_fg": C, "violations": bad})
    return CheckVerdict("Passed" if not bad else "Failed", details)


def pdo_wavefront_check(f, coeffs, probes, grid, partition=None, model=None,
                        policy=DEFAULT_POLICY, cfg=DEFAULT_CONFIG, box=None, wf_f=None):
    """WF(sum a_alpha d^alpha f) against WF(f) for regular coefficients a_alpha.

    ``wf_f`` reuses an estimate of WF(f) on the same probes."""
    partition = partition or cone_partition(f.dim)
    for alpha, a in coeffs:
        if a.support is not None:
            ok = regularity_test(a, grid, partition, model, policy, cfg).regular
        else:
            ok = not sing_support(a, probes, grid, partition, model, policy, cfg, box)
        if not ok:
            raise CoefficientNotRegular(f"coefficient {a.id!r} of order {list(alpha)} is not regular")
    terms = []
    for alpha, a in coeffs:
        d = f if sum(alpha) == 0 else derivative(f, alpha)
        terms.append(combine(a, d, "mul"))
    Pf = terms[0]
    for t in terms[1:]:
        Pf = combine(Pf, t, "add")
    A = wf_f or wave_front(f, probes, grid, partition, model, policy, cfg, box)
    C = wave_front(Pf, probes, grid, partition, model, policy, cfg, box)
    bad = wf_included(C, A, policy, cfg)
    return CheckVerdict("Passed" if not bad else "Failed",
                        {"wf_f": A, "wf_pf": C, "violations": bad,
                         "tolerance": {"bins": policy.bin_dilation if partition.dim > 1 else 0,
                                       "cells": policy.cell_dilation}})
