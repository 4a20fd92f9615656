"""Windowed Fourier magnitudes grouped by direction bin and |xi| shell."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadBinCount, EmptyBin, GeometryError


@dataclass(frozen=True)
class DirectionBin:
    id: int
    label: str
    theta: tuple = None
    sign: int = None


@dataclass(frozen=True)
class ConePartition:
    dim: int
    bins: tuple

    @property
    def size(self):
        return len(self.bins)

    def bin_of(self, xi):
        """Bin ids of frequency vectors (shape (..., dim), or (...) for dim 1)."""
        xi = np.asarray(xi, dtype=float)
        if self.dim == 1:
            return np.where(xi >= 0, 0, 1)
        ang = np.mod(np.arctan2(xi[..., 1], xi[..., 0]), 2 * np.pi)
        idx = np.floor(ang / (2 * np.pi / self.size)).astype(int)
        return np.minimum(idx, self.size - 1)

    def representative(self, b):
        if self.dim == 1:
            return np.array([1.0 if b == 0 else -1.0])
        lo, hi = self.bins[b].theta
        a = 0.5 * (lo + hi)
        return np.array([math.cos(a), math.sin(a)])

    def boundary_directions(self, b):
        if self.dim == 1:
            return [self.representative(b)]
        lo, hi = self.bins[b].theta
        return [np.array([math.cos(a), math.sin(a)]) for a in (lo, hi)]

    def opposite(self, b):
        if self.dim == 1:
            return 1 - b
        return (b + self.size // 2) % self.size

    def dilate(self, members, width=1):
        if self.dim == 1 or width == 0:
            return set(members)
        return {(b + d) % self.size for b in members for d in range(-width, width + 1)}


def cone_partition(dim, bin_count=None):
    if dim == 1:
        if bin_count not in (None, 2):
            raise BadBinCount("dim 1 has exactly the bins + and -")
        return ConePartition(1, (DirectionBin(0, "+", sign=1), DirectionBin(1, "-", sign=-1)))
    if dim == 2:
        bin_count = 8 if bin_count is None else bin_count
        if bin_count not in (8, 16, 32):
            raise BadBinCount("dim 2 takes 8, 16 or 32 bins")
        w = 2 * math.pi / bin_count
        return ConePartition(2, tuple(DirectionBin(i, f"[{math.degrees(i * w):g},{math.degrees((i + 1) * w):g})deg",
                                                   theta=(i * w, (i + 1) * w)) for i in range(bin_count)))
    raise BadBinCount("dim must be 1 or 2")


@dataclass(frozen=True)
class SpectralConfig:
    dx: float = 1.0 / 16
    n: int = 4096
    oversample: int = 16
    shell_ratio: float = math.sqrt(2.0)
    low_cut: float = 4.0
    top_fraction: float = 0.8
    pad: int = 4
    pad_2d: int = 1
    max_samples_1d: int = 1 << 18
    max_samples_2d: int = 512
    rel_floor: float = 1e-13
    min_dual_steps: int = 4
    resolution_factor: float = 5.0

    @property
    def h(self):
        return self.dx / self.oversample

    @property
    def xi_min(self):
        return self.min_dual_steps * 2 * math.pi / (self.n * self.dx)

    @property
    def xi_top(self):
        return self.top_fraction * math.pi / self.h

    def shell_edges(self, radius=None):
        lo = self.xi_min if radius is None else max(self.xi_min, self.low_cut / radius)
        edges = [lo]
        while edges[-1] * self.shell_ratio <= self.xi_top:
            edges.append(edges[-1] * self.shell_ratio)
        return np.array(edges)


DEFAULT_CONFIG = SpectralConfig()


@dataclass
class SpectralProfile:
    bin: int
    samples: list = field(default_factory=list)   # (eps, xi, magnitude, saturated)
    window_center: tuple = None
    window: object = None


def _spacing(f, eps, half, cfg, cap):
    h = cfg.h
    if f.resolution is not None:
        h = min(h, f.resolution(eps) / cfg.resolution_factor)
    # 2M + 1 <= cap - 1 keeps the padded length a power of two
    return max(h, 2 * half / (cap - 2))


def local_transform(f, window, eps, cfg=DEFAULT_CONFIG):
    """Samples of F(window * f_eps) on a padded dual grid.

    Returns (xi, F, reference) where xi has shape (N,) in 1D or (N, N, 2)
    in 2D and ``reference`` bounds |F| (sup|w f| times the window area).
    """
    center = np.atleast_1d(np.asarray(window.center, dtype=float))
    half = window.r_outer
    cap = cfg.max_samples_1d if f.dim == 1 else cfg.max_samples_2d
    h = _spacing(f, eps, half, cfg, cap)
    M = int(math.ceil(half / h))
    offs = h * np.arange(-M, M + 1)
    axes = [c + offs for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    w = window(*mesh)
    inside = w > 0
    g = np.zeros(w.shape, dtype=complex)
    if inside.any():
        g[inside] = w[inside] * f.value(eps, *[m[inside] for m in mesh])
    ref = float(np.abs(g).max()) * float(w.sum()) * h ** f.dim
    pad = cfg.pad if f.dim == 1 else cfg.pad_2d
    N = 1 << int(math.ceil(math.log2(pad * g.shape[0])))
    k = 2 * np.pi * np.fft.fftfreq(N, h)
    if f.dim == 1:
        F = h * np.fft.fft(g, N) * np.exp(-1j * k * axes[0][0])
        return k, F, ref, h
    F = h * h * np.fft.fft2(g, (N, N))
    F *= np.exp(-1j * k * axes[0][0])[:, None] * np.exp(-1j * k * axes[1][0])[None, :]
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    return np.stack([K1, K2], axis=-1), F, ref, h


def global_window(f, eps_values, margin=1.05):
    """A unit plateau covering supp f_eps for every eps (compact support)."""
    from .gevrey import CutoffProfile
    boxes = [f.support(e) for e in eps_values]
    lo = np.min([b.lo for b in boxes], axis=0)
    hi = np.max([b.hi for b in boxes], axis=0)
    center = tuple(0.5 * (lo + hi))
    r = float(np.max(0.5 * (hi - lo))) * math.sqrt(f.dim)
    return CutoffProfile(2.0, r * margin, r * margin * 1.5, center)


def windowed_spectrum(f, window, grid, partition=None, cfg=DEFAULT_CONFIG, radius=None):
    """Per-bin shell maxima of |F(window * f_eps)| for every eps in grid.

    Shells start at max(xi_min, low_cut / radius) (radius defaults to the
    window's outer radius) and stop at xi_top.
    """
    from .nets import Box
    partition = partition or cone_partition(f.dim)
    if partition.dim != f.dim:
        raise GeometryError("partition and net dimensions differ")
    center = np.atleast_1d(np.asarray(window.center, dtype=float))
    if window.box is not None:
        wbox = Box(tuple(center - window.r_outer), tuple(center + window.r_outer), (2,) * f.dim)
        if not window.box.contains_box(wbox):
            raise GeometryError("window support leaves the box")
    edges = cfg.shell_edges(window.r_outer if radius is None else radius)
    profiles = {b.id: SpectralProfile(b.id, [], tuple(center), window) for b in partition.bins}
    nb, ns = partition.size, len(edges)
    geometry = {}
    for eps in grid:
        xi, F, ref, h = local_transform(f, window, eps, cfg)
        key = (F.shape, h)
        if key not in geometry:
            top = min(edges[-1] * cfg.shell_ratio, 0.8 * math.pi / h)
            r = np.abs(xi) if f.dim == 1 else np.hypot(xi[..., 0], xi[..., 1])
            sel = np.flatnonzero((r >= edges[0]) & (r < top))
            shell = np.floor(np.log(r.ravel()[sel] / edges[0]) / math.log(cfg.shell_ratio) + 1e-12).astype(int)
            bins = partition.bin_of(xi.reshape(-1, f.dim)[sel] if f.dim > 1 else xi[sel])
            ok = shell < ns
            geometry[key] = (sel[ok], bins[ok] * ns + shell[ok])
        idx, cell = geometry[key]
        flat = np.full(nb * ns, -1.0)
        np.maximum.at(flat, cell, np.abs(F.ravel()[idx]))
        table = flat.reshape(nb, ns)
        floor = cfg.rel_floor * ref
        for b in range(nb):
            for s in range(ns):
                v = table[b, s]
                if v < 0:
                    continue
                profiles[b].samples.append((float(eps), float(edges[s]), float(v), bool(v <= floor)))
    return [profiles[b.id] for b in partition.bins]


def directional_profile(profiles, bin_id):
    """Fit-ready (eps, xi, magnitude) rows for one bin, saturated rows dropped.

    Duplicate (eps, xi) rows are reduced by max."""
    rows = {}
    seen = False
    for p in profiles:
        if p.bin != bin_id:
            continue
        seen = True
        for e, x, m, sat in p.samples:
            if sat:
                continue
            key = (e, x)
            rows[key] = max(rows.get(key, 0.0), m)
    if not seen:
        raise EmptyBin(f"no profile for bin {bin_id}")
    return [(e, x, m) for (e, x), m in sorted(rows.items(), key=lambda kv: (-kv[0][0], kv[0][1]))]


def saturated_tail(profiles, bin_id):
    """True when the top shell of the bin sits at the floor for every eps."""
    top = {}
    for p in profiles:
        if p.bin != bin_id:
            continue
        for e, x, m, sat in p.samples:
            if e not in top or x >= top[e][0]:
                top[e] = (x, sat)
    return bool(top) and all(sat for _, sat in top.values())


def spectrum_rows(net_id, profiles):
    """CSV rows (net_id, x0, bin, eps, xi_shell, magnitude, saturated)."""
    out = []
    for p in profiles:
        for e, x, m, sat in p.samples:
            out.append((net_id, list(p.window_center), p.bin, e, x, m, int(sat)))
    return out
