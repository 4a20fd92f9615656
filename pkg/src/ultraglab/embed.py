"""Compactly supported distributions and their mollified embeddings.

A distribution is a finite sum of atoms: derivatives of deltas, unit steps,
sampled densities and series terms a_gamma D^gamma f_gamma.  The embedding
convolves each atom with phi_eps (method J0) or with the log-cutoff
mollifier rho_eps (method J).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.interpolate import make_interp_spline

from . import asymptotics as asy
from .errors import InsufficientData, SeriesBoundViolation, SupportError
from .gevrey import MAX_DERIVATIVE, log_cutoff
from .nets import PATCH_HALF_WIDTH, Box, Net, interval, patch_points_for

WORKING_BOX = Box((-4.0,), (4.0,), (4096,))
ERROR_BOX = Box((-1.0,), (1.0,), (4096,))
GAMMA_CAP = 8
TAIL_TERMS = 12
ERROR_FLOOR = 1e-15


@dataclass(frozen=True)
class DeltaDeriv:
    order: int = 0
    location: float = 0.0
    coeff: complex = 1.0


@dataclass(frozen=True)
class Jump:
    location: float = 0.0
    coeff: complex = 1.0


@dataclass(frozen=True)
class Density:
    values: np.ndarray
    box: Box


@dataclass(frozen=True)
class SeriesTerm:
    gamma: int
    a_gamma: complex
    f_gamma: np.ndarray
    box: Box


@dataclass(frozen=True)
class SeriesBound:
    c: float
    h: float
    sigma: float
    M: float


@dataclass
class DistributionExpr:
    atoms: list
    support_box: Box
    bound: SeriesBound = None

    def __post_init__(self):
        lo, hi = self.support_box.lo[0], self.support_box.hi[0]
        for a in self.atoms:
            if isinstance(a, (DeltaDeriv, Jump)):
                if not lo <= a.location <= hi:
                    raise SupportError(f"atom at {a.location} outside the support box")
            elif not self.support_box.contains_box(_nonzero_box(a)):
                raise SupportError("sampled atom is not supported in the support box")
        if self.series_terms():
            self.check_bound()

    def series_terms(self):
        return [a for a in self.atoms if isinstance(a, SeriesTerm)]

    def check_bound(self):
        """Validate |a_gamma| <= c h^gamma / (gamma!)^sigma and sup|f_gamma| <= M."""
        if self.bound is None:
            raise SeriesBoundViolation("series terms need a declared (c, h, sigma, M)")
        b = self.bound
        for t in self.series_terms():
            lim = b.c * b.h**t.gamma / math.factorial(t.gamma) ** b.sigma
            if abs(t.a_gamma) > lim * (1 + 1e-12):
                raise SeriesBoundViolation(f"|a_{t.gamma}| = {abs(t.a_gamma):.3g} exceeds {lim:.3g}")
            if np.max(np.abs(t.f_gamma)) > b.M * (1 + 1e-12):
                raise SeriesBoundViolation(f"sup|f_{t.gamma}| exceeds M = {b.M}")

    @classmethod
    def from_config(cls, spec):
        """Build from a JSON-style dict (``atoms`` list and ``support`` [lo, hi])."""
        from .gevrey import radial_taper
        atoms = []
        for a in spec["atoms"]:
            kind = a["type"]
            if kind == "delta":
                atoms.append(DeltaDeriv(int(a.get("order", 0)), float(a.get("location", 0.0)),
                                        complex(a.get("coeff", 1.0))))
            elif kind == "jump":
                atoms.append(Jump(float(a.get("location", 0.0)), complex(a.get("coeff", 1.0))))
            elif kind == "bump_density":
                box = Box((a["box"][0],), (a["box"][1],), (int(a.get("n", 4096)),))
                x = box.axis(0)
                vals = a.get("coeff", 1.0) * radial_taper(x - a.get("center", 0.0), a["r_inner"],
                                                          a["r_outer"], a.get("sigma", 2.0))
                atoms.append(Density(vals.astype(complex), box))
            else:
                raise SupportError(f"unknown atom type {kind!r}")
        lo, hi = spec["support"]
        return cls(atoms, interval(float(lo), float(hi)))


def _nonzero_box(atom):
    v = atom.values if isinstance(atom, Density) else atom.f_gamma
    x = atom.box.axis(0)
    nz = np.flatnonzero(np.abs(v) > 0)
    if nz.size == 0:
        return interval(float(x[0]), float(x[0]))
    return interval(float(x[nz[0]]), float(x[nz[-1]]))


class _SpectralConvolver:
    """(D^gamma f) * phi_eps and its derivatives for a sampled f, via padded FFT."""

    def __init__(self, values, box, moll):
        self.box, self.moll = box, moll
        n = box.n[0]
        self.N = 2 * n
        self.h = box.dx[0]
        self.x = box.lo[0] + self.h * np.arange(self.N)
        self.k = 2 * np.pi * np.fft.fftfreq(self.N, self.h)
        self.F = np.fft.fft(np.asarray(values, dtype=complex), self.N)
        self._cache = {}

    def spline(self, eps, order, gamma=0):
        key = (float(eps), order + gamma)
        if key not in self._cache:
            mult = (1j * self.k) ** (order + gamma) * self.moll.phi_hat(eps * self.k)
            g = np.fft.ifft(self.F * mult)
            self._cache[key] = (make_interp_spline(self.x, g.real, k=5),
                                make_interp_spline(self.x, g.imag, k=5))
            if len(self._cache) > 64:
                self._cache.pop(next(iter(self._cache)))
        return self._cache[key]

    def __call__(self, eps, x, order=0, gamma=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        inside = (x >= self.x[0]) & (x <= self.x[-1])
        re, im = self.spline(eps, order, gamma)
        out[inside] = re(x[inside]) + 1j * im(x[inside])
        return out


@dataclass
class EmbeddingReport:
    net: Net
    method: str
    per_alpha_growth: dict
    notes: list = field(default_factory=list)

    @property
    def moderate(self):
        return all(f.sign < 0 or f.k <= asy.DEFAULT_POLICY.k_cap for f in self.per_alpha_growth.values())


def _check_inside(T, box):
    if not (box.lo[0] < T.support_box.lo[0] and T.support_box.hi[0] < box.hi[0]):
        raise SupportError("distribution support must lie strictly inside the working box")


def _atom_terms(T, moll):
    """Callables term(eps, x, order) for each atom convolved with phi_eps."""
    terms, centers = [], []
    for a in T.atoms:
        if isinstance(a, DeltaDeriv):
            if a.order > MAX_DERIVATIVE:
                raise SupportError(f"delta derivatives are tabulated up to order {MAX_DERIVATIVE}")

            def t(eps, x, k=0, a=a):
                if a.order + k > MAX_DERIVATIVE:
                    return np.full(np.shape(x), np.nan + 0j)
                return a.coeff * moll.phi((x - a.location) / eps, a.order + k) / eps ** (a.order + k + 1)
            terms.append(t)
            centers.append(a.location)
        elif isinstance(a, Jump):
            def t(eps, x, k=0, a=a):
                return a.coeff * moll.phi((x - a.location) / eps, k - 1) / eps**k
            terms.append(t)
            centers.append(a.location)
        elif isinstance(a, Density):
            conv = _SpectralConvolver(a.values, a.box, moll)
            terms.append(lambda eps, x, k=0, conv=conv: conv(eps, x, k))
        else:
            conv = _SpectralConvolver(a.f_gamma, a.box, moll)
            terms.append(lambda eps, x, k=0, conv=conv, a=a: a.a_gamma * conv(eps, x, k, a.gamma))
    return terms, centers


def _embedding_net(T, moll, name, terms, centers, extra=None):
    R = moll.support_radius
    lo, hi = T.support_box.lo[0], T.support_box.hi[0]
    has_jump = any(isinstance(a, Jump) for a in T.atoms)

    def ev(eps, x):
        return sum(t(eps, x) for t in terms) + 0j

    def dp(alpha, eps, x):
        return sum(t(eps, x, alpha[0]) for t in terms) + 0j

    support = None if has_jump else (lambda eps: interval(lo - eps * R, hi + eps * R))
    return Net(name, 1, ev, dp, support, {"embedding": name, **(extra or {})},
               max_order=MAX_DERIVATIVE - max([a.order for a in T.atoms if isinstance(a, DeltaDeriv)] or [0]),
               features=(tuple(sorted(set(centers))),),
               scale=(lambda eps: eps * R / PATCH_HALF_WIDTH) if centers else None,
               patch_points=patch_points_for(moll) if centers else None,
               resolution=lambda eps: eps * moll.lobe)


def _growth(net, box, grid, model, max_order=2):
    fits = {}
    for a in range(max_order + 1):
        sups = [(e, net.sup_abs((a,), e, box)) for e in grid]
        fits[(a,)] = asy.fit_single_scale(sups, model)
    return fits


def embed_compact(T, moll, grid=asy.DEFAULT_GRID, box=WORKING_BOX, max_order=2):
    """J0: T * phi_eps."""
    _check_inside(T, box)
    terms, centers = _atom_terms(T, moll)
    net = _embedding_net(T, moll, "J0", terms, centers, {"sigma": moll.sigma})
    model = asy.scale_exponent(moll.sigma)
    return EmbeddingReport(net, "J0", _growth(net, box, grid, model, max_order))


def embed_cutoff(T, moll, cut=None, grid=asy.DEFAULT_GRID, box=WORKING_BOX, max_order=2):
    """J: T * rho_eps with rho_eps = phi_eps(x) cut(x |ln eps|).

    Point atoms are exact.  Sampled atoms take the J0 convolution minus
    a quadrature (mollifier grid in y) over the region where cut < 1."""
    _check_inside(T, box)
    cut = cut or log_cutoff(moll)
    R = moll.support_radius
    y = moll.x[np.abs(moll.x) <= R]
    wy = moll.box.dx[0]

    def rho(eps, z, k):
        # d^k/dz^k of phi_eps(z) cut(z |ln eps|) by Leibniz over spline derivatives
        L = abs(math.log(eps))
        if k == 0:
            return moll.phi(z / eps) / eps * cut(z * L)
        out = 0.0
        for j in range(k + 1):
            h = 1e-16 ** (1.0 / (k - j + 2)) / L
            dc = _fd(lambda s: cut(s * L), z, k - j, h)
            out = out + math.comb(k, j) * moll.phi(z / eps, j) / eps ** (j + 1) * dc
        return out

    defects = {}

    def defect(eps):
        if eps not in defects:
            defects[eps] = _cut_defect(moll, cut, eps)
        return defects[eps]

    terms, centers = [], []
    for a in T.atoms:
        if isinstance(a, DeltaDeriv):
            terms.append(lambda eps, x, k=0, a=a: a.coeff * rho(eps, x - a.location, a.order + k))
            centers.append(a.location)
        elif isinstance(a, Jump):
            def t(eps, x, k=0, a=a):
                if k > 0:
                    return a.coeff * rho(eps, x - a.location, k - 1)
                z = np.asarray(x - a.location, dtype=float) / eps
                return a.coeff * (moll.cdf(z) - defect(eps)(np.clip(z, -R, R)))
            terms.append(t)
            centers.append(a.location)
        else:
            vals = a.values if isinstance(a, Density) else a.a_gamma * a.f_gamma
            order = 0 if isinstance(a, Density) else a.gamma
            conv = _SpectralConvolver(vals, a.box, moll)
            sp = make_interp_spline(a.box.axis(0), vals, k=5)

            def t(eps, x, k=0, conv=conv, sp=sp, order=order, a=a):
                # J0 term minus the part of phi cut away at |y| >= 1/(eps |ln eps|)
                x = np.asarray(x, dtype=float)
                out = conv(eps, x, k, order)
                miss = 1.0 - cut(eps * y * abs(math.log(eps)))
                sel = miss > 0
                if not sel.any():
                    return out
                w = moll.phi(y[sel]) * miss[sel] * wy
                d = sp.derivative(order + k) if order + k else sp
                pts = x[..., None] - eps * y[sel]
                lo, hi = a.box.lo[0], a.box.axis(0)[-1]
                vals_ = np.where((pts >= lo) & (pts <= hi), d(np.clip(pts, lo, hi)), 0.0)
                return out - np.sum(w * vals_, axis=-1)
            terms.append(t)
    net = _embedding_net(T, moll, "J", terms, centers, {"sigma": moll.sigma,
                                                         "cut": [cut.r_inner, cut.r_outer]})
    if not any(isinstance(a, Jump) for a in T.atoms):
        lo, hi = T.support_box.lo[0], T.support_box.hi[0]
        net.support = lambda eps: interval(lo - min(eps * R, cut.r_outer / abs(math.log(eps))),
                                           hi + min(eps * R, cut.r_outer / abs(math.log(eps))))
    model = asy.scale_exponent(moll.sigma)
    return EmbeddingReport(net, "J", _growth(net, box, grid, model, max_order))


def _cut_defect(moll, cut, eps):
    """Antiderivative from -R of phi(y) (1 - cut(eps y |ln eps|))."""
    R = moll.support_radius
    y = np.linspace(-R, R, 16 * int(2 * R / moll.box.dx[0]) + 1)
    g = moll.phi(y) * (1.0 - cut(eps * y * abs(math.log(eps))))
    anti = make_interp_spline(y, g, k=5).antiderivative()
    return lambda z: anti(z) - anti(-R)


def _fd(fn, z, k, h):
    if k == 0:
        return fn(z)
    w = [math.comb(k, j) * (-1) ** j for j in range(k + 1)]
    return sum(wj * fn(z + (k / 2 - j) * h) for j, wj in enumerate(w)) / h**k


def discrepancy(T, moll, grid=asy.DEFAULT_GRID, box=WORKING_BOX, cut=None):
    """Scalar net sup|J(T) - J0(T)| over the box."""
    a = embed_compact(T, moll, grid, box, max_order=0).net
    b = embed_cutoff(T, moll, cut, grid, box, max_order=0).net
    vals = []
    for e in grid:
        axes = a.sample_axes(box, e)
        vals.append((e, float(np.max(np.abs(a.value(e, axes[0]) - b.value(e, axes[0]))))))
    return vals


def embedding_error(f, moll, grid=asy.DEFAULT_GRID, box=ERROR_BOX, order=0,
                    floor=ERROR_FLOOR):
    """Fit of sup|D^order (f * phi_eps - f)| over the grid.

    ``f`` is a callable (e.g. a CutoffProfile) or samples on ``box``.  The
    difference is formed spectrally: its transform is f^(xi) (phi^(eps xi) - 1).
    Values below ``floor * sup|f| * max|xi|**order`` are roundoff (the
    transform's rounding error amplified by xi**order) and count as saturated.
    When only two points stay above it the rate is their secant.
    """
    x = box.axis(0)
    vals = np.asarray(f(x) if callable(f) else f, dtype=complex)
    if vals.shape != x.shape:
        raise SupportError("samples must match the box grid")
    if np.abs(vals[[0, -1]]).max() > 0:
        raise SupportError("f must vanish at the box edges")
    k = 2 * np.pi * np.fft.fftfreq(x.size, box.dx[0])
    F = np.fft.fft(vals) * (1j * k) ** order
    ref = float(np.abs(vals).max()) * float(np.abs(k).max()) ** order
    model = asy.scale_exponent(moll.sigma)
    rows = [(e, float(np.abs(np.fft.ifft(F * (moll.phi_hat(e * k) - 1))).max())) for e in grid]
    if ref == 0 or all(v == 0 for _, v in rows):
        return asy.AsymptoticFit(-asy.INF, asy.INF, -1, 0.0, len(rows))
    pol = asy.Policy(floor=floor * ref)
    usable = [(e, v) for e, v in rows if v >= pol.floor]
    nsat = len(rows) - len(usable)
    if len(usable) == 2:
        (e0, v0), (e1, v1) = usable
        t0, t1 = model.feature([e0, e1])
        slope = (math.log(v1) - math.log(v0)) / (t1 - t0)
        return asy.AsymptoticFit(math.log(v0) - slope * t0, abs(slope), 1 if slope >= 0 else -1,
                                 0.0, nsat, slope, 2)
    if len(usable) < 2:
        raise InsufficientData("fewer than two error values above roundoff")
    return asy.fit_single_scale(rows, model, pol)


@lru_cache(maxsize=None)
def embedding_threshold():
    """Acceptance threshold for the order-0 embedding error rate (sigma = 2)."""
    data = json.loads(resources.files("ultraglab").joinpath("data/embedding_threshold.json").read_text())
    return data


def series_net(T, moll, grid=asy.DEFAULT_GRID, gamma_cap=GAMMA_CAP):
    """Truncated sum over series terms with |gamma| <= gamma_cap.

    The returned net carries ``tail_bound(eps)``: c M sum_{gamma > cap}
    h^gamma / (gamma!)^sigma eps^-gamma ||phi^(gamma)||_1.
    """
    T.check_bound()
    terms = [t for t in T.series_terms() if t.gamma <= gamma_cap]
    if not terms:
        raise SeriesBoundViolation("no series terms at or below gamma_cap")
    sub = DistributionExpr(terms, T.support_box, T.bound)
    convs = [(t, _SpectralConvolver(t.f_gamma, t.box, moll)) for t in sub.atoms]

    def ev(eps, x):
        return sum(t.a_gamma * c(eps, x, 0, t.gamma) for t, c in convs) + 0j

    def dp(alpha, eps, x):
        return sum(t.a_gamma * c(eps, x, alpha[0], t.gamma) for t, c in convs) + 0j

    b = T.bound
    norms = {g: float(np.sum(np.abs(moll.derivative_samples(g))) * moll.box.dx[0])
             for g in range(gamma_cap + 1, gamma_cap + TAIL_TERMS + 1)}

    def tail_bound(eps):
        return b.c * b.M * sum(b.h**g / math.factorial(g) ** b.sigma * eps**-g * n
                               for g, n in norms.items())

    R = moll.support_radius
    lo, hi = T.support_box.lo[0], T.support_box.hi[0]
    net = Net("series", 1, ev, dp, lambda eps: interval(lo - eps * R, hi + eps * R),
              {"embedding": "series", "gamma_cap": gamma_cap, "sigma": moll.sigma},
              max_order=6, resolution=lambda eps: eps * moll.lobe)
    net.tail_bound = tail_bound
    return net
