"""Gevrey cutoffs and the band-limited mollifier.

The mollifier is the inverse transform of a Gevrey cutoff that equals 1
near the origin, so all of its moments of order >= 1 vanish.  Transforms
follow F(f)(xi_k) = dx * sum_j f(x_j) exp(-i x_j xi_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import make_interp_spline

from . import asymptotics as asy
from .errors import DerivativeUnavailable, DomainError, GeometryError, ToleranceError
from .nets import PATCH_HALF_WIDTH, Box, Net, interval, patch_points_for

TAPER_A = 1.0
MASS_TOL = 1e-8
MOMENT_TOL = 1e-6
TAIL_CUT = 1e-13
UPSAMPLE = 32
MAX_SPLINE_POINTS = 1 << 19
MAX_DERIVATIVE = 8


def _h(t, sigma, a=TAPER_A):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-a * t[m] ** (-1.0 / (sigma - 1.0)))
    return out


def taper(t, sigma):
    """Gevrey-sigma step: 1 for t <= 0, 0 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a, b = _h(1.0 - t, sigma), _h(t, sigma)
    return a / (a + b)


def radial_taper(r, r_inner, r_outer, sigma):
    if not 0 < r_inner < r_outer:
        raise GeometryError("need 0 < r_inner < r_outer")
    return taper((np.abs(r) - r_inner) / (r_outer - r_inner), sigma)


@dataclass(frozen=True)
class CutoffProfile:
    sigma: float
    r_inner: float
    r_outer: float
    center: tuple = (0.0,)
    box: Box = None

    def __call__(self, *coords):
        r2 = sum((np.asarray(c, dtype=float) - c0) ** 2 for c, c0 in zip(coords, self.center))
        return radial_taper(np.sqrt(r2), self.r_inner, self.r_outer, self.sigma)

    @property
    def dim(self):
        return len(self.center)

    @property
    def samples(self):
        return self(*self.box.mesh())

    def moved(self, center):
        return CutoffProfile(self.sigma, self.r_inner, self.r_outer,
                             tuple(float(c) for c in np.atleast_1d(center)), self.box)

    def scaled(self, factor):
        return CutoffProfile(self.sigma, self.r_inner * factor, self.r_outer * factor,
                             self.center, self.box)

    def support(self):
        return Box(tuple(c - self.r_outer for c in self.center),
                   tuple(c + self.r_outer for c in self.center), (2,) * self.dim)


def gevrey_bump(sigma, r_inner, r_outer, box, center=None):
    if not sigma > 1:
        raise DomainError("Gevrey cutoffs need sigma > 1")
    if not 0 < r_inner < r_outer:
        raise GeometryError("need 0 < r_inner < r_outer")
    center = tuple(float(c) for c in np.atleast_1d(center if center is not None else [0.0] * box.dim))
    prof = CutoffProfile(float(sigma), float(r_inner), float(r_outer), center, box)
    if not box.contains_box(prof.support()):
        raise GeometryError("cutoff support leaves the box")
    return prof


@dataclass
class MollifierDiagnostics:
    moment_errors: dict
    decay_fit: tuple
    s_sigma_norm: float
    rho_decay_nu: float = float("nan")
    moment_cap: int = 6


@dataclass
class Mollifier:
    sigma: float
    box: Box
    xi_inner: float
    xi_outer: float
    phi_samples: np.ndarray
    xi: np.ndarray
    phi_hat_samples: np.ndarray
    support_radius: float
    diagnostics: MollifierDiagnostics = None
    _splines: list = field(default_factory=list, repr=False)
    _cdf: object = field(default=None, repr=False)

    max_derivative = MAX_DERIVATIVE

    @property
    def x(self):
        return self.box.axis(0)

    @property
    def lobe(self):
        """Half period at the top frequency: the finest length in phi."""
        return math.pi / self.xi_outer

    def phi(self, y, order=0):
        """phi^(order)(y); order -1 gives the cumulative integral."""
        y = np.asarray(y, dtype=float)
        if order == -1:
            return self.cdf(y)
        if order > MAX_DERIVATIVE:
            raise DerivativeUnavailable(f"phi derivatives are tabulated up to {MAX_DERIVATIVE}")
        inside = np.abs(y) <= self.support_radius
        out = np.zeros(y.shape)
        out[inside] = self._splines[order](y[inside])
        return out

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        R = self.support_radius
        return np.where(y >= R, self._cdf_total, np.where(y <= -R, 0.0,
                        self._cdf(np.clip(y, -R, R)) - self._cdf_lo))

    def phi_hat(self, xi):
        return radial_taper(np.asarray(xi, dtype=float), self.xi_inner, self.xi_outer, self.sigma)

    def derivative_samples(self, order):
        k = np.fft.ifftshift(self.xi)
        spec = np.fft.ifftshift(self.phi_hat_samples) * (1j * k) ** order
        return _from_spectrum(spec, self.box)

    def moment(self, alpha):
        dx = self.box.dx[0]
        return float(dx * np.sum(self.x**alpha * self.phi_samples))


def _dual_grid(box):
    n, dx = box.n[0], box.dx[0]
    return 2 * np.pi * np.arange(-n // 2, n // 2) / (n * dx)


def _from_spectrum(spec_unshifted, box):
    """Inverse of the fixed forward convention on a grid starting at box.lo."""
    n, dx = box.n[0], box.dx[0]
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    vals = np.fft.ifft(spec_unshifted * np.exp(1j * k * box.lo[0])) / dx
    return vals.real


def forward_transform(values, box):
    """F(f)(xi_k) on the centred dual grid of ``box`` (1D)."""
    n, dx = box.n[0], box.dx[0]
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    spec = dx * np.fft.fft(values) * np.exp(-1j * k * box.lo[0])
    return np.fft.fftshift(spec)


def _upsampled(values_spec, box, factor, radius):
    """Band-limited values on a grid `factor` times finer, restricted to |x|<=radius."""
    n, dx = box.n[0], box.dx[0]
    k = np.fft.ifftshift(_dual_grid(box))
    m = n * factor
    big = np.zeros(m, dtype=complex)
    shifted = np.fft.fftshift(values_spec * np.exp(1j * k * box.lo[0]))
    start = (m - n) // 2
    big[start:start + n] = shifted
    fine = np.fft.ifft(np.fft.ifftshift(big)) * m / (n * dx)
    xs = box.lo[0] + (dx / factor) * np.arange(m)
    keep = np.abs(xs) <= radius
    return xs[keep], fine.real[keep]


DEFAULT_MOLLIFIER_BOX = Box((-32.0,), (32.0,), (4096,))


def build_mollifier(sigma, box=DEFAULT_MOLLIFIER_BOX, moment_cap=6, xi_inner=None,
                    xi_outer=None, check=True, mass_tol=MASS_TOL, moment_tol=MOMENT_TOL):
    if not sigma > 1:
        raise DomainError("the mollifier needs sigma > 1")
    if box.dim != 1 or abs(box.lo[0] + box.hi[0]) > 1e-12:
        raise GeometryError("mollifier box must be 1D and symmetric about 0")
    xi = _dual_grid(box)
    xi_max = np.pi / box.dx[0]
    xi_inner = 0.15 * xi_max if xi_inner is None else float(xi_inner)
    xi_outer = 0.35 * xi_max if xi_outer is None else float(xi_outer)
    if xi_outer >= xi_max:
        raise GeometryError("frequency cutoff exceeds the dual grid")
    phi_hat = radial_taper(xi, xi_inner, xi_outer, sigma)
    spec = np.fft.ifftshift(phi_hat)
    phi = _from_spectrum(spec, box)
    x = box.axis(0)
    big = np.abs(phi) >= TAIL_CUT * np.abs(phi).max()
    radius = float(np.abs(x[big]).max() + box.dx[0])

    m = Mollifier(float(sigma), box, xi_inner, xi_outer, phi, xi, phi_hat, radius)
    k = np.fft.ifftshift(xi)
    up = UPSAMPLE
    while up > 4 and 2 * radius / box.dx[0] * up > MAX_SPLINE_POINTS:
        up //= 2
    for order in range(MAX_DERIVATIVE + 1):
        xs, vals = _upsampled(spec * (1j * k) ** order, box, up, radius + 8 * box.dx[0])
        m._splines.append(make_interp_spline(xs, vals, k=5))
    m._cdf = m._splines[0].antiderivative()
    m._cdf_lo = float(m._cdf(-radius))
    m._cdf_total = float(m._cdf(radius) - m._cdf_lo)

    moments = {0: abs(m.moment(0) - 1.0)}
    for a in range(1, moment_cap + 1):
        moments[a] = abs(m.moment(a))
    m.diagnostics = MollifierDiagnostics(moments, _decay_fit(m), s_sigma_norm(m, 1.0, 2),
                                         moment_cap=moment_cap)
    if check:
        bad = {a: v for a, v in moments.items() if v > (mass_tol if a == 0 else moment_tol)}
        if bad:
            raise ToleranceError(f"mollifier moments out of tolerance: {bad}")
    return m


def _decay_fit(m):
    a = np.abs(xi := m.xi)
    sel = (a > m.xi_inner) & (m.phi_hat_samples > 1e-280) & (m.phi_hat_samples < 1.0)
    u = a[sel] ** (1.0 / m.sigma)
    y = np.log(m.phi_hat_samples[sel])
    slope, intercept = np.polyfit(u, y, 1)
    return float(math.exp(intercept)), float(-slope)


def tail_level(m):
    x = np.abs(m.x)
    p = np.abs(m.phi_samples)
    return float(p[x >= 0.45 * (m.box.hi[0] - m.box.lo[0])].max() / p.max())


@lru_cache(maxsize=None)
def default_mollifier(sigma=2.0):
    """Mollifier on the standard 4096-point box, widened (same spacing)
    until the spatial tail has decayed to roundoff before the box edge."""
    half, n = 32.0, 4096
    while True:
        m = build_mollifier(float(sigma), Box((-half,), (half,), (n,)), check=False)
        if tail_level(m) < TAIL_CUT or n >= 1 << 15:
            break
        half, n = 2 * half, 2 * n
    cap = 6
    while cap > 1 and any(m.diagnostics.moment_errors[a] > MOMENT_TOL for a in range(1, cap + 1)):
        cap -= 1
    return build_mollifier(float(sigma), m.box, moment_cap=cap)


def mollifier_net(moll, dim=1, location=0.0):
    """phi_eps(x) = eps**-dim * prod phi(x_i/eps); dim 2 is a tensor product."""
    loc = tuple(float(v) for v in np.atleast_1d(location)) * (dim if np.ndim(location) == 0 else 1)
    R = moll.support_radius

    def ev(eps, *x):
        out = 1.0
        for xi, c in zip(x, loc):
            out = out * moll.phi((xi - c) / eps) / eps
        return out + 0j

    def dp(alpha, eps, *x):
        out = 1.0
        for a, xi, c in zip(alpha, x, loc):
            out = out * moll.phi((xi - c) / eps, a) / eps ** (a + 1)
        return out + 0j

    support = lambda eps: Box(tuple(c - eps * R for c in loc), tuple(c + eps * R for c in loc), (2,) * dim)
    return Net("mollified_delta", dim, ev, dp, support,
               {"mollifier": {"sigma": moll.sigma}, "location": list(loc)},
               max_order=MAX_DERIVATIVE, features=tuple((c,) for c in loc),
               scale=lambda eps: eps * R / PATCH_HALF_WIDTH, patch_points=patch_points_for(moll),
               resolution=lambda eps: eps * moll.lobe)


DEFAULT_CUT = (1.0, 2.0)


def log_cutoff(moll, r_inner=1.0, r_outer=2.0):
    return CutoffProfile(moll.sigma, r_inner, r_outer, (0.0,), None)


def cutoff_mollifier_net(moll, cut=None):
    """rho_eps(x) = eps**-1 phi(x/eps) cut(x |ln eps|)."""
    cut = cut or log_cutoff(moll)
    if abs(cut.sigma - moll.sigma) > 1e-12:
        raise DomainError("mollifier and cutoff must share sigma")
    R = moll.support_radius

    def ev(eps, x):
        return moll.phi(x / eps) / eps * cut(x * abs(math.log(eps))) + 0j

    def support(eps):
        r = min(eps * R, cut.r_outer / abs(math.log(eps)))
        return interval(-r, r)

    return Net("cutoff_mollifier", 1, ev, None, support,
               {"mollifier": {"sigma": moll.sigma}, "cut": [cut.r_inner, cut.r_outer]},
               features=((0.0,),), scale=lambda eps: eps * R / PATCH_HALF_WIDTH,
               patch_points=patch_points_for(moll), resolution=lambda eps: eps * moll.lobe)


def s_sigma_norm(moll, b, cap):
    """Truncated sup over |alpha|,|beta| <= cap of
    int |x|^beta |phi^(alpha)| dx / (b^(alpha+beta) (alpha! beta!)^sigma)."""
    if b <= 0:
        raise DomainError("b must be positive")
    if cap > 6:
        raise DerivativeUnavailable("the norm is tabulated up to cap 6")
    x, dx = moll.x, moll.box.dx[0]
    best = 0.0
    for a in range(cap + 1):
        d = np.abs(moll.phi_samples if a == 0 else moll.derivative_samples(a))
        for beta in range(cap + 1):
            val = dx * np.sum(np.abs(x) ** beta * d)
            best = max(best, val / (b ** (a + beta) * (math.factorial(a) * math.factorial(beta)) ** moll.sigma))
    return float(best)


@dataclass(frozen=True)
class Lem4Fit:
    log_c: float
    nu: float
    coverage: float
    n_samples: int


def rho_decay(moll, cut=None, grid=asy.DEFAULT_GRID, floor=1e-13):
    """Fit |rho_hat_eps(xi)| <= c eps^-1 exp(-nu (eps |xi|)^(1/sigma)).

    Works in eta = eps*xi: rho_hat_eps(xi) is the transform of
    phi(y) * cut(eps |ln eps| y) at eta.  (nu, c) come from the even grid
    points; coverage is measured on all of them.
    """
    cut = cut or log_cutoff(moll)
    rows = []
    for e in grid:
        vals = moll.phi_samples * cut(moll.x * e * abs(math.log(e)))
        spec = np.abs(forward_transform(vals, moll.box))
        keep = (moll.xi > 0) & (spec > floor * spec.max())
        for eta, v in zip(moll.xi[keep], spec[keep]):
            rows.append((e, eta, math.log(v * e)))
    rows = np.array(rows)
    eps_vals = list(grid)
    train = np.isin(rows[:, 0], eps_vals[::2])
    u = rows[:, 1] ** (1.0 / moll.sigma)
    slope, intercept = np.polyfit(u[train], rows[train, 2], 1)
    nu = -slope
    log_c = float(np.max(rows[train, 2] - (intercept + slope * u[train])) + intercept)
    ok = rows[:, 2] <= log_c - nu * u + 1e-12
    moll.diagnostics.rho_decay_nu = float(nu)
    return Lem4Fit(log_c, float(nu), float(ok.mean()), int(len(rows)))
