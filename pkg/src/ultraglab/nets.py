"""Representatives (f_eps) of generalized functions and their algebra.

A :class:`Net` maps ``(eps, *coords)`` to complex values.  Coordinates are
numpy arrays broadcast against each other, one per axis.  Built-in nets
carry closed-form derivatives; everything else falls back to centred finite
differences of fourth order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from . import asymptotics as asy
from .errors import (DerivativeUnavailable, DimMismatch, DomainError, GeometryError,
                     InsufficientData, OutOfDomain, UnknownBuiltin)

FD_MAX_ORDER = 4
PATCH_HALF_WIDTH = 8.0


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    n: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        object.__setattr__(self, "n", tuple(int(v) for v in np.atleast_1d(self.n)))
        if not (len(self.lo) == len(self.hi) == len(self.n)) or self.dim not in (1, 2):
            raise GeometryError("box needs matching lo/hi/n of dimension 1 or 2")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise GeometryError("box needs lo < hi on every axis")
        if any(k < 2 or k & (k - 1) for k in self.n):
            raise GeometryError("sample counts must be powers of two")

    @classmethod
    def cube(cls, lo, hi, n, dim=1):
        return cls((lo,) * dim, (hi,) * dim, (n,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def dx(self):
        return tuple((b - a) / k for a, b, k in zip(self.lo, self.hi, self.n))

    def axis(self, i):
        return self.lo[i] + self.dx[i] * np.arange(self.n[i])

    def axes(self):
        return [self.axis(i) for i in range(self.dim)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def contains(self, point, closed=True):
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if closed:
            return all(a <= v <= b for a, v, b in zip(self.lo, p, self.hi))
        return all(a < v < b for a, v, b in zip(self.lo, p, self.hi))

    def contains_box(self, other):
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersect(self, other):
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi, self.n)

    def hull(self, other):
        lo = tuple(min(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(max(b, d) for b, d in zip(self.hi, other.hi))
        return Box(lo, hi, self.n)

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "n": list(self.n)}


def interval(lo, hi, n=2):
    """Support-style 1D box (n is irrelevant for supports)."""
    return Box((lo,), (hi,), (n,))


def _fd_weights(order, half):
    offsets = np.arange(-half, half + 1, dtype=float)
    A = np.vander(offsets, increasing=True).T
    b = np.zeros(offsets.size)
    b[order] = math.factorial(order)
    return offsets, np.linalg.solve(A, b)


# centred stencils, fourth order accurate
_STENCILS = {k: _fd_weights(k, (k + 1) // 2 + 1) for k in range(1, FD_MAX_ORDER + 1)}


class Net:
    """An eps-parameterised family of functions on R^dim.

    ``features`` lists, per axis, coordinates where the net concentrates and
    ``scale(eps)`` the length scale of that structure; both steer sampling.
    ``support(eps)`` returns a Box outside which the net vanishes exactly,
    or None.
    """

    def __init__(self, id, dim, evaluator, derivative_provider=None, support=None,
                 provenance=None, max_order=None, features=None, scale=None,
                 domain=None, patch_points=None, resolution=None):
        self.id = id
        self.dim = int(dim)
        self.evaluator = evaluator
        self.derivative_provider = derivative_provider
        self.support = support
        self.provenance = dict(provenance or {})
        if max_order is None:
            max_order = 6 if derivative_provider is not None else FD_MAX_ORDER
        self.max_order = int(max_order)
        self.features = tuple(tuple(f) for f in (features or ((),) * self.dim))
        self.scale = scale
        self.domain = domain
        self.patch_points = patch_points
        if resolution is None and scale is not None:
            resolution = lambda eps: scale(eps) / 16
        self.resolution = resolution

    def __repr__(self):
        return f"Net({self.id!r}, dim={self.dim})"

    def __call__(self, eps, *coords):
        return self.value(eps, *coords)

    def value(self, eps, *coords):
        if len(coords) != self.dim:
            raise DimMismatch(f"net {self.id!r} takes {self.dim} coordinates")
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = np.asarray(self.evaluator(eps, *coords), dtype=complex)
        return np.broadcast_to(out, np.broadcast_shapes(*[c.shape for c in coords])).copy()

    def fd_step(self, eps):
        if self.resolution is None:
            return 2.0**-8
        return min(2.0**-8, self.resolution(eps) / 8)

    def deriv(self, alpha, eps, *coords, step=None):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise DimMismatch("multi-index length differs from net dimension")
        if sum(alpha) == 0:
            return self.value(eps, *coords)
        if self.derivative_provider is not None and sum(alpha) <= self.max_order:
            coords = [np.asarray(c, dtype=float) for c in coords]
            out = np.asarray(self.derivative_provider(alpha, eps, *coords), dtype=complex)
            return np.broadcast_to(out, np.broadcast_shapes(*[c.shape for c in coords])).copy()
        return self._fd(alpha, eps, coords, step)

    def _fd(self, alpha, eps, coords, step):
        if sum(alpha) > min(self.max_order, FD_MAX_ORDER) or max(alpha) > FD_MAX_ORDER:
            raise DerivativeUnavailable(
                f"finite differences are capped at order {FD_MAX_ORDER}")
        h = step if step is not None else self.fd_step(eps)
        coords = [np.asarray(c, dtype=float) for c in coords]
        terms = [(1.0, [0.0] * self.dim)]
        for ax, k in enumerate(alpha):
            if k == 0:
                continue
            offs, wts = _STENCILS[k]
            terms = [(w0 * w / h**k, sh[:ax] + [sh[ax] + o * h] + sh[ax + 1:])
                     for w0, sh in terms for o, w in zip(offs, wts) if w != 0]
        total = 0
        for w, sh in terms:
            total = total + w * self.value(eps, *[c + d for c, d in zip(coords, sh)])
        return total

    def sample_axes(self, box, eps, patch_points=None):
        """Per-axis sample coordinates: box grid plus refined feature patches."""
        if box.dim != self.dim:
            raise DimMismatch("box and net dimensions differ")
        if patch_points is None:
            patch_points = self.patch_points or (2049 if self.dim == 1 else 257)
            if self.dim > 1:
                patch_points = min(patch_points, 257)
        sc = self.scale(eps) if self.scale is not None else None
        axes = []
        for i in range(self.dim):
            base = box.axis(i)
            parts = []
            if sc:
                for c in self.features[i]:
                    w = PATCH_HALF_WIDTH * sc
                    p = c + w * np.linspace(-1, 1, patch_points)
                    parts.append(p[(p >= box.lo[i]) & (p <= box.hi[i])])
                    # keep patches uniform so the trapezoid rule stays spectral
                    base = base[np.abs(base - c) > w]
            axes.append(np.unique(np.concatenate([base] + parts)))
        return axes

    def sample(self, box, eps, alpha=None, patch_points=None):
        axes = self.sample_axes(box, eps, patch_points)
        mesh = np.meshgrid(*axes, indexing="ij")
        if alpha is None or sum(alpha) == 0:
            return axes, self.value(eps, *mesh)
        return axes, self.deriv(alpha, eps, *mesh)

    def sup_abs(self, alpha, eps, box):
        return float(np.max(np.abs(self.sample(box, eps, alpha)[1])))

    def integrate(self, eps, box, weight=None):
        """Trapezoid integral of f_eps * weight over box on the refined axes."""
        axes, vals = self.sample(box, eps)
        if weight is not None:
            vals = vals * weight(*np.meshgrid(*axes, indexing="ij"))
        for i in reversed(range(self.dim)):
            vals = trapezoid(vals, axes[i], axis=i)
        return complex(vals)


def _merge_features(a, b):
    return tuple(tuple(sorted(set(fa) | set(fb))) for fa, fb in zip(a.features, b.features))


def _min_res(a, b):
    if a.resolution is None:
        return b.resolution
    if b.resolution is None:
        return a.resolution
    return lambda eps: min(a.resolution(eps), b.resolution(eps))


def _min_scale(a, b):
    if a.scale is None:
        return b.scale
    if b.scale is None:
        return a.scale
    return lambda eps: min(a.scale(eps), b.scale(eps))


def combine(a, b, op, scalars=(1.0, 1.0)):
    if a.dim != b.dim:
        raise DimMismatch(f"cannot combine dims {a.dim} and {b.dim}")
    ca, cb = scalars
    both = a.derivative_provider is not None and b.derivative_provider is not None
    if op == "add":
        def ev(eps, *x):
            return ca * a.value(eps, *x) + cb * b.value(eps, *x)
        dp = (lambda al, eps, *x: ca * a.deriv(al, eps, *x) + cb * b.deriv(al, eps, *x)) if both else None
        if a.support is not None and b.support is not None:
            support = lambda eps: a.support(eps).hull(b.support(eps))
        else:
            support = None
    elif op == "mul":
        def ev(eps, *x):
            return ca * cb * a.value(eps, *x) * b.value(eps, *x)
        dp = (lambda al, eps, *x: ca * cb * leibniz(a, b, al, eps, *x)) if both else None
        if a.support is not None and b.support is not None:
            def support(eps):
                box = a.support(eps).intersect(b.support(eps))
                return box if box is not None else _empty_support(a.dim)
        else:
            support = a.support or b.support
    else:
        raise DomainError(f"unknown op {op!r}")
    return Net(f"{op}({a.id},{b.id})", a.dim, ev, dp, support,
               {"op": op, "args": [a.id, b.id], "scalars": [_num(ca), _num(cb)]},
               max_order=min(a.max_order, b.max_order), features=_merge_features(a, b),
               scale=_min_scale(a, b), patch_points=_max_pp(a, b),
               resolution=_min_res(a, b))


def _max_pp(a, b):
    return max(a.patch_points or 0, b.patch_points or 0) or None


def _num(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _empty_support(dim):
    return Box((0.0,) * dim, (1e-300,) * dim, (2,) * dim)


def leibniz(a, b, alpha, eps, *x):
    total = 0
    for beta in np.ndindex(*(k + 1 for k in alpha)):
        gamma = tuple(k - j for k, j in zip(alpha, beta))
        w = np.prod([math.comb(k, j) for k, j in zip(alpha, beta)])
        total = total + w * a.deriv(beta, eps, *x) * b.deriv(gamma, eps, *x)
    return total


def scale_net(f, c):
    return combine(f, zero_net(f.dim), "add", (c, 0.0))


def zero_net(dim=1):
    return constant_net(0.0, dim, id="zero")


def constant_net(c, dim=1, id=None):
    return Net(id or f"const({_num(c)})", dim, lambda eps, *x: np.full(np.broadcast_shapes(*[np.shape(v) for v in x]), c, dtype=complex),
               lambda al, eps, *x: np.zeros(np.broadcast_shapes(*[np.shape(v) for v in x]), dtype=complex),
               provenance={"constant": _num(c)}, max_order=64)


def derivative(f, alpha, step=None):
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) < 1:
        raise DomainError("derivative needs |alpha| >= 1")
    analytic = f.derivative_provider is not None and sum(alpha) <= f.max_order
    if not analytic and sum(alpha) > FD_MAX_ORDER:
        raise DerivativeUnavailable(f"finite differences are capped at order {FD_MAX_ORDER}")
    ev = lambda eps, *x: f.deriv(alpha, eps, *x, step=step)
    dp = None
    if analytic:
        dp = lambda beta, eps, *x: f.deriv(tuple(p + q for p, q in zip(alpha, beta)), eps, *x)
    path = "analytic" if analytic else "finite_difference"
    return Net(f"d{list(alpha)}({f.id})", f.dim, ev, dp, f.support,
               {"derivative": list(alpha), "of": f.id, "path": path},
               max_order=(f.max_order - sum(alpha)) if analytic else FD_MAX_ORDER - sum(alpha),
               features=f.features, scale=f.scale, domain=f.domain, patch_points=f.patch_points,
               resolution=f.resolution)


def compose_polynomial(f, coeffs):
    """P(f_eps) with P(z) = sum_k coeffs[k] z**k."""
    coeffs = [complex(c) for c in coeffs]

    def ev(eps, *x):
        v = f.value(eps, *x)
        out = np.zeros_like(v)
        for c in reversed(coeffs):
            out = out * v + c
        return out

    dp = None
    if f.derivative_provider is not None and f.dim == 1:
        def dp(alpha, eps, x):
            return _faa_di_bruno(coeffs, f, alpha[0], eps, x)
    const = all(c == 0 for c in coeffs[1:])
    return Net(f"poly({f.id})", f.dim, ev, dp, None if const else f.support,
               {"compose": [_num(c) for c in coeffs], "of": f.id},
               max_order=min(f.max_order, 6) if dp else FD_MAX_ORDER,
               features=f.features, scale=f.scale, domain=f.domain, patch_points=f.patch_points,
               resolution=f.resolution)


def _poly_derivs(coeffs, v, kmax):
    out = []
    c = list(coeffs)
    for _ in range(kmax + 1):
        acc = np.zeros_like(v)
        for a in reversed(c):
            acc = acc * v + a
        out.append(acc)
        c = [i * a for i, a in enumerate(c)][1:] or [0j]
    return out


def _faa_di_bruno(coeffs, f, n, eps, x):
    # complete Bell polynomials via the recursive form on derivatives of f
    fd = [f.deriv((j,), eps, x) for j in range(n + 1)]
    pd = _poly_derivs(coeffs, fd[0], n)
    # B[n][k] partial Bell polynomials
    B = [[None] * (n + 1) for _ in range(n + 1)]
    B[0][0] = np.ones_like(fd[0])
    for m in range(1, n + 1):
        B[m][0] = np.zeros_like(fd[0])
    for k in range(1, n + 1):
        B[0][k] = np.zeros_like(fd[0])
    for m in range(1, n + 1):
        for k in range(1, m + 1):
            acc = np.zeros_like(fd[0])
            for i in range(1, m - k + 2):
                acc = acc + math.comb(m - 1, i - 1) * fd[i] * B[m - i][k - 1]
            B[m][k] = acc
    return sum(pd[k] * B[n][k] for k in range(1, n + 1))


def tensor(a, b):
    """(a (x) b)(x1, x2) = a(x1) * b(x2) for two 1D nets."""
    if a.dim != 1 or b.dim != 1:
        raise DimMismatch("tensor takes two 1D nets")
    ev = lambda eps, x, y: a.value(eps, x) * b.value(eps, y)
    dp = None
    if a.derivative_provider is not None and b.derivative_provider is not None:
        dp = lambda al, eps, x, y: a.deriv((al[0],), eps, x) * b.deriv((al[1],), eps, y)
    support = None
    if a.support is not None and b.support is not None:
        def support(eps):
            sa, sb = a.support(eps), b.support(eps)
            return Box(sa.lo + sb.lo, sa.hi + sb.hi, (2, 2))
    return Net(f"{a.id}*{b.id}", 2, ev, dp, support, {"tensor": [a.id, b.id]},
               max_order=min(a.max_order, b.max_order),
               features=(a.features[0], b.features[0]), scale=_min_scale(a, b),
               patch_points=_max_pp(a, b), resolution=_min_res(a, b))


# -- built-in catalog ---------------------------------------------------------

def _hermite_gauss(k, z):
    """d^k/dz^k exp(-z^2/2) = (-1)^k He_k(z) exp(-z^2/2)."""
    he_prev, he = np.ones_like(z), z
    if k == 0:
        he = he_prev
    else:
        for j in range(1, k):
            he_prev, he = he, z * he - j * he_prev
    return (-1) ** k * he * np.exp(-z * z / 2)


def _gaussian(center=0.0, width=1.0):
    c, w = float(center), float(width)
    ev = lambda eps, x: np.exp(-((x - c) / w) ** 2 / 2) + 0j
    dp = lambda al, eps, x: _hermite_gauss(al[0], (x - c) / w) / w ** al[0] + 0j
    return Net("gaussian", 1, ev, dp, None, {"builtin": "gaussian", "center": c, "width": w},
               max_order=12, features=((c,),))


def _cauchy(pole=0.0):
    p = float(pole)
    ev = lambda eps, x: 1.0 / (x - p + 1j * eps)
    dp = lambda al, eps, x: (-1) ** al[0] * math.factorial(al[0]) / (x - p + 1j * eps) ** (al[0] + 1)
    return Net("cauchy", 1, ev, dp, None, {"builtin": "cauchy", "pole": p},
               max_order=12, features=((p,),), scale=lambda eps: eps,
               resolution=lambda eps: eps)


def _gevrey_bump(sigma=2.0, r_inner=0.5, r_outer=1.0, center=0.0):
    from .gevrey import radial_taper
    c = float(center)
    ev = lambda eps, x: radial_taper(x - c, r_inner, r_outer, sigma) + 0j
    return Net("gevrey_bump", 1, ev, None, lambda eps: interval(c - r_outer, c + r_outer),
               {"builtin": "gevrey_bump", "sigma": sigma, "r_inner": r_inner,
                "r_outer": r_outer, "center": c},
               features=((c - r_outer, c - r_inner, c + r_inner, c + r_outer),),
               scale=lambda eps: (r_outer - r_inner) / 8)


def _mollified_delta(sigma=2.0, location=0.0):
    from .gevrey import default_mollifier, mollifier_net
    net = mollifier_net(default_mollifier(sigma), location=location)
    net.provenance.update({"builtin": "mollified_delta"})
    return net


def _mollified_heaviside(sigma=2.0, location=0.0):
    from .gevrey import default_mollifier
    m = default_mollifier(sigma)
    x0 = float(location)
    ev = lambda eps, x: m.cdf((x - x0) / eps) + 0j
    dp = lambda al, eps, x: m.phi((x - x0) / eps, al[0] - 1) / eps ** al[0] + 0j
    return Net("mollified_heaviside", 1, ev, dp, None,
               {"builtin": "mollified_heaviside", "sigma": sigma, "location": x0},
               max_order=m.max_derivative + 1, features=((x0,),),
               scale=lambda eps: eps * m.support_radius / PATCH_HALF_WIDTH,
               patch_points=patch_points_for(m), resolution=lambda eps: eps * m.lobe)


def patch_points_for(moll):
    # about 50 samples per unit of the rescaled variable x/eps
    return (1 << max(11, math.ceil(math.log2(100 * moll.support_radius)))) + 1


def _counterexample(sigma=2.0, r_inner=0.5, r_outer=1.0):
    from .gevrey import radial_taper
    s = asy.scale_exponent(sigma).s
    ev = lambda eps, x: x * math.exp(-eps**-s) * radial_taper(x / eps, r_inner, r_outer, sigma) + 0j
    return Net("paper_sec3_counterexample", 1, ev, None,
               lambda eps: interval(-eps * r_outer, eps * r_outer),
               {"builtin": "paper_sec3_counterexample", "sigma": sigma,
                "r_inner": r_inner, "r_outer": r_outer},
               features=((0.0,),), scale=lambda eps: eps * r_outer / PATCH_HALF_WIDTH)


def _decaying_oscillation(sigma=2.0, rate=1.0, frequency=1.0):
    """exp(-rate*eps**-s) * sin(frequency*x/eps)."""
    s = asy.scale_exponent(sigma).s
    amp = lambda eps: math.exp(-rate * eps**-s)

    def dp(al, eps, x):
        k = al[0]
        w = frequency / eps
        return amp(eps) * w**k * np.sin(w * x + k * math.pi / 2) + 0j

    return Net("decaying_oscillation", 1, lambda eps, x: dp((0,), eps, x), dp, None,
               {"builtin": "decaying_oscillation", "sigma": sigma, "rate": rate,
                "frequency": frequency}, max_order=12, features=((0.0,),),
               scale=lambda eps: eps / frequency)


_CATALOG = {
    "cauchy": (_cauchy, "1/(x - pole + i eps)"),
    "decaying_oscillation": (_decaying_oscillation, "exp(-rate eps^-s) sin(frequency x/eps)"),
    "gaussian": (_gaussian, "exp(-(x-center)^2/(2 width^2)), eps-constant"),
    "gevrey_bump": (_gevrey_bump, "Gevrey cutoff, 1 on |x-c|<=r_inner, 0 beyond r_outer"),
    "mollified_delta": (_mollified_delta, "phi_eps(x - location)"),
    "mollified_heaviside": (_mollified_heaviside, "(H * phi_eps)(x - location)"),
    "paper_sec3_counterexample": (_counterexample, "x exp(-eps^-s) chi(x/eps) with a compact Gevrey chi"),
}


def catalog():
    return [(name, _CATALOG[name][1]) for name in sorted(_CATALOG)]


def builtin_net(name, dim=1, axis=None, **params):
    """Build a catalog net.  For dim=2 the result is a tensor product: with
    ``axis`` set, the 1D net acts on that axis and the other factor is 1;
    otherwise the net is the product of two copies."""
    if name not in _CATALOG:
        raise UnknownBuiltin(name)
    try:
        base = _CATALOG[name][0](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from None
    if dim == 1:
        return base
    if dim != 2:
        raise DimMismatch("built-ins exist for dim 1 and 2")
    one = constant_net(1.0, 1, id="one")
    if axis is None:
        net = tensor(base, _CATALOG[name][0](**params))
    else:
        net = tensor(base, one) if axis == 0 else tensor(one, base)
    net.id = name if axis is None else f"{name}[x{axis + 1}]"
    net.provenance = {"builtin": name, "dim": 2, "axis": axis, **params}
    return net


# -- generalized points and numbers -------------------------------------------

@dataclass(frozen=True)
class GenPoint:
    path: Callable
    compactly_supported: bool = True
    witness: Optional[Box] = None
    label: str = ""

    def at(self, eps):
        return np.atleast_1d(np.asarray(self.path(eps), dtype=float))

    def check(self, grid):
        if self.compactly_supported:
            if self.witness is None:
                raise DomainError("compactly supported point needs a witness box")
            for e in grid:
                if not self.witness.contains(self.at(e)):
                    raise OutOfDomain(f"path leaves witness box at eps={e}")


def classical_point(x, witness=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = witness or Box(tuple(x - 1), tuple(x + 1), (2,) * x.size)
    return GenPoint(lambda eps: x, True, w, f"{x.tolist()}")


@dataclass(frozen=True)
class GenNumber:
    values: tuple
    classification: asy.Classification


def point_value(f, x, model, grid=asy.DEFAULT_GRID, policy=asy.DEFAULT_POLICY):
    x.check(grid)
    if f.domain is not None and x.witness is not None and not f.domain.contains_box(x.witness):
        raise OutOfDomain("witness box leaves the net's domain")
    vals = []
    for e in grid:
        p = x.at(e)
        if p.size != f.dim:
            raise DimMismatch("point and net dimensions differ")
        vals.append((e, complex(f.value(e, *[np.asarray(c) for c in p]))))
    return GenNumber(tuple(vals), asy.classify_scalar_net(vals, model, policy))


def gen_point_equiv(x, y, model, grid=asy.DEFAULT_GRID, policy=asy.DEFAULT_POLICY):
    vals = [(e, float(np.linalg.norm(x.at(e) - y.at(e)))) for e in grid]
    cls = asy.classify_scalar_net(vals, model, policy)
    return cls.verdict in (asy.Verdict.NEGLIGIBLE, asy.Verdict.EXACT_ZERO), cls


def argmax_path(f, box, grid=asy.DEFAULT_GRID):
    """Generalized point tracking argmax |f_eps| over the sampled box.

    Ties go to the smallest coordinate (lexicographic)."""
    pts = {}
    for e in grid:
        axes, vals = f.sample(box, e)
        a = np.abs(vals)
        idx = np.argwhere(a == a.max())
        best = min((tuple(axes[i][j] for i, j in enumerate(ix)) for ix in idx))
        pts[e] = np.array(best)
    return GenPoint(lambda eps: pts[eps], True, box, f"argmax({f.id})")


# -- equality hierarchy --------------------------------------------------------

class EqualityKind(str, enum.Enum):
    STRONG = "Strong"
    TSENSE = "TSense"
    ASSOCIATED = "Associated"


@dataclass(frozen=True)
class EqualityMode:
    kind: EqualityKind
    t: Optional[float] = None

    @classmethod
    def strong(cls):
        return cls(EqualityKind.STRONG)

    @classmethod
    def tsense(cls, t, sigma):
        if not sigma <= t <= 3 * sigma - 1:
            raise DomainError(f"t={t} outside [{sigma}, {3 * sigma - 1}]")
        return cls(EqualityKind.TSENSE, float(t))

    @classmethod
    def associated(cls):
        return cls(EqualityKind.ASSOCIATED)


@dataclass
class EqualityVerdict:
    mode: EqualityMode
    holds: bool
    details: list = field(default_factory=list)


def pairings(f, g, test, box, grid):
    d = combine(f, g, "add", (1.0, -1.0))
    return [(e, d.integrate(e, box, test)) for e in grid]


def equality_test(f, g, mode, tests, model, box, grid=asy.DEFAULT_GRID,
                  policy=asy.DEFAULT_POLICY, assoc_tol=1e-3, max_order=1):
    if mode.kind is EqualityKind.STRONG:
        d = combine(f, g, "add", (1.0, -1.0))
        cls = asy.classify_function_net(d, box, min(max_order, d.max_order), model, policy, grid)
        ok = cls.verdict in (asy.Verdict.NEGLIGIBLE, asy.Verdict.EXACT_ZERO)
        return EqualityVerdict(mode, ok, [cls])
    if not tests:
        raise InsufficientData("pairing equalities need test functions")
    details, ok = [], True
    for test in tests:
        pv = pairings(f, g, test, box, grid)
        if mode.kind is EqualityKind.TSENSE:
            cls = asy.classify_scalar_net(pv, asy.scale_exponent(mode.t), policy)
            good = cls.verdict in (asy.Verdict.NEGLIGIBLE, asy.Verdict.EXACT_ZERO)
            details.append(cls)
        else:
            mags = [abs(v) for _, v in pv[-3:]]
            good = max(mags) <= assoc_tol or (
                mags[-1] <= assoc_tol and all(b <= a for a, b in zip(mags, mags[1:])))
            details.append(mags)
        ok = ok and good
    return EqualityVerdict(mode, ok, details)
