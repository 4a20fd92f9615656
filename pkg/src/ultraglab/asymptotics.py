"""Scale laws, epsilon grids and log-domain fits of growth/decay rates.

A net value v(eps) is compared against c * exp(+-k * t) where
t = eps**(-s) and s = 1/(2*sigma - 1).
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDesign, DerivativeUnavailable, DomainError, InsufficientData

INF = float("inf")


@dataclass(frozen=True)
class Policy:
    k_cap: float = 50.0
    k_min: float = 0.5
    r_max: float = 0.5
    floor: float = 1e-280
    k2_min: float = 0.2
    tail_points: int = 4


DEFAULT_POLICY = Policy()


@dataclass(frozen=True)
class ScaleModel:
    sigma: float
    s: float

    def feature(self, eps):
        return np.asarray(eps, dtype=float) ** (-self.s)


def scale_exponent(sigma):
    sigma = float(sigma)
    if not sigma >= 1.0:
        raise DomainError(f"sigma must be >= 1, got {sigma}")
    return ScaleModel(sigma, 1.0 / (2.0 * sigma - 1.0))


@dataclass(frozen=True)
class EpsGrid:
    values: tuple
    start: float
    ratio: float
    count: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size < 4:
            raise DomainError("an eps grid needs at least 4 values")
        if np.any(v <= 0) or np.any(v > 1) or np.any(np.diff(v) >= 0):
            raise DomainError("eps values must be strictly decreasing in (0, 1]")

    @classmethod
    def geometric(cls, start=1e-1, stop=1e-4, count=10, ratio=None):
        if ratio is None:
            ratio = (stop / start) ** (1.0 / (count - 1))
        values = tuple(float(start * ratio**i) for i in range(count))
        return cls(values, float(start), float(ratio), int(count))

    def below(self, eps0):
        """Sub-grid of values <= eps0 (relative slack for rounding)."""
        vals = tuple(e for e in self.values if e <= eps0 * (1 + 1e-9))
        return EpsGrid(vals, vals[0], self.ratio, len(vals))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


DEFAULT_GRID = EpsGrid.geometric()


@dataclass(frozen=True)
class AsymptoticFit:
    log_c: float
    k: float
    sign: int
    residual_rms: float
    saturated_count: int
    tail_k: float = 0.0
    n_used: int = 0

    @property
    def signed_rate(self):
        return self.sign * self.k


@dataclass(frozen=True)
class TwoScaleFit:
    log_c: float
    k1: float
    k2: float
    residual_rms: float
    n_used: int = 0
    saturated_count: int = 0
    p: float = 0.0
    q: float = 0.0


class Verdict(str, enum.Enum):
    MODERATE = "Moderate"
    NEGLIGIBLE = "Negligible"
    NEITHER = "Neither"
    EXACT_ZERO = "ExactZero"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    k_hat: float
    per_alpha: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def is_negligible_at(self, k):
        if self.verdict is Verdict.EXACT_ZERO:
            return True
        return self.verdict is Verdict.NEGLIGIBLE and self.k_hat >= k

    @property
    def moderate(self):
        return self.verdict is not Verdict.NEITHER


def _lstsq(A, y):
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise DegenerateDesign("feature matrix is rank-deficient")
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    r = y - A @ coef
    return coef, float(np.sqrt(np.mean(r**2)))


def fit_single_scale(samples, model, policy=DEFAULT_POLICY):
    """Fit log(value) = log_c + sign*k*eps**(-s) over unsaturated samples.

    Values below ``policy.floor`` or non-finite are saturated and excluded.
    Exactly-zero data yields k = INF.  Fewer than three usable points with
    the rest clamped at zero yield the capped rate ``policy.k_cap``.
    """
    eps = np.array([e for e, _ in samples], dtype=float)
    val = np.array([abs(v) for _, v in samples], dtype=float)
    if eps.size != np.unique(eps).size:
        raise InsufficientData("eps values must be distinct")
    if eps.size and np.all(val == 0):
        return AsymptoticFit(-INF, INF, -1, 0.0, int(eps.size))
    low = val < policy.floor
    high = ~np.isfinite(val)
    ok = ~(low | high)
    nsat = int((~ok).sum())
    if ok.sum() < 3:
        if low.any() and not high.any():
            return AsymptoticFit(-INF, policy.k_cap, -1, 0.0, nsat)
        raise InsufficientData(f"{int(ok.sum())} usable samples, need 3")
    order = np.argsort(-eps[ok])
    t = model.feature(eps[ok])[order]
    y = np.log(val[ok])[order]
    A = np.column_stack([np.ones_like(t), t])
    (log_c, slope), rms = _lstsq(A, y)
    m = min(policy.tail_points, t.size)
    tail = np.polyfit(t[-m:], y[-m:], 1)[0] if m >= 2 else slope
    sign = 1 if slope >= 0 else -1
    return AsymptoticFit(float(log_c), float(abs(slope)), sign, rms, nsat,
                         float(tail), int(t.size))


def _solve_clipped(A, y, nonneg):
    free = list(range(A.shape[1]))
    while True:
        coef_f, rms = _lstsq(A[:, free], y)
        bad = [j for j, c in zip(free, coef_f) if j in nonneg and c < 0]
        if not bad:
            coef = np.zeros(A.shape[1])
            coef[free] = coef_f
            return coef, rms
        worst = min(bad, key=lambda j: coef_f[free.index(j)])
        free.remove(worst)


def fit_two_scale(samples, model, policy=DEFAULT_POLICY, nuisance=False):
    """Fit log(value) = log_c + k1*eps**(-s) - k2*|xi|**(1/sigma).

    With ``nuisance`` the design also carries q*log(1/eps) - p*log|xi| so
    that algebraic factors do not leak into k1, k2.  Negative k1/k2 from
    the free solve are pinned to 0 and the rest refitted.
    """
    arr = np.asarray([(e, x, abs(v)) for e, x, v in samples], dtype=float).reshape(-1, 3)
    ok = (arr[:, 2] >= policy.floor) & np.isfinite(arr[:, 2])
    nsat = int((~ok).sum())
    eps, xi, val = arr[ok].T
    n_eps, n_xi = np.unique(eps).size, np.unique(xi).size
    if val.size < 6 or n_eps < 2 or n_xi < 3:
        raise InsufficientData(
            f"{val.size} usable samples over {n_eps} eps and {n_xi} |xi| values")
    t = model.feature(eps)
    u = xi ** (1.0 / model.sigma)
    cols = [np.ones_like(t), t, -u]
    if nuisance:
        if n_eps >= 3:
            cols.append(np.log(1.0 / eps))
        if n_xi >= 4:
            cols.append(-np.log(xi))
    A = np.column_stack(cols)
    y = np.log(val)
    if np.ptp(t) == 0:
        # single-eps data cannot carry k1: drop the column
        A = np.delete(A, 1, axis=1)
        coef, rms = _solve_clipped(A, y, {1})
        coef = np.insert(coef, 1, 0.0)
    else:
        coef, rms = _solve_clipped(A, y, {1, 2})
    extra = list(coef[3:])
    q = extra.pop(0) if nuisance and n_eps >= 3 else 0.0
    p = extra.pop(0) if nuisance and n_xi >= 4 else 0.0
    return TwoScaleFit(float(coef[0]), float(coef[1]), float(coef[2]), rms,
                       int(val.size), nsat, float(p), float(q))


def _is_moderate_fit(fit, policy):
    return fit.sign < 0 or (fit.k <= policy.k_cap and fit.tail_k <= policy.k_cap)


def verdict_of_fit(fit, policy=DEFAULT_POLICY):
    if fit.k == INF:
        return Verdict.EXACT_ZERO
    if fit.sign < 0 and fit.k >= policy.k_min:
        return Verdict.NEGLIGIBLE
    if _is_moderate_fit(fit, policy):
        return Verdict.MODERATE
    return Verdict.NEITHER


def classify_scalar_net(values, model, policy=DEFAULT_POLICY):
    values = list(values)
    if values and all(v == 0 for _, v in values):
        fit = AsymptoticFit(-INF, INF, -1, 0.0, len(values))
        return Classification(Verdict.EXACT_ZERO, INF, {(): fit}, {(): fit})
    fit = fit_single_scale([(e, abs(v)) for e, v in values], model, policy)
    verdict = verdict_of_fit(fit, policy)
    k_hat = min(fit.k, policy.k_cap) if verdict is not Verdict.EXACT_ZERO else INF
    if verdict is Verdict.MODERATE and fit.sign < 0:
        k_hat = 0.0
    return Classification(verdict, k_hat, {(): fit}, {(): fit})


def multi_indices(dim, max_order):
    out = []
    for order in range(max_order + 1):
        out += sorted((a for a in itertools.product(range(order + 1), repeat=dim)
                       if sum(a) == order), reverse=True)
    return out


def classify_function_net(net, box, max_order, model, policy=DEFAULT_POLICY,
                          grid=DEFAULT_GRID, full=False):
    """Classify a net from sup-norms of its derivatives over ``box``.

    Moderate needs every derivative fit moderate.  Negligible is decided
    from the order-0 fit alone once the net is moderate, unless ``full``
    asks for every order to decay.
    """
    if max_order < 0:
        raise DomainError("max_order must be >= 0")
    if max_order > net.max_order:
        raise DerivativeUnavailable(
            f"net {net.id!r} supports derivatives up to order {net.max_order}")
    fits = {}
    for alpha in multi_indices(net.dim, max_order):
        sups = [(e, net.sup_abs(alpha, e, box)) for e in grid]
        if all(v == 0 for _, v in sups):
            fits[alpha] = AsymptoticFit(-INF, INF, -1, 0.0, len(sups))
        else:
            fits[alpha] = fit_single_scale(sups, model, policy)
    verdicts = {a: verdict_of_fit(f, policy) for a, f in fits.items()}
    zero = (0,) * net.dim
    if all(v is Verdict.EXACT_ZERO for v in verdicts.values()):
        return Classification(Verdict.EXACT_ZERO, INF, dict(fits), fits)
    if any(v is Verdict.NEITHER for v in verdicts.values()):
        return Classification(Verdict.NEITHER, _growth(fits, policy), dict(fits), fits)
    decaying = (Verdict.NEGLIGIBLE, Verdict.EXACT_ZERO)
    checked = list(fits) if full else [zero]
    if all(verdicts[a] in decaying for a in checked):
        k_hat = min(min(fits[a].k, policy.k_cap) for a in checked)
        return Classification(Verdict.NEGLIGIBLE, k_hat, {a: fits[a] for a in checked}, fits)
    return Classification(Verdict.MODERATE, _growth(fits, policy), dict(fits), fits)


def _growth(fits, policy):
    rates = [f.k for f in fits.values() if f.sign > 0]
    return min(max(rates), policy.k_cap) if rates else 0.0
