"""Acceptance batteries shared by the test suite and ``ultraglab selftest``.

Each criterion returns a CriterionResult whose ``metrics`` are
deterministic; wall-clock time is kept apart in ``seconds``.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import embed
from . import microlocal as ml
from .gevrey import MASS_TOL, MOMENT_TOL, default_mollifier, radial_taper
from .nets import (Box, GenPoint, argmax_path, builtin_net, classical_point, combine,
                   compose_polynomial, constant_net, derivative, interval, point_value, scale_net)

SEED = 20240611
GRID = asy.DEFAULT_GRID
BOX_1D = Box((-128.0,), (128.0,), (4096,))
BOX_2D = Box((-8.0, -8.0), (8.0, 8.0), (256, 256))
SUP_BOX = Box((-4.0,), (4.0,), (1024,))
SIGMA = 2.0


@dataclass
class CriterionResult:
    id: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"criterion {self.id:2d} {'PASS' if self.passed else 'FAIL'}  {self.title}"


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# 1 ---------------------------------------------------------------------------

def synthetic_nets(count=60, seed=SEED):
    """(sigma, c, k, sign) tuples and the Philox generator that drew them."""
    rng = np.random.Generator(np.random.Philox(seed))
    sigmas = (1.5, 2.0, 3.0)
    nets = [(sigmas[i % 3], float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.5, 10.0)),
             1 if i % 2 == 0 else -1) for i in range(count)]
    return nets, rng


@_timed
def scale_fit_recovery(count=60, noise=0.05, seed=SEED):
    nets, rng = synthetic_nets(count, seed)
    worst = [0.0, 0.0]
    for sigma, c, k, sign in nets:
        model = asy.scale_exponent(sigma)
        t = model.feature(list(GRID))
        with np.errstate(over="ignore"):
            clean = c * np.exp(sign * k * t)
        noisy = clean * (1.0 + noise * rng.standard_normal(t.size))
        for slot, vals in enumerate((clean, noisy)):
            fit = asy.fit_single_scale(list(zip(GRID, vals)), model)
            err = abs(fit.k - k) / k if fit.sign == sign else math.inf
            worst[slot] = max(worst[slot], err)
    ok = worst[0] <= 1e-6 and worst[1] <= 0.10
    return CriterionResult(1, "scale-fit recovery", ok,
                           {"nets": count, "max_rel_err_clean": worst[0], "max_rel_err_noisy": worst[1]})


# 2 ---------------------------------------------------------------------------

@_timed
def mollifier_moments(sigma=SIGMA, mass_tol=MASS_TOL, moment_tol=MOMENT_TOL):
    m = default_mollifier(sigma)
    errs = {a: abs(m.moment(a) - (1.0 if a == 0 else 0.0)) for a in range(7)}
    ok = m.box.n[0] == 4096 and errs[0] <= mass_tol and all(errs[a] <= moment_tol for a in range(1, 7))
    return CriterionResult(2, "mollifier moments", ok,
                           {"n": m.box.n[0], "mass_error": errs[0],
                            "max_moment_error": max(errs[a] for a in range(1, 7))})


# 3 ---------------------------------------------------------------------------

@_timed
def embedding_consistency(sigma=SIGMA):
    m = default_mollifier(sigma)
    ref = embed.embedding_threshold()
    bump = lambda x: radial_taper(x, ref["bump"]["r_inner"], ref["bump"]["r_outer"], sigma)
    fit = embed.embedding_error(bump, m)
    ok = fit.sign == -1 and fit.k >= ref["threshold"]
    return CriterionResult(3, "embedding consistency", ok,
                           {"k_hat": fit.k, "sign": fit.sign, "threshold": ref["threshold"],
                            "oracle_k": ref["oracle_k"]})


# 4 ---------------------------------------------------------------------------

def _point_atoms():
    return {"delta": embed.DistributionExpr([embed.DeltaDeriv()], interval(-0.1, 0.1)),
            "heaviside": embed.DistributionExpr([embed.Jump()], interval(-0.1, 0.1))}


@_timed
def cutoff_coincidence(sigma=SIGMA):
    m = default_mollifier(sigma)
    model = asy.scale_exponent(sigma)
    metrics, ok = {}, True
    for name, T in _point_atoms().items():
        cls = asy.classify_scalar_net(embed.discrepancy(T, m), model)
        metrics[name] = {"verdict": cls.verdict, "k_hat": cls.k_hat}
        ok = ok and cls.verdict is asy.Verdict.NEGLIGIBLE and cls.k_hat >= 1.0
    return CriterionResult(4, "J versus J0 discrepancy", ok, metrics)


# 5 ---------------------------------------------------------------------------

def algebra_battery():
    """20 labelled nets at sigma = 2: (name, net, label)."""
    dec = lambda rate, freq=1.0: builtin_net("decaying_oscillation", sigma=SIGMA, rate=rate, frequency=freq)
    moderate = [
        ("gaussian", builtin_net("gaussian")),
        ("gaussian_narrow", builtin_net("gaussian", center=0.5, width=0.5)),
        ("cauchy", builtin_net("cauchy")),
        ("cauchy_shifted", builtin_net("cauchy", pole=0.3)),
        ("delta", builtin_net("mollified_delta", sigma=SIGMA)),
        ("heaviside", builtin_net("mollified_heaviside", sigma=SIGMA)),
        ("bump", builtin_net("gevrey_bump", sigma=SIGMA)),
        ("constant", constant_net(2.0)),
        ("one_plus_cauchy_sq", compose_polynomial(builtin_net("cauchy"), [1.0, 0.0, 1.0])),
        ("delta_prime", derivative(builtin_net("mollified_delta", sigma=SIGMA), (1,))),
        ("three_heaviside", scale_net(builtin_net("mollified_heaviside", sigma=SIGMA), 3.0)),
        ("gaussian_plus_cauchy", combine(builtin_net("gaussian"), builtin_net("cauchy"), "add")),
    ]
    negligible = [
        ("osc2", dec(2.0)),
        ("osc3", dec(3.0, 2.0)),
        ("five_osc2", scale_net(dec(2.0), 5.0)),
        ("counterexample", builtin_net("paper_sec3_counterexample", sigma=SIGMA)),
        ("osc2_gaussian", combine(dec(2.0), builtin_net("gaussian"), "mul")),
        ("osc2p5_cauchy", combine(dec(2.5), builtin_net("cauchy"), "mul")),
        ("osc_sum", combine(dec(2.0), dec(3.0, 2.0), "add")),
        ("osc2_prime", derivative(dec(2.0), (1,))),
    ]
    return ([(n, f, asy.Verdict.MODERATE) for n, f in moderate]
            + [(n, f, asy.Verdict.NEGLIGIBLE) for n, f in negligible])


def _verdict(f, model, full=False, max_order=2):
    cls = asy.classify_function_net(f, SUP_BOX, min(max_order, f.max_order), model, grid=GRID, full=full)
    return asy.Verdict.NEGLIGIBLE if cls.verdict is asy.Verdict.EXACT_ZERO else cls.verdict


@_timed
def algebra_laws(sigma=SIGMA):
    model = asy.scale_exponent(sigma)
    nets = algebra_battery()
    mods = [(n, f) for n, f, lab in nets if lab is asy.Verdict.MODERATE]
    negs = [(n, f) for n, f, lab in nets if lab is asy.Verdict.NEGLIGIBLE]
    cases = []
    for i, (a, f) in enumerate(mods):
        for b, g in mods[i:]:
            cases.append((f"{a}*{b}", combine(f, g, "mul"), asy.Verdict.MODERATE))
        for b, g in negs:
            cases.append((f"{a}*{b}", combine(f, g, "mul"), asy.Verdict.NEGLIGIBLE))
    wrong = [name for name, h, want in cases if _verdict(h, model) is not want]
    singles = [n for n, f, lab in nets if _verdict(f, model) is not lab]
    fast_mismatch = [n for n, f, _ in nets if _verdict(f, model) is not _verdict(f, model, full=True)]
    ok = not wrong and not singles and not fast_mismatch
    return CriterionResult(5, "algebra laws and fast path", ok,
                           {"nets": len(nets), "products": len(cases), "product_mismatches": wrong,
                            "label_mismatches": singles, "fast_path_mismatches": fast_mismatch})


# 6 ---------------------------------------------------------------------------

@_timed
def point_values(sigma=1.5, x_star=0.5):
    f = builtin_net("paper_sec3_counterexample", sigma=sigma)
    model = asy.scale_exponent(sigma)
    classical = {}
    for x in (-1.0, -0.5, 0.5, 1.0, 2.0):
        classical[str(x)] = point_value(f, classical_point(x), model, GRID).classification.verdict
    path = GenPoint(lambda eps: np.array([eps * x_star]), True, interval(-1.0, 1.0), f"eps*{x_star}")
    gen = point_value(f, path, model, GRID).classification
    witness = point_value(f, argmax_path(f, interval(-1.0, 1.0, 2048), GRID), model, GRID).classification
    ok = (all(v is asy.Verdict.EXACT_ZERO for v in classical.values())
          and math.isfinite(gen.k_hat) and abs(gen.k_hat - 1.0) <= 0.2
          and not witness.is_negligible_at(2.0))
    return CriterionResult(6, "point values of the counterexample", ok,
                           {"classical": classical, "gen_point_k_hat": gen.k_hat,
                            "witness_verdict": witness.verdict, "witness_k_hat": witness.k_hat})


# 7 ---------------------------------------------------------------------------

@_timed
def regularity_battery(sigma=SIGMA):
    model = asy.scale_exponent(sigma)
    d = builtin_net("mollified_delta", sigma=sigma)
    box = Box((-8.0,), (8.0,), (256,))
    cases = [("gaussian", builtin_net("gaussian"), True), ("bump", builtin_net("gevrey_bump", sigma=sigma), True),
             ("delta", d, False), ("delta_squared", combine(d, d, "mul"), False)]
    metrics, ok = {}, True
    for name, f, regular in cases:
        v = ml.regularity_test(f, GRID, model=model, box=box)
        k2 = v.fit.k2
        good = v.regular is regular and (k2 >= 0.5 if regular else k2 <= 0.1)
        metrics[name] = {"regular": v.regular, "k2": k2, "residual": v.fit.residual_rms}
        ok = ok and good
    return CriterionResult(7, "regularity battery", ok, metrics)


# 8 ---------------------------------------------------------------------------

def wf_battery(sigma=SIGMA):
    """(name, net, expected bins at the origin)."""
    return [("delta", builtin_net("mollified_delta", sigma=sigma), {0, 1}),
            ("heaviside", builtin_net("mollified_heaviside", sigma=sigma), {0, 1}),
            ("cauchy", builtin_net("cauchy"), {0}),
            ("gaussian", builtin_net("gaussian"), set())]


def probes_1d(half_cells=3):
    return ml.probe_grid((0.0,), half_cells, 1, dim=1)


def _wf_matches(wf, expected, cells=2, dx=BOX_1D.dx[0]):
    if not expected:
        return not wf.entries
    pts = wf.grid[wf.points()]
    near = bool(len(pts)) and bool(np.all(np.abs(pts) <= cells * dx + 1e-12))
    return near and wf.bins() == expected


@_timed
def wavefront_battery(sigma=SIGMA):
    model = asy.scale_exponent(sigma)
    metrics, ok = {}, True
    for name, f, expected in wf_battery(sigma):
        wf = ml.wave_front(f, probes_1d(), GRID, model=model, box=BOX_1D)
        metrics[name] = {"points": [float(p[0]) for p in wf.point_coords()], "bins": sorted(wf.bins())}
        ok = ok and _wf_matches(wf, expected)
    return CriterionResult(8, "wave-front battery", ok, metrics)


# 9 ---------------------------------------------------------------------------

@_timed
def monotonicity(sigma=SIGMA):
    model = asy.scale_exponent(sigma)
    one = constant_net(1.0)
    g = builtin_net("gaussian", center=0.25, width=2.0)
    metrics, ok = {}, True
    for name, f, _ in wf_battery(sigma):
        wf = ml.wave_front(f, probes_1d(), GRID, model=model, box=BOX_1D)
        for label, coeffs in (("derivative", [((1,), one)]), ("multiplier", [((0,), g)])):
            v = ml.pdo_wavefront_check(f, coeffs, probes_1d(), GRID, model=model, box=BOX_1D, wf_f=wf)
            metrics[f"{name}/{label}"] = v.status
            ok = ok and v.passed
    return CriterionResult(9, "monotonicity under derivatives and multipliers", ok, metrics)


# 10 --------------------------------------------------------------------------

def _product_1d(name, sigma):
    f = builtin_net(name, sigma=sigma) if name != "cauchy" else builtin_net("cauchy")
    return ml.product_wavefront_check(f, f, probes_1d(), GRID, model=asy.scale_exponent(sigma), box=BOX_1D)


def product_2d(sigma=SIGMA):
    f = builtin_net("mollified_heaviside", dim=2, axis=0, sigma=sigma)
    g = builtin_net("mollified_heaviside", dim=2, axis=1, sigma=sigma)
    probes = ml.probe_grid((0.0, 0.0), 1, 2, dim=2)
    return ml.product_wavefront_check(f, g, probes, GRID, model=asy.scale_exponent(sigma), box=BOX_2D)


@_timed
def product_theorem(sigma=SIGMA):
    a = _product_1d("cauchy", sigma)
    b = _product_1d("mollified_delta", sigma)
    t0 = time.perf_counter()
    c = product_2d(sigma)
    t2d = time.perf_counter() - t0
    ok = a.passed and b.status == "HypothesisFailed" and c.passed and t2d < 120.0
    return CriterionResult(10, "product theorem", ok,
                           {"cauchy_cauchy": a.status, "delta_delta": b.status, "heaviside_2d": c.status,
                            "heaviside_2d_under_120s": t2d < 120.0})


# 11 --------------------------------------------------------------------------

@_timed
def strict_inclusion():
    f = builtin_net("decaying_oscillation", sigma=1.5, rate=2.0)
    metrics, ok = {}, True
    for sigma in (1.5, 3.0):
        cls = asy.classify_function_net(f, SUP_BOX, 2, asy.scale_exponent(sigma), grid=GRID)
        metrics[str(sigma)] = {"verdict": cls.verdict, "k_hat": cls.k_hat}
        ok = ok and cls.is_negligible_at(1.0)
    return CriterionResult(11, "negligible at sigma 1.5 stays negligible at sigma 3", ok, metrics)


# 12 --------------------------------------------------------------------------

@_timed
def determinism(threads=(1, 4, 8)):
    """The shipped scenario gives byte-identical reports across thread counts and reruns."""
    from .cli import run_scenario, scenario_path
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, n in enumerate(tuple(threads) + (threads[0],)):
            out = Path(tmp) / f"run{i}"
            run_scenario(scenario_path("delta_battery"), out, n)
            blobs.append(b"".join((out / p).read_bytes() for p in sorted(x.name for x in out.iterdir())
                                  if p != "timing.json"))
    ok = all(b == blobs[0] for b in blobs)
    return CriterionResult(12, "determinism across threads and reruns", ok,
                           {"runs": len(blobs), "identical": ok})


CRITERIA = [scale_fit_recovery, mollifier_moments, embedding_consistency, cutoff_coincidence,
            algebra_laws, point_values, regularity_battery, wavefront_battery, monotonicity,
            product_theorem, strict_inclusion, determinism]

TIME_BUDGET = 300.0


def run_all(inject=None, log=None):
    """Run criteria 1-12, then 13 from the total wall-clock."""
    results = []
    t0 = time.perf_counter()
    for fn in CRITERIA:
        if fn is mollifier_moments and inject == "mollifier-tolerance":
            res = fn(mass_tol=0.0, moment_tol=0.0)
        else:
            res = fn()
        results.append(res)
        if log:
            log(res)
    total = time.perf_counter() - t0
    res = CriterionResult(13, "selftest wall-clock", total < TIME_BUDGET,
                          {"budget_seconds": TIME_BUDGET}, total)
    results.append(res)
    if log:
        log(res)
    return results
