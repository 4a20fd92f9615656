"""Command line: ``run``, ``selftest`` and ``list-builtins``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import embed, io
from . import microlocal as ml
from .errors import ConfigError, UltraglabError
from .gevrey import default_mollifier
from .nets import (Box, EqualityMode, GenPoint, builtin_net, catalog, classical_point, combine,
                   constant_net, derivative, equality_test, point_value)
from .spectral import SpectralConfig, cone_partition, spectrum_rows, windowed_spectrum
from .gevrey import CutoffProfile

EXIT_OK, EXIT_INVALID, EXIT_ANALYSIS = 0, 2, 3
ANALYSES = ("classify", "regularity", "sigma_cone", "sing_support", "wave_front", "product_check",
            "pdo_check", "equality", "point_value", "spectrum")


def scenario_path(name):
    return resources.files("ultraglab").joinpath(f"scenarios/{name}.json")


# -- validation ----------------------------------------------------------------

def _need(d, key, ptr, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing field {key!r}", ptr)
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"field {key!r} has the wrong type", f"{ptr}/{key}")
    return v


def load_scenario(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    validate(doc)
    return doc


def validate(doc):
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object", "")
    sigma = _need(doc, "sigma", "", (int, float))
    if sigma <= 1:
        raise ConfigError("sigma must exceed 1", "/sigma")
    dim = _need(doc, "dim", "", int)
    if dim not in (1, 2):
        raise ConfigError("dim must be 1 or 2", "/dim")
    box = _need(doc, "box", "", dict)
    for k in ("lo", "hi", "n"):
        if len(_need(box, k, "/box", list)) != dim:
            raise ConfigError("box entries need one value per axis", f"/box/{k}")
    try:
        _box(doc)
    except UltraglabError as exc:
        raise ConfigError(str(exc), "/box") from None
    g = doc.get("eps_grid", {})
    if not isinstance(g, dict):
        raise ConfigError("eps_grid must be an object", "/eps_grid")
    try:
        _grid(doc)
    except (UltraglabError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "/eps_grid") from None
    ids = set()
    for i, spec in enumerate(_need(doc, "nets", "", list)):
        ptr = f"/nets/{i}"
        nid = _need(spec, "id", ptr, str)
        if nid in ids:
            raise ConfigError(f"duplicate net id {nid!r}", f"{ptr}/id")
        kinds = [k for k in ("builtin", "embed", "combine", "derivative", "constant") if k in spec]
        if len(kinds) != 1:
            raise ConfigError("a net needs exactly one of builtin/embed/combine/derivative/constant", ptr)
        kind = kinds[0]
        if kind == "builtin" and spec["builtin"] not in dict(catalog()):
            raise ConfigError(f"unknown builtin {spec['builtin']!r}", f"{ptr}/builtin")
        if kind == "combine":
            c = spec["combine"]
            if _need(c, "op", f"{ptr}/combine") not in ("add", "mul"):
                raise ConfigError("op must be add or mul", f"{ptr}/combine/op")
            for j, ref in enumerate(_need(c, "args", f"{ptr}/combine", list)):
                if ref not in ids:
                    raise ConfigError(f"unknown net {ref!r}", f"{ptr}/combine/args/{j}")
        if kind == "derivative" and _need(spec["derivative"], "of", f"{ptr}/derivative") not in ids:
            raise ConfigError("unknown net", f"{ptr}/derivative/of")
        if kind == "embed":
            e = spec["embed"]
            if _need(e, "method", f"{ptr}/embed") not in ("J0", "J"):
                raise ConfigError("method must be J0 or J", f"{ptr}/embed/method")
            _need(e, "atoms", f"{ptr}/embed", list)
            _need(e, "support", f"{ptr}/embed", list)
        ids.add(nid)
    aids = set()
    for i, a in enumerate(doc.get("analyses", [])):
        ptr = f"/analyses/{i}"
        aid = _need(a, "id", ptr, str)
        if aid in aids:
            raise ConfigError(f"duplicate analysis id {aid!r}", f"{ptr}/id")
        aids.add(aid)
        kind = _need(a, "type", ptr, str)
        if kind not in ANALYSES:
            raise ConfigError(f"unknown analysis type {kind!r}", f"{ptr}/type")
        for key in ("net", "other"):
            if key in a and a[key] not in ids:
                raise ConfigError(f"unknown net {a[key]!r}", f"{ptr}/{key}")
        if kind not in ("point_value",) and "net" not in a:
            raise ConfigError("missing field 'net'", ptr)
        if kind in ("product_check", "equality") and "other" not in a:
            raise ConfigError("missing field 'other'", ptr)
    return doc


def _box(doc):
    b = doc["box"]
    return Box(tuple(float(v) for v in b["lo"]), tuple(float(v) for v in b["hi"]),
               tuple(int(v) for v in b["n"]))


def _grid(doc):
    g = doc.get("eps_grid", {})
    return asy.EpsGrid.geometric(float(g.get("start", 1e-1)), float(g.get("stop", 1e-4)),
                                 int(g.get("count", 10)))


# -- building ------------------------------------------------------------------

def build_nets(doc):
    sigma, dim = float(doc["sigma"]), int(doc["dim"])
    moll_sigma = float(doc.get("mollifier", {}).get("sigma", sigma))
    nets = {}
    for spec in doc["nets"]:
        if "builtin" in spec:
            params = dict(spec.get("params", {}))
            if spec["builtin"] in ("mollified_delta", "mollified_heaviside", "gevrey_bump",
                                   "decaying_oscillation", "paper_sec3_counterexample"):
                params.setdefault("sigma", moll_sigma)
            f = builtin_net(spec["builtin"], dim=dim, axis=spec.get("axis"), **params)
        elif "embed" in spec:
            e = spec["embed"]
            T = embed.DistributionExpr.from_config(e)
            moll = default_mollifier(moll_sigma)
            grid = _grid(doc)
            rep = (embed.embed_compact if e["method"] == "J0" else embed.embed_cutoff)(T, moll, grid=grid,
                                                                                      max_order=0)
            f = rep.net
        elif "combine" in spec:
            c = spec["combine"]
            a, b = (nets[r] for r in c["args"])
            f = combine(a, b, c["op"], tuple(c.get("scalars", (1.0, 1.0))))
        elif "derivative" in spec:
            f = derivative(nets[spec["derivative"]["of"]], tuple(spec["derivative"]["alpha"]))
        else:
            f = constant_net(float(spec["constant"]), dim)
        f.id = spec["id"]
        nets[spec["id"]] = f
    return nets


def _probes(a, doc, cfg):
    p = a.get("probes", {})
    if "points" in p:
        return np.asarray(p["points"], dtype=float)
    return ml.probe_grid(tuple(p.get("center", [0.0] * doc["dim"])), int(p.get("half_cells", 3)),
                         int(p.get("step_cells", 1)), dim=doc["dim"], cfg=cfg)


def _policy(doc):
    p = doc.get("policies", {})
    fields = {k: p[k] for k in ("k2_min", "r_max", "eps0") if k in p}
    return ml.MicrolocalPolicy(**fields)


def _asy_policy(doc):
    p = doc.get("policies", {})
    fields = {k: p[k] for k in ("k_cap", "k_min", "r_max") if k in p}
    return asy.Policy(**fields)


def _wf_record(wf):
    return wf.to_records()


def run_analysis(a, doc, nets, tables):
    sigma = float(doc["sigma"])
    model = asy.scale_exponent(sigma)
    grid = _grid(doc)
    box = _box(doc)
    cfg = SpectralConfig(dx=float(min(box.dx)), n=int(max(box.n)))
    pol = _policy(doc)
    part = cone_partition(doc["dim"], a.get("bins"))
    f = nets.get(a.get("net"))
    kind = a["type"]
    if kind == "classify":
        order = int(a.get("max_order", 2))
        sup_box = Box(tuple(a["box"]["lo"]), tuple(a["box"]["hi"]), tuple(a["box"]["n"])) if "box" in a else box
        cls = asy.classify_function_net(f, sup_box, order, model, _asy_policy(doc), grid,
                                        full=bool(a.get("full", False)))
        tables["fits"] += io.fit_rows(f.id, sigma, cls.fits)
        return {"verdict": cls.verdict, "k_hat": cls.k_hat,
                "fits": {str(list(k)): v for k, v in sorted(cls.fits.items())}}
    if kind == "regularity":
        v = ml.regularity_test(f, grid, part, model, pol, cfg, box=box)
        return {"regular": v.regular, "failing_bins": v.failing_bins, "fit": v.fit,
                "bin_fits": {str(b): x for b, x in sorted(v.bin_fits.items())}}
    if kind == "sigma_cone":
        c = ml.sigma_cone(f, grid, part, model, pol, cfg)
        return {"bins": sorted(c.members)}
    if kind == "sing_support":
        return {"points": ml.sing_support(f, _probes(a, doc, cfg), grid, part, model, pol, cfg, box)}
    if kind == "wave_front":
        wf = ml.wave_front(f, _probes(a, doc, cfg), grid, part, model, pol, cfg, box)
        return {"probes": wf.grid, "entries": _wf_record(wf)}
    if kind == "product_check":
        v = ml.product_wavefront_check(f, nets[a["other"]], _probes(a, doc, cfg), grid, part, model, pol, cfg, box)
        d = v.details
        out = {"status": v.status, "wf_f": _wf_record(d["wf_f"]), "wf_g": _wf_record(d["wf_g"]),
               "zero_flags": {str(k): z for k, z in sorted(d["cone_sum"].zero_flags.items())},
               "tolerance": d["tolerance"]}
        if "wf_fg" in d:
            out["wf_fg"] = _wf_record(d["wf_fg"])
            out["violations"] = d["violations"]
        return out
    if kind == "pdo_check":
        coeffs = [(tuple(c["alpha"]), nets[c["net"]]) for c in a["coefficients"]]
        v = ml.pdo_wavefront_check(f, coeffs, _probes(a, doc, cfg), grid, part, model, pol, cfg, box)
        return {"status": v.status, "wf_f": _wf_record(v.details["wf_f"]),
                "wf_pf": _wf_record(v.details["wf_pf"]), "violations": v.details["violations"]}
    if kind == "equality":
        mode = a.get("mode", "strong")
        m = {"strong": EqualityMode.strong(), "associated": EqualityMode.associated()}.get(mode)
        if m is None:
            m = EqualityMode.tsense(float(a["t"]), sigma)
        tests = [CutoffProfile(sigma, t["r_inner"], t["r_outer"], tuple(t.get("center", [0.0] * doc["dim"])))
                 for t in a.get("tests", [])]
        v = equality_test(f, nets[a["other"]], m, tests, model, box, grid)
        return {"mode": mode, "holds": v.holds}
    if kind == "point_value":
        pt = a["point"]
        if "scaled" in pt:
            c = np.asarray(pt["scaled"], dtype=float)
            x = GenPoint(lambda eps: eps * c, True, box, f"eps*{c.tolist()}")
        else:
            x = classical_point(pt["classical"])
        gn = point_value(nets[a["net"]], x, model, grid, _asy_policy(doc))
        return {"verdict": gn.classification.verdict, "k_hat": gn.classification.k_hat,
                "values": [[e, v] for e, v in gn.values]}
    if kind == "spectrum":
        c = tuple(a.get("center", [0.0] * doc["dim"]))
        w = CutoffProfile(sigma, float(a.get("r_inner", 0.5)), float(a.get("r_outer", 1.0)), c)
        profiles = windowed_spectrum(f, w, list(grid), part, cfg)
        tables["spectra"] += spectrum_rows(f.id, profiles)
        return {"bins": part.size, "rows": sum(len(p.samples) for p in profiles)}
    raise ConfigError(f"unknown analysis type {kind!r}", "")


def versions():
    out = {}
    for pkg in ("ultraglab", "numpy", "scipy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def run_scenario(path, out_dir, threads=1):
    """Run a scenario; returns the exit code.  Raises ConfigError on bad input."""
    t0 = time.perf_counter()
    doc = load_scenario(path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ml.set_threads(threads)
    try:
        nets = build_nets(doc)
    except UltraglabError as exc:
        raise ConfigError(f"cannot build nets: {exc}", "/nets") from None
    tables = {"fits": [], "spectra": []}
    records, failed = [], []
    for a in doc.get("analyses", []):
        try:
            result = run_analysis(a, doc, nets, tables)
            records.append({"id": a["id"], "type": a["type"], "status": "ok", "result": result})
        except UltraglabError as exc:
            failed.append(a["id"])
            records.append({"id": a["id"], "type": a["type"], "status": "error",
                            "error": {"kind": type(exc).__name__, "message": str(exc)}})
    ml.set_threads(1)
    report = {"scenario": doc, "analyses": records, "failed": failed, "versions": versions()}
    (out / "report.json").write_text(io.dumps(report), encoding="utf-8")
    io.write_csv(out / "fits.csv", io.FIT_HEADER, tables["fits"])
    io.write_csv(out / "spectra.csv", io.SPECTRUM_HEADER, tables["spectra"])
    (out / "timing.json").write_text(io.dumps({"wall_clock_seconds": time.perf_counter() - t0}),
                                     encoding="utf-8")
    return EXIT_ANALYSIS if failed else EXIT_OK


# -- commands ------------------------------------------------------------------

def cmd_run(args):
    try:
        return run_scenario(args.scenario, args.out, args.threads)
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID


def cmd_selftest(args):
    from . import battery
    ml.set_threads(args.threads)
    results = battery.run_all(inject=args.inject, log=lambda r: print(r.line(), flush=True))
    ml.set_threads(1)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    for r in results:
        print(f"criterion {r.id:2d}: {r.seconds:.1f} s", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = [{"id": r.id, "title": r.title, "passed": r.passed, "metrics": r.metrics} for r in results]
        (out / "selftest.json").write_text(io.dumps(report), encoding="utf-8")
    return EXIT_OK if passed == len(results) else 1


def cmd_list(args):
    for name, desc in catalog():
        print(f"{name}\t{desc}")
    return EXIT_OK


def main(argv=None):
    p = argparse.ArgumentParser(prog="ultraglab", description="Gevrey-scale generalized function toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", required=True)
    r.add_argument("--threads", type=int, default=1)
    r.set_defaults(fn=cmd_run)
    s = sub.add_parser("selftest", help="run the acceptance batteries")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--inject", choices=["mollifier-tolerance"], help=argparse.SUPPRESS)
    s.set_defaults(fn=cmd_selftest)
    b = sub.add_parser("list-builtins", help="print the net catalog")
    b.set_defaults(fn=cmd_list)
    args = p.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
