"""Acceptance criteria 1-13, checked against the shipped ``selftest`` command.

The selftest runs once per thread count (1, 4, 8) plus a repeat at 1 thread;
metrics are re-checked here at the stated tolerances and one pass/fail line
per criterion is printed in the terminal summary.
"""
import json
import re
import subprocess
import sys
import time

import pytest

from ultraglab import embed

LINES = {}
RUNS = (("t1", 1), ("t4", 4), ("t8", 8), ("t1_again", 1))


def _selftest(out, threads):
    t0 = time.perf_counter()
    r = subprocess.run([sys.executable, "-m", "ultraglab", "selftest", "--threads", str(threads),
                        "--out", str(out)], capture_output=True, text=True)
    wall = time.perf_counter() - t0
    secs = {int(m.group(1)): float(m.group(2))
            for m in re.finditer(r"criterion\s+(\d+): ([\d.]+) s", r.stderr)}
    return {"code": r.returncode, "stdout": r.stdout, "wall": wall, "seconds": secs,
            "bytes": (out / "selftest.json").read_bytes() if (out / "selftest.json").exists() else b""}


@pytest.fixture(scope="module")
def first(tmp_path_factory):
    return _selftest(tmp_path_factory.mktemp("t1"), 1)


@pytest.fixture(scope="module")
def report(first):
    return {c["id"]: c for c in json.loads(first["bytes"])}


def _record(cid, ok, detail):
    LINES[cid] = f"criterion {cid:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    print(LINES[cid])
    assert ok, LINES[cid]


def test_criterion_01_scale_fit(report, first):
    m = report[1]["metrics"]
    ok = (report[1]["passed"] and m["nets"] == 60 and m["max_rel_err_clean"] <= 1e-6
          and m["max_rel_err_noisy"] <= 0.10 and first["seconds"][1] < 5.0)
    _record(1, ok, f"clean {m['max_rel_err_clean']:.2e} <= 1e-6, noisy {m['max_rel_err_noisy']:.3f} <= 0.10, "
                   f"{first['seconds'][1]:.2f} s < 5 s")


def test_criterion_02_moments(report):
    m = report[2]["metrics"]
    ok = report[2]["passed"] and m["n"] == 4096 and m["mass_error"] <= 1e-8 and m["max_moment_error"] <= 1e-6
    _record(2, ok, f"mass {m['mass_error']:.1e} <= 1e-8, moments {m['max_moment_error']:.1e} <= 1e-6")


def test_criterion_03_embedding(report):
    m = report[3]["metrics"]
    thr = embed.embedding_threshold()["threshold"]
    ok = report[3]["passed"] and m["sign"] == -1 and m["k_hat"] >= thr and m["threshold"] == thr
    _record(3, ok, f"sign {m['sign']}, k_hat {m['k_hat']:.2f} >= {thr} (oracle {m['oracle_k']} at n=8192)")


def test_criterion_04_cutoff(report):
    m = report[4]["metrics"]
    ok = report[4]["passed"] and all(m[k]["verdict"] == "Negligible" and m[k]["k_hat"] >= 1
                                     for k in ("delta", "heaviside"))
    _record(4, ok, f"delta k_hat {m['delta']['k_hat']}, heaviside k_hat {m['heaviside']['k_hat']} (>= 1)")


def test_criterion_05_algebra(report):
    m = report[5]["metrics"]
    ok = (report[5]["passed"] and m["nets"] == 20 and not m["product_mismatches"]
          and not m["label_mismatches"] and not m["fast_path_mismatches"])
    _record(5, ok, f"{m['nets']} nets, {m['products']} products, 100% agreement")


def test_criterion_06_point_values(report):
    m = report[6]["metrics"]
    witness_neg_at_2 = m["witness_verdict"] == "ExactZero" or (
        m["witness_verdict"] == "Negligible" and m["witness_k_hat"] >= 2)
    ok = (report[6]["passed"] and len(m["classical"]) == 5
          and all(v == "ExactZero" for v in m["classical"].values())
          and abs(m["gen_point_k_hat"] - 1.0) <= 0.2 and not witness_neg_at_2)
    _record(6, ok, f"5 ExactZero, gen-point k_hat {m['gen_point_k_hat']:.3f}, "
                   f"witness {m['witness_verdict']} k_hat {m['witness_k_hat']:.3f}")


def test_criterion_07_regularity(report):
    m = report[7]["metrics"]
    ok = report[7]["passed"] and m["gaussian"]["regular"] and m["bump"]["regular"] \
        and not m["delta"]["regular"] and not m["delta_squared"]["regular"] \
        and m["gaussian"]["k2"] >= 0.5 and m["bump"]["k2"] >= 0.5 \
        and m["delta"]["k2"] <= 0.1 and m["delta_squared"]["k2"] <= 0.1
    _record(7, ok, "4/4, k2 " + ", ".join(f"{k} {v['k2']:.3g}" for k, v in sorted(m.items())))


def test_criterion_08_wavefront(report, first):
    m = report[8]["metrics"]
    dx = 256.0 / 4096
    want = {"delta": [0, 1], "heaviside": [0, 1], "cauchy": [0], "gaussian": []}
    ok = report[8]["passed"] and first["seconds"][8] < 60.0
    for k, bins in want.items():
        ok = ok and m[k]["bins"] == bins and all(abs(p) <= 2 * dx + 1e-12 for p in m[k]["points"])
        ok = ok and (bool(m[k]["points"]) == bool(bins))
    _record(8, ok, f"bins exact, points within 2 cells, {first['seconds'][8]:.1f} s < 60 s")


def test_criterion_09_monotonicity(report):
    m = report[9]["metrics"]
    ok = report[9]["passed"] and len(m) == 8 and all(v == "Passed" for v in m.values())
    _record(9, ok, f"{sum(v == 'Passed' for v in m.values())}/{len(m)} inclusions pass")


def test_criterion_10_product(report):
    m = report[10]["metrics"]
    ok = (report[10]["passed"] and m["cauchy_cauchy"] == "Passed" and m["delta_delta"] == "HypothesisFailed"
          and m["heaviside_2d"] == "Passed" and m["heaviside_2d_under_120s"])
    _record(10, ok, f"cauchy {m['cauchy_cauchy']}, delta {m['delta_delta']}, 2D {m['heaviside_2d']} (< 120 s)")


def test_criterion_11_strict_inclusion(report):
    m = report[11]["metrics"]
    ok = report[11]["passed"] and all(m[s]["verdict"] == "Negligible" and m[s]["k_hat"] >= 1
                                      for s in ("1.5", "3.0"))
    _record(11, ok, f"k_hat {m['1.5']['k_hat']:.2f} at sigma 1.5, {m['3.0']['k_hat']:.2f} at sigma 3")


def test_criterion_12_determinism(first, report, tmp_path_factory):
    blobs = {"t1": first["bytes"]}
    codes = {"t1": first["code"]}
    for name, n in RUNS[1:]:
        r = _selftest(tmp_path_factory.mktemp(name), n)
        blobs[name], codes[name] = r["bytes"], r["code"]
    same = len(set(blobs.values())) == 1 and bool(blobs["t1"])
    ok = same and report[12]["passed"] and all(c == 0 for c in codes.values())
    _record(12, ok, "selftest.json byte-identical for threads 1, 4, 8 and a rerun" if same
            else f"reports differ: {sorted(len(b) for b in blobs.values())} bytes")


def test_criterion_13_wallclock(report, first):
    ok = report[13]["passed"] and first["wall"] < 300.0 and first["code"] == 0
    _record(13, ok, f"selftest took {first['wall']:.0f} s < 300 s")
