"""File formats: sampled-net binary arrays, CSV tables, JSON reports.

Binary layout (little-endian): magic ``UGNA``, uint32 version, uint32 dim,
uint32 n per axis, uint32 eps count, float64 lo and hi per axis, float64
eps values, then complex samples as interleaved re/im float64 in C order
with shape (eps count, *n).
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
import struct

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError, OutOfDomain
from .nets import Box, Net

MAGIC = b"UGNA"
VERSION = 1


def write_array(path, box, eps, values):
    eps = np.asarray(eps, dtype="<f8")
    values = np.asarray(values, dtype="<c16")
    if values.shape != (eps.size, *box.n):
        raise ValueError(f"values shape {values.shape} does not match {(eps.size, *box.n)}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, box.dim))
        fh.write(struct.pack(f"<{box.dim}I", *box.n))
        fh.write(struct.pack("<I", eps.size))
        fh.write(struct.pack(f"<{2 * box.dim}d", *box.lo, *box.hi))
        fh.write(eps.tobytes())
        fh.write(values.tobytes())


def read_array(path):
    """(box, eps, values) from a binary array file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ConfigError("not a sampled-net array file", path)
    version, dim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ConfigError(f"unsupported array version {version}", path)
    off = 12
    n = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    (count,) = struct.unpack_from("<I", raw, off)
    off += 4
    bounds = struct.unpack_from(f"<{2 * dim}d", raw, off)
    off += 16 * dim
    eps = np.frombuffer(raw, "<f8", count, off).copy()
    off += 8 * count
    size = count * int(np.prod(n))
    if len(raw) - off != 16 * size:
        raise ConfigError("array file is truncated", path)
    values = np.frombuffer(raw, "<c16", size, off).reshape(count, *n).copy()
    return Box(tuple(bounds[:dim]), tuple(bounds[dim:]), tuple(n)), eps, values


def sample_net(f, box, eps):
    mesh = box.mesh()
    return np.stack([f.value(e, *mesh) for e in eps])


def sampled_net(path, id=None):
    """Net that interpolates stored samples (linear); eps must be stored."""
    box, eps, values = read_array(path)
    interps = {float(e): RegularGridInterpolator(box.axes(), v, bounds_error=False, fill_value=0.0)
               for e, v in zip(eps, values)}

    def ev(e, *x):
        key = float(e)
        if key not in interps:
            near = min(interps, key=lambda s: abs(s - key))
            if abs(near - key) > 1e-12 * key:
                raise OutOfDomain(f"eps={e} is not stored in {path}")
            key = near
        pts = np.stack(np.broadcast_arrays(*x), axis=-1)
        return interps[key](pts)

    return Net(id or str(path), box.dim, ev, None, None, {"file": str(path)},
               max_order=2, domain=box, resolution=lambda e: float(min(box.dx)))


def write_mollifier(prefix, moll):
    """<prefix>.bin holds phi on its box; <prefix>.json the metadata."""
    write_array(f"{prefix}.bin", moll.box, [1.0], moll.phi_samples[None, :])
    d = moll.diagnostics
    meta = {
        "sigma": moll.sigma,
        "xi_inner": moll.xi_inner,
        "xi_outer": moll.xi_outer,
        "support_radius": moll.support_radius,
        "box": moll.box.to_dict(),
        "diagnostics": {
            "moment_errors": {str(k): v for k, v in d.moment_errors.items()},
            "decay_fit": list(d.decay_fit),
            "s_sigma_norm": d.s_sigma_norm,
            "moment_cap": d.moment_cap,
        },
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        fh.write(dumps(meta))


def read_mollifier(prefix, atol=1e-12):
    """Rebuild the mollifier from its metadata and check the stored samples."""
    from .gevrey import build_mollifier
    with open(f"{prefix}.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    box, _, values = read_array(f"{prefix}.bin")
    m = build_mollifier(meta["sigma"], box, moment_cap=meta["diagnostics"]["moment_cap"],
                        xi_inner=meta["xi_inner"], xi_outer=meta["xi_outer"])
    if np.max(np.abs(m.phi_samples - values[0].real)) > atol:
        raise ConfigError("stored samples differ from the rebuilt mollifier", f"{prefix}.bin")
    return m


FIT_HEADER = ("net_id", "alpha", "sigma", "log_c", "k", "sign", "residual", "saturated_count")
SPECTRUM_HEADER = ("net_id", "x0", "bin", "eps", "xi_shell", "magnitude", "saturated")


def fit_rows(net_id, sigma, fits):
    return [(net_id, list(a), sigma, f.log_c, f.k, f.sign, f.residual_rms, f.saturated_count)
            for a, f in sorted(fits.items())]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return _num(float(v))
    return str(v)


def _num(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jsonable(obj):
    """Plain JSON data; non-finite floats become strings."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v) for v in items]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else _num(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj):
    # repr-based float output is the shortest round-trip form
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
