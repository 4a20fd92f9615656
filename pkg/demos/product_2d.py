"""Product check for two transversal mollified jumps in the plane.

H(x1) and H(x2) are singular along orthogonal lines; their wave fronts at
the origin never contain opposite directions, so the product inclusion
applies.  Takes about a minute.
"""
import time

from ultraglab import asymptotics as asy
from ultraglab import microlocal as ml
from ultraglab.nets import Box, builtin_net


def main():
    f = builtin_net("mollified_heaviside", dim=2, axis=0)
    g = builtin_net("mollified_heaviside", dim=2, axis=1)
    probes = ml.probe_grid((0.0, 0.0), 1, 2, dim=2)
    box = Box((-8.0, -8.0), (8.0, 8.0), (256, 256))
    t0 = time.perf_counter()
    v = ml.product_wavefront_check(f, g, probes, asy.DEFAULT_GRID, box=box)
    print(f"status {v.status} in {time.perf_counter() - t0:.0f} s")
    for key in ("wf_f", "wf_g", "wf_fg"):
        wf = v.details[key]
        centre = len(probes) // 2
        print(f"{key:6s} bins at the origin: {sorted(wf.cone_at(centre))}")


if __name__ == "__main__":
    main()
