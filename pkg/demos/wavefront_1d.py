"""Wave-front estimates for the 1D battery nets around the origin.

Prints, per net, the probe points with a nonempty local cone and the
direction bins found there, plus the worst k2 of the failing fits.
"""
from ultraglab import asymptotics as asy
from ultraglab import microlocal as ml
from ultraglab.nets import builtin_net

NETS = ["mollified_delta", "mollified_heaviside", "cauchy", "gaussian"]


def main():
    probes = ml.probe_grid((0.0,), 3)
    for name in NETS:
        wf = ml.wave_front(builtin_net(name), probes, asy.DEFAULT_GRID)
        pts = ", ".join(f"{x[0]:+.4f}" for x in wf.point_coords()) or "none"
        labels = "".join(wf.partition.bins[b].label for b in sorted(wf.bins())) or "-"
        k2 = max((f.k2 for f in wf.diagnostics.values()), default=float("nan"))
        print(f"{name:22s} points [{pts}]  bins {labels:3s}  max k2 {k2:.3g}")


if __name__ == "__main__":
    main()
