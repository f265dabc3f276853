"""How long can a loop stay nonconvex?  Not long, and here is the receipt.

A circle with a fast twelve-lobed ripple starts with its curvature dipping
well below zero.  The flow smooths high frequencies almost instantly, and
the total time any record still shows nonpositive minimum curvature is
charged against the cap (L0 / 2 pi)^4 - (A0 / pi)^2, which depends only on
the starting length and area.  A round circle has cap zero: it can never
lose convexity at all.

Run it:  python3 demos/waiting_for_convexity.py
"""

import math

from curvediffusion.analysis import positivity_waiting_measure, waiting_time_bound
from curvediffusion.flow import FlowConfig, run
from curvediffusion.geometry import ShapeSpec, generate, resample_uniform


def main() -> None:
    spec = ShapeSpec("fourier-perturbed-circle", r0=1.0,
                     modes=((12, 2.0 / 143.0, 0.0),))
    initial = resample_uniform(generate(spec, 256))
    result = run(initial, FlowConfig(n=256, dt=1e-5, max_steps=30))

    print(f"{'step':>4} {'min curvature':>14}")
    for index, record in enumerate(result.records[:10], start=1):
        marker = "  <- nonconvex" if record.metrics.min_curvature <= 0.0 else ""
        print(f"{index:>4} {record.metrics.min_curvature:>14.4f}{marker}")
    print("   ... stays convex from here on")

    first = result.initial_metrics
    measure = positivity_waiting_measure(result.records)
    bound = waiting_time_bound(first.length, first.signed_area)
    print()
    print(f"time spent nonconvex: {measure:.1e}")
    print(f"cap from L0 and A0:   {bound:.3e}")
    print(f"round circle cap:     "
          f"{waiting_time_bound(2.0 * math.pi, math.pi):.1e} "
          f"(zero up to rounding)")


if __name__ == "__main__":
    main()
