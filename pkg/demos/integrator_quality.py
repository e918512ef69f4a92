"""Check the two properties the volume measurements lean on.

First, the implicit midpoint rule is second order: halving the step on a
nil group trajectory shrinks the error by about 4.  Second, the flows are
homogeneous of degree 2 in the fiber: flowing a dilated covector for time
t should agree with dilating the time-r*t flow.  The residual of that
round trip shrinks at the integrator's order and vanishes for closed-form
flows, which is the internal consistency check behind the scaling claims.
"""

from slowvol.flow_models import (
    FlowConfig,
    PhasePoint,
    chart_distance,
    conjugation_residual,
    flow,
    parse_model,
)


def main():
    nil = parse_model("Nil3")
    x = PhasePoint((0.1, -0.2, 0.05), (0.6, -0.3, 0.45))
    ref = flow(nil, x, 1.0, FlowConfig(integrator="exact"))

    print("step      trajectory error   conjugation residual")
    prev = None
    for step in (4e-3, 2e-3, 1e-3):
        cfg = FlowConfig(integrator="implicit_midpoint", step=step)
        err = chart_distance(nil, flow(nil, x, 1.0, cfg), ref)
        res = conjugation_residual(nil, x, t=0.5, r=2.0, config=cfg)
        ratio = "" if prev is None else f"   (error ratio {prev / err:.2f})"
        print(f"{step:.0e}     {err:.3e}          {res:.3e}{ratio}")
        prev = err

    exact_res = conjugation_residual(nil, x, t=0.5, r=2.0,
                                     config=FlowConfig(integrator="exact"))
    print(f"closed form residual: {exact_res:.3e}  (rounding only)")


if __name__ == "__main__":
    main()
