"""Integrate a few cotangent trajectories and check what should be conserved.

Three models, three behaviours:

  * FlatTorus(2): straight lines, the exact integrator just evaluates them.
  * RoundSphere2: great circles, period pi at unit covector (speed 2); the
    implicit midpoint rule holds the sphere constraints to rounding.
  * Nil3: has a closed-form flow too, so the midpoint rule can be judged
    against it, and energy drift over a long window stays at rounding.
"""

import math

from slowvol.flow_models import PhasePoint, FlowConfig, chart_distance, flow, hamiltonian, parse_model


def main():
    flat = parse_model("FlatTorus(2)")
    y = flow(flat, PhasePoint((0, 0), (1, 0)), 0.25, FlowConfig(integrator="exact"))
    print(f"flat torus, t=0.25:  q = {y.q}  (wrapped into [-1/2, 1/2))")

    sphere = parse_model("RoundSphere2")
    x = PhasePoint((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
    cfg = FlowConfig(integrator="implicit_midpoint", step=1e-3)
    y = flow(sphere, x, math.pi, cfg)
    q = y.q
    print(f"round sphere, one period:  chart distance to start = "
          f"{chart_distance(sphere, y, x):.2e}")
    print(f"  constraint residuals: |q|^2-1 = {abs(sum(v * v for v in q) - 1):.2e}, "
          f"<q,p> = {abs(sum(a * b for a, b in zip(q, y.p))):.2e}")

    nil = parse_model("Nil3")
    x = PhasePoint((0.1, -0.2, 0.05), (0.6, -0.3, 0.45))
    ref = flow(nil, x, 1.0, FlowConfig(integrator="exact"))
    y = flow(nil, x, 1.0, cfg)
    print(f"nil group, t=1:  midpoint vs closed form = {chart_distance(nil, y, ref):.2e}")
    h0 = hamiltonian(nil, x)
    y16 = flow(nil, x, 16.0, cfg)
    print(f"nil group, t=16:  relative energy drift = "
          f"{abs(hamiltonian(nil, y16) - h0) / h0:.2e}")


if __name__ == "__main__":
    main()
