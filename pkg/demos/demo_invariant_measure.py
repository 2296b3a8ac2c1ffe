"""Hemi-ball geometry of the inversion-invariant density.

The density v(x) = (1 + |x|^2)^(-N) is the fixed point of two-point
symmetrization.  Its signature property: for every point u*e on a ray,
the ball holding half the mass "beyond" u*e passes through the antipode
-e/u, so its center is (u - 1/u)/2 and its radius (u + 1/u)/2.  We verify
that, the mass identity r_a^(2N) v(a) = const across centers a, and the
radial-derivative identity v'(x) = -N v(x)/rho.
"""

import numpy as np

from invpos import (
    ExtremizerSpec,
    Field,
    Measure,
    box_grid,
    check_mass_identity,
    check_pointwise_invariance,
    check_radial_derivative,
    fit_invariant_density,
    hemiball_on_ray,
    solve_mapping_ball,
)
from invpos.geometry import Ball


def standard_density(n=2048, halfwidth=20.0):
    g = box_grid([-halfwidth], [halfwidth], n)
    x = g.axis_centers(0)
    tail = ExtremizerSpec(alpha=1.0, beta=1.0, center=np.array([0.0]), power=1.0)
    return Field(g, (1.0 + x**2) ** (-1.0), tail=tail)


def main():
    v = standard_density()
    m = Measure(density=v)
    print(f"total mass of (1+x^2)^(-1) on the line: {m.total_mass:.6f}  (pi = {np.pi:.6f})")
    print()

    e = np.array([1.0])
    print(f"{'u':>5} {'center':>10} {'exact':>10} {'radius':>10} {'exact':>10}")
    for u in [0.5, 1.0, 2.0, 3.0]:
        res = hemiball_on_ray(m, e, u)
        c_exact = (u - 1.0 / u) / 2.0
        r_exact = (u + 1.0 / u) / 2.0
        print(f"{u:>5.2f} {res.center[0]:>10.5f} {c_exact:>10.5f} "
              f"{res.radius:>10.5f} {r_exact:>10.5f}")
    print("(1-D oracle: arctan(u) + arctan(1/u) = pi/2 forces the antipode -1/u)")
    print()

    # Mapping ball: the ball sending mass fraction s to radius fraction t.
    res = solve_mapping_ball(m, e, s=0.5, t=2.0)
    print(f"mapping ball for s=1/2 -> t=2: center={res.center[0]:.5f} "
          f"radius={res.radius:.5f}  (unit ball expected, t*s = rho^2)")
    print()

    cv = check_mass_identity(v, centers=np.linspace(-0.8, 0.8, 10)[:, None])
    print(f"mass identity r_a^(2N) v(a): coefficient of variation {cv:.2e}")

    dev = check_pointwise_invariance(v, Ball(center=np.array([0.75]), radius=1.25))
    print(f"pointwise inversion invariance (u=2 hemi-ball): max deviation {dev:.2e}")

    lhs, rhs = check_radial_derivative(v, np.array([1.5]))
    print(f"radial derivative identity at x=1.5: v' = {lhs:.5f}, "
          f"-N v/rho = {rhs:.5f}")

    fit = fit_invariant_density(v)
    print(f"family fit: alpha={fit.alpha:.4f} beta={fit.beta:.4f} "
          f"fit error {fit.fit_error:.2e}, mass divergence: {fit.mass_divergence}")


if __name__ == "__main__":
    main()
