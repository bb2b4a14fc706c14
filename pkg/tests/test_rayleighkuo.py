"""Solver correctness: manufactured solutions, symmetries, boundary values.

The limiting-absorption checks include an exact jump oracle: for the linear
profile at beta 0 the potential term drops out, so the two-sided boundary
values differ by the residue term -2 pi i omega(c) G(y, c) with G the
Dirichlet Green's function of d_yy - alpha^2.  With omega = sin(pi y) and
alpha = 1 the maximal imaginary jump is 2 pi sinh(1/2)^2 / sinh(1).
"""

import numpy as np
import pytest

from betaplane.fieldops import ComplexField, Grid
from betaplane.profiles import critical_points, make_profile
from betaplane.rayleighkuo import (AbsorptionConfig, BvpProblem,
                                   IllConditioned, NoConvergence,
                                   RealSpectralParameter,
                                   critical_layer_probe, limiting_absorption,
                                   resolvent_norm_scan, solve_bvp,
                                   weighted_quotient)

COUETTE = make_profile("couette", {})
SINUS = make_profile("sinus", {})


def sine_field(grid, k=1):
    length = grid.y2 - grid.y1
    return ComplexField(grid, np.sin(k * np.pi * (grid.nodes - grid.y1) / length) + 0j)


def manufactured(profile, grid, alpha, beta, c, phi_star, d2_star):
    u = profile.eval(grid.nodes)
    d2u = profile.eval(grid.nodes, 2)
    f = (u - c) * (d2_star - alpha ** 2 * phi_star) - (d2u - beta) * phi_star
    return ComplexField(grid, f)


def test_manufactured_quadratic_couette():
    grid = Grid(64, 0.0, 1.0)
    y = grid.nodes
    phi_star = y * (1 - y)
    forcing = manufactured(COUETTE, grid, 1.0, 0.3, 1j, phi_star,
                           np.full(grid.n + 1, -2.0))
    sol = solve_bvp(BvpProblem(COUETTE, 1.0, 0.3, 1j, forcing), grid)
    assert np.max(np.abs(sol.phi.values - phi_star)) < 1e-12
    # the unscaled residual carries the O(n^4) differentiation norm
    assert sol.residual_sup < 1e-7
    # phi* = y - y^2 has slopes 1 and -1 at the walls
    assert abs(sol.boundary_derivatives[0] - 1.0) < 1e-10
    assert abs(sol.boundary_derivatives[1] + 1.0) < 1e-10


def test_manufactured_quadratic_sinus():
    grid = Grid(64, -1.0, 1.0)
    phi_star = 1.0 - grid.nodes ** 2
    forcing = manufactured(SINUS, grid, 1.2, 0.4, 2 + 0.5j, phi_star,
                           np.full(grid.n + 1, -2.0))
    sol = solve_bvp(BvpProblem(SINUS, 1.2, 0.4, 2 + 0.5j, forcing), grid)
    assert np.max(np.abs(sol.phi.values - phi_star)) < 1e-12
    assert sol.residual_sup < 1e-5
    assert abs(sol.boundary_derivatives[0] - 2.0) < 1e-9
    assert abs(sol.boundary_derivatives[1] + 2.0) < 1e-9


def test_h1_ratio_matches_definition():
    grid = Grid(64, 0.0, 1.0)
    forcing = sine_field(grid, 2)
    alpha = 1.0
    sol = solve_bvp(BvpProblem(COUETTE, alpha, 0.3, 1j, forcing), grid)

    def split(vals):
        d = grid.diff(vals)
        return (np.sqrt(abs(grid.quad(np.abs(d) ** 2)))
                + alpha * np.sqrt(abs(grid.quad(np.abs(vals) ** 2))))

    expect = split(sol.phi.values) * alpha / split(forcing.values)
    assert sol.h1_ratio == pytest.approx(expect, rel=1e-12)


def test_conjugation_symmetry():
    rng = np.random.default_rng(5)
    grid = Grid(96, -1.0, 1.0)
    vals = rng.standard_normal(grid.n + 1) + 1j * rng.standard_normal(grid.n + 1)
    vals[0] = vals[-1] = 0.0
    c = 0.4 + 0.7j
    sol = solve_bvp(BvpProblem(SINUS, 1.1, 0.6, c, ComplexField(grid, vals)), grid)
    conj = solve_bvp(BvpProblem(SINUS, 1.1, 0.6, np.conj(c),
                                ComplexField(grid, np.conj(vals))), grid)
    assert np.max(np.abs(conj.phi.values - np.conj(sol.phi.values))) < 1e-12


def test_real_parameter_in_range_rejected():
    grid = Grid(64, 0.0, 1.0)
    with pytest.raises(RealSpectralParameter):
        solve_bvp(BvpProblem(COUETTE, 1.0, 0.0, 0.5 + 0j, sine_field(grid)), grid)
    # real but outside Ran(u) is a regular solve
    sol = solve_bvp(BvpProblem(COUETTE, 1.0, 0.0, -0.5 + 0j, sine_field(grid)), grid)
    assert sol.residual_sup < 1e-7


def test_ill_conditioned_guard():
    # the equilibrated row blows up like beta/eps when c pinches the range
    grid = Grid(256, 0.0, 1.0)
    with pytest.raises(IllConditioned):
        solve_bvp(BvpProblem(COUETTE, 1.0, 0.5, 0.5 + 1e-12j, sine_field(grid)), grid)


def test_forcing_grid_mismatch():
    grid = Grid(64, 0.0, 1.0)
    with pytest.raises(ValueError):
        solve_bvp(BvpProblem(COUETTE, 1.0, 0.0, 1j, sine_field(Grid(64, 0.0, 1.0))),
                  grid)


def test_weighted_quotient():
    # beta = u''(0) puts the single depletion point at the interior maximum
    crit = critical_points(SINUS, -np.pi ** 2 / 2)
    grid = Grid(128, -1.0, 1.0)  # even n: one node exactly at the root
    omega = ComplexField(grid, grid.nodes * np.sin(np.pi * grid.nodes) + 0j)
    quot = weighted_quotient(omega, crit, certified_zero=True)
    assert np.max(np.abs(quot.values - np.sin(np.pi * grid.nodes))) < 1e-12
    with pytest.raises(ValueError):
        weighted_quotient(omega, crit)
    # empty depletion set: the quotient is the field itself
    empty = critical_points(SINUS, 0.0)
    assert np.array_equal(weighted_quotient(omega, empty).values, omega.values)


def test_resolvent_norm_scan_records_failures():
    grid = Grid(64, 0.0, 1.0)
    omega = sine_field(grid)
    pts = resolvent_norm_scan(COUETTE, 1.0, 0.0, omega,
                              [0.5 + 0j, 0.5 + 0.1j, 2.0 + 0j], grid)
    assert pts[0].error is not None and np.isnan(pts[0].h1_ratio)
    assert pts[1].error is None and pts[1].h1_ratio > 0
    assert pts[2].error is None
    # empty depletion set: weighted ratio is h1_ratio with the alpha factor off
    assert pts[1].weighted_ratio == pytest.approx(pts[1].h1_ratio / 1.0, rel=1e-12)


def test_absorption_side_validation():
    grid = Grid(63, 0.0, 1.0)
    cfg = AbsorptionConfig()
    omega = sine_field(grid)
    for side in ("+", 0, 2):
        with pytest.raises(ValueError):
            limiting_absorption(COUETTE, 1.0, 0.0, 0.5, omega, side, cfg, grid)


def test_absorption_config_validation():
    with pytest.raises(ValueError):
        AbsorptionConfig(eps_schedule=(1e-2, 1e-2))
    with pytest.raises(ValueError):
        AbsorptionConfig(eps_schedule=())
    with pytest.raises(ValueError):
        AbsorptionConfig(extrapolation_order=2)


def test_absorption_off_range_continuous():
    grid = Grid(64, 0.0, 1.0)
    cfg = AbsorptionConfig()
    omega = sine_field(grid)
    plus = limiting_absorption(COUETTE, 1.0, 0.0, 2.0, omega, +1, cfg, grid)
    minus = limiting_absorption(COUETTE, 1.0, 0.0, 2.0, omega, -1, cfg, grid)
    direct = solve_bvp(BvpProblem(COUETTE, 1.0, 0.0, 2.0 + 0j, omega), grid)
    assert np.array_equal(plus.values, minus.values)
    assert np.array_equal(plus.values, direct.phi.values)


def test_absorption_in_range_converges_on_odd_grid():
    # odd node count keeps the collocation rows away from u = c; the two
    # signed limits then agree to the advertised tolerance (the jump sits
    # below grid resolution at this depth of the eps schedule)
    grid = Grid(127, 0.0, 1.0)
    cfg = AbsorptionConfig()
    omega = sine_field(grid)
    plus = limiting_absorption(COUETTE, 1.0, 0.0, 0.5, omega, +1, cfg, grid)
    minus = limiting_absorption(COUETTE, 1.0, 0.0, 0.5, omega, -1, cfg, grid)
    assert np.max(np.abs(plus.values - minus.values)) < 1e-6


def test_absorption_jump_oracle():
    """Resolved-regime schedules reproduce the analytic resolvent jump."""
    grid = Grid(511, 0.0, 1.0)
    omega = sine_field(grid)
    exact = 2 * np.pi * np.sinh(0.5) ** 2 / np.sinh(1.0)
    jumps = []
    for schedule in ((1.6e-2, 8e-3, 4e-3, 2e-3), (1.2e-2, 6e-3, 3e-3, 1.5e-3)):
        cfg = AbsorptionConfig(eps_schedule=schedule, convergence_tol=0.05)
        plus = limiting_absorption(COUETTE, 1.0, 0.0, 0.5, omega, +1, cfg, grid)
        minus = limiting_absorption(COUETTE, 1.0, 0.0, 0.5, omega, -1, cfg, grid)
        jumps.append(float(np.max(np.abs((plus.values - minus.values).imag))))
    for jump in jumps:
        assert abs(jump - exact) < 0.05
    assert abs(jumps[0] - jumps[1]) < 0.02


def test_absorption_no_convergence_at_resonance():
    # alpha on the resonant curve at beta 0: the embedded eigenvalue c = 1/2
    # keeps the extrapolants apart through the whole schedule
    grid = Grid(255, -1.0, 1.0)
    y = grid.nodes
    omega = ComplexField(grid, np.sin(np.pi * (y + 1) / 2)
                         + 0.3 * np.sin(np.pi * (y + 1)) + 0j)
    with pytest.raises(NoConvergence):
        limiting_absorption(SINUS, np.sqrt(3.0) * np.pi / 2, 0.0, 0.5, omega,
                            +1, AbsorptionConfig(), grid)


def test_layer_probe_validation():
    grid = Grid(128, -1.0, 1.0)
    omega = sine_field(grid)
    with pytest.raises(ValueError):
        critical_layer_probe(SINUS, 1.0, 0.0, 0.3, (1e-2,), omega, grid)
    # beta between u''(0) and u''(0.2): the sign condition fails near y0
    with pytest.raises(ValueError):
        critical_layer_probe(SINUS, 1.0, -4.5, 0.0, (1e-2,), omega, grid)


def test_layer_probe_degenerate_on_zero_forcing():
    grid = Grid(128, -1.0, 1.0)
    omega = ComplexField(grid, np.zeros(grid.n + 1, dtype=complex))
    probe = critical_layer_probe(SINUS, 1.0, 0.0, 0.0, (1e-2, 1e-3), omega, grid)
    assert probe.degenerate
    assert np.isnan(probe.exponent_phi)
