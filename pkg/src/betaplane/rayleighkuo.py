"""Inhomogeneous Rayleigh-Kuo solves, limiting absorption and layer probes.

The central object is the boundary value problem

    (u - c)(Phi'' - alpha^2 Phi) - (u'' - beta) Phi = omega,
    Phi(y1) = Phi(y2) = 0,

for a complex spectral parameter c.  Solves are dense and direct on the
collocation grid.  Interior rows are assembled in row-equilibrated form,
dividing through by (u - c), so the estimated condition number reflects
the solve actually performed rather than the N^4 scale of the raw
differentiation matrix; see the IllConditioned guard below.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
import scipy.linalg.lapack as lapack

from .fieldops import ComplexField
from .profiles import critical_points

COND_LIMIT = 1e13


class RealSpectralParameter(ValueError):
    """c is real and inside the range of u, where the operator degenerates."""


class IllConditioned(RuntimeError):
    """Estimated condition number exceeds COND_LIMIT; shrink the layer or raise n."""


class NoConvergence(RuntimeError):
    """The epsilon schedule was exhausted without extrapolant agreement."""


@dataclass
class BvpProblem:
    profile: object
    alpha: float
    beta: float
    c: complex
    forcing: ComplexField


@dataclass
class BvpSolution:
    phi: ComplexField
    residual_sup: float
    boundary_derivatives: tuple
    h1_ratio: float
    condition: float


@dataclass
class AbsorptionConfig:
    """Schedule and stopping rule for the approach c +- i*eps -> c.

    eps0 documents the empirically usable spectral strip for the profile at
    hand; it is recorded, not enforced.
    """

    eps_schedule: tuple = tuple(1e-2 * 0.5 ** k for k in range(11))
    extrapolation_order: int = 1
    convergence_tol: float = 1e-6
    eps0: float = 1e-2

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_schedule)
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("eps schedule must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps schedule must decrease strictly")
        if self.extrapolation_order not in (0, 1):
            raise ValueError("extrapolation order must be 0 or 1")
        self.eps_schedule = eps


def solve_bvp(problem, grid):
    """Direct collocation solve of the Rayleigh-Kuo problem.

    Raises RealSpectralParameter for real c inside Ran(u) and IllConditioned
    when the equilibrated system's condition estimate passes COND_LIMIT.
    The returned residual is measured by substituting Phi back into the
    unscaled equation at interior nodes.
    """
    prof, alpha, beta, c = problem.profile, problem.alpha, problem.beta, problem.c
    omega = problem.forcing
    if omega.grid is not grid:
        raise ValueError("forcing must live on the solve grid")
    umin, umax = prof.range_bounds()
    if c.imag == 0.0 and umin - 1e-14 <= c.real <= umax + 1e-14:
        raise RealSpectralParameter(
            "real spectral parameter %g lies in Ran(u) = [%g, %g]" % (c.real, umin, umax))
    y = grid.nodes
    u = prof.eval(y)
    d2u = prof.eval(y, 2)
    uc = u - c
    # equilibrated interior rows: (D^2 - alpha^2) - diag((u''-beta)/(u-c))
    a = grid.deriv2_matrix - alpha ** 2 * np.eye(grid.n + 1) + 0j
    a -= np.diag((d2u - beta) / uc)
    rhs = omega.values / uc
    a[0, :] = 0.0
    a[0, 0] = 1.0
    a[-1, :] = 0.0
    a[-1, -1] = 1.0
    rhs = rhs.copy()
    rhs[0] = 0.0
    rhs[-1] = 0.0
    anorm = np.linalg.norm(a, 1)
    lu, piv = lu_factor(a)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0 or 1.0 / rcond > COND_LIMIT:
        raise IllConditioned("condition estimate %.3g exceeds %.3g"
                             % (np.inf if rcond <= 0 else 1.0 / rcond, COND_LIMIT))
    phi = lu_solve((lu, piv), rhs)
    phi[0] = 0.0
    phi[-1] = 0.0
    field = ComplexField(grid, phi)
    res = uc * (grid.diff2(phi) - alpha ** 2 * phi) - (d2u - beta) * phi - omega.values
    residual_sup = float(np.max(np.abs(res[1:-1]))) if grid.n > 1 else 0.0
    dphi = grid.diff(phi)
    # (||dPhi|| + alpha||Phi||) * alpha / (||domega|| + alpha||omega||)
    nphi = _h1_split(grid, phi, alpha)
    nomg = _h1_split(grid, omega.values, alpha)
    h1_ratio = float(nphi * alpha / nomg) if nomg > 0 else 0.0
    return BvpSolution(field, residual_sup, (complex(dphi[0]), complex(dphi[-1])),
                       h1_ratio, float(1.0 / rcond))


def _h1_split(grid, vals, alpha):
    d = grid.diff(vals)
    n0 = np.sqrt(abs(grid.quad(np.abs(vals) ** 2)))
    n1 = np.sqrt(abs(grid.quad(np.abs(d) ** 2)))
    return n1 + alpha * n0


def weighted_quotient(omega, crit, certified_zero=False):
    """omega divided by the depletion polynomial p on the forcing grid.

    p is identically 1 when the depletion set is empty.  Nodes where p
    vanishes are filled by the L'Hopital limit omega'/p', which is only
    legitimate when the caller certifies that omega vanishes there.
    """
    grid = omega.grid
    p = crit.weight_values(grid.nodes)
    quot = np.empty_like(omega.values)
    small = np.abs(p) < 1e-12
    if small.any():
        if not certified_zero:
            raise ValueError("forcing must be certified to vanish on the depletion set")
        domega = grid.diff(omega.values)
        dp = np.zeros_like(p)
        for i, root in enumerate(crit.weight_roots):
            partial = np.ones_like(p)
            for j, other in enumerate(crit.weight_roots):
                if j != i:
                    partial *= grid.nodes - other
            dp += partial
        quot[~small] = omega.values[~small] / p[~small]
        quot[small] = domega[small] / dp[small]
    else:
        quot = omega.values / p
    return ComplexField(grid, quot)


def limiting_absorption(profile, alpha, beta, c, omega, side, cfg, grid):
    """Boundary value of the resolvent at real c, approached from one side.

    Off the range of u the resolvent is continuous and the direct real-c
    solve is returned for either side.  Inside the range the problem is
    solved along cfg.eps_schedule at c + i*side*eps and Richardson
    extrapolated; convergence is declared when successive extrapolants
    agree to cfg.convergence_tol in sup norm.

    Note on resolution: once eps falls below the local node spacing the
    discrete solves approach the real-parameter collocation limit, so the
    extrapolated field carries the resolvent jump only as far as the grid
    can resolve the layer.
    """
    if side not in (+1, -1):
        raise ValueError("side must be +1 or -1")
    umin, umax = profile.range_bounds()
    margin = 1e-12 * max(1.0, abs(umax), abs(umin))
    if c < umin - margin or c > umax + margin:
        sol = solve_bvp(BvpProblem(profile, alpha, beta, complex(c), omega), grid)
        return sol.phi
    prev_x = None
    prev_phi = None
    prev_eps = None
    last_diff = None
    for eps in cfg.eps_schedule:
        sol = solve_bvp(BvpProblem(profile, alpha, beta, c + 1j * side * eps, omega), grid)
        phi = sol.phi.values
        if cfg.extrapolation_order == 0:
            x = phi
        elif prev_phi is None:
            x = None
        else:
            # linear model Phi(eps) = Phi0 + C*eps through the last two solves
            x = phi + (phi - prev_phi) * eps / (prev_eps - eps)
        if x is not None and prev_x is not None:
            last_diff = float(np.max(np.abs(x - prev_x)))
            if last_diff < cfg.convergence_tol:
                return ComplexField(grid, x)
        prev_x = x if x is not None else prev_x
        prev_phi = phi
        prev_eps = eps
    raise NoConvergence(
        "extrapolants still differ by %s after the eps schedule" % (last_diff,))


@dataclass
class ScanPoint:
    c: complex
    h1_ratio: float
    weighted_ratio: float
    error: str | None = None


def resolvent_norm_scan(profile, alpha, beta, omega, c_list, grid,
                        certified_zero=False):
    """Per-c resolvent size in both normalizations.

    h1_ratio is the monotone-profile normalization from solve_bvp;
    weighted_ratio is ||Phi||_H1 / ||omega/p||_H1 with p the depletion
    polynomial.  Failures are recorded per point and do not abort the scan.
    """
    crit = critical_points(profile, beta)
    try:
        quot = weighted_quotient(omega, crit, certified_zero=certified_zero)
        qn = _h1_split(grid, quot.values, alpha)
    except ValueError:
        quot, qn = None, None
    out = []
    for c in c_list:
        try:
            sol = solve_bvp(BvpProblem(profile, alpha, beta, complex(c), omega), grid)
        except (RealSpectralParameter, IllConditioned) as exc:
            out.append(ScanPoint(complex(c), np.nan, np.nan, str(exc)))
            continue
        if qn is not None and qn > 0:
            wn = _h1_split(grid, sol.phi.values, alpha) / qn
        else:
            wn = np.nan
        out.append(ScanPoint(complex(c), sol.h1_ratio, float(wn)))
    return out


@dataclass
class LayerProbe:
    exponent_phi: float
    exponent_wlayer: float
    degenerate: bool
    eps: tuple
    phi_values: tuple
    wlayer_values: tuple


def critical_layer_probe(profile, alpha, beta, y0, eps_list, omega, grid):
    """Scaling of Phi and of the layer vorticity at a critical point.

    Solves at c = u(y0) + i*eps and fits log|Phi(y0)| and
    log|(Phi'' - alpha^2 Phi)(y0)| against log eps.  The fitted slopes
    measure the vanishing of the stream function and the blow-up of the
    layer vorticity as the spectral parameter touches the range of u.
    """
    if abs(profile.eval(y0, 1)) > 1e-10:
        raise ValueError("y0 must be a critical point of u")
    half = 0.1 * (profile.y2 - profile.y1)
    lo = max(profile.y1, y0 - half)
    hi = min(profile.y2, y0 + half)
    ys = np.linspace(lo, hi, 51)
    g0 = beta - profile.eval(y0, 2)
    g = beta - profile.eval(ys, 2)
    if not np.all(g * g0 > 0):
        raise ValueError("beta - u'' must keep its sign near y0")
    if np.max(np.abs(omega.values)) == 0.0:
        return LayerProbe(np.nan, np.nan, True, tuple(eps_list), (), ())
    c0 = profile.eval(y0)
    phi_vals = []
    lay_vals = []
    for eps in eps_list:
        sol = solve_bvp(BvpProblem(profile, alpha, beta, c0 + 1j * eps, omega), grid)
        phi_y0 = grid.interpolate(sol.phi.values, y0)
        d2_y0 = grid.interpolate(grid.diff2(sol.phi.values), y0)
        phi_vals.append(abs(phi_y0))
        lay_vals.append(abs(d2_y0 - alpha ** 2 * phi_y0))
    le = np.log(np.asarray(eps_list, dtype=float))
    slope_phi = np.polyfit(le, np.log(phi_vals), 1)[0]
    slope_lay = np.polyfit(le, np.log(lay_vals), 1)[0]
    return LayerProbe(float(slope_phi), float(slope_lay), False,
                      tuple(float(e) for e in eps_list),
                      tuple(phi_vals), tuple(lay_vals))
