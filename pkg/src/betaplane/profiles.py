"""Channel shear profiles with exact derivatives and stability predicates.

Built-in flows are the linear profile u(y) = y on [0,1] ("couette"), the
cosine profile u(y) = (1 + cos(pi y))/2 on [-1,1] ("sinus"), and arbitrary
polynomials ("poly").  Derivative formulas are analytic through fourth
order; closures with finite-difference derivatives are deliberately not
supported because the spectral coefficients downstream need trustworthy
u'' and u'''.
"""

from dataclasses import dataclass, field

import numpy as np

_SCAN_POINTS = 2048
_ROOT_TOL = 1e-12
_FLAT_TOL = 1e-10


@dataclass(frozen=True)
class ShearProfile:
    """Analytic flow u(y) on [y1, y2] with derivatives through order 4.

    monotone_floor, when set, is a certified positive lower bound for u'
    over the channel.  period_scale is the optional streamwise scale L
    fixing the admissible wavenumbers 2*pi/L * k.
    """

    name: str
    y1: float
    y2: float
    derivs: tuple = field(repr=False)
    monotone_floor: float | None = None
    period_scale: float | None = None

    def eval(self, y, k=0):
        if not 0 <= k <= 4:
            raise ValueError("derivative order must be 0..4")
        y = np.asarray(y, dtype=float)
        out = self.derivs[k](y)
        return out if out.ndim else float(out)

    @property
    def domain(self):
        return (self.y1, self.y2)

    def range_bounds(self):
        """Exact extrema of u: checked at the walls and at every zero of u'."""
        candidates = [self.y1, self.y2]
        candidates.extend(critical_points(self, 0.0).critical_points)
        u = [self.eval(y) for y in candidates]
        return float(min(u)), float(max(u))


@dataclass(frozen=True)
class CriticalData:
    """Critical points of u and the depletion structure for a given beta.

    depletion_set collects the critical points where u'' matches beta;
    weight_roots are the zeros of the node polynomial p built from them.
    """

    critical_points: tuple
    depletion_set: tuple
    weight_roots: tuple

    def weight_values(self, y):
        """Evaluate p(y) = prod (y - root); identically 1 for an empty set."""
        y = np.asarray(y, dtype=float)
        p = np.ones_like(y)
        for root in self.weight_roots:
            p = p * (y - root)
        return p


def _poly_derivs(coeffs):
    """Derivative ladder for a coefficient list in increasing-power order."""
    from numpy.polynomial import polynomial as P

    ladder = [np.asarray(coeffs, dtype=float)]
    for _ in range(4):
        ladder.append(P.polyder(ladder[-1]))
    return tuple((lambda c: (lambda y: P.polyval(y, c)))(c) for c in ladder)


def make_profile(name, params=None):
    """Construct a built-in or polynomial profile.

    couette: u(y) = y on [0,1], monotone with floor 1.
    sinus:   u(y) = (1 + cos(pi y))/2 on [-1,1].
    poly:    params must carry 'coefficients' (increasing powers) and
             'domain' [y1, y2]; a monotone floor is attached when a dense
             sample of u' stays positive.
    """
    params = dict(params or {})
    if name == "couette":
        derivs = _poly_derivs([0.0, 1.0])
        return ShearProfile("couette", 0.0, 1.0, derivs,
                            monotone_floor=1.0,
                            period_scale=params.get("period_scale"))
    if name == "sinus":
        derivs = (
            lambda y: 0.5 * (1.0 + np.cos(np.pi * y)),
            lambda y: -0.5 * np.pi * np.sin(np.pi * y),
            lambda y: -0.5 * np.pi ** 2 * np.cos(np.pi * y),
            lambda y: 0.5 * np.pi ** 3 * np.sin(np.pi * y),
            lambda y: 0.5 * np.pi ** 4 * np.cos(np.pi * y),
        )
        return ShearProfile("sinus", -1.0, 1.0, derivs)
    if name == "poly":
        if "coefficients" not in params or "domain" not in params:
            raise ValueError("poly profile needs 'coefficients' and 'domain'")
        y1, y2 = (float(v) for v in params["domain"])
        if not y1 < y2:
            raise ValueError("degenerate domain: need y1 < y2")
        derivs = _poly_derivs(params["coefficients"])
        y = np.linspace(y1, y2, _SCAN_POINTS)
        floor = float(derivs[1](y).min())
        return ShearProfile("poly", y1, y2, derivs,
                            monotone_floor=floor if floor > 0 else None,
                            period_scale=params.get("period_scale"))
    raise ValueError("unknown profile name: %r" % (name,))


def critical_points(profile, beta):
    """Zeros of u' and the subset where u'' matches beta.

    Sign-change brackets from a dense scan are refined by Newton iteration on
    u' using the analytic u''; endpoints count when u' vanishes there.  The
    depletion match uses a tolerance relative to |beta|.
    """
    y = np.linspace(profile.y1, profile.y2, _SCAN_POINTS)
    du = profile.eval(y, 1)
    roots = []
    for j in range(_SCAN_POINTS - 1):
        a, b = du[j], du[j + 1]
        if a == 0.0 and y[j] > profile.y1:
            roots.append(y[j])
        if a * b < 0.0:
            roots.append(_refine_root(profile, y[j], y[j + 1]))
    for endpoint in (profile.y1, profile.y2):
        if abs(profile.eval(endpoint, 1)) < _FLAT_TOL:
            roots.append(endpoint)
    roots = sorted(set(_dedupe(roots)))
    roots = [r for r in roots if abs(profile.eval(r, 1)) < _FLAT_TOL]
    tol_match = 1e-9 * max(1.0, abs(beta))
    depl = tuple(r for r in roots if abs(profile.eval(r, 2) - beta) <= tol_match)
    return CriticalData(tuple(roots), depl, depl)


def _refine_root(profile, a, b):
    fa = profile.eval(a, 1)
    x = 0.5 * (a + b)
    for _ in range(100):
        fx = profile.eval(x, 1)
        dfx = profile.eval(x, 2)
        if dfx != 0.0:
            step = fx / dfx
            xn = x - step
            if a <= xn <= b and abs(step) < 0.5 * (b - a):
                if abs(step) < _ROOT_TOL:
                    return xn
                x = xn
                continue
        # Newton left the bracket or stalled; fall back to bisection
        if fa * fx <= 0.0:
            b = x
        else:
            a, fa = x, fx
        x = 0.5 * (a + b)
        if b - a < _ROOT_TOL:
            return x
    return x


def _dedupe(points, tol=1e-9):
    points = sorted(points)
    out = []
    for p in points:
        if not out or abs(p - out[-1]) > tol:
            out.append(p)
        elif abs(p) < abs(out[-1]):
            out[-1] = p
    return out


def kuo_necessary(profile, beta):
    """True when beta - u'' takes both signs on the channel.

    A one-signed beta - u'' rules out instability, so a False here certifies
    spectral stability of the profile at this beta.
    """
    y = np.linspace(profile.y1, profile.y2, _SCAN_POINTS)
    g = beta - profile.eval(y, 2)
    return bool(g.min() < 0.0 < g.max())


def pedlosky_semicircle(profile, alpha, beta):
    """Center and radius of the disk confining unstable wave speeds."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    umin, umax = profile.range_bounds()
    center = 0.5 * (umin + umax)
    radius = 0.5 * (umax - umin) + abs(beta) / (2.0 * alpha ** 2)
    return center, radius


def h1_hypothesis_check(profile, beta):
    """Non-degeneracy of critical points: u''(y_c) != 0 and beta/u''(y_c) < 9/8."""
    crit = critical_points(profile, beta)
    for y_c in crit.critical_points:
        d2 = profile.eval(y_c, 2)
        if d2 == 0.0 or not beta / d2 < 9.0 / 8.0:
            return False
    return True
