"""Parameter atlas of the Sinus flow: the four curves carrying closed-form
embedding eigenpairs, point classification, and a growth-rate scan.

Curve tags are plain strings gamma1..gamma4; points off every curve are
tagged Gamma.  The meeting point (sqrt(3) pi/2, -pi^2/2) of gamma1 and the
closure of gamma4 is its own tag since its embedding eigenvalue (c = 1)
disagrees with the gamma1 formula there.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fieldops import ComplexField, Grid
from .profiles import make_profile

CLASSIFY_TOL = 1e-9
CORNER = (math.sqrt(3.0) * math.pi / 2.0, -math.pi**2 / 2.0)
BAND = 9.0 * math.pi**2 / 16.0

_CURVES = ("gamma1", "gamma2", "gamma3", "gamma4")


@dataclass(frozen=True)
class CurvePoint:
    curve: str
    parameter: float  # r, or beta on gamma1
    alpha: float
    beta: float


@dataclass(frozen=True)
class AtlasRegion:
    tag: str
    embedding_c: float = None
    parameter: float = None


def _alpha34(r):
    return math.pi * math.sqrt(-r * r - r + 0.75)


def gamma_point(curve, parameter):
    """Evaluate one curve's parametrization at an in-range parameter."""
    p = float(parameter)
    if curve == "gamma1":
        if not -math.pi**2 / 2 < p < math.pi**2 / 2:
            raise ValueError("beta outside gamma1's open range")
        return CurvePoint(curve, p, math.sqrt(3.0) * math.pi / 2.0, p)
    if curve == "gamma2":
        if not 0.25 < p < 1.0:
            raise ValueError("r outside (1/4, 1)")
        return CurvePoint(curve, p, math.pi * math.sqrt(1.0 - p * p),
                          math.pi**2 * (-p * p + p / 2 + 0.5))
    if curve == "gamma3":
        if not 0.25 < p < 0.5:
            raise ValueError("r outside (1/4, 1/2)")
        return CurvePoint(curve, p, _alpha34(p),
                          math.pi**2 * (-p * p + p / 2 + 0.5))
    if curve == "gamma4":
        if not 0.25 < p < 0.5:
            raise ValueError("r outside (1/4, 1/2)")
        return CurvePoint(curve, p, _alpha34(p),
                          math.pi**2 * (p * p - p / 2 - 0.5))
    raise ValueError("unknown curve %r" % (curve,))


def classify(alpha, beta, tol=CLASSIFY_TOL):
    """Locate (alpha, beta) relative to the curves.

    Each curve's beta-parametrization is inverted for r; membership needs r
    inside the open range and the alpha-residual within tol.  The curves
    have measure zero, so generic points return the no-embedding tag Gamma.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not -BAND < beta < BAND:
        raise ValueError("beta outside the admissible band (+-9 pi^2/16)")
    if abs(alpha - CORNER[0]) <= tol and abs(beta - CORNER[1]) <= tol:
        return AtlasRegion("corner", 1.0)
    if (abs(alpha - math.sqrt(3.0) * math.pi / 2.0) <= tol
            and -math.pi**2 / 2 < beta < math.pi**2 / 2):
        return AtlasRegion("gamma1", 0.5 - beta / math.pi**2, beta)
    # gamma2/gamma3 share beta = pi^2(-r^2 + r/2 + 1/2); the in-range root
    disc = 9.0 / 16.0 - beta / math.pi**2
    if disc > 0:
        r = 0.25 + math.sqrt(disc)
        if 0.25 < r < 1.0 and abs(alpha - math.pi * math.sqrt(1.0 - r * r)) <= tol:
            return AtlasRegion("gamma2", 0.0, r)
        if 0.25 < r < 0.5 and abs(alpha - _alpha34(r)) <= tol:
            return AtlasRegion("gamma3", 0.0, r)
    disc = 9.0 / 16.0 + beta / math.pi**2
    if disc > 0:
        r = 0.25 + math.sqrt(disc)
        if 0.25 < r < 0.5 and abs(alpha - _alpha34(r)) <= tol:
            return AtlasRegion("gamma4", 1.0, r)
    return AtlasRegion("Gamma")


def closed_form_eigenpair(curve, parameter, grid=None):
    """Embedding eigenvalue and eigenfunction for a curve point.

    The returned field carries analytic second-derivative values: the
    eigenfunctions behave like dist^{2r} at the walls, where grid
    differentiation of the algebraic singularity would swamp the residual
    that certifies the pair.  gamma4's function is real only on [0, 1]
    (fractional powers of a negative sine), so that is its validity
    interval and its grid lives there.
    """
    point = gamma_point(curve, parameter)
    validity = (0.0, 1.0) if curve == "gamma4" else (-1.0, 1.0)
    if grid is None:
        grid = Grid(256, *validity)
    elif not (np.isclose(grid.y1, validity[0]) and np.isclose(grid.y2, validity[1])):
        raise ValueError("grid domain must match the validity interval")
    y = grid.nodes
    cy = np.cos(np.pi * y / 2)
    sy = np.sin(np.pi * y / 2)
    # snap wall values to exact zeros so fractional powers stay clean
    cy[np.abs(cy) < 1e-14] = 0.0
    sy[np.abs(sy) < 1e-14] = 0.0
    if curve == "gamma1":
        c = 0.5 - point.beta / math.pi**2
        vals = cy + 0j
        d2 = -(np.pi**2 / 4) * cy + 0j
    elif curve == "gamma2":
        r = point.parameter
        c = 0.0
        vals = cy**(2 * r) + 0j
        low = np.where(np.abs(cy) > 0, cy, 1.0)
        d2 = np.pi**2 * r * ((2 * r - 1) / 2 * np.where(np.abs(cy) > 0, low**(2 * r - 2), 0.0)
                             - r * cy**(2 * r)) + 0j
    elif curve == "gamma3":
        r = point.parameter
        c = 0.0
        vals = cy**(2 * r) * sy + 0j
        low = np.where(np.abs(cy) > 0, cy, 1.0)
        d2 = (np.pi**2 / 4) * sy * (2 * r * (2 * r - 1) * np.where(np.abs(cy) > 0, low**(2 * r - 2), 0.0)
                                    - (2 * r + 1)**2 * cy**(2 * r)) + 0j
    else:
        r = point.parameter
        c = 1.0
        vals = sy**(2 * r) * cy + 0j
        low = np.where(np.abs(sy) > 0, sy, 1.0)
        d2 = (np.pi**2 / 4) * cy * (2 * r * (2 * r - 1) * np.where(np.abs(sy) > 0, low**(2 * r - 2), 0.0)
                                    - (2 * r + 1)**2 * sy**(2 * r)) + 0j
    return c, ComplexField(grid, vals, d2=d2), validity


@dataclass
class AtlasScan:
    alphas: np.ndarray
    betas: np.ndarray
    tags: list
    growth: np.ndarray
    errors: list


def scan_atlas(alpha_range, beta_range, n_alpha, n_beta, workers=1, spectrum_n=96):
    """Classify a parameter grid and attach max unstable growth rates.

    growth[i, j] = alpha * max Im(c) over accepted unstable modes at
    (alphas[i], betas[j]), zero when the accepted set has no growing mode.
    Eigensolver failures are recorded per point, never fatal.
    """
    from .spectra import discrete_spectrum, unstable_modes

    alphas = np.linspace(alpha_range[0], alpha_range[1], n_alpha)
    betas = np.linspace(beta_range[0], beta_range[1], n_beta)
    if np.any(alphas <= 0):
        raise ValueError("alpha range must be positive")
    if np.any(np.abs(betas) >= BAND):
        raise ValueError("beta range leaves the admissible band")
    profile = make_profile("sinus", {})
    grid = Grid(spectrum_n, -1.0, 1.0)
    tags = [[None] * n_beta for _ in range(n_alpha)]
    growth = np.zeros((n_alpha, n_beta))
    errors = []

    def work(ij):
        i, j = ij
        region = classify(alphas[i], betas[j])
        tags[i][j] = region.tag
        try:
            spec = discrete_spectrum(profile, alphas[i], betas[j], grid)
            grow = unstable_modes(spec, 0.0)
            growth[i, j] = alphas[i] * max((c.imag for c in grow), default=0.0)
        except Exception as exc:
            growth[i, j] = np.nan
            errors.append((i, j, str(exc)))

    pairs = [(i, j) for i in range(n_alpha) for j in range(n_beta)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, pairs))
    else:
        for ij in pairs:
            work(ij)
    errors.sort(key=lambda t: (t[0], t[1]))
    return AtlasScan(alphas, betas, tags, growth, errors)
