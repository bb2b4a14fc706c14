"""Discrete spectra, Sturm-Liouville sub-solver and eigenvalue candidates.

The generator of the single-mode dynamics has essential spectrum Ran(u);
collocation smears that range into a cloud of resolution-dependent
eigenvalues, so everything here is organized around separating genuine
discrete modes from that cloud: location filters plus stability of each
eigenvalue under a doubled grid.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .fieldops import ComplexField, Grid, helmholtz_solve
from .profiles import pedlosky_semicircle

REFINE_TOL = 1e-6
IM_FLOOR = 1e-6
RESIDUAL_FACTOR = 1e-6
GRAM_COND_LIMIT = 1e10


@dataclass
class SpectrumResult:
    """All pencil eigenvalues with acceptance marks.

    accepted[i] is True when eigenvalue i sits away from the discretized
    essential-spectrum cloud, reappears within REFINE_TOL on the doubled
    grid and its mode satisfies the eigenvalue equation pointwise.
    """

    eigenvalues: np.ndarray
    right_modes: list
    left_modes: list
    accepted: np.ndarray
    refinement_gap: np.ndarray

    def accepted_pairs(self):
        return [(self.eigenvalues[i], self.right_modes[i])
                for i in np.flatnonzero(self.accepted)]


@dataclass
class SlProblem:
    """Eigenvalue problem -phi'' + q(y) phi = lambda phi, Dirichlet walls.

    q may blow up at the wall; only interior collocation nodes are used,
    so endpoint-singular potentials are admissible.
    """

    q: object
    domain: tuple
    count: int


def _pencil_eigs(profile, alpha, beta, grid, want_vectors=True):
    y = grid.nodes
    u = profile.eval(y)
    d2u = profile.eval(y, 2)
    lap = grid.deriv2_matrix - alpha ** 2 * np.eye(grid.n + 1)
    l_int = lap[1:-1, 1:-1]
    a_int = u[1:-1, None] * l_int - np.diag(d2u[1:-1] - beta)
    m = sla.solve(l_int, a_int)
    if want_vectors:
        w, vl, vr = sla.eig(m, left=True, right=True)
        return w, vl, vr
    return sla.eig(m, left=False, right=False), None, None


def _segment_distance(c, umin, umax):
    re_out = max(umin - c.real, c.real - umax, 0.0)
    return float(np.hypot(re_out, c.imag))


def discrete_spectrum(profile, alpha, beta, grid):
    """Discrete eigenvalues of the single-mode generator via the matrix pencil.

    The pencil [u (D^2 - a^2) - diag(u'' - beta)] phi = c (D^2 - a^2) phi is
    reduced to standard form with the Dirichlet-restricted inverse Laplacian
    and solved densely at n and 2n.  Eigenvalues are marked accepted when
    they clear the essential-spectrum cloud (distance above 5 L max|u'| / n,
    or imaginary part above 1e-6), drift less than 1e-6 under refinement and
    leave a pointwise eigenvalue-equation residual below 1e-6 sup|phi|.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    w, vl, vr = _pencil_eigs(profile, alpha, beta, grid)
    fine = Grid(2 * grid.n, grid.y1, grid.y2)
    w2, _, _ = _pencil_eigs(profile, alpha, beta, fine, want_vectors=False)
    gaps = np.array([np.min(np.abs(w2 - c)) for c in w])

    umin, umax = profile.range_bounds()
    ys = np.linspace(grid.y1, grid.y2, 4096)
    du_max = float(np.max(np.abs(profile.eval(ys, 1))))
    delta_spur = 5.0 * (grid.y2 - grid.y1) * du_max / grid.n

    y = grid.nodes
    u = profile.eval(y)
    d2u = profile.eval(y, 2)
    right = []
    left = []
    accepted = np.zeros(w.shape, dtype=bool)
    for i, c in enumerate(w):
        phi = np.zeros(grid.n + 1, dtype=complex)
        phi[1:-1] = vr[:, i]
        nrm = np.sqrt(abs(grid.quad(np.abs(phi) ** 2)))
        if nrm > 0:
            phi /= nrm
        field = ComplexField(grid, phi)
        right.append(field)
        chi = np.zeros(grid.n + 1, dtype=complex)
        chi[1:-1] = vl[:, i]
        left.append(ComplexField(grid, chi))
        located = (_segment_distance(c, umin, umax) > delta_spur
                   or abs(c.imag) > IM_FLOOR)
        if not (located and gaps[i] <= REFINE_TOL):
            continue
        res = (u - c) * (grid.diff2(phi) - alpha ** 2 * phi) - (d2u - beta) * phi
        sup = float(np.max(np.abs(res[1:-1])))
        if sup < RESIDUAL_FACTOR * float(np.max(np.abs(phi))):
            accepted[i] = True
    return SpectrumResult(w, right, left, accepted, gaps)


def unstable_modes(spec, threshold):
    """Accepted eigenvalues with growth, Im c above the threshold."""
    return [c for c, ok in zip(spec.eigenvalues, spec.accepted)
            if ok and c.imag > threshold]


def semicircle_check(spec, profile, alpha, beta):
    """Every accepted growing eigenvalue lies in the Pedlosky disk."""
    center, radius = pedlosky_semicircle(profile, alpha, beta)
    for c in unstable_modes(spec, 0.0):
        if abs(c - center) > radius + 1e-6:
            return False
    return True


def sl_spectrum(problem, grid, refine_rel=1e-6):
    """Lowest eigenvalues of -phi'' + q phi with Dirichlet conditions.

    The potential may carry inverse-square endpoint singularities, so a raw
    Dirichlet collocation would lose the algebraic boundary behaviour of the
    eigenfunctions and with it most of its accuracy.  Instead the solver
    probes kappa = lim q(y) dist(y)^2 at each endpoint, peels off the weight
    w = d1^p1 d2^p2 with p(p-1) = kappa (principal branch; p = 1 recovers a
    plain Dirichlet wall when kappa = 0) and collocates the smooth quotient
    on all-interior Gauss-Chebyshev nodes with no boundary rows.  Eigenvalues
    are kept when numerically real and stable under a doubled grid; raises
    when fewer resolved eigenvalues exist than requested.
    """
    y1, y2 = problem.domain
    if not (np.isclose(y1, grid.y1) and np.isclose(y2, grid.y2)):
        raise ValueError("grid domain does not match the problem domain")
    lam = _sl_eigs(problem.q, y1, y2, grid.n - 1)[0]
    lam2 = _sl_eigs(problem.q, y1, y2, 2 * grid.n - 1)[0]
    resolved = []
    for v in lam:
        gap = np.min(np.abs(lam2 - v))
        if gap <= refine_rel * max(1.0, abs(v)):
            resolved.append(v)
    if len(resolved) < problem.count:
        raise ValueError("only %d eigenvalues resolved, %d requested"
                         % (len(resolved), problem.count))
    return [float(v) for v in resolved[:problem.count]]


def _gauss_cheb(m, y1, y2):
    # first-kind Chebyshev points: all strictly interior, analytic
    # barycentric weights, ascending in y
    j = np.arange(m)
    x = np.cos((2 * j + 1) * np.pi / (2 * m))[::-1]
    lam = ((-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * m)))[::-1]
    half = 0.5 * (y2 - y1)
    y = y1 + half * (x + 1.0)
    dx = np.subtract.outer(x, x)
    np.fill_diagonal(dx, 1.0)
    d = np.outer(1.0 / lam, lam) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return y, d / half


def _probe_kappa(q, endpoint, inward, length):
    # fit q d^2 = kappa + c d + a d^2 approaching the wall
    d0 = 1e-3 * length
    ds = np.array([d0, d0 / 2, d0 / 4])
    f = np.array([float(q(endpoint + inward * dd)) * dd * dd for dd in ds])
    return float(np.linalg.solve(np.vander(ds, 3, increasing=True), f)[0])


def _sl_eigs(q, y1, y2, m):
    length = y2 - y1
    kappas = (_probe_kappa(q, y1, 1.0, length), _probe_kappa(q, y2, -1.0, length))
    if min(kappas) < -0.25:
        raise ValueError("endpoint singularity below the -1/4 threshold")
    p1, p2 = (0.5 * (1.0 + np.sqrt(1.0 + 4.0 * k)) for k in kappas)
    y, d = _gauss_cheb(m, y1, y2)
    da = y - y1
    db = y2 - y
    logw_prime = p1 / da - p2 / db
    wpp_over_w = (p1 * (p1 - 1) / da**2 + p2 * (p2 - 1) / db**2
                  - 2 * p1 * p2 / (da * db))
    qv = np.asarray(q(y), dtype=float)
    if qv.shape != y.shape:
        qv = np.array([float(q(t)) for t in y])
    mat = -(d @ d) - 2 * logw_prime[:, None] * d + np.diag(qv - wpp_over_w)
    w, vr = sla.eig(mat)
    scale = np.max(np.abs(w))
    keep = np.abs(w.imag) <= 1e-8 * scale
    order = np.argsort(w[keep].real)
    weight = da**p1 * db**p2
    modes = weight[:, None] * vr[:, keep][:, order]
    return w[keep].real[order], modes, y


def embedding_candidate_residual(profile, alpha, beta, c, phi, validity):
    """Pointwise eigenvalue-equation residual of a candidate mode.

    Checked on the collocation nodes strictly inside the validity interval,
    normalized by sup|phi| there.  A small value certifies the pair (c, phi)
    on that interval only; nothing is claimed outside it.
    """
    grid = phi.grid
    lo, hi = validity
    inside = (grid.nodes > lo) & (grid.nodes < hi)
    amp = float(np.max(np.abs(phi.values[inside]))) if inside.any() else 0.0
    if amp == 0.0:
        raise ValueError("candidate mode vanishes on the validity interval")
    y = grid.nodes
    u = profile.eval(y)
    d2u = profile.eval(y, 2)
    d2phi = phi.second_derivative()
    res = (u - c) * (d2phi - alpha ** 2 * phi.values) - (d2u - beta) * phi.values
    return float(np.max(np.abs(res[inside]))) / amp


def remove_discrete_projection(omega0, spec, alpha):
    """Strip the accepted eigenmode components from initial vorticity.

    Projects the stream function onto the accepted right modes with the
    biorthogonal left modes, removes that part and converts back to
    vorticity.  Raises when the left/right Gram system is too ill
    conditioned to define the projection.
    """
    idx = np.flatnonzero(spec.accepted)
    if idx.size == 0:
        return omega0.copy()
    grid = omega0.grid
    psi = helmholtz_solve(omega0, alpha)
    psi_int = psi.values[1:-1]
    vr = np.column_stack([spec.right_modes[i].values[1:-1] for i in idx])
    vl = np.column_stack([spec.left_modes[i].values[1:-1] for i in idx])
    gram = vl.conj().T @ vr
    if np.linalg.cond(gram) > GRAM_COND_LIMIT:
        raise ValueError("left/right mode pairing is numerically defective")
    coef = sla.solve(gram, vl.conj().T @ psi_int)
    clean = np.zeros(grid.n + 1, dtype=complex)
    clean[1:-1] = psi_int - vr @ coef
    lap = grid.deriv2_matrix @ clean - alpha ** 2 * clean
    return ComplexField(grid, -lap)
