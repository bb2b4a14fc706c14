"""Collocation grid, differentiation, Helmholtz inversion and the norm scale.

Everything downstream works with complex nodal values on a single
Chebyshev-Gauss-Lobatto grid mapped to the channel [y1, y2].  The inverse
-(d^2/dy^2 - alpha^2)^{-1} with homogeneous Dirichlet conditions is the
workhorse: it defines the stream function, the negative-order norms and the
nonlocal term of the evolution equation.
"""

import numpy as np
from scipy.linalg import lu_factor, lu_solve


def _cheb_matrix(n):
    """Differentiation matrix on the n+1 Chebyshev points cos(pi*j/n).

    Standard construction with the c-vector trick; the diagonal is set by
    negative row sums so the matrix annihilates constants exactly.
    """
    if n == 0:
        return np.zeros((1, 1)), np.array([1.0])
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[n] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, x


def _clencurt_weights(n):
    """Clenshaw-Curtis weights on cos(pi*j/n) for integration over [-1, 1]."""
    if n == 0:
        return np.array([2.0])
    w = np.zeros(n + 1)
    theta = np.pi * np.arange(1, n) / n
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta) / (4 * k * k - 1)
        v -= np.cos(n * theta) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta) / (4 * k * k - 1)
    w[1:n] = 2.0 * v / n
    return w


class Grid:
    """Collocation grid of n+1 Gauss-Lobatto nodes on [y1, y2].

    `n` is the polynomial resolution (number of interior modes).  Nodes are
    stored ascending, first node exactly y1 and last exactly y2.  `diff`
    applies d/dy to nodal values, `quad` integrates them over the channel.

    Treat instances as immutable; the only mutable state is an internal
    factorization cache for the Helmholtz solves, keyed by alpha.
    """

    def __init__(self, n, y1, y2):
        if not y1 < y2:
            raise ValueError("degenerate domain: need y1 < y2")
        self.n = int(n)
        self.y1 = float(y1)
        self.y2 = float(y2)
        d, x = _cheb_matrix(self.n)
        half = 0.5 * (self.y2 - self.y1)
        # y = y1 + half*(1 - x) ascends as j runs 0..n, so no reindexing;
        # the map contributes dx/dy = -1/half to the chain rule.
        self.nodes = self.y1 + half * (1.0 - x)
        self.nodes[0] = self.y1
        self.nodes[-1] = self.y2
        self.deriv_matrix = d * (-1.0 / half)
        self.deriv2_matrix = self.deriv_matrix @ self.deriv_matrix
        self.quad_weights = _clencurt_weights(self.n) * half
        self._helmholtz_lu = {}

    @property
    def size(self):
        return self.n

    @property
    def domain(self):
        return (self.y1, self.y2)

    def diff(self, values):
        return self.deriv_matrix @ values

    def diff2(self, values):
        return self.deriv2_matrix @ values

    def quad(self, values):
        return self.quad_weights @ values

    def helmholtz_lu(self, alpha):
        """Cached LU factors of (D^2 - alpha^2) with Dirichlet rows."""
        key = float(alpha)
        fac = self._helmholtz_lu.get(key)
        if fac is None:
            a = self.deriv2_matrix - key * key * np.eye(self.n + 1)
            a[0, :] = 0.0
            a[0, 0] = 1.0
            a[-1, :] = 0.0
            a[-1, -1] = 1.0
            fac = lu_factor(a)
            self._helmholtz_lu[key] = fac
        return fac

    def interpolate(self, values, y):
        """Barycentric evaluation of the nodal interpolant at points y."""
        w = np.ones(self.n + 1)
        w[0] = w[-1] = 0.5
        w *= (-1.0) ** np.arange(self.n + 1)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(y.shape, dtype=np.result_type(values, float))
        for i, yi in enumerate(y):
            dyi = yi - self.nodes
            hit = np.argmin(np.abs(dyi))
            if abs(dyi[hit]) < 1e-14 * max(1.0, abs(yi)):
                out[i] = values[hit]
                continue
            t = w / dyi
            out[i] = (t @ values) / t.sum()
        return out if out.size > 1 else out[0]


class ComplexField:
    """Complex nodal values of a function on a Grid.

    `d2` optionally carries analytically known second-derivative values;
    residual evaluations prefer it over the grid's differentiation matrix
    when the underlying function is not polynomial-smooth at the endpoints.
    """

    def __init__(self, grid, values, d2=None):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.n + 1,):
            raise ValueError("values length must equal node count")
        self.grid = grid
        self.values = values
        self.d2 = None if d2 is None else np.asarray(d2, dtype=complex)

    @classmethod
    def from_function(cls, grid, fn, d2fn=None):
        vals = np.asarray(fn(grid.nodes), dtype=complex)
        d2 = None if d2fn is None else np.asarray(d2fn(grid.nodes), dtype=complex)
        return cls(grid, vals, d2=d2)

    def copy(self):
        return ComplexField(self.grid, self.values.copy(),
                            None if self.d2 is None else self.d2.copy())

    def second_derivative(self):
        if self.d2 is not None:
            return self.d2
        return self.grid.diff2(self.values)

    def to_csv(self, path):
        write_field_csv(path, self)

    @classmethod
    def from_csv(cls, grid, path):
        return read_field_csv(grid, path)


def write_field_csv(path, field):
    """Serialize a field as rows y,re,im with a header line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("y,re,im\n")
        for y, v in zip(field.grid.nodes, field.values):
            fh.write("%.17g,%.17g,%.17g\n" % (y, v.real, v.imag))


def read_field_csv(grid, path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    if data.shape[0] != grid.n + 1:
        raise ValueError("row count does not match grid")
    if not np.allclose(data[:, 0], grid.nodes, atol=1e-12):
        raise ValueError("node column does not match grid")
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2])


def helmholtz_solve(omega, alpha):
    """Stream function of a vorticity field: psi = -(d_yy - alpha^2)^{-1} omega.

    Solves (D^2 - alpha^2) psi = -omega at interior nodes with
    psi(y1) = psi(y2) = 0 imposed through replaced boundary rows.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    grid = omega.grid
    rhs = -omega.values.copy()
    rhs[0] = 0.0
    rhs[-1] = 0.0
    psi = lu_solve(grid.helmholtz_lu(alpha), rhs)
    if not np.all(np.isfinite(psi)):
        raise ArithmeticError("singular Helmholtz system")
    return ComplexField(grid, psi)


def boundary_harmonics(grid, alpha):
    """The two decaying wall modes of d_yy - alpha^2.

    gamma0 is 1 at y1 and 0 at y2, gamma1 the reverse; both solve
    (d_yy - alpha^2) g = 0 exactly.  On [0,1] they reduce to
    sinh(alpha(1-y))/sinh(alpha) and sinh(alpha*y)/sinh(alpha).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    y = grid.nodes
    span = np.sinh(alpha * (grid.y2 - grid.y1))
    g0 = np.sinh(alpha * (grid.y2 - y)) / span
    g1 = np.sinh(alpha * (y - grid.y1)) / span
    return ComplexField(grid, g0), ComplexField(grid, g1)


def inner_product(f, g):
    """Quadrature approximation of the channel inner product int f * conj(g)."""
    if f.grid is not g.grid:
        raise ValueError("fields live on different grids")
    return f.grid.quad(f.values * np.conj(g.values))


def sobolev_norm(omega, k, alpha):
    """Norm of order k in the alpha-weighted scale, k in -2..2.

    Orders 0,1,2 are the usual weighted Sobolev combinations of omega;
    orders -1,-2 go through the stream function, with the -1 norm evaluated
    as Re<psi, omega>, which the Dirichlet conditions make identical to
    the gradient form.
    """
    if k not in (-2, -1, 0, 1, 2):
        raise ValueError("order k must lie in -2..2")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    grid = omega.grid
    w = omega.values
    if k == 0:
        return float(np.sqrt(abs(grid.quad(np.abs(w) ** 2))))
    if k == 1:
        dw = grid.diff(w)
        return float(np.sqrt(abs(grid.quad(np.abs(dw) ** 2 + alpha ** 2 * np.abs(w) ** 2))))
    if k == 2:
        dw = grid.diff(w)
        d2w = grid.diff(dw)
        return float(np.sqrt(abs(grid.quad(
            np.abs(d2w) ** 2 + 2 * alpha ** 2 * np.abs(dw) ** 2 + alpha ** 4 * np.abs(w) ** 2))))
    psi = helmholtz_solve(omega, alpha)
    if k == -2:
        return float(np.sqrt(abs(grid.quad(np.abs(psi.values) ** 2))))
    pairing = grid.quad(psi.values * np.conj(w))
    # imaginary part is pure quadrature noise for the self-adjoint pairing
    return float(np.sqrt(max(pairing.real, 0.0)))
