"""Radial discretization of the half-line.

Nodes are Gauss-Legendre points x_j in (-1, 1) transported to (0, R) by the
algebraic map

    r = a (1 + x) / (b - x),     b = 1 + 2a/R,

which sends x = -1 to the axis, x = 1 to R and clusters half of the nodes
inside r < a/b.  Derivatives are barycentric (polynomial in x) and carried to
r by the chain rule; quadrature weights for the measure r dr are the Gauss
weights times dr/dx times r.  Because Gauss quadrature integrates the
product of two nodal polynomials exactly, the discrete derivative and the
discrete inner product satisfy summation by parts, which is what makes the
discrete Leray projection well behaved near the axis.

Sector fields live in X_{m,k}: (u_r, u_theta, u_z) with

    div u = (d/dr + 1/r) u_r + (i m / r) u_theta + i k u_z = 0 .

With the change of variables u_theta = i w_theta, u_z = i w_z the constraint
has real coefficients; the divergence-free bases are therefore computed in
real arithmetic and carried back by T = diag(1, i, i).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from .errors import AssemblyError, DomainError, ProjectionRankError

DEFAULT_R_MAX = 30.0
DEFAULT_N = 128
DEFAULT_STRETCH = 2.0


# ---------------------------------------------------------------------------
# barycentric machinery on [-1, 1]

def barycentric_weights(x) -> np.ndarray:
    """Barycentric weights for arbitrary distinct nodes on [-1, 1].

    Products are accumulated in log form; the overall scale is irrelevant.
    """
    x = np.asarray(x, dtype=float)
    d = 2.0 * (x[:, None] - x[None, :])
    np.fill_diagonal(d, 1.0)
    logw = -np.sum(np.log(np.abs(d)), axis=1)
    sign = np.prod(np.sign(d), axis=1)
    return sign * np.exp(logw - logw.max())


def diffmat(x, w=None) -> np.ndarray:
    """Barycentric differentiation matrix for the nodes x (negative-sum trick)."""
    x = np.asarray(x, dtype=float)
    if w is None:
        w = barycentric_weights(x)
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    D = (w[None, :] / w[:, None]) / X
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def interp_matrix_x(x_nodes, w, x_eval) -> np.ndarray:
    """Rows evaluating the nodal interpolant at x_eval (barycentric form 2)."""
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    diff = x_eval[:, None] - x_nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    C = w[None, :] / diff
    C /= C.sum(axis=1, keepdims=True)
    rows, cols = np.nonzero(exact)
    C[rows] = 0.0
    C[rows, cols] = 1.0
    return C


# ---------------------------------------------------------------------------
# grid

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Collocation grid on (0, r_max) for the measure r dr."""

    n: int
    r_nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray
    Dstar: np.ndarray
    r_max: float
    stretch: float
    x_nodes: np.ndarray
    x_weights: np.ndarray
    bary: np.ndarray
    drdx: np.ndarray
    map_kind: str = "algebraic_stretch"

    @property
    def b(self) -> float:
        return 1.0 + 2.0 * self.stretch / self.r_max

    @property
    def key(self) -> tuple:
        return (self.n, self.r_max, self.stretch)

    def r_to_x(self, r):
        r = np.asarray(r, dtype=float)
        return (self.b * r - self.stretch) / (self.stretch + r)

    def x_to_r(self, x):
        x = np.asarray(x, dtype=float)
        return self.stretch * (1.0 + x) / (self.b - x)

    def integrate(self, f) -> complex:
        """Quadrature of int_0^R f(r) r dr from nodal values."""
        return np.sum(self.weights * np.asarray(f))

    def inner(self, u, v) -> complex:
        """Discrete L^2(r dr) inner product <u, v> (conjugate-linear in u)."""
        return np.sum(self.weights * np.conj(u) * v)

    def norm(self, u) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(u) ** 2)))

    def interp_matrix(self, r_eval) -> np.ndarray:
        """Matrix mapping nodal values to values of the interpolant at r_eval."""
        return interp_matrix_x(self.x_nodes, self.bary, self.r_to_x(r_eval))

    def end_row(self) -> np.ndarray:
        """Evaluation row of the interpolant at r = r_max (x = 1)."""
        return self.interp_matrix([self.r_max])[0]

    def augmented(self):
        """Nodes with the endpoints r=0 and r=r_max added, and their D matrix.

        Used by boundary-value solves that impose conditions at the ends.
        """
        return _augmented(self.n, self.r_max, self.stretch)


def _readonly(*arrs):
    for a in arrs:
        a.setflags(write=False)


@functools.lru_cache(maxsize=64)
def _make_grid(n: int, r_max: float, stretch: float) -> RadialGrid:
    x, wx = np.polynomial.legendre.leggauss(n)
    b = 1.0 + 2.0 * stretch / r_max
    r = stretch * (1.0 + x) / (b - x)
    drdx = stretch * (1.0 + b) / (b - x) ** 2
    # barycentric weights from the computed nodes themselves: the closed form
    # (-1)^j sqrt((1 - x_j^2) w_j) inherits the error of the Gauss weights and
    # costs two digits in D at n >= 96
    bary = barycentric_weights(x)
    D = diffmat(x, bary) / drdx[:, None]
    Dstar = D + np.diag(1.0 / r)
    weights = wx * drdx * r
    _readonly(x, wx, r, drdx, bary, D, Dstar, weights)
    return RadialGrid(n=n, r_nodes=r, weights=weights, D=D, Dstar=Dstar, r_max=r_max,
                      stretch=stretch, x_nodes=x, x_weights=wx, bary=bary, drdx=drdx)


def make_grid(n: int = DEFAULT_N, r_max: float = DEFAULT_R_MAX,
              stretch: float = DEFAULT_STRETCH) -> RadialGrid:
    """Build (or fetch from cache) the grid with n interior nodes on (0, r_max).

    ``stretch`` is the map parameter a: half of the nodes lie below r ~ a.
    """
    if int(n) != n or n < 16:
        raise DomainError(f"need an integer n >= 16 (got {n})")
    if not (r_max > 0 and np.isfinite(r_max)):
        raise DomainError(f"r_max must be positive (got {r_max})")
    if not (stretch > 0):
        raise DomainError(f"stretch must be positive (got {stretch})")
    return _make_grid(int(n), float(r_max), float(stretch))


@functools.lru_cache(maxsize=64)
def _augmented(n, r_max, stretch):
    g = _make_grid(n, r_max, stretch)
    xa = np.concatenate([[-1.0], g.x_nodes, [1.0]])
    ra = g.x_to_r(xa)
    ra[0] = 0.0
    ra[-1] = r_max
    drdx = stretch * (1.0 + g.b) / (g.b - xa) ** 2
    Da = diffmat(xa) / drdx[:, None]
    _readonly(ra, Da)
    return ra, Da


# ---------------------------------------------------------------------------
# sector fields

@dataclass
class SectorField:
    """Velocity samples (u_r, u_theta, u_z) of one Fourier sector."""

    m: int
    k: float
    u_r: np.ndarray
    u_theta: np.ndarray
    u_z: np.ndarray

    def __post_init__(self):
        self.u_r = np.asarray(self.u_r, dtype=complex)
        self.u_theta = np.asarray(self.u_theta, dtype=complex)
        self.u_z = np.asarray(self.u_z, dtype=complex)
        if not (self.u_r.shape == self.u_theta.shape == self.u_z.shape) or self.u_r.ndim != 1:
            raise DomainError("components must be 1-D arrays of equal length")

    @property
    def n(self) -> int:
        return self.u_r.size

    @property
    def sector(self):
        return (self.m, self.k)

    def stack(self) -> np.ndarray:
        return np.concatenate([self.u_r, self.u_theta, self.u_z])

    @classmethod
    def from_stack(cls, vec, m, k) -> "SectorField":
        vec = np.asarray(vec)
        if vec.ndim != 1 or vec.size % 3:
            raise DomainError("stacked field length must be a multiple of 3")
        n = vec.size // 3
        return cls(m, k, vec[:n], vec[n:2 * n], vec[2 * n:])

    @classmethod
    def zeros(cls, n, m, k) -> "SectorField":
        z = np.zeros(n, complex)
        return cls(m, k, z, z.copy(), z.copy())

    def norm(self, g: RadialGrid) -> float:
        """L^2(r dr) norm of the three components together."""
        _check_size(self, g)
        return float(np.sqrt(sum(np.sum(g.weights * np.abs(c) ** 2)
                                 for c in (self.u_r, self.u_theta, self.u_z))))

    def _same(self, other):
        if (self.m, self.k) != (other.m, other.k) or self.n != other.n:
            raise DomainError("fields belong to different sectors or grids")

    def __add__(self, other):
        self._same(other)
        return SectorField(self.m, self.k, self.u_r + other.u_r,
                           self.u_theta + other.u_theta, self.u_z + other.u_z)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        return SectorField(self.m, self.k, c * self.u_r, c * self.u_theta, c * self.u_z)

    def copy(self):
        return SectorField(self.m, self.k, self.u_r.copy(), self.u_theta.copy(), self.u_z.copy())


def _check_size(f: SectorField, g: RadialGrid):
    if f.n != g.n:
        raise DomainError(f"field has {f.n} nodes, grid has {g.n}")


def divergence(f: SectorField, g: RadialGrid) -> np.ndarray:
    """(d/dr + 1/r) u_r + (i m/r) u_theta + i k u_z at the nodes."""
    _check_size(f, g)
    r = g.r_nodes
    return g.Dstar @ f.u_r + (1j * f.m / r) * f.u_theta + 1j * f.k * f.u_z


def divergence_matrix(g: RadialGrid, m, k) -> np.ndarray:
    """Nodal divergence acting on stacked (u_r, u_theta, u_z)."""
    n = g.n
    return np.hstack([g.Dstar, np.diag(1j * m / g.r_nodes), 1j * k * np.eye(n)])


def exterior_coefficient(g: RadialGrid, m, k) -> float:
    """Weight beta of |u_r(R)|^2 carried by the flow outside r_max.

    For k = 0 and m != 0 a divergence-free field decays only algebraically;
    beyond R it is continued by the potential solution u_r ~ r^{-|m|-1},
    u_theta ~ i sgn(m) r^{-|m|-1}, whose energy is (R^2/|m|) |u_r(R)|^2.
    Other sectors decay exponentially (k != 0) or have u_r = 0 (m = k = 0),
    and get beta = 0.
    """
    if k == 0 and m != 0:
        return g.r_max ** 2 / abs(m)
    return 0.0


@dataclass(frozen=True, eq=False)
class DivFreeBasis:
    """Orthonormal coordinates of the discrete divergence-free subspace.

    Q (complex, physical variables) satisfies Q^H G Q = I and Div Q = 0,
    where G is the Gram matrix of the inner product (``gram``).  Q = T Q_real
    with T = diag(1, i, i) and Q_real real.
    """

    m: int
    k: float
    grid_key: tuple
    Q: np.ndarray
    Q_real: np.ndarray
    gram: np.ndarray
    exterior: float
    constraint_sv: np.ndarray

    @property
    def dim(self) -> int:
        return self.Q.shape[1]

    def coords(self, f: SectorField) -> np.ndarray:
        """Coordinates c with Q c the G-orthogonal projection of f."""
        return self.Q.conj().T @ (self.gram @ f.stack())

    def field(self, c) -> SectorField:
        return SectorField.from_stack(self.Q @ c, self.m, self.k)


def _phase(n):
    return np.concatenate([np.ones(n), 1j * np.ones(n), 1j * np.ones(n)])


@functools.lru_cache(maxsize=128)
def _divfree_basis(n, r_max, stretch, m, k, extended) -> DivFreeBasis:
    g = _make_grid(n, r_max, stretch)
    r = g.r_nodes
    wt = np.tile(g.weights, 3)
    beta = exterior_coefficient(g, m, k) if extended else 0.0
    gram = np.diag(wt)
    if beta:
        e = g.end_row()
        gram[:n, :n] += beta * np.outer(e, e)
    if m == 0 and k == 0:
        # X_{0,0}: u_r = 0, u_theta and u_z free
        Qr = np.zeros((3 * n, 2 * n))
        Qr[n:, :] = np.diag(1.0 / np.sqrt(wt[n:]))
        sv = np.linalg.svd(g.Dstar, compute_uv=False)
    else:
        div_real = np.hstack([g.Dstar, np.diag(-m / r), -k * np.eye(n)])
        C = la.cholesky(gram)  # gram = C^T C
        Ci = la.solve_triangular(C, np.eye(3 * n))
        U, sv, Vh = la.svd(div_real @ Ci)
        if sv[-1] < 1e-13 * sv[0] * n:
            raise ProjectionRankError(
                f"divergence constraint rank deficient for sector ({m},{k})",
                singular_values=sv[-5:])
        Qr = Ci @ Vh[n:].T
    Q = _phase(n)[:, None] * Qr
    _readonly(Qr, Q, gram, sv)
    return DivFreeBasis(m=m, k=k, grid_key=g.key, Q=Q, Q_real=Qr, gram=gram,
                        exterior=beta, constraint_sv=sv)


def divfree_basis(g: RadialGrid, m: int, k: float, extended: bool = True) -> DivFreeBasis:
    """Cached divergence-free basis for sector (m, k) on grid g.

    With ``extended`` (default) the inner product includes the exterior
    energy term of :func:`exterior_coefficient`; otherwise it is the plain
    quadrature inner product.
    """
    if int(m) != m:
        raise DomainError("m must be an integer")
    return _divfree_basis(g.n, g.r_max, g.stretch, int(m), float(k), bool(extended))


def project_divfree(f: SectorField, g: RadialGrid) -> SectorField:
    """Orthogonal projection (discrete L^2(r dr)^3) onto discrete X_{m,k}."""
    _check_size(f, g)
    B = divfree_basis(g, f.m, f.k, extended=False)
    if B.grid_key != g.key:  # pragma: no cover - cache keyed on grid
        raise AssemblyError("basis/grid mismatch")
    return B.field(B.coords(f))


def weighted_inner(g: RadialGrid, f: SectorField, h: SectorField) -> complex:
    """Plain discrete L^2(r dr)^3 inner product of two sector fields."""
    return sum(g.inner(a, b) for a, b in ((f.u_r, h.u_r), (f.u_theta, h.u_theta), (f.u_z, h.u_z)))


def divergence_residual(f: SectorField, g: RadialGrid) -> float:
    """Relative size of the discrete divergence.

    ||div u|| divided by the sum of the norms of its three terms, so that a
    value near machine precision means the terms cancel to that accuracy.
    """
    _check_size(f, g)
    r = g.r_nodes
    t1 = g.Dstar @ f.u_r
    t2 = (1j * f.m / r) * f.u_theta
    t3 = 1j * f.k * f.u_z
    scale = g.norm(t1) + g.norm(t2) + g.norm(t3)
    if scale == 0.0:
        return 0.0
    return g.norm(t1 + t2 + t3) / scale


def smooth_divfree_field(g: RadialGrid, m: int, k: float, rng=None, terms: int = 3) -> SectorField:
    """Random smooth field of sector (m, k), divergence-free analytically.

    u_r and one other component are sums of r^q e^{-alpha r^2} bumps with
    random complex amplitudes (q >= |m| + 1 so the axis behaviour is
    regular); the remaining component is chosen so that the continuous
    divergence vanishes exactly.  For m = k = 0, u_r = 0.
    """
    rng = np.random.default_rng(rng)
    r = g.r_nodes
    ur = np.zeros(g.n, complex)
    dur = np.zeros(g.n, complex)
    ut = np.zeros(g.n, complex)
    uz = np.zeros(g.n, complex)
    for _ in range(terms):
        al = rng.uniform(0.3, 2.0)
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        q = abs(m) + 1 + int(rng.integers(0, 3))
        e = np.exp(-al * r * r)
        ur += c[0] * r ** q * e
        dur += c[0] * (q * r ** (q - 1) - 2 * al * r ** (q + 1)) * e
        ut += c[1] * r ** q * e
        uz += c[2] * r ** abs(m) * e
    if k != 0:
        uz = (1j / k) * (dur + ur / r + 1j * m / r * ut)
    elif m != 0:
        ut = (1j * r / m) * (dur + ur / r)
    else:
        ur = np.zeros(g.n, complex)
    return SectorField(m, k, ur, ut, uz)
