"""Discrete sector operators A_m, B_{m,k} and L_{m,k} = A_m + B_{m,k}.

On a sector field u = (u_r, u_theta, u_z) the linearized Euler operator
acts as

    L u = P( -im Omega u_r + 2 Omega u_theta,  -im Omega u_theta - W u_r,  -im Omega u_z )

where P is the Leray projection onto divergence-free fields (the pressure
gradient).  The advection part is the nodal multiplication operator

    A u = ( -im Omega u_r,  -im Omega u_theta + r Omega' u_r,  -im Omega u_z )

and B = L - A.  Operators are represented in the orthonormal coordinates of
:class:`~vortexstab.grid.DivFreeBasis`, where the Leray projection is the
Galerkin compression Q^H G (.) Q.  B can alternatively be assembled from
explicit pressure solves (``method="pressure"``).  That route agrees with the
Leray one on resolved (smooth) fields, which is how it is used as a
cross-check; on grid-scale basis vectors the collocated pressure problem and
the nodal divergence are different discretizations, so the pressure-route
matrix is not a substitute for B.

With u_theta = i w_theta, u_z = i w_z the compressed operators take the form
i M with M real, so computed spectra respect the symmetry lambda -> -conj(lambda)
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la

from .errors import AssemblyError
from .grid import (DivFreeBasis, RadialGrid, SectorField, divergence_residual,
                   divfree_basis, smooth_divfree_field)
from .pressure import pressure_operator


def _coefficients(prof, g: RadialGrid):
    r = g.r_nodes
    om, omp, w = prof.evaluate(r)
    return r, om, omp, w


def _real_blocks(prof, g: RadialGrid, m: int, part: str) -> np.ndarray:
    """Real 3n x 3n matrix M with T^{-1} X T = i M, T = diag(1, i, i).

    part 'full': X = the pressure-free Euler operator; 'A': X = advection.
    """
    n = g.n
    r, om, omp, w = _coefficients(prof, g)
    Z = np.zeros((n, n))
    d = np.diag(-m * om)
    if part == "full":
        return np.block([[d, np.diag(2 * om), Z], [np.diag(w), d, Z], [Z, Z, d]])
    if part == "A":
        return np.block([[d, Z, Z], [np.diag(-r * omp), d, Z], [Z, Z, d]])
    raise ValueError(part)


def exterior_action(prof, g: RadialGrid, basis: DivFreeBasis) -> float:
    """Coefficient c of the exterior term c e e^T (real form: L gains i c e e^T).

    Outside r_max a k = 0 field is the potential flow u_r ~ r^{-|m|-1},
    u_theta = -i sgn(m) u_r, advected by Omega ~ Omega(R) R^2 / r^2.  Its
    contribution to <u, L u> is -i sgn(m) R^2 Omega(R) |u_r(R)|^2 and comes
    entirely from the advection part (the nonlocal part integrates to zero).
    """
    if not basis.exterior:
        return 0.0
    R = g.r_max
    return -float(np.sign(basis.m)) * R * R * float(prof.omega(np.array([R]))[0])


def assemble_Am(prof, m: int, g: RadialGrid) -> np.ndarray:
    """Nodal advection block acting on stacked (u_r, u_theta, u_z)."""
    n = g.n
    r, om, omp, w = _coefficients(prof, g)
    Z = np.zeros((n, n))
    d = np.diag(-1j * m * om)
    return np.block([[d, Z, Z], [np.diag(r * omp) + 0j, d, Z], [Z, Z, d]])


def assemble_euler_nodal(prof, m: int, g: RadialGrid) -> np.ndarray:
    """Nodal pressure-free Euler block (-im Omega u_r + 2 Omega u_theta, ...)."""
    n = g.n
    r, om, omp, w = _coefficients(prof, g)
    Z = np.zeros((n, n))
    d = np.diag(-1j * m * om)
    return np.block([[d, np.diag(2 * om) + 0j, Z], [np.diag(-w) + 0j, d, Z], [Z, Z, d]])


def _compress_real(basis: DivFreeBasis, g: RadialGrid, M: np.ndarray, ext: float = 0.0):
    Qr = basis.Q_real
    wt = np.tile(g.weights, 3)
    G = wt[:, None] * M
    if ext:
        e = g.end_row()
        G[: g.n, : g.n] += ext * np.outer(e, e)
    return Qr.T @ G @ Qr


def assemble_Bmk(prof, m: int, k: float, g: RadialGrid, method: str = "leray",
                 basis: DivFreeBasis | None = None) -> np.ndarray:
    """Nonlocal part in divergence-free coordinates.

    ``method='leray'``: Galerkin compression of (2 Omega u_theta, -2 (r Omega)' u_r, 0).
    ``method='pressure'``: compression of the nodal field
    (-p' + 2 Omega u_theta, -(im/r) p - 2 (r Omega)' u_r, -ik p) with p from the
    collocated pressure solver, one column per basis vector.  Only its action
    on resolved fields is meaningful (see the module docstring).
    """
    basis = basis or divfree_basis(g, m, k)
    if method == "leray":
        M = _real_blocks(prof, g, m, "full") - _real_blocks(prof, g, m, "A")
        return 1j * _compress_real(basis, g, M)
    if method == "pressure":
        return basis.Q.conj().T @ (np.tile(g.weights, 3)[:, None] * (pressure_route_nodal(prof, m, k, g) @ basis.Q))
    raise ValueError(f"unknown method {method!r}")


def pressure_route_nodal(prof, m: int, k: float, g: RadialGrid) -> np.ndarray:
    """Nodal matrix of B assembled from explicit pressure solves."""
    n = g.n
    r, om, omp, w = _coefficients(prof, g)
    P, dP = pressure_operator(prof, g, m, k, method="bvp")  # n x 2n on (u_r, u_theta)
    Z = np.zeros((n, n))
    I = np.eye(n)
    Ur = np.hstack([I, Z, Z])
    Ut = np.hstack([Z, I, Z])
    P3 = P @ np.vstack([Ur, Ut])
    dP3 = dP @ np.vstack([Ur, Ut])
    Br = -dP3 + 2 * om[:, None] * Ut
    Bt = -(1j * m / r)[:, None] * P3 - 2 * (w - om)[:, None] * Ur
    Bz = -1j * k * P3
    return np.vstack([Br, Bt, Bz])


@dataclass(eq=False)
class SectorOperator:
    """L_{m,k} = A + B in orthonormal divergence-free coordinates."""

    m: int
    k: float
    A: np.ndarray
    B: np.ndarray
    basis: DivFreeBasis
    grid: RadialGrid
    profile_name: str
    M_real: np.ndarray
    exterior: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    _coef: tuple = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> np.ndarray:
        return self.A + self.B

    def eigvals(self) -> np.ndarray:
        """Eigenvalues of L computed through the real generator (L = i M)."""
        return 1j * la.eigvals(self.M_real)

    def eig(self):
        """Eigenvalues and coordinate eigenvectors of L."""
        mu, V = la.eig(self.M_real)
        return 1j * mu, V.astype(complex)

    def apply(self, c) -> np.ndarray:
        """Matrix-free L c: expand, act nodally, project back."""
        c = np.asarray(c)
        g = self.grid
        n = g.n
        r, om, w = self._coef
        u = self.basis.Q @ c
        ur, ut, uz = u[:n], u[n:2 * n], u[2 * n:]
        m = self.m
        v = np.concatenate([-1j * m * om * ur + 2 * om * ut,
                            -1j * m * om * ut - w * ur,
                            -1j * m * om * uz])
        out = self.basis.Q.conj().T @ (np.tile(g.weights, 3) * v)
        if self.exterior:
            e = g.end_row()
            out += self.basis.Q[:n].conj().T @ e * (1j * self.exterior * (e @ ur))
        return out

    def to_field(self, c) -> SectorField:
        return self.basis.field(c)

    def coords(self, f: SectorField) -> np.ndarray:
        if f.n != self.grid.n or (f.m, f.k) != (self.m, self.k):
            raise AssemblyError("field does not match operator sector/grid")
        return self.basis.coords(f)

    def singular_values_B(self) -> np.ndarray:
        return la.svdvals(self.B)

    def dump(self, path, which: str = "L", fmt: str = "binary"):
        """Write a matrix as row-major (re, im) float64 pairs.

        ``fmt='binary'`` writes raw little-endian doubles; ``fmt='csv'`` writes
        one row per line with 2*dim columns re0, im0, re1, im1, ...
        """
        mat = {"L": self.L, "A": self.A, "B": self.B}[which]
        mat = np.ascontiguousarray(mat, dtype="<c16")
        if fmt == "binary":
            mat.tofile(path)
        elif fmt == "csv":
            pairs = mat.view("<f8").reshape(mat.shape[0], -1)
            np.savetxt(path, pairs, delimiter=",", fmt="%.17g",
                       header=f"row-major complex pairs, dim={mat.shape[0]}")
        else:
            raise ValueError(fmt)
        return mat.shape


def load_dump(path, dim: int) -> np.ndarray:
    """Inverse of :meth:`SectorOperator.dump` for the binary layout."""
    return np.fromfile(path, dtype="<c16").reshape(dim, dim)


def assemble_Lmk(prof, m: int, k: float, g: RadialGrid, b_method: str = "leray") -> SectorOperator:
    """Assemble L_{m,k} = A_m + B_{m,k} on grid g."""
    if b_method != "leray":
        raise ValueError(f"unknown b_method {b_method!r}; the pressure route is a "
                         "cross-check on resolved fields (pressure_route_agreement)")
    m = int(m)
    k = float(k)
    basis = divfree_basis(g, m, k)
    if basis.Q.shape[0] != 3 * g.n:
        raise AssemblyError("cached basis does not match the grid")
    ext = exterior_action(prof, g, basis)
    MA = _compress_real(basis, g, _real_blocks(prof, g, m, "A"), ext)
    ML = _compress_real(basis, g, _real_blocks(prof, g, m, "full"), ext)
    A = 1j * MA
    B = 1j * (ML - MA)
    if A.shape != B.shape or A.shape[0] != basis.dim:
        raise AssemblyError(f"dimension mismatch: A {A.shape}, B {B.shape}, basis {basis.dim}")
    r, om, omp, w = _coefficients(prof, g)
    op = SectorOperator(m=m, k=k, A=A, B=B, basis=basis, grid=g,
                        profile_name=getattr(prof, "name", "profile"), M_real=ML,
                        exterior=ext, _coef=(r, om, w))
    op.diagnostics["b_method"] = b_method
    op.diagnostics["exterior_closure"] = bool(ext)
    return op


def divergence_preservation(op: SectorOperator, ncols: int = 8, rng=None) -> float:
    """Largest relative divergence of L applied to random basis columns."""
    rng = np.random.default_rng(rng)
    worst = 0.0
    idx = rng.choice(op.dimension, size=min(ncols, op.dimension), replace=False)
    for j in idx:
        c = np.zeros(op.dimension, complex)
        c[j] = 1.0
        f = op.to_field(op.L @ c)
        worst = max(worst, divergence_residual(f, op.grid))
    return worst


def pressure_route_divergence(prof, m: int, k: float, g: RadialGrid, nfields: int = 8, rng=None) -> float:
    """Relative divergence of the pressure-route B applied to random smooth fields."""
    rng = np.random.default_rng(rng)
    Bn = pressure_route_nodal(prof, m, k, g)
    worst = 0.0
    for _ in range(nfields):
        v = Bn @ smooth_divfree_field(g, m, k, rng).stack()
        worst = max(worst, divergence_residual(SectorField.from_stack(v, m, k), g))
    return worst


def pressure_route_agreement(op: SectorOperator, prof, nfields: int = 8, rng=None) -> float:
    """Largest relative difference between B c and the pressure-route B on smooth fields."""
    rng = np.random.default_rng(rng)
    g = op.grid
    Bn = pressure_route_nodal(prof, op.m, op.k, g)
    Q, G = op.basis.Q, op.basis.gram
    worst = 0.0
    for _ in range(nfields):
        f = smooth_divfree_field(g, op.m, op.k, rng)
        a = op.B @ op.coords(f)
        b = Q.conj().T @ (G @ (Bn @ f.stack()))
        worst = max(worst, float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300)))
    return worst


def resolved_band(sv_coarse, sv_fine, rel=0.05) -> int:
    """Number of leading singular values that agree between two grids within rel."""
    nb = min(len(sv_coarse), len(sv_fine))
    a, b = np.asarray(sv_coarse[:nb]), np.asarray(sv_fine[:nb])
    ok = np.abs(a - b) <= rel * np.maximum(np.abs(b), 1e-300)
    bad = np.nonzero(~ok)[0]
    return int(bad[0]) if bad.size else nb
