"""Operator assembly, restricted Green functions, the boundary field psi,
the full kernel with its independent Gamma(1/2) coupling, u-fields, path-sum
oracles, and spectral diagnostics.

Production Green functions always come from symmetric positive definite
solves; the factorization doubles as the positivity certificate. Truncated
path sums converge far too slowly for production and exist only as
independent oracles for tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .betafield import BetaSample
from .errors import (
    DomainError,
    FactorizationError,
    NumericError,
    RestrictionError,
)
from .graphs import (
    PATH_CAP_DEFAULT,
    WeightedGraph,
    boundary_weights,
    enumerate_paths,
    path_beta_factor,
    path_weight,
)

__all__ = [
    "Operator",
    "GreenBundle",
    "assemble_H",
    "green_bundle",
    "u_field",
    "truncated_green_pathsum",
    "q_density",
    "spectrum_bottom",
    "check_identities",
    "IdentityReport",
]

DENSE_LIMIT = 1000


@dataclass(frozen=True)
class Operator:
    """The operator 2 diag(beta) - P; dense for small vertex sets, sparse
    beyond DENSE_LIMIT."""

    h: Union[np.ndarray, scipy.sparse.csr_matrix]

    @property
    def is_sparse(self) -> bool:
        return scipy.sparse.issparse(self.h)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def dense(self) -> np.ndarray:
        return self.h.toarray() if self.is_sparse else self.h


def _beta_vector(beta) -> np.ndarray:
    if isinstance(beta, BetaSample):
        return np.asarray(beta.beta, dtype=float)
    return np.asarray(beta, dtype=float)


def assemble_H(g: WeightedGraph, beta) -> Operator:
    """Matrix with 2 beta_i on the diagonal and -W_ij off it."""
    b = _beta_vector(beta)
    if b.shape != (g.n,):
        raise DomainError("beta length must match vertex count")
    if g.n <= DENSE_LIMIT:
        h = np.zeros((g.n, g.n))
        for i, j, w in g.edges:
            h[i, j] = -w
            h[j, i] = -w
        idx = np.arange(g.n)
        h[idx, idx] = 2.0 * b
        return Operator(h=h)
    rows, cols, vals = [], [], []
    for i, j, w in g.edges:
        rows += [i, j]
        cols += [j, i]
        vals += [-w, -w]
    rows += list(range(g.n))
    cols += list(range(g.n))
    vals += list(2.0 * b)
    h = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return Operator(h=h)


@dataclass(frozen=True)
class GreenBundle:
    """Per-environment derived objects for a retained set V plus boundary.

    Indices 0..m-1 follow `subset` order; index m is the boundary vertex
    delta. hat_g is the inverse of the V-block of H, psi its harmonic
    extension of the constant 1 boundary value, full_g the kernel on V plus
    delta built from the independent Gamma(1/2) variable gamma, u the log
    ratio of the root row of full_g, and beta_delta the coupled boundary
    potential. w_wired holds the collapsed conductances, delta last.
    """

    subset: tuple
    hat_g: np.ndarray
    psi: np.ndarray
    gamma: float
    full_g: np.ndarray
    u: np.ndarray
    beta_delta: float
    boundary_eta: np.ndarray
    w_wired: np.ndarray
    i0_index: int

    @property
    def m(self) -> int:
        return len(self.subset)

    @property
    def delta_index(self) -> int:
        return self.m

    def position(self, vertex: Optional[int]) -> int:
        """Extended index of a parent-graph vertex (None means delta)."""
        if vertex is None:
            return self.delta_index
        try:
            return self.subset.index(int(vertex))
        except ValueError:
            raise DomainError(f"vertex {vertex} is not in the retained set")

    def psi_ext(self) -> np.ndarray:
        """psi extended by 1 at delta."""
        return np.concatenate([self.psi, [1.0]])

    def hat_g_ext(self) -> np.ndarray:
        """hat_g extended by zeros on the delta row and column."""
        m = self.m
        out = np.zeros((m + 1, m + 1))
        out[:m, :m] = self.hat_g
        return out

    def beta_ext(self, beta) -> np.ndarray:
        """Interior beta with the coupled boundary value appended."""
        return np.concatenate([_beta_vector(beta), [self.beta_delta]])


def _spd_factor(h: np.ndarray, what: str):
    try:
        return scipy.linalg.cho_factor(h, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError(f"{what} is not positive definite: {exc}") from exc


def green_bundle(
    g: WeightedGraph,
    beta,
    subset: Sequence[int],
    gamma: float,
    i0: Optional[int] = None,
) -> GreenBundle:
    """Solve the restricted systems for a retained set of g's vertices.

    beta lives on `subset` (same order). Everything outside `subset` is
    collapsed to delta; the boundary weight vector must be nonzero. gamma is
    the independent Gamma(1/2, 1) coupling. i0 (a vertex of `subset`, or None
    for delta) is the root used for the u vector.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    subset = tuple(int(v) for v in subset)
    if len(set(subset)) != len(subset):
        raise DomainError("subset has repeated vertices")
    m = len(subset)
    b = _beta_vector(beta)
    if b.shape != (m,):
        raise DomainError("beta length must match subset size")
    eta = boundary_weights(g, subset)
    if not eta.any():
        raise RestrictionError("subset has empty boundary weight vector")
    w = g.weight_matrix()
    idx = np.array(subset)
    w_in = w[np.ix_(idx, idx)]
    h_in = -w_in.copy()
    di = np.arange(m)
    h_in[di, di] += 2.0 * b
    factor = _spd_factor(h_in, "restricted operator block")
    hat_g = scipy.linalg.cho_solve(factor, np.eye(m))
    hat_g = 0.5 * (hat_g + hat_g.T)
    psi = scipy.linalg.cho_solve(factor, eta)

    full_g = np.empty((m + 1, m + 1))
    full_g[:m, :m] = hat_g + np.outer(psi, psi) / (2.0 * gamma)
    full_g[:m, m] = psi / (2.0 * gamma)
    full_g[m, :m] = psi / (2.0 * gamma)
    full_g[m, m] = 1.0 / (2.0 * gamma)

    beta_delta = 0.5 * float(eta @ psi) + gamma

    w_wired = np.zeros((m + 1, m + 1))
    w_wired[:m, :m] = w_in
    w_wired[:m, m] = eta
    w_wired[m, :m] = eta

    root = m if i0 is None else subset.index(int(i0))
    row = full_g[root]
    u = np.log(row) - np.log(row[root])
    return GreenBundle(
        subset=subset,
        hat_g=hat_g,
        psi=psi,
        gamma=float(gamma),
        full_g=full_g,
        u=u,
        beta_delta=beta_delta,
        boundary_eta=eta,
        w_wired=w_wired,
        i0_index=root,
    )


def u_field(g: WeightedGraph, beta, i0: int) -> np.ndarray:
    """u(i0, .) = log G(i0, .) - log G(i0, i0) on a full finite graph, with
    G the inverse of the assembled operator."""
    b = _beta_vector(beta)
    h = assemble_H(g, b).dense()
    factor = _spd_factor(h, "operator")
    e = np.zeros(g.n)
    e[int(i0)] = 1.0
    col = scipy.linalg.cho_solve(factor, e)
    if (col <= 0).any():
        raise NumericError("Green row is not positive; operator too close to singular")
    return np.log(col) - np.log(col[int(i0)])


def truncated_green_pathsum(
    g: WeightedGraph,
    beta,
    i: int,
    j: int,
    k_max: int,
    cap: int = PATH_CAP_DEFAULT,
) -> float:
    """Sum of W_path / prod(2 beta) over paths from i to j of length <= k_max.

    Monotone nondecreasing in k_max and bounded by the solver Green entry;
    test oracle only.
    """
    b = _beta_vector(beta)
    total = 0.0
    for path in enumerate_paths(g, i, stop_set=(), max_len=k_max, cap=cap):
        if path[-1] == int(j):
            total += path_weight(g, path) / path_beta_factor(b, path, include_last=True)
    return total


def q_density(g: WeightedGraph, u: np.ndarray, i0: int) -> float:
    """Density of the rooted u-field law on a full finite graph.

    u must vanish at the root. The determinant factor is the (i0, i0)
    diagonal minor of the matrix with -W_ij e^(u_i + u_j) off the diagonal
    and row sums negated on it (a weighted spanning-tree count, so it is
    nonnegative).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (g.n,):
        raise DomainError("u length must match vertex count")
    if not np.isfinite(u).all():
        raise DomainError("u must be finite")
    if abs(u[int(i0)]) > 1e-12:
        raise DomainError("u must vanish at the root")
    w = g.weight_matrix()
    e_u = np.exp(u)
    m = -w * np.outer(e_u, e_u)
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, -m.sum(axis=1))
    keep = [v for v in range(g.n) if v != int(i0)]
    minor = m[np.ix_(keep, keep)]
    sign, logdet = np.linalg.slogdet(minor)
    if sign <= 0:
        return 0.0
    pair_term = 0.0
    for a, bb, ww in g.edges:
        pair_term += ww * (np.cosh(u[a] - u[bb]) - 1.0)
    n = g.n
    log_val = (
        -0.5 * (n - 1) * np.log(2.0 * np.pi)
        - u.sum()
        - pair_term
        + 0.5 * logdet
    )
    return float(np.exp(log_val))


def spectrum_bottom(h: Union[Operator, np.ndarray], tol: float = 1e-8) -> float:
    """Smallest eigenvalue; dense solve below the size cutoff, Lanczos above."""
    op = h if isinstance(h, Operator) else Operator(h=np.asarray(h, dtype=float))
    if not op.is_sparse:
        mat = op.h
        if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
            raise DomainError("operator must be symmetric")
        return float(np.linalg.eigvalsh(mat)[0])
    try:
        vals = scipy.sparse.linalg.eigsh(
            op.h, k=1, which="SA", tol=tol, maxiter=op.n * 200,
            return_eigenvectors=False,
        )
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise NumericError(f"eigenvalue iteration did not converge: {exc}") from exc
    return float(vals[0])


@dataclass(frozen=True)
class IdentityReport:
    """Max relative residuals of the per-environment exact identities."""

    hg_block: float
    full_inverse: float
    harmonic: float
    beta_reconstruction: float
    cauchy_schwarz: float
    gcheck_min_violation: float
    telescoping: float

    def max_residual(self) -> float:
        return max(
            self.hg_block,
            self.full_inverse,
            self.harmonic,
            self.beta_reconstruction,
            self.cauchy_schwarz,
            self.gcheck_min_violation,
            self.telescoping,
        )


def check_identities(
    bundle: GreenBundle, g: WeightedGraph, beta, i0: Optional[int] = None
) -> IdentityReport:
    """Recompute the bundle's defining identities and report residuals.

    Checks: H times hat_g is the identity on the block; the wired operator
    with the coupled boundary potential inverts full_g; psi is harmonic with
    boundary value 1; beta is reconstructed from the u-field with the root
    atom 1/(2 G(i0,i0)); hat_g obeys the Cauchy-Schwarz bound entrywise; the
    complementary kernel Ghat(i0,i0) psi - Ghat(i0,.) psi(i0) is nonnegative;
    and row sums of the quenched rates reproduce beta away from the root.
    """
    m = bundle.m
    b = _beta_vector(beta)
    root = bundle.i0_index if i0 is None else bundle.position(i0)
    w_in = bundle.w_wired[:m, :m]
    eta = bundle.boundary_eta

    h_in = -w_in.copy()
    di = np.arange(m)
    h_in[di, di] += 2.0 * b

    def rel(err, scale):
        return float(err / max(scale, 1e-300))

    def inv_resid(a, x):
        # normwise relative residual: the atom 1/(2 gamma) can make the
        # kernel huge, so |AX - I| alone would just measure conditioning
        err = np.abs(a @ x - np.eye(a.shape[0])).max()
        return rel(err, max(np.abs(a).max() * np.abs(x).max(), 1.0))

    r_hg = inv_resid(h_in, bundle.hat_g)

    beta_ext = bundle.beta_ext(b)
    h_wired = -bundle.w_wired.copy()
    dj = np.arange(m + 1)
    h_wired[dj, dj] += 2.0 * beta_ext
    r_full = inv_resid(h_wired, bundle.full_g)

    resid = 2.0 * b * bundle.psi - w_in @ bundle.psi - eta
    r_harm = rel(np.abs(resid).max(), max(np.abs(eta).max(), 1.0))

    # beta reconstruction from the root row of the kernel
    grow = bundle.full_g[root]
    ratios = grow[None, :] / grow[:, None]
    recon = 0.5 * (bundle.w_wired * ratios).sum(axis=1)
    recon[root] += 1.0 / (2.0 * grow[root])
    r_beta = rel(np.abs(recon - beta_ext).max(), np.abs(beta_ext).max())

    d = np.sqrt(np.diag(bundle.hat_g))
    cs = bundle.hat_g - np.outer(d, d)
    r_cs = rel(max(cs.max(), 0.0), max(np.abs(bundle.hat_g).max(), 1.0))

    psi_e = bundle.psi_ext()
    ghat_e = bundle.hat_g_ext()
    gcheck = ghat_e[root, root] * psi_e - ghat_e[root] * psi_e[root]
    r_gc = rel(max(-gcheck.min(), 0.0), max(psi_e.max(), 1.0))

    exit_rates = 0.5 * (bundle.w_wired * ratios).sum(axis=1)
    mask = np.ones(m + 1, dtype=bool)
    mask[root] = False
    r_tel = rel(
        np.abs(exit_rates[mask] - beta_ext[mask]).max(), np.abs(beta_ext).max()
    )

    return IdentityReport(
        hg_block=r_hg,
        full_inverse=r_full,
        harmonic=r_harm,
        beta_reconstruction=r_beta,
        cauchy_schwarz=r_cs,
        gcheck_min_violation=r_gc,
        telescoping=r_tel,
    )
