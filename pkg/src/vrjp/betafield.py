"""The beta potential family: closed forms, densities, exact samplers.

A parameter set is a symmetric nonnegative coupling matrix P (off-diagonal
entries are edge conductances, a nonnegative diagonal is allowed) together
with a nonnegative boundary vector eta. The associated operator is
H_beta = 2 diag(beta) - P, positive definite on the support of the law.

Sampling is exact and sequential: conditionally on the sites already drawn,
one site's shifted potential x = 2 beta - P_kk follows a generalized inverse
Gaussian law of index 1/2 with rate 1, and eliminating the site is a rank-one
Schur update of (P, eta). Eliminating sites in index order over a row-major
lattice box keeps the update banded, which is what makes large boxes cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import DomainError, FactorizationError
from .graphs import WeightedGraph, boundary_weights

__all__ = [
    "NuParams",
    "BetaSample",
    "marginal_params",
    "laplace_closed_form",
    "density",
    "log_density",
    "gig_half_sample",
    "schur_step",
    "sample_sequential",
    "sample_batch",
    "sample_banded",
    "banded_coupling",
    "sample_errw_env",
    "spd_certificate",
]

PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class NuParams:
    """Parameters (coupling matrix, boundary vector) of the potential law."""

    p: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        eta = np.array(self.eta, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DomainError("coupling matrix must be square")
        if eta.shape != (p.shape[0],):
            raise DomainError("eta length must match matrix size")
        if not np.allclose(p, p.T, rtol=1e-12, atol=1e-14):
            raise DomainError("coupling matrix must be symmetric")
        if (p < 0).any():
            raise DomainError("coupling entries must be nonnegative")
        if (eta < 0).any():
            raise DomainError("eta entries must be nonnegative")
        p.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_graph(cls, g: WeightedGraph, eta=None) -> "NuParams":
        if eta is None:
            eta = np.zeros(g.n)
        else:
            eta = np.broadcast_to(np.asarray(eta, dtype=float), (g.n,)).copy()
        return cls(p=g.weight_matrix(), eta=eta)


@dataclass(frozen=True)
class BetaSample:
    """One realization of the potential, with a positivity certificate for
    H_beta obtained from a successful SPD factorization."""

    beta: np.ndarray
    psd_certificate: bool


def marginal_params(g: WeightedGraph, subset: Sequence[int]) -> NuParams:
    """Parameters of the marginal law on `subset` of the field on g.

    Keeping a set U of sites turns the complement into the boundary vector
    eta_U + (weights from U to the complement); with eta = 0 on g this is just
    the boundary weight vector. Sampling this marginal directly is equivalent
    to sampling on g and restricting.
    """
    subset = [int(v) for v in subset]
    w = g.weight_matrix()
    idx = np.array(subset)
    return NuParams(p=w[np.ix_(idx, idx)], eta=boundary_weights(g, subset))


def laplace_closed_form(params: NuParams, lam: np.ndarray) -> float:
    """Closed-form Laplace transform E[exp(-<lam, beta>)] of the law.

    Equals exp(-T - <eta, s - 1>) * prod(s)^(-1) with s = sqrt(1 + lam) and
    T = (s' P s - sum(P)) / 2; the half factor counts each unordered pair of
    distinct sites once and each diagonal entry with weight lam_i / 2, which
    is the convention consistent with the single-site density.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (params.n,):
        raise DomainError("lambda length must match vertex count")
    if (lam < 0).any():
        raise DomainError("lambda entries must be nonnegative")
    s = np.sqrt(1.0 + lam)
    t = 0.5 * (s @ params.p @ s - params.p.sum())
    return float(np.exp(-t - params.eta @ (s - 1.0)) * np.prod(1.0 / s))


def _chol_pivots_ok(h: np.ndarray, chol: np.ndarray) -> bool:
    d = np.diag(chol) ** 2
    scale = max(np.abs(np.diag(h)).max(), 1e-300)
    return bool((d >= PIVOT_RTOL * scale).all())


def spd_certificate(p: np.ndarray, beta: np.ndarray) -> bool:
    """True when H_beta = 2 diag(beta) - p factors as SPD with a relative
    pivot threshold of 1e-12."""
    h = -np.asarray(p, dtype=float).copy()
    idx = np.arange(h.shape[0])
    h[idx, idx] += 2.0 * np.asarray(beta, dtype=float)
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        return False
    return _chol_pivots_ok(h, chol)


def log_density(params: NuParams, beta: np.ndarray) -> float:
    """Log of the Lebesgue density; -inf outside the positivity region.

    Accumulates in log space so large vertex sets do not underflow.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (params.n,):
        raise DomainError("beta length must match vertex count")
    if not np.isfinite(beta).all():
        raise DomainError("beta must be finite")
    n = params.n
    h = -params.p.copy()
    idx = np.arange(n)
    h[idx, idx] += 2.0 * beta
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        return -np.inf
    if not _chol_pivots_ok(h, chol):
        return -np.inf
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    quad = 0.5 * float(np.ones(n) @ h @ np.ones(n))
    if params.eta.any():
        y = scipy.linalg.cho_solve((chol, True), params.eta)
        quad += 0.5 * float(params.eta @ y)
    return (
        0.5 * n * np.log(2.0 / np.pi)
        - quad
        + float(params.eta.sum())
        - 0.5 * logdet
    )


def density(params: NuParams, beta: np.ndarray) -> float:
    """Lebesgue density of the law at beta; exactly 0.0 off the support."""
    ld = log_density(params, beta)
    return float(np.exp(ld)) if np.isfinite(ld) else 0.0


def gig_half_sample(b: float, rng: np.random.Generator) -> float:
    """Draw from the density proportional to x^(-1/2) exp(-x/2 - b/(2x)).

    This is the generalized inverse Gaussian law with index 1/2 and rate 1;
    its reciprocal is inverse Gaussian with mean 1/sqrt(b) and shape 1, and
    b = 0 degenerates to the chi-square law with one degree of freedom.
    """
    if b < 0:
        raise DomainError("shape parameter b must be nonnegative")
    if b == 0.0:
        return float(rng.chisquare(1))
    return float(1.0 / rng.wald(1.0 / np.sqrt(b), 1.0))


def _gig_vec(b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(b.shape)
    pos = b > 0
    n_zero = int((~pos).sum())
    if n_zero:
        out[~pos] = rng.chisquare(1, size=n_zero)
    if pos.any():
        out[pos] = 1.0 / rng.wald(1.0 / np.sqrt(b[pos]), 1.0)
    return out


def schur_step(params: NuParams, site: int, x: float) -> NuParams:
    """Eliminate `site` given its shifted potential x = 2 beta_site - P_ss.

    The remaining sites keep their relative order; their coupling gains the
    rank-one update P_rest,s P_s,rest / x (this creates diagonal entries) and
    eta gains P_rest,s eta_s / x.
    """
    if not (0 <= site < params.n):
        raise DomainError(f"site {site} out of range")
    if x <= 0:
        raise DomainError(f"shifted potential must be positive, got {x}")
    keep = [k for k in range(params.n) if k != site]
    col = params.p[keep, site]
    p = params.p[np.ix_(keep, keep)] + np.outer(col, col) / x
    eta = params.eta[keep] + col * (params.eta[site] / x)
    return NuParams(p=p, eta=eta)


def sample_sequential(
    params: NuParams,
    order: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> BetaSample:
    """Exact draw of the field by eliminating one site at a time.

    At each step the site's coupling to the not-yet-eliminated sites gives the
    shape of its one-site conditional; the draw then feeds a Schur update.
    The order changes cost (fill-in), never the law.
    """
    if rng is None:
        raise DomainError("an rng is required")
    n = params.n
    if order is None:
        order = range(n)
    order = [int(k) for k in order]
    if sorted(order) != list(range(n)):
        raise DomainError("order must be a permutation of the vertices")
    p = params.p.copy()
    eta = params.eta.copy()
    beta = np.empty(n)
    remaining = order[:]
    for pos, k in enumerate(order):
        rest = remaining[pos + 1 :]
        eta_hat = eta[k] + p[k, rest].sum()
        x = gig_half_sample(eta_hat**2, rng)
        beta[k] = 0.5 * (x + p[k, k])
        if rest:
            col = p[rest, k]
            p[np.ix_(rest, rest)] += np.outer(col, col) / x
            eta[rest] += col * (eta[k] / x)
    return BetaSample(beta=beta, psd_certificate=spd_certificate(params.p, beta))


def sample_batch(
    params: NuParams,
    n_samples: int,
    rng: np.random.Generator,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Vectorized sample_sequential: returns an (n_samples, n) array.

    Identical law to the scalar sampler; used wherever acceptance-scale Monte
    Carlo needs 1e5+ independent fields on a small graph.
    """
    n = params.n
    if order is None:
        order = range(n)
    order = [int(k) for k in order]
    if sorted(order) != list(range(n)):
        raise DomainError("order must be a permutation of the vertices")
    p = np.broadcast_to(params.p, (n_samples, n, n)).copy()
    eta = np.broadcast_to(params.eta, (n_samples, n)).copy()
    beta = np.empty((n_samples, n))
    for pos, k in enumerate(order):
        rest = np.array(order[pos + 1 :], dtype=int)
        if rest.size:
            eta_hat = eta[:, k] + p[:, k, :][:, rest].sum(axis=1)
        else:
            eta_hat = eta[:, k]
        x = _gig_vec(eta_hat**2, rng)
        beta[:, k] = 0.5 * (x + p[:, k, k])
        if rest.size:
            col = p[:, rest, k]
            p[:, rest[:, None], rest[None, :]] += (
                col[:, :, None] * col[:, None, :] / x[:, None, None]
            )
            eta[:, rest] += col * (eta[:, k] / x)[:, None]
    return beta


def banded_coupling(g: WeightedGraph) -> Tuple[np.ndarray, int]:
    """Row-skewed band storage of g's weight matrix.

    Returns (band, bw) with band[i, d] = W[i, i+d] for d = 0..bw. Lattice
    boxes built row-major have bw equal to the leading stride, so the Schur
    elimination below never writes outside the band.
    """
    bw = max((j - i for i, j, _ in g.edges), default=0)
    band = np.zeros((g.n, bw + 1))
    for i, j, w in g.edges:
        band[i, j - i] = w
    return band, bw


def sample_banded(
    band: np.ndarray, eta: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Exact field sample from band-stored parameters, eliminating in index
    order. Same law as sample_sequential, cost n * bw^2 instead of n^3."""
    n, width = band.shape
    bw = width - 1
    # extra rows so near-the-end updates need no branching
    p = np.zeros((n + bw, width))
    p[:n] = band
    eta_w = np.zeros(n + bw)
    eta_w[:n] = np.asarray(eta, dtype=float)
    beta = np.empty(n)
    for k in range(n):
        m = min(bw, n - 1 - k)
        col = p[k, 1 : m + 1]
        eta_hat = eta_w[k] + col.sum()
        x = gig_half_sample(eta_hat**2, rng)
        beta[k] = 0.5 * (x + p[k, 0])
        if m > 0:
            outer = np.outer(col, col) / x
            padded = np.zeros((m, 2 * m))
            padded[:, :m] = outer
            s0, s1 = padded.strides
            skew = np.lib.stride_tricks.as_strided(
                padded, shape=(m, m), strides=(s0 + s1, s1)
            )
            # skew[a, d] = outer[a, a+d]: the (k+1+a, k+1+a+d) update
            p[k + 1 : k + 1 + m, :m] += skew
            eta_w[k + 1 : k + 1 + m] += col * (eta_w[k] / x)
    return beta


def sample_errw_env(
    g: WeightedGraph, a, rng: np.random.Generator
) -> Tuple[np.ndarray, BetaSample]:
    """Sample the annealed environment: independent Gamma(a_e) conductances,
    then the field given those conductances. Returns (edge weights, sample)
    with weights aligned to g.edges order."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (g.edge_count,))
    if (a <= 0).any():
        raise DomainError("Gamma shapes must be positive")
    w_draw = rng.gamma(shape=a, scale=1.0)
    p = np.zeros((g.n, g.n))
    for (i, j, _), w in zip(g.edges, w_draw):
        p[i, j] = w
        p[j, i] = w
    params = NuParams(p=p, eta=np.zeros(g.n))
    return w_draw, sample_sequential(params, rng=rng)
