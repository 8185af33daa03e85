"""Monte Carlo plumbing: reproducible replica execution, standard-error
reports, goodness-of-fit tests (one-sample KS, two-sample word chi-square),
a lattice diffusion estimator, and the desk-scale experiments.

Determinism contract: every replica draws from its own counter-based stream
keyed by (seed, replica index), so results are bit-identical for a fixed
seed no matter how replicas are scheduled.

Closed-form-vs-Monte-Carlo comparisons elsewhere in the package use the
4-standard-error rule; significance for p-value tests is fixed at 0.01.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.linalg import solveh_banded

from .betafield import (
    NuParams,
    banded_coupling,
    marginal_params,
    sample_banded,
    sample_batch,
    sample_sequential,
)
from .errors import ConfigError, CoverageError, DomainError, PreconditionError, TestError
from .graphs import WeightedGraph, build_lattice_box, wire_restrict
from .processes import Trajectory, simulate_vrjp_lattice
from .schrodinger import green_bundle
from .streams import stream

__all__ = [
    "EstimatorReport",
    "ExperimentConfig",
    "run_replicas",
    "ks_test",
    "word_chi2",
    "diffusion_estimate",
    "srw_paths",
    "psi_decay_experiment",
    "rooted_u_samples",
    "cosh_moment_experiment",
    "conductance_ratio_experiment",
    "vrjp_diffusion_experiment",
]

ALPHA = 0.01
SE_RULE = 4.0


@dataclass(frozen=True)
class EstimatorReport:
    """Point estimate with its Monte Carlo standard error.

    stderr is the sample standard deviation over replicas divided by sqrt(n).
    extra carries quantiles and named diagnostics.
    """

    name: str
    mean: float
    stderr: float
    n: int
    extra: Dict[str, object] = field(default_factory=dict)

    def within(self, target: float, k: float = SE_RULE) -> bool:
        """Whether target lies within k standard errors of the mean."""
        return abs(self.mean - target) <= k * max(self.stderr, 1e-300)

    def row(self) -> Dict[str, object]:
        return {"name": self.name, "mean": self.mean, "stderr": self.stderr, "n": self.n}


_CONFIG_KEYS = {
    "experiment",
    "graph",
    "w",
    "a",
    "eta",
    "dim",
    "radii",
    "ells",
    "n_samples",
    "n_walks",
    "length",
    "seed",
    "parallelism",
    "i0",
    "i",
    "j",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated key-value experiment description (CLI and batch runs)."""

    experiment: str
    seed: int = 0
    parallelism: int = 1
    params: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Dict[str, object]) -> "ExperimentConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in raw:
            raise ConfigError("config needs an 'experiment' name")
        seed = int(raw.get("seed", 0))
        parallelism = int(raw.get("parallelism", 1))
        if parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        params = {
            k: v
            for k, v in raw.items()
            if k not in ("experiment", "seed", "parallelism")
        }
        return cls(
            experiment=str(raw["experiment"]),
            seed=seed,
            parallelism=parallelism,
            params=params,
        )

    def to_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "experiment": self.experiment,
            "seed": self.seed,
            "parallelism": self.parallelism,
        }
        out.update(self.params)
        return out


def run_replicas(
    task: Callable[[np.random.Generator], float],
    n: int,
    seed: int,
    parallelism: int = 1,
    name: str = "replicas",
) -> EstimatorReport:
    """Run a pure sampling task across n replica streams.

    Each replica gets the stream keyed by its index, so the report is
    bit-identical for fixed (seed, n) regardless of parallelism. Task
    failures carry the replica index.
    """
    if n < 1:
        raise DomainError("need at least one replica")

    def one(k: int) -> float:
        try:
            return float(task(stream(seed, "replica", k)))
        except Exception as exc:
            raise RuntimeError(f"replica {k} failed: {exc}") from exc

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            values = np.fromiter(pool.map(one, range(n)), dtype=float, count=n)
    else:
        values = np.fromiter(map(one, range(n)), dtype=float, count=n)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    qs = np.quantile(values, [0.25, 0.5, 0.75]) if n > 1 else [mean] * 3
    extra = {"q25": float(qs[0]), "median": float(qs[1]), "q75": float(qs[2])}
    return EstimatorReport(name=name, mean=mean, stderr=stderr, n=n, extra=extra)


def ks_test(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]):
    """One-sample Kolmogorov-Smirnov test against a CDF callable."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1000:
        raise TestError("KS test needs at least 1000 samples")
    if not np.isfinite(samples).all():
        raise TestError("KS test got non-finite samples")
    res = stats.kstest(samples, cdf)
    return float(res.statistic), float(res.pvalue)


def word_chi2(words_a: np.ndarray, words_b: np.ndarray) -> float:
    """Two-sample chi-square over word histograms.

    Words are fixed-length symbol rows; cells are pooled (smallest combined
    counts first) until every expected count is at least 5. Returns the
    p-value for homogeneity of the two word distributions.
    """
    wa = np.asarray(words_a, dtype=int)
    wb = np.asarray(words_b, dtype=int)
    if wa.ndim != 2 or wb.ndim != 2 or wa.shape[1] != wb.shape[1]:
        raise TestError("word arrays must be 2-d with equal word length")
    n1, n2 = wa.shape[0], wb.shape[0]
    if min(n1, n2) < 1000:
        raise TestError("chi-square needs at least 1000 words per side")
    base = int(max(wa.max(), wb.max())) + 1
    powers = base ** np.arange(wa.shape[1])
    size = base ** wa.shape[1]
    ca = np.bincount(wa @ powers, minlength=size).astype(float)
    cb = np.bincount(wb @ powers, minlength=size).astype(float)
    combined = ca + cb
    live = combined > 0
    ca, cb, combined = ca[live], cb[live], combined[live]
    # expected count in the smaller sample must reach 5
    need = 5.0 * (n1 + n2) / min(n1, n2)
    order = np.argsort(combined)[::-1]
    keep = combined[order] >= need
    kept = order[keep]
    pooled = order[~keep]
    obs1 = list(ca[kept])
    obs2 = list(cb[kept])
    if pooled.size:
        pa, pb = ca[pooled].sum(), cb[pooled].sum()
        if pa + pb >= need or not obs1:
            obs1.append(pa)
            obs2.append(pb)
        else:
            obs1[-1] += pa
            obs2[-1] += pb
    o = np.array([obs1, obs2])
    if o.shape[1] < 2:
        raise TestError("fewer than two cells after pooling")
    col = o.sum(axis=0)
    rowsum = o.sum(axis=1, keepdims=True)
    expected = rowsum * col[None, :] / (n1 + n2)
    stat = ((o - expected) ** 2 / expected).sum()
    df = o.shape[1] - 1
    return float(stats.chi2.sf(stat, df))


def srw_paths(
    dim: int, n_walks: int, length: int, rng: np.random.Generator
) -> np.ndarray:
    """Coordinate paths of the simple random walk started at the origin,
    shape (n_walks, length + 1, dim)."""
    moves = np.zeros((2 * dim, dim), dtype=np.int64)
    for ax in range(dim):
        moves[2 * ax, ax] = 1
        moves[2 * ax + 1, ax] = -1
    picks = rng.integers(0, 2 * dim, size=(n_walks, length))
    steps = moves[picks]
    paths = np.zeros((n_walks, length + 1, dim), dtype=np.int64)
    np.cumsum(steps, axis=1, out=paths[:, 1:])
    return paths


def _coordinate_paths(trajs, g: Optional[WeightedGraph]) -> np.ndarray:
    if isinstance(trajs, np.ndarray):
        if trajs.ndim != 3:
            raise DomainError("coordinate path array must be (walks, steps, dim)")
        return trajs
    if g is None or g.coords is None:
        raise DomainError("trajectory input needs a graph with coordinates")
    lens = {len(t.vertices) for t in trajs}
    if len(lens) != 1:
        raise DomainError("all trajectories must have equal length")
    verts = np.stack([t.vertices for t in trajs])
    return g.coord_array()[verts]


def diffusion_estimate(
    trajs,
    g: Optional[WeightedGraph] = None,
    radius: Optional[int] = None,
    ladder: Optional[Sequence[int]] = None,
    name: str = "diffusion",
) -> EstimatorReport:
    """Mean-squared-displacement estimator on lattice walks.

    trajs is either a list of discrete Trajectory objects on a box graph g
    (with coordinates) or a coordinate array (walks, steps + 1, dim). Walks
    that touch the box boundary (sup-norm radius) are discarded, and the
    discard rate is reported; with all walks discarded the estimate is
    impossible. The headline number is E|X_n|^2 / n at the largest ladder
    point (1 for the simple random walk at any n); extra carries the per-rung
    values, the normalized variance sigma2 = E|X_n|^2/(d n), and a
    slope-ratio growth diagnostic with a superdiffusive/subdiffusive flag.
    """
    paths = _coordinate_paths(trajs, g)
    n_walks, n_pts, dim = paths.shape
    length = n_pts - 1
    if length < 1:
        raise DomainError("walks must have at least one step")
    if radius is None and g is not None and g.coords is not None:
        radius = int(np.abs(g.coords).max())
    if radius is not None:
        inside = (np.abs(paths).max(axis=(1, 2)) < radius)
    else:
        inside = np.ones(n_walks, dtype=bool)
    discard_rate = 1.0 - inside.mean()
    if not inside.any():
        raise CoverageError("every walk touched the boundary")
    kept = paths[inside]
    if ladder is None:
        ladder = sorted({max(1, length // 8), length // 4, length // 2, length})
    ladder = [int(x) for x in ladder]
    if any(x < 1 or x > length for x in ladder):
        raise DomainError("ladder points must lie in [1, walk length]")
    disp = kept[:, ladder, :] - kept[:, :1, :]
    d2 = (disp.astype(float) ** 2).sum(axis=2)
    m = d2.mean(axis=0)
    n_arr = np.array(ladder, dtype=float)
    sigma2 = m / (dim * n_arr)
    final = d2[:, -1] / n_arr[-1]
    mean = float(final.mean())
    stderr = float(final.std(ddof=1) / np.sqrt(final.shape[0]))
    if len(ladder) >= 3 and m[-1] > 0:
        lo = (m[1] - m[0]) / (n_arr[1] - n_arr[0])
        hi = (m[-1] - m[-2]) / (n_arr[-1] - n_arr[-2])
        slope_ratio = float(hi / lo) if lo > 0 else float("inf")
    else:
        slope_ratio = 1.0
    if m[-1] == 0:
        flag = "degenerate"
    elif slope_ratio > 2.0:
        flag = "superdiffusive"
    elif slope_ratio < 0.5:
        flag = "subdiffusive"
    else:
        flag = "diffusive"
    extra = {
        "ladder": ladder,
        "msd": [float(x) for x in m],
        "sigma2": [float(x) for x in sigma2],
        "slope_ratio": slope_ratio,
        "discard_rate": float(discard_rate),
        "flag": flag,
        "kept": int(inside.sum()),
    }
    return EstimatorReport(name=name, mean=mean, stderr=stderr, n=int(inside.sum()), extra=extra)


def _box_center(g: WeightedGraph) -> int:
    # centered odd-sided boxes put the origin at the middle row-major index
    return (g.n - 1) // 2


def psi_decay_experiment(
    dim: int,
    w: float,
    radii: Sequence[int],
    n_samples: int,
    seed: int,
) -> List[Dict[str, float]]:
    """Quantiles of the boundary-hitting sum at the box center per radius.

    For each radius, draw the potential on the wired box and solve the
    banded system for psi = Ghat eta at the center; the banded path keeps
    d = 3, radius 8 tractable. Rows carry median and quartiles; callers read
    the median trend (decay vs stabilization).
    """
    radii = [int(r) for r in radii]
    if radii != sorted(radii):
        raise DomainError("radii must be increasing")
    rows: List[Dict[str, float]] = []
    for r_i, radius in enumerate(radii):
        g = build_lattice_box(dim, radius, w)
        band, bw = banded_coupling(g)
        degrees = np.array([len(nb) for nb in g.neighbors], dtype=float)
        eta = w * (2 * dim - degrees)
        rng = stream(seed, "psi-decay", r_i)
        vals = np.empty(n_samples)
        ab = np.zeros((bw + 1, g.n))
        for d in range(1, bw + 1):
            ab[bw - d, d:] = -band[: g.n - d, d]
        for s in range(n_samples):
            beta = sample_banded(band, eta, rng)
            ab[bw] = 2.0 * beta - band[:, 0]
            psi = solveh_banded(ab, eta, lower=False)
            vals[s] = psi[_box_center(g)]
        q = np.quantile(vals, [0.25, 0.5, 0.75])
        rows.append(
            {
                "radius": float(radius),
                "q25": float(q[0]),
                "median": float(q[1]),
                "q75": float(q[2]),
                "n": float(n_samples),
            }
        )
    return rows


def _min_hops_with_capacity(
    g: WeightedGraph, src: int, dst: int, min_weight: float
) -> Optional[int]:
    """Breadth-first hop count from src to dst using only edges of weight at
    least min_weight."""
    if src == dst:
        return 0
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for u, wt in g.neighbors[v]:
                if wt >= min_weight and u not in dist:
                    dist[u] = dist[v] + 1
                    if u == dst:
                        return dist[u]
                    nxt.append(u)
        frontier = nxt
    return None


def rooted_u_samples(
    g: WeightedGraph, i0: int, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Samples of the mixing field rooted at i0, shape (n_samples, n).

    The root plays the part of the boundary vertex: draw the potential on
    the other vertices with the root's conductance column as coupling
    vector, then u = log of the resulting boundary-hitting sums (u is 0 at
    the root itself).
    """
    keep = [v for v in range(g.n) if v != int(i0)]
    w = g.weight_matrix()
    params = NuParams(p=w[np.ix_(keep, keep)], eta=w[keep, int(i0)])
    beta = sample_batch(params, n_samples, rng)
    m = len(keep)
    h = np.broadcast_to(-params.p, (n_samples, m, m)).copy()
    di = np.arange(m)
    h[:, di, di] = 2.0 * beta
    rhs = np.broadcast_to(params.eta, (n_samples, m))[..., None]
    psi = np.linalg.solve(h, rhs)[..., 0]
    u = np.zeros((n_samples, g.n))
    u[:, keep] = np.log(psi)
    return u


def cosh_moment_experiment(
    g: WeightedGraph,
    i0: int,
    i: int,
    j: int,
    eta: float,
    n_samples: int,
    seed: int = 0,
) -> EstimatorReport:
    """Empirical mean of cosh(u(i0,j) - u(i0,i))^eta against the closed
    bound 2^(K/2), K the hop count of a path from i to j whose edges all
    carry weight >= 2 eta; u is the mixing field rooted at i0.

    The power statistic is the integrable form of the estimate: the
    spanning-tree tilt argument bounds it edge by edge, while exponential
    cosh moments blow up once i and j are two or more hops apart.
    """
    if eta <= 0:
        raise DomainError("eta must be positive")
    k_hops = _min_hops_with_capacity(g, int(i), int(j), 2.0 * eta)
    if k_hops is None:
        raise PreconditionError(
            "no path between i and j with all edge weights >= 2*eta"
        )
    if k_hops == 0:
        return EstimatorReport(
            name="cosh-moment-K0",
            mean=1.0,
            stderr=0.0,
            n=n_samples,
            extra={"bound": 1.0, "k": 0.0},
        )
    rng = stream(seed, "cosh-moment")
    u = rooted_u_samples(g, int(i0), n_samples, rng)
    vals = np.cosh(u[:, int(j)] - u[:, int(i)]) ** eta
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_samples))
    return EstimatorReport(
        name=f"cosh-moment-K{k_hops}",
        mean=mean,
        stderr=stderr,
        n=n_samples,
        extra={"bound": float(2.0 ** (k_hops / 2.0)), "k": float(k_hops)},
    )


def _box_index(radius: int, dim: int, coord: Sequence[int]) -> int:
    side = 2 * radius + 1
    idx = 0
    for c in coord:
        if abs(int(c)) > radius:
            raise DomainError("coordinate outside box")
        idx = idx * side + (int(c) + radius)
    return idx


def conductance_ratio_experiment(
    a: float,
    ells: Sequence[int],
    n_samples: int,
    seed: int,
    dim: int = 2,
    margin: int = 3,
) -> List[EstimatorReport]:
    """Quarter-moment of the conductance ratio x_ell / x_0 per separation.

    Environment: iid Gamma(a, 1) edge weights on a box holding both 0 and
    ell with `margin` extra layers, wired boundary, potential drawn from the
    matching law, x_i = sum_j W_ij G(i0, i) G(i0, j) with i0 the site of 0.
    """
    out: List[EstimatorReport] = []
    for e_i, ell in enumerate(ells):
        ell = int(ell)
        if ell < 0 or ell % 2:
            raise DomainError("separations must be even and nonnegative")
        radius = ell // 2 + margin
        box = build_lattice_box(dim, radius + 1, 1.0)
        inner = [
            v
            for v in range(box.n)
            if np.abs(box.coords[v]).max() <= radius
        ]
        origin = [-(ell // 2)] + [0] * (dim - 1)
        target = [ell - ell // 2] + [0] * (dim - 1)
        i_zero = _box_index(radius + 1, dim, origin)
        i_ell = _box_index(radius + 1, dim, target)
        rng = stream(seed, "conductance-ratio", e_i)
        gamma_rng = stream(seed, "conductance-ratio-gamma", e_i)
        vals = np.empty(n_samples)
        for s in range(n_samples):
            w_draw = rng.gamma(a, 1.0, size=box.edge_count)
            g_s = WeightedGraph(
                n=box.n,
                edges=tuple(
                    (i, j, float(wd)) for (i, j, _), wd in zip(box.edges, w_draw)
                ),
                coords=box.coords,
            )
            params = marginal_params(g_s, inner)
            beta = sample_sequential(params, None, rng).beta
            bundle = green_bundle(
                g_s, beta, inner, float(gamma_rng.gamma(0.5, 1.0)), i0=None
            )
            p0 = bundle.position(i_zero)
            pl = bundle.position(i_ell)
            grow = bundle.full_g[p0]
            x = grow * (bundle.w_wired @ grow)
            vals[s] = (x[pl] / x[p0]) ** 0.25
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
        out.append(
            EstimatorReport(
                name=f"conductance-ratio-l{ell}",
                mean=mean,
                stderr=stderr,
                n=n_samples,
                extra={"ell": float(ell)},
            )
        )
    return out


def vrjp_diffusion_experiment(
    dim: int,
    w: float,
    n_jumps: int,
    n_walks: int,
    seed: int,
) -> Dict[str, object]:
    """Variance growth of the time-changed reinforced walk on the lattice.

    Walks run for a fixed jump budget; displacements are read off at fixed
    transformed times (quarters of the median final time) by stepping along
    each walk's jump record. Reports per-time mean squared displacement, a
    linear-growth slope ratio, and a coordinate isotropy ratio. Diagnostic
    quality only: desk-scale walks are far from the scaling regime.
    """
    coords = []
    d_times = []
    for k in range(n_walks):
        c, _s, d = simulate_vrjp_lattice(dim, w, n_jumps, stream(seed, "vrjp-diff", k))
        coords.append(c)
        d_times.append(d)
    t_star = float(np.median([d[-1] for d in d_times]))
    t_grid = np.array([0.25, 0.5, 0.75, 1.0]) * t_star
    msd = np.zeros(len(t_grid))
    per_coord = np.zeros((len(t_grid), dim))
    counts = np.zeros(len(t_grid))
    for c, d in zip(coords, d_times):
        for ti, t in enumerate(t_grid):
            if d[-1] < t:
                continue
            k = int(np.searchsorted(d, t, side="right") - 1)
            x = c[k].astype(float)
            msd[ti] += (x**2).sum()
            per_coord[ti] += x**2
            counts[ti] += 1
    if (counts == 0).any():
        raise CoverageError("no walk reached a requested transformed time")
    msd /= counts
    per_coord /= counts[:, None]
    lo = (msd[1] - msd[0]) / (t_grid[1] - t_grid[0])
    hi = (msd[-1] - msd[-2]) / (t_grid[-1] - t_grid[-2])
    slope_ratio = float(hi / lo) if lo > 0 else float("inf")
    final = per_coord[-1]
    isotropy = float(final.max() / final.min()) if final.min() > 0 else float("inf")
    return {
        "t_grid": [float(t) for t in t_grid],
        "msd": [float(x) for x in msd],
        "slope_ratio": slope_ratio,
        "isotropy": isotropy,
        "n_walks": n_walks,
        "n_jumps": n_jumps,
    }
