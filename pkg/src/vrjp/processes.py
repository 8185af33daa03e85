"""Process simulators: the reinforced jump process in continuous time, its
quadratic time change, the linearly reinforced discrete walk, quenched Markov
jump chains in a fixed environment, conditioned (h-transformed) chains, and
closed-form escape probabilities with their Monte Carlo oracles.

Holding times are exact: while the walker sits at a vertex, the jump rates to
its neighbors are frozen (only the occupied vertex accumulates local time),
so waits are exponential with constant rate and there is no discretization
error anywhere.

Finite-volume semantics: on a wired graph, "never returns" is read as "hits
delta before returning", and absorbed-chain estimators always take one free
first step so that starting inside the absorbing set means first-return, not
instant absorption.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .errors import (
    ConditioningError,
    CoverageError,
    DomainError,
    NumericError,
)
from .graphs import WeightedGraph
from .schrodinger import GreenBundle

__all__ = [
    "Trajectory",
    "QuenchedRates",
    "simulate_vrjp",
    "time_change",
    "time_change_maps",
    "simulate_errw",
    "quenched_mjp",
    "escape_probability_formula",
    "h_transform_rates",
    "mc_return_probability",
    "AbsorptionReport",
    "vrjp_words",
    "errw_words",
    "markov_words",
    "simulate_vrjp_lattice",
]


@dataclass(frozen=True)
class Trajectory:
    """A walk: vertex sequence, optional entry times, optional local times.

    times[k] is when vertices[k] was entered; None means a discrete walk.
    local_times are the final values of 1 + occupation time per vertex for a
    continuous walk. Consecutive vertices are adjacent in the generating
    graph (guaranteed by the simulators).
    """

    vertices: np.ndarray
    times: Optional[np.ndarray] = None
    local_times: Optional[np.ndarray] = None
    horizon: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=int)
        object.__setattr__(self, "vertices", v)
        if self.times is not None:
            t = np.asarray(self.times, dtype=float)
            if t.shape != v.shape:
                raise DomainError("times length must match vertices")
            if (np.diff(t) <= 0).any():
                raise DomainError("entry times must be strictly increasing")
            object.__setattr__(self, "times", t)
        if self.local_times is not None:
            object.__setattr__(
                self, "local_times", np.asarray(self.local_times, dtype=float)
            )

    @property
    def is_discrete(self) -> bool:
        return self.times is None

    def first_return_index(self, i0: int) -> Optional[int]:
        """Index of the first return to i0, or None if the walk never returns."""
        hits = np.nonzero(self.vertices[1:] == int(i0))[0]
        return int(hits[0] + 1) if hits.size else None


def simulate_vrjp(
    g: WeightedGraph, i0: int, horizon: float, rng: np.random.Generator
) -> Trajectory:
    """Event-driven continuous-time reinforced walk up to a time horizon.

    From vertex i the rate to neighbor j is W_ij times j's current local
    time; neighbors' local times are frozen while the walker holds, so each
    wait is a single exponential draw.
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if not (0 <= i0 < g.n):
        raise DomainError("start vertex out of range")
    local = np.ones(g.n)
    nbrs = [np.array([u for u, _ in g.neighbors[v]], dtype=int) for v in range(g.n)]
    wts = [np.array([w for _, w in g.neighbors[v]]) for v in range(g.n)]
    verts = [int(i0)]
    times = [0.0]
    v = int(i0)
    s = 0.0
    while True:
        nb, wv = nbrs[v], wts[v]
        if nb.size == 0:
            local[v] += horizon - s
            break
        rates = wv * local[nb]
        total = rates.sum()
        wait = rng.exponential(1.0 / total)
        if s + wait >= horizon:
            local[v] += horizon - s
            break
        s += wait
        local[v] += wait
        u = rng.random() * total
        v = int(nb[np.searchsorted(np.cumsum(rates), u, side="right")])
        verts.append(v)
        times.append(s)
    return Trajectory(
        vertices=np.array(verts),
        times=np.array(times),
        local_times=local,
        horizon=float(horizon),
    )


def _segment_data(traj: Trajectory):
    """Per-segment entry times, duration, and entering local time of the
    occupied vertex, reconstructed from the event list."""
    if traj.times is None or traj.horizon is None:
        raise DomainError("time change needs a continuous trajectory")
    s = traj.times
    v = traj.vertices
    durations = np.empty(len(v))
    durations[:-1] = np.diff(s)
    durations[-1] = traj.horizon - s[-1]
    local: Dict[int, float] = {}
    enter_local = np.empty(len(v))
    for k, (vk, dk) in enumerate(zip(v, durations)):
        lv = local.get(int(vk), 1.0)
        enter_local[k] = lv
        local[int(vk)] = lv + dk
    d_incr = 2.0 * enter_local * durations + durations**2
    d_entry = np.concatenate([[0.0], np.cumsum(d_incr)])
    return s, durations, enter_local, d_entry


def time_change(traj: Trajectory) -> Trajectory:
    """Reparameterize by D(s) = sum_i (L_i(s)^2 - 1).

    D is piecewise quadratic (only the occupied vertex's local time grows),
    so entry times map in closed form. The jump chain is unchanged.
    """
    s, _dur, _loc, d_entry = _segment_data(traj)
    return Trajectory(
        vertices=traj.vertices.copy(),
        times=d_entry[: len(s)],
        local_times=None if traj.local_times is None else traj.local_times.copy(),
        horizon=float(d_entry[-1]),
    )


def time_change_maps(traj: Trajectory):
    """Return (D, D_inverse) as vectorized callables for the trajectory's
    time window; D(horizon) is the transformed horizon."""
    s, durations, enter_local, d_entry = _segment_data(traj)
    s_end = float(traj.horizon)

    def d_map(x):
        x = np.asarray(x, dtype=float)
        if (x < 0).any() or (x > s_end + 1e-12).any():
            raise DomainError("argument outside simulated window")
        k = np.clip(np.searchsorted(s, x, side="right") - 1, 0, len(s) - 1)
        dx = x - s[k]
        return d_entry[k] + 2.0 * enter_local[k] * dx + dx**2

    t_end = float(d_entry[-1])

    def d_inv(t):
        t = np.asarray(t, dtype=float)
        if (t < 0).any() or (t > t_end + 1e-9).any():
            raise DomainError("argument outside transformed window")
        k = np.clip(np.searchsorted(d_entry, t, side="right") - 1, 0, len(s) - 1)
        dt = t - d_entry[k]
        x = np.sqrt(enter_local[k] ** 2 + dt) - enter_local[k]
        return s[k] + x

    return d_map, d_inv


def _edge_tables(g: WeightedGraph):
    """Padded per-vertex neighbor/edge-id/weight tables for batch walkers.

    Pad slots point at a phantom edge with weight zero, so gathered rates
    vanish there and no masking is needed.
    """
    edge_id = {}
    for e, (i, j, _w) in enumerate(g.edges):
        edge_id[(i, j)] = e
        edge_id[(j, i)] = e
    maxdeg = max(len(nb) for nb in g.neighbors)
    nbr = np.zeros((g.n, maxdeg), dtype=int)
    eids = np.full((g.n, maxdeg), g.edge_count, dtype=int)
    wts = np.zeros((g.n, maxdeg))
    for v in range(g.n):
        for slot, (u, w) in enumerate(g.neighbors[v]):
            nbr[v, slot] = u
            eids[v, slot] = edge_id[(v, u)]
            wts[v, slot] = w
    return nbr, eids, wts, maxdeg


def vrjp_words(
    g: WeightedGraph,
    i0: int,
    length: int,
    n_walks: int,
    rng: np.random.Generator,
    edge_weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """First `length` jump-chain steps of the continuous-time reinforced walk,
    vectorized across walks. edge_weights, if given, holds per-walk
    conductances with shape (n_walks, edge_count); holding times are still
    drawn because they feed the local times that reinforce later steps.
    """
    nbr, eids, wts, _ = _edge_tables(g)
    rows = np.arange(n_walks)
    local = np.ones((n_walks, g.n))
    v = np.full(n_walks, int(i0))
    words = np.empty((n_walks, length), dtype=int)
    if edge_weights is not None:
        ew = np.zeros((n_walks, g.edge_count + 1))
        ew[:, :-1] = edge_weights
    for t in range(length):
        nb = nbr[v]
        if edge_weights is None:
            w = wts[v]
        else:
            w = ew[rows[:, None], eids[v]]
        rates = w * local[rows[:, None], nb]
        total = rates.sum(axis=1)
        wait = rng.exponential(1.0 / total)
        local[rows, v] += wait
        u = rng.random(n_walks) * total
        choice = np.minimum(
            (np.cumsum(rates, axis=1) < u[:, None]).sum(axis=1), nb.shape[1] - 1
        )
        v = nb[rows, choice]
        words[:, t] = v
    return words


def errw_words(
    g: WeightedGraph,
    a,
    i0: int,
    length: int,
    n_walks: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """First `length` steps of the linearly reinforced discrete walk,
    vectorized across walks: step probabilities are proportional to initial
    weight plus crossings of each incident edge."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (g.edge_count,))
    if (a <= 0).any():
        raise DomainError("initial edge weights must be positive")
    nbr, eids, _, _ = _edge_tables(g)
    rows = np.arange(n_walks)
    counts = np.zeros((n_walks, g.edge_count + 1))
    counts[:, :-1] = a
    v = np.full(n_walks, int(i0))
    words = np.empty((n_walks, length), dtype=int)
    for t in range(length):
        ev = eids[v]
        c = counts[rows[:, None], ev]
        total = c.sum(axis=1)
        u = rng.random(n_walks) * total
        choice = np.minimum(
            (np.cumsum(c, axis=1) < u[:, None]).sum(axis=1), ev.shape[1] - 1
        )
        counts[rows, ev[rows, choice]] += 1.0
        v = nbr[v][rows, choice]
        words[:, t] = v
    return words


def markov_words(
    kernels: np.ndarray,
    start: int,
    length: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample `length` steps from row-stochastic kernels.

    kernels has shape (n_walks, size, size) for one environment per walk, or
    (size, size) shared; rows visited must have positive mass.
    """
    kernels = np.asarray(kernels, dtype=float)
    shared = kernels.ndim == 2
    n_walks = 1 if shared else kernels.shape[0]
    size = kernels.shape[-1]
    cum = np.cumsum(kernels, axis=-1)
    rows = np.arange(n_walks)
    v = np.full(n_walks, int(start))
    words = np.empty((n_walks, length), dtype=int)
    for t in range(length):
        row = cum[v] if shared else cum[rows, v]
        norm = row[:, -1]
        if (norm <= 0).any():
            raise DomainError("kernel row with zero mass visited")
        u = rng.random(n_walks) * norm
        v = np.minimum((row < u[:, None]).sum(axis=1), size - 1)
        words[:, t] = v
    return words


def simulate_errw(
    g: WeightedGraph,
    a,
    i0: int,
    steps: int,
    rng: np.random.Generator,
    return_counts: bool = False,
):
    """Single discrete reinforced walk; counts start at a_e and each crossing
    adds one to its (undirected) edge."""
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    words = errw_words(g, a, i0, steps, 1, rng) if steps else np.empty((1, 0), int)
    verts = np.concatenate([[int(i0)], words[0]])
    traj = Trajectory(vertices=verts)
    if not return_counts:
        return traj
    # replay to recover final counts (cheap relative to the walk itself)
    a_vec = np.broadcast_to(np.asarray(a, dtype=float), (g.edge_count,)).copy()
    edge_id = {}
    for e, (i, j, _w) in enumerate(g.edges):
        edge_id[(i, j)] = e
        edge_id[(j, i)] = e
    for x, y in zip(verts[:-1], verts[1:]):
        a_vec[edge_id[(int(x), int(y))]] += 1.0
    return traj, a_vec


@dataclass(frozen=True)
class QuenchedRates:
    """Jump rates of the environment-fixed Markov jump process.

    rates[i, j] = W_ij G(i0, j) / (2 G(i0, i)); exit holds row sums. Away
    from the root the exit rate reproduces the potential exactly.
    """

    rates: np.ndarray
    exit: np.ndarray
    i0: int

    @property
    def size(self) -> int:
        return self.rates.shape[0]

    def kernel(self) -> np.ndarray:
        """Row-normalized step kernel; zero rows (absorbing states) stay zero."""
        out = np.zeros_like(self.rates)
        pos = self.exit > 0
        out[pos] = self.rates[pos] / self.exit[pos, None]
        return out

    @classmethod
    def from_green(cls, w: np.ndarray, green: np.ndarray, i0: int) -> "QuenchedRates":
        """Rates from any conductance matrix and full Green kernel."""
        row = green[int(i0)]
        rates = 0.5 * w * (row[None, :] / row[:, None])
        exit = rates.sum(axis=1)
        return cls(rates=rates, exit=exit, i0=int(i0))

    @classmethod
    def from_bundle(
        cls, bundle: GreenBundle, i0: Optional[int] = None
    ) -> "QuenchedRates":
        """Rates on the wired state space (retained set plus delta last)."""
        root = bundle.i0_index if i0 is None else bundle.position(i0)
        return cls.from_green(bundle.w_wired, bundle.full_g, root)


def quenched_mjp(
    g: WeightedGraph,
    rates: QuenchedRates,
    start: int,
    steps: int,
    rng: np.random.Generator,
    holding: bool = False,
) -> Trajectory:
    """Jump chain (optionally with exponential holding times) of the
    environment-fixed process."""
    if rates.size != g.n:
        raise DomainError("rate table size must match the graph")
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    kern = rates.kernel()
    verts = [int(start)]
    times = [0.0]
    v = int(start)
    s = 0.0
    for _ in range(steps):
        row = kern[v]
        if row.sum() <= 0:
            raise DomainError(f"state {v} has no outgoing rate")
        if holding:
            s += rng.exponential(1.0 / rates.exit[v])
        v = int(rng.choice(rates.size, p=row))
        verts.append(v)
        times.append(s)
    if holding:
        return Trajectory(
            vertices=np.array(verts), times=np.array(times), horizon=s
        ) if steps else Trajectory(vertices=np.array(verts))
    return Trajectory(vertices=np.array(verts))


def escape_probability_formula(
    bundle: GreenBundle, i0: Optional[int], i: Optional[int]
) -> float:
    """Probability that the quenched chain rooted at i0, started at i, hits
    delta before (re)visiting i0. i or i0 given as parent-graph vertex ids;
    i = None means delta (returns 1). Finite-volume reading of the escape
    event."""
    p0 = bundle.position(i0)
    if p0 == bundle.delta_index:
        raise DomainError("the root must be a retained vertex")
    pi = bundle.position(i)
    ghat = bundle.hat_g_ext()
    psi_e = bundle.psi_ext()
    g_full = bundle.full_g
    g00 = ghat[p0, p0]
    psi0 = psi_e[p0]
    if pi == p0:
        grow = g_full[p0]
        exit0 = 0.5 * float((bundle.w_wired[p0] * grow).sum()) / grow[p0]
        return float(
            psi0**2 / (4.0 * bundle.gamma * exit0 * g00 * g_full[p0, p0])
        )
    gcheck = g00 * psi_e[pi] - ghat[p0, pi] * psi0
    return float(psi0 * gcheck / (2.0 * bundle.gamma * g00 * g_full[p0, pi]))


def h_transform_rates(
    bundle: GreenBundle, i0: Optional[int], mode: str
) -> QuenchedRates:
    """Conditioned rate tables for the quenched chain rooted at i0.

    mode="return": conditioned to return to i0 before delta; rates use ratios
    of the killed kernel (hat_g row), so they carry no gamma dependence, and
    transitions into delta vanish. mode="no-return": conditioned to hit delta
    first; rates use the complementary kernel and transitions into i0 vanish.
    In both modes the chain is meant to run until the conditioning time
    (return, resp. hitting delta); rows the conditioning makes unreachable
    are zero.
    """
    p0 = bundle.position(i0)
    if p0 == bundle.delta_index:
        raise DomainError("the root must be a retained vertex")
    if mode not in ("return", "no-return"):
        raise DomainError(f"unknown mode {mode!r}")
    m = bundle.m
    w = bundle.w_wired
    ghat = bundle.hat_g_ext()
    psi_e = bundle.psi_ext()
    grow = bundle.full_g[p0]
    exit0 = 0.5 * float((w[p0] * grow).sum()) / grow[p0]

    if mode == "return":
        h = ghat[p0].copy()
    else:
        h = ghat[p0, p0] * psi_e - ghat[p0] * psi_e[p0]
        h[p0] = 0.0
    rates = np.zeros((m + 1, m + 1))
    pos = h > 0
    pos[p0] = False
    rates[pos] = 0.5 * w[pos] * (h[None, :] / h[pos, None])
    rates[:, ~ (h > 0)] = 0.0
    # root row: first-step tilt by the conditioning probability of the target
    scores = w[p0] * h
    total = scores.sum()
    if total <= 0:
        raise ConditioningError("conditioning unreachable from the root")
    rates[p0] = exit0 * scores / total
    rates[bundle.delta_index] = 0.0
    return QuenchedRates(rates=rates, exit=rates.sum(axis=1), i0=p0)


@dataclass(frozen=True)
class AbsorptionReport:
    """Absorption frequencies with binomial standard errors."""

    n: int
    counts: Dict[int, int]

    def prob(self, state: int) -> Tuple[float, float]:
        p = self.counts.get(int(state), 0) / self.n
        return p, float(np.sqrt(p * (1.0 - p) / self.n))


def mc_return_probability(
    rates: QuenchedRates,
    i0: int,
    absorb: Iterable[int],
    n: int,
    rng: np.random.Generator,
    max_sweeps: int = 1_000_000,
) -> AbsorptionReport:
    """Fraction of n independent chains (started at i0) absorbed at each
    element of `absorb`. One free first step is always taken, so starting
    inside the absorbing set estimates first-return splits."""
    absorb = set(int(v) for v in absorb)
    if not absorb:
        raise DomainError("absorb set must be nonempty")
    kern = rates.kernel()
    cum = np.cumsum(kern, axis=1)
    size = rates.size
    states = np.full(n, int(i0))
    alive = np.ones(n, dtype=bool)
    absorbed_at = np.full(n, -1)
    absorb_arr = np.zeros(size, dtype=bool)
    absorb_arr[list(absorb)] = True
    for _ in range(max_sweeps):
        if not alive.any():
            break
        cur = states[alive]
        row = cum[cur]
        norm = row[:, -1]
        if (norm <= 0).any():
            raise CoverageError("chain visited a state with no outgoing rate")
        u = rng.random(cur.shape[0]) * norm
        nxt = np.minimum((row < u[:, None]).sum(axis=1), size - 1)
        states[alive] = nxt
        hit = absorb_arr[nxt]
        if hit.any():
            idx = np.nonzero(alive)[0][hit]
            absorbed_at[idx] = nxt[hit]
            alive[idx] = False
    else:
        raise NumericError(
            f"{int(alive.sum())} chains not absorbed after {max_sweeps} sweeps"
        )
    counts = {int(v): int((absorbed_at == v).sum()) for v in absorb}
    return AbsorptionReport(n=n, counts=counts)


def simulate_vrjp_lattice(
    dim: int,
    w: float,
    n_jumps: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reinforced walk on the infinite constant-weight lattice, run for a
    fixed number of jumps from the origin.

    Local times live in a dictionary (the walk only visits a few hundred
    sites, so no box graph is built). Returns (positions, entry times,
    transformed entry times), the last being the quadratic time change
    accumulated on the fly.
    """
    if w <= 0:
        raise DomainError("edge weight must be positive")
    local: Dict[Tuple[int, ...], float] = {}
    pos = (0,) * dim
    coords = np.zeros((n_jumps + 1, dim), dtype=int)
    s_times = np.zeros(n_jumps + 1)
    d_times = np.zeros(n_jumps + 1)
    s = 0.0
    d = 0.0
    unit = np.eye(dim, dtype=int)
    for k in range(n_jumps):
        nbs = []
        rates = np.empty(2 * dim)
        t = 0
        for ax in range(dim):
            for sgn in (1, -1):
                q = tuple(np.array(pos) + sgn * unit[ax])
                nbs.append(q)
                rates[t] = w * local.get(q, 1.0)
                t += 1
        total = rates.sum()
        wait = rng.exponential(1.0 / total)
        lp = local.get(pos, 1.0)
        d += 2.0 * lp * wait + wait * wait
        local[pos] = lp + wait
        s += wait
        u = rng.random() * total
        pos = nbs[int(np.searchsorted(np.cumsum(rates), u, side="right"))]
        coords[k + 1] = pos
        s_times[k + 1] = s
        d_times[k + 1] = d
    return coords, s_times, d_times
