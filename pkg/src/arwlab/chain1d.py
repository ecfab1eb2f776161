"""Reduced birth-death chain on {1 .. k+1} tracking progress through an
ordered site set, plus exact hitting probabilities on tori and the
reversibility-measure machinery that bounds absorption times.

For an ordered set x_1 .. x_k with a sleep rate lambda, the chain moves
up with probability lambda/(1+lambda) (a sleep draw), and from state
j in {2..k} moves down with probability q_j/(1+lambda), where q_j is the
probability that simple random walk started at x_j hits x_{j-1} before
returning to x_j.  State 1 stays put instead of moving down; state k+1
is absorbing.  Quantities that can underflow (the measure nu, the bound
M*nu(k+1)) are kept in log space.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import rng
from .lattice import Topology

RESIDUAL_TOL = 1e-10
DENSE_LIMIT = 4096


def hitting_prob_exact(topology: Topology, x, y, with_residual: bool = False):
    """P_x(walk hits y before returning to x) for simple random walk.

    Solves the discrete Dirichlet problem: u harmonic off {x, y} with
    u(x) = 0, u(y) = 1; the answer is the mean of u over the neighbors of
    x (neighbor multiset, so double edges on the 2-torus count twice).
    Dense solve up to DENSE_LIMIT sites, conjugate gradient above; raises
    if the verified residual exceeds RESIDUAL_TOL.
    """
    if topology.kind != "torus":
        raise ValueError("hitting probabilities are computed on tori")
    xi = topology.index(x)
    yi = topology.index(y)
    if xi == yi:
        raise ValueError("x and y must differ")
    n = topology.n_sites
    deg = topology.degree()
    nbrs = topology.neighbor_table
    interior = np.array([i for i in range(n) if i != xi and i != yi], dtype=np.int64)
    if interior.size == 0:
        u_full = np.zeros(n)
    else:
        pos = -np.ones(n, dtype=np.int64)
        pos[interior] = np.arange(interior.size)
        rows_nbrs = nbrs[interior]  # (m, 2d)
        b = (rows_nbrs == yi).sum(axis=1).astype(np.float64) / deg
        m = interior.size
        if m <= DENSE_LIMIT:
            a_mat = np.eye(m)
            for c in range(deg):
                col = rows_nbrs[:, c]
                keep = pos[col] >= 0
                a_mat[np.flatnonzero(keep), pos[col[keep]]] -= 1.0 / deg
            u = scipy.linalg.solve(a_mat, b)
        else:
            data, ri, ci = [], [], []
            for c in range(deg):
                col = rows_nbrs[:, c]
                keep = np.flatnonzero(pos[col] >= 0)
                ri.append(keep)
                ci.append(pos[col[keep]])
                data.append(np.full(keep.size, -1.0 / deg))
            ri.append(np.arange(m))
            ci.append(np.arange(m))
            data.append(np.ones(m))
            a_mat = scipy.sparse.csr_matrix(
                (np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                shape=(m, m),
            )
            try:
                u, info = scipy.sparse.linalg.cg(
                    a_mat, b, rtol=1e-13, atol=0.0, maxiter=20 * m
                )
            except TypeError:  # older scipy spells the tolerance differently
                u, info = scipy.sparse.linalg.cg(
                    a_mat, b, tol=1e-13, atol=0.0, maxiter=20 * m
                )
            if info != 0:
                res = float(np.abs(a_mat @ u - b).max())
                raise RuntimeError(f"cg failed to converge, residual {res:.3e}")
        res = float(np.abs(a_mat @ u - b).max())
        if res > RESIDUAL_TOL:
            raise RuntimeError(f"harmonic solve residual {res:.3e} > {RESIDUAL_TOL}")
        u_full = np.zeros(n)
        u_full[interior] = u
    u_full[yi] = 1.0
    u_full[xi] = 0.0
    p = float(u_full[nbrs[xi]].sum() / deg)
    if with_residual:
        residual = 0.0 if interior.size == 0 else res
        return p, residual
    return p


def cycle_adjacent_hitting(n: int) -> float:
    """Closed form on the n-cycle for adjacent x, y: n / (2 (n-1))."""
    if n < 2:
        raise ValueError("need n >= 2")
    return n / (2.0 * (n - 1))


@dataclass
class ReducedChain:
    """Reduced chain data: size k, lambda, and q_2 .. q_k (array q, where
    q[j-2] is q_j).  States are 1-based; k+1 is absorbing."""

    k: int
    lam: float
    q: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.k < 1:
            raise ValueError("need k >= 1")
        if self.q.shape != (self.k - 1,):
            raise ValueError("q must list q_2 .. q_k")
        if np.any(self.q <= 0) or np.any(self.q > 1):
            raise ValueError("each q_j must be in (0, 1]")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def p_up(self) -> float:
        return self.lam / (1.0 + self.lam)

    def p_down(self, j: int) -> float:
        if not 2 <= j <= self.k:
            raise ValueError("down moves exist for 2 <= j <= k")
        return float(self.q[j - 2] / (1.0 + self.lam))

    def p_stay(self, j: int) -> float:
        if j == 1:
            return 1.0 / (1.0 + self.lam)
        if j == self.k + 1:
            return 1.0
        return float((1.0 - self.q[j - 2]) / (1.0 + self.lam))

    def transition_matrix(self) -> np.ndarray:
        m = np.zeros((self.k + 1, self.k + 1))
        for j in range(1, self.k + 1):
            m[j - 1, j] = self.p_up
            m[j - 1, j - 1] = self.p_stay(j)
            if j >= 2:
                m[j - 1, j - 2] = self.p_down(j)
        m[self.k, self.k] = 1.0
        return m


def build_chain(ordered, topology: Topology, lam: float) -> ReducedChain:
    """Reduced chain of a greedy-ordered site set on a torus."""
    sites = ordered.sites
    k = len(sites)
    q = np.empty(max(k - 1, 0))
    for j in range(2, k + 1):
        q[j - 2] = hitting_prob_exact(topology, sites[j - 1], sites[j - 2])
    return ReducedChain(k=k, lam=float(lam), q=q)


@dataclass
class ReversibilityMeasure:
    """Measure nu making the modified chain (absorbing state replaced by
    p(k+1,k) = lambda/(1+lambda)) reversible, normalized by nu(1) = 1.
    Stored as log_nu[j-1] = ln nu(j)."""

    chain: ReducedChain
    log_nu: np.ndarray

    @property
    def nu(self) -> np.ndarray:
        return np.exp(self.log_nu)

    def log_nu_top(self) -> float:
        return float(self.log_nu[-1])

    def detailed_balance_residual(self) -> float:
        """max over edges of the relative imbalance nu(j)p(j,j+1) vs
        nu(j+1)p(j+1,j) for the modified chain."""
        c = self.chain
        worst = 0.0
        for j in range(1, c.k + 1):
            left = math.exp(self.log_nu[j - 1]) * c.p_up
            if j + 1 <= c.k:
                right = math.exp(self.log_nu[j]) * c.p_down(j + 1)
            else:
                right = math.exp(self.log_nu[j]) * c.p_up
            scale = max(left, right, 1.0)
            worst = max(worst, abs(left - right) / scale)
        return worst


def nu_measure(chain: ReducedChain) -> ReversibilityMeasure:
    """Reversibility measure of the modified chain, in log space.

    ln nu(j+1) - ln nu(j) = ln p(j, j+1) - ln p(j+1, j); the final edge
    k <-> k+1 has matched rates, so nu(k+1) = lambda^(k-1) / prod q_j.
    """
    log_nu = np.zeros(chain.k + 1)
    for j in range(1, chain.k + 1):
        up = math.log(chain.p_up)
        if j + 1 <= chain.k:
            down = math.log(chain.p_down(j + 1))
        else:
            down = math.log(chain.p_up)
        log_nu[j] = log_nu[j - 1] + up - down
    return ReversibilityMeasure(chain=chain, log_nu=log_nu)


def log_nu_top_closed_form(chain: ReducedChain) -> float:
    """ln nu(k+1) = (k-1) ln lambda - sum_j ln q_j, directly."""
    return float((chain.k - 1) * math.log(chain.lam) - np.log(chain.q).sum())


@dataclass
class AbsorptionBound:
    """P_1(T_{k+1} <= M) <= min(1, M nu(k+1)); log_m_nu = ln(M nu(k+1)).
    The packaged variant plugs in the worst-case chain over a torus:
    (M / min(1, 2 d lambda)) * (kappa_d (2 d lambda)^mu)^(n^d)."""

    m_steps: int
    bound: float
    log_m_nu: float
    packaged_log: float = math.nan

    @property
    def packaged(self) -> float:
        if math.isnan(self.packaged_log):
            return math.nan
        return math.exp(self.packaged_log) if self.packaged_log < 0 else math.inf


def absorption_bound(chain: ReducedChain, m_steps: int, torus=None, mu=None) -> AbsorptionBound:
    """Bound on reaching the absorbing state within m_steps steps.

    With torus (a Topology) and a density mu, also evaluates the packaged
    torus-level bound in log space.
    """
    if m_steps < 0:
        raise ValueError("m_steps must be >= 0")
    measure = nu_measure(chain)
    if m_steps == 0:
        return AbsorptionBound(m_steps=0, bound=0.0, log_m_nu=-math.inf)
    log_m_nu = math.log(m_steps) + measure.log_nu_top()
    bound = 1.0 if log_m_nu >= 0 else math.exp(log_m_nu)
    packaged_log = math.nan
    if torus is not None:
        from .bounds import kappa

        if mu is None:
            raise ValueError("packaged bound needs the density mu")
        lam, d, n = chain.lam, torus.d, torus.n
        per_site = kappa(d).log + mu * math.log(2 * d * lam)
        packaged_log = (
            math.log(m_steps) - math.log(min(1.0, 2 * d * lam)) + n**d * per_site
        )
    return AbsorptionBound(
        m_steps=int(m_steps), bound=bound, log_m_nu=log_m_nu, packaged_log=packaged_log
    )


def simulate_absorption(chain: ReducedChain, seed: int, replicas: int, max_steps=None):
    """Sample the absorption time T_{k+1} from state 1, one stream per
    replica (pure in (seed, replica index)).

    Returns an int64 vector; when max_steps is given, replicas still
    unabsorbed after max_steps steps are reported as max_steps + 1.
    Without max_steps the walk runs until every replica absorbs, which
    only terminates quickly for chains with upward drift.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    hard_limit = 10**7 if max_steps is None else int(max_steps)
    streams = rng.derive_array(seed, np.arange(replicas))
    state = np.ones(replicas, dtype=np.int64)
    t_abs = np.zeros(replicas, dtype=np.int64)
    p_up = chain.p_up
    # per-state down probabilities indexed by state 1..k+1
    p_down = np.zeros(chain.k + 2)
    for j in range(2, chain.k + 1):
        p_down[j] = chain.p_down(j)
    top = chain.k + 1
    step = 0
    while True:
        live = state != top
        if not live.any():
            break
        if step >= hard_limit:
            if max_steps is None:
                raise RuntimeError(
                    "absorption did not finish within 1e7 steps; pass max_steps"
                )
            t_abs[live] = max_steps + 1
            break
        u = rng.stream_values(streams, np.uint64(step)).astype(np.float64)
        u = (u + 0.5) * 2.0**-64
        down = p_down[state]
        go_up = u < p_up
        go_down = ~go_up & (u < p_up + down)
        state = np.where(live & go_up, state + 1, state)
        state = np.where(live & go_down, state - 1, state)
        step += 1
        newly = live & (state == top)
        t_abs[newly] = step
    return t_abs
