"""Regular graphs given by rotation maps, and certified random expanders.

A d-regular graph on [n] is stored as its rotation map: ``rot(v, p) = (w, q)``
means port p of v leads to w, arriving through port q. Directed edges are
indexed ``v * d + p``; this is the canonical edge order used by the walks.

Expansion is the two-sided parameter mu = ||A - J||, where A is the
normalized adjacency matrix and J the projector onto the all-ones vector.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .caps import current_caps
from .errors import ConstructionError, DomainError, SizeError
from .linalg import make_rng

# (degree, mu) pairs guaranteed by near-Ramanujan families once self-loops are added
PRESETS = {512: 0.11, 32: 0.45}
SEED_ATTEMPTS = 64
GRAPH_STREAM = 0x6A4E
DENSE_CERT_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class RegularGraph:
    n: int
    d: int
    rot_vertex: np.ndarray
    rot_port: np.ndarray
    undirected: bool = True
    mu_certified: float = None
    seed: int = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for arr in (self.rot_vertex, self.rot_port):
            if arr.shape != (self.n, self.d):
                raise DomainError(f"rotation map must have shape ({self.n}, {self.d})")
            arr.setflags(write=False)

    def rot(self, v, p):
        return int(self.rot_vertex[v, p]), int(self.rot_port[v, p])

    @property
    def edge_count(self):
        return self.n * self.d

    def edge(self, e):
        """Directed edge number ``e`` as (tail, head)."""
        v, p = divmod(int(e), self.d)
        return v, int(self.rot_vertex[v, p])

    def edges(self):
        tails = np.repeat(np.arange(self.n), self.d)
        return np.stack([tails, self.rot_vertex.reshape(-1)], axis=1)

    def adjacency(self, sparse=False):
        """Normalized adjacency A[w, v] = #{ports of v leading to w} / d."""
        rows = self.rot_vertex.reshape(-1)
        cols = np.repeat(np.arange(self.n), self.d)
        data = np.full(rows.size, 1.0 / self.d)
        mat = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        if sparse:
            return mat
        if self.n * self.n > current_caps().max_entries:
            raise SizeError(f"dense adjacency on {self.n} vertices exceeds cap")
        return mat.toarray()

    def is_rotation_bijection(self):
        flat = self.rot_vertex.reshape(-1).astype(np.int64) * self.d + self.rot_port.reshape(-1)
        return np.array_equal(np.sort(flat), np.arange(self.n * self.d))

    def is_involution(self):
        w, q = self.rot_vertex, self.rot_port
        back_v = w[w, q]
        back_p = q[w, q]
        v = np.arange(self.n)[:, None]
        p = np.arange(self.d)[None, :]
        return bool(np.all(back_v == v) and np.all(back_p == p))

    def manifest(self):
        return {"n": self.n, "d": self.d, "seed": self.seed, "mu_certified": self.mu_certified}

    def with_mu(self, mu):
        return RegularGraph(self.n, self.d, self.rot_vertex, self.rot_port, self.undirected, mu, self.seed)


def complete_graph(m):
    """K_m with self-loops: port p of v leads to p, arriving through port v."""
    if m < 1:
        raise DomainError("complete graph needs at least one vertex")
    v = np.arange(m)
    rot_vertex = np.tile(v, (m, 1))
    rot_port = np.tile(v[:, None], (1, m))
    return RegularGraph(m, m, rot_vertex, rot_port, True, 0.0, None)


def permutation_graph(n, d, rng):
    """Random d-regular graph from d//2 permutations and their inverses.

    An odd degree adds one self-loop port per vertex.
    """
    rot_vertex = np.empty((n, d), dtype=np.int64)
    rot_port = np.empty((n, d), dtype=np.int64)
    v = np.arange(n)
    for i in range(d // 2):
        perm = rng.permutation(n)
        inv = np.empty_like(perm)
        inv[perm] = v
        rot_vertex[:, 2 * i] = perm
        rot_port[:, 2 * i] = 2 * i + 1
        rot_vertex[:, 2 * i + 1] = inv
        rot_port[:, 2 * i + 1] = 2 * i
    if d % 2:
        rot_vertex[:, d - 1] = v
        rot_port[:, d - 1] = d - 1
    return rot_vertex, rot_port


def default_mu_target(d):
    """Loose certification target: 1.3 times the Ramanujan value 2 sqrt(d-1)/d."""
    if d in PRESETS:
        return PRESETS[d]
    return min(0.999, 1.3 * 2 * np.sqrt(max(d - 1, 1)) / d)


def certify_mu(G, tol=1e-10):
    """Two-sided expansion ||A - J||_op of the normalized adjacency."""
    cap = current_caps().certification_vertices
    if G.n > cap:
        raise SizeError(f"certification of {G.n} vertices exceeds cap {cap}")
    if G.n == 1:
        return 0.0
    if G.n <= DENSE_CERT_LIMIT:
        a = G.adjacency() - 1.0 / G.n
        if G.undirected:
            ev = np.linalg.eigvalsh((a + a.T) / 2)
            return float(max(abs(ev[0]), abs(ev[-1])))
        return float(np.linalg.norm(a, 2))
    a = G.adjacency(sparse=True)
    ones = np.full(G.n, 1.0 / np.sqrt(G.n))

    def mv(x):
        x = np.ravel(x)
        x = x - ones * (ones @ x)
        y = a @ x
        return y - ones * (ones @ y)

    if G.undirected:
        op = LinearOperator((G.n, G.n), matvec=mv, dtype=float)
    else:
        at = a.T.tocsr()

        def ata(x):
            x = np.ravel(x)
            x = x - ones * (ones @ x)
            y = at @ mv(x)
            return y - ones * (ones @ y)

        op = LinearOperator((G.n, G.n), matvec=ata, dtype=float)
    v0 = make_rng(0, GRAPH_STREAM).standard_normal(G.n)
    val = eigsh(op, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False)[0]
    return float(abs(val)) if G.undirected else float(np.sqrt(abs(val)))


def graph_from_seed(n, d, seed):
    rot_vertex, rot_port = permutation_graph(n, d, make_rng(seed, GRAPH_STREAM))
    return RegularGraph(n, d, rot_vertex, rot_port, True, None, seed)


def build_expander(n, d, mu_target=None, first_seed=0, attempts=SEED_ATTEMPTS):
    """First seeded random d-regular graph on [n] whose certified mu meets the target."""
    if n < 1 or d < 1:
        raise DomainError("n and d must be positive")
    mu_target = default_mu_target(d) if mu_target is None else mu_target
    if n > current_caps().certification_vertices:
        raise SizeError(f"{n} vertices exceeds the certification cap")
    best = np.inf
    for seed in range(first_seed, first_seed + attempts):
        G = graph_from_seed(n, d, seed)
        mu = certify_mu(G)
        if mu <= mu_target:
            return G.with_mu(mu)
        best = min(best, mu)
    raise ConstructionError(
        f"no seed in [{first_seed}, {first_seed + attempts}) reaches mu <= {mu_target} for n={n}, d={d}", best_mu=best
    )


def graph_from_manifest(data):
    """Rebuild a graph from its manifest and re-certify it."""
    n, d, seed = int(data["n"]), int(data["d"]), data.get("seed")
    G = complete_graph(n) if seed is None and n == d else graph_from_seed(n, d, int(seed))
    return G.with_mu(certify_mu(G))


def square_graph(G):
    """G^2: port (p1, p2) of v follows p1 then p2; A_{G^2} = A_G^2."""
    d = G.d
    if G.n * d * d > current_caps().max_entries:
        raise SizeError("squared rotation map exceeds cap")
    w1, q1 = G.rot_vertex, G.rot_port
    w2 = w1[w1]  # (n, d, d): w2[v, p1, p2] = rot_vertex[w1[v, p1], p2]
    q2 = q1[w1]
    rot_vertex = w2.reshape(G.n, d * d)
    rot_port = (q2 * d + q1[:, :, None]).reshape(G.n, d * d)
    return RegularGraph(G.n, d * d, rot_vertex, rot_port, G.undirected, None, None)


def add_self_loops(G, count):
    """Adjoin ``count`` self-loop ports to every vertex."""
    if count < 1:
        raise DomainError("count must be at least 1")
    v = np.arange(G.n)[:, None]
    loops = np.arange(G.d, G.d + count)[None, :]
    rot_vertex = np.concatenate([G.rot_vertex, np.broadcast_to(v, (G.n, count))], axis=1)
    rot_port = np.concatenate([G.rot_port, np.broadcast_to(loops, (G.n, count))], axis=1)
    return RegularGraph(G.n, G.d + count, rot_vertex.copy(), rot_port.copy(), G.undirected, None, G.seed)


def manifest_json(G):
    return json.dumps({"schema": 1, **G.manifest()}, separators=(",", ":"))
