"""Derandomized squaring of monomial sequences over expander graphs.

A monomial is a word of :class:`Symbol` values read as an operator product,
so the last symbol acts first. Composing a sequence S = (s_0, ..., s_{m-1})
with a graph G on [m] gives one monomial ``dagger(s_j) s_i`` per directed
edge (i, j), in the graph's canonical edge order. A cascade applies this to
the alphabet (u_0, ..., u_{c-1}) once per graph, doubling monomial length
each time.

If every stage graph is a mu-expander, the averaged operator contracts as
lambda -> (1 - mu) lambda^2 + mu, so a cascade reaches ``F(lambda)`` with F
the composition of these maps.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BoundsError, DomainError, RoundingError, ShapeError, SizeError
from .expanders import PRESETS, build_expander, complete_graph, graph_from_manifest
from .linalg import dagger

FIRST_PHASE_DEGREE = 512
SECOND_PHASE_BASE_DEGREE = 32


@dataclass(frozen=True)
class Symbol:
    index: int
    dagger: bool = False

    def flip(self):
        return Symbol(self.index, not self.dagger)

    def __str__(self):
        return f"{'-' if self.dagger else '+'}{self.index + 1}"


def dagger_monomial(m):
    """Reverse the word and flip every flag."""
    return tuple(s.flip() for s in reversed(m))


def alphabet(c):
    return [(Symbol(i),) for i in range(c)]


def q_compose(G, S):
    """(dagger(s_j) s_i) over directed edges (i, j) of G in canonical order."""
    if len(S) != G.n:
        raise ShapeError(f"sequence of length {len(S)} does not match {G.n} vertices")
    return [dagger_monomial(S[j]) + tuple(S[i]) for i, j in G.edges()]


def eval_monomial(m, U):
    """Operator product of the monomial's symbols, ``U[i]`` or its adjoint."""
    U = [np.asarray(u) for u in U]
    dims = {u.shape for u in U}
    if len(dims) != 1 or U[0].ndim != 2 or U[0].shape[0] != U[0].shape[1]:
        raise ShapeError("all matrices must be square of one size")
    out = np.eye(U[0].shape[0], dtype=np.result_type(*U))
    for s in m:
        u = U[s.index]
        out = out @ (dagger(u) if s.dagger else u)
    return out


def average_sequence(S, U):
    return sum(eval_monomial(m, U) for m in S) / len(S)


def f_mu(mu, lam):
    """One contraction step (1 - mu) lam^2 + mu."""
    if not (0 <= mu <= 1 and 0 <= lam <= 1):
        raise DomainError("mu and lambda must lie in [0, 1]")
    return (1 - mu) * lam * lam + mu


def F_cascade(mus, lam):
    """f_{mu_t} o ... o f_{mu_1} evaluated at lam (mu_1 applied first)."""
    for mu in mus:
        lam = f_mu(mu, lam)
    return lam


def second_phase_mu(j):
    return 0.25 * 2.0 ** (-(2**j))


@dataclass(frozen=True)
class StageSpec:
    vertices: int
    degree: int
    mu_target: float


@dataclass(frozen=True)
class CascadeParams:
    """Full-scale schedule; sizes are exact integers and nothing is materialized."""

    c: int
    delta: Fraction
    eps: Fraction
    ell1: int
    ell2: int
    stages: tuple

    @property
    def t(self):
        return self.ell1 + self.ell2

    @property
    def L(self):
        return 2**self.t

    @property
    def N(self):
        last = self.stages[-1]
        return last.vertices * last.degree

    def mus(self):
        return [s.mu_target for s in self.stages]

    def bound(self, lam=None):
        lam = 1 - float(self.delta) if lam is None else lam
        return F_cascade(self.mus(), lam)

    def to_dict(self):
        return {
            "schema": 1,
            "c": self.c,
            "delta": str(self.delta),
            "eps": str(self.eps),
            "ell1": self.ell1,
            "ell2": self.ell2,
            "L": self.L,
            "N_log2": math.log2(self.N),
            "stages": [{"vertices_log2": math.log2(s.vertices), "degree": s.degree, "mu": s.mu_target} for s in self.stages],
        }


def _exact(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def grid_exponents(c, delta, eps):
    """(i1, i2, i3) with c = 2^i1, delta = 16^-i2, eps = 2^-(2^i3), or RoundingError."""
    grid = "admissible grid: c = 2^i1, delta = 16^-i2, eps = 2^-(2^i3) with integers i1, i2, i3 >= 0"
    if not isinstance(c, int) or c < 1 or c & (c - 1):
        raise RoundingError(f"c={c} is not a power of two; {grid}")
    i1 = c.bit_length() - 1
    d = _exact(delta)
    e = _exact(eps)
    if d <= 0 or d > 1 or d.numerator != 1 or d.denominator & (d.denominator - 1):
        raise RoundingError(f"delta={delta} off grid; {grid}")
    b = d.denominator.bit_length() - 1
    if b % 4:
        raise RoundingError(f"delta={delta} off grid; {grid}")
    i2 = b // 4
    if e <= 0 or e >= 1 or e.numerator != 1 or e.denominator & (e.denominator - 1):
        raise RoundingError(f"eps={eps} off grid; {grid}")
    a = e.denominator.bit_length() - 1
    if a & (a - 1):
        raise RoundingError(f"eps={eps} off grid; {grid}")
    return i1, i2, a.bit_length() - 1


def cascade_params(c, delta, eps):
    """Stage schedule reaching eps from a gap delta.

    ell1 = (5/4) log2(1/delta) + 3 stages of degree-512, mu .11 graphs, then
    ell2 = log2 log2(1/eps) stages of degree 32^(2^j) with mu_j = 2^-(2^j) / 4.
    """
    _, i2, i3 = grid_exponents(c, delta, eps)
    ell1 = 5 * i2 + 3
    ell2 = i3
    stages = []
    vertices = c
    for _ in range(ell1):
        stages.append(StageSpec(vertices, FIRST_PHASE_DEGREE, PRESETS[FIRST_PHASE_DEGREE]))
        vertices *= FIRST_PHASE_DEGREE
    for j in range(1, ell2 + 1):
        degree = SECOND_PHASE_BASE_DEGREE ** (2**j)
        stages.append(StageSpec(vertices, degree, second_phase_mu(j)))
        vertices *= degree
    return CascadeParams(c, _exact(delta), _exact(eps), ell1, ell2, tuple(stages))


class Cascade:
    """A materialized cascade: one certified graph per stage.

    Graph 1 lives on the c alphabet symbols and graph s+1 on the edges of
    graph s.
    """

    def __init__(self, c, graphs):
        self.c = c
        self.graphs = list(graphs)
        n = c
        for G in self.graphs:
            if G.n != n:
                raise ShapeError(f"stage graph has {G.n} vertices, expected {n}")
            n = G.edge_count
        self.N = n

    @property
    def depth(self):
        return len(self.graphs)

    @property
    def L(self):
        return 2**self.depth

    def mus(self):
        return [G.mu_certified for G in self.graphs]

    def bound(self, lam):
        return F_cascade(self.mus(), lam)

    def prefix(self, stages):
        return Cascade(self.c, self.graphs[:stages])

    def symbol(self, i, j):
        return walk_symbol(self, i, j)

    def monomial(self, i):
        return tuple(walk_symbol(self, i, j) for j in range(self.L))

    def materialize(self):
        """Every monomial, by repeated composition."""
        seq = alphabet(self.c)
        for G in self.graphs:
            seq = q_compose(G, seq)
        return seq

    def manifest(self):
        return {"schema": 1, "c": self.c, "N": self.N, "L": self.L, "graphs": [G.manifest() for G in self.graphs]}

    @classmethod
    def from_manifest(cls, data):
        return cls(int(data["c"]), [graph_from_manifest(g) for g in data["graphs"]])


def build_cascade(c, degrees, mu_targets=None, first_seed=0):
    """Certified cascade with the given per-stage degrees.

    A stage whose degree equals its vertex count uses the complete graph.
    """
    graphs = []
    n = c
    for s, d in enumerate(degrees):
        target = None if mu_targets is None else mu_targets[s]
        if d == n:
            G = complete_graph(n)
        else:
            G = build_expander(n, d, target, first_seed=first_seed)
        graphs.append(G)
        n *= d
    return Cascade(c, graphs)


def walk_symbol(cascade, i, j):
    """Symbol ``j`` of monomial ``i`` by descending the composition tree.

    One rotation-map lookup per stage; no monomial is ever stored.
    """
    if not 0 <= i < cascade.N:
        raise BoundsError(f"monomial index {i} outside [0, {cascade.N})")
    if not 0 <= j < cascade.L:
        raise BoundsError(f"position {j} outside [0, {cascade.L})")
    flip = False
    idx, pos = int(i), int(j)
    for t in range(cascade.depth, 0, -1):
        half = 1 << (t - 1)
        a, b = cascade.graphs[t - 1].edge(idx)
        if pos < half:
            flip = not flip
            idx, pos = b, half - 1 - pos
        else:
            idx, pos = a, pos - half
    return Symbol(idx, flip)


def level_products(cascade, U, stages=None, cap=None):
    """Yield the stacked operators of every level: U, then one per edge of each graph.

    Level s+1 holds X_b^dagger X_a for edge (a, b) of graph s+1, which is the
    evaluation of the corresponding monomial.
    """
    X = np.asarray(U)
    yield X
    for G in cascade.graphs[: cascade.depth if stages is None else stages]:
        if cap is not None and G.edge_count > cap:
            raise SizeError(f"{G.edge_count} monomials exceed the enumeration cap {cap}")
        e = G.edges()
        X = dagger(X[e[:, 1]]) @ X[e[:, 0]]
        yield X


def dump_monomials(monomials):
    """One monomial per line, symbols as space-separated 1-based ``+i`` / ``-i``."""
    return "".join(" ".join(str(s) for s in m) + "\n" for m in monomials)


def parse_monomials(text):
    out = []
    for line in text.splitlines():
        syms = []
        for tok in line.split():
            if tok[0] not in "+-":
                raise DomainError(f"bad symbol {tok!r}")
            syms.append(Symbol(int(tok[1:]) - 1, tok[0] == "-"))
        out.append(tuple(syms))
    return out


def cascade_json(cascade):
    return json.dumps(cascade.manifest(), separators=(",", ":"))
