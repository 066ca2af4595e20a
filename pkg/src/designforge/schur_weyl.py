"""Perfect matchings, matching states and the Haar-invariant projectors they span.

For a group G acting on C^D, the vectors fixed by every ``g^{(x)k} (x) conj(g)^{(x)k}``
are spanned by matching states. For the orthogonal groups every perfect
matching of the 2k tensor slots contributes; for the unitary groups only the
bipartite ones (each pair joins a ``g`` slot to a ``conj(g)`` slot).

Slots are numbered 1..2k and slot 1 is the most significant tensor factor.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .caps import current_caps
from .errors import DomainError, NumericalRankError, PreconditionError, SizeError
from .linalg import check_group

EXACT_GRAM_LIMIT = 15
CONDITION_GUARD = 1e10


@dataclass(frozen=True)
class Matching:
    k: int
    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        flat = sorted(x for p in pairs for x in p)
        if len(pairs) != self.k or flat != list(range(1, 2 * self.k + 1)):
            raise DomainError(f"{pairs} is not a perfect matching of [1, {2 * self.k}]")

    @property
    def bipartite(self):
        return all(a <= self.k < b for a, b in self.pairs)

    @classmethod
    def identity(cls, k):
        """The matching {{1, k+1}, ..., {k, 2k}}."""
        return cls(k, tuple((i, k + i) for i in range(1, k + 1)))

    def partner(self):
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out


def _matchings_of(items):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for idx, other in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1 :]
        for tail in _matchings_of(remaining):
            yield ((first, other),) + tail


def matching_count(k, bipartite):
    if bipartite:
        return factorial(k)
    return factorial(2 * k) // (2**k * factorial(k))


def enumerate_matchings(k, bipartite=False, cap=None):
    """All (bipartite) perfect matchings of [2k], lexicographic on their pair lists."""
    cap = cap or current_caps().matching_k
    if k < 1:
        raise DomainError("k must be positive")
    if k > cap:
        raise SizeError(f"k={k} exceeds the matching cap {cap}")
    if bipartite:
        out = [Matching(k, tuple((i + 1, k + 1 + p) for i, p in enumerate(perm))) for perm in itertools.permutations(range(k))]
        return sorted(out, key=lambda m: m.pairs)
    return [Matching(k, pairs) for pairs in _matchings_of(tuple(range(1, 2 * k + 1)))]


def phi_state(M, D):
    """Unit vector D^{-k/2} sum over colourings constant on every pair of ``M``."""
    if D < 2:
        raise DomainError("local dimension must be at least 2")
    k = M.k
    size = D ** (2 * k)
    if size > current_caps().max_entries:
        raise SizeError(f"state dimension {size} exceeds cap")
    colours = np.indices((D,) * k).reshape(k, -1)
    index = np.zeros(colours.shape[1], dtype=np.int64)
    for p, (a, b) in enumerate(M.pairs):
        index += colours[p] * (D ** (2 * k - a) + D ** (2 * k - b))
    v = np.zeros(size)
    v[index] = D ** (-k / 2)
    return v


def cycle_count(M1, M2):
    """Connected components of the union of two matchings on [2k]."""
    parent = list(range(2 * M1.k + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in M1.pairs + M2.pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(x) for x in range(1, 2 * M1.k + 1)})


def matching_gram(M1, M2, D):
    """Exact inner product <Phi_M1|Phi_M2> = D^(cc(M1 u M2) - k)."""
    if M1.k != M2.k:
        raise DomainError("matchings must have the same k")
    return Fraction(D) ** (cycle_count(M1, M2) - M1.k)


def gram_matrix(matchings, D):
    return [[matching_gram(a, b, D) for b in matchings] for a in matchings]


def exact_inverse(rows):
    """Gauss-Jordan inverse of a square matrix of Fractions."""
    n = len(rows)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise NumericalRankError("Gram matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def float_gram_inverse(gram):
    """Gram inverse in double precision, refusing ill-conditioned input."""
    g = np.asarray(gram, dtype=float)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError("Gram matrix is not positive definite") from exc
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > CONDITION_GUARD:
        raise NumericalRankError(f"Gram condition number {cond:.3g} exceeds {CONDITION_GUARD:g}")
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol


def projector_matchings(group, D, k):
    """The matchings spanning the invariant subspace, after checking preconditions."""
    check_group(group)
    if group in ("SO", "O"):
        if not 2 * k < D:
            raise PreconditionError(
                f"{group}({D}) with k={k}: matching states span the invariant space only when k < D/2"
            )
        return enumerate_matchings(k, bipartite=False)
    if k > D:
        raise PreconditionError(f"{group}({D}) with k={k}: matching states are independent only for k <= D")
    return enumerate_matchings(k, bipartite=True)


class MatchingProjector:
    """Orthogonal projector W (W^T W)^{-1} W^T onto span{Phi_M}.

    Kept in factored form; :meth:`apply` costs O(D^{2k} |M|) and :meth:`dense`
    materializes the D^{2k} x D^{2k} matrix when it fits under the cap.
    """

    def __init__(self, group, D, k):
        self.group = group
        self.D = D
        self.k = k
        self.matchings = projector_matchings(group, D, k)
        self.dim = D ** (2 * k)
        self.rank = len(self.matchings)
        if self.dim * self.rank > current_caps().max_entries:
            raise SizeError(f"{self.rank} matching states of dimension {self.dim} exceed the entry cap")
        self.states = np.stack([phi_state(M, D) for M in self.matchings], axis=1)
        gram = gram_matrix(self.matchings, D)
        if self.rank <= EXACT_GRAM_LIMIT:
            inv = exact_inverse(gram)
            self.gram_inverse = np.array([[float(x) for x in row] for row in inv])
        else:
            self.gram_inverse = float_gram_inverse(gram)
        # orthonormal basis of the image, handy for deflation
        evals, evecs = np.linalg.eigh(self.gram_inverse)
        self.basis = self.states @ (evecs * np.sqrt(evals)) @ evecs.T

    def apply(self, v):
        v = np.asarray(v)
        return self.states @ (self.gram_inverse @ (self.states.T @ v))

    __matmul__ = apply

    def dense(self):
        if self.dim * self.dim > current_caps().max_entries:
            raise SizeError(f"dense projector of dimension {self.dim} exceeds cap")
        return self.basis @ self.basis.T


def haar_projector(group, D, k, dense=True):
    """Haar moment E[g^{(x)k} (x) conj(g)^{(x)k}] as a projector.

    SU and U share the bipartite projector; SO and O share the full-matching
    projector, which requires k < D/2.
    """
    proj = MatchingProjector(group, D, k)
    return proj.dense() if dense else proj


@dataclass(frozen=True)
class PermSpec:
    N: int
    mapping: tuple

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(x) for x in self.mapping))
        if sorted(self.mapping) != list(range(self.N)):
            raise DomainError("mapping is not a bijection")

    def array(self):
        return np.asarray(self.mapping, dtype=np.int64)


def simple_3bit_perms(n):
    """Every x -> x XOR (h(x_j1, x_j2) e_i) over distinct (i, j1, j2) and 16 tables h.

    Bit 1 is the most significant. ``h`` is indexed by its truth table:
    h(a, b) = (table >> (2a + b)) & 1.
    """
    if n < 3:
        raise DomainError("simple 3-bit permutations need n >= 3")
    N = 2**n
    x = np.arange(N)

    def bit(j):
        return (x >> (n - j)) & 1

    out = []
    for i, j1, j2 in itertools.permutations(range(1, n + 1), 3):
        idx = 2 * bit(j1) + bit(j2)
        for table in range(16):
            flip = (table >> idx) & 1
            out.append(PermSpec(N, x ^ (flip << (n - i))))
    return out


def distinct_tuples(N, k):
    """Ordered k-tuples of distinct elements of [N], lexicographic."""
    return np.array(list(itertools.permutations(range(N), k)), dtype=np.int64).reshape(-1, k)


def _tuple_index(tuples, N):
    keys = np.zeros(len(tuples), dtype=np.int64)
    for col in tuples.T:
        keys = keys * N + col
    return keys


def wk_counts(perms, N, k):
    """Integer matrix C[s, t] = #{pi : pi(t) = s} over distinct k-tuples."""
    count = comb(N, k) * factorial(k)
    if count * count > current_caps().max_entries:
        raise SizeError(f"tuple space of size {count} exceeds cap")
    tuples = distinct_tuples(N, k)
    keys = _tuple_index(tuples, N)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    out = np.zeros((count, count), dtype=np.int64)
    cols = np.arange(count)
    for p in perms:
        arr = p.array() if isinstance(p, PermSpec) else np.asarray(p, dtype=np.int64)
        image = _tuple_index(arr[tuples], N)
        rows = order[np.searchsorted(sorted_keys, image)]
        out[rows, cols] += 1
    return out


def wk_moment(perms, N, k):
    """Average of W^k(pi) on distinct k-tuples.

    ``perms="uniform"`` gives the uniform average over the whole symmetric
    group, which by transitivity is the constant matrix 1/|[N]_(k)|.
    """
    if k > N:
        raise DomainError("k must not exceed N")
    count = comb(N, k) * factorial(k)
    if count * count > current_caps().max_entries:
        raise SizeError(f"tuple space of size {count} exceeds cap")
    if isinstance(perms, str):
        if perms != "uniform":
            raise DomainError(f"unknown permutation source {perms!r}")
        return np.full((count, count), 1.0 / count)
    perms = list(perms)
    if not perms:
        raise DomainError("empty permutation multiset")
    return wk_counts(perms, N, k) / len(perms)
