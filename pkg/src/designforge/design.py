"""Seed -> circuit compilation of approximate designs.

The walk alphabet consists of every base-set element placed on every
increasing 4-subset of the n wires, followed by identity symbols up to the
next power of two c >= 2 * (number of placements). Identity symbols keep the
alphabet inverse-closed and make the walk lazy, so its moment has spectrum in
[0, 1]. A derandomized-squaring cascade over this alphabet turns a seed into
a monomial, which is emitted gate by gate.

Two cascades are attached to a design: the full-scale schedule
(:class:`~designforge.walks.CascadeParams`, arithmetic only) that certifies
the seed length, and a truncated desk cascade of certified graphs that is
actually sampled and can be enumerated exhaustively.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .caps import current_caps
from .errors import BoundsError, DomainError, PreconditionError, RoundingError, SizeError
from .gates import BASE_QUBITS, Circuit, Gate, base_set, embed_gate, place
from .linalg import check_group, dagger, make_rng
from .moments import average_rho
from .schur_weyl import MatchingProjector
from .walks import build_cascade, cascade_params, level_products, walk_symbol

SEED_A = 30
SEED_B = 10
DESK_DEGREE = 16
CORE_GROUP = {"SO": "SO", "O": "SO", "SU": "SU", "U": "SU"}


def next_power_of_two(x):
    return 1 << max(0, math.ceil(math.log2(x)))


def default_delta(n, k):
    """1/(n k^3) rounded down onto the grid 16^-i."""
    target = Fraction(1, n * k**3)
    delta = Fraction(1)
    while delta > target:
        delta /= 16
    return delta


def _grid_fraction(x, name):
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise RoundingError(f"{name}={x!r} is not a number") from exc


def desk_degrees(c, stages, degree=DESK_DEGREE):
    """Per-stage degrees: the complete graph while it is no larger than ``degree``."""
    out = []
    n = c
    for _ in range(stages):
        d = n if n <= degree else degree
        out.append(d)
        n *= d
    return out


@dataclass(frozen=True)
class Seed:
    value: int
    width: int

    def __post_init__(self):
        if self.value < 0 or self.width < 0 or self.value >> self.width:
            raise BoundsError(f"seed {self.value} does not fit in {self.width} bits")


@dataclass(frozen=True, eq=False)
class DesignSpec:
    group: str
    n: int
    k: int
    eps: Fraction
    delta_used: Fraction
    base: object
    placements: tuple
    c: int
    cascade: object
    params: object
    measured_gap: float = None

    @property
    def core_group(self):
        return CORE_GROUP[self.group]

    @property
    def lift_bit(self):
        return 1 if self.group == "O" else 0

    @property
    def active(self):
        """Number of non-identity alphabet symbols."""
        return len(self.base) * len(self.placements)

    @property
    def identity_weight(self):
        return 1 - self.active / self.c

    @property
    def N(self):
        return self.cascade.N << self.lift_bit

    @property
    def L(self):
        return self.cascade.L

    @property
    def seed_bits(self):
        return max(0, (self.N - 1).bit_length())

    @property
    def full_seed_bits(self):
        return (self.params.N - 1).bit_length() + self.lift_bit

    @property
    def seed_bound(self):
        return SEED_A * self.n * self.k + SEED_B * math.log2(1 / self.eps)

    def symbol_gate(self, index):
        """(base element placed on its wires, phase) for alphabet symbol ``index``; None for identity."""
        if index >= self.active:
            return None
        s, e = divmod(index, len(self.base))
        return place(self.base.elements[e], self.placements[s]), self.base.phases[e]

    def alphabet_matrices(self):
        """The c alphabet symbols as 2^n x 2^n matrices."""
        dim = 2**self.n
        mats = np.empty((self.c, dim, dim), dtype=float if self.core_group == "SO" else complex)
        for i in range(self.c):
            placed = self.symbol_gate(i)
            if placed is None:
                mats[i] = np.eye(dim)
            else:
                g, ph = placed
                m = ph * embed_gate(g, n=self.n)
                mats[i] = m.real if self.core_group == "SO" else m
        return mats

    def report(self):
        return {
            "group": self.group,
            "n": self.n,
            "k": self.k,
            "eps": str(self.eps),
            "delta": str(self.delta_used),
            "c": self.c,
            "identity_weight": self.identity_weight,
            "N": self.N,
            "L": self.L,
            "seed_bits": self.seed_bits,
            "full_seed_bits": self.full_seed_bits,
            "seed_bound": self.seed_bound,
            "measured_gap": self.measured_gap,
        }

    def manifest(self):
        return {"schema": 1, **self.report(), "cascade": self.cascade.manifest(), "full_cascade": self.params.to_dict()}


def build_design(group, n, k, eps=Fraction(1, 16), delta=None, stages=2, degrees=None, measure_gap=True, first_seed=0):
    """Bind the placed base alphabet to a full-scale schedule and a desk cascade.

    ``eps / 2^(n k)`` and ``delta`` must lie on the cascade grid
    (2^-(2^i) and 16^-i). ``stages``/``degrees`` control the truncated cascade
    used for sampling.
    """
    check_group(group)
    if n < BASE_QUBITS:
        raise DomainError(f"designs need n >= {BASE_QUBITS} qubits")
    if k < 1:
        raise DomainError("k must be positive")
    eps = _grid_fraction(eps, "eps")
    if not 0 < eps <= 1:
        raise RoundingError(f"eps={eps} must lie in (0, 1]")
    delta = default_delta(n, k) if delta is None else _grid_fraction(delta, "delta")
    core = CORE_GROUP[group]
    base = base_set(core, lazy=True)
    placements = tuple(itertools.combinations(range(1, n + 1), BASE_QUBITS))
    c = next_power_of_two(2 * len(base) * len(placements))
    params = cascade_params(c, delta, eps / 2 ** (n * k))
    degrees = desk_degrees(c, stages) if degrees is None else list(degrees)
    cascade = build_cascade(c, degrees, first_seed=first_seed)
    spec = DesignSpec(group, n, k, eps, delta, base, placements, c, cascade, params)
    if measure_gap:
        gap = base_gap(spec)
        spec = DesignSpec(group, n, k, eps, delta, base, placements, c, cascade, params, gap)
    return spec


def _haar_projector(spec, k):
    return MatchingProjector(spec.core_group, 2**spec.n, k)


def base_gap(spec, k=None):
    """Depth-0 error ||E rho(symbol) - Pi||, or None when too large to measure densely."""
    k = spec.k if k is None else k
    dim = 4 ** (spec.n * k)
    if dim > current_caps().dense_dim:
        return None
    try:
        proj = _haar_projector(spec, k).dense()
    except PreconditionError:
        return None
    moment = average_rho(spec.alphabet_matrices(), k)
    diff = moment - proj
    ev = np.linalg.eigvalsh((diff + dagger(diff)) / 2)
    return float(max(abs(ev[0]), abs(ev[-1])))


def _split_seed(spec, seed):
    value = seed.value if isinstance(seed, Seed) else int(seed)
    if not 0 <= value < spec.N:
        raise BoundsError(f"seed {value} outside [0, {spec.N})")
    if spec.lift_bit:
        return value >> 1, -1 if value & 1 else 1
    return value, 1


def sample_circuit(spec, seed):
    """Circuit for one seed: the monomial's symbols emitted last-to-first.

    Each non-identity symbol contributes one placed gate (its inverse when
    daggered), so the circuit has at most L gates. For O the low seed bit
    selects the first-column sign, emitted as a leading COL1SIGN.
    """
    index, b = _split_seed(spec, seed)
    gates = []
    phase = 1.0 + 0j
    for j in range(spec.L - 1, -1, -1):
        sym = walk_symbol(spec.cascade, index, j)
        placed = spec.symbol_gate(sym.index)
        if placed is None:
            continue
        g, ph = placed
        if sym.dagger:
            g, ph = g.inverse(), np.conj(ph)
        phase *= ph
        gates.append(g)
    if b < 0:
        gates.insert(0, Gate("COL1SIGN", ()))
    if abs(phase - 1) < 1e-15:
        phase = 1.0
    return Circuit(spec.n, tuple(gates), phase)


def monomial_matrix(spec, seed):
    """Oracle: product of alphabet matrices along the seed's monomial (with lift)."""
    index, b = _split_seed(spec, seed)
    mats = spec.alphabet_matrices()
    out = np.eye(2**spec.n, dtype=complex)
    for j in range(spec.L):
        sym = walk_symbol(spec.cascade, index, j)
        m = mats[sym.index]
        out = out @ (dagger(m) if sym.dagger else m)
    return lift_to_full_group(out, spec.group, b)


def lift_to_full_group(g, group, b=1):
    """O: scale the first column by b; U, SO, SU: unchanged."""
    g = np.array(g, copy=True)
    if group == "O":
        if b not in (1, -1):
            raise DomainError("the orthogonal lift takes b = +1 or -1")
        g[:, 0] *= b
    return g


def _lift_average(moment, spec, k):
    """Average a core moment over the O lift: M (Id + rho(diag(-1, 1, ...)))/2."""
    if not spec.lift_bit:
        return moment
    d = np.ones(2**spec.n)
    d[0] = -1.0
    flip = d
    for _ in range(2 * k - 1):
        flip = np.kron(flip, d)
    return moment @ np.diag(0.5 * (1 + flip))


def enumerate_design_moment(spec, k_eval=None, stages=None):
    """Exact design errors over all N monomials, stage by stage.

    Returns the report for the final stage with ``stage_errors`` listing the
    operator-norm error after 0, 1, ... stages.
    """
    k = spec.k if k_eval is None else k_eval
    caps = current_caps()
    cascade = spec.cascade if stages is None else spec.cascade.prefix(stages)
    count = cascade.N << spec.lift_bit
    if count > caps.enumeration:
        raise SizeError(f"{count} monomials exceed the enumeration cap {caps.enumeration}; estimate by Monte Carlo instead")
    proj = _haar_projector(spec, k).dense()
    stage_errors = []
    op = s1 = None
    for X in level_products(cascade, spec.alphabet_matrices()):
        moment = _lift_average(average_rho(X, k), spec, k)
        sv = np.linalg.svd(moment - proj, compute_uv=False)
        op, s1 = float(sv[0]), float(sv.sum())
        stage_errors.append(op)
    lam = stage_errors[0]
    return {
        "schema": 1,
        "group": spec.group,
        "n": spec.n,
        "k": k,
        "eps": str(spec.eps),
        "N": count,
        "L": cascade.L,
        "seed_bits": (count - 1).bit_length(),
        "measured_gap": lam,
        "design_error_op": op,
        "design_error_s1": s1,
        "f_bound": cascade.bound(min(lam, 1.0)),
        "mus": cascade.mus(),
        "stage_errors": stage_errors,
    }


def mc_design_moment(spec, samples, seed=0, k=None):
    """Monte-Carlo moment over uniformly random seeds (for designs too large to enumerate)."""
    k = spec.k if k is None else k
    rng = make_rng(seed, 0xD5)
    seeds = rng.integers(0, spec.N, size=samples)
    mats = np.stack([sample_circuit(spec, int(s)).matrix() for s in seeds])
    return average_rho(mats, k), mats
