"""Elementary gates, circuits and the fixed 4-qubit base gate sets.

The orthogonal base set is generated by the rotation ``Q = [[3/5, -4/5],
[4/5, 3/5]]`` on each of four wires and CNOT on each ordered wire pair; the
unitary one by H, S, T and CNOT. Both are closed under inverses and
negations. Wires are 1-based.
"""

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, PlacementError, ShapeError
from .linalg import check_group

BASE_QUBITS = 4

KINDS = ("Q", "Qinv", "H", "S", "Sinv", "T", "Tinv", "CNOT", "NegId", "COL1SIGN")
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}
_INVERSE = {
    "Q": "Qinv",
    "Qinv": "Q",
    "H": "H",
    "S": "Sinv",
    "Sinv": "S",
    "T": "Tinv",
    "Tinv": "T",
    "CNOT": "CNOT",
    "NegId": "NegId",
    "COL1SIGN": "COL1SIGN",
}
_ARITY = {"CNOT": 2, "COL1SIGN": 0}

_W8 = np.exp(1j * np.pi / 4)
_MATRICES = {
    "Q": np.array([[3, -4], [4, 3]]) / 5.0,
    "Qinv": np.array([[3, 4], [-4, 3]]) / 5.0,
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2.0),
    "S": np.diag([1, 1j]),
    "Sinv": np.diag([1, -1j]),
    "T": np.diag([1, _W8]),
    "Tinv": np.diag([1, np.conj(_W8)]),
    "CNOT": np.kron(np.diag([1.0, 0.0]), np.eye(2)) + np.kron(np.diag([0.0, 1.0]), np.array([[0, 1], [1, 0]])),
    "NegId": -np.eye(2),
}
for _m in _MATRICES.values():
    _m.setflags(write=False)


def arity(kind):
    return _ARITY.get(kind, 1)


@dataclass(frozen=True, order=False)
class Gate:
    kind: str
    wires: tuple
    sign: int = 1

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if self.kind != "COL1SIGN" and len(self.wires) != arity(self.kind):
            raise PlacementError(f"{self.kind} acts on {arity(self.kind)} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise PlacementError(f"duplicate wire in {self.wires}")

    def inverse(self):
        return Gate(_INVERSE[self.kind], self.wires, self.sign)

    def negate(self):
        return Gate(self.kind, self.wires, -self.sign)

    def sort_key(self):
        return (_KIND_RANK[self.kind], self.sign, self.wires)

    def to_dict(self):
        return {"kind": self.kind, "sign": self.sign, "wires": list(self.wires)}


def gate_matrix(g):
    """2x2 or 4x4 matrix of ``g``, including its sign."""
    if g.kind == "COL1SIGN":
        raise DomainError("COL1SIGN is a full-register pseudo-gate; use Circuit.matrix")
    return g.sign * _MATRICES[g.kind]


def apply_on_wires(op, wires, tensor, n):
    """Apply a 2^l x 2^l operator to the given wires of an n-qubit tensor.

    ``tensor`` has shape (2,)*n + rest; the wire axes are contracted with
    ``op`` in the listed order.
    """
    l = len(wires)
    op = np.asarray(op).reshape((2,) * (2 * l))
    axes = [w - 1 for w in wires]
    out = np.tensordot(op, tensor, axes=(list(range(l, 2 * l)), axes))
    return np.moveaxis(out, list(range(l)), axes)


def embed(op, wires, n):
    """2^n x 2^n matrix acting as ``op`` on ``wires`` and as identity elsewhere."""
    wires = tuple(int(w) for w in wires)
    if len(set(wires)) != len(wires):
        raise PlacementError(f"duplicate wire in {wires}")
    if any(not 1 <= w <= n for w in wires):
        raise PlacementError(f"wires {wires} outside [1, {n}]")
    if np.asarray(op).shape != (2 ** len(wires),) * 2:
        raise ShapeError("operator size does not match wire count")
    dim = 2**n
    eye = np.eye(dim, dtype=np.result_type(op, float)).reshape((2,) * n + (dim,))
    return apply_on_wires(op, wires, eye, n).reshape(dim, dim)


def embed_gate(g, wires=None, n=None):
    """Place gate ``g`` on ``wires`` (default: its own wires) of an n-qubit register."""
    wires = g.wires if wires is None else tuple(wires)
    n = max(wires) if n is None else n
    if g.kind == "COL1SIGN":
        d = np.ones(2**n)
        d[0] = -1.0
        return g.sign * np.diag(d)
    return embed(gate_matrix(g), wires, n)


def place(g, mapping):
    """Relabel the wires of ``g`` through ``mapping`` (local wire -> global wire)."""
    return Gate(g.kind, tuple(mapping[w - 1] for w in g.wires), g.sign)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; ``gates[0]`` is applied first.

    ``COL1SIGN`` is a register-wide pseudo-gate, diag(-1, 1, ..., 1), used to
    flip the sign of the first column when lifting to the full orthogonal group.
    """

    n: int
    gates: tuple = ()
    phase: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 1 <= w <= self.n for w in g.wires):
                raise PlacementError(f"gate {g} outside [1, {self.n}]")

    def __len__(self):
        return len(self.gates)

    def matrix(self, fold="left"):
        dim = 2**self.n
        if fold == "left":
            state = np.eye(dim, dtype=complex).reshape((2,) * self.n + (dim,))
            for g in self.gates:
                if g.kind == "COL1SIGN":
                    state = state.reshape(dim, dim)
                    state = embed_gate(g, n=self.n) @ state
                    state = state.reshape((2,) * self.n + (dim,))
                else:
                    state = apply_on_wires(gate_matrix(g), g.wires, state, self.n)
            out = state.reshape(dim, dim)
        elif fold == "right":
            out = np.eye(dim, dtype=complex)
            for g in reversed(self.gates):
                out = out @ embed_gate(g, n=self.n)
        else:
            raise ValueError(fold)
        return self.phase * out

    def to_dict(self):
        ph = complex(self.phase)
        return {
            "schema": 1,
            "n": self.n,
            "gates": [g.to_dict() for g in self.gates],
            "phase": [ph.real, ph.imag],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data):
        gates = [Gate(d["kind"], tuple(d["wires"]), d.get("sign", 1)) for d in data["gates"]]
        re, im = data.get("phase", [1.0, 0.0])
        return cls(int(data["n"]), tuple(gates), complex(re, im))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _generators(group):
    wires = range(1, BASE_QUBITS + 1)
    one_qubit = ("Q",) if group == "SO" else ("H", "S", "T")
    gens = [Gate(kind, (j,)) for kind in one_qubit for j in wires]
    gens += [Gate("CNOT", (i, j)) for i, j in itertools.permutations(wires, 2)]
    return gens


def _closure(gens):
    seen = set()
    frontier = list(gens)
    while frontier:
        g = frontier.pop()
        if g in seen:
            continue
        seen.add(g)
        frontier.extend([g.inverse(), g.negate()])
    return sorted(seen, key=Gate.sort_key)


@dataclass(frozen=True)
class BaseSet:
    """Multiset of 4-qubit gates closed under inverse and negation.

    ``phases[i]`` rescales element ``i`` to determinant one (all ones for the
    gate sets used here, since every generator already has determinant one
    once embedded in 16 dimensions).
    """

    group: str
    elements: tuple
    phases: tuple
    lazy: bool = False
    n0: int = BASE_QUBITS
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.elements)

    @property
    def identity_weight(self):
        return 0.5 if self.lazy else 0.0

    def matrices(self):
        """Stack of 16x16 element matrices (identity slots excluded)."""
        if "m" not in self._cache:
            mats = np.array([ph * embed_gate(g, n=self.n0) for g, ph in zip(self.elements, self.phases)])
            if self.group == "SO":
                mats = mats.real
            mats.setflags(write=False)
            self._cache["m"] = mats
        return self._cache["m"]

    def index(self, gate):
        return self.elements.index(gate)

    def inverse_index(self, i):
        return self.index(self.elements[i].inverse())


def _det_phase(g):
    det = np.linalg.det(embed_gate(g, n=BASE_QUBITS))
    # principal 16th root of 1/det
    return complex(np.exp(-1j * np.angle(det) / 2**BASE_QUBITS))


@lru_cache(maxsize=None)
def _base_elements(group):
    elems = tuple(_closure(_generators(group)))
    if group == "SO":
        phases = (1.0,) * len(elems)
    else:
        phases = tuple(_det_phase(g) for g in elems)
        phases = tuple(1.0 if abs(p - 1) < 1e-12 else p for p in phases)
    return elems, phases


def base_set(group, lazy=False):
    """The 4-qubit base multiset for ``SO`` or ``SU``, in (kind, sign, wires) order."""
    check_group(group, ("SO", "SU"))
    elems, phases = _base_elements(group)
    return BaseSet(group, elems, phases, lazy)
