import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from designforge.errors import DomainError, PlacementError, ShapeError
from designforge.gates import KINDS, Circuit, Gate, base_set, embed, embed_gate, gate_matrix, place

SWAP = np.eye(4)[[0, 2, 1, 3]]


def _read_base(path):
    out = []
    for line in path.read_text().splitlines():
        sign, kind, wires = line.split()
        out.append(Gate(kind, tuple(int(w) for w in wires.split(",")), int(sign)))
    return out


def test_cnot_control_is_first_wire():
    cnot = gate_matrix(Gate("CNOT", (1, 2)))
    assert np.array_equal(cnot @ np.eye(4)[:, 2], np.eye(4)[:, 3])
    # reversed control: SWAP CNOT(1,2) SWAP
    np.testing.assert_array_equal(embed_gate(Gate("CNOT", (2, 1))), SWAP @ cnot @ SWAP)


def test_s_gate_is_phase():
    np.testing.assert_allclose(gate_matrix(Gate("S", (1,))), np.diag([1, 1j]))
    np.testing.assert_allclose(gate_matrix(Gate("T", (1,))) @ gate_matrix(Gate("T", (1,))), np.diag([1, 1j]))


def test_q_rotation_entries():
    q = gate_matrix(Gate("Q", (1,)))
    np.testing.assert_allclose(q, [[0.6, -0.8], [0.8, 0.6]])


@pytest.mark.parametrize("kind", [k for k in KINDS if k != "COL1SIGN"])
def test_inverse_gate_is_adjoint(kind):
    wires = (1, 2) if kind == "CNOT" else (1,)
    g = Gate(kind, wires, -1)
    np.testing.assert_allclose(gate_matrix(g.inverse()) @ gate_matrix(g), np.eye(2 ** len(wires)), atol=1e-12)


def test_embed_matches_kron_on_adjacent_wires():
    h = gate_matrix(Gate("H", (1,)))
    np.testing.assert_allclose(embed(h, (2,), 3), np.kron(np.kron(np.eye(2), h), np.eye(2)))
    cnot = gate_matrix(Gate("CNOT", (1, 2)))
    np.testing.assert_allclose(embed(cnot, (2, 3), 3), np.kron(np.eye(2), cnot))


def test_embed_non_adjacent_by_conjugation():
    cnot = gate_matrix(Gate("CNOT", (1, 2)))
    swap23 = np.kron(np.eye(2), SWAP)
    expected = swap23 @ np.kron(cnot, np.eye(2)) @ swap23
    np.testing.assert_allclose(embed(cnot, (1, 3), 3), expected)


def test_embed_errors():
    with pytest.raises(PlacementError):
        embed(np.eye(4), (1, 1), 2)
    with pytest.raises(PlacementError):
        embed(np.eye(2), (3,), 2)
    with pytest.raises(ShapeError):
        embed(np.eye(4), (1,), 2)
    with pytest.raises(PlacementError):
        Gate("CNOT", (1,))
    with pytest.raises(DomainError):
        Gate("X", (1,))


def test_place_relabels():
    g = place(Gate("CNOT", (1, 4), -1), (2, 3, 5, 7))
    assert g == Gate("CNOT", (2, 7), -1)


def test_col1sign_scales_first_column():
    m = embed_gate(Gate("COL1SIGN", ()), n=2)
    assert np.array_equal(np.diag(m), [-1, 1, 1, 1])


@pytest.mark.parametrize("group,size", [("SO", 40), ("SU", 64)])
def test_base_set_closure(group, size):
    base = base_set(group)
    assert len(base) == size
    elems = set(base.elements)
    for g in base.elements:
        assert g.inverse() in elems
        assert g.negate() in elems
    mats = base.matrices()
    np.testing.assert_allclose(np.linalg.det(mats), 1, atol=1e-10)
    if group == "SO":
        assert np.isrealobj(mats)
    assert all(p == 1 for p in base.phases)


@pytest.mark.parametrize("group", ["SO", "SU"])
def test_base_set_order_is_frozen(group, golden):
    expected = _read_base(golden / f"base_set_{group}.txt")
    assert list(base_set(group).elements) == expected


def test_base_set_inverse_index():
    base = base_set("SU")
    mats = base.matrices()
    for i in range(len(base)):
        j = base.inverse_index(i)
        np.testing.assert_allclose(mats[j] @ mats[i], np.eye(16), atol=1e-12)


def test_lazy_identity_weight():
    assert base_set("SO", lazy=True).identity_weight == 0.5
    assert base_set("SO").identity_weight == 0.0
    with pytest.raises(DomainError):
        base_set("O")


def _random_circuit(draw_ints, n):
    gates = []
    for kind, a, b, sign in draw_ints:
        kind = KINDS[kind % (len(KINDS) - 1)]
        a = a % n + 1
        if kind == "CNOT":
            b = b % (n - 1) + 1
            b = b + 1 if b >= a else b
            wires = (a, b)
        else:
            wires = (a,)
        gates.append(Gate(kind, wires, 1 if sign else -1))
    return gates


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 4),
    spec=st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.booleans()), max_size=8),
    col=st.booleans(),
)
def test_circuit_folds_agree_and_roundtrip(n, spec, col):
    gates = _random_circuit(spec, n)
    if col:
        gates.insert(0, Gate("COL1SIGN", ()))
    c = Circuit(n, gates, np.exp(0.3j))
    left, right = c.matrix("left"), c.matrix("right")
    np.testing.assert_allclose(left, right, atol=1e-12)
    # gates[0] acts first
    product = np.eye(2**n, dtype=complex)
    for g in gates:
        product = embed_gate(g, n=n) @ product
    np.testing.assert_allclose(left, np.exp(0.3j) * product, atol=1e-12)
    back = Circuit.from_json(c.to_json())
    assert back.gates == c.gates and back.n == n
    np.testing.assert_allclose(back.matrix(), left, atol=1e-12)


def test_circuit_json_schema():
    c = Circuit(4, (Gate("Q", (2,), -1), Gate("CNOT", (1, 3))))
    data = json.loads(c.to_json())
    assert data == {
        "schema": 1,
        "n": 4,
        "gates": [{"kind": "Q", "sign": -1, "wires": [2]}, {"kind": "CNOT", "sign": 1, "wires": [1, 3]}],
        "phase": [1.0, 0.0],
    }
    with pytest.raises(PlacementError):
        Circuit(2, (Gate("H", (3,)),))
