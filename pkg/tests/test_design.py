import json
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from designforge.caps import Caps, use_caps
from designforge.design import (
    Seed,
    build_design,
    default_delta,
    desk_degrees,
    enumerate_design_moment,
    lift_to_full_group,
    mc_design_moment,
    monomial_matrix,
    next_power_of_two,
    sample_circuit,
)
from designforge.errors import BoundsError, DomainError, RoundingError, SizeError
from designforge.moments import average_rho
from designforge.schur_weyl import haar_projector


@lru_cache(maxsize=None)
def design(group, stages=2):
    return build_design(group, 4, 1, stages=stages, measure_gap=False)


def test_helpers():
    assert next_power_of_two(80) == 128 and next_power_of_two(128) == 128
    assert default_delta(4, 1) == Fraction(1, 16)
    assert default_delta(4, 2) == Fraction(1, 256)
    assert desk_degrees(128, 2) == [16, 16]
    assert desk_degrees(4, 3) == [4, 16, 16]


@pytest.mark.parametrize("group,active,weight", [("SO", 40, 0.6875), ("SU", 64, 0.5)])
def test_alphabet_shape(group, active, weight):
    spec = design(group)
    assert spec.c == 128 and spec.active == active
    assert spec.identity_weight == weight
    assert spec.N == 128 * 16 * 16 and spec.L == 4
    assert spec.seed_bits == 15
    mats = spec.alphabet_matrices()
    np.testing.assert_allclose(mats[active:], np.broadcast_to(np.eye(16), (128 - active, 16, 16)))
    # inverse closed as a multiset
    flat = mats.reshape(len(mats), -1)
    for m in mats:
        assert np.abs(flat - m.conj().T.reshape(-1)).max(axis=1).min() < 1e-12


def test_full_scale_seed_length():
    spec = design("SO")
    assert spec.full_seed_bits == 149
    assert spec.full_seed_bits <= spec.seed_bound == 160
    assert build_design("O", 4, 1, stages=1, measure_gap=False).full_seed_bits == 150


def test_placements_for_larger_registers():
    # eps / 2^5 must land on the grid 2^-(2^i)
    spec = build_design("SO", 5, 1, eps=Fraction(1, 8), stages=1, measure_gap=False)
    assert len(spec.placements) == 5
    assert spec.c == 512
    g, _ = spec.symbol_gate(40 * 4)  # first element on the last subset (2, 3, 4, 5)
    assert set(g.wires) <= {2, 3, 4, 5}


@pytest.mark.parametrize("group", ["SO", "SU", "O", "U"])
def test_circuits_match_monomial_products(group):
    spec = design(group)
    rng = np.random.default_rng(0)
    for seed in list(rng.integers(0, spec.N, 40)) + [0, spec.N - 1]:
        c = sample_circuit(spec, int(seed))
        np.testing.assert_allclose(c.matrix(), monomial_matrix(spec, int(seed)), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**15 - 1))
def test_sampled_circuits_lie_in_the_group(seed):
    for group in ("SO", "SU"):
        m = sample_circuit(design(group), seed).matrix()
        assert np.linalg.det(m) == pytest.approx(1)
        if group == "SO":
            np.testing.assert_allclose(m.imag, 0, atol=1e-12)


def test_orthogonal_lift_sign():
    spec = design("O")
    assert spec.N == 2 * design("SO").N
    c_even, c_odd = sample_circuit(spec, 10), sample_circuit(spec, 11)
    assert np.linalg.det(c_even.matrix()).real == pytest.approx(1)
    assert np.linalg.det(c_odd.matrix()).real == pytest.approx(-1)
    assert c_odd.gates[0].kind == "COL1SIGN"
    # same core monomial, first column flipped
    np.testing.assert_allclose(c_odd.matrix(), lift_to_full_group(c_even.matrix(), "O", -1), atol=1e-12)
    with pytest.raises(DomainError):
        lift_to_full_group(np.eye(2), "O", 2)


def test_circuit_length_at_most_L():
    spec = design("SU")
    for seed in range(0, spec.N, 97):
        assert len(sample_circuit(spec, seed)) <= spec.L


def test_depth_zero_design_emits_single_base_gate():
    spec = build_design("SO", 4, 1, stages=0, measure_gap=False)
    assert spec.N == spec.c and spec.L == 1
    for i in range(spec.active):
        g, _ = spec.symbol_gate(i)
        assert sample_circuit(spec, i).gates == (g,)
    assert sample_circuit(spec, spec.c - 1).gates == ()


def test_seed_bounds():
    spec = design("SO")
    with pytest.raises(BoundsError):
        sample_circuit(spec, spec.N)
    with pytest.raises(BoundsError):
        Seed(8, 3)
    assert sample_circuit(spec, Seed(7, 15)) == sample_circuit(spec, 7)


@pytest.mark.parametrize("name,group,seed", [("sample_SO_seed7", "SO", 7), ("sample_SU_seed1234", "SU", 1234)])
def test_golden_circuits(golden, name, group, seed):
    expected = json.loads((golden / f"{name}.json").read_text())
    c = sample_circuit(design(group), seed).to_dict()
    assert c["gates"] == expected["gates"]
    assert c["phase"] == expected["phase"]


def test_build_errors():
    with pytest.raises(DomainError):
        build_design("SO", 3, 1, measure_gap=False)
    with pytest.raises(DomainError):
        build_design("SO", 4, 0, measure_gap=False)
    with pytest.raises(RoundingError, match="grid"):
        build_design("SO", 4, 1, eps=Fraction(1, 3), measure_gap=False)
    with pytest.raises(RoundingError, match="grid"):
        build_design("SO", 4, 1, delta=Fraction(1, 8), measure_gap=False)


def test_enumeration_tracks_cascade_bound():
    spec = design("SU", 1)
    report = enumerate_design_moment(spec)
    assert report["schema"] == 1
    assert report["N"] == spec.N == 2048
    assert len(report["stage_errors"]) == 2
    assert report["design_error_op"] <= report["f_bound"] + 1e-9
    assert report["design_error_op"] <= report["design_error_s1"]


def test_depth_zero_error_is_alphabet_gap_and_complete_stage_squares_it():
    spec = build_design("SO", 4, 1, stages=1, degrees=[128], measure_gap=True)
    report = enumerate_design_moment(spec)
    lam, squared = report["stage_errors"]
    assert lam == pytest.approx(spec.measured_gap, abs=1e-12)
    assert squared == pytest.approx(lam**2, abs=1e-10)


@pytest.mark.parametrize("group", ["SO", "SU"])
def test_stage_errors_are_monotone(group):
    errors = enumerate_design_moment(design(group))["stage_errors"]
    assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))


def test_lift_symmetrizes_the_determinant():
    spec = build_design("O", 4, 1, stages=1, measure_gap=False)
    dets = [np.linalg.det(sample_circuit(spec, s).matrix()).real for s in range(spec.N)]
    assert abs(np.mean(dets)) < 1e-9


def test_enumeration_agrees_with_sampling_every_seed():
    spec = build_design("SO", 4, 1, stages=1, degrees=[16], measure_gap=False)
    mats = np.stack([sample_circuit(spec, s).matrix().real for s in range(spec.N)])
    moment = average_rho(mats, 1)
    err = np.linalg.norm(moment - haar_projector("SO", 16, 1), 2)
    assert enumerate_design_moment(spec)["design_error_op"] == pytest.approx(err, abs=1e-10)


def test_orthogonal_enumeration_uses_lift():
    spec = build_design("O", 4, 1, stages=1, degrees=[16], measure_gap=False)
    mats = np.stack([sample_circuit(spec, s).matrix().real for s in range(spec.N)])
    err = np.linalg.norm(average_rho(mats, 1) - haar_projector("O", 16, 1), 2)
    assert enumerate_design_moment(spec)["design_error_op"] == pytest.approx(err, abs=1e-10)


def test_enumeration_cap():
    with use_caps(Caps(enumeration=100)):
        with pytest.raises(SizeError):
            enumerate_design_moment(design("SO", 1))


def test_mc_design_moment():
    moment, mats = mc_design_moment(design("SO"), 50, seed=3)
    assert mats.shape == (50, 16, 16) and moment.shape == (256, 256)
