from fractions import Fraction

import numpy as np
import pytest

from designforge.errors import DomainError, PreconditionError
from designforge.expanders import build_expander
from designforge.linalg import make_rng
from designforge.schur_weyl import haar_projector
from designforge.verify import (
    QubitMajorProjectors,
    check_base_gap,
    check_cascade_contraction,
    check_contraction,
    check_kappa_gram,
    check_perm_gap,
    check_projector_lemma,
    check_tau_bounds,
    check_trace_lemma,
    gram_product,
    large_m_applicable,
    projector_bound,
    random_algebra_element,
    random_contractions,
    random_projector_family,
    reptheory_coefficients,
    small_m_bound,
    split_swap,
    swap_basis,
    trace_lemma_bound,
    trace_lemma_exact,
    trace_lemma_samples,
)
from designforge.walks import build_cascade


def test_gram_product_values():
    assert gram_product(4, 1) == 1
    assert gram_product(4, 3) == Fraction(3, 2) * 2
    assert gram_product(64, 3) == Fraction(33, 32) * Fraction(34, 32)


@pytest.mark.parametrize("D,k", [(4, 1), (4, 3), (8, 2), (16, 4), (64, 2)])
def test_kappa_check_is_exact(D, k):
    report = check_kappa_gram(D, k)
    assert report.passed and report.tolerance == 0.0
    assert Fraction(report.details["sum"]) == gram_product(D, k)


def test_coefficients_at_D8():
    so = reptheory_coefficients(8, "SO")
    assert (so["c2"], so["c3"], so["c4"]) == (Fraction(3, 70), Fraction(13, 70), Fraction(33, 70))
    su = reptheory_coefficients(8, "SU")
    assert (su["c2"], su["c3"], su["c4"]) == (0, Fraction(4, 21), Fraction(10, 21))


def test_split_swap_oracle():
    D = 8
    half = D // 2
    # |x', a>|y', b> -> |y', a>|x', b> as an axis permutation
    expected = np.eye(D * D).reshape((half, 2, half, 2) + (D * D,)).transpose(2, 1, 0, 3, 4).reshape(D * D, D * D)
    np.testing.assert_array_equal(split_swap(D), expected)


@pytest.mark.parametrize("group,D", [("SO", 8), ("SU", 4), ("SU", 8)])
def test_coefficients_match_exact_twirl(group, D):
    """E[(g x g) S (g x g)^dagger] computed through the k=2 Haar projector."""
    S = split_swap(D)
    P = haar_projector(group, D, 2)
    twirl = (P @ S.reshape(-1)).reshape(D * D, D * D)
    c = reptheory_coefficients(D, group)
    q2, q3, q4 = swap_basis(D)
    expected = float(c["c2"]) * q2 + float(c["c3"]) * q3 + float(c["c4"]) * q4
    np.testing.assert_allclose(twirl, expected, atol=1e-12)


@pytest.mark.parametrize("group", ["SO", "SU"])
def test_trace_lemma_exact_matches_sampling(group):
    m = 4
    A = random_algebra_element(group, 2**m, make_rng(5))
    vals = trace_lemma_samples(A, m, group, 20000, seed=1)
    exact = trace_lemma_exact(A, m, group)
    assert abs(vals.mean() - exact) < 5 * vals.std() / np.sqrt(len(vals))
    assert exact >= trace_lemma_bound(m)


def test_random_algebra_element():
    a = random_algebra_element("SU", 8, make_rng(0))
    np.testing.assert_allclose(a, -a.conj().T)
    assert abs(np.trace(a)) < 1e-12 and np.linalg.norm(a) == pytest.approx(1)
    assert trace_lemma_bound(4) == pytest.approx(3 / 7)


def test_trace_lemma_check_small():
    report = check_trace_lemma(4, "SO", trials=4000, seed=2)
    assert report.passed
    assert report.details["exact_expectation"] >= report.bound
    with pytest.raises(DomainError):
        check_trace_lemma(3, "SO", trials=10)


def test_projector_bound_equality_for_orthogonal_blocks():
    eye = np.eye(6)
    projs = [np.outer(eye[i], eye[i]) + np.outer(eye[i + 3], eye[i + 3]) for i in range(3)]
    assert np.linalg.norm(sum(projs) / 3, 2) == pytest.approx(projector_bound(3, 0.0))


def test_random_projector_families():
    rng = make_rng(0)
    projs, P = random_projector_family(4, 20, rng, common=2)
    for p in projs:
        np.testing.assert_allclose(p @ p, p, atol=1e-10)
        np.testing.assert_allclose(p @ P, P, atol=1e-10)
    report = check_projector_lemma(10, seed=3)
    assert report.passed and len(report.details["instances"]) == 10


def _dense_tau(group, m, k):
    """Oracle in copy-major layout: 2k copies of m qubits."""
    full = haar_projector(group, 2**m, k)
    minus = haar_projector(group, 2 ** (m - 1), k)
    copies = 2 * k
    size = copies * m
    ops = []
    for i in range(m):
        # axes of kron(minus, Id): (copy c, qubit != i) in copy-major order, then qubit i of each copy
        big = np.kron(minus, np.eye(2**copies)).reshape((2,) * (2 * size))
        order = []
        for c in range(copies):
            for q in range(m):
                order.append(copies * (m - 1) + c if q == i else c * (m - 1) + (q if q < i else q - 1))
        ops.append(big.transpose(order + [size + o for o in order]).reshape(full.shape))
    avg = sum(ops) / m
    return np.linalg.eigvalsh(avg - full)[-1], ops, full


@pytest.mark.parametrize("group", ["SO", "SU"])
def test_tau_matches_dense_copy_major_oracle(group):
    dense, ops, full = _dense_tau(group, 4, 1)
    for op in ops:
        np.testing.assert_allclose(op @ op, op, atol=1e-10)
        np.testing.assert_allclose(op @ full, full, atol=1e-10)
    report = check_tau_bounds(group, 4, 1)
    assert report.measured == pytest.approx(dense, abs=1e-8)
    assert report.measured == pytest.approx(0.25, abs=1e-8)
    assert report.passed


def test_qubit_major_projector_is_projector():
    proj = QubitMajorProjectors("SU", 3, 1)
    v = make_rng(1).standard_normal(proj.dim)
    w = proj.full(v)
    np.testing.assert_allclose(proj.full(w), w, atol=1e-10)
    np.testing.assert_allclose(proj.minus(2, w), w, atol=1e-10)
    with pytest.raises(PreconditionError):
        QubitMajorProjectors("SO", 3, 2)


def test_tau_bound_shapes():
    assert small_m_bound(4) < 1
    assert not large_m_applicable(6, 1)
    assert not large_m_applicable(20, 1)
    assert large_m_applicable(22, 1)


def test_perm_gap_value():
    report = check_perm_gap(3, 2)
    assert report.passed
    assert report.measured == pytest.approx(0.7697, abs=1e-4)
    assert report.details["symmetric"]


@pytest.mark.parametrize("group,value", [("SO", 0.9078), ("SU", 0.9757)])
def test_base_gap_values(group, value):
    report = check_base_gap(group, 1)
    assert report.passed
    assert report.measured == pytest.approx(value, abs=1e-4)


def test_contraction_checks():
    fam = random_contractions(5, 4, 3, make_rng(0))
    assert np.linalg.norm(fam, ord=2, axis=(-2, -1)).max() <= 1 + 1e-12
    G = build_expander(64, 8)
    assert check_contraction(G, families=20).passed
    casc = build_cascade(8, [8, 8])
    assert check_cascade_contraction(casc, families=20).passed


def test_report_serialization():
    report = check_kappa_gram(16, 2)
    d = report.to_dict()
    assert d["schema"] == 1 and "runtime_ms" not in d and d["pass"] is True
    assert "runtime_ms" in report.to_dict(timing=True)
    assert report.line().startswith("PASS kappa")
