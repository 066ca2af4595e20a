import numpy as np
import pytest

from designforge.caps import Caps, use_caps
from designforge.errors import DomainError, ShapeError, SizeError, SymmetryError
from designforge.gates import base_set
from designforge.linalg import haar_samples, make_rng
from designforge.moments import (
    KronApplier,
    MomentSpec,
    average_rho,
    design_error,
    lazy,
    mc_moment,
    moment_errors,
    moment_operator,
    rho_kk,
    spectral_gap,
)
from designforge.schur_weyl import haar_projector


def _inverse_closed_family(D, count, seed):
    g = haar_samples("SU", D, count, make_rng(seed))
    return np.concatenate([g, g.conj().transpose(0, 2, 1)])


def test_rho_kk_layout():
    g = np.array([[1, 2], [3, 4j]])
    expected = np.kron(np.kron(g, g), np.kron(g.conj(), g.conj()))
    np.testing.assert_allclose(rho_kk(g, 2), expected)
    with pytest.raises(ShapeError):
        rho_kk(np.ones((2, 3)), 1)


def test_rho_kk_is_homomorphism():
    rng = make_rng(3)
    a, b = haar_samples("U", 3, 2, rng)
    np.testing.assert_allclose(rho_kk(a @ b, 2), rho_kk(a, 2) @ rho_kk(b, 2), atol=1e-12)


def test_kron_applier_matches_dense():
    g = haar_samples("U", 3, 1, make_rng(1))[0]
    app = KronApplier(g, 2)
    v = make_rng(2).standard_normal(81) + 0j
    dense = rho_kk(g, 2)
    np.testing.assert_allclose(app.matvec(v), dense @ v, atol=1e-12)
    np.testing.assert_allclose(app.rmatvec(v), dense.conj().T @ v, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_average_rho_matches_explicit_sum(k):
    mats = haar_samples("U", 2, 5, make_rng(k))
    w = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    explicit = sum(wi * rho_kk(m, k) for wi, m in zip(w, mats))
    np.testing.assert_allclose(average_rho(mats, k, w), explicit, atol=1e-12)
    np.testing.assert_allclose(average_rho(mats, k), sum(rho_kk(m, k) for m in mats) / 5, atol=1e-12)


def test_lazy_moment():
    mats = _inverse_closed_family(2, 3, 0)
    spec = MomentSpec.multiset("SU", mats, 1)
    m = moment_operator(spec)
    np.testing.assert_allclose(moment_operator(lazy(spec)), 0.5 * np.eye(4) + 0.5 * m, atol=1e-12)
    ev = np.linalg.eigvalsh(moment_operator(lazy(spec)))
    assert ev.min() >= -1e-12


def test_matrix_free_operator_matches_dense():
    mats = _inverse_closed_family(3, 2, 5)
    spec = lazy(MomentSpec.multiset("SU", mats, 1))
    op = moment_operator(spec, dense=False)
    v = make_rng(6).standard_normal(9) + 0j
    np.testing.assert_allclose(op.matvec(v), moment_operator(spec) @ v, atol=1e-12)


def test_spectral_gap_dense_and_matrix_free_agree():
    mats = _inverse_closed_family(3, 3, 7)
    spec = MomentSpec.multiset("SU", mats, 1)
    dense = spectral_gap(spec)
    with use_caps(Caps(dense_dim=4)):
        free = spectral_gap(spec, tol=1e-12)
    assert free == pytest.approx(dense, abs=1e-7)


def test_haar_moment_has_zero_gap():
    spec = MomentSpec.haar("SO", 5, 1)
    assert spectral_gap(spec) == 0.0
    np.testing.assert_allclose(moment_operator(spec), haar_projector("SO", 5, 1))


def test_design_error_norms():
    spec = lazy(MomentSpec.multiset("SO", base_set("SO").matrices(), 1))
    op = design_error(spec)
    s1 = design_error(spec, norm="schatten1")
    diff = moment_operator(spec) - haar_projector("SO", 16, 1)
    assert (op, s1) == pytest.approx(moment_errors(moment_operator(spec), haar_projector("SO", 16, 1)))
    assert op == pytest.approx(np.linalg.norm(diff, 2))
    with pytest.raises(DomainError):
        design_error(spec, norm="frobenius")


def test_mc_moment_is_chunk_reproducible():
    a = mc_moment("SO", 3, 1, 4500, seed=11)
    b = mc_moment("SO", 3, 1, 4500, seed=11, workers=3)
    np.testing.assert_array_equal(a, b)
    assert np.linalg.norm(a - haar_projector("SO", 3, 1), 2) < 0.1


def test_hermitian_requirement():
    g = haar_samples("SU", 2, 2, make_rng(0))
    spec = MomentSpec.multiset("SU", g, 1, hermitian_required=True)
    with pytest.raises(SymmetryError):
        moment_operator(spec)


def test_spec_validation():
    with pytest.raises(DomainError):
        MomentSpec("SU", 2, 1, "multiset", None)
    with pytest.raises(ShapeError):
        MomentSpec("SU", 3, 1, "multiset", np.zeros((2, 2, 2)))
    with pytest.raises(DomainError):
        MomentSpec.multiset("SU", np.zeros((2, 2, 2)), 1, weights=[0.7, 0.7])
    with pytest.raises(DomainError):
        MomentSpec("SU", 2, 1, "haar_mc", samples=0)
    with pytest.raises(DomainError):
        lazy(MomentSpec.haar("SU", 2, 1))
    with use_caps(Caps(max_entries=100)):
        with pytest.raises(SizeError):
            rho_kk(np.eye(4), 1)
