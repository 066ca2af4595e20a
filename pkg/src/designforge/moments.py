"""Moment operators E[g^{(x)k} (x) conj(g)^{(x)k}] and their distance to Haar.

A moment is described by a :class:`MomentSpec`: a finite (weighted) multiset
of D x D matrices, the exact Haar projector, or a seeded Monte-Carlo Haar
estimate. Operators up to ``caps.dense_dim`` are materialized; larger ones
are applied matrix-free through :class:`KronApplier`.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .caps import current_caps
from .errors import DomainError, ShapeError, SizeError, SymmetryError
from .linalg import check_group, dagger, haar_samples, is_hermitian, kron_all, make_rng, matrix_norm, power_norm
from .schur_weyl import MatchingProjector

MC_CHUNK = 2000


def rho_dim(D, k):
    return D ** (2 * k)


def rho_kk(g, k, dense=True):
    """g^{(x)k} (x) conj(g)^{(x)k}, dense or as a :class:`KronApplier`."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeError("rho_kk expects a square matrix")
    if not dense:
        return KronApplier(g, k)
    dim = rho_dim(g.shape[0], k)
    if dim * dim > current_caps().max_entries:
        raise SizeError(f"dense rho_kk of dimension {dim} exceeds cap; use dense=False")
    return kron_all([g] * k + [np.conj(g)] * k)


class KronApplier:
    """Applies g^{(x)k} (x) conj(g)^{(x)k} to vectors without forming it."""

    def __init__(self, g, k):
        self.g = np.asarray(g)
        self.k = k
        self.D = self.g.shape[0]
        self.dim = rho_dim(self.D, k)

    def _apply(self, v, g):
        D, k = self.D, self.k
        t = np.asarray(v).reshape((D,) * (2 * k))
        gc = np.conj(g)
        for ax in range(2 * k):
            op = g if ax < k else gc
            t = np.moveaxis(np.tensordot(op, t, axes=(1, ax)), 0, ax)
        return t.reshape(-1)

    def matvec(self, v):
        return self._apply(v, self.g)

    def rmatvec(self, v):
        return self._apply(v, dagger(self.g))


@dataclass(frozen=True)
class MomentSpec:
    """What to average.

    ``source`` is ``"multiset"``, ``"haar"`` or ``"haar_mc"``. A multiset moment
    is ``identity_weight * Id + (1 - identity_weight) * sum_i weights[i] rho(g_i)``
    with uniform weights by default.
    """

    group: str
    D: int
    k: int
    source: str = "multiset"
    elements: object = None
    weights: object = None
    identity_weight: float = 0.0
    samples: int = 0
    seed: int = 0
    hermitian_required: bool = False

    def __post_init__(self):
        check_group(self.group)
        if self.source not in ("multiset", "haar", "haar_mc"):
            raise DomainError(f"unknown moment source {self.source!r}")
        if self.source == "multiset":
            if self.elements is None or len(self.elements) == 0:
                raise DomainError("multiset moment needs at least one element")
            els = np.asarray(self.elements)
            if els.ndim != 3 or els.shape[1:] != (self.D, self.D):
                raise ShapeError(f"elements must have shape (count, {self.D}, {self.D})")
            object.__setattr__(self, "elements", els)
            if self.weights is not None:
                w = np.asarray(self.weights, dtype=float)
                if w.shape != (len(els),) or abs(w.sum() - 1) > 1e-12 or (w < 0).any():
                    raise DomainError("weights must be a probability vector over the elements")
                object.__setattr__(self, "weights", w)
        if not 0 <= self.identity_weight <= 1:
            raise DomainError("identity weight must lie in [0, 1]")
        if self.source == "haar_mc" and self.samples < 1:
            raise DomainError("Monte-Carlo moment needs a positive sample count")

    @property
    def dim(self):
        return rho_dim(self.D, self.k)

    @classmethod
    def multiset(cls, group, mats, k, **kw):
        mats = np.asarray(mats)
        return cls(group, mats.shape[-1], k, "multiset", mats, **kw)

    @classmethod
    def haar(cls, group, D, k):
        return cls(group, D, k, "haar")

    @classmethod
    def haar_mc(cls, group, D, k, samples=None, seed=0):
        return cls(group, D, k, "haar_mc", samples=samples or current_caps().mc_samples, seed=seed)


def lazy(spec):
    """Half-identity mixture: moment(lazy(P)) = Id/2 + moment(P)/2."""
    if spec.source != "multiset":
        raise DomainError("only finite multisets have a lazy version")
    return replace(spec, identity_weight=0.5 + 0.5 * spec.identity_weight)


def average_rho(mats, k, weights=None):
    """sum_i w_i rho_kk(mats[i], k) as a dense matrix (uniform weights by default)."""
    mats = np.asarray(mats)
    count, D = mats.shape[0], mats.shape[1]
    dim = rho_dim(D, k)
    if dim * dim > current_caps().max_entries:
        raise SizeError(f"dense moment of dimension {dim} exceeds cap")
    if k > 1:
        mats = np.stack([kron_all([m] * k) for m in mats])
    Dk = mats.shape[1]
    y = mats.reshape(count, Dk * Dk)
    if weights is None:
        acc = y.T @ np.conj(y) / count
    else:
        acc = (y * np.asarray(weights)[:, None]).T @ np.conj(y)
    acc = acc.reshape(Dk, Dk, Dk, Dk).transpose(0, 2, 1, 3).reshape(dim, dim)
    if np.isrealobj(mats):
        acc = acc.real
    return acc


def _mc_chunk(group, D, k, seed, chunk, count):
    rng = make_rng(seed, chunk)
    return average_rho(haar_samples(group, D, count, rng), k) * count


def mc_moment(group, D, k, samples, seed=0, workers=1):
    """Monte-Carlo Haar moment; chunks use independent streams and are summed in order."""
    sizes = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        sizes.append(samples % MC_CHUNK)
    jobs = [(group, D, k, seed, i, n) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(*a), jobs))
    else:
        parts = [_mc_chunk(*a) for a in jobs]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total / samples


def _check_symmetric(spec, moment):
    if spec.hermitian_required and not is_hermitian(moment, atol=1e-10):
        raise SymmetryError("moment is not Hermitian; the multiset is not inverse-closed")


def moment_operator(spec, dense=True, workers=1):
    """Average of rho_kk described by ``spec``; dense matrix or a scipy LinearOperator."""
    if spec.source == "haar":
        proj = MatchingProjector(spec.group, spec.D, spec.k)
        return proj.dense() if dense else _as_operator(proj.dim, proj.apply, proj.apply)
    if spec.source == "haar_mc":
        return mc_moment(spec.group, spec.D, spec.k, spec.samples, spec.seed, workers)
    w0 = spec.identity_weight
    if dense and spec.dim <= current_caps().dense_dim:
        avg = average_rho(spec.elements, spec.k, spec.weights)
        out = w0 * np.eye(spec.dim) + (1 - w0) * avg if w0 else avg
        _check_symmetric(spec, out)
        return out
    if dense:
        raise SizeError(f"moment of dimension {spec.dim} exceeds dense cap; use dense=False")
    appliers = [KronApplier(g, spec.k) for g in spec.elements]
    weights = spec.weights if spec.weights is not None else np.full(len(appliers), 1 / len(appliers))

    def mv(v):
        out = sum(w * a.matvec(v) for w, a in zip(weights, appliers))
        return w0 * v + (1 - w0) * out if w0 else out

    def rmv(v):
        out = sum(w * a.rmatvec(v) for w, a in zip(weights, appliers))
        return w0 * v + (1 - w0) * out if w0 else out

    return _as_operator(spec.dim, mv, rmv)


def _as_operator(dim, mv, rmv):
    return LinearOperator((dim, dim), matvec=mv, rmatvec=rmv, dtype=complex)


def _haar_for(spec, haar):
    if haar is None:
        return MatchingProjector(spec.group, spec.D, spec.k)
    return haar


def spectral_gap(spec, haar=None, tol=1e-8):
    """||moment(spec) - Pi_Haar||_op.

    Dense eigensolve up to ``caps.dense_dim``; beyond that Lanczos (or power
    iteration for non-Hermitian moments) on the complement of the Haar
    invariant subspace, which moment and projector both fix.
    """
    if spec.source == "haar":
        return 0.0
    if spec.dim <= current_caps().dense_dim:
        proj = haar if isinstance(haar, np.ndarray) else _haar_for(spec, haar).dense()
        diff = moment_operator(spec) - proj
        if is_hermitian(diff, atol=1e-10):
            ev = np.linalg.eigvalsh((diff + dagger(diff)) / 2)
            return float(max(abs(ev[0]), abs(ev[-1])))
        return matrix_norm(diff)
    proj = _haar_for(spec, haar)
    op = moment_operator(spec, dense=False)
    basis = proj.basis

    def deflate(v):
        return v - basis @ (basis.T @ v)

    def mv(v):
        v = deflate(v)
        return deflate(op.matvec(v))

    def rmv(v):
        v = deflate(v)
        return deflate(op.rmatvec(v))

    if spec.source == "multiset" and _is_inverse_closed(spec):
        lop = LinearOperator((spec.dim, spec.dim), matvec=mv, dtype=complex)
        vals = eigsh(lop, k=1, which="LM", tol=tol, return_eigenvectors=False, v0=_start(spec.dim))
        return float(abs(vals[0]))
    return power_norm(mv, spec.dim, rmatvec=rmv, tol=tol)


def _start(dim):
    rng = make_rng(0, 0x5EED)
    return rng.standard_normal(dim) + 0j


def _is_inverse_closed(spec):
    mats = spec.elements
    if len(mats) > 512:
        return False
    flat = mats.reshape(len(mats), -1)
    inv = dagger(mats).reshape(len(mats), -1)
    used = np.zeros(len(mats), dtype=bool)
    for row in inv:
        hits = np.where(~used & (np.abs(flat - row).max(axis=1) <= 1e-12))[0]
        if not hits.size:
            return False
        used[hits[0]] = True
    return spec.weights is None


def design_error(spec, haar=None, norm="operator"):
    """Chosen norm of moment(spec) - Pi_Haar."""
    if norm == "operator":
        return spectral_gap(spec, haar)
    if norm != "schatten1":
        raise DomainError(f"unsupported norm {norm!r}")
    if spec.source == "haar":
        return 0.0
    proj = haar if isinstance(haar, np.ndarray) else _haar_for(spec, haar).dense()
    return matrix_norm(moment_operator(spec) - proj, "schatten1")


def moment_errors(moment, proj):
    """(operator, schatten-1) norms of a dense moment minus a dense projector."""
    diff = moment - proj
    s = np.linalg.svd(diff, compute_uv=False)
    return float(s[0]), float(s.sum())
