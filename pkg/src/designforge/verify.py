"""Numerical and exact checks of the quantitative claims behind the construction.

Every check returns a :class:`CheckReport`. Monte-Carlo checks carry their
standard error and the band they were judged against; exact checks use
rational arithmetic and zero tolerance.
"""

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .caps import current_caps
from .errors import DomainError, PreconditionError, SizeError
from .gates import base_set
from .linalg import check_group, dagger, haar_samples, make_rng
from .moments import MomentSpec, lazy, spectral_gap
from .schur_weyl import (
    Matching,
    enumerate_matchings,
    exact_inverse,
    gram_matrix,
    matching_gram,
    phi_state,
    simple_3bit_perms,
    wk_moment,
)
from .walks import f_mu, level_products


@dataclass
class CheckReport:
    name: str
    parameters: dict
    bound: float
    measured: float
    tolerance: float
    passed: bool
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self, timing=False):
        out = {
            "schema": 1,
            "name": self.name,
            "parameters": self.parameters,
            "bound": self.bound,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "details": self.details,
        }
        if timing:
            out["runtime_ms"] = self.runtime_ms
        return out

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        params = " ".join(f"{k}={v}" for k, v in self.parameters.items())
        return f"{flag} {self.name:<16} {params:<32} measured={self.measured:.6g} bound={self.bound:.6g}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = fn(*args, **kwargs)
        report.runtime_ms = (time.perf_counter() - start) * 1e3
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- matching Gram sums -----------------------------------------------------


def gram_product(D, k):
    """prod_{i=1}^{k-1} (1 + 2i/D) as an exact rational."""
    out = Fraction(1)
    for i in range(1, k):
        out *= 1 + Fraction(2 * i, D)
    return out


def kappa(D, k):
    return Fraction(10, 9) * Fraction(k * k, D)


@_timed
def check_kappa_gram(D, k):
    """Sum over all matchings M of <Phi_M|Phi_M0> against the closed product, exactly."""
    if k > current_caps().matching_k:
        raise SizeError(f"k={k} exceeds the matching cap")
    m0 = Matching.identity(k)
    total = sum((matching_gram(M, m0, D) for M in enumerate_matchings(k)), Fraction(0))
    product = gram_product(D, k)
    passed = total == product
    details = {"sum": str(total), "product": str(product)}
    if 9 * k * k <= D:
        bound = 1 + kappa(D, k)
        details["kappa_bound"] = str(bound)
        passed = passed and total <= bound
    return CheckReport("kappa", {"D": D, "k": k}, float(product), float(total), 0.0, passed, details=details)


# --- conjugated swap coefficients ------------------------------------------


def reptheory_coefficients(D, group):
    """Closed-form coefficients of E[(g (x) g) S (g (x) g)^dagger] on Q2, Q3, Q4."""
    D = Fraction(D)
    if group == "SO":
        den = (D - 1) * (D + 2)
        return {"c2": (D / 2 - 1) / den, "c3": (3 * D / 2 + 1) / den, "c4": (D / 2 - 1) * (D + 3) / den}
    den = (D - 1) * (D + 1)
    return {"c2": Fraction(0), "c3": (3 * D / 2) / den, "c4": (D * D / 2 - 2) / den}


def split_swap(D):
    """S|(x',a),(y',b)> = |(y',a),(x',b)>: swap all but the last qubit of two D-dim copies."""
    idx = np.arange(D * D)
    x, y = divmod(idx, D)
    xp, a = divmod(x, 2)
    yp, b = divmod(y, 2)
    image = (yp * 2 + a) * D + (xp * 2 + b)
    S = np.zeros((D * D, D * D))
    S[image, idx] = 1.0
    return S


def swap_basis(D):
    """Q2 = sum |aa><bb|, Q3 = Id, Q4 = SWAP on C^D (x) C^D."""
    v = np.eye(D).reshape(-1)
    q2 = np.outer(v, v)
    q3 = np.eye(D * D)
    q4 = np.eye(D * D).reshape(D, D, D, D).transpose(0, 1, 3, 2).reshape(D * D, D * D)
    return q2, q3, q4


def conjugated_swap_mc(group, D, trials, seed, chunk=2000):
    """Monte-Carlo mean of (g (x) g) S (g (x) g)^dagger with per-entry second moments."""
    S = split_swap(D)
    total = np.zeros((D * D, D * D), dtype=complex)
    sq = 0.0
    done = 0
    stream = 0
    while done < trials:
        count = min(chunk, trials - done)
        g = haar_samples(group, D, count, make_rng(seed, stream))
        gg = np.einsum("nij,nkl->nikjl", g, g).reshape(count, D * D, D * D)
        w = gg @ S @ dagger(gg)
        total += w.sum(axis=0)
        sq += float(np.sum(np.abs(w) ** 2))
        done += count
        stream += 1
    mean = total / trials
    return mean, sq / trials


@_timed
def check_reptheory_coeffs(m, group="SO", trials=None, seed=0, tolerance=0.02):
    """MC estimate of the conjugated split swap against c2 Q2 + c3 Q3 + c4 Q4."""
    if m not in (4, 5):
        raise DomainError("the coefficient check runs at m = 4 or 5")
    check_group(group, ("SO", "SU"))
    trials = trials or current_caps().mc_samples
    D = 2 ** (m - 1)
    coeffs = reptheory_coefficients(D, group)
    q2, q3, q4 = swap_basis(D)
    target = float(coeffs["c2"]) * q2 + float(coeffs["c3"]) * q3 + float(coeffs["c4"]) * q4
    mean, second = conjugated_swap_mc(group, D, trials, seed)
    tnorm = np.linalg.norm(target)
    rel = float(np.linalg.norm(mean - target) / tnorm)
    # expected Frobenius error of the mean, from the sample second moment
    stderr = math.sqrt(max(second - np.linalg.norm(mean) ** 2, 0.0) / trials) / tnorm
    basis = np.stack([q2.ravel(), q3.ravel(), q4.ravel()], axis=1)
    fit = np.linalg.lstsq(basis, mean.real.ravel(), rcond=None)[0]
    details = {
        "coefficients": {k: str(v) for k, v in coeffs.items()},
        "fitted": [float(x) for x in fit],
        "stderr": float(stderr),
        "band": 5 / math.sqrt(trials),
    }
    params = {"m": m, "group": group, "trials": trials, "seed": seed}
    return CheckReport("reptheory", params, tolerance, rel, tolerance, rel <= tolerance, details=details)


# --- partial-trace lemma ------------------------------------------------------


def trace_lemma_bound(m):
    delta = 2.0 ** (2 - m)
    return (1 - delta) / (2 - delta)


def random_algebra_element(group, dim, rng):
    """Unit-Frobenius skew-symmetric (SO) or traceless skew-Hermitian (SU) matrix."""
    z = rng.standard_normal((dim, dim))
    if group == "SU":
        z = z + 1j * rng.standard_normal((dim, dim))
    a = z - dagger(z)
    if group == "SU":
        a = a - np.trace(a) / dim * np.eye(dim)
    return a / np.linalg.norm(a)


def trace_lemma_exact(A, m, group):
    """E_g ||tr_m((Id (x) g) A (Id (x) g^dagger))||^2 from the coefficient formula."""
    D = 2 ** (m - 1)
    c = reptheory_coefficients(D, group)
    t = A.reshape(2, D, 2, D)
    # X2 = sum <(b,y)|A^dagger|(a,x)> <(a,y)|A|(b,x)>
    adag = dagger(A).reshape(2, D, 2, D)
    x2 = np.einsum("byax,aybx->", adag, t)
    first = partial_trace_rest(A, m)
    val = float(c["c2"]) * x2 + float(c["c3"]) * np.linalg.norm(first) ** 2 + float(c["c4"]) * np.linalg.norm(A) ** 2
    return float(np.real(val))


def partial_trace_rest(A, m):
    """Trace out qubits 2..m, leaving qubit 1."""
    D = 2 ** (m - 1)
    return np.einsum("axbx->ab", A.reshape(2, D, 2, D))


def trace_lemma_samples(A, m, group, trials, seed, chunk=2000):
    D = 2 ** (m - 1)
    vals = []
    stream = 0
    done = 0
    while done < trials:
        count = min(chunk, trials - done)
        g = haar_samples(group, D, count, make_rng(seed, stream))
        h = np.einsum("ij,nkl->nikjl", np.eye(2), g).reshape(count, 2 * D, 2 * D)
        b = h @ A @ dagger(h)
        t = b.reshape(count, 2 * D // 2, 2, 2 * D // 2, 2)
        red = np.einsum("nxcyc->nxy", t)
        vals.append(np.sum(np.abs(red) ** 2, axis=(1, 2)))
        done += count
        stream += 1
    return np.concatenate(vals)


@_timed
def check_trace_lemma(m, group="SO", trials=None, seed=0, A=None):
    """MC mean of ||tr_m((Id (x) g) A (Id (x) g^dagger))||^2 >= (1-delta)/(2-delta) - 3 sigma."""
    if m < 4:
        raise DomainError("the trace lemma check needs m >= 4")
    check_group(group, ("SO", "SU"))
    trials = trials or current_caps().mc_samples
    dim = 2**m
    if A is None:
        A = random_algebra_element(group, dim, make_rng(seed, 0xA1))
    A = A / np.linalg.norm(A)
    vals = trace_lemma_samples(A, m, group, trials, seed)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = trace_lemma_bound(m)
    details = {"stderr": float(stderr), "band": 3 * stderr, "exact_expectation": trace_lemma_exact(A, m, group)}
    params = {"m": m, "group": group, "trials": trials, "seed": seed}
    return CheckReport("trace-lemma", params, bound, mean, 3 * stderr, mean >= bound - 3 * stderr, details=details)


# --- nearly orthogonal projectors -------------------------------------------


def projector_bound(m, eps):
    return 1 / m + min(math.sqrt(eps), m * eps)


def _orthonormal_rotation(dim, scale, rng):
    z = scale * rng.standard_normal((dim, dim))
    skew = z - z.T
    w, v = np.linalg.eigh(1j * skew)
    return (v @ np.diag(np.exp(-1j * w)) @ dagger(v)).real


def random_projector_family(m, dim, rng, common=0):
    """m projectors onto slightly rotated, initially orthogonal coordinate blocks.

    With ``common > 0`` every projector also contains a shared ``common``-dim
    subspace; the shared projector is returned too.
    """
    free = dim - common
    sizes = rng.integers(1, max(2, free // m) + 1, size=m)
    while sizes.sum() > free:
        sizes[np.argmax(sizes)] -= 1
    scale = rng.uniform(0.0, 0.3)
    eye = np.eye(dim)
    shared = eye[:, :common]
    projs = []
    start = common
    for s in sizes:
        block = eye[:, start : start + s]
        start += s
        if common:
            # rotate only the complement of the shared subspace
            rot = np.eye(dim)
            rot[common:, common:] = _orthonormal_rotation(free, scale, rng)
        else:
            rot = _orthonormal_rotation(dim, scale, rng)
        cols = np.concatenate([shared, rot @ block], axis=1)
        q, _ = np.linalg.qr(cols)
        projs.append(q @ q.T)
    P = shared @ shared.T
    return projs, P


@_timed
def check_projector_lemma(instances=50, seed=0, slack=1e-9):
    """||avg P_i|| <= 1/m + min(sqrt(eps), m eps) on random near-orthogonal families."""
    rng = make_rng(seed, 0x9E)
    worst = -np.inf
    failures = 0
    rows = []
    for it in range(instances):
        m = int(rng.integers(2, 7))
        dim = int(rng.integers(2 * m, 65))
        common = int(rng.integers(0, 3)) if it % 2 else 0
        projs, P = random_projector_family(m, dim, rng, common)
        tilde = [p - P for p in projs]
        eps = max(np.linalg.norm(a @ b, 2) for a, b in itertools.permutations(tilde, 2))
        value = np.linalg.norm(sum(tilde) / m, 2)
        bound = projector_bound(m, eps)
        margin = value - bound
        worst = max(worst, margin)
        if margin > slack:
            failures += 1
        rows.append({"m": m, "dim": dim, "common": common, "eps": eps, "norm": value, "bound": bound})
    details = {"instances": rows, "failures": failures}
    params = {"instances": instances, "seed": seed}
    return CheckReport("projectors", params, 0.0, float(worst), slack, failures == 0, details=details)


# --- auxiliary walk on m qubits --------------------------------------------


def small_m_bound(m):
    return (1 - (1 - 1 / m) * (1 - 2.0 ** (2 - m)) / (4 - 2.0 ** (3 - m))) ** 0.25


def large_m_bound(m, k):
    return 1 / m + math.sqrt(10) * k * m / 2 ** (m / 2)


def large_m_applicable(m, k):
    return k <= 2 ** (m / 2) / (math.sqrt(10) * m * m)


class QubitMajorProjectors:
    """Pi^(m) and Pi_{[m]\\i} (x) Id_i on (C^2)^{(x)2k} per qubit, qubit-major.

    In this ordering a matching state on m qubits is the m-fold tensor power of
    the 2-dimensional matching state, so both projectors are applied by
    contracting against small product vectors.
    """

    def __init__(self, group, m, k):
        check_group(group, ("SO", "SU"))
        if group == "SO" and not 2 * k < 2 ** (m - 1):
            raise PreconditionError(f"SO(2^{m - 1}) with k={k} needs k < 2^{m - 2}")
        self.m, self.k = m, k
        self.local = 4**k
        self.dim = self.local**m
        if self.dim > current_caps().max_entries:
            raise SizeError(f"dimension {self.dim} exceeds cap")
        self.matchings = enumerate_matchings(k, bipartite=(group == "SU"))
        self.phi = np.stack([phi_state(M, 2) * 2 ** (k / 2) for M in self.matchings])  # unnormalized, entries 0/1
        base = gram_matrix(self.matchings, 2)
        # unnormalized local Gram: <phi|phi'> = 2^cc
        local = [[g * 2**k for g in row] for row in base]
        self.ginv_full = self._inverse(local, m)
        self.ginv_minus = self._inverse(local, m - 1)

    @staticmethod
    def _inverse(local, power):
        gram = [[x**power for x in row] for row in local]
        if len(gram) <= 15:
            return np.array([[float(x) for x in row] for row in exact_inverse(gram)])
        return np.linalg.inv(np.array(gram, dtype=float))

    def _tensor(self, v):
        return np.asarray(v).reshape((self.local,) * self.m)

    def full(self, v):
        t = self._tensor(v)
        coeffs = []
        for phi in self.phi:
            c = t
            for _ in range(self.m):
                c = np.tensordot(phi, c, axes=(0, 0))
            coeffs.append(c)
        a = self.ginv_full @ np.array(coeffs)
        out = np.zeros(self.dim)
        for coef, phi in zip(a, self.phi):
            prod = np.ones(1)
            for _ in range(self.m):
                prod = np.kron(prod, phi)
            out += coef * prod
        return out

    def minus(self, i, v):
        """Pi on every qubit but ``i`` (1-based), identity on qubit i."""
        t = np.moveaxis(self._tensor(v), i - 1, 0)
        coeffs = []
        for phi in self.phi:
            c = t
            for _ in range(self.m - 1):
                c = np.tensordot(c, phi, axes=(c.ndim - 1, 0))
            coeffs.append(c)
        coeffs = np.array(coeffs)  # (|M|, local)
        a = self.ginv_minus @ coeffs
        out = np.zeros((self.local,) + (self.local,) * (self.m - 1))
        for coef, phi in zip(a, self.phi):
            prod = np.ones(1)
            for _ in range(self.m - 1):
                prod = np.kron(prod, phi)
            out += np.multiply.outer(coef, prod.reshape((self.local,) * (self.m - 1)))
        return np.moveaxis(out, 0, i - 1).reshape(-1)

    def averaged_minus_full(self, v):
        v = np.asarray(v, dtype=float)
        return sum(self.minus(i, v) for i in range(1, self.m + 1)) / self.m - self.full(v)


@_timed
def check_tau_bounds(group, m, k=1, seed=0, tol=1e-10):
    """||avg_i Pi_{[m]\\i} (x) Id_i - Pi^(m)|| against the small-m and large-m bounds."""
    proj = QubitMajorProjectors(group, m, k)
    op = LinearOperator((proj.dim, proj.dim), matvec=proj.averaged_minus_full, dtype=float)
    v0 = make_rng(seed, 0x7A).standard_normal(proj.dim)
    measured = float(eigsh(op, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)[0])
    small = small_m_bound(m)
    large = large_m_bound(m, k)
    applicable = large_m_applicable(m, k)
    bound = min(small, large) if applicable else small
    # image containment: P_i Pi^(m) = Pi^(m)
    rng = make_rng(seed, 0x7B)
    w = proj.full(rng.standard_normal(proj.dim))
    containment = max(float(np.abs(proj.minus(i, w) - w).max()) for i in range(1, m + 1))
    passed = measured <= bound + 1e-9 and measured <= large + 1e-9 and containment <= 1e-9
    details = {
        "small_m_bound": small,
        "large_m_bound": large,
        "large_m_applicable": applicable,
        "containment_residual": containment,
    }
    params = {"group": group, "m": m, "k": k}
    return CheckReport("tau", params, bound, measured, 1e-9, passed, details=details)


# --- permutation walk ---------------------------------------------------------


@_timed
def check_perm_gap(n, k):
    """||E W^k(f) - E_{S_N} W^k|| for the simple 3-bit permutations; must be < 1."""
    N = 2**n
    moment = wk_moment(simple_3bit_perms(n), N, k)
    uniform = wk_moment("uniform", N, k)
    diff = moment - uniform
    ev = np.linalg.eigvalsh((diff + diff.T) / 2)
    gap = float(max(abs(ev[0]), abs(ev[-1])))
    details = {"symmetric": bool(np.array_equal(moment, moment.T)), "tuples": int(moment.shape[0])}
    return CheckReport("perm-gap", {"n": n, "k": k}, 1.0, gap, 0.0, gap < 1.0, details=details)


# --- base gate set ------------------------------------------------------------


@_timed
def check_base_gap(group, k=1, lazy_walk=True, threshold=0.999):
    """Measured ||E rho(g) - Pi|| for the (lazy) 4-qubit base set; substitute for the unquantified gap."""
    base = base_set(group)
    spec = MomentSpec.multiset(group, base.matrices(), k)
    if lazy_walk:
        spec = lazy(spec)
    gap = spectral_gap(spec)
    params = {"group": group, "n": 4, "k": k, "lazy": lazy_walk}
    return CheckReport("base-gap", params, threshold, gap, 0.0, gap < threshold, details={"empirical": True})


# --- walk contraction ---------------------------------------------------------


def random_contractions(count, size, dim, rng):
    """``count`` families of ``size`` matrices with operator norm at most one."""
    z = rng.standard_normal((count, size, dim, dim)) + 1j * rng.standard_normal((count, size, dim, dim))
    norms = np.linalg.norm(z, ord=2, axis=(-2, -1))
    scale = rng.uniform(0.3, 1.0, size=(count, size))
    return z / norms[..., None, None] * scale[..., None, None]


@_timed
def check_contraction(graph, families=100, dim=3, seed=0, slack=1e-9):
    """||avg(q_G o S(U))|| <= (1 - mu) ||avg(S(U))||^2 + mu on random contraction families."""
    mu = graph.mu_certified
    rng = make_rng(seed, 0xC0)
    fam = random_contractions(families, graph.n, dim, rng)
    e = graph.edges()
    worst = -np.inf
    for U in fam:
        lam = min(np.linalg.norm(U.mean(axis=0), 2), 1.0)
        composed = (dagger(U[e[:, 1]]) @ U[e[:, 0]]).mean(axis=0)
        worst = max(worst, np.linalg.norm(composed, 2) - f_mu(mu, lam))
    params = {"n": graph.n, "d": graph.d, "mu": mu, "families": families}
    return CheckReport("contraction", params, 0.0, float(worst), slack, worst <= slack)


@_timed
def check_cascade_contraction(cascade, families=100, dim=3, seed=0, slack=1e-9):
    """||avg(Q o U)|| <= F(||avg U||) for a full cascade on random contraction families."""
    rng = make_rng(seed, 0xCA)
    fam = random_contractions(families, cascade.c, dim, rng)
    worst = -np.inf
    for U in fam:
        lam = min(np.linalg.norm(U.mean(axis=0), 2), 1.0)
        X = list(level_products(cascade, U))[-1]
        worst = max(worst, np.linalg.norm(X.mean(axis=0), 2) - cascade.bound(lam))
    params = {"c": cascade.c, "stages": cascade.depth, "families": families}
    return CheckReport("cascade", params, 0.0, float(worst), slack, worst <= slack)


CHECKS = {
    "kappa": check_kappa_gram,
    "reptheory": check_reptheory_coeffs,
    "trace-lemma": check_trace_lemma,
    "projectors": check_projector_lemma,
    "tau": check_tau_bounds,
    "perm-gap": check_perm_gap,
    "base-gap": check_base_gap,
}
