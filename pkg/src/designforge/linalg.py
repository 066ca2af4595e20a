"""Dense and matrix-free complex linear algebra shared by every module.

Matrices are plain :class:`numpy.ndarray` objects. Qubit labels are 1-based
and the first qubit is the most significant tensor factor, so that
``np.kron(A, B)`` places ``A`` on qubit 1.

Random numbers come from :func:`make_rng`, a Philox-4x64 counter-based
generator keyed by a (seed, stream) pair. Philox output and numpy's normal
sampler are platform independent, so a seed reproduces the same bits
everywhere.
"""

import numpy as np

from .caps import current_caps
from .errors import ConvergenceError, DimensionLimitError, DomainError, ShapeError

GROUPS = ("SO", "SU", "O", "U")
GROUP_TAGS = GROUPS + ("SymmetricGroup",)


def make_rng(seed=0, stream=0):
    """Counter-based generator for ``(seed, stream)``.

    Distinct streams give independent generators; Monte-Carlo loops use one
    stream per chunk so results do not depend on how chunks are scheduled.
    """
    key = (int(seed) % 2**64) | ((int(stream) % 2**64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def check_group(group, allowed=GROUPS):
    if group not in allowed:
        raise DomainError(f"group must be one of {allowed}, got {group!r}")
    return group


def tensor(a, b, max_entries=None):
    """Kronecker product, ``a``-major block order."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("tensor expects two matrices")
    cap = max_entries or current_caps().max_entries
    entries = a.shape[0] * b.shape[0] * a.shape[1] * b.shape[1]
    if entries > cap:
        raise DimensionLimitError(f"Kronecker product with {entries} entries exceeds cap {cap}")
    return np.kron(a, b)


def kron_all(mats, max_entries=None):
    out = np.ones((1, 1), dtype=np.result_type(*mats))
    for m in mats:
        out = tensor(out, m, max_entries=max_entries)
    return out


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, atol=1e-12):
    return np.max(np.abs(a - dagger(a)), initial=0.0) <= atol


def is_unitary(a, atol=1e-10):
    eye = np.eye(a.shape[-1])
    return np.linalg.norm(dagger(a) @ a - eye, 2) <= atol


def power_norm(matvec, dim, rmatvec=None, tol=1e-8, maxiter=None, rng=None, dtype=complex):
    """Operator norm of a matrix-free operator by power iteration on A^dagger A.

    ``matvec`` applies A; ``rmatvec`` applies A^dagger (defaults to ``matvec``,
    i.e. A Hermitian). Stops once successive norm estimates agree to
    relative tolerance ``tol``.
    """
    maxiter = maxiter or current_caps().power_maxiter
    rmatvec = rmatvec or matvec
    rng = rng or make_rng(0, 0xA11CE)
    v = rng.standard_normal(dim)
    if np.dtype(dtype).kind == "c":
        v = v + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = rmatvec(matvec(v))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        new = np.sqrt(nrm)
        v = w / nrm
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    raise ConvergenceError(
        f"power iteration did not converge in {maxiter} iterations", last_iterate=v, last_value=est
    )


def matrix_norm(a, kind="operator", tol=1e-8):
    """Operator, Frobenius or Schatten-1 norm of a dense matrix."""
    a = np.asarray(a)
    if kind == "frobenius":
        return float(np.linalg.norm(a))
    dense_dim = current_caps().dense_dim
    if kind == "operator":
        if max(a.shape) <= dense_dim:
            return float(np.linalg.norm(a, 2)) if a.size else 0.0
        return power_norm(lambda v: a @ v, a.shape[1], rmatvec=lambda v: dagger(a) @ v, tol=tol)
    if kind == "schatten1":
        return float(np.sum(np.linalg.svd(a, compute_uv=False)))
    raise ValueError(f"unknown norm kind {kind!r}")


def _fix_phases(q, r):
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.where(np.abs(d) == 0, 1.0, np.abs(d))
    ph = np.where(np.abs(d) == 0, 1.0, ph)
    return q * ph[..., None, :]


def haar_samples(group, dim, count, rng):
    """``count`` Haar-distributed matrices of shape (count, dim, dim)."""
    check_group(group)
    if dim < 1:
        raise DomainError("dim must be positive")
    real = group in ("SO", "O")
    z = rng.standard_normal((count, dim, dim))
    if not real:
        z = (z + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    g = _fix_phases(q, r)
    if group == "SO":
        det = np.linalg.det(g)
        g[det < 0, :, -1] *= -1
    elif group == "SU":
        det = np.linalg.det(g)
        g = g * np.exp(-1j * np.angle(det) / dim)[:, None, None]
    return g


def haar_sample(group, dim, rng):
    return haar_samples(group, dim, 1, rng)[0]


def partial_trace(a, qubit_count, traced_qubit):
    """Trace out one qubit (1-based label) of a 2^q x 2^q operator."""
    a = np.asarray(a)
    size = 2**qubit_count
    if a.shape != (size, size):
        raise ShapeError(f"expected a {size}x{size} matrix, got {a.shape}")
    if not 1 <= traced_qubit <= qubit_count:
        raise ShapeError(f"qubit {traced_qubit} outside [1, {qubit_count}]")
    t = a.reshape((2,) * (2 * qubit_count))
    ax = traced_qubit - 1
    out = np.trace(t, axis1=ax, axis2=ax + qubit_count)
    half = 2 ** (qubit_count - 1)
    return out.reshape(half, half)


def qubit_count_of(dim):
    q = int(dim).bit_length() - 1
    if dim < 1 or 2**q != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    return q
