"""Dense linear-algebra helpers used across the toolkit.

Everything here works on plain numpy arrays; the physical index order
(pair-major, A factor before B factor inside a pair) is imposed by the
callers, this module only reshuffles whatever factor list it is given.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def herm_residual(m: np.ndarray) -> float:
    """Operator norm of the anti-Hermitian part of ``m``."""
    skew = (m - dagger(m)) / 2.0
    if skew.shape[0] == 0:
        return 0.0
    return float(np.linalg.norm(skew, 2))


def hermitize(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2.0


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values; for Hermitian input the sum of |eigenvalues|."""
    return float(np.abs(np.linalg.eigvalsh(hermitize(m))).sum())


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def permute_factors(mat: np.ndarray, dims: tuple[int, ...], perm: tuple[int, ...]) -> np.ndarray:
    """Conjugate ``mat`` by the unitary that reorders tensor factors ``dims`` by ``perm``.

    ``perm[j]`` is the old position of the factor that ends up at position ``j``.
    """
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ParameterError(f"not a permutation of {n} factors: {perm}")
    full = mat.reshape(dims + dims)
    axes = tuple(perm) + tuple(n + p for p in perm)
    new_dims = tuple(dims[p] for p in perm)
    side = int(np.prod(new_dims))
    return full.transpose(axes).reshape(side, side)


def permutation_index_map(dims: tuple[int, ...], perm: tuple[int, ...]) -> np.ndarray:
    """Index map ``src`` with ``(P rho P^dag)[i, j] = rho[src[i], src[j]]``.

    ``P`` moves the factor at old position ``perm[j]`` to position ``j``
    (same convention as :func:`permute_factors`).
    """
    n = len(dims)
    size = int(np.prod(dims))
    multi = np.unravel_index(np.arange(size), tuple(dims[p] for p in perm))
    src_axes = [None] * n
    for new_pos, old_pos in enumerate(perm):
        src_axes[old_pos] = multi[new_pos]
    return np.ravel_multi_index(tuple(src_axes), dims)


def vec(m: np.ndarray) -> np.ndarray:
    return m.reshape(-1)


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape(n, n)


def hermitian_basis(m: int) -> list[np.ndarray]:
    """Orthonormal basis of Hermitian m x m matrices (Hilbert-Schmidt inner product)."""
    basis = [np.eye(m, dtype=complex) / np.sqrt(m)]
    for l in range(1, m):
        d = np.zeros(m)
        d[:l] = 1.0
        d[l] = -l
        basis.append(np.diag(d).astype(complex) / np.sqrt(l * (l + 1)))
    for j in range(m):
        for k in range(j + 1, m):
            e = np.zeros((m, m), dtype=complex)
            e[j, k] = 1.0
            basis.append((e + e.T) / np.sqrt(2))
            basis.append((1j * e + (1j * e).conj().T) / np.sqrt(2))
    return basis


def psd_project(h: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (eigenvalue clipping)."""
    w, v = np.linalg.eigh(hermitize(h))
    w = np.clip(w, 0.0, None)
    return (v * w) @ dagger(v)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitize(g)


def random_pure(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, n: int, ancilla: int | None = None) -> np.ndarray:
    """Random density matrix from the induced Ginibre measure.

    ``ancilla = n`` (the default) is the Hilbert-Schmidt measure; larger
    ancilla dimensions concentrate the draws around the maximally mixed state.
    """
    k = n if ancilla is None else ancilla
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_isometry_cols(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """n x k matrix with orthonormal columns, Haar-distributed column span."""
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r).real)
