"""Bipartite density operators, named state families, and their basic algebra.

Index convention (used by every module): a k-pair state lives on
``(H_A (x) H_B)^(x k)`` with tensor factors ordered pair-major,

    A1, B1, A2, B2, ..., Ak, Bk,

so entry ``(i, j)`` of the matrix refers to row/column multi-indices
``(a1 b1 ... ak bk)`` in that order, row-major.  The global A|B cut groups
all A factors before all B factors; :func:`to_global_cut` performs that
reordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import linalg
from .errors import CapacityError, ParameterError, SamplingError

#: largest total operator dimension that dense storage will accept
DIM_CAP = 4096

#: tolerance for state validity (hermiticity, trace, positivity)
STATE_TOL = 1e-9

#: tolerance for exact linear-algebra identities (traces of contractions, ...)
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteState:
    """Density operator on k bipartite pairs in the pair-major index order.

    The constructor checks shape consistency only; physical validity
    (hermiticity / trace / positivity within ``STATE_TOL``) is checked by
    :func:`validate_state`, which library constructors guarantee by
    construction.
    """

    data: np.ndarray
    dimA: int
    dimB: int
    pairs: int = 1

    def __post_init__(self):
        if self.dimA < 1 or self.dimB < 1 or self.pairs < 1:
            raise ParameterError("dimA, dimB and pairs must be positive")
        arr = np.asarray(self.data, dtype=complex)
        if arr.shape != (self.dim, self.dim):
            raise ParameterError(
                f"matrix shape {arr.shape} does not match (dimA*dimB)^pairs = {self.dim}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def pair_dim(self) -> int:
        return self.dimA * self.dimB

    @property
    def dim(self) -> int:
        return self.pair_dim ** self.pairs

    @property
    def factor_dims(self) -> tuple[int, ...]:
        """Fine-grained factor list (A1, B1, ..., Ak, Bk)."""
        return (self.dimA, self.dimB) * self.pairs

    def __repr__(self):  # keep reprs short, matrices can be large
        return f"BipartiteState(dimA={self.dimA}, dimB={self.dimB}, pairs={self.pairs})"


class Family(str, Enum):
    WERNER = "werner"
    ISOTROPIC = "isotropic"
    MAX_ENTANGLED = "max_entangled"
    PRODUCT_PURE = "product_pure"
    RANDOM_MIXED = "random_mixed"
    RANDOM_PPT = "random_ppt"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class StateFamilySpec:
    family: Family
    d: int = 2
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    invariant: str
    magnitude: float


@dataclass(frozen=True)
class StateValidation:
    ok: bool
    violations: tuple[Violation, ...]
    state: Optional[BipartiteState]


def max_entangled_ket(d: int, normalized: bool = True) -> np.ndarray:
    """|phi> = sum_i |ii> on C^d (x) C^d, optionally divided by sqrt(d)."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0
    return v / np.sqrt(d) if normalized else v


def phi_projector(d: int) -> np.ndarray:
    """Projector onto the d-dimensional maximally entangled state."""
    v = max_entangled_ket(d)
    return np.outer(v, v.conj())


def swap_operator(d: int) -> np.ndarray:
    """Flip operator F |i j> = |j i> on C^d (x) C^d."""
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f


def werner_state(d: int, p: float) -> BipartiteState:
    """Mixture p * (normalized antisymmetric projector) + (1-p) * (normalized symmetric).

    Entangled (and NPT) exactly for p > 1/2; the partial-transpose minimum
    eigenvalue is (1 - 2p)/d.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"werner weight p must be in [0, 1], got {p}")
    f = swap_operator(d)
    eye = np.eye(d * d)
    anti = (eye - f) / (d * d - d)
    sym = (eye + f) / (d * d + d)
    return BipartiteState(p * anti + (1.0 - p) * sym, d, d)


def isotropic_state(d: int, p: float) -> BipartiteState:
    """p * phi_d + (1-p) * I/d^2; entangled for p > 1/(d+1)."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"isotropic weight p must be in [0, 1], got {p}")
    return BipartiteState(p * phi_projector(d) + (1.0 - p) * np.eye(d * d) / (d * d), d, d)


# random_ppt rejection sampling: attempts come in blocks; after each failed
# block the Ginibre ancilla dimension doubles, which pushes the proposal
# toward the maximally mixed state where PPT draws are plentiful.  (Plain
# Hilbert-Schmidt proposals essentially never hit PPT for d >= 3.)
PPT_BLOCK = 50
PPT_ATTEMPT_CAP = 2000


def _random_ppt(rng: np.random.Generator, d: int, cap: int) -> BipartiteState:
    n = d * d
    ancilla = n
    for attempt in range(cap):
        rho = linalg.random_density(rng, n, ancilla)
        state = BipartiteState(rho, d, d)
        if linalg.min_eig(partial_transpose(state)) >= -STATE_TOL:
            return state
        if (attempt + 1) % PPT_BLOCK == 0:
            ancilla *= 2
    raise SamplingError(f"no PPT state found in {cap} attempts (d={d})")


def construct_state(spec: StateFamilySpec, seed: Optional[int] = None) -> BipartiteState:
    """Build a named-family state; ``seed`` is required for the random families."""
    d, params = spec.d, spec.params
    if d < 2 and spec.family is not Family.EXPLICIT:
        raise ParameterError("local dimension must be >= 2")
    fam = Family(spec.family)
    if fam in (Family.RANDOM_MIXED, Family.RANDOM_PPT) and seed is None:
        raise ParameterError(f"family {fam.value} requires a seed")
    rng = np.random.default_rng(seed) if seed is not None else None

    if fam is Family.WERNER:
        return werner_state(d, float(params.get("p", 0.5)))
    if fam is Family.ISOTROPIC:
        return isotropic_state(d, float(params.get("p", 0.5)))
    if fam is Family.MAX_ENTANGLED:
        return BipartiteState(phi_projector(d), d, d)
    if fam is Family.PRODUCT_PURE:
        dB = int(params.get("dB", d))
        if rng is not None:
            a = linalg.random_pure(rng, d)
            b = linalg.random_pure(rng, dB)
        else:
            ia, ib = int(params.get("i", 0)), int(params.get("j", 0))
            if not (0 <= ia < d and 0 <= ib < dB):
                raise ParameterError("basis indices out of range")
            a = np.eye(d, dtype=complex)[ia]
            b = np.eye(dB, dtype=complex)[ib]
        v = np.kron(a, b)
        return BipartiteState(np.outer(v, v.conj()), d, dB)
    if fam is Family.RANDOM_MIXED:
        dB = int(params.get("dB", d))
        return BipartiteState(linalg.random_density(rng, d * dB), d, dB)
    if fam is Family.RANDOM_PPT:
        return _random_ppt(rng, d, int(params.get("attempt_cap", PPT_ATTEMPT_CAP)))
    if fam is Family.EXPLICIT:
        matrix = params.get("matrix")
        if matrix is None:
            raise ParameterError("explicit family needs params['matrix']")
        dimA = int(params.get("dimA", d))
        dimB = int(params.get("dimB", d))
        pairs = int(params.get("pairs", 1))
        report = validate_state(np.asarray(matrix, dtype=complex), dimA, dimB, pairs)
        if not report.ok:
            raise ParameterError(f"explicit matrix is not a valid state: {report.violations}")
        return report.state
    raise ParameterError(f"unknown family {spec.family!r}")


def tensor(a: BipartiteState, b: BipartiteState, dim_cap: int = DIM_CAP) -> BipartiteState:
    """Tensor product; pair counts add and the pair-major index order is kept."""
    if (a.dimA, a.dimB) != (b.dimA, b.dimB):
        raise ParameterError("pair dimensions must match to concatenate pair lists")
    dim = a.pair_dim ** (a.pairs + b.pairs)
    if dim > dim_cap:
        raise CapacityError(f"result dimension {dim} exceeds cap {dim_cap}")
    return BipartiteState(np.kron(a.data, b.data), a.dimA, a.dimB, a.pairs + b.pairs)


def tensor_power(state: BipartiteState, n: int, dim_cap: int = DIM_CAP) -> BipartiteState:
    if n < 1:
        raise ParameterError("tensor power needs n >= 1")
    dim = state.dim ** n
    if dim > dim_cap:
        raise CapacityError(f"result dimension {dim} exceeds cap {dim_cap}")
    out = state
    for _ in range(n - 1):
        out = tensor(out, state, dim_cap=dim_cap)
    return out


def partial_trace(state: BipartiteState, keep: set[int]) -> BipartiteState:
    """Trace out all pairs not in ``keep`` (pair indices are 1-based)."""
    keep_set = set(keep)
    if not keep_set:
        raise ParameterError("keep set must be nonempty")
    if not keep_set <= set(range(1, state.pairs + 1)):
        raise ParameterError(f"keep set {keep_set} not within 1..{state.pairs}")
    kept = sorted(keep_set)
    k, m = state.pairs, state.pair_dim
    full = state.data.reshape((m,) * k + (m,) * k)
    traced = sorted(set(range(1, k + 1)) - keep_set, reverse=True)
    for p in traced:
        ax = p - 1
        full = np.trace(full, axis1=ax, axis2=ax + full.ndim // 2)
    side = m ** len(kept)
    return BipartiteState(full.reshape(side, side), state.dimA, state.dimB, len(kept))


def partial_transpose(state: BipartiteState) -> np.ndarray:
    """Transpose every B factor (the global A|B cut); returns a raw Hermitian matrix."""
    dims = state.factor_dims
    n = len(dims)
    full = state.data.reshape(dims + dims)
    axes = list(range(2 * n))
    for p in range(state.pairs):
        b = 2 * p + 1
        axes[b], axes[n + b] = axes[n + b], axes[b]
    return full.transpose(axes).reshape(state.dim, state.dim)


def trace_distance(a: BipartiteState, b: BipartiteState) -> float:
    """Half the trace norm of the difference (so values lie in [0, 1])."""
    if a.data.shape != b.data.shape:
        raise ParameterError("states must have equal dimensions")
    return 0.5 * linalg.trace_norm(a.data - b.data)


def validate_state(data: np.ndarray, dimA: int, dimB: int, pairs: int = 1) -> StateValidation:
    """Check the BipartiteState invariants; reports every violated one with its magnitude."""
    violations = []
    arr = np.asarray(data, dtype=complex)
    dim = (dimA * dimB) ** pairs
    if arr.shape != (dim, dim):
        violations.append(Violation("shape", float(abs(arr.size - dim * dim))))
        return StateValidation(False, tuple(violations), None)
    herm = linalg.herm_residual(arr)
    if herm > STATE_TOL:
        violations.append(Violation("hermiticity", herm))
    tr_err = abs(np.trace(arr).real - 1.0) + abs(np.trace(arr).imag)
    if tr_err > STATE_TOL:
        violations.append(Violation("trace", float(tr_err)))
    lo = linalg.min_eig(arr)
    if lo < -STATE_TOL:
        violations.append(Violation("positivity", float(lo)))
    if violations:
        return StateValidation(False, tuple(violations), None)
    return StateValidation(True, (), BipartiteState(arr, dimA, dimB, pairs))


def to_global_cut(state: BipartiteState) -> np.ndarray:
    """Reorder factors to (A1..Ak, B1..Bk); returns the matrix on C^(dA^k) (x) C^(dB^k)."""
    k = state.pairs
    if k == 1:
        return state.data.copy()
    perm = tuple(2 * p for p in range(k)) + tuple(2 * p + 1 for p in range(k))
    return linalg.permute_factors(state.data, state.factor_dims, perm)


def from_global_cut(mat: np.ndarray, dimA: int, dimB: int, pairs: int) -> np.ndarray:
    """Inverse of :func:`to_global_cut` (back to pair-major factor order)."""
    if pairs == 1:
        return mat.copy()
    cut_dims = (dimA,) * pairs + (dimB,) * pairs
    perm = []
    for p in range(pairs):
        perm += [p, pairs + p]
    return linalg.permute_factors(mat, cut_dims, tuple(perm))


# ---------------------------------------------------------------------------
# JSON state files: {"dimA", "dimB", "pairs", "matrix": [[re, im], ...]},
# matrix entries row-major in the pair-major index order.
# ---------------------------------------------------------------------------

def state_to_dict(state: BipartiteState) -> dict:
    flat = state.data.reshape(-1)
    return {
        "dimA": state.dimA,
        "dimB": state.dimB,
        "pairs": state.pairs,
        "matrix": [[float(z.real), float(z.imag)] for z in flat],
    }


def state_from_dict(payload: dict) -> BipartiteState:
    try:
        dimA, dimB, pairs = int(payload["dimA"]), int(payload["dimB"]), int(payload["pairs"])
        entries = payload["matrix"]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed state payload: {exc}") from exc
    dim = (dimA * dimB) ** pairs
    if len(entries) != dim * dim:
        raise ParameterError(f"matrix has {len(entries)} entries, expected {dim * dim}")
    flat = np.array([complex(re, im) for re, im in entries])
    report = validate_state(flat.reshape(dim, dim), dimA, dimB, pairs)
    if not report.ok:
        raise ParameterError(f"state file violates invariants: {report.violations}")
    return report.state


def save_state(state: BipartiteState, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh)


def load_state(path) -> BipartiteState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
