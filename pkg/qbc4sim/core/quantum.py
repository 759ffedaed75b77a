"""
QBC4 Simulator - Quantum Core
=============================

Exact dense complex linear algebra over labeled tensor factors.

Every factor of a Hilbert space carries a SubsystemId (party, pair slot,
instance). States, density operators and unitaries know their registry, so
tensoring, permuting, partial traces and local operations are expressed by
subsystem labels instead of raw axis numbers.

All values are immutable after construction.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from .errors import (
    DimensionMismatchError,
    RegistryError,
    StateValidationError,
)
from .settings import tolerances

logger = logging.getLogger("qbc4sim.quantum")

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


# =============================================================================
# Subsystem bookkeeping
# =============================================================================

class Party(str, Enum):
    """Owner family of a tensor factor"""
    A = "A"
    B_ALPHA = "Ba"
    B_BETA = "Bb"
    C = "C"


class Slot(str, Enum):
    """Pair slot of a factor (mu, nu) or none for the purification register"""
    MU = "mu"
    NU = "nu"
    NONE = "none"


DEFAULT_DIMS = {
    Party.A: 4,
    Party.B_ALPHA: 2,
    Party.B_BETA: 2,
}


@dataclass(frozen=True)
class SubsystemId:
    """Label of one tensor factor"""
    party: Party
    slot: Slot = Slot.NONE
    instance: int = 1

    def __post_init__(self):
        if not isinstance(self.instance, (int, np.integer)) or self.instance < 1:
            raise RegistryError(f"instance must be an integer >= 1, got {self.instance!r}")
        if self.party is Party.C and self.slot is not Slot.NONE:
            raise RegistryError("the purification register C has no pair slot")
        if self.party is not Party.C and self.slot is Slot.NONE:
            raise RegistryError(f"{self.party.value} factors need a pair slot (mu or nu)")

    @property
    def label(self) -> str:
        return f"{self.party.value}:{self.slot.value}:{self.instance}"

    @classmethod
    def parse(cls, label: str) -> "SubsystemId":
        try:
            party, slot, instance = label.split(":")
            return cls(Party(party), Slot(slot), int(instance))
        except (ValueError, KeyError) as e:
            raise RegistryError(f"cannot parse subsystem label {label!r}: {e}") from e

    def __str__(self) -> str:
        return self.label


def A(slot: Slot, instance: int = 1) -> SubsystemId:
    return SubsystemId(Party.A, slot, instance)


def B_alpha(slot: Slot, instance: int = 1) -> SubsystemId:
    return SubsystemId(Party.B_ALPHA, slot, instance)


def B_beta(slot: Slot, instance: int = 1) -> SubsystemId:
    return SubsystemId(Party.B_BETA, slot, instance)


def C(instance: int = 1) -> SubsystemId:
    return SubsystemId(Party.C, Slot.NONE, instance)


@dataclass(frozen=True)
class HilbertRegistry:
    """Ordered list of (SubsystemId, dimension)"""
    factors: Tuple[Tuple[SubsystemId, int], ...]

    def __post_init__(self):
        factors = tuple((sid, int(dim)) for sid, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        seen = set()
        for sid, dim in factors:
            if not isinstance(sid, SubsystemId):
                raise RegistryError(f"not a SubsystemId: {sid!r}")
            if dim < 1:
                raise RegistryError(f"dimension of {sid} must be positive, got {dim}")
            if sid in seen:
                raise RegistryError(f"duplicate subsystem {sid}")
            seen.add(sid)

    @classmethod
    def of(cls, *ids: SubsystemId, c_dim: Optional[int] = None) -> "HilbertRegistry":
        """Registry with default dimensions (A: 4, B-alpha/beta: 2, C: c_dim)"""
        factors = []
        for sid in ids:
            if sid.party is Party.C:
                if c_dim is None:
                    raise RegistryError("dimension of the C register must be given")
                factors.append((sid, c_dim))
            else:
                factors.append((sid, DEFAULT_DIMS[sid.party]))
        return cls(tuple(factors))

    @property
    def ids(self) -> Tuple[SubsystemId, ...]:
        return tuple(sid for sid, _ in self.factors)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, sid) -> bool:
        return sid in self.ids

    def index(self, sid: SubsystemId) -> int:
        try:
            return self.ids.index(sid)
        except ValueError:
            raise RegistryError(f"{sid} is not in the registry") from None

    def dim_of(self, sid: SubsystemId) -> int:
        return self.dims[self.index(sid)]

    def subset(self, ids: Iterable[SubsystemId]) -> "HilbertRegistry":
        """Sub-registry in the order given"""
        return HilbertRegistry(tuple((sid, self.dim_of(sid)) for sid in ids))

    def concat(self, other: "HilbertRegistry") -> "HilbertRegistry":
        overlap = set(self.ids) & set(other.ids)
        if overlap:
            raise RegistryError(
                f"registries overlap on {', '.join(sorted(s.label for s in overlap))}"
            )
        return HilbertRegistry(self.factors + other.factors)

    def relabel(self, mapping: dict) -> "HilbertRegistry":
        return HilbertRegistry(tuple((mapping.get(sid, sid), dim) for sid, dim in self.factors))

    def labels(self) -> List[str]:
        return [sid.label for sid in self.ids]


def _check_same_registry(a: HilbertRegistry, b: HilbertRegistry, what: str):
    if a.dims != b.dims or a.ids != b.ids:
        raise DimensionMismatchError(
            f"{what}: registries differ ({a.labels()} dims {a.dims} vs {b.labels()} dims {b.dims})"
        )


# =============================================================================
# States and operators
# =============================================================================

@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over a registry"""
    registry: HilbertRegistry
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.registry.total_dim:
            raise DimensionMismatchError(
                f"{amps.shape[0]} amplitudes for a registry of dimension {self.registry.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > tolerances().equality:
            raise StateValidationError(f"state norm {norm:.16g} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, registry: HilbertRegistry, vector, normalize: bool = False) -> "PureState":
        vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise StateValidationError("cannot normalize the zero vector")
            vec = vec / norm
        return cls(registry, vec)

    @classmethod
    def basis(cls, registry: HilbertRegistry, indices: Sequence[int]) -> "PureState":
        """Computational basis state; indices are 0-based per factor"""
        if len(indices) != len(registry):
            raise DimensionMismatchError(f"{len(indices)} indices for {len(registry)} factors")
        vec = np.zeros(registry.total_dim, dtype=np.complex128)
        vec[np.ravel_multi_index(tuple(indices), registry.dims)] = 1.0
        return cls(registry, vec)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.registry.dims)

    def density(self) -> "DensityOperator":
        return DensityOperator(self.registry, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, trace-one operator over a registry"""
    registry: HilbertRegistry
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        d = self.registry.total_dim
        if mat.shape != (d, d):
            raise DimensionMismatchError(f"matrix shape {mat.shape} for a registry of dimension {d}")
        tol = tolerances().equality
        herm_err = np.max(np.abs(mat - mat.conj().T)) if d else 0.0
        if herm_err > tol:
            raise StateValidationError(f"density operator not Hermitian (deviation {herm_err:.3g})")
        # exact hermitization removes the sub-tolerance antihermitian residue
        mat = 0.5 * (mat + mat.conj().T)
        tr = np.trace(mat).real
        if abs(tr - 1.0) > tol:
            raise StateValidationError(f"density operator trace {tr:.16g} differs from 1")
        min_eig = np.linalg.eigvalsh(mat).min()
        if min_eig < -tol:
            raise StateValidationError(f"density operator has negative eigenvalue {min_eig:.3g}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, registry: HilbertRegistry) -> "DensityOperator":
        d = registry.total_dim
        return cls(registry, np.eye(d, dtype=np.complex128) / d)

    def tensor_view(self) -> np.ndarray:
        dims = self.registry.dims
        return self.matrix.reshape(dims + dims)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, state: PureState) -> float:
        """<psi| rho |psi>"""
        _check_same_registry(self.registry, state.registry, "expectation")
        v = state.amplitudes
        return float(np.real(np.vdot(v, self.matrix @ v)))


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Unitary on an ordered support; an empty support means not yet bound"""
    support: Tuple[SubsystemId, ...]
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"unitary must be square, got shape {mat.shape}")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if err > tolerances().structural:
            raise StateValidationError(f"operator is not unitary (deviation {err:.3g})")
        mat.setflags(write=False)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def on(self, *support: SubsystemId) -> "UnitaryOp":
        return UnitaryOp(tuple(support), self.matrix)


Operand = Union[PureState, DensityOperator]


# =============================================================================
# Gates
# =============================================================================

def pauli_set() -> List[UnitaryOp]:
    """The four qubit operators I, sigma_x, -i sigma_y, sigma_z (computational basis)"""
    identity = np.eye(2, dtype=np.complex128)
    sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    return [UnitaryOp((), m) for m in (identity, sx, -1j * sy, sz)]


def controlled_pauli(control: SubsystemId, target: SubsystemId) -> UnitaryOp:
    """sum_i |e_i><e_i| (x) V_i on control (dim 4) and target qubit"""
    blocks = [v.matrix for v in pauli_set()]
    return UnitaryOp((control, target), la.block_diag(*blocks))


def swap_gate(a: SubsystemId, b: SubsystemId, dim: int = 2) -> UnitaryOp:
    perm = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            perm[j * dim + i, i * dim + j] = 1.0
    return UnitaryOp((a, b), perm)


# =============================================================================
# Structural operations
# =============================================================================

def tensor(*objs):
    """Kronecker product in argument order on the concatenated registry."""
    if not objs:
        raise RegistryError("tensor needs at least one operand")
    first = objs[0]
    if all(isinstance(o, PureState) for o in objs):
        registry, vec = first.registry, first.amplitudes
        for o in objs[1:]:
            registry = registry.concat(o.registry)
            vec = np.kron(vec, o.amplitudes)
        return PureState(registry, vec)
    if all(isinstance(o, (PureState, DensityOperator)) for o in objs):
        ops = [o.density() if isinstance(o, PureState) else o for o in objs]
        registry, mat = ops[0].registry, ops[0].matrix
        for o in ops[1:]:
            registry = registry.concat(o.registry)
            mat = np.kron(mat, o.matrix)
        return DensityOperator(registry, mat)
    if all(isinstance(o, UnitaryOp) for o in objs):
        support, mat = list(first.support), first.matrix
        for o in objs[1:]:
            dup = set(support) & set(o.support)
            if dup:
                raise RegistryError(f"duplicate subsystem in tensor: {', '.join(str(s) for s in dup)}")
            support += list(o.support)
            mat = np.kron(mat, o.matrix)
        return UnitaryOp(tuple(support), mat)
    raise TypeError("tensor operands must all be states or all be unitaries")


def _support_axes(u: UnitaryOp, registry: HilbertRegistry) -> List[int]:
    if not u.support:
        raise RegistryError("unitary is not bound to a support; use UnitaryOp.on(...)")
    missing = [s for s in u.support if s not in registry]
    if missing:
        raise RegistryError(f"support not in registry: {', '.join(str(s) for s in missing)}")
    axes = [registry.index(s) for s in u.support]
    sdims = [registry.dims[a] for a in axes]
    if int(np.prod(sdims)) != u.dim:
        raise DimensionMismatchError(
            f"unitary of dimension {u.dim} on support of dimension {int(np.prod(sdims))}"
        )
    return axes


def _apply_to_tensor(mat: np.ndarray, psi: np.ndarray, axes: List[int], sdims: List[int]) -> np.ndarray:
    k = len(axes)
    op = mat.reshape(sdims + sdims)
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply(u: UnitaryOp, s: Operand) -> Operand:
    """Apply u on its support factors, identity elsewhere."""
    registry = s.registry
    axes = _support_axes(u, registry)
    sdims = [registry.dims[a] for a in axes]
    if isinstance(s, PureState):
        out = _apply_to_tensor(u.matrix, s.tensor_view(), axes, sdims)
        return PureState(registry, out.reshape(-1))
    # rho -> U rho U^dagger: act on row axes, then on column axes with U*
    n = len(registry)
    rho = s.tensor_view()
    rho = _apply_to_tensor(u.matrix, rho, axes, sdims)
    rho = _apply_to_tensor(u.matrix.conj(), rho, [a + n for a in axes], sdims)
    d = registry.total_dim
    return DensityOperator(registry, rho.reshape(d, d))


def permute(s: Operand, new_order: Sequence[SubsystemId]) -> Operand:
    """Reorder tensor factors; labels travel with their data."""
    registry = s.registry
    new_order = list(new_order)
    if len(new_order) != len(registry) or set(new_order) != set(registry.ids):
        raise RegistryError(
            f"{[str(x) for x in new_order]} is not a permutation of {registry.labels()}"
        )
    perm = [registry.index(sid) for sid in new_order]
    new_registry = registry.subset(new_order)
    if isinstance(s, PureState):
        return PureState(new_registry, s.tensor_view().transpose(perm).reshape(-1))
    n = len(registry)
    d = registry.total_dim
    rho = s.tensor_view().transpose(perm + [p + n for p in perm])
    return DensityOperator(new_registry, rho.reshape(d, d))


def exchange(s: Operand, a: SubsystemId, b: SubsystemId) -> Operand:
    """Exchange the contents of two equal-dimension factors; the registry is unchanged.

    This is the physical switch of two wires: whatever was in position a
    now sits in position b and vice versa.
    """
    registry = s.registry
    if registry.dim_of(a) != registry.dim_of(b):
        raise DimensionMismatchError(f"cannot exchange {a} and {b}: dimensions differ")
    order = list(registry.ids)
    ia, ib = registry.index(a), registry.index(b)
    order[ia], order[ib] = order[ib], order[ia]
    moved = permute(s, order)
    if isinstance(moved, PureState):
        return PureState(registry, moved.amplitudes)
    return DensityOperator(registry, moved.matrix)


def partial_trace(s: Operand, keep: Iterable[SubsystemId]) -> DensityOperator:
    """Trace out everything not in keep; kept factors stay in registry order."""
    registry = s.registry
    keep = set(keep)
    if not keep:
        raise RegistryError("partial trace must keep at least one factor")
    missing = keep - set(registry.ids)
    if missing:
        raise RegistryError(f"cannot keep factors outside the registry: {', '.join(str(m) for m in missing)}")

    kept = [i for i, sid in enumerate(registry.ids) if sid in keep]
    traced = [i for i, sid in enumerate(registry.ids) if sid not in keep]
    kept_reg = registry.subset([registry.ids[i] for i in kept])
    dk = kept_reg.total_dim
    dt = registry.total_dim // dk

    if isinstance(s, PureState):
        x = s.tensor_view().transpose(kept + traced).reshape(dk, dt)
        rho = x @ x.conj().T
    else:
        n = len(registry)
        t = s.tensor_view().transpose(kept + traced + [k + n for k in kept] + [t + n for t in traced])
        rho = np.einsum("atbt->ab", t.reshape(dk, dt, dk, dt))
    return DensityOperator(kept_reg, rho)


# =============================================================================
# Distances and decompositions
# =============================================================================

def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of rho - sigma, clipped into [0, 1]."""
    _check_same_registry(rho.registry, sigma.registry, "trace_distance")
    sv = np.linalg.svd(rho.matrix - sigma.matrix, compute_uv=False)
    return float(min(1.0, max(0.0, 0.5 * np.sum(sv))))


def overlap(a: PureState, b: PureState) -> complex:
    """<a|b>"""
    _check_same_registry(a.registry, b.registry, "overlap")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(rho: Operand, sigma: Operand) -> float:
    """Uhlmann fidelity (squared convention) of two states."""
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return abs(overlap(rho, sigma)) ** 2
    if isinstance(rho, PureState):
        return sigma.expectation(rho)
    if isinstance(sigma, PureState):
        return rho.expectation(sigma)
    _check_same_registry(rho.registry, sigma.registry, "fidelity")
    sqrt_rho = la.sqrtm(rho.matrix)
    inner = np.linalg.svd(sqrt_rho @ la.sqrtm(sigma.matrix), compute_uv=False)
    return float(min(1.0, np.sum(inner) ** 2))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left: List[PureState]
    right: List[PureState]
    left_registry: HilbertRegistry
    right_registry: HilbertRegistry

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        """Amplitudes of sum_m lambda_m |a_m>|b_m> in (left, right) factor order"""
        vec = np.zeros(self.left_registry.total_dim * self.right_registry.total_dim, dtype=np.complex128)
        for lam, a, b in zip(self.coefficients, self.left, self.right):
            vec += lam * np.kron(a.amplitudes, b.amplitudes)
        return vec


def schmidt(s: PureState, cut: Iterable[SubsystemId]) -> SchmidtDecomposition:
    """Schmidt decomposition across cut | complement.

    Coefficients are returned in descending order; numerically zero
    coefficients (below the structural tolerance) are dropped.
    """
    registry = s.registry
    cut = set(cut)
    if not cut or cut >= set(registry.ids):
        raise RegistryError("Schmidt cut must be a nonempty proper subset of the registry")
    missing = cut - set(registry.ids)
    if missing:
        raise RegistryError(f"cut outside the registry: {', '.join(str(m) for m in missing)}")

    left_ids = [sid for sid in registry.ids if sid in cut]
    right_ids = [sid for sid in registry.ids if sid not in cut]
    moved = permute(s, left_ids + right_ids)
    left_reg, right_reg = registry.subset(left_ids), registry.subset(right_ids)
    mat = moved.amplitudes.reshape(left_reg.total_dim, right_reg.total_dim)
    u, sv, vh = np.linalg.svd(mat, full_matrices=False)

    keep = sv > tolerances().structural
    coeffs = sv[keep]
    left = [PureState.from_vector(left_reg, u[:, i], normalize=True) for i in np.flatnonzero(keep)]
    right = [PureState.from_vector(right_reg, vh[i, :], normalize=True) for i in np.flatnonzero(keep)]
    return SchmidtDecomposition(coeffs, left, right, left_reg, right_reg)


# =============================================================================
# Randomness
# =============================================================================

def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, n: int) -> List[int]:
    """n independent integer seeds derived from one recorded seed"""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def haar_matrix(dim: int, seed: SeedLike) -> np.ndarray:
    """Haar-distributed unitary matrix via QR of a Ginibre matrix with phase fix."""
    if dim < 1:
        raise DimensionMismatchError(f"dimension must be >= 1, got {dim}")
    rng = make_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_unitary(dim: int, seed: SeedLike, support: Sequence[SubsystemId] = ()) -> UnitaryOp:
    return UnitaryOp(tuple(support), haar_matrix(dim, seed))


def random_orthobasis(dim: int, seed: SeedLike,
                      registry: Optional[HilbertRegistry] = None) -> List[PureState]:
    """Columns of a Haar unitary as states (default registry: one C factor)."""
    registry = registry or HilbertRegistry(((C(), dim),))
    if registry.total_dim != dim:
        raise DimensionMismatchError(f"registry dimension {registry.total_dim} != {dim}")
    u = haar_matrix(dim, seed)
    return [PureState.from_vector(registry, u[:, k], normalize=True) for k in range(dim)]


def random_state(registry: HilbertRegistry, seed: SeedLike) -> PureState:
    rng = make_rng(seed)
    d = registry.total_dim
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.from_vector(registry, vec, normalize=True)


def random_density(registry: HilbertRegistry, seed: SeedLike, rank: Optional[int] = None) -> DensityOperator:
    """Random mixed state: partial trace of a random purification."""
    rng = make_rng(seed)
    d = registry.total_dim
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return DensityOperator(registry, rho / np.trace(rho).real)


# =============================================================================
# Unitary-group helpers
# =============================================================================

def polar_unitary(g: np.ndarray) -> np.ndarray:
    """Unitary U maximizing Re tr(U g), i.e. the adjoint of the polar factor of g."""
    u, _ = la.polar(g)
    return u.conj().T


def hermitian_from_params(theta: np.ndarray, dim: int) -> np.ndarray:
    """Hermitian matrix from dim^2 real parameters (diag, then real and imaginary upper parts)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (dim * dim,):
        raise DimensionMismatchError(f"need {dim * dim} parameters, got {theta.shape}")
    h = np.diag(theta[:dim]).astype(np.complex128)
    iu = np.triu_indices(dim, k=1)
    m = len(iu[0])
    upper = theta[dim:dim + m] + 1j * theta[dim + m:]
    h[iu] = upper
    h[(iu[1], iu[0])] = upper.conj()
    return h


def unitary_from_params(theta: np.ndarray, dim: int) -> np.ndarray:
    return la.expm(1j * hermitian_from_params(theta, dim))
