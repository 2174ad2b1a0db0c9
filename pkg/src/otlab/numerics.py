"""Dense complex operator algebra and information primitives for dims <= 9.

Everything here runs on exact dense Hermitian eigendecompositions; the
largest Hilbert space in this package is two qutrits (dimension 9), so cubic
solvers are the right tool and no sparsity or precision tricks are needed.
All entropic quantities are in bits.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np

__all__ = [
    "InvalidOperatorError",
    "InvalidStateError",
    "InvalidMeasurementError",
    "PureState",
    "DensityOperator",
    "Povm",
    "Ensemble",
    "von_neumann_entropy",
    "trace_distance",
    "fidelity",
    "partial_trace",
    "haar_random_pure",
    "mutual_information",
    "holevo",
    "classical_mutual_information",
    "xlog2",
    "random_povm",
    "random_density_operator",
]

NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
COMPLETENESS_ATOL = 1e-10
# Eigenvalues in [EIG_FLOOR, 0] are numerical PSD drift and are clamped to 0
# before logarithms; anything below the floor is rejected as unphysical.
EIG_FLOOR = -1e-10


class InvalidOperatorError(ValueError):
    """A density operator failed the Hermiticity/trace/positivity checks."""


class InvalidStateError(ValueError):
    """A state vector is not normalized."""


class InvalidMeasurementError(ValueError):
    """A POVM failed positivity or completeness, or does not fit the states."""


def xlog2(x):
    """Elementwise ``x * log2(x)`` with the ``0 * log 0 = 0`` convention."""
    arr = np.asarray(x, dtype=float)
    out = np.zeros_like(arr)
    mask = arr > 0.0
    out[mask] = arr[mask] * np.log2(arr[mask])
    return float(out) if out.ndim == 0 else out


def _entropy_bits(probs: np.ndarray) -> float:
    return float(max(0.0, -np.sum(xlog2(np.clip(probs, 0.0, None)))))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in a ``dim``-dimensional complex Hilbert space."""

    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.dim < 1 or amps.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} amplitudes, got shape {amps.shape}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_ATOL:
            raise InvalidStateError("state vector is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(dim=amps.size, amplitudes=amps)

    def projector(self) -> "DensityOperator":
        mat = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityOperator(self.dim, mat)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite ``dim x dim`` operator."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {mat.shape}")
        if not np.allclose(mat, mat.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
            raise InvalidOperatorError("operator is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InvalidOperatorError(f"trace is {tr}, expected 1")
        if np.linalg.eigvalsh(mat).min() < EIG_FLOOR:
            raise InvalidOperatorError("operator has a negative eigenvalue beyond tolerance")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix) -> "DensityOperator":
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        return cls(mat.shape[0], mat)

    @classmethod
    def from_pure(cls, amplitudes) -> "DensityOperator":
        return PureState.from_amplitudes(amplitudes).projector()

    @classmethod
    def mixture(cls, weights, operators) -> "DensityOperator":
        """Convex combination of density operators."""
        weights = np.asarray(weights, dtype=float)
        mat = sum(w * op.matrix for w, op in zip(weights, operators))
        return cls.from_matrix(mat)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite measurement: Hermitian elements summing to the identity.

    By default every element must also be positive semidefinite (min
    eigenvalue >= -1e-10).  ``require_psd=False`` skips only that check and
    is used for affine measurement images that reproduce statistics of a
    restricted state family without being physical on all states; the
    resulting object still satisfies Hermiticity and completeness and
    reports its actual minimum eigenvalue via :attr:`min_eigenvalue`.
    """

    dim: int
    elements: tuple
    require_psd: InitVar[bool] = True

    def __post_init__(self, require_psd: bool):
        elems = []
        min_eig = np.inf
        for idx, element in enumerate(self.elements):
            mat = np.asarray(element, dtype=complex)
            if mat.shape != (self.dim, self.dim):
                raise InvalidMeasurementError(
                    f"element {idx} has shape {mat.shape}, expected ({self.dim}, {self.dim})")
            if not np.allclose(mat, mat.conj().T, rtol=0.0, atol=HERMITIAN_ATOL):
                raise InvalidMeasurementError(f"element {idx} is not Hermitian")
            eig_min = float(np.linalg.eigvalsh(mat).min())
            min_eig = min(min_eig, eig_min)
            if require_psd and eig_min < EIG_FLOOR:
                raise InvalidMeasurementError(
                    f"element {idx} has negative eigenvalue {eig_min:.3e}")
            mat.setflags(write=False)
            elems.append(mat)
        if not elems:
            raise InvalidMeasurementError("POVM needs at least one element")
        total = sum(elems)
        if not np.allclose(total, np.eye(self.dim), rtol=0.0, atol=COMPLETENESS_ATOL):
            raise InvalidMeasurementError("elements do not sum to the identity")
        object.__setattr__(self, "elements", tuple(elems))
        object.__setattr__(self, "_min_eigenvalue", min_eig)

    @classmethod
    def from_elements(cls, elements, require_psd: bool = True) -> "Povm":
        elems = [np.asarray(e, dtype=complex) for e in elements]
        if not elems:
            raise InvalidMeasurementError("POVM needs at least one element")
        return cls(elems[0].shape[0], tuple(elems), require_psd=require_psd)

    @classmethod
    def projective(cls, basis_rows) -> "Povm":
        """Rank-1 projectors onto the rows of an orthonormal basis matrix."""
        rows = np.asarray(basis_rows, dtype=complex)
        return cls.from_elements([np.outer(v, v.conj()) for v in rows])

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eigenvalue

    @property
    def is_psd(self) -> bool:
        return self._min_eigenvalue >= EIG_FLOOR

    def outcome_probabilities(self, rho: DensityOperator) -> np.ndarray:
        if rho.dim != self.dim:
            raise InvalidMeasurementError(
                f"POVM dim {self.dim} does not match state dim {rho.dim}")
        probs = np.array([np.trace(m @ rho.matrix).real for m in self.elements])
        return np.clip(probs, 0.0, None)

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Classical-quantum source: probabilities paired with density operators."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(p), op) for p, op in self.entries)
        if not entries:
            raise ValueError("ensemble needs at least one entry")
        probs = np.array([p for p, _ in entries])
        if probs.min() < -NORM_ATOL:
            raise ValueError("ensemble probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > NORM_ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")
        dims = {op.dim for _, op in entries}
        if len(dims) != 1:
            raise ValueError(f"mixed dimensions in ensemble: {sorted(dims)}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def uniform(cls, operators) -> "Ensemble":
        ops = list(operators)
        return cls(tuple((1.0 / len(ops), op) for op in ops))

    @property
    def dim(self) -> int:
        return self.entries[0][1].dim

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    @property
    def states(self) -> tuple:
        return tuple(op for _, op in self.entries)

    def average(self) -> DensityOperator:
        mat = sum(p * op.matrix for p, op in self.entries)
        return DensityOperator.from_matrix(mat)


def _as_density(rho) -> DensityOperator:
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator.from_matrix(rho)


def von_neumann_entropy(rho) -> float:
    """Spectral entropy ``-sum(lambda * log2(lambda))`` of a density operator.

    Eigenvalues inside the numerical PSD tolerance band are clamped to zero;
    arrays are validated first, so a non-Hermitian or non-unit-trace input
    raises :class:`InvalidOperatorError`.
    """
    rho = _as_density(rho)
    return _entropy_bits(rho.eigenvalues())


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    rho, sigma = _as_density(rho), _as_density(sigma)
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    eigs = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(0.5 * np.abs(eigs).sum())


def _zero_junk_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Clamp eigenvalue noise to exactly 0 so square roots stay clean.

    Eigenvalues of rank-deficient PSD matrices come back as O(eps) junk;
    taking sqrt would inflate them to O(1e-8), so anything below 1e-13
    relative to the spectral radius is treated as an exact zero.
    """
    w = np.clip(w, 0.0, None)
    w[w < 1e-13 * max(1.0, float(w.max(initial=0.0)))] = 0.0
    return w


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))``.

    Equals ``|<psi|phi>|`` on pure inputs.  With the trace distance it obeys
    ``D <= sqrt(1 - F^2)`` on every pair.
    """
    rho, sigma = _as_density(rho), _as_density(sigma)
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    w, v = np.linalg.eigh(rho.matrix)
    sqrt_rho = (v * np.sqrt(_zero_junk_eigenvalues(w))) @ v.conj().T
    inner = sqrt_rho @ sigma.matrix @ sqrt_rho
    eigs = _zero_junk_eigenvalues(np.linalg.eigvalsh(inner))
    return float(min(1.0, np.sqrt(eigs).sum()))


def partial_trace(state, dims, keep: int) -> DensityOperator:
    """Reduce a bipartite density operator to one factor.

    ``dims = (d1, d2)`` declares the tensor factorization (first factor is
    the slow index) and ``keep`` selects the subsystem (0 or 1) to retain.
    """
    rho = _as_density(state)
    d1, d2 = int(dims[0]), int(dims[1])
    if d1 * d2 != rho.dim:
        raise ValueError(f"declared factors {d1}x{d2} do not match dim {rho.dim}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 or 1")
    blocks = rho.matrix.reshape(d1, d2, d1, d2)
    if keep == 0:
        reduced = np.einsum("abcb->ac", blocks)
    else:
        reduced = np.einsum("abad->bd", blocks)
    return DensityOperator.from_matrix(reduced)


def haar_random_pure(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-distributed pure state: normalized i.i.d. complex Gaussians."""
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState.from_amplitudes(z / np.linalg.norm(z))


def classical_mutual_information(joint: np.ndarray) -> float:
    """Mutual information in bits of a joint probability table."""
    joint = np.clip(np.asarray(joint, dtype=float), 0.0, None)
    total = joint.sum()
    if total <= 0:
        return 0.0
    joint = joint / total
    p_row = joint.sum(axis=1, keepdims=True)
    p_col = joint.sum(axis=0, keepdims=True)
    mask = joint > 1e-300
    ratio = np.ones_like(joint)
    denom = (p_row * p_col)[mask]
    ratio[mask] = joint[mask] / np.where(denom > 0, denom, 1.0)
    return float(max(0.0, np.sum(joint[mask] * np.log2(ratio[mask]))))


def mutual_information(ensemble: Ensemble, povm: Povm) -> float:
    """Mutual information between the source label and the POVM outcome."""
    if povm.dim != ensemble.dim:
        raise InvalidMeasurementError(
            f"POVM dim {povm.dim} does not match ensemble dim {ensemble.dim}")
    probs = ensemble.probabilities
    table = np.array([[np.trace(m @ op.matrix).real for m in povm.elements]
                      for op in ensemble.states])
    joint = probs[:, None] * np.clip(table, 0.0, None)
    return classical_mutual_information(joint)


def holevo(ensemble: Ensemble) -> float:
    """Holevo quantity ``S(avg) - sum p_i S(rho_i)`` of an ensemble."""
    avg = ensemble.average()
    conditional = sum(p * von_neumann_entropy(op) for p, op in ensemble.entries)
    return float(max(0.0, von_neumann_entropy(avg) - conditional))


def random_density_operator(dim: int, rng: np.random.Generator,
                            rank: int | None = None) -> DensityOperator:
    """Random mixed state from a normalized Wishart matrix."""
    rank = dim if rank is None else rank
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    mat = x @ x.conj().T
    return DensityOperator.from_matrix(mat / np.trace(mat).real)


def random_povm(dim: int, n_elements: int, rng: np.random.Generator,
                real: bool = False, rank: int | None = None) -> Povm:
    """Random POVM via symmetric normalization of random PSD seeds.

    ``real=True`` restricts to real matrices (real off-diagonal parts),
    ``rank`` controls the rank of each seed (default: full).
    """
    if n_elements < 1:
        raise ValueError("need at least one element")
    rank = dim if rank is None else rank
    # Reject ill-conditioned frames so the normalized elements stay exact
    # to machine precision (low-rank seeds can nearly miss a direction).
    for _ in range(100):
        seeds = []
        for _ in range(n_elements):
            x = rng.normal(size=(dim, rank))
            if not real:
                x = x + 1j * rng.normal(size=(dim, rank))
            seeds.append(x @ x.conj().T)
        total = sum(seeds)
        w, v = np.linalg.eigh(total)
        if w.min() > 1e-3 * w.max():
            break
    else:
        seeds.append(0.01 * float(w.max()) * np.eye(dim))
        w, v = np.linalg.eigh(sum(seeds))
    inv_sqrt = (v * (w ** -0.5)) @ v.conj().T
    return Povm.from_elements([inv_sqrt @ g @ inv_sqrt for g in seeds])
