"""Tensor-product Hilbert spaces and sparse operators.

Spin sites use S = sigma/2 with basis order (up, down), so S^z = diag(1/2, -1/2)
and the Jordan-Wigner fermion is occupied when the spin is up.  Oscillator
sites are truncated at ``n_max`` quanta (``n_max + 1`` levels, hard cutoff).
Site 0 is the most significant tensor factor.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation, ResourceError, UnsupportedError

DENSE_LIMIT = 4096
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class TwoLevel:
    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Oscillator:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ContractViolation(f"oscillator cutoff n_max must be an integer >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class HilbertSpec:
    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))

    @classmethod
    def spins(cls, n: int) -> "HilbertSpec":
        return cls((TwoLevel(),) * n)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    @property
    def total_dimension(self) -> int:
        return math.prod(self.dims)

    def basis_digits(self) -> np.ndarray:
        """(total_dimension, n_sites) array of per-site basis indices."""
        return np.array(np.unravel_index(np.arange(self.total_dimension), self.dims)).T.reshape(
            self.total_dimension, len(self.sites)
        )

    def spin_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.sites) if isinstance(s, TwoLevel)]

    def oscillator_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.sites) if isinstance(s, Oscillator)]


def _to_csr(m) -> sp.csr_matrix:
    out = sp.csr_matrix(m, dtype=complex)
    out.sum_duplicates()
    out.sort_indices()
    return out


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpec
    matrix: sp.csr_matrix
    hermitian: bool = False
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = _to_csr(self.matrix)
        d = self.space.total_dimension
        if m.shape != (d, d):
            raise ContractViolation(f"matrix shape {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", m)
        if self.hermitian and hermitian_deviation(m) >= HERMITIAN_TOL:
            raise ContractViolation(f"operator flagged Hermitian deviates by {hermitian_deviation(m):.3e}")

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise ContractViolation("operators act on different spaces")

    def __add__(self, other):
        if other == 0:
            return self
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    __radd__ = __add__

    def __sub__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ other

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def as_hermitian(self) -> "Operator":
        """Return a copy flagged Hermitian (validated)."""
        return Operator(self.space, self.matrix, hermitian=True, warnings=self.warnings)

    def to_dense(self) -> np.ndarray:
        if self.space.total_dimension > DENSE_LIMIT:
            raise ResourceError(f"dense conversion refused for dimension {self.space.total_dimension} > {DENSE_LIMIT}")
        return self.matrix.toarray()

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))


def hermitian_deviation(m) -> float:
    diff = (m - m.conj().T).tocoo()
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def anticommutator(a: Operator, b: Operator) -> Operator:
    return a @ b + b @ a


def max_abs(op: Operator) -> float:
    m = op.matrix
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


def identity(space: HilbertSpec) -> Operator:
    return Operator(space, sp.identity(space.total_dimension, dtype=complex, format="csr"), hermitian=True)


# local matrices ---------------------------------------------------------

_SPIN = {
    "Sx": np.array([[0, 0.5], [0.5, 0]], dtype=complex),
    "Sy": np.array([[0, -0.5j], [0.5j, 0]], dtype=complex),
    "Sz": np.array([[0.5, 0], [0, -0.5]], dtype=complex),
    "Splus": np.array([[0, 1], [0, 0]], dtype=complex),
    "Sminus": np.array([[0, 0], [1, 0]], dtype=complex),
}


def annihilation(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr", dtype=complex)


def position_power(n_max: int, power: int) -> sp.csr_matrix:
    """(a + a^dag)^power restricted to the lowest n_max + 1 levels.

    Computed in a padded space so every retained matrix element is exact.
    """
    pad = n_max + power
    a = annihilation(pad)
    x = a + a.T
    xp = reduce(lambda u, v: u @ v, [x] * power) if power else sp.identity(pad + 1, dtype=complex)
    return _to_csr(xp[: n_max + 1, : n_max + 1])


def _boson(kind: str, n_max: int, zero_point: float) -> sp.csr_matrix:
    a = annihilation(n_max)
    if kind == "A":
        return a
    if kind == "Adag":
        return _to_csr(a.T)
    if kind == "NumOp":
        return sp.diags(np.arange(n_max + 1, dtype=complex), 0, format="csr")
    if kind == "Phi":
        return _to_csr(zero_point * (a + a.T))
    raise ContractViolation(f"unknown boson kind {kind!r}")


class Kind(str, enum.Enum):
    Sx = "Sx"
    Sy = "Sy"
    Sz = "Sz"
    Splus = "Splus"
    Sminus = "Sminus"
    A = "A"
    Adag = "Adag"
    NumOp = "NumOp"
    Phi = "Phi"


def embed(space: HilbertSpec, factors: dict[int, object]) -> Operator:
    """Kronecker product with ``factors[i]`` on site i and identity elsewhere."""
    mats = []
    for i, site in enumerate(space.sites):
        f = factors.get(i)
        mats.append(sp.identity(site.dim, dtype=complex, format="csr") if f is None else sp.csr_matrix(f, dtype=complex))
    return Operator(space, reduce(lambda u, v: sp.kron(u, v, format="csr"), mats))


def site_operator(space: HilbertSpec, site: int, kind, zero_point: float = 1.0) -> Operator:
    kind = Kind(kind).value
    target = space.sites[site]
    if kind in _SPIN:
        if not isinstance(target, TwoLevel):
            raise ContractViolation(f"spin operator {kind} requested on oscillator site {site}")
        local = _SPIN[kind]
    else:
        if not isinstance(target, Oscillator):
            raise ContractViolation(f"boson operator {kind} requested on two-level site {site}")
        local = _boson(kind, target.n_max, zero_point)
    op = embed(space, {site: local})
    if kind in ("Sx", "Sy", "Sz", "NumOp", "Phi"):
        return op.as_hermitian()
    return op


def jw_fermion(space: HilbertSpec, n: int) -> Operator:
    """Jordan-Wigner annihilator f_n = S_n^- prod_{m<n} (-2 S_m^z).

    The string factor equals exp(i pi sum_{m<n} (S_m^z + 1/2)).
    """
    if not 0 <= n < len(space.sites):
        raise ContractViolation(f"site {n} out of range")
    for m in range(n + 1):
        if not isinstance(space.sites[m], TwoLevel):
            raise ContractViolation(f"Jordan-Wigner string crosses non-spin site {m}")
    string = np.diag([-1.0, 1.0]).astype(complex)
    factors = {m: string for m in range(n)}
    factors[n] = _SPIN["Sminus"]
    return embed(space, factors)


def verify_fermion_algebra(N: int) -> float:
    """Largest entrywise violation of the canonical anticommutation relations."""
    if not 1 <= N <= 8:
        raise ResourceError(f"dense fermion algebra check supports 1 <= N <= 8, got {N}")
    space = HilbertSpec.spins(N)
    dim = space.total_dimension
    f = [jw_fermion(space, n).to_dense() for n in range(N)]
    fd = [m.conj().T for m in f]
    eye = np.eye(dim)
    worst = 0.0
    for m in range(N):
        for n in range(N):
            worst = max(
                worst,
                np.max(np.abs(f[m] @ f[n] + f[n] @ f[m])),
                np.max(np.abs(fd[m] @ fd[n] + fd[n] @ fd[m])),
                np.max(np.abs(f[m] @ fd[n] + fd[n] @ f[m] - (m == n) * eye)),
            )
    return float(worst)


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


def bonds(n: int, boundary) -> list[tuple[int, int]]:
    out = [(i, i + 1) for i in range(n - 1)]
    if Boundary(boundary) is Boundary.PERIODIC and n > 2:
        out.append((n - 1, 0))
    return out


def xxz_hamiltonian(N: int, J_xy: float, J_z: float, B_z: float = 0.0, boundary="open") -> Operator:
    """-J_xy sum (SxSx + SySy) + J_z sum SzSz - B_z sum Sz on N spins."""
    if N < 2:
        raise ContractViolation("XXZ chain needs N >= 2")
    space = HilbertSpec.spins(N)
    H = Operator(space, sp.csr_matrix((space.total_dimension,) * 2, dtype=complex))
    sz = [site_operator(space, i, "Sz") for i in range(N)]
    for i, j in bonds(N, boundary):
        flip = embed(space, {i: _SPIN["Splus"], j: _SPIN["Sminus"]})
        H = H - (J_xy / 2) * (flip + flip.dag()) + J_z * (sz[i] @ sz[j])
    for i in range(N):
        H = H - B_z * sz[i]
    return H.as_hermitian()


def free_fermion_hamiltonian(N: int, J_xy: float, J_z: float, boundary="open") -> Operator:
    """Hopping plus nearest-neighbor density interaction assembled from JW fermions."""
    if Boundary(boundary) is not Boundary.OPEN:
        raise UnsupportedError(
            "periodic fermion chain is not built: the Jordan-Wigner image of the spin ring carries a "
            "fermion-parity-dependent boundary term; use xxz_hamiltonian(boundary='periodic') instead"
        )
    if N < 2:
        raise ContractViolation("chain needs N >= 2")
    space = HilbertSpec.spins(N)
    f = [jw_fermion(space, n) for n in range(N)]
    half = 0.5 * identity(space)
    dens = [fn.dag() @ fn - half for fn in f]
    H = Operator(space, sp.csr_matrix((space.total_dimension,) * 2, dtype=complex))
    for n in range(N - 1):
        hop = f[n].dag() @ f[n + 1]
        H = H - (J_xy / 2) * (hop + hop.dag()) + J_z * (dens[n] @ dens[n + 1])
    return H.as_hermitian()


def oscillator_hamiltonian(n_max: int, omega: float, anharmonic: float | None = None) -> Operator:
    """omega (a^dag a + 1/2) - anharmonic * (a + a^dag)^4 on one truncated oscillator."""
    space = HilbertSpec((Oscillator(n_max),))
    n = np.arange(n_max + 1)
    H = sp.diags(omega * (n + 0.5), 0, format="csr", dtype=complex)
    notes = []
    if anharmonic:
        if n_max < 2:
            raise ContractViolation("anharmonic oscillator needs n_max >= 2")
        H = H - anharmonic * position_power(n_max, 4)
        vals, vecs = np.linalg.eigh(H.toarray())
        if abs(vecs[0, 0]) ** 2 < 0.5:
            notes.append(
                f"quartic coefficient {anharmonic:g} reorders levels: lowest eigenstate is not a perturbed vacuum"
            )
    return Operator(space, H, hermitian=True, warnings=tuple(notes))


# conserved-quantity sectors -----------------------------------------------


class Conserved(str, enum.Enum):
    TOTAL_SZ = "total_sz"
    FERMION_NUMBER = "fermion_number"
    EXCITATION_NUMBER = "excitation_number"


def quantum_numbers(space: HilbertSpec, quantity) -> np.ndarray:
    """Value of the conserved quantity on every basis state.

    Excitation number counts oscillator quanta plus two-level sites in their
    index-1 (spin-down) state, the upper level of -B^z sigma^z / 2.
    """
    quantity = Conserved(quantity)
    digits = space.basis_digits()
    spins = space.spin_indices()
    if quantity is Conserved.TOTAL_SZ:
        return np.sum(0.5 - digits[:, spins], axis=1)
    if quantity is Conserved.FERMION_NUMBER:
        return np.sum(digits[:, spins] == 0, axis=1).astype(float)
    return np.sum(digits, axis=1).astype(float)


def conserved_operator(space: HilbertSpec, quantity) -> Operator:
    return Operator(space, sp.diags(quantum_numbers(space, quantity).astype(complex), 0, format="csr"), hermitian=True)


@dataclass(frozen=True, eq=False)
class SectorProjector:
    space: HilbertSpec
    conserved_quantity: Conserved
    eigenvalue: float
    basis_index_list: np.ndarray

    @classmethod
    def build(cls, space: HilbertSpec, quantity, eigenvalue: float) -> "SectorProjector":
        q = quantum_numbers(space, quantity)
        idx = np.flatnonzero(np.isclose(q, eigenvalue))
        return cls(space, Conserved(quantity), float(eigenvalue), idx)

    @property
    def dimension(self) -> int:
        return len(self.basis_index_list)

    def matrix(self) -> sp.csr_matrix:
        d = np.zeros(self.space.total_dimension, dtype=complex)
        d[self.basis_index_list] = 1
        return sp.diags(d, 0, format="csr")

    def restrict(self, op: Operator) -> sp.csr_matrix:
        idx = self.basis_index_list
        return op.matrix[idx][:, idx]

    def embed(self, vec: np.ndarray) -> np.ndarray:
        full = np.zeros(self.space.total_dimension, dtype=complex)
        full[self.basis_index_list] = vec
        return full

    def project(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.basis_index_list]

    def leakage(self, op: Operator) -> float:
        """Largest matrix element of ``op`` connecting the sector to its complement."""
        mask = np.ones(self.space.total_dimension, dtype=bool)
        mask[self.basis_index_list] = False
        block = op.matrix[self.basis_index_list][:, np.flatnonzero(mask)]
        return float(np.max(np.abs(block.data))) if block.nnz else 0.0
