"""Truncated bosonic Fock spaces and sparse operators on them.

Modes are always ordered (L, C, R, b).  A basis state with occupations
``(n_L, n_C, n_R, n_b)`` sits at the row-major index
``((n_L*d_C + n_C)*d_R + n_R)*d_b + n_b`` of the product space.

A space may optionally drop every basis state whose summed occupation over
``capped_modes`` exceeds ``excitation_cap``.  The retained states keep their
row-major relative order, so an uncapped space and a capped space with a
large enough cap enumerate identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument

MODE_L, MODE_C, MODE_R, MODE_B = 0, 1, 2, 3
MODE_NAMES = ("L", "C", "R", "b")


@dataclass(frozen=True)
class FockSpace:
    dims: tuple[int, ...]
    excitation_cap: int | None = None
    capped_modes: tuple[int, ...] | None = None
    states: np.ndarray = field(init=False, repr=False, compare=False)
    _lookup: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not 1 <= len(dims) <= 4:
            raise InvalidArgument(f"need 1 to 4 modes, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise InvalidArgument(f"every dimension must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

        occ = np.array(list(np.ndindex(*dims)), dtype=np.int64).reshape(-1, len(dims))
        lookup = np.arange(occ.shape[0])
        if self.excitation_cap is not None:
            modes = self.capped_modes
            if modes is None:
                modes = tuple(range(len(dims)))
            modes = tuple(int(m) for m in modes)
            if any(not 0 <= m < len(dims) for m in modes):
                raise InvalidArgument(f"capped mode out of range: {modes}")
            if self.excitation_cap < 0:
                raise InvalidArgument("excitation_cap must be >= 0")
            object.__setattr__(self, "capped_modes", modes)
            keep = occ[:, list(modes)].sum(axis=1) <= self.excitation_cap
            lookup = np.full(occ.shape[0], -1)
            lookup[keep] = np.arange(int(keep.sum()))
            occ = occ[keep]
        occ.setflags(write=False)
        lookup.setflags(write=False)
        object.__setattr__(self, "states", occ)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def full_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def total_dim(self) -> int:
        return self.states.shape[0]

    def index(self, occupation: Sequence[int]) -> int:
        """Basis index of an occupation tuple."""
        if len(occupation) != self.n_modes:
            raise InvalidArgument("occupation length does not match the number of modes")
        flat = 0
        for n, d in zip(occupation, self.dims):
            if not 0 <= n < d:
                raise InvalidArgument(f"occupation {tuple(occupation)} outside dims {self.dims}")
            flat = flat * d + int(n)
        pos = int(self._lookup[flat])
        if pos < 0:
            raise InvalidArgument(f"occupation {tuple(occupation)} is above the excitation cap")
        return pos

    def occupation(self, index: int) -> tuple[int, ...]:
        return tuple(int(n) for n in self.states[index])

    def basis_vector(self, occupation: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.total_dim, dtype=complex)
        v[self.index(occupation)] = 1.0
        return v

    def check_mode(self, mode: int) -> int:
        if not 0 <= int(mode) < self.n_modes:
            raise InvalidArgument(f"mode {mode} out of range for {self.n_modes} modes")
        return int(mode)


def make_space(dims: Iterable[int], excitation_cap: int | None = None,
               capped_modes: Sequence[int] | None = None) -> FockSpace:
    dims = tuple(dims)
    if len(dims) == 0:
        raise InvalidArgument("dims must not be empty")
    if capped_modes is not None:
        capped_modes = tuple(capped_modes)
    return FockSpace(dims, excitation_cap, capped_modes)


class Operator:
    """A sparse complex matrix bound to a :class:`FockSpace`."""

    __slots__ = ("space", "matrix")

    def __init__(self, space: FockSpace, matrix):
        m = sp.csr_matrix(matrix, dtype=complex)
        if m.shape != (space.total_dim, space.total_dim):
            raise InvalidArgument(f"matrix shape {m.shape} does not match space dimension "
                                  f"{space.total_dim}")
        m.eliminate_zeros()
        m.sort_indices()
        self.space = space
        self.matrix = m

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise InvalidArgument("operators live on different spaces")
        return None

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __repr__(self):
        return f"Operator(dims={self.space.dims}, nnz={self.matrix.nnz})"


def annihilator(space: FockSpace, mode: int) -> Operator:
    mode = space.check_mode(mode)
    occ = space.states
    src = np.flatnonzero(occ[:, mode] > 0)
    lowered = occ[src].copy()
    lowered[:, mode] -= 1
    dst = np.array([space.index(t) for t in lowered], dtype=np.int64)
    vals = np.sqrt(occ[src, mode].astype(float))
    n = space.total_dim
    return Operator(space, sp.csr_matrix((vals, (dst, src)), shape=(n, n)))


def creator(space: FockSpace, mode: int) -> Operator:
    return annihilator(space, mode).dag()


def number(space: FockSpace, mode: int) -> Operator:
    mode = space.check_mode(mode)
    return Operator(space, sp.diags(space.states[:, mode].astype(float)))


def identity(space: FockSpace) -> Operator:
    return Operator(space, sp.identity(space.total_dim, format="csr"))


def adjoint(op: Operator) -> Operator:
    return op.dag()


def multiply(a: Operator, b: Operator) -> Operator:
    return a @ b


def compose(terms: Sequence[tuple[Operator, complex]]) -> Operator:
    """Linear combination ``sum(c * op for op, c in terms)``."""
    if not terms:
        raise InvalidArgument("compose needs at least one term")
    space = terms[0][0].space
    acc = sp.csr_matrix((space.total_dim, space.total_dim), dtype=complex)
    for op, c in terms:
        if op.space != space:
            raise InvalidArgument("operators live on different spaces")
        acc = acc + complex(c) * op.matrix
    return Operator(space, acc)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def displacement(space: FockSpace, mode: int, beta: float) -> Operator:
    """``exp(beta * (b - b^dag))`` on one mode.

    For ``beta = g/omega_m`` the columns are the displaced number states of the
    one-photon optomechanical manifold.  Accuracy degrades once the cutoff of
    ``mode`` is not large compared with ``beta**2``.
    """
    b = annihilator(space, mode)
    gen = (float(beta) * (b - b.dag())).matrix.tocsc()
    if beta == 0:
        return identity(space)
    return Operator(space, spla.expm(gen))
