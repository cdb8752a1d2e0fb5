"""Lindblad master equation on vectorized density matrices.

Vectorization is row-major: entry ``(r, c)`` of ``rho`` sits at ``r*N + c``,
so ``vec(A rho B) = kron(A, B.T) @ vec(rho)``.

Two steady-state routes are provided.  :func:`steady_state` is a direct
sparse solve of the full Liouvillian and suits the three-mode Kerr model and
small four-mode spaces.  :func:`perturbative_moments` solves the master
equation order by order in the drive and returns the leading-order photon
moments; it handles four-mode spaces with tens of phonon levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fock
from .errors import InvalidArgument, NonUniqueSteadyState, SolverFailure, StepSizeError
from .fock import FockSpace, Operator
from .model import SystemParams, build_h_eff, build_h_system

G2_GUARD = 1e-14
PHOTON_CUTOFF = 3


@dataclass(frozen=True)
class SuperOperator:
    """Sparse generator acting on ``vec(rho)``.

    ``grading`` optionally holds a per-basis-state excitation count and a
    scale ``s``; :func:`steady_state` uses them to balance the solve when
    entries of the steady state span many orders of magnitude.
    """

    space: FockSpace
    matrix: sp.csr_matrix
    grading: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.space.total_dim
        if self.matrix.shape != (n * n, n * n):
            raise InvalidArgument("superoperator shape does not match space")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        if other.space != self.space:
            raise InvalidArgument("superoperators live on different spaces")
        return SuperOperator(self.space, (self.matrix + other.matrix).tocsr(),
                             self.grading or other.grading)

    def apply(self, rho: "DensityMatrix") -> np.ndarray:
        n = self.space.total_dim
        return (self.matrix @ rho.matrix.reshape(-1)).reshape(n, n)


@dataclass(frozen=True)
class DensityMatrix:
    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        n = self.space.total_dim
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (n, n):
            raise InvalidArgument("density matrix shape does not match space")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, space: FockSpace, vec) -> "DensityMatrix":
        n = space.total_dim
        return cls(space, np.asarray(vec, dtype=complex).reshape(n, n))

    @classmethod
    def pure(cls, space: FockSpace, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(space, np.outer(psi, psi.conj()))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def vector(self) -> np.ndarray:
        return self.matrix.reshape(-1)

    def expect(self, op: Operator) -> complex:
        if op.space != self.space:
            raise InvalidArgument("operator lives on a different space")
        return complex((op.matrix.multiply(self.matrix.T)).sum())

    def _diag_moment(self, mode: int, power: int) -> float:
        mode = self.space.check_mode(mode)
        n = self.space.states[:, mode].astype(float)
        w = n.copy() if power == 1 else n * (n - 1)
        return float(np.real(np.dot(w, np.diag(self.matrix))))

    def occupation(self, mode: int) -> float:
        return self._diag_moment(mode, 1)

    def pair_moment(self, mode: int) -> float:
        """``<a^dag^2 a^2>`` of ``mode``."""
        return self._diag_moment(mode, 2)

    def g2(self, mode: int, guard: float = G2_GUARD) -> float | None:
        return g2_zero_delay(self, mode, guard)

    def check(self, herm_tol: float = 1e-10, trace_tol: float = 1e-9,
              psd_tol: float = 1e-8) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > herm_tol:
            raise InvalidArgument("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > trace_tol:
            raise InvalidArgument("density matrix trace differs from 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -psd_tol:
            raise InvalidArgument("density matrix has negative eigenvalues")


def _kron(a, b):
    return sp.kron(a, b, format="csr")


def hamiltonian_super(h: Operator) -> SuperOperator:
    """``-i[H, .]``."""
    eye = sp.identity(h.space.total_dim, format="csr", dtype=complex)
    m = -1j * (_kron(h.matrix, eye) - _kron(eye, h.matrix.T))
    return SuperOperator(h.space, m.tocsr())


def dissipator(op: Operator, rate: float) -> SuperOperator:
    """``(rate/2) D[op]`` with ``D[o] rho = 2 o rho o^dag - o^dag o rho - rho o^dag o``."""
    if rate < 0:
        raise InvalidArgument("dissipation rate must be >= 0")
    n = op.space.total_dim
    if rate == 0:
        return SuperOperator(op.space, sp.csr_matrix((n * n, n * n), dtype=complex))
    o = op.matrix
    ono = (o.conj().T @ o).tocsr()
    eye = sp.identity(n, format="csr", dtype=complex)
    m = rate * (_kron(o, o.conj()) - 0.5 * _kron(ono, eye) - 0.5 * _kron(eye, ono.T))
    return SuperOperator(op.space, m.tocsr())


def _photon_grading(space: FockSpace, params: SystemParams, n_photon_modes: int):
    exc = space.states[:, :n_photon_modes].sum(axis=1)
    eps = max(abs(e) for e in params.drives)
    kap = max(params.kappas)
    s = eps / kap if eps > 0 and kap > 0 else 1.0
    return (exc, s)


def liouvillian(params: SystemParams, space: FockSpace) -> SuperOperator:
    """Master-equation generator.

    A four-mode ``(L, C, R, b)`` space gives the full optomechanical model with
    a thermal mechanical bath.  A three-mode ``(L, C, R)`` space gives the
    effective Kerr model with cavity losses only.
    """
    if space.n_modes == 4:
        h = build_h_system(params, space)
        total = hamiltonian_super(h)
        b = fock.annihilator(space, fock.MODE_B)
        total = total + dissipator(b, params.gamma * (params.n_th + 1))
        total = total + dissipator(b.dag(), params.gamma * params.n_th)
    elif space.n_modes == 3:
        h = build_h_eff(params).hamiltonian(space)
        total = hamiltonian_super(h)
    else:
        raise InvalidArgument("liouvillian needs a 3-mode (L, C, R) or 4-mode (L, C, R, b) space")
    for m, k in enumerate(params.kappas):
        total = total + dissipator(fock.annihilator(space, m), k)
    return SuperOperator(space, total.matrix, _photon_grading(space, params, 3))


def _trace_row(n: int) -> np.ndarray:
    return np.arange(n) * (n + 1)


def steady_state(L: SuperOperator, rtol: float = 1e-10) -> DensityMatrix:
    """Unique steady state by sparse LU with one row replaced by the trace condition."""
    n = L.space.total_dim
    A = L.matrix.tocsr()
    diag_idx = _trace_row(n)
    if L.grading is not None:
        exc, s = L.grading
        # rho_rc ~ s**(n_r + n_c); rescale so all unknowns are O(1)
        w = np.power(float(s), exc.astype(float))
        t = np.kron(w, w)
    else:
        t = np.ones(n * n)
    A = sp.diags(1.0 / t) @ A @ sp.diags(t)
    A = A.tolil()
    A[0, :] = 0
    A[0, diag_idx] = t[diag_idx]
    A = A.tocsc()
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
        y = lu.solve(rhs)
    except RuntimeError as exc:
        raise NonUniqueSteadyState(f"steady state is not unique: {exc}") from exc
    if not np.all(np.isfinite(y)):
        raise NonUniqueSteadyState("steady-state solve produced non-finite values")
    vec = t * y
    resid = np.linalg.norm(L.matrix @ vec)
    norm_L = spla.norm(L.matrix, 1)
    if resid > rtol * max(norm_L, 1e-300) * np.linalg.norm(vec):
        raise SolverFailure(f"steady-state residual {resid:.3e} above tolerance", resid)
    rho = vec.reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if not tr > 0:
        raise NonUniqueSteadyState("steady state has non-positive trace")
    return DensityMatrix(L.space, rho / tr)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: list

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def _clean(space: FockSpace, vec: np.ndarray) -> DensityMatrix:
    n = space.total_dim
    m = vec.reshape(n, n)
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(space, m / np.trace(m).real)


def evolve(rho0: DensityMatrix, L: SuperOperator, t_final: float, dt: float,
           save_every: int = 1, trace_tol: float = 1e-6) -> Trajectory:
    """Fixed-step fourth-order Runge-Kutta integration of ``d rho/dt = L rho``."""
    if rho0.space != L.space:
        raise InvalidArgument("state and generator live on different spaces")
    if not dt > 0 or t_final < 0:
        raise InvalidArgument("need dt > 0 and t_final >= 0")
    steps = int(round(t_final / dt))
    if not math.isclose(steps * dt, t_final, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidArgument("t_final must be a multiple of dt")
    M = L.matrix
    idx = _trace_row(L.space.total_dim)
    y = rho0.vector().astype(complex).copy()
    times = [0.0]
    states = [_clean(L.space, y)]
    for k in range(1, steps + 1):
        k1 = M @ y
        k2 = M @ (y + 0.5 * dt * k1)
        k3 = M @ (y + 0.5 * dt * k2)
        k4 = M @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tr = y[idx].sum()
        if not np.isfinite(tr) or abs(tr - 1) > trace_tol:
            raise StepSizeError(f"trace drifted to {tr} at step {k}; reduce dt")
        y = y / tr
        if k % save_every == 0 or k == steps:
            times.append(k * dt)
            states.append(_clean(L.space, y))
    return Trajectory(np.array(times), states)


def output_current(rho, params: SystemParams, mode: int) -> float:
    """``kappa_mode * <n_mode>``."""
    if mode not in (0, 1, 2):
        raise InvalidArgument("output current is defined for the L, C and R cavities")
    return params.kappas[mode] * rho.occupation(mode)


def g2_zero_delay(rho, mode: int, guard: float = G2_GUARD) -> float | None:
    """Zero-delay correlation, or ``None`` when the occupation is below ``guard``."""
    n = rho.occupation(mode)
    if n < guard:
        return None
    return rho.pair_moment(mode) / n ** 2


# ---------------------------------------------------------------------------
# perturbative steady state

def default_phonon_cutoff(params: SystemParams) -> int:
    return max(8, math.ceil(10 * (params.g ** 2 + params.n_th + 1)))


def default_dims(params: SystemParams, model: str = "full") -> tuple[int, ...]:
    if model == "kerr":
        return (PHOTON_CUTOFF + 1,) * 3
    return (PHOTON_CUTOFF + 1,) * 3 + (default_phonon_cutoff(params) + 1,)


def _sector_states(n: int) -> list[tuple[int, int, int]]:
    return [s for s in np.ndindex(n + 1, n + 1, n + 1) if sum(s) == n]


@dataclass(frozen=True)
class WeakDriveMoments:
    """Leading-order photon moments of the driven steady state.

    ``occupations[j]`` is ``<n_j>`` to order ``eps**2`` and ``pairs[j]`` is
    ``<a_j^dag^2 a_j^2>`` to order ``eps**4``.
    """

    occupations: np.ndarray
    pairs: np.ndarray
    dims: tuple
    model: str

    def occupation(self, mode: int) -> float:
        return float(self.occupations[mode])

    def pair_moment(self, mode: int) -> float:
        return float(self.pairs[mode])

    def g2(self, mode: int, guard: float = G2_GUARD) -> float | None:
        return g2_zero_delay(self, mode, guard)


class _Sectors:
    """Photon-number sectors ``n = 0, 1, 2`` of the chain, each tensored with phonons."""

    def __init__(self, params: SystemParams, n_phonon: int, model: str):
        self.P = n_phonon
        self.states = [_sector_states(n) for n in range(3)]
        P = n_phonon
        b = np.diag(np.sqrt(np.arange(1, P)), 1).astype(complex)
        self.b = b
        eye_p = np.eye(P)
        d = params.detunings
        kap = params.kappas
        sigma_kerr = params.kerr_sign * params.g ** 2
        ph = b.conj().T @ b
        ph_eff = ph - 0.5j * params.gamma * ((params.n_th + 1) * ph + params.n_th * (b @ b.conj().T))
        xb = b + b.conj().T
        self.h_eff = []
        self.eye = []
        for n, basis in enumerate(self.states):
            m = len(basis)
            hp = np.zeros((m, m), dtype=complex)
            pos = {s: i for i, s in enumerate(basis)}
            for i, s in enumerate(basis):
                hp[i, i] = sum(s[j] * (d[j] - 0.5j * kap[j]) for j in range(3))
                if model == "kerr":
                    hp[i, i] += sigma_kerr * s[1] ** 2
                for (src, dst, J) in ((1, 0, params.j_L), (1, 2, params.j_R)):
                    # a_dst^dag a_src and its conjugate
                    if s[src] > 0:
                        t = list(s)
                        t[src] -= 1
                        t[dst] += 1
                        k = pos[tuple(t)]
                        amp = J * math.sqrt(s[src] * (s[dst] + 1))
                        hp[k, i] += amp
                        hp[i, k] += amp
            nC = np.diag([float(s[1]) for s in basis])
            if model == "kerr":
                h = np.kron(hp, eye_p)
            else:
                h = np.kron(hp, eye_p) + np.kron(np.eye(m), ph_eff) + params.g * np.kron(nC, xb)
            self.h_eff.append(h)
            self.eye.append(np.eye(m))
        # drive blocks: W_up[n] maps sector n to n+1 (creation part of the drive)
        self.w_up = []
        for n in range(2):
            lo, hi = self.states[n], self.states[n + 1]
            pos = {s: i for i, s in enumerate(hi)}
            w = np.zeros((len(hi), len(lo)), dtype=complex)
            for i, s in enumerate(lo):
                for j in range(3):
                    t = list(s)
                    t[j] += 1
                    w[pos[tuple(t)], i] += params.drives[j] * math.sqrt(s[j] + 1)
            self.w_up.append(np.kron(w, eye_p))
        self.model = model
        self.jumps = []
        if model != "kerr" and params.gamma > 0:
            for rate, op in ((params.gamma * (params.n_th + 1), b),
                             (params.gamma * params.n_th, b.conj().T)):
                if rate > 0:
                    self.jumps.append((rate, op))

    def phonon_jump(self, n: int, m: int, X: np.ndarray) -> np.ndarray:
        out = np.zeros_like(X)
        if not self.jumps:
            return out
        dn, dm = len(self.states[n]), len(self.states[m])
        P = self.P
        X4 = X.reshape(dn, P, dm, P)
        for rate, c in self.jumps:
            y = np.tensordot(c, X4, axes=(1, 1)).transpose(1, 0, 2, 3)
            out += rate * (y @ c.conj().T).reshape(X.shape)
        return out

    def solve(self, n: int, m: int, rhs: np.ndarray) -> np.ndarray:
        """Solve ``-i H_n X + i X H_m^dag + jumps(X) = -rhs``."""
        A = -1j * self.h_eff[n]
        B = 1j * self.h_eff[m].conj().T
        ta, za = sla.schur(A, output="complex")
        tb, zb = sla.schur(B, output="complex")

        def sylv(q):
            # A X + X B = q via the Schur forms
            f = za.conj().T @ q @ zb
            y = sla.solve_sylvester(ta, tb, f)
            return za @ y @ zb.conj().T

        x0 = sylv(-rhs)
        if not self.jumps:
            return x0
        shape = x0.shape

        def op(v):
            X = v.reshape(shape)
            return (X + sylv(self.phonon_jump(n, m, X))).reshape(-1)

        lin = spla.LinearOperator((x0.size, x0.size), matvec=op, dtype=complex)
        sol, info = spla.gmres(lin, x0.reshape(-1), rtol=1e-13, atol=0.0, restart=50,
                               maxiter=200)
        if info != 0:
            raise SolverFailure(f"sector solve did not converge (info={info})")
        resid = np.linalg.norm(op(sol) - x0.reshape(-1))
        if resid > 1e-10 * max(np.linalg.norm(x0), 1e-300):
            raise SolverFailure("sector solve residual above tolerance", resid)
        return sol.reshape(shape)


def _thermal_diag(P: int, n_th: float) -> np.ndarray:
    if n_th == 0:
        p = np.zeros(P)
        p[0] = 1.0
        return p
    r = n_th / (n_th + 1)
    p = r ** np.arange(P)
    return p / p.sum()


def perturbative_moments(params: SystemParams, phonon_dim: int | None = None,
                         model: str = "full") -> WeakDriveMoments:
    """Leading-order weak-drive moments of the master-equation steady state.

    The steady state is expanded in powers of the drive.  Only the blocks with
    ``n`` photons in the ket and ``m`` in the bra at order ``n + m`` are
    needed for ``<n_j>`` and ``<a_j^dag^2 a_j^2>``; each block obeys a
    Sylvester equation with a small phonon-jump correction that is handled
    by GMRES.  ``model="kerr"`` drops the mechanical mode and uses the
    effective Kerr nonlinearity instead.
    """
    if model not in ("full", "kerr"):
        raise InvalidArgument("model must be 'full' or 'kerr'")
    if model == "kerr":
        P = 1
    else:
        P = int(phonon_dim) if phonon_dim is not None else default_phonon_cutoff(params) + 1
        if P < 1:
            raise InvalidArgument("phonon_dim must be >= 1")
    sec = _Sectors(params, P, model)
    X00 = np.diag(_thermal_diag(P, params.n_th if model == "full" else 0.0)).astype(complex)

    def drive_rhs(n, m, left, right):
        # rhs of block (n, m) from -i[W, rho]; left = X_{n-1,m}, right = X_{n,m-1}
        r = 0
        if left is not None:
            r = r - 1j * (sec.w_up[n - 1] @ left)
        if right is not None:
            r = r + 1j * (right @ sec.w_up[m - 1].conj().T)
        return r

    X10 = sec.solve(1, 0, drive_rhs(1, 0, X00, None))
    X01 = X10.conj().T
    X11 = sec.solve(1, 1, drive_rhs(1, 1, X01, X10))
    X20 = sec.solve(2, 0, drive_rhs(2, 0, X10, None))
    X21 = sec.solve(2, 1, drive_rhs(2, 1, X11, X20))
    X12 = X21.conj().T
    X22 = sec.solve(2, 2, drive_rhs(2, 2, X12, X21))

    occ = np.zeros(3)
    pairs = np.zeros(3)
    d1 = np.real(np.diag(X11)).reshape(len(sec.states[1]), P).sum(axis=1)
    d2 = np.real(np.diag(X22)).reshape(len(sec.states[2]), P).sum(axis=1)
    for j in range(3):
        occ[j] = sum(s[j] * w for s, w in zip(sec.states[1], d1))
        pairs[j] = sum(s[j] * (s[j] - 1) * w for s, w in zip(sec.states[2], d2))
    dims = (3, 3, 3) if model == "kerr" else (3, 3, 3, P)
    return WeakDriveMoments(occ, pairs, dims, model)


# ---------------------------------------------------------------------------
# truncation audit

@dataclass(frozen=True)
class HarnessResult:
    value: float | None
    dims: tuple
    converged: bool
    history: list


def _grow(dims: tuple, photon_modes: int) -> tuple:
    out = [d + 1 for d in dims[:photon_modes]]
    out += [max(2, 2 * d) for d in dims[photon_modes:]]
    return tuple(out)


def convergence_harness(params: SystemParams, base_dims: Sequence[int],
                        observable: Callable, rtol: float = 1e-3,
                        max_rounds: int = 5, max_hilbert_dim: int = 4000,
                        excitation_cap: int | None = None,
                        solver: Callable | None = None) -> HarnessResult:
    """Grow cutoffs until ``observable`` changes by less than ``rtol``.

    Each round adds one level to every photon mode and doubles the phonon
    cutoff.  ``solver(params, space)`` defaults to the direct steady state and
    must return an object accepted by ``observable``.
    """
    base_dims = tuple(int(d) for d in base_dims)
    photon_modes = min(3, len(base_dims))
    if solver is None:
        def solver(p, space):
            return steady_state(liouvillian(p, space))
    dims = base_dims
    history = []
    prev = None
    for _ in range(max_rounds):
        cap = None if excitation_cap is None else excitation_cap + len(history)
        space = fock.make_space(dims, cap, tuple(range(photon_modes)) if cap is not None else None)
        if space.total_dim > max_hilbert_dim:
            break
        value = observable(solver(params, space))
        history.append((dims, value))
        if prev is not None and value is not None:
            if abs(value - prev) <= rtol * max(abs(value), abs(prev), 1e-300):
                return HarnessResult(value, history[-2][0], True, history)
        elif value is None and prev is None and history[:-1]:
            return HarnessResult(None, history[-2][0], True, history)
        prev = value
        dims = _grow(dims, photon_modes)
    last = history[-1] if history else (dims, None)
    return HarnessResult(last[1], last[0], False, history)
