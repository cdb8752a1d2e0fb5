"""System parameters, Hamiltonians and bath quantities.

All frequencies and rates are in units of the mechanical frequency, so
``omega_m = 1`` throughout.  Physical units only enter through
:func:`thermal_occupancy`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from . import fock
from .errors import InvalidArgument
from .fock import FockSpace, Operator

SIGN_CONVENTIONS = {"appendix": 1.0, "polaron": -1.0}

_FLOAT_FIELDS = ("delta_L", "delta_C", "delta_R", "g", "j_L", "j_R",
                 "kappa_L", "kappa_C", "kappa_R", "gamma", "n_th",
                 "eps_L", "eps_C", "eps_R")


@dataclass(frozen=True)
class SystemParams:
    """Model constants in units of the mechanical frequency.

    ``nonlinear_sign`` picks the sign of the effective Kerr shift used by the
    three-mode model and the weak-drive amplitudes: ``"appendix"`` gives the
    C-mode ``n``-photon manifold an offset ``+g**2 n**2``, ``"polaron"`` gives
    ``-g**2 n**2``.  The full four-mode model does not use it.
    """

    delta_L: float = 0.0
    delta_C: float = 0.0
    delta_R: float = 0.0
    g: float = 0.0
    j_L: float = 0.0
    j_R: float = 0.0
    kappa_L: float = 0.0
    kappa_C: float = 0.0
    kappa_R: float = 0.0
    gamma: float = 0.0
    n_th: float = 0.0
    eps_L: float = 0.0
    eps_C: float = 0.0
    eps_R: float = 0.0
    omega_m_hz: float | None = None
    nonlinear_sign: str = "appendix"

    def __post_init__(self):
        for name in _FLOAT_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise InvalidArgument(f"{name} must be a real number, got {v!r}")
            v = float(v)
            if not math.isfinite(v):
                raise InvalidArgument(f"{name} must be finite")
            object.__setattr__(self, name, v)
        for name in ("kappa_L", "kappa_C", "kappa_R", "gamma", "n_th", "g", "j_L", "j_R"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be >= 0")
        if self.nonlinear_sign not in SIGN_CONVENTIONS:
            raise InvalidArgument(f"nonlinear_sign must be one of {sorted(SIGN_CONVENTIONS)}")
        if self.omega_m_hz is not None and not self.omega_m_hz > 0:
            raise InvalidArgument("omega_m_hz must be positive")

    @property
    def delta_kerr(self) -> float:
        """Polaron shift ``g**2`` (unsigned)."""
        return self.g ** 2

    @property
    def kerr_sign(self) -> float:
        return SIGN_CONVENTIONS[self.nonlinear_sign]

    @property
    def kappas(self) -> tuple[float, float, float]:
        return (self.kappa_L, self.kappa_C, self.kappa_R)

    @property
    def drives(self) -> tuple[float, float, float]:
        return (self.eps_L, self.eps_C, self.eps_R)

    @property
    def detunings(self) -> tuple[float, float, float]:
        return (self.delta_L, self.delta_C, self.delta_R)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def with_drives(self, eps_L: float, eps_C: float, eps_R: float) -> "SystemParams":
        return self.replace(eps_L=eps_L, eps_C=eps_C, eps_R=eps_R)

    def swapped(self) -> "SystemParams":
        """Mirror image with the L and R cavities exchanged."""
        return self.replace(delta_L=self.delta_R, delta_R=self.delta_L,
                            j_L=self.j_R, j_R=self.j_L,
                            kappa_L=self.kappa_R, kappa_R=self.kappa_L,
                            eps_L=self.eps_R, eps_R=self.eps_L)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def uniform_params(kappa: float, **kw) -> SystemParams:
    """Parameters with one decay rate shared by the three cavities."""
    return SystemParams(kappa_L=kappa, kappa_C=kappa, kappa_R=kappa, **kw)


@dataclass(frozen=True)
class DriveScenario:
    """Drive pattern ``(eps_L, eps_C, eps_R)`` in units of a reference amplitude."""

    label: str
    weights: tuple[float, float, float]

    def apply(self, params: SystemParams, eps: float) -> SystemParams:
        wL, wC, wR = self.weights
        return params.with_drives(wL * eps, wC * eps, wR * eps)


SCENARIO_LABELS = ("left", "right", "center", "two-sided", "center-release")


def drive_scenario(label: str, center_ratio: float = 1.0) -> DriveScenario:
    """Standard scenarios.

    ``left`` (+k) is ``(1, c, 0)`` and ``right`` (-k) is ``(0, c, 1)`` where
    ``c = center_ratio``.  ``two-sided`` is ``(1, 0, 1)``; ``center`` and
    ``center-release`` are ``(0, 1, 0)``.
    """
    c = float(center_ratio)
    table = {
        "left": (1.0, c, 0.0),
        "right": (0.0, c, 1.0),
        "center": (0.0, 1.0, 0.0),
        "two-sided": (1.0, 0.0, 1.0),
        "center-release": (0.0, 1.0, 0.0),
    }
    if label not in table:
        raise InvalidArgument(f"unknown scenario {label!r}; expected one of {SCENARIO_LABELS}")
    return DriveScenario(label, table[label])


def _require_modes(space: FockSpace, n: int, what: str):
    if space.n_modes != n:
        raise InvalidArgument(f"{what} needs a {n}-mode space, got {space.n_modes} modes")


def build_h_system(params: SystemParams, space: FockSpace) -> Operator:
    """Full rotating-frame Hamiltonian on the (L, C, R, b) space."""
    _require_modes(space, 4, "build_h_system")
    a = [fock.annihilator(space, m) for m in range(3)]
    b = fock.annihilator(space, fock.MODE_B)
    n = [fock.number(space, m) for m in range(3)]
    x_b = b + b.dag()
    terms = [(n[m], params.detunings[m]) for m in range(3)]
    terms.append((fock.number(space, fock.MODE_B), 1.0))
    terms.append((x_b @ n[1], params.g))
    hop_L = a[0].dag() @ a[1]
    hop_R = a[2].dag() @ a[1]
    terms += [(hop_L, params.j_L), (hop_L.dag(), params.j_L),
              (hop_R, params.j_R), (hop_R.dag(), params.j_R)]
    for m in range(3):
        terms.append((a[m] + a[m].dag(), params.drives[m]))
    return fock.compose(terms)


def build_h_om(params: SystemParams, space_cb: FockSpace) -> Operator:
    """Optomechanical cavity plus mirror on a (C, b) space."""
    _require_modes(space_cb, 2, "build_h_om")
    a = fock.annihilator(space_cb, 0)
    b = fock.annihilator(space_cb, 1)
    n = fock.number(space_cb, 0)
    return fock.compose([(n, params.delta_C), (fock.number(space_cb, 1), 1.0),
                         ((b + b.dag()) @ n, params.g)])


def eigenvalue_om(s: int, n: int, params: SystemParams) -> float:
    """Polaron energy ``s*Delta_C + n - s**2 g**2``."""
    if s < 0 or n < 0:
        raise InvalidArgument("photon and phonon numbers must be >= 0")
    return s * params.delta_C + n - s * s * params.g ** 2


@dataclass(frozen=True)
class EffectiveModel:
    """Three-cavity model with the mirror eliminated.

    ``alphas`` are the complex frequencies ``Delta_j - i kappa_j / 2`` and
    ``kerr`` is the signed shift ``sign * g**2``; the C mode carries
    ``kerr * n_C**2``.
    """

    alphas: np.ndarray
    j_L: float
    j_R: float
    kerr: float
    eps: np.ndarray

    @property
    def one_photon_c(self) -> complex:
        return complex(self.alphas[1] + self.kerr)

    @property
    def two_photon_c(self) -> complex:
        return complex(2 * self.alphas[1] + 4 * self.kerr)

    def manifold_energy(self, n: int) -> complex:
        """Complex energy of ``n`` photons in the C cavity alone."""
        return complex(n * self.alphas[1] + self.kerr * n * n)

    def one_photon_matrix(self) -> np.ndarray:
        aL, aC, aR = self.alphas
        return np.array([[aL, self.j_L, 0.0],
                         [self.j_L, aC + self.kerr, self.j_R],
                         [0.0, self.j_R, aR]], dtype=complex)

    def hamiltonian(self, space: FockSpace) -> Operator:
        """Hermitian part on an (L, C, R) space."""
        _require_modes(space, 3, "EffectiveModel.hamiltonian")
        a = [fock.annihilator(space, m) for m in range(3)]
        n = [fock.number(space, m) for m in range(3)]
        terms = [(n[m], float(self.alphas[m].real)) for m in range(3)]
        terms.append((n[1] @ n[1], self.kerr))
        hop_L = a[0].dag() @ a[1]
        hop_R = a[2].dag() @ a[1]
        terms += [(hop_L, self.j_L), (hop_L.dag(), self.j_L),
                  (hop_R, self.j_R), (hop_R.dag(), self.j_R)]
        for m in range(3):
            terms.append((a[m] + a[m].dag(), float(self.eps[m])))
        return fock.compose(terms)


def build_h_eff(params: SystemParams) -> EffectiveModel:
    alphas = np.array([d - 0.5j * k for d, k in zip(params.detunings, params.kappas)])
    return EffectiveModel(alphas=alphas, j_L=params.j_L, j_R=params.j_R,
                          kerr=params.kerr_sign * params.delta_kerr,
                          eps=np.array(params.drives, dtype=float))


def thermal_occupancy(omega_m_hz: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at ordinary frequency ``omega_m_hz``."""
    if not omega_m_hz > 0 or not temperature > 0:
        raise InvalidArgument("frequency and temperature must be positive")
    x = constants.h * omega_m_hz / (constants.k * temperature)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)
