"""Weak-drive amplitude solution of the three-cavity chain.

The state is expanded as ``|0> + sum_j c_j |1_j> + sum_{i<=j} c_ij |1_i 1_j>``
(``c_jj`` multiplies the normalized Fock state ``|2_j>``), and the steady
amplitudes solve a 9x9 linear system with ``c0 = 1``.  Two independent routes
are provided: a direct solve and closed-form polynomial expressions.  They are
meant to be checked against each other.

Throughout, ``delta`` is the signed Kerr shift ``sign * g**2`` selected by
``SystemParams.nonlinear_sign``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ExceptionalPoint, FormulaDomainError, InvalidArgument, PoleError
from .model import SystemParams

SQRT2 = np.sqrt(2.0)
ONE_PHOTON = ("L", "C", "R")
TWO_PHOTON = ("LC", "LR", "CR", "LL", "CC", "RR")
ORDER = ONE_PHOTON + TWO_PHOTON
_MIRROR = {"L": "R", "C": "C", "R": "L"}


@dataclass(frozen=True)
class AlphaSet:
    alpha_L: complex
    alpha_C: complex
    alpha_R: complex
    delta: float

    @classmethod
    def from_params(cls, params: SystemParams) -> "AlphaSet":
        return cls(complex(params.delta_L, -params.kappa_L / 2),
                   complex(params.delta_C, -params.kappa_C / 2),
                   complex(params.delta_R, -params.kappa_R / 2),
                   params.kerr_sign * params.g ** 2)

    def K(self, n: int, alpha: complex) -> complex:
        return alpha + self.alpha_C + n * self.delta

    def F(self, n: int, alpha: complex) -> complex:
        return alpha * (self.alpha_C + n * self.delta)


@dataclass(frozen=True)
class Amplitudes:
    """Steady weak-drive amplitudes; ``c0`` is fixed to 1."""

    c_L: complex
    c_C: complex
    c_R: complex
    c_LC: complex
    c_LR: complex
    c_CR: complex
    c_LL: complex
    c_CC: complex
    c_RR: complex
    eps: tuple = field(default=(0.0, 0.0, 0.0), compare=False)
    c0: complex = 1.0

    @classmethod
    def from_vector(cls, v, eps=(0.0, 0.0, 0.0)) -> "Amplitudes":
        return cls(*(complex(x) for x in v), eps=tuple(float(e) for e in eps))

    def vector(self) -> np.ndarray:
        return np.array([getattr(self, "c_" + k) for k in ORDER], dtype=complex)

    def __getitem__(self, key: str) -> complex:
        return getattr(self, "c_" + key)

    def swapped(self) -> "Amplitudes":
        """Relabel L and R."""
        def mirror(k):
            return "".join(sorted((_MIRROR[c] for c in k), key="LCR".index))
        return Amplitudes.from_vector([self[mirror(k)] for k in ORDER],
                                      eps=self.eps[::-1])


def amplitude_system(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Steady-state equations ``M @ c = rhs`` in the order of :data:`ORDER`."""
    a = AlphaSet.from_params(params)
    aL, aC, aR, d = a.alpha_L, a.alpha_C, a.alpha_R, a.delta
    JL, JR = params.j_L, params.j_R
    eL, eC, eR = params.drives
    s2 = SQRT2
    M = np.zeros((9, 9), dtype=complex)
    M[0, :3] = [aL, JL, 0]
    M[1, :3] = [JL, aC + d, JR]
    M[2, :3] = [0, JR, aR]
    # two-photon rows: drive feeding from one-photon amplitudes, then the block
    M[3, :3] = [eC, eL, 0]
    M[4, :3] = [eR, 0, eL]
    M[5, :3] = [0, eR, eC]
    M[6, :3] = [s2 * eL, 0, 0]
    M[7, :3] = [0, s2 * eC, 0]
    M[8, :3] = [0, 0, s2 * eR]
    M[3:, 3:] = [
        [aL + aC + d, JR, 0, s2 * JL, s2 * JL, 0],
        [JR, aL + aR, JL, 0, 0, 0],
        [0, JL, aR + aC + d, 0, s2 * JR, s2 * JR],
        [s2 * JL, 0, 0, 2 * aL, 0, 0],
        [s2 * JL, 0, s2 * JR, 0, 2 * aC + 4 * d, 0],
        [0, 0, s2 * JR, 0, 0, 2 * aR],
    ]
    rhs = np.zeros(9, dtype=complex)
    rhs[:3] = [-eL, -eC, -eR]
    return M, rhs


def steady_amplitudes_solve(params: SystemParams, max_condition: float = 1e13) -> Amplitudes:
    M, rhs = amplitude_system(params)
    # the blocks are solved separately so tiny drives do not pollute the estimate
    blocks = (M[:3, :3], M[3:, 3:])
    cond = max(np.linalg.cond(b) for b in blocks)
    if not np.isfinite(cond) or cond > max_condition:
        raise ExceptionalPoint(f"amplitude system is singular (condition {cond:.3g})", cond)
    c1 = np.linalg.solve(blocks[0], rhs[:3])
    c2 = np.linalg.solve(blocks[1], -M[3:, :3] @ c1)
    c = np.concatenate([c1, c2])
    scale = np.abs(M) @ np.abs(c) + np.abs(rhs)
    resid = np.abs(M @ c - rhs)
    if np.any(resid > 1e-12 * np.maximum(scale, np.finfo(float).tiny)):
        raise ExceptionalPoint("amplitude solve residual above 1e-12", cond)
    return Amplitudes.from_vector(c, params.drives)


# ---------------------------------------------------------------------------
# closed forms

def _d1(aL, aC, aR, d, JL, JR, printed=False):
    if printed:
        return JL**2 * aL + JR**2 * aR - aL * aR * (aC + d)
    return JR**2 * aL + JL**2 * aR - aL * aR * (aC + d)


def _w(x, y, aC, d):
    return (2 * aC**2 * x + aC**2 * y + 2 * aC * x**2 + 2 * aC * x * y + 6 * aC * x * d
            + aC * y**2 + 3 * aC * y * d + x**2 * y + 3 * x**2 * d + x * y**2
            + 3 * x * y * d + 4 * x * d**2 + 2 * y**2 * d + 2 * y * d**2)


def _d2(aL, aC, aR, d, JL, JR, printed=False):
    if printed:
        t = 0
        for a, J in ((aL, JL), (aR, JR)):
            t += a * (J**2 - a * (a + aC + d)) * (2 * J**2 * (a + aC + 2 * d)
                                                  - a * (a + aC + d) * (aC + 2 * d))
        return t
    return (JL**4 * aR * (aC + aL + 2 * d) + JR**4 * aL * (aC + aR + 2 * d)
            + JL**2 * JR**2 * (aL**2 + aR**2 + (aC + 2 * d) * (aL + aR))
            - JL**2 * aR * _w(aL, aR, aC, d) - JR**2 * aL * _w(aR, aL, aC, d)
            + aL * aR * (aL + aR) * (aC + 2 * d) * (aC + aL + d) * (aC + aR + d))


def _l_table(aL, aC, aR, d, JL, JR):
    return {
        "LL": (JL**4 * aR
               + (JR**2 - (aL + aR) * (aC + aL + d))
               * (-aR * (aC + aR + d) * (aC + 2 * d) + JR**2 * (aC + aR + 2 * d))
               + JL**2 * (JR**2 * (aL - aR)
                          - aR * (aC**2 + aR * (aL + aR) + (3 * aL + aR) * d + 2 * d**2
                                  + aC * (2 * aL + aR + 3 * d)))),
        "LC": JL * (JR**2 * (aL + aR) * (aC + aR + 2 * d)
                    - aR * (aC + 2 * d) * (-JL**2 + (aL + aR) * (aC + aR + d))),
        "LR": JL * JR * (-JR**2 * (aC + aR + 2 * d) + aR * (JL**2 + (aC + aR + d) * (aC + 2 * d))),
        "CL": (-JR**2 * (aL + aR) * (aC + aR + 2 * d)
               + aR * (aC + 2 * d) * (-JL**2 + (aL + aR) * (aC + aR + d))),
        "CC": JL * (JR**2 * aL + JL**2 * aR - aR * (aL + aR) * (aC + aR + d)),
        "CR": JL * JR * aR * (aC + aL + aR + 2 * d),
        "RL": JR**2 * (aC + aR + 2 * d) - aR * (JL**2 + (aC + aR + d) * (aC + 2 * d)),
        "RC": JL * aR * (aC + aL + aR + 2 * d),
        "RR": -JL * JR * (aC + aL + aR + 2 * d),
    }


def _c_table(aL, aC, aR, d, JL, JR):
    return {
        "LL": JL * (JR**2 * aL + JL**2 * aR - aR * (aL + aR) * (aC + aR + d)),
        "LC": aL * (-JR**2 * aL - JL**2 * aR + aR * (aL + aR) * (aC + aR + d)),
        "LR": JR * (JR**2 * aL - aR * (-JL**2 + aL * (2 * aC + aL + aR + 2 * d))),
        "CL": JL * aL * (-JR**2 * aL - JL**2 * aR + aR * (aL + aR) * (aC + aR + d)),
        "CC": (-JL**4 * aR
               - aL * (JR**2 - (aL + aR) * (aC + aL + d)) * (JR**2 - aR * (aC + aR + d))
               + JL**2 * (-JR**2 * (aL + aR)
                          + aR * (aL**2 + aC * (2 * aL + aR) + aR * (aR + d) + aL * (aR + 2 * d)))),
        "CR": JR * aR * (-JR**2 * aL - JL**2 * aR + aL * (aL + aR) * (aC + aL + d)),
        "RL": JL * (JR**2 * aL - aR * (-JL**2 + aL * (2 * aC + aL + aR + 2 * d))),
        "RC": aR * (-JR**2 * aL - JL**2 * aR + aL * (aL + aR) * (aC + aL + d)),
        "RR": JR * (JR**2 * aL + JL**2 * aR - aL * (aL + aR) * (aC + aL + d)),
    }


def coefficient_tables(params: SystemParams, as_printed: bool = False) -> dict:
    """The ``l``, ``c`` and ``r`` coefficient tables plus ``D1`` and ``D2``.

    With ``as_printed=False`` the ``l_L*`` row is negated and the ``r`` table
    is built by the mirrored swap ``r_ij = l_(i' j')`` with ``L' = R``; both
    are needed for consistency with the direct solve.
    """
    a = AlphaSet.from_params(params)
    args = (a.alpha_L, a.alpha_C, a.alpha_R, a.delta, params.j_L, params.j_R)
    swapped = (a.alpha_R, a.alpha_C, a.alpha_L, a.delta, params.j_R, params.j_L)
    l = _l_table(*args)
    c = _c_table(*args)
    l_sw = _l_table(*swapped)
    if as_printed:
        r = l_sw
    else:
        for t in (l, l_sw):
            for j in "LCR":
                t["L" + j] = -t["L" + j]
        r = {i + j: l_sw[_MIRROR[i] + _MIRROR[j]] for i in "LCR" for j in "LCR"}
    return {"l": l, "c": c, "r": r,
            "D1": _d1(*args, printed=as_printed), "D2": _d2(*args, printed=as_printed)}


def _check_pole(value, terms, name):
    scale = sum(abs(t) for t in terms)
    if value == 0 or not np.isfinite(value) or abs(value) <= 1e-14 * scale:
        raise PoleError(f"{name} vanishes at this parameter point", condition=np.inf)


def steady_amplitudes_closed_form(params: SystemParams, as_printed: bool = False) -> Amplitudes:
    a = AlphaSet.from_params(params)
    aL, aC, aR, d = a.alpha_L, a.alpha_C, a.alpha_R, a.delta
    JL, JR = params.j_L, params.j_R
    eps = dict(zip("LCR", params.drives))
    tabs = coefficient_tables(params, as_printed)
    D1, D2 = tabs["D1"], tabs["D2"]
    _check_pole(D1, (JR**2 * aL, JL**2 * aR, aL * aR * (aC + d)), "D1")
    _check_pole(D2, (abs(aL * aR) * abs(aC + d) ** 2 * abs(aL + aR) ** 2,
                     JL**2 * abs(aR) * abs(aC + d) ** 2, JR**2 * abs(aL) * abs(aC + d) ** 2,
                     JL**4 * abs(aR) + JR**4 * abs(aL)), "D2")
    eL, eC, eR = params.drives

    cL = ((-JR**2 + aR * (aC + d)) * eL + JL * (-aR * eC + JR * eR)) / D1
    cC = (aL * aR * eC - JL * aR * eL - JR * aL * eR) / D1
    cR = ((-JL**2 + aL * (aC + d)) * eR + JR * (-aL * eC + JL * eL)) / D1

    def row(t, i):
        return sum(t[i + j] * eps[j] for j in "LCR")

    l, c, r = tabs["l"], tabs["c"], tabs["r"]
    den = SQRT2 * D2
    cLL = (cL * row(l, "L") + JL * cC * row(l, "C") + JL * JR * cR * row(l, "R")) / den
    cCC = (JL * cL * row(c, "L") + cC * row(c, "C") + JR * cR * row(c, "R")) / den
    cRR = (JL * JR * cL * row(r, "L") + JR * cC * row(r, "C") + cR * row(r, "R")) / den

    # mixed pairs: back-substitute into the LC, LR and CR rows
    mixed = np.array([[aL + aC + d, JR, 0], [JR, aL + aR, JL], [0, JL, aR + aC + d]],
                     dtype=complex)
    src = -np.array([eL * cC + eC * cL + SQRT2 * JL * (cLL + cCC),
                     eL * cR + eR * cL,
                     eC * cR + eR * cC + SQRT2 * JR * (cRR + cCC)])
    cLC, cLR, cCR = np.linalg.solve(mixed, src)
    return Amplitudes.from_vector([cL, cC, cR, cLC, cLR, cCR, cLL, cCC, cRR], params.drives)


# ---------------------------------------------------------------------------
# observables

def _guard(amps: Amplitudes) -> float:
    e = max((abs(x) for x in amps.eps), default=0.0)
    return 1e-20 * e * e


@dataclass(frozen=True)
class G2Result:
    """Zero-delay correlations; ``None`` marks an undefined value."""

    leading: tuple
    full: tuple

    @property
    def disagrees(self) -> tuple:
        """True where leading and full forms differ by more than 1%."""
        out = []
        for a, b in zip(self.leading, self.full):
            out.append(None if a is None or b is None else abs(a - b) > 0.01 * abs(b))
        return tuple(out)


def g2_analytic(amps: Amplitudes, guard: float | None = None) -> G2Result:
    guard = _guard(amps) if guard is None else guard
    pairs = {"L": ("LC", "LR"), "C": ("LC", "CR"), "R": ("CR", "LR")}
    lead, full = [], []
    for j in "LCR":
        one = abs(amps[j]) ** 2
        two = abs(amps[j + j]) ** 2
        n = one + sum(abs(amps[p]) ** 2 for p in pairs[j]) + 2 * two
        if one <= guard or one == 0:
            lead.append(None)
            full.append(None)
            continue
        lead.append(2 * two / one**2)
        full.append(2 * two / n**2)
    return G2Result(tuple(lead), tuple(full))


@dataclass(frozen=True)
class Occupations:
    """Mean photon numbers.

    ``leading`` is ``|c_j|**2`` and ``full`` adds the two-photon terms.  The
    amplitudes already carry the drive strength, so these are physical photon
    numbers.  ``n0 = sum (eps_j / kappa_j)**2`` is kept for the
    alternative normalization returned by :meth:`scaled`.
    """

    leading: tuple
    full: tuple
    n0: float

    def scaled(self) -> tuple:
        return tuple(x * self.n0 for x in self.leading)


def occupations_analytic(amps: Amplitudes, params: SystemParams) -> Occupations:
    pairs = {"L": ("LC", "LR"), "C": ("LC", "CR"), "R": ("CR", "LR")}
    lead = tuple(abs(amps[j]) ** 2 for j in "LCR")
    full = tuple(abs(amps[j]) ** 2 + sum(abs(amps[p]) ** 2 for p in pairs[j])
                 + 2 * abs(amps[j + j]) ** 2 for j in "LCR")
    n0 = 0.0
    for e, k in zip(params.drives, params.kappas):
        if e != 0:
            if k == 0:
                n0 = float("inf")
                break
            n0 += (e / k) ** 2
    return Occupations(lead, full, n0)


def g2L_formula(params: SystemParams, rtol: float = 1e-12) -> float:
    """Closed-form left-cavity correlation for a left-only drive with ``alpha_L == alpha_R``."""
    a = AlphaSet.from_params(params)
    if abs(a.alpha_L - a.alpha_R) > rtol * max(abs(a.alpha_L), abs(a.alpha_R), 1e-300):
        raise FormulaDomainError("needs alpha_L == alpha_R")
    if params.eps_C != 0 or params.eps_R != 0 or params.eps_L == 0:
        raise FormulaDomainError("needs a left-only drive (eps_C = eps_R = 0, eps_L != 0)")
    al = a.alpha_L
    JL2, JR2 = params.j_L ** 2, params.j_R ** 2
    K1, K2 = a.K(1, al), a.K(2, al)
    F1, F2 = a.F(1, al), a.F(2, al)
    den1 = (JL2 + JR2) * K2 - K1 * F2
    den2 = (JR2 - F1) ** 2
    if den1 == 0 or den2 == 0:
        raise PoleError("formula denominator vanishes")
    first = (JR2 ** 2 * K2 + (JL2 - JR2) * K1 * F2) / den1 - F1
    second = (JL2 + JR2 - F1) / den2
    return float(abs(first) ** 2 * abs(second) ** 2)


def blockade_ratio(params: SystemParams) -> float:
    """``|c_LL|**2 / |c_L|**4``, half the leading left correlation."""
    amps = steady_amplitudes_solve(params)
    one = abs(amps.c_L) ** 2
    if one == 0:
        return float("inf")
    return abs(amps.c_LL) ** 2 / one ** 2


@dataclass(frozen=True)
class UPBRoot:
    g: float
    delta: float
    ratio: float
    g2_L: float


def upb_roots(params: SystemParams, g_range: tuple[float, float],
              delta_range: tuple[float, float], offsets=(0.0, 0.0, 0.0),
              grid: tuple[int, int] = (41, 81), threshold: float = 1e-6) -> list[UPBRoot]:
    """Points in the ``(g, Delta)`` box where the left two-photon amplitude vanishes.

    ``Delta`` sets the detunings as ``Delta + offsets[j]``.  A candidate is
    kept when ``|c_LL|**2/|c_L|**4`` falls below ``threshold`` times the
    median of that ratio over the coarse grid.
    """
    (g0, g1), (d0, d1) = g_range, delta_range
    if not (g0 <= g1 and d0 <= d1):
        raise InvalidArgument("ranges must be ordered (low, high)")
    if params.eps_L == 0:
        params = params.replace(eps_L=1e-4)

    def at(g, dl):
        return params.replace(g=float(g), delta_L=dl + offsets[0],
                              delta_C=dl + offsets[1], delta_R=dl + offsets[2])

    def ratio(g, dl):
        try:
            return blockade_ratio(at(g, dl))
        except ExceptionalPoint:
            return np.inf

    gs = np.linspace(g0, g1, grid[0])
    ds = np.linspace(d0, d1, grid[1])
    table = np.array([[ratio(g, dl) for dl in ds] for g in gs])
    finite = table[np.isfinite(table)]
    if finite.size == 0:
        return []
    baseline = float(np.median(finite))
    if baseline == 0:
        return []
    cut = threshold * baseline

    # seeds: local minima of the grid (8-neighbourhood)
    padded = np.pad(table, 1, constant_values=np.inf)
    seeds = []
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            win = padded[i:i + 3, j:j + 3]
            if np.isfinite(table[i, j]) and table[i, j] <= win.min():
                seeds.append((table[i, j], gs[i], ds[j]))
    seeds.sort()
    sg = max(g1 - g0, 1e-12)
    sd = max(d1 - d0, 1e-12)

    def objective(x):
        g = g0 + x[0] * sg
        dl = d0 + x[1] * sd
        if not (g0 <= g <= g1 and d0 <= dl <= d1):
            return 1e6
        r = ratio(g, dl)
        return np.log(r / baseline) if r > 0 else -1e3

    roots: list[UPBRoot] = []
    for _, g, dl in seeds[:20]:
        x0 = np.array([(g - g0) / sg, (dl - d0) / sd])
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-10,
                                         "maxiter": 4000, "initial_simplex":
                                         np.array([x0, x0 + [1.0 / grid[0], 0],
                                                   x0 + [0, 1.0 / grid[1]]])})
        g_best = g0 + res.x[0] * sg
        d_best = d0 + res.x[1] * sd
        if not (g0 <= g_best <= g1 and d0 <= d_best <= d1):
            continue
        r = ratio(g_best, d_best)
        if r >= cut:
            continue
        if any(abs(g_best - q.g) < 1e-3 * sg and abs(d_best - q.delta) < 1e-3 * sd for q in roots):
            continue
        g2 = g2_analytic(steady_amplitudes_solve(at(g_best, d_best))).leading[0]
        roots.append(UPBRoot(float(g_best), float(d_best), float(r), g2))
    roots.sort(key=lambda q: (q.g, q.delta))
    return roots
