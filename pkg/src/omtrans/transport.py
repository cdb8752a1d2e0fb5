"""Drive scenarios, transport metrics and parameter sweeps."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fock, liouville, weakdrive
from .errors import InvalidArgument, OmtransError
from .model import DriveScenario, SystemParams, drive_scenario

DEFAULT_EPS = 1e-4
BACKENDS = {"analytic": "analytic", "kerr": "effective-kerr", "full": "full-master-equation"}
FAMILIES = ("diode", "source", "capacitor")
PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams)
                     if f.name not in ("omega_m_hz", "nonlinear_sign"))


def guard_for(eps: float) -> float:
    """Underflow threshold for current ratios at drive amplitude ``eps``."""
    return 1e-20 * eps * eps


def _ratio(num: float, den: float, guard: float) -> float | None:
    if not den > guard:
        return None
    return num / den


def rectifying_factor(q_r_fwd: float, q_l_bwd: float, guard: float = 0.0) -> float | None:
    return _ratio(q_r_fwd - q_l_bwd, q_r_fwd + q_l_bwd, guard)


def transport_efficiencies(q_fwd: Sequence[float], q_bwd: Sequence[float],
                           guard: float = 0.0) -> tuple:
    """``(T_L, T_R)`` from ``(Q_L, Q_C, Q_R)`` under +k and -k driving."""
    t_l = _ratio(q_fwd[2], q_fwd[2] + q_fwd[0], guard)
    t_r = _ratio(q_bwd[0], q_bwd[2] + q_bwd[0], guard)
    return t_l, t_r


def storage_metrics(q_fwd: Sequence[float], q_bwd: Sequence[float],
                    guard: float = 0.0) -> tuple:
    """``(S, M_S, M_R)`` from the storage (+k) and release (-k) currents."""
    qL, qC, qR = q_fwd
    pL, pC, pR = q_bwd
    s = _ratio(qC - pL - pR, qC + pL + pR, guard)
    m_s = _ratio(qC, qC + qL + qR, guard)
    m_r = _ratio(pL + pR, pC + pL + pR, guard)
    return s, m_s, m_r


@dataclass(frozen=True)
class PointResult:
    """Steady-state observables for one drive pattern."""

    currents: tuple
    occupations: tuple
    g2: tuple
    dims: tuple


def _space_for(backend: str, params: SystemParams, dims, cap):
    if backend == "kerr":
        dims = tuple(dims) if dims is not None else liouville.default_dims(params, "kerr")
        if cap is None:
            cap = liouville.PHOTON_CUTOFF
        return fock.make_space(dims, cap if cap >= 0 else None, (0, 1, 2) if cap >= 0 else None)
    raise InvalidArgument(backend)


def evaluate(params: SystemParams, backend: str = "analytic", dims=None,
             excitation_cap: int | None = None) -> PointResult:
    """Currents, occupations and correlations of the steady state of ``params``."""
    if backend == "analytic":
        amps = weakdrive.steady_amplitudes_solve(params)
        occ = weakdrive.occupations_analytic(amps, params).leading
        g2 = weakdrive.g2_analytic(amps).leading
        used = ()
    elif backend == "kerr":
        space = _space_for("kerr", params, dims, excitation_cap)
        rho = liouville.steady_state(liouville.liouvillian(params, space))
        occ = tuple(rho.occupation(j) for j in range(3))
        g2 = tuple(rho.g2(j) for j in range(3))
        used = space.dims
    elif backend == "full":
        phonon = None
        if dims is not None:
            if len(dims) != 4:
                raise InvalidArgument("full backend dims need four entries")
            phonon = dims[3]
        mom = liouville.perturbative_moments(params, phonon_dim=phonon, model="full")
        occ = tuple(mom.occupation(j) for j in range(3))
        g2 = tuple(mom.g2(j) for j in range(3))
        used = mom.dims
    else:
        raise InvalidArgument(f"unknown backend {backend!r}")
    currents = tuple(k * n for k, n in zip(params.kappas, occ))
    return PointResult(currents, tuple(occ), tuple(g2), tuple(used))


def scenario_currents(params: SystemParams, scenario: DriveScenario,
                      backend: str = "analytic", eps: float = DEFAULT_EPS, **kw) -> tuple:
    return evaluate(scenario.apply(params, eps), backend, **kw).currents


def scenario_pair(family: str, center_ratio: float | None = None) -> tuple:
    """Forward and backward scenarios of a metric family."""
    if family == "diode":
        c = 1.0 if center_ratio is None else center_ratio
        return drive_scenario("left", c), drive_scenario("right", c)
    if family == "source":
        c = 0.0 if center_ratio is None else center_ratio
        return drive_scenario("left", c), drive_scenario("right", c)
    if family == "capacitor":
        return drive_scenario("two-sided"), drive_scenario("center-release")
    raise InvalidArgument(f"unknown metric family {family!r}")


def reciprocity_check(params: SystemParams, eps: float = DEFAULT_EPS, tol: float = 1e-12) -> dict:
    """Left-only and right-only driving give mirror-equal transmitted photon numbers."""
    fwd = params.with_drives(eps, 0.0, 0.0)
    bwd = params.with_drives(0.0, 0.0, eps)
    n_r = abs(weakdrive.steady_amplitudes_solve(fwd).c_R) ** 2
    n_l = abs(weakdrive.steady_amplitudes_solve(bwd).c_L) ** 2
    a = weakdrive.AlphaSet.from_params(params)
    den = (params.j_R ** 2 * a.alpha_L
           + a.alpha_R * (params.j_L ** 2 - a.alpha_L * (a.alpha_C + a.delta)))
    closed = abs(params.j_L * params.j_R * eps / den) ** 2
    r = rectifying_factor(params.kappa_R * n_r, params.kappa_L * n_l, guard_for(eps))
    ok = (abs(n_r - n_l) <= tol * max(n_r, n_l, 1e-300)
          and abs(n_r - closed) <= 1e-10 * max(closed, 1e-300)
          and (r is None or params.kappa_L != params.kappa_R or abs(r) <= tol))
    return {"N_R_fwd": n_r, "N_L_bwd": n_l, "closed_form": closed, "R": r, "passed": ok}


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class SweepRecord:
    variable: str
    value: float
    delta: float
    backend: str
    family: str
    Q_L_fwd: float | None = None
    Q_C_fwd: float | None = None
    Q_R_fwd: float | None = None
    Q_L_bwd: float | None = None
    Q_C_bwd: float | None = None
    Q_R_bwd: float | None = None
    g2_L_fwd: float | None = None
    g2_C_fwd: float | None = None
    g2_R_fwd: float | None = None
    g2_L_bwd: float | None = None
    g2_C_bwd: float | None = None
    g2_R_bwd: float | None = None
    N_L_fwd: float | None = None
    N_C_fwd: float | None = None
    N_R_fwd: float | None = None
    N_L_bwd: float | None = None
    N_C_bwd: float | None = None
    N_R_bwd: float | None = None
    R: float | None = None
    T_L: float | None = None
    T_R: float | None = None
    S: float | None = None
    M_S: float | None = None
    M_R: float | None = None
    dims: str = ""
    status: str = "ok"

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def metric_ranges_ok(self) -> bool:
        for name in ("R", "S"):
            v = getattr(self, name)
            if v is not None and not -1 - 1e-12 <= v <= 1 + 1e-12:
                return False
        for name in ("T_L", "T_R", "M_S", "M_R"):
            v = getattr(self, name)
            if v is not None and not -1e-12 <= v <= 1 + 1e-12:
                return False
        return True


@dataclass
class SweepSpec:
    """Everything needed to run one sweep.

    ``variable`` is ``"delta"`` or a :class:`SystemParams` field.  When it is
    ``"delta"``, each grid value sets ``Delta_j = value + offsets[j]``;
    otherwise the field is set and the detunings use ``delta``.
    """

    params: SystemParams
    values: np.ndarray
    variable: str = "delta"
    delta: float = 0.0
    offsets: tuple = (0.0, 0.0, 0.0)
    family: str = "diode"
    eps: float = DEFAULT_EPS
    center_ratio: float | None = None
    weights_fwd: tuple | None = None
    weights_bwd: tuple | None = None
    backends: tuple = ("analytic",)
    dims: dict = field(default_factory=dict)
    excitation_cap: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.variable != "delta" and self.variable not in PARAM_FIELDS:
            raise InvalidArgument(f"cannot sweep {self.variable!r}")
        if self.family not in FAMILIES:
            raise InvalidArgument(f"family must be one of {FAMILIES}")
        for b in self.backends:
            if b not in BACKENDS:
                raise InvalidArgument(f"unknown backend {b!r}")
        self.values = np.asarray(self.values, dtype=float).reshape(-1)

    def scenarios(self) -> tuple:
        fwd, bwd = scenario_pair(self.family, self.center_ratio)
        if self.weights_fwd is not None:
            fwd = DriveScenario(fwd.label, tuple(self.weights_fwd))
        if self.weights_bwd is not None:
            bwd = DriveScenario(bwd.label, tuple(self.weights_bwd))
        return fwd, bwd

    def point_params(self, value: float) -> tuple[SystemParams, float]:
        if self.variable == "delta":
            d = float(value)
            p = self.params
        else:
            d = self.delta
            p = self.params.replace(**{self.variable: float(value)})
        o = self.offsets
        return p.replace(delta_L=d + o[0], delta_C=d + o[1], delta_R=d + o[2]), d


def _record(spec: SweepSpec, backend: str, value: float) -> SweepRecord:
    p, d = spec.point_params(value)
    rec = SweepRecord(variable=spec.variable, value=float(value), delta=d,
                      backend=BACKENDS[backend], family=spec.family)
    fwd, bwd = spec.scenarios()
    try:
        kw = {"dims": spec.dims.get(backend), "excitation_cap": spec.excitation_cap}
        rf = evaluate(fwd.apply(p, spec.eps), backend, **kw)
        rb = evaluate(bwd.apply(p, spec.eps), backend, **kw)
    except OmtransError as exc:
        rec.status = f"{type(exc).__name__}: {exc}"
        return rec
    for tag, res in (("fwd", rf), ("bwd", rb)):
        for j, name in enumerate("LCR"):
            setattr(rec, f"Q_{name}_{tag}", float(res.currents[j]))
            setattr(rec, f"N_{name}_{tag}", float(res.occupations[j]))
            g = res.g2[j]
            setattr(rec, f"g2_{name}_{tag}", None if g is None else float(g))
    rec.dims = "x".join(str(x) for x in rf.dims)
    guard = guard_for(spec.eps)
    if spec.family == "capacitor":
        rec.S, rec.M_S, rec.M_R = storage_metrics(rf.currents, rb.currents, guard)
    else:
        rec.R = rectifying_factor(rf.currents[2], rb.currents[0], guard)
        rec.T_L, rec.T_R = transport_efficiencies(rf.currents, rb.currents, guard)
    return rec


def resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        env = os.environ.get("OMTRANS_THREADS")
        threads = int(env) if env and env.strip().isdigit() else 1
    return max(1, int(threads))


def run_sweep(spec: SweepSpec) -> list[SweepRecord]:
    """All grid points on all backends, ordered by backend then grid position."""
    tasks = [(b, v) for b in spec.backends for v in spec.values]
    if not tasks:
        return []
    threads = resolve_threads(spec.threads)
    if threads == 1:
        return [_record(spec, b, v) for b, v in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: _record(spec, *t), tasks))
