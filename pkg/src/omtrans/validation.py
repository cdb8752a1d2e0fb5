"""Seeded property suites for the weak-drive solution and transport metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import transport, weakdrive
from .model import SystemParams


@dataclass(frozen=True)
class SuiteResult:
    name: str
    sign: str
    passed: bool
    worst: float
    tolerance: float
    draws: int

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name} [{self.sign}] worst={self.worst:.3e} "
                f"tol={self.tolerance:.0e} draws={self.draws}")


def random_params(rng: np.random.Generator, sign: str = "appendix",
                  shared_kappa: bool = False) -> SystemParams:
    """Draw from kappa in [0.01, 1], J and g in [0, 0.5], Delta in [-1, 1], eps in [0, 1]."""
    k = rng.uniform(0.01, 1.0, 3)
    if shared_kappa:
        k[:] = k[0]
    d = rng.uniform(-1.0, 1.0, 3)
    e = rng.uniform(0.0, 1.0, 3)
    return SystemParams(delta_L=d[0], delta_C=d[1], delta_R=d[2], g=rng.uniform(0, 0.5),
                        j_L=rng.uniform(0, 0.5), j_R=rng.uniform(0, 0.5),
                        kappa_L=k[0], kappa_C=k[1], kappa_R=k[2],
                        eps_L=e[0], eps_C=e[1], eps_R=e[2], nonlinear_sign=sign)


def _rel(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    scale = np.maximum(np.abs(a), np.abs(b))
    scale = np.where(scale == 0, 1.0, scale)
    return float(np.max(np.abs(a - b) / scale))


def dual_path(rng, sign, draws=1000, tol=1e-10) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        p = random_params(rng, sign)
        a = weakdrive.steady_amplitudes_solve(p).vector()
        b = weakdrive.steady_amplitudes_closed_form(p).vector()
        worst = max(worst, _rel(a, b))
    return SuiteResult("dual-path", sign, worst <= tol, worst, tol, draws)


def reciprocity(rng, sign, draws=500, tol=1e-12) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        p = random_params(rng, sign, shared_kappa=True)
        rep = transport.reciprocity_check(p, eps=1e-4, tol=tol)
        worst = max(worst, _rel(rep["N_R_fwd"], rep["N_L_bwd"]), abs(rep["R"] or 0.0))
    return SuiteResult("reciprocity", sign, worst <= tol, worst, tol, draws)


def swap(rng, sign, draws=500, tol=1e-12) -> SuiteResult:
    worst = 0.0
    fwd, bwd = transport.scenario_pair("diode")
    for _ in range(draws):
        p = random_params(rng, sign, shared_kappa=True)
        a = weakdrive.steady_amplitudes_solve(p)
        b = weakdrive.steady_amplitudes_solve(p.swapped())
        worst = max(worst, _rel(a.swapped().vector(), b.vector()))
        qs = []
        for q in (p, p.swapped()):
            rf = transport.evaluate(fwd.apply(q, 1e-4)).currents
            rb = transport.evaluate(bwd.apply(q, 1e-4)).currents
            qs.append((transport.rectifying_factor(rf[2], rb[0]),
                       transport.transport_efficiencies(rf, rb)))
        (r1, (tl1, tr1)), (r2, (tl2, tr2)) = qs
        worst = max(worst, abs(r1 + r2), abs(tl1 - tr2), abs(tr1 - tl2))
    return SuiteResult("swap", sign, worst <= tol, worst, tol, draws)


def delta_zero(rng, sign, draws=500, tol=1e-8) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        p = random_params(rng, sign).replace(g=0.0)
        g2 = weakdrive.g2_analytic(weakdrive.steady_amplitudes_solve(p)).leading
        worst = max(worst, max(abs(x - 1) for x in g2 if x is not None))
    return SuiteResult("delta-zero", sign, worst <= tol, worst, tol, draws)


def formula_consistency(rng, sign, draws=500, tol=1e-8) -> SuiteResult:
    worst = 0.0
    for _ in range(draws):
        p = random_params(rng, sign, shared_kappa=True)
        p = p.replace(delta_R=p.delta_L, eps_C=0.0, eps_R=0.0)
        amp = weakdrive.steady_amplitudes_solve(p)
        ref = 2 * abs(amp.c_LL) ** 2 / abs(amp.c_L) ** 4
        worst = max(worst, abs(weakdrive.g2L_formula(p) / ref - 1))
    return SuiteResult("closed-correlation", sign, worst <= tol, worst, tol, draws)


SUITES = (dual_path, reciprocity, swap, delta_zero, formula_consistency)


def run_all(seed: int = 0) -> list[SuiteResult]:
    results = []
    for sign in ("appendix", "polaron"):
        for i, suite in enumerate(SUITES):
            rng = np.random.default_rng([seed, i])
            results.append(suite(rng, sign))
    return results
