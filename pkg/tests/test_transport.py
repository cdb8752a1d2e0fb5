import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omtrans import transport as tr
from omtrans.model import SystemParams
from omtrans.validation import random_params


def test_metric_definitions():
    assert tr.rectifying_factor(1.0, 1.0) == 0.0
    assert tr.rectifying_factor(2.0, 0.0) == 1.0
    assert tr.rectifying_factor(0.0, 0.0) is None
    assert tr.rectifying_factor(1e-40, 0.0, tr.guard_for(1e-4)) is None
    assert tr.transport_efficiencies((1.0, 0.0, 3.0), (1.0, 0.0, 1.0)) == (0.75, 0.5)
    s, m_s, m_r = tr.storage_metrics((0.0, 2.0, 0.0), (0.0, 1.0, 0.0))
    assert (s, m_s, m_r) == (1.0, 1.0, 0.0)
    s, _, m_r = tr.storage_metrics((1.0, 0.0, 1.0), (1.0, 0.0, 1.0))
    assert s == -1.0 and m_r == 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=6, max_size=6))
def test_storage_duality(q):
    # exchanging the roles of the stored and released currents flips S
    fwd, bwd = (q[0], q[1], q[2]), (q[3], q[4], q[5])
    s1, _, _ = tr.storage_metrics(fwd, bwd)
    s2, _, _ = tr.storage_metrics((0.0, bwd[0] + bwd[2], 0.0), (fwd[1] / 2, 0.0, fwd[1] / 2))
    if s1 is not None and s2 is not None:
        assert s2 == pytest.approx(-s1, abs=1e-12)


def test_symmetric_linear_chain():
    p = SystemParams(j_L=0.2, j_R=0.2, kappa_L=0.1, kappa_C=0.1, kappa_R=0.1, delta_L=0.1,
                     delta_C=0.1, delta_R=0.1)
    fwd, bwd = tr.scenario_pair("source")
    tl, tr_ = tr.transport_efficiencies(tr.scenario_currents(p, fwd),
                                        tr.scenario_currents(p, bwd))
    assert tl == pytest.approx(tr_, rel=1e-12)
    tl0, _ = tr.transport_efficiencies(tr.scenario_currents(p.replace(j_R=0.0), fwd),
                                       tr.scenario_currents(p.replace(j_R=0.0), bwd))
    assert tl0 == 0.0


def test_reciprocity_report():
    p = SystemParams(g=0.2, j_L=0.1, j_R=0.3, delta_L=0.1, delta_R=-0.2, kappa_L=0.2,
                     kappa_C=0.2, kappa_R=0.2)
    rep = tr.reciprocity_check(p)
    assert rep["passed"]
    assert abs(rep["R"]) <= 1e-12


def test_reciprocity_broken_by_center_drive():
    p = SystemParams(g=0.3, j_L=0.1, j_R=0.05, delta_L=0.1, delta_C=0.0, delta_R=-0.2,
                     kappa_L=0.1, kappa_C=0.1, kappa_R=0.1)
    fwd, bwd = tr.scenario_pair("diode")
    r = tr.rectifying_factor(tr.scenario_currents(p, fwd)[2], tr.scenario_currents(p, bwd)[0])
    assert abs(r) > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_mirror_symmetry(seed):
    p = random_params(np.random.default_rng(seed), shared_kappa=True)
    fwd, bwd = tr.scenario_pair("diode")
    out = []
    for q in (p, p.swapped()):
        qf, qb = tr.scenario_currents(q, fwd), tr.scenario_currents(q, bwd)
        out.append((tr.rectifying_factor(qf[2], qb[0]), tr.transport_efficiencies(qf, qb)))
    (r1, (tl1, tr1)), (r2, (tl2, tr2)) = out
    assert r2 == pytest.approx(-r1, abs=1e-12)
    assert tl2 == pytest.approx(tr1, abs=1e-12) and tr2 == pytest.approx(tl1, abs=1e-12)


def _spec(**kw):
    p = SystemParams(g=0.1, j_L=0.1, j_R=0.05, kappa_L=0.02, kappa_C=0.02, kappa_R=0.02)
    base = dict(params=p, values=np.linspace(-0.05, 0.05, 7), offsets=(0.0, 0.0, 0.02))
    base.update(kw)
    return tr.SweepSpec(**base)


def test_empty_sweep():
    assert tr.run_sweep(_spec(values=[])) == []


@pytest.mark.parametrize("family", tr.FAMILIES)
def test_sweep_ranges_and_order(family):
    recs = tr.run_sweep(_spec(family=family, backends=("analytic", "kerr")))
    assert [r.backend for r in recs] == ["analytic"] * 7 + ["effective-kerr"] * 7
    assert [r.value for r in recs[:7]] == list(np.linspace(-0.05, 0.05, 7))
    assert all(r.status == "ok" and r.metric_ranges_ok() for r in recs)
    if family == "capacitor":
        assert all(r.R is None and r.S is not None for r in recs)
    else:
        assert all(r.S is None and r.R is not None for r in recs)


def test_sweep_parallel_is_identical():
    a = tr.run_sweep(_spec(threads=1))
    b = tr.run_sweep(_spec(threads=4))
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]


def test_sweep_records_failures_and_continues():
    spec = _spec(params=SystemParams(g=0.0), values=[0.0, 0.1], offsets=(0.0, 0.0, 0.0))
    recs = tr.run_sweep(spec)
    assert recs[0].status.startswith("ExceptionalPoint")
    assert recs[1].status == "ok"


def test_sweep_over_parameter_field():
    recs = tr.run_sweep(_spec(variable="g", values=[0.05, 0.1], delta=0.01))
    assert [r.delta for r in recs] == [0.01, 0.01]
    with pytest.raises(Exception):
        _spec(variable="nonlinear_sign")


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("OMTRANS_THREADS", "3")
    assert tr.resolve_threads(None) == 3
    assert tr.resolve_threads(2) == 2
    monkeypatch.setenv("OMTRANS_THREADS", "x")
    assert tr.resolve_threads(None) == 1
