import math

import numpy as np
import pytest

from omtrans import fock, liouville as lv, weakdrive
from omtrans.errors import InvalidArgument, NonUniqueSteadyState, SolverFailure, StepSizeError
from omtrans.model import SystemParams
from omtrans.validation import random_params


def _random_rho(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def _single_cavity(delta, kappa, eps, cutoff=12):
    p = SystemParams(delta_C=delta, kappa_C=kappa, eps_C=eps)
    return p, fock.make_space([1, cutoff, 1])


def test_dissipator_basics():
    space = fock.make_space([5])
    a = fock.annihilator(space, 0)
    assert lv.dissipator(a, 0.0).matrix.nnz == 0
    with pytest.raises(InvalidArgument):
        lv.dissipator(a, -1.0)
    d = lv.dissipator(a, 0.7)
    rho = lv.DensityMatrix(space, _random_rho(5, 0))
    assert abs(np.trace(d.apply(rho))) <= 1e-12


def test_liouvillian_preserves_trace_and_hermiticity():
    p = SystemParams(delta_L=0.1, delta_C=-0.2, delta_R=0.3, g=0.3, j_L=0.2, j_R=0.1,
                     kappa_L=0.2, kappa_C=0.3, kappa_R=0.1, gamma=0.05, n_th=0.4,
                     eps_L=0.1, eps_C=0.05)
    space = fock.make_space([2, 2, 2, 3])
    L = lv.liouvillian(p, space)
    rho = lv.DensityMatrix(space, _random_rho(space.total_dim, 1))
    drho = L.apply(rho)
    assert abs(np.trace(drho)) <= 1e-10
    assert np.max(np.abs(drho - drho.conj().T)) <= 1e-10


def test_vacuum_is_steady_without_drive():
    p = SystemParams(g=0.2, j_L=0.1, j_R=0.1, kappa_L=0.1, kappa_C=0.1, kappa_R=0.1, gamma=0.01)
    space = fock.make_space([2, 2, 2, 3])
    L = lv.liouvillian(p, space)
    vac = lv.DensityMatrix.pure(space, space.basis_vector((0, 0, 0, 0)))
    assert np.max(np.abs(L.apply(vac))) <= 1e-12
    rho = lv.steady_state(L)
    assert np.allclose(rho.matrix, vac.matrix, atol=1e-12)
    assert lv.output_current(rho, p, 0) == pytest.approx(0.0, abs=1e-14)


def test_driven_cavity_is_coherent():
    delta, kappa, eps = 0.3, 1.0, 0.05
    p, space = _single_cavity(delta, kappa, eps)
    rho = lv.steady_state(lv.liouvillian(p, space))
    rho.check()
    n_exact = eps ** 2 / (delta ** 2 + kappa ** 2 / 4)
    assert rho.occupation(1) == pytest.approx(n_exact, rel=1e-10)
    assert lv.output_current(rho, p, 1) == pytest.approx(kappa * n_exact, rel=1e-10)
    alpha = -1j * eps / (1j * delta + kappa / 2)
    psi = np.array([np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / math.sqrt(math.factorial(n))
                    for n in range(12)])
    fidelity = np.real(psi.conj() @ rho.matrix @ psi)
    assert fidelity >= 1 - 1e-8
    assert rho.g2(1) == pytest.approx(1.0, abs=1e-6)


def test_mechanical_mode_thermalizes():
    p = SystemParams(kappa_L=1, kappa_C=1, kappa_R=1, gamma=0.1, n_th=0.5)
    space = fock.make_space([1, 1, 1, 60])
    rho = lv.steady_state(lv.liouvillian(p, space))
    assert rho.occupation(3) == pytest.approx(0.5, abs=1e-8)


def test_degenerate_steady_manifold():
    space = fock.make_space([2, 2, 2])
    with pytest.raises((NonUniqueSteadyState, SolverFailure)):
        lv.steady_state(lv.liouvillian(SystemParams(j_L=0.1), space))


def test_kerr_steady_state_matches_analytic_at_dip():
    p = SystemParams(g=0.01, j_L=0.1, j_R=0.01, kappa_L=0.013, kappa_C=0.013, kappa_R=0.013,
                     delta_L=0.0048, delta_C=0.0048, delta_R=0.1048, eps_L=1e-4)
    rho = lv.steady_state(lv.liouvillian(p, fock.make_space([4, 4, 4])))
    ana = weakdrive.g2_analytic(weakdrive.steady_amplitudes_solve(p)).leading[0]
    assert rho.g2(0) == pytest.approx(ana, rel=0.05)


def test_evolve_identity_for_zero_generator():
    space = fock.make_space([3])
    L = lv.SuperOperator(space, lv.dissipator(fock.annihilator(space, 0), 0.0).matrix)
    rho0 = lv.DensityMatrix(space, _random_rho(3, 2))
    traj = lv.evolve(rho0, L, 1.0, 0.1)
    assert len(traj) == 11
    assert all(np.allclose(s.matrix, rho0.matrix, atol=1e-14) for s in traj.states)


def _decay_error(dt, kappa=1.0, t=2.0):
    space = fock.make_space([2, 1, 1])
    p = SystemParams(kappa_L=kappa)
    L = lv.liouvillian(p, space)
    rho0 = lv.DensityMatrix.pure(space, space.basis_vector((1, 0, 0)))
    traj = lv.evolve(rho0, L, t, dt, save_every=10 ** 6)
    n = traj.states[-1].occupation(0)
    return n - math.exp(-kappa * t)


def test_evolve_single_mode_decay():
    space = fock.make_space([2, 1, 1])
    L = lv.liouvillian(SystemParams(kappa_L=2.0), space)
    rho0 = lv.DensityMatrix.pure(space, space.basis_vector((1, 0, 0)))
    traj = lv.evolve(rho0, L, 1.0, 1e-3 / 2.0, save_every=100)
    for t, s in zip(traj.times, traj.states):
        assert s.occupation(0) == pytest.approx(math.exp(-2.0 * t), abs=1e-6)


def test_evolve_fourth_order():
    # renormalization keeps n + p0 = 1 exactly, so the error is pure RK4 truncation
    e1 = _decay_error(0.2)
    e2 = _decay_error(0.1)
    assert 12 < e1 / e2 < 20


def test_evolve_step_size_error():
    space = fock.make_space([4, 1, 1])
    L = lv.liouvillian(SystemParams(kappa_L=100.0, eps_L=1.0), space)
    rho0 = lv.DensityMatrix.pure(space, space.basis_vector((0, 0, 0)))
    with pytest.raises(StepSizeError):
        lv.evolve(rho0, L, 10.0, 1.0)


def test_perturbative_matches_direct_full_model():
    p = SystemParams(g=0.2, j_L=0.1, j_R=0.15, kappa_L=0.1, kappa_C=0.12, kappa_R=0.1,
                     delta_L=0.05, delta_C=-0.03, delta_R=0.02, gamma=0.05, n_th=0.2,
                     eps_L=1e-4, eps_C=5e-5)
    P = 4
    space = fock.make_space([4, 4, 4, P], excitation_cap=3, capped_modes=(0, 1, 2))
    rho = lv.steady_state(lv.liouvillian(p, space))
    mom = lv.perturbative_moments(p, phonon_dim=P)
    for j in range(3):
        assert mom.occupation(j) == pytest.approx(rho.occupation(j), rel=1e-6)
        assert mom.g2(j) == pytest.approx(rho.g2(j), rel=1e-5)


def test_perturbative_kerr_matches_amplitudes():
    rng = np.random.default_rng(4)
    for _ in range(5):
        p = random_params(rng)
        p = p.with_drives(*(1e-4 * e for e in p.drives))
        mom = lv.perturbative_moments(p, model="kerr")
        amps = weakdrive.steady_amplitudes_solve(p)
        g2 = weakdrive.g2_analytic(amps).leading
        for j, k in enumerate("LCR"):
            assert mom.occupation(j) == pytest.approx(abs(amps[k]) ** 2, rel=1e-8)
            assert mom.g2(j) == pytest.approx(g2[j], rel=1e-8)


def test_harness_converges_kerr_blockade_point():
    p = SystemParams(g=0.3, j_L=0.5, j_R=0.01, kappa_L=0.036, kappa_C=0.036, kappa_R=0.036,
                     delta_L=-0.339, delta_C=-0.339, delta_R=-0.339, eps_L=1e-4)
    res = lv.convergence_harness(p, (3, 3, 3), lambda r: r.g2(0), rtol=1e-3)
    assert res.converged
    assert res.value == pytest.approx(weakdrive.g2L_formula(p), rel=0.05)
    assert res.value < 0.1


def test_harness_converges_full_phonon_cutoff():
    p = SystemParams(g=0.2, j_L=0.1, j_R=0.1, kappa_L=0.01, kappa_C=0.01, kappa_R=0.01,
                     delta_L=0.96, delta_C=0.96, delta_R=0.96, gamma=1e-3, n_th=0.1,
                     eps_L=1e-4)

    def solver(q, space):
        return lv.perturbative_moments(q, phonon_dim=space.dims[3])

    res = lv.convergence_harness(p, (3, 3, 3, 6), lambda r: r.g2(0), rtol=1e-3,
                                 max_hilbert_dim=10 ** 6, solver=solver)
    assert res.converged
    assert res.dims[3] >= 6


@pytest.mark.parametrize("delta", [-0.05, 0.0, 0.03, 0.08])
def test_full_model_tracks_polaron_kerr(delta):
    # adiabatic elimination of the mirror lowers the two-photon level by 4 g**2
    p = SystemParams(g=0.05, j_L=0.05, j_R=0.03, kappa_L=0.02, kappa_C=0.02, kappa_R=0.02,
                     delta_L=delta, delta_C=delta, delta_R=delta, gamma=1e-3, eps_L=1e-4,
                     nonlinear_sign="polaron")
    full = lv.perturbative_moments(p).g2(0)
    kerr = lv.perturbative_moments(p, model="kerr").g2(0)
    assert kerr == pytest.approx(full, rel=0.1)
