import math

import mpmath
import numpy as np
import pytest

from omtrans import fock
from omtrans.errors import InvalidArgument
from omtrans.model import (SystemParams, build_h_eff, build_h_om, build_h_system,
                           drive_scenario, eigenvalue_om, thermal_occupancy, uniform_params)


def test_defaults_and_validation():
    p = SystemParams()
    assert p.nonlinear_sign == "appendix" and p.kerr_sign == 1.0
    for bad in ({"kappa_L": -1}, {"g": -0.1}, {"n_th": float("nan")},
                {"nonlinear_sign": "other"}, {"j_R": float("inf")}):
        with pytest.raises(InvalidArgument):
            SystemParams(**bad)


def test_swap_mirrors_left_and_right():
    p = SystemParams(delta_L=0.1, delta_R=0.3, j_L=0.2, j_R=0.4, kappa_L=1, kappa_R=2,
                     eps_L=0.5, eps_R=0.7)
    q = p.swapped()
    assert (q.delta_L, q.delta_R, q.j_L, q.j_R) == (0.3, 0.1, 0.4, 0.2)
    assert (q.kappa_L, q.kappa_R, q.eps_L, q.eps_R) == (2, 1, 0.7, 0.5)
    assert q.swapped() == p


def test_scenarios():
    p = uniform_params(0.1)
    assert drive_scenario("left", 0.5).apply(p, 2.0).drives == (2.0, 1.0, 0.0)
    assert drive_scenario("right", 0.0).apply(p, 1.0).drives == (0.0, 0.0, 1.0)
    assert drive_scenario("two-sided").weights == (1.0, 0.0, 1.0)
    with pytest.raises(InvalidArgument):
        drive_scenario("up")


def test_system_hamiltonian_is_hermitian_and_conserves_photons_without_drive():
    space = fock.make_space([2, 3, 2, 4])
    p = SystemParams(delta_L=0.2, delta_C=-0.1, g=0.3, j_L=0.1, j_R=0.05)
    h = build_h_system(p, space).toarray()
    assert np.allclose(h, h.conj().T)
    photons = space.states[:, :3].sum(axis=1)
    nz = np.argwhere(np.abs(h) > 0)
    assert all(photons[i] == photons[j] for i, j in nz)
    with pytest.raises(InvalidArgument):
        build_h_system(p, fock.make_space([2, 2]))


def test_polaron_spectrum_converges():
    p = SystemParams(delta_C=0.4, g=0.25)
    space = fock.make_space([3, 50])
    h = build_h_om(p, space).toarray()
    for s in range(3):
        idx = np.flatnonzero(space.states[:, 0] == s)
        ev = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
        assert np.allclose(ev[:4], [eigenvalue_om(s, n, p) for n in range(4)], atol=1e-10)


def test_effective_model_signs():
    for sign, s in (("appendix", 1), ("polaron", -1)):
        m = build_h_eff(SystemParams(delta_C=0.2, kappa_C=0.1, g=0.3, nonlinear_sign=sign))
        a = 0.2 - 0.05j
        assert m.one_photon_c == pytest.approx(a + s * 0.09)
        assert m.two_photon_c == pytest.approx(2 * a + 4 * s * 0.09)
        assert m.manifold_energy(2) == pytest.approx(m.two_photon_c)


def _bose_mp(f, t):
    mpmath.mp.dps = 40
    x = mpmath.mpf("6.62607015e-34") * f / (mpmath.mpf("1.380649e-23") * t)
    return float(mpmath.nsum(lambda k: mpmath.exp(-k * x), [1, mpmath.inf]))


@pytest.mark.parametrize("f,t", [(1e8, 5e-3), (1e8, 1e-4), (1e9, 1.0), (5e6, 2e-2)])
def test_thermal_occupancy_series_oracle(f, t):
    assert thermal_occupancy(f, t) == pytest.approx(_bose_mp(f, t), rel=1e-12)


def test_thermal_occupancy_limits():
    assert thermal_occupancy(1e8, 1e-6) == 0.0
    hot = thermal_occupancy(1e8, 10.0)
    kt_over_hf = 1.380649e-23 * 10 / (6.62607015e-34 * 1e8)
    assert hot == pytest.approx(kt_over_hf - 0.5, rel=1e-6)
    for bad in ((0, 1), (1, 0), (-1, 1)):
        with pytest.raises(InvalidArgument):
            thermal_occupancy(*bad)
    assert math.isfinite(thermal_occupancy(1e8, 5e-3))
