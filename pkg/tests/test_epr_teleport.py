import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teleclone import epr_teleport as et
from teleclone import fock_core as fc
from teleclone.errors import DegenerateSamplingError, InvalidArgumentError, OutOfRangeError

from conftest import random_polarization, random_unitary


# ------------------------------------------------------------ parameters --


@given(st.floats(min_value=0.0, max_value=0.999))
def test_squeezing_round_trip(q):
    s = et.SqueezingParam(q)
    assert s.v_q == pytest.approx((1 - q) / (1 + q), abs=1e-15)
    assert et.SqueezingParam.from_v(s.v_q).q == pytest.approx(q, abs=1e-15)
    assert math.tanh(s.r) == pytest.approx(q, abs=1e-14)


def test_squeezing_rejects_out_of_range():
    for bad in (-0.1, 1.0):
        with pytest.raises(InvalidArgumentError):
            et.SqueezingParam(bad)


def test_integration_config_validation():
    with pytest.raises(InvalidArgumentError):
        et.IntegrationConfig(nodes_per_axis=4)
    with pytest.raises(InvalidArgumentError):
        et.IntegrationConfig(sample_count=10)
    with pytest.raises(InvalidArgumentError):
        et.IntegrationConfig(proposal_sigma=0.0)
    with pytest.raises(InvalidArgumentError):
        et.IntegrationConfig(method="rk4")


# ------------------------------------------------------------ EPR state --


def test_epr_q_zero_is_product_vacuum():
    psi = et.epr_state(0.0, 4)
    assert psi[0, 0, 0, 0] == 1.0
    assert np.sum(psi**2) == pytest.approx(1.0, abs=1e-15)


def test_epr_one_photon_amplitude():
    psi = et.epr_state(0.5, 4)
    assert psi[1, 0, 1, 0] == pytest.approx(0.375, abs=1e-15)
    assert psi[1, 0, 0, 1] == 0.0


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_epr_norm_deficit_is_geometric_tail(q):
    n_max = 6
    psi = et.epr_state(q, n_max)
    tail = sum((N + 1) * q ** (2 * N) * (1 - q * q) ** 2 for N in range(n_max + 1, 2000))
    assert 1.0 - np.sum(psi**2) == pytest.approx(tail, abs=1e-13)
    assert et.epr_norm_tail(q, n_max) == pytest.approx(tail, abs=1e-13)
    closed = (n_max + 2) * q ** (2 * n_max + 2) - (n_max + 1) * q ** (2 * n_max + 4)
    assert tail == pytest.approx(closed, abs=1e-13)


# ----------------------------------------------------- transfer operator --


def test_transfer_at_zero_displacement():
    t = et.transfer_operator((0, 0), 0.5, 6)
    assert t[0, 0] == pytest.approx(0.75 / math.pi, abs=1e-15)
    totals = fc.total_photon_numbers(6)
    np.testing.assert_allclose(t, np.diag(0.75 / math.pi * 0.5**totals), atol=1e-15)


@pytest.mark.parametrize("q", [0.0, 0.3, 0.6, 0.9])
@pytest.mark.parametrize("beta", [(0.4, -0.2 + 0.1j), (1.0j, 0.5), (-0.7, 0.0)])
def test_closed_form_matches_displacement_construction(q, beta):
    a = et.transfer_operator(beta, q, 6)
    b = et.transfer_operator(beta, q, 6, construction="displacement", pad=40)
    assert np.max(np.abs(a - b)) < 1e-13


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("beta", [(0.3, 0.1j), (1.0, 0.0), (0.5 - 0.5j, -0.4)])
def test_vacuum_maps_to_coherent_state(q, beta):
    n_max = 8
    idx = fc.trusted_indices(n_max)
    out = et.transfer_operator(beta, q, n_max)[:, 0][idx]
    coh = fc.coherent_state((1 - q) * np.asarray(beta), n_max)[idx]
    overlap = abs(np.vdot(coh, out)) / (np.linalg.norm(coh) * np.linalg.norm(out))
    assert overlap >= 1 - 1e-6


def test_q_zero_transfer_is_displaced_vacuum_projector():
    beta = (0.6 - 0.2j, 0.3j)
    n_max = 6
    box, inner = n_max + 1, n_max + 40
    vac_h = fc.displacement_matrix(beta[0], box, inner)[:, 0]
    vac_v = fc.displacement_matrix(beta[1], box, inner)[:, 0]
    ket = np.kron(vac_h, vac_v)
    expected = np.outer(ket, ket.conj()) / math.pi
    np.testing.assert_allclose(et.transfer_operator(beta, 0.0, n_max), expected, atol=1e-14)


# ---------------------------------------------------------------- oracle --


def test_oracle_vacuum_zero_displacement():
    psi = fc.basis_state(0, 0, 4)
    a = et.bell_projection_oracle((0, 0), 0.5, psi, 4)
    b = et.transfer_operator((0, 0), 0.5, 4) @ psi
    overlap = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    assert overlap == pytest.approx(1.0, abs=1e-8)


def test_oracle_single_photon():
    psi = fc.basis_state(1, 0, 4)
    beta = (0.3, 0.1j)
    a = et.bell_projection_oracle(beta, 0.3, psi, 4)
    b = et.transfer_operator(beta, 0.3, 4) @ psi
    np.testing.assert_allclose(a / np.linalg.norm(a), b / np.linalg.norm(b), atol=1e-6)


def test_oracle_without_entanglement_is_displaced_vacuum():
    psi = fc.basis_state(1, 0, 4)
    beta = (0.4, -0.2j)
    out = et.bell_projection_oracle(beta, 0.0, psi, 4)
    coh = fc.coherent_state(beta, 4)
    assert abs(np.vdot(coh, out)) / np.linalg.norm(out) == pytest.approx(
        np.linalg.norm(coh), abs=1e-8)
    t = et.transfer_operator(beta, 0.0, 4) @ psi
    np.testing.assert_allclose(out, t, atol=1e-8)


def test_oracle_agrees_on_random_probes(rng):
    ratios = []
    for _ in range(20):
        beta = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 0.3
        q = rng.uniform(0, 0.5)
        psi = rng.normal(size=25) + 1j * rng.normal(size=25)
        psi[fc.total_photon_numbers(4) > 2] = 0
        psi /= np.linalg.norm(psi)
        a = et.bell_projection_oracle(beta, q, psi, 4)
        b = et.transfer_operator(beta, q, 4) @ psi
        assert abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)) >= 1 - 1e-6
        ratios.append(np.linalg.norm(a) / np.linalg.norm(b))
    assert max(ratios) - min(ratios) < 1e-6


def test_oracle_rejects_wrong_truncation():
    with pytest.raises(OutOfRangeError):
        et.bell_projection_oracle((0, 0), 0.5, fc.basis_state(1, 0, 5), 4)
    psi = fc.basis_state(4, 4, 4)
    with pytest.raises(OutOfRangeError):
        et.bell_projection_oracle((0, 0), 0.5, psi, 4)


# ------------------------------------------------------- outcome density --


def test_outcome_density_normalization_vacuum_small_q():
    # independent 4-D Gauss-Hermite rule built here; the density ~ exp(-(1-q^2)|beta|^2)
    q = 0.01
    rho = np.outer(fc.basis_state(0, 0, 3), fc.basis_state(0, 0, 3))
    u, w = np.polynomial.hermite.hermgauss(10)
    s = math.sqrt(1 - q * q)
    x, wx = u / s, w * np.exp(u * u) / s
    total = 0.0
    for i, a in enumerate(x):
        for j, b in enumerate(x):
            for k, c in enumerate(x):
                for l, d in enumerate(x):
                    total += wx[i] * wx[j] * wx[k] * wx[l] * et.outcome_density(
                        (a + 1j * b, c + 1j * d), q, rho)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_outcome_density_decays():
    rho = np.outer(fc.basis_state(1, 0, 4), fc.basis_state(1, 0, 4))
    for beta in [(10, 0), (0, 10j), (8, 8)]:
        assert 0 <= et.outcome_density(beta, 0.5, rho) < 1e-20


@pytest.mark.parametrize("phi", [0.3, 1.7, math.pi])
def test_outcome_density_phase_covariant(phi):
    rho = np.outer(fc.basis_state(1, 0, 4), fc.basis_state(1, 0, 4))
    beta = (0.8 - 0.3j, 0.4j)
    rot = (beta[0] * np.exp(1j * phi), beta[1])
    assert et.outcome_density(rot, 0.6, rho) == pytest.approx(
        et.outcome_density(beta, 0.6, rho), abs=1e-12)


def test_outcome_density_matches_truncated_trace_for_low_photon_input():
    rho = np.outer(fc.basis_state(1, 0, 10), fc.basis_state(1, 0, 10))
    beta = (0.3, -0.2j)
    t = et.transfer_operator(beta, 0.5, 10)
    direct = np.trace(t @ rho @ t.conj().T).real
    assert et.outcome_density(beta, 0.5, rho) == pytest.approx(direct, rel=1e-8)


# --------------------------------------------------------------- channel --


def test_vacuum_channel_vacuum_weight():
    res = et.teleport_channel(fc.basis_state(0, 0, 8), 0.5)
    assert res.rho_out[0, 0].real == pytest.approx(0.5625, abs=1e-12)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
def test_vacuum_channel_added_photons(q):
    res = et.teleport_channel(fc.basis_state(0, 0, 8), q)
    a_h, _ = fc.mode_operators(8)
    per_mode = np.trace(a_h.conj().T @ a_h @ res.rho_out).real
    assert per_mode == pytest.approx((1 - q) / (1 + q), abs=2e-3)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
def test_vacuum_channel_is_thermal(q):
    res = et.teleport_channel(fc.basis_state(0, 0, 8), q)
    idx = fc.trusted_indices(8)
    assert fc.trace_distance(fc.restrict(res.rho_out, idx),
                             fc.restrict(et.vacuum_output_state(q, 8), idx)) < 5e-3


def test_near_perfect_entanglement_preserves_input():
    psi = fc.single_photon_state((0.6, 0.8j), 8)
    res = et.teleport_channel(psi, 0.99)
    assert np.vdot(psi, res.rho_out @ psi).real >= 0.98


def test_channel_output_is_a_density_matrix(photon_h_q06):
    rho = photon_h_q06.rho_out
    np.testing.assert_array_equal(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-9
    assert 0 < photon_h_q06.trace_captured <= 1 + 1e-6
    assert photon_h_q06.outcome_density_norm == pytest.approx(1.0, abs=1e-9)
    assert photon_h_q06.diagnostics["nodes"] == 24**4


def test_channel_quadrature_converged(photon_h_q06):
    coarse = et.teleport_channel(fc.single_photon_state((1, 0), 8), 0.6,
                                 et.IntegrationConfig(nodes_per_axis=12))
    assert fc.trace_distance(coarse.rho_out, photon_h_q06.rho_out) < 1e-10


def test_channel_renormalize_flag():
    psi = fc.single_photon_state((1, 0), 4)
    res = et.teleport_channel(psi, 0.3, et.IntegrationConfig(renormalize=True))
    assert np.trace(res.rho_out).real == pytest.approx(1.0, abs=1e-12)
    assert res.trace_captured < 1.0


def test_polarization_covariance(photon_h_q06, rng):
    idx = fc.trusted_indices(8)
    for _ in range(2):
        u = random_unitary(rng)
        pol = fc.JonesVector.from_array(u @ np.array([1, 0]))
        res = et.teleport_channel(fc.single_photon_state(pol, 8), 0.6)
        expected = fc.rotate_polarization(photon_h_q06.rho_out, u)
        assert fc.trace_distance(fc.restrict(res.rho_out, idx), fc.restrict(expected, idx)) < 5e-3


def test_completeness():
    assert et.completeness_deviation(0.5, 8, nodes=24) < 1e-3
    assert et.completeness_deviation(0.5, 8, nodes=24, prefactor_scale=1.01) > 1e-3


# ----------------------------------------------------------- Monte Carlo --


MC = et.IntegrationConfig(method="monte-carlo", sample_count=20_000, rng_seed=5, chunk_size=3000)


def test_monte_carlo_close_to_quadrature():
    psi = fc.single_photon_state((1, 0), 6)
    quad = et.teleport_channel(psi, 0.6)
    mc = et.teleport_channel(psi, 0.6, MC)
    assert fc.trace_distance(mc.rho_out, quad.rho_out) < max(5e-3, 3 / math.sqrt(20_000))
    assert mc.diagnostics["ess"] > 0.3 * 20_000


def test_monte_carlo_mixed_input():
    rho = 0.5 * (np.outer(fc.basis_state(0, 0, 5), fc.basis_state(0, 0, 5))
                 + np.outer(fc.basis_state(0, 1, 5), fc.basis_state(0, 1, 5)))
    quad = et.teleport_channel(rho, 0.5)
    mc = et.teleport_channel(rho, 0.5, MC)
    assert fc.trace_distance(mc.rho_out, quad.rho_out) < max(5e-3, 3 / math.sqrt(20_000))


def test_monte_carlo_bit_stable_across_threads():
    psi = fc.single_photon_state((1, 0), 5)
    runs = [
        et.teleport_channel(psi, 0.5, et.IntegrationConfig(
            method="monte-carlo", sample_count=12_000, rng_seed=9, chunk_size=2500, threads=t))
        for t in (1, 3, 1)
    ]
    for r in runs[1:]:
        np.testing.assert_array_equal(r.rho_out, runs[0].rho_out)


def test_monte_carlo_degenerate_proposal_raises():
    psi = fc.single_photon_state((1, 0), 4)
    cfg = et.IntegrationConfig(method="monte-carlo", sample_count=5000, proposal_sigma=20.0)
    with pytest.raises(DegenerateSamplingError, match="proposal_sigma"):
        et.teleport_channel(psi, 0.5, cfg)


def test_channel_result_serialization(tmp_path):
    psi = fc.single_photon_state((1, 0), 4)
    res = et.teleport_channel(psi, 0.5, et.IntegrationConfig(
        method="monte-carlo", sample_count=2000, rng_seed=3))
    text = json.dumps(res.to_dict())
    back = et.ChannelResult.from_dict(json.loads(text))
    assert np.max(np.abs(back.rho_out - res.rho_out)) <= 1e-15
    meta = json.loads(text)["metadata"]
    assert meta["q"] == 0.5 and meta["seed"] == 3 and meta["method"] == "monte-carlo"
    assert meta["v_q"] == pytest.approx(1 / 3)


# ------------------------------------------------------------- identities --


def test_identity_zero_displacement():
    for q in (0.0, 0.4, 0.9):
        assert et.commutation_identity_check((0, 0), q, 8) < 1e-9


def test_identity_example_probe():
    devs = et.identity_deviations((0.4, -0.2 + 0.1j), 0.6, 10, (1, 0))
    assert devs["transfer_creation"] < 1e-8
    assert devs["transfer_annihilation"] < 1e-8
    assert devs["vacuum_eigenstate"] < 1e-8
    assert devs["thermal_commutation"] < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_identities_random_probes(seed):
    rng = np.random.default_rng(seed)
    beta = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 0.5
    q = rng.uniform(0, 0.95)
    assert et.commutation_identity_check(beta, q, 8, random_polarization(rng)) < 1e-8


def test_identity_check_detects_wrong_sign():
    # flipping beta_in breaks the displaced commutation relation
    q, beta, n_max = 0.6, (0.4, 0.0), 8
    t = et.transfer_operator(beta, q, n_max)
    a = fc.ladder((1, 0), n_max)
    idx = fc.trusted_indices(n_max)
    wrong = (q * a.conj().T - (1 - q) * 0.4 * np.eye(fc.dim(n_max))) @ t
    assert np.max(np.abs(fc.restrict(t @ a.conj().T - wrong, idx))) > 1e-2
