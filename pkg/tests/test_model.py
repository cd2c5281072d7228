"""Structure of the two-atom/cavity model: basis, generator, channels, symmetry."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macrojumps.model import (
    CHANNEL_LABELS,
    COLLECTIVE_ATOM_LABELS,
    ModelParams,
    build_basis,
    build_hamiltonian,
    build_jump_operators,
    build_model,
    collective_hamiltonian,
    collective_jump_operators,
    collective_transform,
    dark_state,
    swap_operator,
    validate_regime,
)
from macrojumps import lindblad


rates = st.floats(min_value=0.0, max_value=10.0, allow_nan=False, allow_infinity=False)
detunings = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False, allow_infinity=False)


def random_params(draw) -> ModelParams:
    return ModelParams(
        g=draw(rates),
        kappa=draw(rates),
        gamma0=draw(rates),
        gamma1=draw(rates),
        omega_l=draw(rates),
        omega_m=draw(rates),
        delta=draw(detunings),
        n_max=draw(st.integers(min_value=0, max_value=3)),
    )


# ---------------------------------------------------------------------------
# parameters


def test_gamma_is_exact_sum():
    p = ModelParams(gamma0=0.05, gamma1=0.07)
    assert p.gamma == 0.05 + 0.07


@pytest.mark.parametrize("field", ["g", "kappa", "gamma0", "gamma1", "omega_l", "omega_m"])
def test_negative_rates_rejected(field):
    with pytest.raises(ValueError):
        ModelParams(**{field: -0.1})


def test_negative_truncation_rejected():
    with pytest.raises(ValueError):
        ModelParams(n_max=-1)


# ---------------------------------------------------------------------------
# basis


@pytest.mark.parametrize("n_max,dim", [(0, 9), (2, 27), (3, 36)])
def test_basis_dimension(n_max, dim):
    assert build_basis(n_max).dim == dim


@given(n_max=st.integers(min_value=0, max_value=4))
def test_index_state_bijection(n_max):
    basis = build_basis(n_max)
    for k in range(basis.dim):
        j1, j2, n = basis.state(k)
        assert basis.index(j1, j2, n) == k
        assert 0 <= j1 <= 2 and 0 <= j2 <= 2 and 0 <= n <= n_max


def test_ordering_is_lexicographic():
    basis = build_basis(1)
    states = [basis.state(k) for k in range(basis.dim)]
    assert states == sorted(states)


# ---------------------------------------------------------------------------
# no-click generator


def test_doubly_excited_diagonal():
    p = ModelParams()
    basis = build_basis(p.n_max)
    h = build_hamiltonian(p, basis).matrix
    for n in range(p.n_max + 1):
        k = basis.index(2, 2, n)
        expected = 2 * (50.0 - 0.05j) - 0.5j * p.kappa * n
        assert h[k, k] == pytest.approx(expected, abs=1e-15)


def test_cavity_coupling_element():
    p = ModelParams()
    basis = build_basis(p.n_max)
    h = build_hamiltonian(p, basis).matrix
    row = basis.index(0, 1, 1)
    col = basis.index(2, 1, 0)
    assert h[row, col] == pytest.approx(1.0)


def test_all_zero_parameters_give_zero_generator():
    p = ModelParams(g=0, kappa=0, gamma0=0, gamma1=0, omega_l=0, omega_m=0, delta=0)
    h = build_hamiltonian(p, build_basis(p.n_max)).matrix
    assert np.all(h == 0)


def test_channel_order_and_rates():
    p = ModelParams()
    channels = build_jump_operators(p, build_basis(p.n_max))
    assert tuple(c.label for c in channels) == CHANNEL_LABELS
    assert [c.rate for c in channels] == [p.kappa, p.gamma0, p.gamma1, p.gamma0, p.gamma1]


def test_cavity_channel_lowers_photon_number():
    p = ModelParams()
    basis = build_basis(p.n_max)
    cavity = build_jump_operators(p, basis)[0]
    out = cavity.apply(basis.ket(0, 0, 1))
    expected = math.sqrt(p.kappa) * basis.ket(0, 0, 0)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    # annihilation on the photon vacuum
    for j1 in range(3):
        for j2 in range(3):
            assert np.all(cavity.apply(basis.ket(j1, j2, 0)) == 0)


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_decay_bookkeeping_identity(data):
    """i(H - H^dag) equals the summed jump-rate operator, hence is PSD."""
    p = random_params(data.draw)
    basis = build_basis(p.n_max)
    h = build_hamiltonian(p, basis).matrix
    channels = build_jump_operators(p, basis)
    decay = 1j * (h - h.conj().T)
    total = sum(c.rate * c.op.conj().T @ c.op for c in channels)
    np.testing.assert_allclose(decay, total, atol=1e-12)
    assert np.linalg.eigvalsh(decay).min() > -1e-12


# ---------------------------------------------------------------------------
# exchange symmetry and the collective picture


def test_swap_commutes_with_hamiltonian_and_permutes_channels():
    p = ModelParams()
    basis = build_basis(p.n_max)
    h = build_hamiltonian(p, basis).matrix
    s = swap_operator(basis)
    np.testing.assert_allclose(s @ h - h @ s, 0, atol=1e-14)
    channels = build_jump_operators(p, basis)
    by_label = {c.label: c.op for c in channels}
    for j in (0, 1):
        np.testing.assert_allclose(
            s @ by_label[f"atom1_to{j}"] @ s, by_label[f"atom2_to{j}"], atol=1e-15
        )
    np.testing.assert_allclose(s @ by_label["cavity"] @ s, by_label["cavity"], atol=1e-15)


def test_collective_transform_is_unitary():
    basis = build_basis(2)
    u = collective_transform(basis).matrix
    np.testing.assert_allclose(u @ u.conj().T, np.eye(basis.dim), atol=1e-14)


def test_collective_transform_splits_01():
    basis = build_basis(2)
    u = collective_transform(basis).matrix
    for n in range(3):
        vec = u @ basis.ket(0, 1, n)
        s_idx = basis.collective_index("s01", n)
        a_idx = basis.collective_index("a01", n)
        expected = np.zeros(basis.dim, dtype=complex)
        expected[s_idx] = 1 / math.sqrt(2)
        expected[a_idx] = 1 / math.sqrt(2)
        np.testing.assert_allclose(vec, expected, atol=1e-15)


def test_hamiltonian_preserves_exchange_sectors():
    """No generator matrix element connects symmetric and antisymmetric labels."""
    p = ModelParams()
    basis = build_basis(p.n_max)
    h_col = collective_hamiltonian(p, basis).matrix
    sym = [basis.collective_index(lbl, n)
           for lbl in ("00", "11", "22", "s01", "s02", "s12")
           for n in range(p.n_max + 1)]
    anti = [basis.collective_index(lbl, n)
            for lbl in ("a01", "a02", "a12")
            for n in range(p.n_max + 1)]
    assert np.all(h_col[np.ix_(sym, anti)] == 0)
    assert np.all(h_col[np.ix_(anti, sym)] == 0)


def test_collective_generator_matches_transformed_bare():
    p = ModelParams()
    basis = build_basis(p.n_max)
    u = collective_transform(basis).matrix
    h = build_hamiltonian(p, basis).matrix
    h_col = collective_hamiltonian(p, basis).matrix
    np.testing.assert_allclose(u @ h @ u.conj().T, h_col, atol=1e-12)


def test_reset_superoperators_agree_across_bases():
    """The remixed collective channels give the identical map on densities."""
    p = ModelParams()
    basis = build_basis(p.n_max)
    u = collective_transform(basis).matrix
    bare = lindblad.reset_superoperator(build_jump_operators(p, basis))
    col = lindblad.reset_superoperator(collective_jump_operators(p, basis))
    uu = np.kron(u, u.conj())
    np.testing.assert_allclose(uu @ bare @ uu.conj().T, col, atol=1e-12)


def test_collective_channels_individually_differ_from_bare():
    """The equivalence is a property of the map, not of individual channels."""
    p = ModelParams()
    basis = build_basis(p.n_max)
    u = collective_transform(basis).matrix
    bare = build_jump_operators(p, basis)
    col = collective_jump_operators(p, basis)
    transformed = [u @ c.op @ u.conj().T for c in bare]
    assert any(
        not np.allclose(t, c.op, atol=1e-9) for t, c in zip(transformed[1:], col[1:])
    )


def test_dark_state_is_annihilated_by_every_channel():
    p = ModelParams()
    model = build_model(p)
    dark = dark_state(model.basis)
    assert np.vdot(dark, dark) == pytest.approx(1.0)
    for c in model.channels:
        assert np.abs(c.apply(dark)).max() == 0.0
    # antisymmetric under atom exchange
    s = swap_operator(model.basis)
    np.testing.assert_allclose(s @ dark, -dark, atol=1e-15)


# ---------------------------------------------------------------------------
# regime report


def test_reference_regime_passes_with_one_borderline():
    report = validate_regime(ModelParams())
    assert report.ok
    statuses = {c.condition: c.status for c in report.checks}
    assert statuses["omega_m < gamma"] == "borderline"
    del statuses["omega_m < gamma"]
    assert set(statuses.values()) == {"pass"}


def test_small_detuning_warns():
    report = validate_regime(ModelParams(delta=1.0))
    warned = [c.condition for c in report.checks if c.status == "warn"]
    assert any("delta" in c for c in warned)
    assert not report.ok


def test_zero_drive_passes_trivially():
    report = validate_regime(ModelParams(omega_m=0.0))
    assert all(
        c.status == "pass" for c in report.checks if c.condition.startswith("omega_m")
    )
