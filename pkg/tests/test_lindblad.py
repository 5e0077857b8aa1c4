"""
Unit tests для тензора γ, тензора Λ и эволюции ρ.
"""

import math

import numpy as np
import pytest

from src.core.device import KHZ, DissipationRates
from src.core.errors import ConfigError, NonPhysicalState, StepSizeTooLarge
from src.core.lindblad import (
    CHANNELS,
    DriveTone,
    DriveWaveform,
    apply_dissipator,
    build_gamma,
    build_jumps,
    build_lambda,
    density_monitor,
    evolve,
    qubit_expectation,
)
from src.core.spectroscopy import prepare_system
from src.core.steadystate import build_model
from src.core.types import Mode


@pytest.fixture(scope="module")
def decoupled_system(reference_params):
    return prepare_system(reference_params.with_coupling(0.0), order=0)


def random_density(n: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def resonant_amplitude(system) -> float:
    """Vo, при котором ½|θ12|²Vo²τ² порядка единицы."""
    lam = system.lambda_for((1, 2))
    tau = 1.0 / abs(lam.value(1, 2, 1, 2))
    return 1.0 / (abs(system.theta_for((1, 2))[0, 1]) * tau)


class TestGammaTensor:
    """γ(σ,s;σ′,s′)"""

    def test_hermitian(self, system_order2):
        matrix = system_order2.gamma.matrix
        np.testing.assert_allclose(matrix, matrix.conj().T, atol=0)

    def test_decoupled_diagonal(self, decoupled_system):
        gamma = decoupled_system.gamma
        assert gamma.value(Mode.UP, 1, Mode.UP, 1) == pytest.approx(110 * KHZ)
        assert gamma.value(Mode.UP, -1, Mode.UP, -1) == pytest.approx(90 * KHZ)
        assert gamma.value(Mode.DOWN, 1, Mode.DOWN, 1) == pytest.approx(11 * KHZ)
        assert gamma.value(Mode.DOWN, -1, Mode.DOWN, -1) == pytest.approx(9 * KHZ)

    def test_decoupled_modes_do_not_mix(self, decoupled_system):
        gamma = decoupled_system.gamma
        assert gamma.value(Mode.UP, 1, Mode.DOWN, 1) == 0
        assert gamma.value(Mode.DOWN, 1, Mode.DOWN, -1) == pytest.approx(0, abs=1e-20)

    def test_zero_rates(self, reference_params):
        params = reference_params.with_rates(DissipationRates(0.0, 0.0, 0.0, 0.0))
        system = prepare_system(params, order=0)
        assert np.all(system.gamma.matrix == 0)
        assert len(CHANNELS) == 4


class TestLambdaTensor:
    """Λ^{(l,l′)}_{k,k′} на ℰ"""

    def test_two_state_values(self, decoupled_system):
        lam = decoupled_system.lambda_for((1, 2))
        assert lam.value(1, 1, 2, 2) == pytest.approx(11 * KHZ, abs=1e-15)
        assert lam.value(1, 1, 1, 1) == pytest.approx(-9 * KHZ, abs=1e-15)
        assert lam.value(1, 2, 1, 2) == pytest.approx(-10 * KHZ, abs=1e-15)
        assert lam.value(2, 2, 2, 2) == pytest.approx(-11 * KHZ, abs=1e-15)

    def test_coherence_time(self, system_order0):
        """τ ≈ 100 мкс для опорного устройства"""
        lam = system_order0.lambda_for((1, 2))
        tau_us = 1.0 / abs(lam.value(1, 2, 1, 2)) * 1e-3
        assert 80.0 <= tau_us <= 120.0

    @pytest.mark.parametrize("levels", [(1, 2), (1, 2, 3), (2, 4)])
    def test_trace_preserving(self, system_order2, levels):
        lam = system_order2.lambda_for(levels)
        scale = np.max(np.abs(lam.tensor))
        assert lam.trace_leak() < 1e-12 * scale

    def test_matches_direct_dissipator(self, system_order2):
        levels = (1, 2, 3)
        jumps = build_jumps(system_order2.eigsys, system_order2.basis, levels)
        lam = build_lambda(system_order2.gamma, jumps)
        rho = random_density(3)
        direct = apply_dissipator(system_order2.gamma, jumps, rho)
        via_tensor = (lam.superoperator() @ rho.reshape(-1)).reshape(3, 3)
        np.testing.assert_allclose(via_tensor, direct, rtol=0, atol=1e-12 * np.max(np.abs(direct)))

    def test_unknown_level(self, decoupled_system):
        lam = decoupled_system.lambda_for((1, 2))
        with pytest.raises(ConfigError):
            lam.value(1, 3, 1, 1)


class TestDrive:
    def test_waveform(self):
        drive = DriveWaveform((DriveTone(1.0, 2.0), DriveTone(0.5, 3.0)))
        assert drive.value(0.7) == pytest.approx(math.sin(1.4) + 0.5 * math.sin(2.1))
        assert drive.max_frequency == 3.0
        assert drive.batch().amplitudes.shape == (1, 2)

    def test_empty_waveform(self):
        drive = DriveWaveform()
        assert drive.value(1.0) == 0.0
        assert drive.max_frequency == 0.0

    @pytest.mark.parametrize("amplitude,frequency", [(-1.0, 1.0), (1.0, 0.0), (float("inf"), 1.0)])
    def test_invalid_tone(self, amplitude, frequency):
        with pytest.raises(ConfigError):
            DriveTone(amplitude, frequency)


class TestEvolve:
    """RK4 для ρ_{kk′} на ℰ"""

    def test_zero_rates_no_drive_is_constant(self, reference_params):
        params = reference_params.with_rates(DissipationRates(0.0, 0.0, 0.0, 0.0))
        system = prepare_system(params, order=0)
        rho0 = np.diag([0.3, 0.7]).astype(complex)
        traj = evolve(
            system.eigsys, system.hamiltonians.theta, system.lambda_for((1, 2)), DriveWaveform(),
            t_end=100.0, rho0=rho0, stride=500,
        )
        np.testing.assert_allclose(traj.population(1), 0.3, atol=1e-14)
        np.testing.assert_allclose(traj.population(2), 0.7, atol=1e-14)

    def test_relaxation_to_bath_value(self, fast_system):
        """Без накачки ρ22 → −Λ11_11/(Λ22_11 − Λ11_11)"""
        lam = fast_system.lambda_for((1, 2))
        theta = fast_system.theta_for((1, 2))
        model = build_model(lam, theta[0, 1], theta[1, 0], fast_system.eigsys.transition(2, 1), 0.0)
        traj = evolve(
            fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(),
            t_end=1000.0, rho0=np.diag([0.0, 1.0]).astype(complex), stride=1000,
        )
        assert traj.population(2)[-1] == pytest.approx(float(model.rho22(1.0)), abs=1e-6)
        assert traj.population(2)[-1] == pytest.approx(0.45, abs=1e-3)

    def test_driven_trajectory_stays_physical(self, fast_system):
        eps21 = fast_system.eigsys.transition(2, 1)
        drive = DriveWaveform((DriveTone(resonant_amplitude(fast_system), eps21),))
        traj = evolve(
            fast_system.eigsys, fast_system.hamiltonians.theta, fast_system.lambda_for((1, 2)), drive,
            t_end=300.0, stride=200, spin=fast_system.spin,
        )
        assert traj.diagnostics["max_hermiticity"] < 1e-9
        assert traj.diagnostics["max_trace_drift"] < 1e-3
        assert traj.diagnostics["status"] == "healthy"
        assert traj.columns() == ["t_us", "rho11", "rho22", "re_rho12", "im_rho12", "Sx", "Sy", "Sz"]
        assert len(traj.rows()) == len(traj.times)
        # уровни 1, 2 это |0,0⟩ и |1/2,−1/2⟩, поэтому Sz = −ρ22/2
        np.testing.assert_allclose(traj.observables[:, 2], -0.5 * traj.population(2), atol=1e-12)
        assert np.max(np.abs(traj.coherence(1, 2))) > 0.01

    def test_rejects_bad_initial_state(self, fast_system):
        lam = fast_system.lambda_for((1, 2))
        with pytest.raises(ConfigError):
            evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(), 10.0,
                   rho0=np.eye(2, dtype=complex))
        with pytest.raises(ConfigError):
            evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(), 10.0,
                   rho0=np.eye(3, dtype=complex) / 3)

    @pytest.mark.parametrize(
        "rho0",
        [
            np.diag([0.55, 0.5]).astype(complex),
            np.array([[0.5, 1e-7], [0.0, 0.5]], dtype=complex),
            np.diag([1.0 + 1e-6, -1e-6]).astype(complex),
        ],
        ids=["trace", "hermiticity", "population"],
    )
    def test_initial_state_uses_plain_budgets(self, fast_system, rho0):
        """Начальное ρ проверяется без запаса FAIL_FACTOR"""
        lam = fast_system.lambda_for((1, 2))
        with pytest.raises(ConfigError, match="rho0"):
            evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(), 10.0, rho0=rho0)

    def test_initial_state_within_budget_accepted(self, fast_system):
        lam = fast_system.lambda_for((1, 2))
        rho0 = np.diag([0.4, 0.6 + 5e-4]).astype(complex)
        traj = evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(), 10.0, rho0=rho0)
        assert traj.population(1)[0] == pytest.approx(0.4)

    def test_step_too_large(self, fast_system):
        lam = fast_system.lambda_for((1, 2))
        with pytest.raises(StepSizeTooLarge):
            evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, DriveWaveform(), 10.0, dt=1.0)


class TestPhysicalityChecks:
    def test_monitor_rejects_trace_loss(self):
        monitor = density_monitor(2)
        bad = (2.0 * np.eye(2, dtype=complex) / 2).reshape(1, -1)
        with pytest.raises(NonPhysicalState):
            monitor(10, 1.0, bad)

    def test_monitor_accepts_density(self):
        density_monitor(3)(0, 0.0, random_density(3).reshape(1, -1))

    def test_imaginary_expectation(self):
        spin_e = np.zeros((3, 2, 2), dtype=complex)
        spin_e[0, 0, 1] = 1j
        rho = np.full((2, 2), 0.5, dtype=complex)
        with pytest.raises(NonPhysicalState):
            qubit_expectation(spin_e, rho)
