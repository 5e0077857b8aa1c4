"""
Unit tests для асимптотики ρ22(Ω) и её сверки с RK4.
"""

import logging

import numpy as np
import pytest

from src.core.device import KHZ
from src.core.errors import ConfigError, DivisionHazard
from src.core.lindblad import DriveTone, DriveWaveform, LambdaTensor, evolve
from src.core.steadystate import build_model, consistency_check, steady_state
from src.core.types import SteadyStateConvention

EPS21 = 5.0
THETA = 0.3


def two_state_lambda(
    gain: float = 11 * KHZ,
    loss: float = -9 * KHZ,
    coherence: complex = -10 * KHZ,
    cross: complex = 0.0,
) -> LambdaTensor:
    tensor = np.zeros((2, 2, 2, 2), dtype=complex)
    tensor[0, 0, 1, 1] = gain
    tensor[0, 0, 0, 0] = loss
    tensor[0, 1, 0, 1] = coherence
    tensor[0, 1, 1, 0] = cross
    return LambdaTensor(levels=(1, 2), tensor=tensor)


class TestSteadyStateModel:
    """ρ22 = −(Λ11 + накачка)/(Λ22_11 − Λ11_11)"""

    def test_coherence_time_and_linewidth(self):
        model = build_model(two_state_lambda(), THETA, THETA, EPS21, 0.0)
        assert model.tau == pytest.approx(1e5)
        assert model.linewidth == pytest.approx(1e-5)
        driven = model.with_amplitude(1e-3)
        assert driven.linewidth == pytest.approx(1e-5 * np.sqrt(1 + 0.5 * 0.09 * 1e-6 * 1e10))

    def test_coherence_time_from_modulus(self):
        """τ = 1/|Λ12_12|, мнимая часть тоже входит"""
        lam = two_state_lambda(coherence=complex(-6 * KHZ, 8 * KHZ))
        assert build_model(lam, THETA, THETA, EPS21, 0.0).tau == pytest.approx(1e5)
        real_part = build_model(lam, THETA, THETA, EPS21, 0.0, SteadyStateConvention.REAL_PART)
        assert real_part.tau == pytest.approx(1e6 / 6)

    def test_no_drive_gives_bath_population(self):
        model = build_model(two_state_lambda(), THETA, THETA, EPS21, 0.0)
        np.testing.assert_allclose(model.rho22(np.array([4.9, 5.0, 5.1])), 0.45)
        assert model.sz(5.0) == pytest.approx(-0.225)
        assert model.rho12_envelope(5.0) == 0

    def test_saturation(self):
        """Сильная накачка на резонансе: ρ22 → ½"""
        model = build_model(two_state_lambda(), THETA, THETA, EPS21, 10.0)
        assert model.rho22(model.shifted_eps21) == pytest.approx(0.5, abs=1e-6)

    def test_half_maximum_at_linewidth(self):
        model = build_model(two_state_lambda(), THETA, THETA, EPS21, 3e-4)
        center, width = model.shifted_eps21, model.linewidth
        peak = model.rho22(center) - 0.45
        assert peak > 0
        for omega in (center - width, center + width):
            assert model.rho22(omega) - 0.45 == pytest.approx(0.5 * peak, rel=1e-9)

    def test_resonance_shift(self):
        """ε̃21 − ε21 = −Re(2|θ12|²Λ12_12)/(4ε21·ΔΛ)·Vo²"""
        vo = 0.01
        model = build_model(two_state_lambda(), THETA, THETA, EPS21, vo)
        expected = EPS21 + 2 * THETA**2 * 10 * KHZ / (4 * EPS21 * 20 * KHZ) * vo**2
        assert model.shifted_eps21 == pytest.approx(expected, rel=1e-14)

    def test_grid_result(self):
        grid = np.linspace(EPS21 - 1e-4, EPS21 + 1e-4, 21)
        result = steady_state(two_state_lambda(), THETA, THETA, EPS21, 3e-4, grid)
        assert result.rho22.shape == (21,)
        np.testing.assert_allclose(result.sz, -0.5 * result.rho22)
        assert int(np.argmax(result.rho22)) == 10
        assert result.center == pytest.approx(EPS21, abs=1e-9)
        assert result.tau == pytest.approx(1e5)


class TestDivisionHazards:
    def test_equal_population_rates(self):
        with pytest.raises(DivisionHazard):
            build_model(two_state_lambda(gain=0.0, loss=0.0), THETA, THETA, EPS21, 1.0)

    def test_infinite_coherence_time(self):
        with pytest.raises(DivisionHazard):
            build_model(two_state_lambda(coherence=0.0), THETA, THETA, EPS21, 1.0)

    def test_zero_transition(self):
        with pytest.raises(DivisionHazard):
            build_model(two_state_lambda(), THETA, THETA, 0.0, 1.0)

    def test_wrong_state_set(self):
        lam = LambdaTensor(levels=(2, 3), tensor=two_state_lambda().tensor)
        with pytest.raises(ConfigError):
            build_model(lam, THETA, THETA, EPS21, 1.0)

    def test_negative_amplitude(self):
        with pytest.raises(ConfigError):
            build_model(two_state_lambda(), THETA, THETA, EPS21, -1.0)


class TestConventions:
    """Комплексный Λ12_12 = −1e-5 + 2e-6j"""

    COMPLEX = -10 * KHZ + 2j * KHZ

    def test_as_printed_keeps_imaginary_part(self, caplog):
        lam = two_state_lambda(coherence=self.COMPLEX)
        grid = np.linspace(EPS21 - 1e-4, EPS21 + 1e-4, 5)
        with caplog.at_level(logging.WARNING, logger="src.core.steadystate"):
            result = steady_state(lam, THETA, THETA, EPS21, 1e-3, grid)
        assert result.model.lambda_12_12 == self.COMPLEX
        assert np.max(np.abs(result.model.rho22_complex(grid).imag)) > 0
        assert "imaginary residue" in caplog.text

    def test_real_part(self):
        model = build_model(
            two_state_lambda(coherence=self.COMPLEX), THETA, THETA, EPS21, 1e-3, SteadyStateConvention.REAL_PART
        )
        assert model.lambda_12_12 == -10 * KHZ
        assert np.all(model.rho22_complex(np.array([EPS21])).imag == 0)

    def test_magnitude(self):
        model = build_model(
            two_state_lambda(coherence=self.COMPLEX), THETA, THETA, EPS21, 1e-3, SteadyStateConvention.MAGNITUDE
        )
        assert model.lambda_12_12 == pytest.approx(-abs(self.COMPLEX))
        assert model.tau < 1e5

    def test_conventions_agree_for_real_lambda(self):
        values = [
            build_model(two_state_lambda(), THETA, THETA, EPS21, 1e-3, convention).rho22(EPS21)
            for convention in SteadyStateConvention
        ]
        np.testing.assert_allclose(values, values[0], rtol=1e-15)


class TestConsistencyWithIntegrator:
    """Хвост RK4-траектории против асимптотики при скоростях ×1000"""

    def test_resonant_drive(self, fast_system):
        lam = fast_system.lambda_for((1, 2))
        theta = fast_system.theta_for((1, 2))
        eps21 = fast_system.eigsys.transition(2, 1)
        model = build_model(lam, theta[0, 1], theta[1, 0], eps21, 0.0)
        amplitude = 3.0 / (abs(theta[0, 1]) * model.tau)
        drive = DriveWaveform((DriveTone(amplitude, model.with_amplitude(amplitude).shifted_eps21),))
        traj = evolve(
            fast_system.eigsys, fast_system.hamiltonians.theta, lam, drive,
            t_end=10.0 * model.tau, stride=50,
        )
        report = consistency_check(traj, model, t_min=5.0 * model.tau)
        assert report.samples > 10
        # ρ22 ≈ 0.49, заметно выше равновесных 0.45
        assert report.expected_rho22 > 0.48
        assert report.rho22_residual < 0.01
        assert report.rho12_envelope_mismatch < 0.1 * report.expected_envelope
        assert set(report.to_dict()) >= {"rho22_residual", "samples"}

    def test_rejects_multi_tone(self, fast_system):
        lam = fast_system.lambda_for((1, 2))
        theta = fast_system.theta_for((1, 2))
        eps21 = fast_system.eigsys.transition(2, 1)
        model = build_model(lam, theta[0, 1], theta[1, 0], eps21, 0.0)
        drive = DriveWaveform((DriveTone(1.0, eps21), DriveTone(1.0, 2 * eps21)))
        traj = evolve(fast_system.eigsys, fast_system.hamiltonians.theta, lam, drive, t_end=1.0)
        with pytest.raises(ConfigError):
            consistency_check(traj, model)
