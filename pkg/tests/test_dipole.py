"""Tests du couplage dipolaire Er-Eu."""
import math

import pytest

from app.exceptions import InvalidParameterError
from app.models import IonPairConfig
from app.services import dipole


class TestOrientation:

    @pytest.mark.parametrize(
        "unit_er, unit_eu, unit_r, expected",
        [
            ((1, 0, 0), (1, 0, 0), (0, 0, 1), 1.0),
            ((0, 0, 1), (0, 0, 1), (0, 0, 1), -2.0),
            ((1, 0, 0), (0, 1, 0), (0, 0, 1), 0.0),
        ],
    )
    def test_orientation_factor(self, unit_er, unit_eu, unit_r, expected):
        assert dipole.orientation_factor(unit_er, unit_eu, unit_r) == pytest.approx(expected, abs=1e-12)

    def test_magic_angle_cancels(self):
        c = 1 / math.sqrt(3)
        assert dipole.orientation_factor((c, c, c), (c, c, c), (0, 0, 1)) == pytest.approx(0.0, abs=1e-12)

    def test_non_unit_vector_rejected(self):
        with pytest.raises(InvalidParameterError):
            dipole.orientation_factor((1, 1, 0), (1, 0, 0), (0, 0, 1))

    def test_model_rejects_non_unit_vector(self):
        with pytest.raises(ValueError):
            IonPairConfig(unit_r=(0.0, 0.0, 2.0))


class TestShifts:

    def test_default_stark_shift(self):
        # 6 nm, geometrie maximale
        assert dipole.stark_shift(IonPairConfig()) == pytest.approx(46.4e3, rel=5e-3)

    def test_stark_shift_at_one_nanometre(self):
        pair = IonPairConfig(separation_r=1e-9)
        assert dipole.stark_shift(pair) == pytest.approx(10.03e6, rel=5e-3)

    def test_magnetic_shift_at_one_nanometre(self):
        pair = IonPairConfig(separation_r=1e-9)
        assert dipole.magnetic_shift(pair) == pytest.approx(354e3, rel=1e-2)

    def test_stark_dominates_magnetic(self):
        pair = IonPairConfig()
        assert abs(dipole.stark_shift(pair)) > 20 * abs(dipole.magnetic_shift(pair))

    @pytest.mark.parametrize("factor", [0.5, 2.0, 3.0])
    def test_inverse_cube_scaling(self, factor):
        pair = IonPairConfig()
        scaled = pair.model_copy(update={"separation_r": pair.separation_r * factor})
        assert dipole.stark_shift(scaled) == pytest.approx(dipole.stark_shift(pair) / factor ** 3, rel=1e-12)
        assert dipole.magnetic_shift(scaled) == pytest.approx(dipole.magnetic_shift(pair) / factor ** 3, rel=1e-12)

    def test_sign_follows_geometry(self):
        pair = IonPairConfig(unit_er=(0.0, 0.0, 1.0), unit_eu=(0.0, 0.0, 1.0))
        assert dipole.stark_shift(pair) < 0

    @pytest.mark.parametrize("shift", [dipole.stark_shift, dipole.magnetic_shift])
    def test_orientation_flips(self, shift):
        unit_er, unit_eu = (0.6, 0.0, 0.8), (0.0, 0.6, 0.8)
        pair = IonPairConfig(unit_er=unit_er, unit_eu=unit_eu)
        flipped = tuple(-c for c in unit_er)
        assert shift(pair.model_copy(update={"unit_er": flipped})) == pytest.approx(-shift(pair), rel=1e-12)
        both = pair.model_copy(update={"unit_er": flipped, "unit_eu": tuple(-c for c in unit_eu)})
        assert shift(both) == pytest.approx(shift(pair), rel=1e-12)

    def test_zero_separation_rejected(self):
        pair = IonPairConfig().model_construct(**{**IonPairConfig().model_dump(), "separation_r": 0.0})
        with pytest.raises(InvalidParameterError):
            dipole.stark_shift(pair)


class TestConditionalDrive:

    def test_gate_times_at_46_khz(self):
        drive = dipole.conditional_drive(46e3)
        assert drive.t_cnot == pytest.approx(94.13e-6, rel=1e-3)
        assert drive.t_st == pytest.approx(75.30e-6, rel=1e-3)

    def test_generalized_rabi_is_twice_omega(self):
        drive = dipole.conditional_drive(46e3)
        assert math.hypot(drive.delta_nu, drive.omega) == pytest.approx(2 * drive.omega, rel=1e-12)

    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_non_positive_coupling_rejected(self, value):
        with pytest.raises(InvalidParameterError):
            dipole.conditional_drive(value)


class TestCalibration:

    def test_separation_for_shift_round_trip(self):
        pair = IonPairConfig()
        r = dipole.separation_for_shift(1e6, pair)
        assert dipole.stark_shift(pair.model_copy(update={"separation_r": r})) == pytest.approx(1e6, rel=1e-9)

    def test_calibrate_dielectric_round_trip(self):
        pair = IonPairConfig()
        eps = dipole.calibrate_dielectric(50e3, pair)
        assert dipole.stark_shift(pair.model_copy(update={"epsilon_rel": eps})) == pytest.approx(50e3, rel=1e-9)

    def test_zero_angular_factor_cannot_be_calibrated(self):
        pair = IonPairConfig(unit_eu=(0.0, 1.0, 0.0))
        with pytest.raises(InvalidParameterError):
            dipole.separation_for_shift(1e3, pair)
