import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermolab.errors import InputError
from thermolab.radiometry import (RadiometricCalibration, RadiometricFrame,
                                  TemperatureMap, blackbody_signal,
                                  forward_signal, object_signal,
                                  raw_to_temperature, signal_to_temperature,
                                  snap_field, synth_frame)

CAL = RadiometricCalibration()


def uniform_map(value, width=160, height=120):
    return TemperatureMap(width=width, height=height,
                          temps=np.full(width * height, float(value)))


# --- emissivity compensation -------------------------------------------------

def test_object_signal_identity_at_unit_emissivity():
    cal = RadiometricCalibration(emissivity=1.0)
    assert object_signal(5000.0, cal) == 5000.0


def test_object_at_reflected_temperature_is_fixed_point():
    cal = RadiometricCalibration(emissivity=0.96, reflected_temp_k=293.15)
    raw = forward_signal(20.0, cal)
    assert object_signal(raw, cal) == pytest.approx(blackbody_signal(20.0, cal))


def test_decoded_temperature_at_reflected_temp_independent_of_emissivity():
    for eps in (0.8, 0.96, 1.0):
        cal = RadiometricCalibration(emissivity=eps, reflected_temp_k=293.15)
        raw = forward_signal(20.0, cal)
        assert signal_to_temperature(raw, cal) == pytest.approx(20.0, abs=1e-9)


def test_object_signal_rejects_non_finite():
    with pytest.raises(InputError):
        object_signal(float("nan"), CAL)


# --- forward / inverse -------------------------------------------------------

def test_round_trip_34_5():
    sig = forward_signal(34.5, CAL)
    assert abs(signal_to_temperature(sig, CAL) - 34.5) < 1e-6


def test_round_trip_36_1_with_skin_emissivity():
    cal = RadiometricCalibration(emissivity=0.96)
    sig = forward_signal(36.1, cal)
    assert abs(signal_to_temperature(sig, cal) - 36.1) < 1e-6


def test_forward_signal_monotone():
    assert forward_signal(35.0, CAL) > forward_signal(34.0, CAL)


def test_emissivity_changes_counts_away_from_reflected_temp():
    warm = RadiometricCalibration(emissivity=0.96)
    unit = RadiometricCalibration(emissivity=1.0)
    assert forward_signal(34.5, warm) != forward_signal(34.5, unit)
    # at the reflected temperature both emissivities measure the same signal
    t_refl = warm.reflected_temp_k - 273.15
    assert forward_signal(t_refl, warm) == pytest.approx(forward_signal(t_refl, unit))


def test_forward_signal_rejects_out_of_range():
    with pytest.raises(InputError):
        forward_signal(251.0, CAL)
    with pytest.raises(InputError):
        forward_signal(-21.0, CAL)


@settings(max_examples=200, deadline=None)
@given(
    temp=st.floats(min_value=-20.0, max_value=250.0),
    r1=st.floats(min_value=5000.0, max_value=50000.0),
    b=st.floats(min_value=1200.0, max_value=1700.0),
    emissivity=st.floats(min_value=0.5, max_value=1.0),
    reflected=st.floats(min_value=283.15, max_value=303.15),
)
def test_round_trip_property(temp, r1, b, emissivity, reflected):
    cal = RadiometricCalibration(r1=r1, b=b, emissivity=emissivity,
                                 reflected_temp_k=reflected)
    sig = forward_signal(temp, cal)
    assert abs(signal_to_temperature(sig, cal) - temp) < 1e-6


@settings(max_examples=100, deadline=None)
@given(counts=st.integers(min_value=9000, max_value=60000),
       delta=st.integers(min_value=1, max_value=2000))
def test_decode_monotone_in_counts(counts, delta):
    low = signal_to_temperature(float(counts), CAL)
    high = signal_to_temperature(float(counts + delta), CAL)
    assert high > low


# --- frame decode ------------------------------------------------------------

def test_uniform_frame_decodes_uniform_within_quantization():
    frame = synth_frame(uniform_map(34.5), CAL, noise_netd_c=0.0)
    tmap, invalid = raw_to_temperature(frame)
    assert invalid == 0
    assert np.all(np.abs(tmap.temps - 34.5) < 0.01)  # half-count quantization
    assert np.unique(tmap.temps).size == 1


def test_snapped_field_round_trips_exactly():
    snapped = snap_field(uniform_map(34.5), CAL)
    frame = synth_frame(snapped, CAL, noise_netd_c=0.0)
    tmap, invalid = raw_to_temperature(frame)
    assert invalid == 0
    assert np.array_equal(tmap.temps, snapped.temps)


def test_signal_level_round_trip_at_anger_start_value():
    cal = RadiometricCalibration(emissivity=0.96)
    assert abs(signal_to_temperature(forward_signal(36.1, cal), cal) - 36.1) < 1e-6


def test_constant_counts_unit_emissivity_is_spatially_constant():
    cal = RadiometricCalibration(emissivity=1.0)
    frame = RadiometricFrame(width=8, height=4, counts=np.full(32, 20000),
                             calibration=cal)
    tmap, invalid = raw_to_temperature(frame)
    assert invalid == 0
    assert np.unique(tmap.temps).size == 1


def test_decode_deterministic():
    frame = synth_frame(uniform_map(33.0, 40, 30), CAL, noise_netd_c=0.06, rng=7)
    a, _ = raw_to_temperature(frame)
    b, _ = raw_to_temperature(frame)
    assert np.array_equal(a.temps, b.temps)


def test_invalid_pixels_flagged_and_counted():
    # counts at the lowest end decode below the camera range or have no
    # positive log argument once the reflected share is removed
    cal = RadiometricCalibration(emissivity=0.5)
    counts = np.full(16, 100, dtype=np.uint16)
    counts[:4] = 20000
    frame = RadiometricFrame(width=4, height=4, counts=counts, calibration=cal)
    tmap, invalid = raw_to_temperature(frame)
    assert invalid == 12
    assert np.isnan(tmap.temps[4:]).all()
    assert np.isfinite(tmap.temps[:4]).all()


def test_all_invalid_frame_is_an_error():
    cal = RadiometricCalibration(emissivity=0.5)
    frame = RadiometricFrame(width=4, height=4,
                             counts=np.full(16, 100, dtype=np.uint16),
                             calibration=cal)
    with pytest.raises(InputError):
        raw_to_temperature(frame)


# --- synthesis ---------------------------------------------------------------

def test_synth_preserves_shape():
    frame = synth_frame(uniform_map(30.0), CAL, noise_netd_c=0.0)
    assert (frame.width, frame.height) == (160, 120)
    assert frame.counts.size == 160 * 120


def test_synth_noise_respects_three_sigma_bound():
    rng = np.random.default_rng(42)
    field = snap_field(uniform_map(34.0, width=500, height=200), CAL)  # 1e5 px
    frame = synth_frame(field, CAL, noise_netd_c=0.06, rng=rng)
    tmap, _ = raw_to_temperature(frame)
    inside = np.abs(tmap.temps - field.temps) <= 0.18 + 0.005  # + quantization
    assert inside.mean() >= 0.997


def test_synth_seeded_reproducible():
    field = uniform_map(32.0, 64, 48)
    a = synth_frame(field, CAL, noise_netd_c=0.06, rng=123)
    b = synth_frame(field, CAL, noise_netd_c=0.06, rng=123)
    assert np.array_equal(a.counts, b.counts)


def test_synth_rejects_negative_noise():
    with pytest.raises(InputError):
        synth_frame(uniform_map(30.0), CAL, noise_netd_c=-0.1)


# --- validation --------------------------------------------------------------

def test_calibration_validation():
    with pytest.raises(InputError):
        RadiometricCalibration(emissivity=0.0)
    with pytest.raises(InputError):
        RadiometricCalibration(emissivity=1.2)
    with pytest.raises(InputError):
        RadiometricCalibration(b=-1.0)
    with pytest.raises(InputError):
        RadiometricCalibration(r2=0.0)
    with pytest.raises(InputError):
        RadiometricCalibration(f=0.5)
    with pytest.raises(InputError):
        RadiometricCalibration(reflected_temp_k=500.0)


def test_default_emissivity_is_skin():
    assert RadiometricCalibration().emissivity == 0.96


def test_temperature_map_range_invariant():
    with pytest.raises(InputError):
        TemperatureMap(width=2, height=2, temps=np.array([0.0, 0.0, 0.0, 300.0]))
    with pytest.raises(InputError):
        TemperatureMap(width=2, height=2, temps=np.array([0.0, 0.0, 0.0]))


def test_frame_length_invariant():
    with pytest.raises(InputError):
        RadiometricFrame(width=4, height=4, counts=np.zeros(15, dtype=np.uint16))


def test_frame_rejects_non_integer_counts():
    with pytest.raises(InputError):
        RadiometricFrame(width=2, height=2, counts=np.array([1.5, 2.0, 3.0, 4.0]))
    with pytest.raises(InputError):
        RadiometricFrame(width=2, height=2, counts=np.array([-1, 2, 3, 4]))
