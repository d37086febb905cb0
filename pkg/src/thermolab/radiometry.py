"""Raw sensor counts to calibrated skin temperature, and back.

Single-band microbolometer cameras ship per-image calibration constants for
the inverse model T = b / ln(r1 / (r2 * (S + o)) + f), with the measured
signal first compensated for surface emissivity against the reflected
background. The forward direction is the exact algebraic inverse, which is
what makes synthetic frames and round-trip testing possible.

All public temperatures are degrees Celsius; kelvin exists only inside the
model. Invalid pixels are NaN in decoded maps, never clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .errors import InputError
from .instruments import FLIR_E6

KELVIN_OFFSET = 273.15

# Fixture calibration: arbitrary but fits uint16 over the camera's full
# [-20, 250] C range (counts 9895..60760) with ~116 counts per degree at
# skin temperatures.
DEFAULT_R1 = 16000.0
DEFAULT_R2 = 0.022
DEFAULT_B = 1400.0
DEFAULT_O = -7000.0
DEFAULT_F = 1.0

SKIN_EMISSIVITY = 0.96

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class RadiometricCalibration:
    """Planck inversion constants plus the emissivity compensation pair."""

    r1: float = DEFAULT_R1
    r2: float = DEFAULT_R2
    b: float = DEFAULT_B
    o: float = DEFAULT_O
    f: float = DEFAULT_F
    emissivity: float = SKIN_EMISSIVITY
    reflected_temp_k: float = 293.15

    def __post_init__(self):
        if not (0.0 < self.emissivity <= 1.0):
            raise InputError(f"emissivity must be in (0, 1], got {self.emissivity}")
        if self.b <= 0:
            raise InputError(f"b must be positive, got {self.b}")
        if self.r2 <= 0:
            raise InputError(f"r2 must be positive, got {self.r2}")
        if self.f < 1.0:
            raise InputError(f"f must be >= 1, got {self.f}")
        if not (233.15 <= self.reflected_temp_k <= 373.15):
            raise InputError(
                "reflected temperature outside plausible indoor range "
                f"[233.15, 373.15] K: {self.reflected_temp_k}"
            )
        for name in ("r1", "r2", "b", "o", "f", "emissivity", "reflected_temp_k"):
            if not np.isfinite(getattr(self, name)):
                raise InputError(f"calibration field {name} is not finite")

    def to_dict(self) -> dict:
        return {
            "r1": self.r1,
            "r2": self.r2,
            "b": self.b,
            "o": self.o,
            "f": self.f,
            "emissivity": self.emissivity,
            "reflected_temp_k": self.reflected_temp_k,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RadiometricCalibration":
        return cls(**{k: float(d[k]) for k in (
            "r1", "r2", "b", "o", "f", "emissivity", "reflected_temp_k")})


@dataclass(frozen=True, eq=False)
class TemperatureMap:
    """Per-pixel degrees Celsius, row-major. NaN marks invalid pixels."""

    width: int
    height: int
    temps: np.ndarray
    source_timestamp: datetime = _EPOCH

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InputError(f"map dimensions must be positive, got {self.width}x{self.height}")
        temps = np.asarray(self.temps, dtype=np.float64).reshape(-1)
        if temps.size != self.width * self.height:
            raise InputError(
                f"temps length {temps.size} != width*height {self.width * self.height}")
        finite = temps[np.isfinite(temps)]
        if finite.size and (finite.min() < FLIR_E6.range_min_c - 1e-9
                            or finite.max() > FLIR_E6.range_max_c + 1e-9):
            raise InputError(
                "temperatures outside measurable range "
                f"[{FLIR_E6.range_min_c}, {FLIR_E6.range_max_c}] C")
        temps.setflags(write=False)
        object.__setattr__(self, "temps", temps)

    @property
    def grid(self) -> np.ndarray:
        return self.temps.reshape(self.height, self.width)

    @property
    def valid_mask(self) -> np.ndarray:
        return np.isfinite(self.temps)

    def offset(self, delta_c: float) -> "TemperatureMap":
        return replace(self, temps=self.temps + delta_c)


@dataclass(frozen=True, eq=False)
class RadiometricFrame:
    """Raw uint16 counts plus the calibration needed to decode them."""

    width: int
    height: int
    counts: np.ndarray
    calibration: RadiometricCalibration = field(default_factory=RadiometricCalibration)
    timestamp: datetime = _EPOCH
    sequence_index: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InputError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        counts = np.asarray(self.counts)
        if counts.dtype != np.uint16:
            as_f = np.asarray(counts, dtype=np.float64)
            if not np.isfinite(as_f).all():
                raise InputError("counts contain non-finite values")
            if as_f.min() < 0 or as_f.max() > np.iinfo(np.uint16).max:
                raise InputError("counts do not fit in unsigned 16-bit range")
            if not np.array_equal(as_f, np.rint(as_f)):
                raise InputError("counts must be integers")
            counts = as_f.astype(np.uint16)
        counts = counts.reshape(-1)
        if counts.size != self.width * self.height:
            raise InputError(
                f"counts length {counts.size} != width*height {self.width * self.height}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


def _scalarize(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def _bb_signal(temp_c, cal: RadiometricCalibration) -> np.ndarray:
    t_k = np.asarray(temp_c, dtype=np.float64) + KELVIN_OFFSET
    return cal.r1 / (cal.r2 * (np.exp(cal.b / t_k) - cal.f)) - cal.o


def blackbody_signal(temp_c, cal: RadiometricCalibration):
    """Counts-equivalent signal of an ideal emitter at temp_c."""
    return _scalarize(_bb_signal(temp_c, cal))


def object_signal(raw, cal: RadiometricCalibration):
    """Remove the reflected-background share of the measured signal.

    With emissivity 1 the input is returned unchanged; an object sitting at
    the reflected temperature is a fixed point for every emissivity.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.isfinite(raw).all():
        raise InputError("raw signal contains non-finite values")
    s_refl = _bb_signal(cal.reflected_temp_k - KELVIN_OFFSET, cal)
    return _scalarize((raw - (1.0 - cal.emissivity) * s_refl) / cal.emissivity)


def forward_signal(temp_c, cal: RadiometricCalibration):
    """Measured counts-equivalent for a surface at temp_c.

    Exact algebraic inverse of the decode path: decoding the returned signal
    recovers temp_c to floating-point precision.
    """
    temp_arr = np.asarray(temp_c, dtype=np.float64)
    if not np.isfinite(temp_arr).all():
        raise InputError("temperature contains non-finite values")
    if temp_arr.size and (temp_arr.min() < FLIR_E6.range_min_c - 1e-9
                          or temp_arr.max() > FLIR_E6.range_max_c + 1e-9):
        raise InputError(
            f"temperature outside measurable range [{FLIR_E6.range_min_c}, "
            f"{FLIR_E6.range_max_c}] C")
    s_obj = _bb_signal(temp_arr, cal)
    s_refl = _bb_signal(cal.reflected_temp_k - KELVIN_OFFSET, cal)
    return _scalarize(cal.emissivity * s_obj + (1.0 - cal.emissivity) * s_refl)


def signal_to_temperature(sig, cal: RadiometricCalibration):
    """Decode measured counts-equivalent to degrees Celsius; NaN where the
    model has no physical solution."""
    s_obj = np.asarray(object_signal(sig, cal), dtype=np.float64)
    inner = s_obj + cal.o
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(inner > 0, cal.r1 / (cal.r2 * inner) + cal.f, np.nan)
        log_arg = np.log(arg, out=np.full_like(arg, np.nan), where=arg > 1.0)
        temp = cal.b / log_arg - KELVIN_OFFSET
    temp = np.where(np.isfinite(temp), temp, np.nan)
    return _scalarize(temp)


def raw_to_temperature(frame: RadiometricFrame) -> tuple[TemperatureMap, int]:
    """Decode a frame. Returns the map and the count of invalid pixels.

    Pixels whose emissivity-corrected signal has no positive log argument,
    or whose decoded value falls outside the camera's measurable range, are
    flagged NaN. A frame with no valid pixel at all is an error.
    """
    temp = signal_to_temperature(frame.counts.astype(np.float64), frame.calibration)
    temp = np.asarray(temp, dtype=np.float64)
    out_of_range = np.isfinite(temp) & (
        (temp < FLIR_E6.range_min_c - 1e-9) | (temp > FLIR_E6.range_max_c + 1e-9))
    temp[out_of_range] = np.nan
    invalid = int(np.count_nonzero(~np.isfinite(temp)))
    if invalid == temp.size:
        raise InputError("frame decoded to no valid pixels")
    tmap = TemperatureMap(
        width=frame.width, height=frame.height, temps=temp,
        source_timestamp=frame.timestamp)
    return tmap, invalid


def synth_frame(
    field_map: TemperatureMap,
    cal: RadiometricCalibration | None = None,
    noise_netd_c: float = FLIR_E6.netd_c,
    rng: np.random.Generator | int | None = None,
    timestamp: datetime | None = None,
    sequence_index: int = 0,
) -> RadiometricFrame:
    """Encode a temperature field into a synthetic raw frame.

    Gaussian sensor noise with sigma noise_netd_c is added in temperature
    units before encoding; counts are quantized to integers, so a noiseless
    frame decodes back to the field within half a quantization step (exactly,
    for fields already snapped to the count grid).
    """
    cal = cal or RadiometricCalibration()
    if noise_netd_c < 0:
        raise InputError(f"noise level must be >= 0, got {noise_netd_c}")
    if not field_map.valid_mask.all():
        raise InputError("cannot synthesize a frame from a field with invalid pixels")
    temps = field_map.temps
    if noise_netd_c > 0:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        temps = temps + gen.normal(0.0, noise_netd_c, size=temps.shape)
        temps = np.clip(temps, FLIR_E6.range_min_c, FLIR_E6.range_max_c)
    sig = forward_signal(temps, cal)
    counts = np.rint(sig)
    if counts.min() < 0 or counts.max() > np.iinfo(np.uint16).max:
        raise InputError("calibration maps this field outside the 16-bit count range")
    return RadiometricFrame(
        width=field_map.width,
        height=field_map.height,
        counts=counts.astype(np.uint16),
        calibration=cal,
        timestamp=timestamp if timestamp is not None else field_map.source_timestamp,
        sequence_index=sequence_index,
    )


def snap_field(field_map: TemperatureMap, cal: RadiometricCalibration | None = None) -> TemperatureMap:
    """Snap a field onto the nearest temperatures representable by integer
    counts under cal. Snapped fields round-trip through synth_frame and
    raw_to_temperature bit-exactly."""
    cal = cal or RadiometricCalibration()
    frame = synth_frame(field_map, cal, noise_netd_c=0.0)
    snapped, invalid = raw_to_temperature(frame)
    if invalid:
        raise InputError("field does not survive count quantization")
    return replace(snapped, source_timestamp=field_map.source_timestamp)
