"""Instrument datasheets used for validation bands and tolerances."""

from dataclasses import dataclass


@dataclass(frozen=True)
class CameraSpec:
    """Thermal camera characteristics relevant to analysis.

    netd_c is the thermal sensitivity floor; accuracy is the larger of the
    absolute and relative terms at a given reading.
    """

    model: str
    netd_c: float
    accuracy_abs_c: float
    accuracy_rel: float
    min_focus_m: float
    range_min_c: float
    range_max_c: float

    def accuracy_at(self, reading_c: float) -> float:
        return max(self.accuracy_abs_c, abs(reading_c) * self.accuracy_rel)


@dataclass(frozen=True)
class ProbeSpec:
    """Environmental probe accuracy (room temperature and relative humidity)."""

    model: str
    accuracy_temp_c: float
    accuracy_humidity_pct: float


FLIR_E6 = CameraSpec(
    model="FLIR E6",
    netd_c=0.06,
    accuracy_abs_c=2.0,
    accuracy_rel=0.02,
    min_focus_m=0.5,
    range_min_c=-20.0,
    range_max_c=250.0,
)

TESTO_605_H1 = ProbeSpec(
    model="Testo 605-H1",
    accuracy_temp_c=0.5,
    accuracy_humidity_pct=3.0,
)
