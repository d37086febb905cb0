"""False-color rendering with a fixed per-session scale.

Renders are presentation artifacts only; analysis never reads them. One
scale per session, embedded in each file, so consecutive images stay
comparable. Output is binary portable pixmap (P6): parseable anywhere
without a codec.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InputError
from .radiometry import TemperatureMap

# Low-to-high temperature ramp, purple through yellow. Perceived warmth
# (r + g - b) strictly increases along the ramp, which makes "warmer color"
# a well-defined, testable ordering.
PALETTE_STOPS = (
    (48, 0, 80),
    (140, 30, 130),
    (220, 80, 90),
    (250, 160, 40),
    (250, 250, 60),
)

INVALID_RGB = (0, 0, 0)


@dataclass(frozen=True)
class RenderSpec:
    scale_min_c: float
    scale_max_c: float
    fixed_for_session: bool = True

    def __post_init__(self):
        if not self.scale_min_c < self.scale_max_c:
            raise InputError(
                f"render scale must have min < max, got [{self.scale_min_c}, "
                f"{self.scale_max_c}]")
        if not self.fixed_for_session:
            raise InputError("render scale must stay fixed for the whole session")

    def to_dict(self) -> dict:
        return {"scale_min_c": self.scale_min_c, "scale_max_c": self.scale_max_c,
                "fixed_for_session": self.fixed_for_session}

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSpec":
        return cls(scale_min_c=float(d["scale_min_c"]),
                   scale_max_c=float(d["scale_max_c"]),
                   fixed_for_session=bool(d.get("fixed_for_session", True)))


def default_scale(maps: Iterable[TemperatureMap], margin_c: float = 0.5) -> RenderSpec:
    """Session-wide bounds widened by a margin on each side."""
    lo, hi = np.inf, -np.inf
    for m in maps:
        valid = m.temps[m.valid_mask]
        if valid.size:
            lo = min(lo, float(valid.min()))
            hi = max(hi, float(valid.max()))
    if not np.isfinite(lo):
        raise InputError("no valid pixels to derive a render scale from")
    return RenderSpec(scale_min_c=lo - margin_c, scale_max_c=hi + margin_c)


def ramp_color(position) -> np.ndarray:
    """Palette color at ramp position(s) in [0, 1], shape (..., 3) uint8."""
    pos = np.clip(np.asarray(position, dtype=np.float64), 0.0, 1.0)
    stops = np.asarray(PALETTE_STOPS, dtype=np.float64)
    anchors = np.linspace(0.0, 1.0, len(PALETTE_STOPS))
    channels = [np.interp(pos, anchors, stops[:, c]) for c in range(3)]
    return np.rint(np.stack(channels, axis=-1)).astype(np.uint8)


def render_ppm(tmap: TemperatureMap, spec: RenderSpec) -> bytes:
    """Binary pixmap with the scale recorded in a header comment."""
    span = spec.scale_max_c - spec.scale_min_c
    pos = (tmap.grid - spec.scale_min_c) / span
    invalid = ~np.isfinite(tmap.grid)
    rgb = ramp_color(np.where(invalid, 0.0, pos))
    if invalid.any():
        rgb[invalid] = INVALID_RGB
    header = (
        f"P6\n"
        f"# scale_min_c={spec.scale_min_c!r} scale_max_c={spec.scale_max_c!r}\n"
        f"{tmap.width} {tmap.height}\n255\n"
    )
    return header.encode("ascii") + rgb.tobytes()


def parse_ppm(data: bytes) -> tuple[int, int, RenderSpec, np.ndarray]:
    """Inverse of render_ppm for verification and UI tooling."""
    try:
        head, rest = data.split(b"255\n", 1)
        lines = head.decode("ascii").splitlines()
        if lines[0] != "P6":
            raise ValueError("not a P6 pixmap")
        scale_line = next(l for l in lines if l.startswith("# scale_min_c="))
        parts = dict(p.split("=") for p in scale_line[2:].split(" "))
        spec = RenderSpec(scale_min_c=float(parts["scale_min_c"]),
                          scale_max_c=float(parts["scale_max_c"]))
        dims = next(l for l in lines[1:] if not l.startswith("#"))
        width, height = (int(v) for v in dims.split())
    except (ValueError, StopIteration, KeyError) as exc:
        raise InputError(f"malformed render file: {exc}") from exc
    pixels = np.frombuffer(rest, dtype=np.uint8)
    if pixels.size != width * height * 3:
        raise InputError("render pixel payload does not match its dimensions")
    return width, height, spec, pixels.reshape(height, width, 3)


def warmth(rgb: np.ndarray) -> np.ndarray:
    """Scalar that strictly increases along the palette ramp."""
    rgb = rgb.astype(np.int32)
    return rgb[..., 0] + rgb[..., 1] - rgb[..., 2]
