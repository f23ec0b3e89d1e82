"""Display geometry: visual angles to on-screen pixel radii."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError

CM_PER_INCH = 2.54


class RadiiForm(str, Enum):
    """How the parafoveal radius is derived from the parafoveal angle.

    ``ADDITIVE`` stacks the parafoveal half-angle extent on top of the foveal
    radius (reproduces ~185 px for the default display); ``DIRECT`` uses the
    plain half-angle extent (~144 px).
    """

    ADDITIVE = "additive"
    DIRECT = "direct"


def _positive_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class DisplayGeometry:
    """Physical screen and viewer setup.

    Defaults describe a 24" 1920x1080 monitor viewed from 65 cm, with a 2 deg
    foveal and 7 deg parafoveal field.
    """

    diagonal_inches: float = 24.0
    resolution_px: tuple[int, int] = (1920, 1080)
    viewing_distance_cm: float = 65.0
    foveal_diameter_deg: float = 2.0
    parafoveal_diameter_deg: float = 7.0

    def __post_init__(self) -> None:
        _positive_finite("diagonal_inches", self.diagonal_inches)
        _positive_finite("viewing_distance_cm", self.viewing_distance_cm)
        _positive_finite("foveal_diameter_deg", self.foveal_diameter_deg)
        _positive_finite("parafoveal_diameter_deg", self.parafoveal_diameter_deg)
        if len(self.resolution_px) != 2:
            raise ValidationError(f"resolution_px must be (width, height), got {self.resolution_px!r}")
        for side in self.resolution_px:
            if not isinstance(side, int) or isinstance(side, bool) or side <= 0:
                raise ValidationError(f"resolution_px entries must be positive integers, got {self.resolution_px!r}")
        if self.parafoveal_diameter_deg <= self.foveal_diameter_deg:
            raise ValidationError("parafoveal_diameter_deg must exceed foveal_diameter_deg")
        for name in ("foveal_diameter_deg", "parafoveal_diameter_deg"):
            if getattr(self, name) >= 180.0:
                raise ValidationError(f"{name} must be below 180 degrees")


@dataclass(frozen=True)
class RegionRadii:
    r_foveal_px: float
    r_parafoveal_px: float

    def __post_init__(self) -> None:
        _positive_finite("r_foveal_px", self.r_foveal_px)
        _positive_finite("r_parafoveal_px", self.r_parafoveal_px)
        if self.r_parafoveal_px <= self.r_foveal_px:
            raise ValidationError("r_parafoveal_px must exceed r_foveal_px")

    @property
    def candidate_radius_px(self) -> float:
        """Search radius for candidate words: one foveal region of error each way."""
        return 2.0 * self.r_foveal_px


def pixels_per_cm(geom: DisplayGeometry) -> float:
    """Pixel density along the screen diagonal."""
    width, height = geom.resolution_px
    return math.hypot(width, height) / (geom.diagonal_inches * CM_PER_INCH)


def _extent_px(geom: DisplayGeometry, diameter_deg: float) -> float:
    return geom.viewing_distance_cm * math.tan(math.radians(diameter_deg) / 2.0) * pixels_per_cm(geom)


def compute_radii(geom: DisplayGeometry, form: RadiiForm | str = RadiiForm.ADDITIVE) -> RegionRadii:
    """Foveal and parafoveal radii in (unrounded) pixels for ``geom``."""
    form = RadiiForm(form)
    r_foveal = _extent_px(geom, geom.foveal_diameter_deg)
    r_para = _extent_px(geom, geom.parafoveal_diameter_deg)
    if form is RadiiForm.ADDITIVE:
        r_para += r_foveal
    return RegionRadii(r_foveal_px=r_foveal, r_parafoveal_px=r_para)
