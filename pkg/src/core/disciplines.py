"""Analytic discipline models of the solar-power-system aircraft study.

Every analysis is a pure function of its inputs and of one immutable
``DisciplineConstants`` record. The models are conceptual-design level:
Breguet-form fuel fraction for sizing, an areal rule for the solar power
system, energy-based fuel saving for propulsion and a cantilever box beam
for the wing structure.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple, Union

from lxml import etree
from scipy.optimize import bisect, brentq

from core.errors import CalibrationError, DomainError, InfeasibleEvaluation
from utils.constants import BASELINE_MTOW

logger = logging.getLogger(__name__)

GRAVITY = 9.80665  # m/s^2
GAMMA_AIR = 1.4
GAS_CONSTANT_AIR = 287.05287  # J/(kg K)
SEA_LEVEL_TEMPERATURE = 288.15  # K
LAPSE_RATE = 0.0065  # K/m
TROPOPAUSE_ALTITUDE = 11000.0  # m
STRATOSPHERE_CEILING = 20000.0  # m
JOULES_PER_KWH = 3.6e6

CALIBRATION_BRACKET = (0.3, 0.7)
CALIBRATION_RTOL = 1e-8
THICKNESS_XTOL = 1e-9  # m


def _constant(xml: str, default, unit: str = "-"):
    return field(default=default, metadata={"xml": xml, "unit": unit})


@dataclass(frozen=True)
class DisciplineConstants:
    """Every model constant in one record; written to and read from constants.xml."""
    irradiance: float = _constant("G", 1000.0, "W/m2")
    duty_cruise: float = _constant("dutyCruise", 0.5)
    duty_ground: float = _constant("dutyGround", 0.5)
    areal_density: float = _constant("arealDensity", 2.0, "kg/m2")
    f_wing: float = _constant("fWing", 0.5)
    f_fus: float = _constant("fFus", 0.25)
    offtake_power: float = _constant("offtakePower", 60e3, "W")
    apu_power: float = _constant("apuPower", 100e3, "W")
    k_fuel_shaft: float = _constant("kFuelPerShaftEnergy", 0.09, "kg/kWh")
    k_fuel_apu: float = _constant("kFuelPerApuEnergy", 0.2, "kg/kWh")
    ground_time: float = _constant("groundTime", 3600.0, "s")
    load_factor: float = _constant("n", 2.5)
    sigma_allow: float = _constant("sigmaAllow", 233e6, "Pa")
    disp_fraction: float = _constant("dispFraction", 0.1)
    youngs_modulus: float = _constant("E", 70e9, "Pa")
    material_density: float = _constant("materialDensity", 2700.0, "kg/m3")
    k_ld: float = _constant("kLD", 5.2)
    tsfc: float = _constant("tsfc", 1.6e-5, "kg/(N s)")
    box_height_ratio: float = _constant("boxHeightRatio", 0.2)
    box_width_ratio: float = _constant("boxWidthRatio", 0.5)
    min_wall_thickness: float = _constant("minWallThickness", 1e-4, "m")
    mlw_fraction: float = _constant("mlwFraction", 0.9)
    target_mtow: float = _constant("targetMtow", BASELINE_MTOW, "kg")
    fixed_empty_fraction: Optional[float] = _constant("fixedEmptyFraction", None)

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"constant {f.metadata['xml']} must be finite and non-negative, got {value}")
        if not 0 < self.mlw_fraction <= 1:
            raise DomainError(f"mlwFraction must lie in (0, 1], got {self.mlw_fraction}")

    @property
    def calibrated(self) -> bool:
        return self.fixed_empty_fraction is not None


def constants_to_xml(constants: DisciplineConstants) -> str:
    root = etree.Element("constants")
    for f in fields(constants):
        value = getattr(constants, f.name)
        if value is None:
            continue
        element = etree.SubElement(root, f.metadata["xml"], unit=f.metadata["unit"])
        element.text = repr(float(value))
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8").decode("utf-8")


def constants_from_xml(xml_text: Union[str, bytes]) -> DisciplineConstants:
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    try:
        root = etree.fromstring(xml_text, etree.XMLParser(remove_comments=True))
    except etree.XMLSyntaxError as exc:
        raise DomainError(f"malformed constants file: {exc.msg}") from None
    by_xml = {f.metadata["xml"]: f.name for f in fields(DisciplineConstants)}
    values = {}
    for element in root:
        if element.tag not in by_xml:
            raise DomainError(f"unknown constant {element.tag!r}")
        try:
            values[by_xml[element.tag]] = float((element.text or "").strip())
        except ValueError:
            raise DomainError(f"constant {element.tag} is not a number: {element.text!r}") from None
    return DisciplineConstants(**values)


def load_constants(path: Union[str, Path]) -> DisciplineConstants:
    return constants_from_xml(Path(path).read_bytes())


def save_constants(constants: DisciplineConstants, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(constants_to_xml(constants), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Domain states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MissionConstants:
    range: float  # m
    payload: float  # kg
    cruise_mach: float
    cruise_altitude: float  # m
    mlw_fraction: float = 0.9
    ground_time_per_flight: float = 3600.0  # s

    def __post_init__(self):
        for name in ("range", "payload", "cruise_mach", "cruise_altitude", "ground_time_per_flight"):
            if not getattr(self, name) > 0:
                raise DomainError(f"mission {name} must be positive, got {getattr(self, name)}")
        if not 0 < self.mlw_fraction <= 1:
            raise DomainError(f"mlw fraction must lie in (0, 1], got {self.mlw_fraction}")


@dataclass(frozen=True)
class GeometryState:
    wing_area: float  # m2
    semi_wing_span: float  # m
    fuselage_length: float  # m
    fuselage_diameter: float  # m
    semi_tail_span: float  # m

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"geometry {f.name} must be positive, got {getattr(self, f.name)}")

    @property
    def aspect_ratio(self) -> float:
        """Full span squared over area; the span is twice the semi span."""
        return (2.0 * self.semi_wing_span) ** 2 / self.wing_area

    @property
    def fuselage_ratio(self) -> float:
        return self.fuselage_length / self.fuselage_diameter

    @property
    def mean_chord(self) -> float:
        return self.wing_area / (2.0 * self.semi_wing_span)


@dataclass(frozen=True)
class SpsState:
    panel_efficiency: float
    panel_area: float  # m2
    available_power_cruise: float  # W
    available_power_ground: float  # W
    sps_mass: float  # kg


@dataclass(frozen=True)
class WeightState:
    mtow: float
    empty_mass: float
    fuel_mass: float
    fuel_saved: float


@dataclass(frozen=True)
class StructuralResult:
    max_von_mises: float  # Pa
    tip_displacement: float  # m
    wing_struct_mass: float  # kg, both wings
    wall_thickness: float  # m


# ---------------------------------------------------------------------------
# Atmosphere
# ---------------------------------------------------------------------------

def isa_temperature(altitude: float) -> float:
    """ISA static temperature, troposphere lapse then isothermal stratosphere."""
    if altitude < 0 or altitude > STRATOSPHERE_CEILING:
        raise DomainError(f"altitude {altitude} m outside the modelled atmosphere [0, {STRATOSPHERE_CEILING}]")
    if altitude <= TROPOPAUSE_ALTITUDE:
        return SEA_LEVEL_TEMPERATURE - LAPSE_RATE * altitude
    return SEA_LEVEL_TEMPERATURE - LAPSE_RATE * TROPOPAUSE_ALTITUDE


def speed_of_sound(altitude: float) -> float:
    return math.sqrt(GAMMA_AIR * GAS_CONSTANT_AIR * isa_temperature(altitude))


def cruise_speed(mission: MissionConstants) -> float:
    return mission.cruise_mach * speed_of_sound(mission.cruise_altitude)


def cruise_time(mission: MissionConstants) -> float:
    return mission.range / cruise_speed(mission)


# ---------------------------------------------------------------------------
# Disciplines
# ---------------------------------------------------------------------------

def lift_to_drag(geometry: GeometryState, constants: DisciplineConstants) -> float:
    return constants.k_ld * math.sqrt(geometry.aspect_ratio)


def fuel_fraction(geometry: GeometryState, mission: MissionConstants, constants: DisciplineConstants) -> float:
    """Breguet-form mission fuel fraction 1 - exp(-R g c / (V L/D))."""
    exponent = mission.range * GRAVITY * constants.tsfc / (cruise_speed(mission) * lift_to_drag(geometry, constants))
    return -math.expm1(-exponent)


def size_aircraft(geometry: GeometryState, empty_mass: float, fuel_saved: float,
                  mission: MissionConstants, constants: DisciplineConstants) -> WeightState:
    """Close the weight identity mtow = empty + payload + fuel.

    Gross fuel is the Breguet fraction of MTOW; the solar saving is taken off
    it, which makes the closure linear in MTOW and solvable directly.
    """
    ff = fuel_fraction(geometry, mission, constants)
    if not ff < 1.0:
        raise InfeasibleEvaluation("sizing", f"fuel fraction {ff:.4f} leaves no closure")
    mtow = (empty_mass + mission.payload - fuel_saved) / (1.0 - ff)
    fuel_mass = ff * mtow - fuel_saved
    if mtow <= 0 or fuel_mass < 0:
        raise InfeasibleEvaluation("sizing", f"non-physical closure: mtow {mtow:.1f} kg, fuel {fuel_mass:.1f} kg")
    return WeightState(mtow=mtow, empty_mass=empty_mass, fuel_mass=fuel_mass, fuel_saved=fuel_saved)


def analyze_sps(geometry: GeometryState, panel_efficiency: float, constants: DisciplineConstants,
                installed: bool = True) -> SpsState:
    if not 0.0 < panel_efficiency < 1.0:
        raise DomainError(f"panel efficiency must lie in (0, 1), got {panel_efficiency}")
    if not installed:
        return SpsState(panel_efficiency, 0.0, 0.0, 0.0, 0.0)
    panel_area = (constants.f_wing * geometry.wing_area
                  + constants.f_fus * geometry.fuselage_length * geometry.fuselage_diameter)
    peak = constants.irradiance * panel_area * panel_efficiency
    return SpsState(
        panel_efficiency=panel_efficiency,
        panel_area=panel_area,
        available_power_cruise=peak * constants.duty_cruise,
        available_power_ground=peak * constants.duty_ground,
        sps_mass=constants.areal_density * panel_area,
    )


def compute_fuel_saved(sps: SpsState, mission: MissionConstants, constants: DisciplineConstants) -> float:
    """Fuel no longer burned for engine offtake in cruise and APU use on ground."""
    cruise_energy = min(sps.available_power_cruise, constants.offtake_power) * cruise_time(mission)
    ground_energy = min(sps.available_power_ground, constants.apu_power) * mission.ground_time_per_flight
    return (cruise_energy * constants.k_fuel_shaft + ground_energy * constants.k_fuel_apu) / JOULES_PER_KWH


def _box_inertia(width: float, height: float, thickness: float) -> float:
    inner_w = max(width - 2.0 * thickness, 0.0)
    inner_h = max(height - 2.0 * thickness, 0.0)
    return (width * height ** 3 - inner_w * inner_h ** 3) / 12.0


def _box_area(width: float, height: float, thickness: float) -> float:
    inner_w = max(width - 2.0 * thickness, 0.0)
    inner_h = max(height - 2.0 * thickness, 0.0)
    return width * height - inner_w * inner_h


def wing_box_response(geometry: GeometryState, mtow: float, thickness: float,
                      constants: DisciplineConstants) -> Tuple[float, float]:
    """Root von Mises stress and tip deflection of one wing at the given wall thickness."""
    span = geometry.semi_wing_span
    chord = geometry.mean_chord
    height = constants.box_height_ratio * chord
    width = constants.box_width_ratio * chord
    load = constants.load_factor * GRAVITY * mtow / 2.0
    inertia = _box_inertia(width, height, thickness)
    # uniform spanwise load on a cantilever
    bending = load * span / 2.0 * (height / 2.0) / inertia
    shear = load / (2.0 * height * thickness)
    von_mises = math.sqrt(bending ** 2 + 3.0 * shear ** 2)
    deflection = load * span ** 3 / (8.0 * constants.youngs_modulus * inertia)
    return von_mises, deflection


def analyze_aerostructure(geometry: GeometryState, mtow: float, sps_mass: float,
                          constants: DisciplineConstants) -> Tuple[StructuralResult, float]:
    """Size the wing box wall to the lightest feasible thickness and build the empty mass.

    Returns:
        The structural result at the chosen thickness and the empty mass
        ``wing structure + fixedEmptyFraction * mtow + sps mass``.
    """
    if constants.fixed_empty_fraction is None:
        raise DomainError("constants are not calibrated: fixedEmptyFraction is missing")
    if mtow <= 0 or sps_mass < 0:
        raise DomainError(f"masses must be positive (mtow {mtow}, sps mass {sps_mass})")

    chord = geometry.mean_chord
    height = constants.box_height_ratio * chord
    width = constants.box_width_ratio * chord
    allowed_deflection = constants.disp_fraction * geometry.semi_wing_span

    def margin(thickness: float) -> float:
        stress, deflection = wing_box_response(geometry, mtow, thickness, constants)
        return max(stress / constants.sigma_allow, deflection / allowed_deflection) - 1.0

    t_min = constants.min_wall_thickness
    t_max = 0.5 * min(width, height)
    if margin(t_min) <= 0:
        thickness = t_min
    elif margin(t_max) > 0:
        raise InfeasibleEvaluation("aerostructure", f"no wall thickness up to {t_max:.4f} m meets stress and deflection limits")
    else:
        thickness = min(bisect(margin, t_min, t_max, xtol=THICKNESS_XTOL) + THICKNESS_XTOL, t_max)

    stress, deflection = wing_box_response(geometry, mtow, thickness, constants)
    wing_mass = 2.0 * constants.material_density * _box_area(width, height, thickness) * geometry.semi_wing_span
    empty_mass = wing_mass + constants.fixed_empty_fraction * mtow + sps_mass
    return StructuralResult(stress, deflection, wing_mass, thickness), empty_mass


def calibrate_baseline(mission: MissionConstants, baseline_geometry: GeometryState,
                       target_mtow: float = BASELINE_MTOW,
                       constants: Optional[DisciplineConstants] = None) -> DisciplineConstants:
    """Solve for the fixed empty-mass fraction that makes the zero-SPS baseline close at ``target_mtow``.

    At the root, the empty mass the structure model produces at
    ``target_mtow`` equals the empty mass the sizing closure needs there, so
    ``target_mtow`` is the fixed point of the zero-SPS MDA.
    """
    constants = constants or DisciplineConstants()
    if not target_mtow > mission.payload:
        raise DomainError(f"target MTOW {target_mtow} kg must exceed payload {mission.payload} kg")

    ff = fuel_fraction(baseline_geometry, mission, constants)
    required_empty = target_mtow * (1.0 - ff) - mission.payload

    def residual(fraction: float) -> float:
        trial = replace(constants, fixed_empty_fraction=fraction)
        _, empty_mass = analyze_aerostructure(baseline_geometry, target_mtow, 0.0, trial)
        return (empty_mass - required_empty) / target_mtow

    low, high = CALIBRATION_BRACKET
    r_low, r_high = residual(low), residual(high)
    if r_low * r_high > 0:
        raise CalibrationError(CALIBRATION_BRACKET, (r_low, r_high))
    fraction = brentq(residual, low, high, xtol=1e-14, rtol=CALIBRATION_RTOL)
    logger.info("calibrated fixedEmptyFraction %.8f for target MTOW %.1f kg", fraction, target_mtow)
    return replace(constants, fixed_empty_fraction=fraction, target_mtow=target_mtow)
