"""ParameterTree wrappers around the discipline analyses.

Each competence reads its declared input paths from the tree it is given and
returns a new tree holding only its declared outputs. ``build_registry``
binds a constants record and returns the name -> function map the executor
dispatches on.
"""

import logging
from dataclasses import replace
from functools import partial
from typing import Callable, Dict, Mapping

from core.datamodel import ParameterTree, ParameterValue
from core.disciplines import (
    DisciplineConstants,
    GeometryState,
    MissionConstants,
    SpsState,
    analyze_aerostructure,
    analyze_sps,
    calibrate_baseline,
    compute_fuel_saved,
    size_aircraft,
)
from utils.constants import (
    CALIBRATION_BRANCH,
    DESIGN_TO_VEHICLE,
    GEOMETRY_VARIABLES,
    OPTIMIZER_BRANCH,
    P_CRUISE_ALTITUDE,
    P_CRUISE_MACH,
    P_EMPTY_MASS,
    P_FIXED_EMPTY_FRACTION,
    P_FUEL_MASS,
    P_FUEL_SAVED,
    P_MAX_VON_MISES,
    P_MTOW,
    P_PANEL_AREA,
    P_PANEL_EFFICIENCY,
    P_PAYLOAD,
    P_POWER_CRUISE,
    P_POWER_GROUND,
    P_RANGE,
    P_SPS_INSTALLED,
    P_SPS_MASS,
    P_TARGET_MTOW,
    P_TIP_DISPLACEMENT,
    P_WALL_THICKNESS,
    P_WING_MASS,
    PARAMETER_DICTIONARY,
)

logger = logging.getLogger(__name__)

Competence = Callable[[ParameterTree], ParameterTree]

# GeometryState field -> design variable name
_GEOMETRY_FIELDS = {
    "wing_area": "wingArea",
    "semi_wing_span": "semiWingSpan",
    "fuselage_length": "fuselageLength",
    "fuselage_diameter": "fuselageDiameter",
    "semi_tail_span": "semiTailSpan",
}

MISSION_PATHS = (P_RANGE, P_PAYLOAD, P_CRUISE_MACH, P_CRUISE_ALTITUDE)
VEHICLE_GEOMETRY_PATHS = tuple(DESIGN_TO_VEHICLE[name] for name in GEOMETRY_VARIABLES)


def mission_from_tree(tree: ParameterTree, constants: DisciplineConstants) -> MissionConstants:
    return MissionConstants(
        range=tree.real(P_RANGE),
        payload=tree.real(P_PAYLOAD),
        cruise_mach=tree.real(P_CRUISE_MACH),
        cruise_altitude=tree.real(P_CRUISE_ALTITUDE),
        mlw_fraction=constants.mlw_fraction,
        ground_time_per_flight=constants.ground_time,
    )


def _geometry(tree: ParameterTree, path_of: Callable[[str], str]) -> GeometryState:
    return GeometryState(**{f: tree.real(path_of(name)) for f, name in _GEOMETRY_FIELDS.items()})


def vehicle_geometry(tree: ParameterTree) -> GeometryState:
    return _geometry(tree, DESIGN_TO_VEHICLE.__getitem__)


def design_geometry(tree: ParameterTree) -> GeometryState:
    """Geometry as set by the optimizer on its design-variable branch."""
    return _geometry(tree, lambda name: f"{OPTIMIZER_BRANCH}/{name}")


def baseline_geometry(tree: ParameterTree) -> GeometryState:
    return _geometry(tree, lambda name: f"{CALIBRATION_BRANCH}/baseline/{name}")


def _outputs(source: ParameterTree, values: Mapping[str, object]) -> ParameterTree:
    entries = {}
    for path, value in values.items():
        resolved = source.resolve(path)
        if isinstance(value, bool):
            entries[resolved] = ParameterValue.boolean(value)
        else:
            entries[resolved] = ParameterValue.real(value, PARAMETER_DICTIONARY.get(str(resolved)))
    return ParameterTree(source.root, entries, source.version)


def _installed(tree: ParameterTree) -> bool:
    value = tree.get(P_SPS_INSTALLED)
    if value.kind == "boolean":
        return value.payload
    return value.as_float() != 0.0


def run_sizing(tree: ParameterTree, constants: DisciplineConstants) -> ParameterTree:
    geometry = design_geometry(tree)
    weights = size_aircraft(
        geometry,
        empty_mass=tree.real(P_EMPTY_MASS),
        fuel_saved=tree.real(P_FUEL_SAVED),
        mission=mission_from_tree(tree, constants),
        constants=constants,
    )
    values = {DESIGN_TO_VEHICLE[name]: getattr(geometry, f) for f, name in _GEOMETRY_FIELDS.items()}
    values[P_PANEL_EFFICIENCY] = tree.real(f"{OPTIMIZER_BRANCH}/panelEfficiency")
    values[P_MTOW] = weights.mtow
    values[P_FUEL_MASS] = weights.fuel_mass
    return _outputs(tree, values)


def run_sps(tree: ParameterTree, constants: DisciplineConstants) -> ParameterTree:
    sps = analyze_sps(vehicle_geometry(tree), tree.real(P_PANEL_EFFICIENCY), constants, _installed(tree))
    return _outputs(tree, {
        P_PANEL_AREA: sps.panel_area,
        P_POWER_CRUISE: sps.available_power_cruise,
        P_POWER_GROUND: sps.available_power_ground,
        P_SPS_MASS: sps.sps_mass,
    })


def run_propulsion(tree: ParameterTree, constants: DisciplineConstants) -> ParameterTree:
    # only the two available powers enter the saving
    sps = SpsState(
        panel_efficiency=0.0,
        panel_area=0.0,
        available_power_cruise=tree.real(P_POWER_CRUISE),
        available_power_ground=tree.real(P_POWER_GROUND),
        sps_mass=0.0,
    )
    saved = compute_fuel_saved(sps, mission_from_tree(tree, constants), constants)
    return _outputs(tree, {P_FUEL_SAVED: saved})


def run_aerostructure(tree: ParameterTree, constants: DisciplineConstants) -> ParameterTree:
    calibrated = replace(constants, fixed_empty_fraction=tree.real(P_FIXED_EMPTY_FRACTION))
    structure, empty_mass = analyze_aerostructure(
        vehicle_geometry(tree), tree.real(P_MTOW), tree.real(P_SPS_MASS), calibrated
    )
    return _outputs(tree, {
        P_EMPTY_MASS: empty_mass,
        P_MAX_VON_MISES: structure.max_von_mises,
        P_TIP_DISPLACEMENT: structure.tip_displacement,
        P_WING_MASS: structure.wing_struct_mass,
        P_WALL_THICKNESS: structure.wall_thickness,
    })


def run_calibration(tree: ParameterTree, constants: DisciplineConstants) -> ParameterTree:
    """Publish the fixed empty-mass fraction closing the baseline at the tree's target MTOW.

    A constants record already calibrated for the same target is reused.
    """
    target = tree.real(P_TARGET_MTOW)
    if constants.calibrated and constants.target_mtow == target:
        fraction = constants.fixed_empty_fraction
    else:
        fraction = calibrate_baseline(
            mission_from_tree(tree, constants), baseline_geometry(tree), target, constants
        ).fixed_empty_fraction
    return _outputs(tree, {P_FIXED_EMPTY_FRACTION: fraction})


COMPETENCE_FUNCTIONS = {
    "sizing": run_sizing,
    "sps": run_sps,
    "propulsion": run_propulsion,
    "aerostructure": run_aerostructure,
    "calibration": run_calibration,
}


def build_registry(constants: DisciplineConstants) -> Dict[str, Competence]:
    """Name -> competence function map with ``constants`` bound."""
    return {name: partial(function, constants=constants) for name, function in COMPETENCE_FUNCTIONS.items()}
