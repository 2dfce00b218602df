"""Constants for the mdao-forge toolchain."""

from pathlib import Path

# Repository locations
REPO_ROOT = Path(__file__).resolve().parents[2]
DATA_DIR = REPO_ROOT / "data"
DEFAULT_CONSTANTS_FILE = DATA_DIR / "constants.xml"
DEFAULT_BASELINE_FILE = DATA_DIR / "baseline.xml"
DEFAULT_COMPETENCE_DIR = DATA_DIR / "competences"
DEFAULT_CHOICES_FILE = DATA_DIR / "choices.xml"
WORKFLOW_SCHEMA_FILE = DATA_DIR / "workflow.xsd"

# Environment variables
CONSTANTS_ENV_VAR = "MDAO_FORGE_CONSTANTS"
LOG_LEVEL_ENV_VAR = "MDAO_FORGE_LOG_LEVEL"

# Exchange file
TREE_ROOT = "cpacs"

# Parameter dictionary: path -> unit ("-" for dimensionless)
P_WING_AREA = "cpacs/vehicle/geometry/wing/area"
P_WING_SEMI_SPAN = "cpacs/vehicle/geometry/wing/semiSpan"
P_FUSELAGE_LENGTH = "cpacs/vehicle/geometry/fuselage/length"
P_FUSELAGE_DIAMETER = "cpacs/vehicle/geometry/fuselage/diameter"
P_TAIL_SEMI_SPAN = "cpacs/vehicle/geometry/tail/semiSpan"
P_PANEL_EFFICIENCY = "cpacs/vehicle/sps/panelEfficiency"
P_PANEL_AREA = "cpacs/vehicle/sps/panelArea"
P_POWER_CRUISE = "cpacs/vehicle/sps/availablePowerCruise"
P_POWER_GROUND = "cpacs/vehicle/sps/availablePowerGround"
P_SPS_MASS = "cpacs/vehicle/sps/mass"
P_SPS_INSTALLED = "cpacs/vehicle/sps/installed"
P_FUEL_SAVED = "cpacs/vehicle/propulsion/fuelSaved"
P_EMPTY_MASS = "cpacs/vehicle/structure/emptyMass"
P_MAX_VON_MISES = "cpacs/vehicle/structure/maxVonMises"
P_TIP_DISPLACEMENT = "cpacs/vehicle/structure/tipDisplacement"
P_WING_MASS = "cpacs/vehicle/structure/wingMass"
P_WALL_THICKNESS = "cpacs/vehicle/structure/wallThickness"
P_MTOW = "cpacs/vehicle/weights/mtow"
P_FUEL_MASS = "cpacs/vehicle/weights/fuelMass"
P_RANGE = "cpacs/mission/range"
P_PAYLOAD = "cpacs/mission/payload"
P_CRUISE_MACH = "cpacs/mission/cruiseMach"
P_CRUISE_ALTITUDE = "cpacs/mission/cruiseAltitude"

OPTIMIZER_BRANCH = "cpacs/toolspecific/optimizer"
CALIBRATION_BRANCH = "cpacs/toolspecific/calibration"
P_TARGET_MTOW = f"{CALIBRATION_BRANCH}/targetMtow"
P_FIXED_EMPTY_FRACTION = f"{CALIBRATION_BRANCH}/fixedEmptyFraction"

# Design variables: name, lower, upper, unit
DESIGN_VARIABLES = [
    ("panelEfficiency", 0.25, 0.55, "-"),
    ("wingArea", 100.0, 250.0, "m2"),
    ("fuselageLength", 32.0, 40.0, "m"),
    ("fuselageDiameter", 3.0, 4.5, "m"),
    ("semiWingSpan", 14.0, 22.0, "m"),
    ("semiTailSpan", 5.0, 8.0, "m"),
]
GEOMETRY_VARIABLES = [name for name, *_ in DESIGN_VARIABLES if name != "panelEfficiency"]

# Design variable -> vehicle path that sizing publishes it to
DESIGN_TO_VEHICLE = {
    "panelEfficiency": P_PANEL_EFFICIENCY,
    "wingArea": P_WING_AREA,
    "fuselageLength": P_FUSELAGE_LENGTH,
    "fuselageDiameter": P_FUSELAGE_DIAMETER,
    "semiWingSpan": P_WING_SEMI_SPAN,
    "semiTailSpan": P_TAIL_SEMI_SPAN,
}

PARAMETER_DICTIONARY = {
    P_WING_AREA: "m2",
    P_WING_SEMI_SPAN: "m",
    P_FUSELAGE_LENGTH: "m",
    P_FUSELAGE_DIAMETER: "m",
    P_TAIL_SEMI_SPAN: "m",
    P_PANEL_EFFICIENCY: "-",
    P_PANEL_AREA: "m2",
    P_POWER_CRUISE: "W",
    P_POWER_GROUND: "W",
    P_SPS_MASS: "kg",
    P_SPS_INSTALLED: "-",
    P_FUEL_SAVED: "kg",
    P_EMPTY_MASS: "kg",
    P_MAX_VON_MISES: "Pa",
    P_TIP_DISPLACEMENT: "m",
    P_WING_MASS: "kg",
    P_WALL_THICKNESS: "m",
    P_MTOW: "kg",
    P_FUEL_MASS: "kg",
    P_RANGE: "m",
    P_PAYLOAD: "kg",
    P_CRUISE_MACH: "-",
    P_CRUISE_ALTITUDE: "m",
    P_TARGET_MTOW: "kg",
    P_FIXED_EMPTY_FRACTION: "-",
}
DESIGN_UNITS = {name: unit for name, _, _, unit in DESIGN_VARIABLES}
for _name, _unit in DESIGN_UNITS.items():
    PARAMETER_DICTIONARY[f"{OPTIMIZER_BRANCH}/{_name}"] = _unit
for _name in GEOMETRY_VARIABLES:
    PARAMETER_DICTIONARY[f"{CALIBRATION_BRANCH}/baseline/{_name}"] = DESIGN_UNITS[_name]

# Constraints
BASELINE_MTOW = 67585.0  # kg
FUSELAGE_RATIO_BOUNDS = (8.0, 10.5)
ASPECT_RATIO_BOUNDS = (6.0, 15.0)
FEASIBILITY_SLACK = 1e-6  # relative

# MDA defaults
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITERATIONS = 50
DEFAULT_RELAXATION = 1.0
DEFAULT_LOOP_HEAD = "sizing"
SUPPORTED_PATTERNS = {"converged-mda-gs"}
WRAPPER_KINDS = {"none", "doe", "optimizer"}

# Surrogate defaults
DEFAULT_N_INIT = 20
DEFAULT_BUDGET = 40
DEFAULT_SEED = 42
LHS_RESTARTS = 10
KRIGING_STARTS = 8
THETA_BOUNDS = (1e-3, 1e3)
NUGGET_START = 1e-10
NUGGET_CAP = 1e-4
INFILL_STARTS = 64
INFILL_MIN_STEP = 1e-4  # fraction of range
DEFAULT_SOBOL_N = 4096
SOBOL_MIN_N = 1024

# Output file names
SNAPSHOT_DIR = "snapshots"
RUN_LOG_FILE = "log.json"
DOE_COLUMNS_TAIL = ["fuelSaved", "g1", "g2", "mtow", "status"]

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_NOT_CONVERGED = 3
