# Save as: snapslam/io_utils/scenario_file.py
# JSON scenario files. dBm / dB values exist only here; Scenario holds linear units.
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from snapslam.errors import DegenerateGeometry, ScenarioParseError, ScenarioValidationError
from snapslam.scene import (
    AccessPoint,
    ReflectingSurface,
    RfParams,
    Scenario,
    ScatterPoint,
    Vec3,
    ap_lattice,
    validate_scenario,
)

BUNDLED_SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "paper_v_a.json"

Triple = Tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ApLatticeModel(_Strict):
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    spacing: float = Field(gt=0)
    plane_z: float


class SurfaceModel(_Strict):
    anchor: Triple
    normal: Triple
    attenuation: float


class ScattererModel(_Strict):
    position: Triple
    rcs_m2: float


class RfModel(_Strict):
    carrier_hz: float
    tx_power_dbm: float
    symbol_bandwidth_hz: float
    noise_psd_dbm_hz: float
    noise_figure_db: float


class ScenarioFileModel(_Strict):
    aps: Union[List[Triple], ApLatticeModel]
    ue: Triple
    surfaces: List[SurfaceModel] = Field(default_factory=list)
    scatterers: List[ScattererModel] = Field(default_factory=list)
    rf: RfModel


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def _key_path(loc) -> str:
    path = ""
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path


def scenario_from_model(model: ScenarioFileModel) -> Scenario:
    if isinstance(model.aps, ApLatticeModel):
        aps = ap_lattice(model.aps.nx, model.aps.ny, model.aps.spacing, model.aps.plane_z)
    else:
        aps = [AccessPoint(id=k, position=Vec3.of(p)) for k, p in enumerate(model.aps)]

    surfaces = []
    for k, surface in enumerate(model.surfaces):
        try:
            surfaces.append(ReflectingSurface(Vec3.of(surface.anchor), Vec3.of(surface.normal), surface.attenuation))
        except DegenerateGeometry as e:
            raise ScenarioValidationError(f"surfaces[{k}].normal: {e}", [(f"surfaces[{k}].normal", "zero-normal")])

    rf = RfParams(
        carrier_hz=model.rf.carrier_hz,
        tx_power_w=dbm_to_watts(model.rf.tx_power_dbm),
        symbol_bandwidth_hz=model.rf.symbol_bandwidth_hz,
        noise_psd_w_per_hz=dbm_to_watts(model.rf.noise_psd_dbm_hz),
        noise_figure_db=model.rf.noise_figure_db,
    )
    return Scenario(
        aps=aps,
        ue=Vec3.of(model.ue),
        surfaces=surfaces,
        scatterers=[ScatterPoint(Vec3.of(sp.position), sp.rcs_m2) for sp in model.scatterers],
        rf=rf,
    )


def scenario_from_dict(doc: Any) -> Scenario:
    try:
        model = ScenarioFileModel.model_validate(doc)
    except ValidationError as e:
        problems = [(_key_path(err["loc"]), err["msg"]) for err in e.errors()]
        summary = "; ".join(f"{path}: {msg}" for path, msg in problems)
        raise ScenarioValidationError(summary, problems)

    try:
        scenario = scenario_from_model(model)
    except ValueError as e:
        raise ScenarioValidationError(str(e), [("", str(e))])

    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(
            "; ".join(str(v) for v in violations),
            [(v.entity, v.rule) for v in violations],
        )
    return scenario


def parse_scenario(path: Union[str, Path]) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise ScenarioParseError(f"scenario file not found: {path}")
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioParseError(f"could not read {path}: {e}")
    return scenario_from_dict(doc)


def serialize_scenario(s: Scenario) -> Dict[str, Any]:
    """File-format dict with explicit AP positions; parses back to an equal Scenario."""
    return {
        "aps": [ap.position.as_list() for ap in sorted(s.aps, key=lambda ap: ap.id)],
        "ue": s.ue.as_list(),
        "surfaces": [
            {"anchor": x.anchor.as_list(), "normal": x.normal.as_list(), "attenuation": x.attenuation}
            for x in s.surfaces
        ],
        "scatterers": [{"position": x.position.as_list(), "rcs_m2": x.rcs} for x in s.scatterers],
        "rf": {
            "carrier_hz": s.rf.carrier_hz,
            "tx_power_dbm": watts_to_dbm(s.rf.tx_power_w),
            "symbol_bandwidth_hz": s.rf.symbol_bandwidth_hz,
            "noise_psd_dbm_hz": watts_to_dbm(s.rf.noise_psd_w_per_hz),
            "noise_figure_db": s.rf.noise_figure_db,
        },
    }


def write_scenario(s: Scenario, path: Union[str, Path]):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(serialize_scenario(s), f, indent=2)
        f.write("\n")
