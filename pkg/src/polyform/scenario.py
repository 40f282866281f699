"""Scenario documents: JSON in, validated Scenario out.

The schema is strict: unknown keys are rejected everywhere, and every
diagnostic names the offending key path.  See the README for the full
schema and the bundled hexagon scenario for a worked example.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .control import MODES, ControlLaw, MotionParams
from .errors import ScenarioError
from .geometry import ShapeSpec
from .simulator import DEFAULT_DT, Event, Scenario, SeededBox
from .stability import regular_polygon_angle

__all__ = ["load_scenario", "parse_scenario", "bundled_scenario_path"]

_LAW_KEYS = {"mode", "c", "k_d", "theta", "ratios", "d",
             "motion_params", "mismatches", "distances", "pin_last"}

# Which optional law keys each mode accepts beyond "mode".
_MODE_KEYS = {
    "gradient3": {"distances"},
    "mismatched3": {"distances", "mismatches"},
    "line": {"c", "ratios"},
    "polygon": {"c", "theta", "ratios"},
    "closed_polygon": {"c", "k_d", "theta", "ratios", "d", "pin_last"},
    "steered": {"c", "k_d", "theta", "ratios", "d", "motion_params", "pin_last"},
}
_MODE_REQUIRED = {
    "gradient3": {"distances"},
    "mismatched3": {"distances", "mismatches"},
    "line": set(),
    "polygon": {"theta"},
    "closed_polygon": {"theta", "d"},
    "steered": {"theta", "d", "motion_params"},
}


def bundled_scenario_path(name: str = "hexagon.json") -> Path:
    """Path of a scenario fixture shipped with the package."""
    return Path(__file__).parent / "scenarios" / name


def load_scenario(path) -> Scenario:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"not valid JSON: {exc}") from exc
    return parse_scenario(doc)


def _reject_unknown(obj: dict, allowed, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}", "unknown key")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ScenarioError(f"{path}.{key}", "required key missing")
    return obj[key]


def _number(value, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {type(value).__name__}")
    out = float(value)
    if not np.isfinite(out):
        raise ScenarioError(path, "must be finite")
    if positive and not out > 0.0:
        raise ScenarioError(path, "must be positive")
    return out


def _integer(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be at least {minimum}")
    return value


def _number_list(value, path: str, length: int | None = None) -> list[float]:
    if not isinstance(value, list):
        raise ScenarioError(path, f"expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ScenarioError(path, f"expected {length} entries, got {len(value)}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _parse_initial(value, n: int, path: str):
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    if "positions" in value:
        _reject_unknown(value, {"positions"}, path)
        rows = value["positions"]
        if not isinstance(rows, list) or len(rows) != n:
            raise ScenarioError(f"{path}.positions", f"expected {n} [x, y] pairs")
        flat = []
        for i, row in enumerate(rows):
            flat.extend(_number_list(row, f"{path}.positions[{i}]", length=2))
        return np.asarray(flat)
    if "seed" in value or "box" in value:
        _reject_unknown(value, {"seed", "box"}, path)
        seed = _integer(_require(value, "seed", path), f"{path}.seed", minimum=0)
        box = _number_list(_require(value, "box", path), f"{path}.box", length=4)
        if not (box[1] > box[0] and box[3] > box[2]):
            raise ScenarioError(f"{path}.box", "box must be (xmin, xmax, ymin, ymax) with positive extent")
        return SeededBox(seed=seed, box=tuple(box))
    raise ScenarioError(path, "expected either 'positions' or 'seed' + 'box'")


def _parse_theta(value, n: int, path: str) -> np.ndarray:
    if value == "regular":
        return np.full(n - 2, regular_polygon_angle(n))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(n - 2, _number(value, path))
    return np.asarray(_number_list(value, path, length=n - 2))


def _parse_law(value, n: int, path: str) -> ControlLaw:
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    _reject_unknown(value, _LAW_KEYS, path)
    mode = _require(value, "mode", path)
    if mode not in MODES:
        raise ScenarioError(f"{path}.mode", f"must be one of {', '.join(MODES)}")
    allowed = _MODE_KEYS[mode] | {"mode"}
    for key in value:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}", f"not applicable to mode {mode!r}")
    for key in _MODE_REQUIRED[mode]:
        if key not in value:
            raise ScenarioError(f"{path}.{key}", f"required for mode {mode!r}")
    if mode in ("gradient3", "mismatched3") and n != 3:
        raise ScenarioError(f"{path}.mode", f"{mode!r} requires n = 3")

    theta = _parse_theta(value["theta"], n, f"{path}.theta") if "theta" in value else None
    ratios = None
    if "ratios" in value:
        rv = value["ratios"]
        if isinstance(rv, (int, float)) and not isinstance(rv, bool):
            ratios = np.full(n - 1, _number(rv, f"{path}.ratios", positive=True))
        else:
            ratios = np.asarray(_number_list(rv, f"{path}.ratios", length=n - 1))
            if np.any(ratios <= 0.0):
                raise ScenarioError(f"{path}.ratios", "must be positive")
    d = _number(value["d"], f"{path}.d", positive=True) if "d" in value else None

    motion = None
    if "motion_params" in value:
        mv = value["motion_params"]
        if isinstance(mv, (int, float)) and not isinstance(mv, bool):
            motion = MotionParams.uniform(n, _number(mv, f"{path}.motion_params"))
        else:
            if not isinstance(mv, list) or len(mv) != n:
                raise ScenarioError(f"{path}.motion_params",
                                    f"expected a number or {n} [a, b] pairs")
            pairs = [_number_list(row, f"{path}.motion_params[{i}]", length=2)
                     for i, row in enumerate(mv)]
            motion = MotionParams(np.asarray(pairs))

    distances = None
    if "distances" in value:
        d1, d2 = _number_list(value["distances"], f"{path}.distances", length=2)
        if not (d1 > 0.0 and d2 > 0.0):
            raise ScenarioError(f"{path}.distances", "must be positive")
        distances = (d1, d2)
    mismatches = None
    if "mismatches" in value:
        mismatches = tuple(_number_list(value["mismatches"], f"{path}.mismatches", length=2))
    pin_last = value.get("pin_last", False)
    if not isinstance(pin_last, bool):
        raise ScenarioError(f"{path}.pin_last", "expected a boolean")

    try:
        return ControlLaw(
            mode=mode,
            c=_number(value.get("c", 1.0), f"{path}.c", positive=True),
            k_d=_number(value.get("k_d", 1.0), f"{path}.k_d", positive=True),
            spec=ShapeSpec(theta=theta, ratios=ratios, closing_distance=d),
            distances=distances,
            mismatches=mismatches,
            motion=motion,
            pin_last=pin_last,
        )
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from exc


def _parse_events(value, law: ControlLaw, path: str) -> tuple[Event, ...]:
    if not isinstance(value, list):
        raise ScenarioError(path, "expected a list")
    events = []
    for i, entry in enumerate(value):
        here = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(here, "expected an object")
        _reject_unknown(entry, {"t", "set"}, here)
        t = _number(_require(entry, "t", here), f"{here}.t")
        patch = _require(entry, "set", here)
        if not isinstance(patch, dict) or not patch:
            raise ScenarioError(f"{here}.set", "expected a non-empty object")
        for key in patch:
            if key not in ("d", "c", "k_d", "motion_params", "mismatches"):
                raise ScenarioError(f"{here}.set.{key}", "not a patchable parameter")
        if "d" in patch and law.spec.closing_distance is None:
            raise ScenarioError(f"{here}.set.d", "law does not control a closing distance")
        events.append(Event(time=t, patch=dict(patch)))
    return tuple(events)


def parse_scenario(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "top level must be an object")
    _reject_unknown(doc, {"n", "initial", "law", "integrator", "events", "output"}, "$")
    n = _integer(_require(doc, "n", "$"), "$.n", minimum=3)
    initial = _parse_initial(_require(doc, "initial", "$"), n, "$.initial")
    law = _parse_law(_require(doc, "law", "$"), n, "$.law")

    integ = _require(doc, "integrator", "$")
    if not isinstance(integ, dict):
        raise ScenarioError("$.integrator", "expected an object")
    _reject_unknown(integ, {"dt", "t_end", "method"}, "$.integrator")
    dt = _number(integ.get("dt", DEFAULT_DT), "$.integrator.dt", positive=True)
    t_end = _number(_require(integ, "t_end", "$.integrator"), "$.integrator.t_end", positive=True)
    method = integ.get("method", "rk4")
    if method not in ("euler", "rk4"):
        raise ScenarioError("$.integrator.method", "must be 'euler' or 'rk4'")

    events = _parse_events(doc.get("events", []), law, "$.events")

    stride = 1
    if "output" in doc:
        out = doc["output"]
        if not isinstance(out, dict):
            raise ScenarioError("$.output", "expected an object")
        _reject_unknown(out, {"stride"}, "$.output")
        stride = _integer(out.get("stride", 1), "$.output.stride", minimum=1)

    try:
        return Scenario(n=n, initial=initial, law=law, t_end=t_end, dt=dt,
                        method=method, events=events, record_every=stride)
    except ValueError as exc:
        raise ScenarioError("$", str(exc)) from exc
