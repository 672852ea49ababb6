"""JSON scenario files: bodies, functions, determinant mode, flags and budgets."""
import json
from dataclasses import dataclass, field

from .bodies import AllSpace, Ball, Ellipsoid, HPolytope, affine_image, box, cube, regular_polygon
from .errors import InputError, ScenarioError
from .functions import LogConcaveFunc, exp_gauge, gaussian, indicator, linear_max, restricted_gaussian
from .position import DetMode, Position, as_mode

TOP_KEYS = {"name", "dim", "f", "g", "mode", "flags", "budget", "seed", "position", "tol", "radii",
            "optimizer"}
FLAG_KEYS = {"even_symmetry", "support_regularity"}
OPTIMIZER_KEYS = {"max_iters", "restarts", "step_init", "armijo_c", "grad_tol", "budget_per_eval",
                  "grad_budget"}
BODY_KEYS = {
    "ball": {"radius", "dim"},
    "cube": {"half_width", "dim"},
    "box": {"half_widths"},
    "hpolytope": {"rows", "offsets"},
    "ellipsoid": {"matrix"},
    "polygon": {"sides", "inradius", "phase"},
    "all_space": {"dim"},
    "affine": {"base", "T", "z"},
}
FUNCTION_KEYS = {
    "indicator": {"body"},
    "gaussian": {"sigma_inv", "mean", "offset", "normalized", "support"},
    "exp_gauge": {"body", "power", "support"},
    "restricted_gaussian": {"body", "sigma_inv", "mean", "normalized"},
    "linear_max": {"slopes", "intercepts", "support"},
}
DEFAULTS = {"mode": "unit", "budget": 200_000, "seed": 0, "tol": 5e-3,
            "flags": {"even_symmetry": False, "support_regularity": True}}


def _keys(rec, allowed, where):
    if not isinstance(rec, dict):
        raise ScenarioError("expected an object", field=where)
    if "type" not in rec:
        raise ScenarioError("missing 'type'", field=where)
    kind = rec["type"]
    if kind not in allowed:
        raise ScenarioError(f"unknown type '{kind}' (expected one of {sorted(allowed)})", field=f"{where}.type")
    extra = set(rec) - allowed[kind] - {"type"}
    if extra:
        raise ScenarioError(f"unknown key(s) {sorted(extra)}", field=f"{where}.{sorted(extra)[0]}")
    return kind


def _need(rec, key, where):
    if key not in rec:
        raise ScenarioError("missing required key", field=f"{where}.{key}")
    return rec[key]


def build_body(rec, dim, where="body"):
    kind = _keys(rec, BODY_KEYS, where)
    try:
        if kind == "ball":
            body = Ball(float(rec.get("radius", 1.0)), int(rec.get("dim", dim)))
        elif kind == "cube":
            body = cube(float(rec.get("half_width", 1.0)), int(rec.get("dim", dim)))
        elif kind == "box":
            body = box(_need(rec, "half_widths", where))
        elif kind == "hpolytope":
            body = HPolytope(_need(rec, "rows", where), _need(rec, "offsets", where))
        elif kind == "ellipsoid":
            body = Ellipsoid(_need(rec, "matrix", where))
        elif kind == "polygon":
            body = regular_polygon(int(_need(rec, "sides", where)), float(rec.get("inradius", 1.0)),
                                   float(rec.get("phase", 0.0)))
        elif kind == "all_space":
            body = AllSpace(int(rec.get("dim", dim)))
        else:
            base = build_body(_need(rec, "base", where), dim, f"{where}.base")
            body = affine_image(base, _need(rec, "T", where), rec.get("z"))
    except ScenarioError:
        raise
    except (InputError, ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), field=where) from None
    if body.dim != dim:
        raise ScenarioError(f"body has dimension {body.dim} but the scenario has {dim}", field="dim")
    return body


def build_function(rec, dim, where):
    kind = _keys(rec, FUNCTION_KEYS, where)
    support = None
    if "support" in rec:
        support = build_body(rec["support"], dim, f"{where}.support")
    try:
        if kind == "indicator":
            fn = indicator(build_body(_need(rec, "body", where), dim, f"{where}.body"))
        elif kind == "gaussian":
            fn = gaussian(_need(rec, "sigma_inv", where), rec.get("mean"), float(rec.get("offset", 0.0)),
                          support, bool(rec.get("normalized", False)))
        elif kind == "exp_gauge":
            fn = exp_gauge(build_body(_need(rec, "body", where), dim, f"{where}.body"),
                           float(rec.get("power", 1.0)), support)
        elif kind == "restricted_gaussian":
            fn = restricted_gaussian(build_body(_need(rec, "body", where), dim, f"{where}.body"),
                                     rec.get("sigma_inv"), rec.get("mean"), bool(rec.get("normalized", False)))
        else:
            fn = linear_max(_need(rec, "slopes", where), _need(rec, "intercepts", where), support)
    except ScenarioError:
        raise
    except (InputError, ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), field=where) from None
    if fn.dim != dim:
        raise ScenarioError(f"function has dimension {fn.dim} but the scenario has {dim}", field="dim")
    return fn


def _mode(spec):
    try:
        if isinstance(spec, dict):
            extra = set(spec) - {"kind", "r"}
            if extra:
                raise ScenarioError(f"unknown key(s) {sorted(extra)}", field="mode")
            return DetMode(spec.get("kind", "unit"), float(spec.get("r", 1.0)))
        return as_mode(spec)
    except InputError as exc:
        raise ScenarioError(str(exc), field="mode") from None


@dataclass
class Scenario:
    name: str
    dim: int
    f: LogConcaveFunc
    g: LogConcaveFunc
    mode: DetMode
    flags: dict
    budget: int
    seed: int
    tol: float
    position: Position = None
    radii: list = None
    optimizer: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def g_at_position(self):
        return self.g if self.position is None else self.g.pullback(self.position)

    def echo(self):
        return self.raw


def scenario_from_dict(data):
    if not isinstance(data, dict):
        raise ScenarioError("top level must be an object")
    extra = set(data) - TOP_KEYS
    if extra:
        raise ScenarioError("unknown key", field=sorted(extra)[0])
    for key in ("name", "dim", "f", "g"):
        if key not in data:
            raise ScenarioError("missing required key", field=key)
    dim = data["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ScenarioError("must be a positive integer", field="dim")
    raw = {k: v for k, v in DEFAULTS.items()}
    raw["flags"] = dict(DEFAULTS["flags"])
    raw.update({k: v for k, v in data.items() if k != "flags"})
    flags_in = data.get("flags", {})
    if not isinstance(flags_in, dict):
        raise ScenarioError("must be an object", field="flags")
    bad = set(flags_in) - FLAG_KEYS
    if bad:
        raise ScenarioError("unknown flag", field=f"flags.{sorted(bad)[0]}")
    raw["flags"].update(flags_in)
    opt = data.get("optimizer", {})
    if not isinstance(opt, dict) or set(opt) - OPTIMIZER_KEYS:
        raise ScenarioError(f"unknown optimizer setting(s) {sorted(set(opt) - OPTIMIZER_KEYS)}",
                            field="optimizer")

    f = build_function(data["f"], dim, "f")
    g = build_function(data["g"], dim, "g")
    mode = _mode(raw["mode"])
    pos = None
    if "position" in data:
        p = data["position"]
        if not isinstance(p, dict) or set(p) - {"T", "z"}:
            raise ScenarioError("position needs keys T and optional z", field="position")
        try:
            pos = Position.normalized(_need(p, "T", "position"), p.get("z"), "free")
        except InputError as exc:
            raise ScenarioError(str(exc), field="position") from None
        if pos.dim != dim:
            raise ScenarioError("position has the wrong dimension", field="dim")
    budget, seed, tol = raw["budget"], raw["seed"], raw["tol"]
    if not isinstance(budget, int) or budget < 1000:
        raise ScenarioError("must be an integer >= 1000", field="budget")
    if not isinstance(seed, int):
        raise ScenarioError("must be an integer", field="seed")
    if not (isinstance(tol, (int, float)) and tol > 0):
        raise ScenarioError("must be positive", field="tol")
    radii = data.get("radii")
    if radii is not None and (not isinstance(radii, list) or not all(isinstance(r, (int, float)) for r in radii)):
        raise ScenarioError("must be a list of numbers", field="radii")
    flags = raw["flags"]
    for k in FLAG_KEYS:
        if not isinstance(flags[k], bool):
            raise ScenarioError("must be true or false", field=f"flags.{k}")
    if flags["even_symmetry"]:
        g_here = g if pos is None else g.pullback(pos)
        if not (f.even and g_here.even):
            which = "f" if not f.even else "g"
            raise ScenarioError(f"declared even symmetry but {which} is not even", field="flags.even_symmetry")
    return Scenario(str(data["name"]), dim, f, g, mode, flags, budget, seed, float(tol), pos, radii,
                    dict(opt), raw)


def parse_scenario(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from None
    return scenario_from_dict(data)
