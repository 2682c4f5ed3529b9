"""Run configuration: one JSON document, validated before any compute.

Every validation failure raises ConfigError carrying the dotted path of
the offending field, so the command line can print actionable messages
and exit with the dedicated status code.  Parsed configs are plain
frozen dataclasses; nothing here ever writes back to the file.
"""

import hashlib
import json
from dataclasses import dataclass, field as dc_field

from .errors import ConfigError, DomainError
from .meshing import Circle, PerturbedCircle

SPEC_VERSION = 1


def config_blob_sha1(raw: bytes) -> str:
    """Content hash of the config bytes, in git blob form."""
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(raw))
    h.update(raw)
    return h.hexdigest()


def _expect(mapping, key, path):
    if key not in mapping:
        raise ConfigError(f"{path}{key}", "missing required field")
    return mapping[key]


def _number(mapping, key, path, default=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"{path}{key}", "missing required field")
        return float(default)
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", f"expected a number, got {v!r}")
    return float(v)


def _integer(mapping, key, path, default=None):
    if key not in mapping:
        if default is None:
            raise ConfigError(f"{path}{key}", "missing required field")
        return int(default)
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}{key}", f"expected an integer, got {v!r}")
    return v


@dataclass(frozen=True)
class BodySpec:
    kind: str
    a: float
    b: float = 0.0
    k: int = 1

    def build(self):
        try:
            if self.kind == "circle":
                return Circle(self.a)
            return PerturbedCircle(self.a, self.b, self.k)
        except DomainError as exc:
            raise ConfigError("body", str(exc)) from exc


@dataclass(frozen=True)
class MeshSpec:
    h: float
    R_out: float


@dataclass(frozen=True)
class Tolerances:
    newton_tol: float = 1e-9
    critical_tol: float = 0.01


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; sections beyond the core are optional."""

    gamma: float
    kappa1: float
    kappa2: float
    body: BodySpec
    mesh: MeshSpec
    eps_schedule: tuple | None = None
    far_field: str = "gauge"
    tolerances: Tolerances = dc_field(default_factory=Tolerances)
    axis: str = "kappa2"
    grid: dict | None = None
    search: dict | None = None
    ladder: dict | None = None
    radial: dict | None = None
    output_dir: str | None = None
    sha1: str = ""

    def section(self, name):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(name, "section required by this subcommand")
        return value


def _parse_body(doc):
    body = _expect(doc, "body", "")
    if not isinstance(body, dict):
        raise ConfigError("body", "expected an object")
    kind = _expect(body, "kind", "body.")
    if kind not in ("circle", "perturbed_circle"):
        raise ConfigError("body.kind", f"unknown body kind {kind!r}")
    a = _number(body, "a", "body.")
    if kind == "circle":
        spec = BodySpec(kind=kind, a=a)
    else:
        spec = BodySpec(
            kind=kind,
            a=a,
            b=_number(body, "b", "body."),
            k=_integer(body, "k", "body."),
        )
    spec.build()  # geometric validation happens now, not at solve time
    return spec


def _parse_mesh(doc, body_spec):
    mesh = _expect(doc, "mesh", "")
    if not isinstance(mesh, dict):
        raise ConfigError("mesh", "expected an object")
    h = _number(mesh, "h", "mesh.")
    if h <= 0:
        raise ConfigError("mesh.h", "mesh spacing must be positive")
    r_out = _number(mesh, "R_out", "mesh.")
    scale = body_spec.build().max_radius()
    if r_out < 4.0 * scale:
        raise ConfigError(
            "mesh.R_out", f"truncation radius must be >= 4x body scale ({4 * scale:g})"
        )
    return MeshSpec(h=h, R_out=r_out)


def _parse_schedule(doc):
    if "eps_schedule" not in doc:
        return None
    sched = doc["eps_schedule"]
    if not isinstance(sched, list) or not sched:
        raise ConfigError("eps_schedule", "expected a non-empty list")
    vals = []
    for i, v in enumerate(sched):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"eps_schedule[{i}]", f"expected a number, got {v!r}")
        vals.append(float(v))
    if any(not (0 < v < 0.5) for v in vals):
        raise ConfigError("eps_schedule", "every width must lie in (0, 1/2)")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("eps_schedule", "widths must decrease strictly")
    return tuple(vals)


def parse_config(raw: bytes) -> RunConfig:
    """Validate raw JSON bytes into a RunConfig.  Pure; never touches disk."""
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")

    version = _integer(doc, "spec_version", "")
    if version != SPEC_VERSION:
        raise ConfigError(
            "spec_version", f"unsupported version {version} (expected {SPEC_VERSION})"
        )

    gamma = _number(doc, "gamma", "")
    if gamma <= 1.0:
        raise ConfigError("gamma", "adiabatic exponent must exceed 1")
    kappa1 = _number(doc, "kappa1", "")
    if not (0.0 < kappa1 < 1.0):
        raise ConfigError("kappa1", "source strength must lie in (0, 1)")
    kappa2 = _number(doc, "kappa2", "")
    if not (abs(kappa2) < 1.0):
        raise ConfigError("kappa2", "swirl strength must lie in (-1, 1)")

    body_spec = _parse_body(doc)
    mesh_spec = _parse_mesh(doc, body_spec)

    far_field = doc.get("far_field", "gauge")
    if far_field not in ("gauge", "zero"):
        raise ConfigError("far_field", f"unknown far-field policy {far_field!r}")

    axis = doc.get("axis", "kappa2")
    if axis not in ("kappa1", "kappa2"):
        raise ConfigError("axis", f"unknown sweep axis {axis!r}")

    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise ConfigError("tolerances", "expected an object")
    newton_tol = _number(tol_doc, "newton_tol", "tolerances.", default=1e-9)
    if newton_tol <= 0:
        raise ConfigError("tolerances.newton_tol", "must be positive")
    critical_tol = _number(tol_doc, "critical_tol", "tolerances.", default=0.01)
    if critical_tol < 1e-3:
        raise ConfigError("tolerances.critical_tol", "below the 1e-3 floor")

    for section in ("grid", "search", "ladder", "radial"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError(section, "expected an object")

    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a string path")

    return RunConfig(
        gamma=gamma,
        kappa1=kappa1,
        kappa2=kappa2,
        body=body_spec,
        mesh=mesh_spec,
        eps_schedule=_parse_schedule(doc),
        far_field=far_field,
        tolerances=Tolerances(newton_tol=newton_tol, critical_tol=critical_tol),
        axis=axis,
        grid=doc.get("grid"),
        search=doc.get("search"),
        ladder=doc.get("ladder"),
        radial=doc.get("radial"),
        output_dir=output_dir,
        sha1=config_blob_sha1(raw),
    )


def sweep_values(cfg: RunConfig):
    """Grid of swept parameter values from the config's grid section."""
    grid = cfg.section("grid")
    if "values" in grid:
        vals = grid["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("grid.values", "expected a non-empty list")
        out = []
        for i, v in enumerate(vals):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"grid.values[{i}]", f"expected a number, got {v!r}")
            out.append(float(v))
        return out
    start = _number(grid, "start", "grid.")
    stop = _number(grid, "stop", "grid.")
    num = _integer(grid, "num", "grid.")
    if num < 2:
        raise ConfigError("grid.num", "need at least 2 grid points")
    if not (stop > start):
        raise ConfigError("grid.stop", "need stop > start")
    step = (stop - start) / (num - 1)
    return [start + i * step for i in range(num)]
