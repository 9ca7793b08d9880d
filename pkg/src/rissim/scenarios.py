"""Declarative scenarios: TOML loading, validation and deterministic runners.

Three scenario kinds are supported.

``power_map``
    Received power at fixed receiver sets (an arc or a box grid) for one or
    more panel configurations, evaluated with actual and/or desired
    coefficients.
``alpha_sweep``
    Received power at one receiver as the transmit power is moved between
    the two polarisations, ``w = (sqrt(alpha), sqrt(1 - alpha))``.
``deviation``
    Phase deviation of the actual Type 1 coefficients versus incidence
    angle.

Every table of received power carries each curve twice: panel only
(``<curve>_db``) and with the direct Tx-Rx paths added
(``<curve>_with_direct_db``).  Results are written as CSV with a JSON run
manifest (resolved parameters, package version and output digests) and,
on request, a gnuplot script.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from rissim import __version__
from rissim.channel import RISPanel, cascade_matrix, direct_matrix, illuminate, power_db
from rissim.codebook import (
    configure_type1_reflect,
    configure_type1_star,
    configure_type2_split,
    configure_type3_rotation,
)
from rissim.constants import wavelength
from rissim.coords import Direction, Frame, direction_angles, direction_vector, rotation_matrices
from rissim.errors import ConfigError, NumericSingularity
from rissim.gstc import Type1, phase_deviation
from rissim.raytrace import FreeSpace, TCorridor

KINDS = ("power_map", "alpha_sweep", "deviation")
RULES = {
    "type1_reflect": ("target",),
    "type1_star": ("reflect_target", "transmit_target"),
    "type2_split": ("reflect_target", "transmit_target"),
    "type3_none": ("target",),
    "type3_partial": ("target",),
    "type3_complete": ("target",),
}
MODES = ("actual", "ideal")
RX_POLS = ("theta", "phi", "dual")
CHUNK = 8  # receivers per work item; fixed so results never depend on --threads


# ---------------------------------------------------------------------------
# source locations for diagnostics
# ---------------------------------------------------------------------------

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-]+)\s*\]\]?")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


class _Locator:
    """Maps ``(table, index, key)`` paths to 1-based line numbers of a TOML file."""

    def __init__(self, text):
        self.lines = text.splitlines()

    def line(self, *path):
        path = [p for p in path if p is not None]
        if not path:
            return None
        table, rest = [], list(path)
        want_idx = None
        # leading string parts name the table, an int picks an array-of-tables entry
        while rest and isinstance(rest[0], str) and len(rest) > 1:
            table.append(rest.pop(0))
        if rest and isinstance(rest[0], int):
            want_idx = rest.pop(0)
        key = rest[0] if rest and isinstance(rest[0], str) else None
        if not table and key is not None and want_idx is None:
            return self._find_key(key, "", None) or self._find_header(key, None)
        name = ".".join(table)
        return self._find_key(key, name, want_idx) if key else self._find_header(name, want_idx)

    def _find_header(self, name, idx):
        count = -1
        for i, ln in enumerate(self.lines):
            m = _HEADER.match(ln)
            if m and m.group(2) == name:
                count += 1
                if idx is None or count == idx:
                    return i + 1
        return None

    def _find_key(self, key, table, idx):
        current, count = "", {}
        header_line = None
        for i, ln in enumerate(self.lines):
            m = _HEADER.match(ln)
            if m:
                current = m.group(2)
                if m.group(1) == "[[":
                    count[current] = count.get(current, -1) + 1
                continue
            if current != table:
                continue
            if idx is not None and count.get(current, -1) != idx:
                continue
            if header_line is None:
                header_line = i
            k = _KEY.match(ln)
            if k and k.group(1) == key:
                return i + 1
        if table:
            return self._find_header(table, idx)
        return None


class _Ctx:
    def __init__(self, path, text):
        self.path = path
        self.loc = _Locator(text)

    def error(self, message, *where):
        return ConfigError(message, self.path, self.loc.line(*where))


# ---------------------------------------------------------------------------
# dataclass configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SceneConfig:
    type: str = "free_space"
    eps_r: float = 5.0
    width_h: float = 3.0
    half_length_h: float = 20.0
    width_v: float = 3.0
    length_v: float = 20.0
    height: float | None = 3.0

    def build(self):
        if self.type == "free_space":
            return FreeSpace(self.eps_r)
        return TCorridor(self.width_h, self.half_length_h, self.width_v, self.length_v, self.eps_r, self.height)


@dataclass(frozen=True)
class PanelConfig:
    rows: int = 30
    cols: int = 30
    spacing_wl: float = 0.5
    element_wl: tuple = (0.5, 0.5)
    origin: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)
    up: tuple = (0.0, 1.0, 0.0)

    def build(self, frequency):
        lam = wavelength(frequency)
        frame = Frame.from_normal_up(self.origin, self.normal, self.up)
        dims = (self.element_wl[0] * lam, self.element_wl[1] * lam)
        return RISPanel(frame, self.rows, self.cols, self.spacing_wl * lam, None, frequency, dims)


@dataclass(frozen=True)
class TargetConfig:
    """Either a global direction or a point (absolute, or relative to the panel)."""

    direction: tuple | None = None
    point: tuple | None = None

    def resolve(self):
        if self.direction is not None:
            return Direction.from_vector(self.direction)
        return np.asarray(self.point, dtype=float)


@dataclass(frozen=True)
class ConfigurationConfig:
    name: str
    rule: str
    targets: dict = field(default_factory=dict)
    project: bool = True


@dataclass(frozen=True)
class ReceiverSet:
    name: str
    points: tuple
    sweep: tuple | None = None  # (column name, values) for arc sweeps


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    name: str
    frequency_hz: float = 26e9
    max_reflections: int = 1
    modes: tuple = ("actual",)
    rx_pol: str = "dual"
    plot: bool = False
    scene: SceneConfig = SceneConfig()
    panel: PanelConfig = PanelConfig()
    tx: tuple = (0.0, 0.0, 1.0)
    tx_weights: tuple | str = "balanced"
    configurations: tuple = ()
    receivers: tuple = ()
    alpha: tuple = ()
    # deviation study
    angle_r_deg: tuple = ()
    theta_deg: tuple = ()

    def resolved(self):
        """Plain-data view of every parameter, for the run manifest."""
        return _plain(asdict(self))


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    return x


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _grid(ctx, spec, *where):
    """Explicit list or ``{start, stop, step}`` (inclusive of ``stop``)."""
    if isinstance(spec, (int, float)):
        return (float(spec),)
    if isinstance(spec, list):
        try:
            return tuple(float(v) for v in spec)
        except (TypeError, ValueError):
            raise ctx.error("grid entries must be numbers", *where) from None
    if isinstance(spec, dict):
        try:
            a, b, s = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as e:
            raise ctx.error(f"range needs start, stop and step (missing {e.args[0]!r})", *where) from None
        if s <= 0 or b < a:
            raise ctx.error("range needs step > 0 and stop >= start", *where)
        n = int(np.floor((b - a) / s + 1e-9)) + 1
        return tuple(float(round(a + i * s, 12)) for i in range(n))
    raise ctx.error("expected a number, a list or a {start, stop, step} table", *where)


def _vec3(ctx, v, *where):
    if not isinstance(v, list) or len(v) != 3:
        raise ctx.error("expected a list of three numbers", *where)
    try:
        out = tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ctx.error("expected a list of three numbers", *where) from None
    if not all(np.isfinite(out)):
        raise ctx.error("coordinates must be finite", *where)
    return out


def _number(ctx, table, key, default, *where, positive=False, integer=False):
    v = table.get(key, default)
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if integer:
        ok = isinstance(v, int) and not isinstance(v, bool)
    if not ok or not np.isfinite(v) or (positive and v <= 0):
        kind = "a positive " if positive else "a "
        raise ctx.error(f"{key} must be {kind}{'integer' if integer else 'number'}", *where, key)
    return v


def _relative_point(origin, spec):
    """``{zenith_deg, azimuth_deg, distance_m}`` relative to ``origin``."""
    th, ph = np.radians(spec["zenith_deg"]), np.radians(spec.get("azimuth_deg", 0.0))
    return tuple(float(x) for x in np.asarray(origin) + spec["distance_m"] * direction_vector(th, ph))


def _target(ctx, spec, origin, *where):
    if not isinstance(spec, dict):
        raise ctx.error("target must be a table", *where)
    keys = set(spec)
    if keys == {"direction"}:
        v = _vec3(ctx, spec["direction"], *where, "direction")
        if np.linalg.norm(v) == 0:
            raise ctx.error("target direction must be non-zero", *where, "direction")
        return TargetConfig(direction=v)
    if keys == {"point"}:
        return TargetConfig(point=_vec3(ctx, spec["point"], *where, "point"))
    if {"zenith_deg"} <= keys <= {"zenith_deg", "azimuth_deg", "distance_m"}:
        th, ph = np.radians(spec["zenith_deg"]), np.radians(spec.get("azimuth_deg", 0.0))
        if "distance_m" in spec:
            if spec["distance_m"] <= 0:
                raise ctx.error("distance_m must be positive", *where, "distance_m")
            return TargetConfig(point=_relative_point(origin, spec))
        return TargetConfig(direction=tuple(float(x) for x in direction_vector(th, ph)))
    raise ctx.error("target needs one of: direction, point, or zenith_deg[/azimuth_deg[/distance_m]]", *where)


def _scene(ctx, raw):
    t = raw.get("scene", {})
    kind = t.get("type", "free_space")
    if kind not in ("free_space", "t_corridor"):
        raise ctx.error(f"unknown scene type {kind!r}", "scene", "type")
    kw = {"type": kind, "eps_r": float(_number(ctx, t, "eps_r", 5.0, "scene", positive=True))}
    for key in ("width_h", "half_length_h", "width_v", "length_v"):
        kw[key] = float(_number(ctx, t, key, getattr(SceneConfig, key), "scene", positive=True))
    h = t.get("height", SceneConfig.height)
    if h is not None and h is not False:
        h = float(_number(ctx, t, "height", 3.0, "scene", positive=True))
    else:
        h = None
    kw["height"] = h
    cfg = SceneConfig(**kw)
    try:
        cfg.build()
    except ValueError as e:
        raise ctx.error(str(e), "scene", None) from None
    return cfg


def _panel(ctx, raw):
    t = raw.get("panel", {})
    rows = _number(ctx, t, "rows", 30, "panel", positive=True, integer=True)
    cols = _number(ctx, t, "cols", 30, "panel", positive=True, integer=True)
    spacing = float(_number(ctx, t, "spacing_wl", 0.5, "panel", positive=True))
    el = t.get("element_wl", [0.5, 0.5])
    if not (isinstance(el, list) and len(el) == 2 and all(isinstance(v, (int, float)) and v > 0 for v in el)):
        raise ctx.error("element_wl must be two positive numbers", "panel", "element_wl")
    origin = _vec3(ctx, t.get("origin", [0.0, 0.0, 0.0]), "panel", "origin")
    normal = _vec3(ctx, t.get("normal", [0.0, 0.0, 1.0]), "panel", "normal")
    up = _vec3(ctx, t.get("up", [0.0, 1.0, 0.0]), "panel", "up")
    cfg = PanelConfig(rows, cols, spacing, tuple(float(v) for v in el), origin, normal, up)
    try:
        Frame.from_normal_up(origin, normal, up)
    except ValueError as e:
        raise ctx.error(f"invalid panel frame: {e}", "panel", "normal") from None
    return cfg


def _tx(ctx, raw, origin):
    t = raw.get("tx")
    if not isinstance(t, dict):
        raise ctx.error("missing [tx] table")
    if "position" in t:
        pos = _vec3(ctx, t["position"], "tx", "position")
    elif "zenith_deg" in t and "distance_m" in t:
        if t["distance_m"] <= 0:
            raise ctx.error("distance_m must be positive", "tx", "distance_m")
        pos = _relative_point(origin, t)
    else:
        raise ctx.error("tx needs position or zenith_deg/azimuth_deg/distance_m", "tx")
    w = t.get("weights", "balanced")
    if isinstance(w, list):
        if len(w) != 2 or not all(isinstance(v, (int, float)) for v in w):
            raise ctx.error("tx weights must be two real numbers or \"balanced\"", "tx", "weights")
        w = tuple(float(v) for v in w)
        if abs(w[0] ** 2 + w[1] ** 2 - 1.0) > 1e-9:
            raise ctx.error("tx weights must have unit total power", "tx", "weights")
    elif w != "balanced":
        raise ctx.error("tx weights must be two real numbers or \"balanced\"", "tx", "weights")
    return pos, w


def _configurations(ctx, raw, origin):
    items = raw.get("configurations", [])
    if not isinstance(items, list) or not items:
        raise ctx.error("at least one [[configurations]] entry is required")
    out, names = [], set()
    for i, c in enumerate(items):
        name = c.get("name")
        if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_]+", name):
            raise ctx.error("configuration name must be a non-empty identifier", "configurations", i, "name")
        if name in names:
            raise ctx.error(f"duplicate configuration name {name!r}", "configurations", i, "name")
        names.add(name)
        rule = c.get("rule")
        if rule not in RULES:
            raise ctx.error(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}", "configurations", i, "rule")
        targets = {}
        for key in RULES[rule]:
            if key not in c:
                raise ctx.error(f"rule {rule!r} needs {key}", "configurations", i, "rule")
            targets[key] = _target(ctx, c[key], origin, "configurations", i, key)
        project = c.get("project", True)
        if not isinstance(project, bool):
            raise ctx.error("project must be true or false", "configurations", i, "project")
        out.append(ConfigurationConfig(name, rule, targets, project))
    return tuple(out)


def _receivers(ctx, raw, origin, scene):
    items = raw.get("receivers", [])
    if not isinstance(items, list) or not items:
        raise ctx.error("at least one [[receivers]] entry is required")
    out, names = [], set()
    for i, r in enumerate(items):
        name = r.get("name")
        if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_]+", name):
            raise ctx.error("receiver set name must be a non-empty identifier", "receivers", i, "name")
        if name in names:
            raise ctx.error(f"duplicate receiver set {name!r}", "receivers", i, "name")
        names.add(name)
        if "zenith_deg" in r:
            d = _number(ctx, r, "distance_m", None, "receivers", i, positive=True)
            zen = _grid(ctx, r["zenith_deg"], "receivers", i, "zenith_deg")
            az = np.radians(float(r.get("azimuth_deg", 0.0)))
            pts = tuple(
                tuple(float(x) for x in np.asarray(origin) + d * direction_vector(np.radians(z), az)) for z in zen
            )
            sweep = ("zenith_deg", zen)
        elif "points" in r:
            pts = tuple(_vec3(ctx, p, "receivers", i, "points") for p in r["points"])
            sweep = None
        elif {"x", "y", "z"} <= set(r):
            xs = _grid(ctx, r["x"], "receivers", i, "x")
            ys = _grid(ctx, r["y"], "receivers", i, "y")
            zs = _grid(ctx, r["z"], "receivers", i, "z")
            pts = tuple((x, y, z) for x in xs for y in ys for z in zs)
            sweep = None
        else:
            raise ctx.error("receivers need zenith_deg/distance_m, points, or x/y/z grids", "receivers", i)
        inside = scene.build().contains(np.array(pts))
        if not np.all(inside):
            bad = pts[int(np.flatnonzero(~np.asarray(inside))[0])]
            raise ctx.error(f"receiver {bad} lies outside the scene", "receivers", i)
        if any(np.linalg.norm(np.subtract(p, origin)) < 1e-9 for p in pts):
            raise ctx.error("receiver coincides with the panel centre", "receivers", i)
        out.append(ReceiverSet(name, pts, sweep))
    return tuple(out)


def _common(ctx, raw):
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ctx.error(f"kind must be one of {', '.join(KINDS)}", "kind")
    name = raw.get("name")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_\-]+", name):
        raise ctx.error("name must be a non-empty identifier", "name")
    freq = float(_number(ctx, raw, "frequency_hz", 26e9, positive=True))
    plot = raw.get("plot", False)
    if not isinstance(plot, bool):
        raise ctx.error("plot must be true or false", "plot")
    return kind, name, freq, plot


def parse_config(raw: dict, path="<config>", text="") -> ScenarioConfig:
    """Validate a decoded TOML document and build a :class:`ScenarioConfig`.

    Raises
    ------
    ConfigError
        With ``file:line`` location when the offending key can be found.
    """
    ctx = _Ctx(path, text)
    kind, name, freq, plot = _common(ctx, raw)
    known = {
        "kind", "name", "frequency_hz", "plot", "max_reflections", "modes", "rx_pol", "scene", "panel",
        "tx", "configurations", "receivers", "alpha", "angle_r_deg", "theta_deg",
    }
    for key in raw:
        if key not in known:
            raise ctx.error(f"unknown key {key!r}", key)
    if kind == "deviation":
        ang = _grid(ctx, raw.get("angle_r_deg", [0.0]), "angle_r_deg")
        th = _grid(ctx, raw.get("theta_deg", {"start": 0, "stop": 89, "step": 1}), "theta_deg")
        if min(th) < 0 or max(th) >= 90:
            raise ctx.error("theta_deg must lie in [0, 90)", "theta_deg")
        return ScenarioConfig(kind, name, freq, plot=plot, angle_r_deg=ang, theta_deg=th)

    mr = raw.get("max_reflections", 1)
    if mr not in (0, 1) or isinstance(mr, bool):
        raise ctx.error("max_reflections must be 0 or 1", "max_reflections")
    modes = raw.get("modes", ["actual"])
    if not isinstance(modes, list) or not modes or any(m not in MODES for m in modes) or len(set(modes)) != len(modes):
        raise ctx.error("modes must be a non-empty list drawn from \"actual\", \"ideal\"", "modes")
    rx_pol = raw.get("rx_pol", "dual")
    if rx_pol not in RX_POLS:
        raise ctx.error(f"rx_pol must be one of {', '.join(RX_POLS)}", "rx_pol")
    scene = _scene(ctx, raw)
    panel = _panel(ctx, raw)
    tx, w = _tx(ctx, raw, panel.origin)
    if not np.all(scene.build().contains(np.array(tx))):
        raise ctx.error(f"tx {tx} lies outside the scene", "tx", "position")
    confs = _configurations(ctx, raw, panel.origin)
    recv = _receivers(ctx, raw, panel.origin, scene)
    alpha = ()
    if kind == "alpha_sweep":
        alpha = _grid(ctx, raw.get("alpha", {"start": 0, "stop": 1, "step": 0.05}), "alpha")
        if min(alpha) < 0 or max(alpha) > 1:
            raise ctx.error("alpha values must lie in [0, 1]", "alpha")
    return ScenarioConfig(
        kind, name, freq, mr, tuple(modes), rx_pol, plot, scene, panel, tx, w, confs, recv, alpha
    )


def load_config(path) -> ScenarioConfig:
    """Read and validate a TOML scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path) from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"invalid TOML: {e}", path, int(m.group(1)) if m else None) from None
    return parse_config(raw, path, text)


def bundled_configs():
    """Paths of the configuration files shipped with the package."""
    root = Path(__file__).parent / "configs"
    return sorted(root.glob("*.toml"))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _desired(panel, tx, conf: ConfigurationConfig):
    t = {k: v.resolve() for k, v in conf.targets.items()}
    if conf.rule == "type1_reflect":
        return configure_type1_reflect(panel, tx, t["target"])
    if conf.rule == "type1_star":
        return configure_type1_star(panel, tx, t["reflect_target"], t["transmit_target"], project=conf.project)
    if conf.rule == "type2_split":
        return configure_type2_split(panel, tx, t["reflect_target"], t["transmit_target"])
    mode = conf.rule.split("_", 1)[1]
    return configure_type3_rotation(panel, tx, t["target"], mode)


def balanced_weights(panel, tx):
    """Tx weights giving equal local theta/phi components on the LOS path to the panel centre."""
    u = np.asarray(tx, float) - panel.frame.origin
    u = u / np.linalg.norm(u)
    P = rotation_matrices(panel.frame.axes, u)
    # LOS gain is proportional to diag(1, -1)
    w = np.diag([1.0, -1.0]) @ P @ np.array([1.0, 1.0])
    return w / np.linalg.norm(w)


def _singularity_context(err, panel, tx):
    """Append element and incidence-angle diagnostics to a singularity."""
    idx = err.index
    n = None
    if isinstance(idx, tuple) and idx:
        n = int(idx[0])
    elif isinstance(idx, (int, np.integer)):
        n = int(idx)
    if n is None or not 0 <= n < panel.size:
        return err
    row, col = divmod(n, panel.cols)
    v = panel.frame.to_local_vector(np.asarray(tx, float) - panel.centers[n])
    th, ph = direction_angles(v / np.linalg.norm(v))
    msg = (
        f"{err} at element {n} (row {row}, col {col}), "
        f"LOS incidence theta={np.degrees(th):.6g} deg, phi={np.degrees(ph):.6g} deg"
    )
    new = type(err)(msg, index=idx)
    new.element = n
    new.angles = (float(th), float(ph))
    return new


def _pool_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


@dataclass
class _Prepared:
    panel: RISPanel
    scene: object
    curves: list  # (label, illumination)


def _prepare(cfg: ScenarioConfig):
    base = cfg.panel.build(cfg.frequency_hz)
    scene = cfg.scene.build()
    curves = []
    for conf in cfg.configurations:
        try:
            desired = _desired(base, cfg.tx, conf)
            panel = base.with_desired(desired)
            for mode in cfg.modes:
                ill = illuminate(panel, scene, cfg.tx, mode, cfg.max_reflections)
                curves.append((f"{conf.name}_{mode}", panel, ill))
        except NumericSingularity as e:
            raise _singularity_context(e, base, cfg.tx) from e
    return base, scene, curves


def _channels(cfg, scene, curves, points, threads):
    """Cascaded (R, 2, 2) channels per curve plus the direct channel."""
    pts = np.asarray(points, float)
    chunks = [pts[i : i + CHUNK] for i in range(0, len(pts), CHUNK)]
    out = {}
    for label, panel, ill in curves:
        parts = _pool_map(lambda c: cascade_matrix(panel, scene, ill, c, cfg.max_reflections), chunks, threads)
        out[label] = np.concatenate(parts)
    direct = direct_matrix(scene, cfg.tx, pts, cfg.frequency_hz, cfg.max_reflections)
    return out, direct


def _fmt(x):
    return repr(float(x))


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else _fmt(c) for c in r])
    return buf.getvalue()


@dataclass
class ScenarioResult:
    """In-memory outputs: file name -> CSV text, plus numeric columns."""

    config: ScenarioConfig
    tables: dict
    columns: dict

    def write(self, out_dir):
        """Write CSVs, manifest and optional gnuplot script; returns written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        digests = {}
        for fname, text in self.tables.items():
            p = out / fname
            p.write_text(text, encoding="utf-8")
            digests[fname] = hashlib.sha256(text.encode()).hexdigest()
            written.append(p)
        if self.config.plot:
            p = out / f"{self.config.name}.gp"
            text = gnuplot_script(self)
            p.write_text(text, encoding="utf-8")
            digests[p.name] = hashlib.sha256(text.encode()).hexdigest()
            written.append(p)
        manifest = {
            "tool": "rissim",
            "version": __version__,
            "kind": self.config.kind,
            "name": self.config.name,
            "parameters": self.config.resolved(),
            "outputs": digests,
        }
        p = out / f"{self.config.name}_manifest.json"
        p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(p)
        return written


def gnuplot_script(result: ScenarioResult):
    ylabel = "phase deviation (deg)" if result.config.kind == "deviation" else "received power (dB)"
    lines = ["set datafile separator ','", "set key autotitle columnhead", f"set ylabel '{ylabel}'"]
    for fname, text in result.tables.items():
        header = text.split("\n", 1)[0].split(",")
        first = 1 + next(i for i, h in enumerate(header) if h.endswith("_db") or h.startswith("deviation_"))
        lines.append(f"set xlabel '{header[0]}'")
        lines.append(f"set title '{fname}'")
        lines.append(f"plot for [i={first}:{len(header)}] '{fname}' using 1:i with lines")
        lines.append("pause -1")
    return "\n".join(lines) + "\n"


def run_power_map(cfg: ScenarioConfig, threads=1) -> ScenarioResult:
    panel, scene, curves = _prepare(cfg)
    w = balanced_weights(panel, cfg.tx) if cfg.tx_weights == "balanced" else np.asarray(cfg.tx_weights, complex)
    tables, columns = {}, {}
    for rs in cfg.receivers:
        H, D = _channels(cfg, scene, curves, rs.points, threads)
        cols = {}
        for label, h in H.items():
            cols[f"{label}_db"] = power_db(h @ w, cfg.rx_pol)
            cols[f"{label}_with_direct_db"] = power_db((h + D) @ w, cfg.rx_pol)
        pts = np.asarray(rs.points)
        if rs.sweep is not None:
            header = [rs.sweep[0]] + list(cols)
            rows = [[rs.sweep[1][i]] + [c[i] for c in cols.values()] for i in range(len(pts))]
        else:
            header = ["rx", "x_m", "y_m", "z_m"] + list(cols)
            rows = [[str(i), *pts[i]] + [c[i] for c in cols.values()] for i in range(len(pts))]
        fname = f"{cfg.name}_{rs.name}.csv"
        tables[fname] = _table(header, rows)
        columns[rs.name] = {"points": pts, **({rs.sweep[0]: np.array(rs.sweep[1])} if rs.sweep else {}), **cols}
    return ScenarioResult(cfg, tables, columns)


def run_alpha_sweep(cfg: ScenarioConfig, threads=1) -> ScenarioResult:
    panel, scene, curves = _prepare(cfg)
    a = np.asarray(cfg.alpha)
    W = np.stack([np.sqrt(a), np.sqrt(1 - a)], -1)
    tables, columns = {}, {}
    for rs in cfg.receivers:
        H, D = _channels(cfg, scene, curves, rs.points, threads)
        for i, p in enumerate(rs.points):
            cols = {}
            for label, h in H.items():
                cols[f"{label}_db"] = power_db(W @ h[i].T, cfg.rx_pol)
                cols[f"{label}_with_direct_db"] = power_db(W @ (h[i] + D[i]).T, cfg.rx_pol)
            suffix = rs.name if len(rs.points) == 1 else f"{rs.name}_{i}"
            rows = [[a[j]] + [c[j] for c in cols.values()] for j in range(len(a))]
            tables[f"{cfg.name}_{suffix}.csv"] = _table(["alpha"] + list(cols), rows)
            columns[suffix] = {"alpha": a, "point": np.asarray(p), **cols}
    return ScenarioResult(cfg, tables, columns)


def run_deviation_study(cfg: ScenarioConfig, threads=1) -> ScenarioResult:
    """Phase deviation of actual Type 1 coefficients, ``|R| = |T| = sqrt(1/2)``, ``angle T = angle R + pi/2``."""
    th = np.radians(np.asarray(cfg.theta_deg))
    rows, cols = [], {"theta_deg": [], "angle_r_deg": [], "deviation_r_deg": [], "deviation_t_deg": []}
    for ang in cfg.angle_r_deg:
        r = np.sqrt(0.5) * np.exp(1j * np.radians(ang))
        dR, dT = phase_deviation(Type1(r, 1j * r), th)
        dR, dT = np.degrees(np.atleast_1d(dR)), np.degrees(np.atleast_1d(dT))
        for i, t in enumerate(cfg.theta_deg):
            rows.append([t, ang, dR[i], dT[i]])
            for k, v in zip(cols, rows[-1]):
                cols[k].append(v)
    text = _table(["theta_in_deg", "angle_r_deg", "deviation_r_deg", "deviation_t_deg"], rows)
    return ScenarioResult(cfg, {f"{cfg.name}.csv": text}, {cfg.name: {k: np.asarray(v) for k, v in cols.items()}})


def run_scenario(cfg: ScenarioConfig, threads=1) -> ScenarioResult:
    if cfg.kind == "power_map":
        return run_power_map(cfg, threads)
    if cfg.kind == "alpha_sweep":
        return run_alpha_sweep(cfg, threads)
    return run_deviation_study(cfg, threads)
