"""Deterministic first-order image-method ray tracer.

Gain convention
---------------
A path's 2x2 gain maps field components on the spherical basis of the
*departure* direction (columns; the direction the ray leaves the source)
onto the spherical basis of the *arrival* direction (rows; the direction at
the destination pointing back toward where the ray came from).  Because
``theta_hat(-u) = theta_hat(u)`` and ``phi_hat(-u) = -phi_hat(u)``, a
line-of-sight path over distance ``d`` has gain

    lambda / (4 pi d) * diag(1, -1)

and no propagation phase; the delay phase ``exp(-j 2 pi f tau)`` is applied
when a channel is evaluated.  Wall reflections multiply by the Fresnel
coefficients of a dielectric half-space in the plane-of-incidence basis.

Scenes
------
``FreeSpace`` has no walls.  ``TCorridor`` is the union of a horizontal
corridor ``[-Lh, Lh] x [0, W]`` and a vertical stem ``[-Wv/2, Wv/2] x
[-Lv, 0]`` in the xy plane, with walls extending indefinitely along z.
Wall indices are fixed:

0. ``y = W`` (far wall of the horizontal corridor)
1. ``y = 0``, ``x <= -Wv/2``
2. ``y = 0``, ``x >= Wv/2``
3. ``x = -Wv/2``, ``y <= 0``
4. ``x = +Wv/2``, ``y <= 0``
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rissim.constants import C0, wavelength
from rissim.coords import Direction, basis_of_vector, direction_vector
from rissim.errors import DegenerateGeometry, SchemaError

PATH_HEADER = [
    "re_gtt",
    "im_gtt",
    "re_gtp",
    "im_gtp",
    "re_gpt",
    "im_gpt",
    "re_gpp",
    "im_gpp",
    "delay_s",
    "dep_theta_rad",
    "dep_phi_rad",
    "arr_theta_rad",
    "arr_phi_rad",
]

_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class PathRecord:
    """One propagation path (see module notes for the gain basis)."""

    gain: np.ndarray
    delay: float
    depart: Direction
    arrive: Direction

    def __post_init__(self):
        g = np.asarray(self.gain, dtype=complex).reshape(2, 2)
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite path gain")
        if not (math.isfinite(self.delay) and self.delay >= 0):
            raise ValueError("path delay must be finite and non-negative")
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "delay", float(self.delay))


@dataclass(frozen=True)
class Wall:
    """Axis-aligned reflecting plane.

    ``axis`` is the coordinate held fixed at ``value``.  Vertical walls
    (axis 0 or 1) are unbounded in z and span ``[lo, hi]`` along the other
    horizontal coordinate.  Horizontal planes (axis 2, floor or ceiling)
    cover the walkable region of the scene and never occlude.
    """

    axis: int
    value: float
    lo: float
    hi: float

    @property
    def normal(self):
        n = np.zeros(3)
        n[self.axis] = 1.0
        return n


@dataclass(frozen=True)
class FreeSpace:
    eps_r: float = 5.0

    @property
    def walls(self):
        return ()

    def contains(self, p):
        return np.ones(np.shape(p)[:-1], dtype=bool)


@dataclass(frozen=True)
class TCorridor:
    """T-shaped corridor; all lengths in meters.

    The horizontal corridor spans ``0 < y < width_h`` and
    ``|x| < half_length_h``; the vertical corridor (stem) spans
    ``|x| < width_v / 2`` and ``-length_v < y <= 0``.  With ``height`` set,
    a floor at ``z = 0`` and a ceiling at ``z = height`` are added after the
    five vertical walls.
    """

    width_h: float = 3.0
    half_length_h: float = 20.0
    width_v: float = 3.0
    length_v: float = 20.0
    eps_r: float = 5.0
    height: float | None = 3.0
    walls: tuple = field(init=False, repr=False)

    def __post_init__(self):
        W, Lh, Wv, Lv = self.width_h, self.half_length_h, self.width_v, self.length_v
        if min(W, Lh, Wv, Lv) <= 0 or Wv / 2 >= Lh or (self.height is not None and self.height <= 0):
            raise ValueError("invalid corridor dimensions")
        walls = (
            Wall(1, W, -Lh, Lh),
            Wall(1, 0.0, -Lh, -Wv / 2),
            Wall(1, 0.0, Wv / 2, Lh),
            Wall(0, -Wv / 2, -Lv, 0.0),
            Wall(0, Wv / 2, -Lv, 0.0),
        )
        if self.height is not None:
            walls += (Wall(2, 0.0, -np.inf, np.inf), Wall(2, float(self.height), -np.inf, np.inf))
        object.__setattr__(self, "walls", walls)

    def contains(self, p, tol=0.0):
        """Points strictly inside the walkable region (xy only)."""
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        if self.height is not None:
            z = p[..., 2]
            in_z = (z > tol) & (z < self.height - tol)
        else:
            in_z = True
        W, Lh, Wv, Lv = self.width_h, self.half_length_h, self.width_v, self.length_v
        in_h = (x > -Lh + tol) & (x < Lh - tol) & (y > tol) & (y < W - tol)
        in_v = (x > -Wv / 2 + tol) & (x < Wv / 2 - tol) & (y > -Lv + tol) & (y <= tol)
        return (in_h | in_v) & in_z


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------


def _blocked(walls, a, b, skip=None):
    """True where segment a->b (xy projection) crosses any wall other than ``skip``.

    Touching a wall exactly at an endpoint does not count as a crossing.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(a.shape, b.shape)[:-1]
    out = np.zeros(shape, dtype=bool)
    for i, w in enumerate(walls):
        if i == skip or w.axis == 2:
            continue
        ax, other = w.axis, 1 - w.axis
        da = a[..., ax] - w.value
        db = b[..., ax] - w.value
        crosses = (da * db < 0) & (np.abs(da) > _EPS) & (np.abs(db) > _EPS)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = da / (da - db)
            s = a[..., other] + t * (b[..., other] - a[..., other])
        within = (s >= w.lo - _EPS) & (s <= w.hi + _EPS)
        out |= crosses & within
    return out


def _fresnel(cos_i, eps_r):
    sin2 = 1.0 - cos_i**2
    root = np.sqrt(eps_r - sin2 + 0j)
    gs = (cos_i - root) / (cos_i + root)
    gp = (eps_r * cos_i - root) / (eps_r * cos_i + root)
    return gs, gp


def _los_gain(lam, dist):
    g = np.zeros(np.shape(dist) + (2, 2), complex)
    a = lam / (4 * np.pi * dist)
    g[..., 0, 0] = a
    g[..., 1, 1] = -a
    return g


def _reflection_gain(k1, k2, n, eps_r, lam, dist):
    """Gain of a specular bounce; k1/k2 unit propagation vectors before/after."""
    s = np.cross(k1, n)
    sn = np.linalg.norm(s, axis=-1, keepdims=True)
    # normal incidence: any tangential direction is a valid s
    alt = np.cross(np.broadcast_to(np.array([0.0, 0.0, 1.0]), np.shape(n)), n)
    alt_n = np.linalg.norm(alt, axis=-1, keepdims=True)
    alt = np.where(alt_n > 1e-12, alt / np.where(alt_n > 0, alt_n, 1), np.array([1.0, 0.0, 0.0]))
    s = np.where(sn > 1e-12, s / np.where(sn > 0, sn, 1), alt)
    p1 = np.cross(s, k1)
    p2 = np.cross(s, k2)
    cos_i = np.abs(np.sum(k1 * n, axis=-1))
    gs, gp = _fresnel(cos_i, eps_r)
    th_d, ph_d = basis_of_vector(k1)
    th_a, ph_a = basis_of_vector(-k2)
    dep = np.stack([th_d, ph_d], -2)  # (..., 2, 3)
    arr = np.stack([th_a, ph_a], -2)
    # F = arr . (gs s s^T + gp p2 p1^T) . dep^T
    op = gs[..., None, None] * s[..., :, None] * s[..., None, :] + gp[..., None, None] * p2[..., :, None] * p1[..., None, :]
    F = np.einsum("...ia,...ab,...jb->...ij", arr, op, dep)
    return F * (lam / (4 * np.pi * dist))[..., None, None]


@dataclass
class PathArrays:
    """Vectorised candidate paths: trailing axis enumerates LOS then walls.

    ``valid`` marks candidates that exist; other fields are undefined
    (zero) where ``valid`` is False.
    """

    valid: np.ndarray
    gain: np.ndarray
    delay: np.ndarray
    dep: np.ndarray
    arr: np.ndarray

    def records(self, idx=()):
        """Valid paths at leading index ``idx`` as :class:`PathRecord` list."""
        v = self.valid[idx]
        out = []
        for p in np.flatnonzero(v):
            out.append(
                PathRecord(
                    self.gain[idx][p],
                    float(self.delay[idx][p]),
                    Direction.from_vector(self.dep[idx][p]),
                    Direction.from_vector(self.arr[idx][p]),
                )
            )
        return out


def trace_arrays(scene, src, dst, frequency, max_reflections=1) -> PathArrays:
    """Vectorised :func:`trace`; ``src`` and ``dst`` broadcast over leading axes."""
    if max_reflections not in (0, 1):
        raise ValueError("max_reflections must be 0 or 1")
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    shape = np.broadcast_shapes(src.shape, dst.shape)[:-1]
    src = np.broadcast_to(src, shape + (3,))
    dst = np.broadcast_to(dst, shape + (3,))
    lam = wavelength(frequency)
    walls = scene.walls if max_reflections else ()
    scene_walls = scene.walls
    P = 1 + len(walls)
    valid = np.zeros(shape + (P,), dtype=bool)
    gain = np.zeros(shape + (P, 2, 2), complex)
    delay = np.zeros(shape + (P,))
    dep = np.zeros(shape + (P, 3))
    arr = np.zeros(shape + (P, 3))

    d = dst - src
    dist = np.linalg.norm(d, axis=-1)
    if np.any(dist < _EPS):
        raise DegenerateGeometry("source and destination coincide")
    if scene_walls and (not np.all(scene.contains(src)) or not np.all(scene.contains(dst))):
        raise DegenerateGeometry("endpoint lies on or beyond a corridor wall")
    u = d / dist[..., None]
    valid[..., 0] = ~_blocked(scene_walls, src, dst)
    gain[..., 0, :, :] = _los_gain(lam, dist)
    delay[..., 0] = dist / C0
    dep[..., 0, :] = u
    arr[..., 0, :] = -u

    for i, w in enumerate(walls):
        ax, other = w.axis, (1 - w.axis) % 3
        n = w.normal
        img = src.copy()
        img[..., ax] = 2 * w.value - src[..., ax]
        ds = src[..., ax] - w.value
        dd = dst[..., ax] - w.value
        same_side = (ds * dd > 0) & (np.abs(ds) > _EPS) & (np.abs(dd) > _EPS)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w.value - img[..., ax]) / (dst[..., ax] - img[..., ax])
        # t lies in (0, 1) on the same side; elsewhere keep hit points finite
        t = np.where(same_side, t, 0.5)
        hit = img + t[..., None] * (dst - img)
        if ax == 2:
            on_wall = np.asarray(scene.contains(np.where(np.isfinite(hit), hit, 0.0), tol=-_EPS))
            on_wall = on_wall & np.all(np.isfinite(hit), axis=-1)
        else:
            on_wall = (hit[..., other] >= w.lo - _EPS) & (hit[..., other] <= w.hi + _EPS)
        ok = same_side & on_wall
        ok &= ~_blocked(scene_walls, src, hit, skip=i) & ~_blocked(scene_walls, hit, dst, skip=i)
        leg1 = hit - src
        leg2 = dst - hit
        d1 = np.linalg.norm(leg1, axis=-1)
        d2 = np.linalg.norm(leg2, axis=-1)
        total = d1 + d2
        safe = np.where(ok, 1.0, 0.0)[..., None]
        k1 = np.where(ok[..., None], leg1 / np.where(d1 > 0, d1, 1)[..., None], np.array([0.0, 0.0, -1.0]))
        k2 = np.where(ok[..., None], leg2 / np.where(d2 > 0, d2, 1)[..., None], np.array([0.0, 0.0, 1.0]))
        nn = np.broadcast_to(n, k1.shape)
        g = _reflection_gain(k1, k2, nn, scene.eps_r, lam, np.where(ok, total, 1.0))
        valid[..., i + 1] = ok
        gain[..., i + 1, :, :] = g * safe[..., None]
        delay[..., i + 1] = np.where(ok, total / C0, 0.0)
        dep[..., i + 1, :] = k1 * safe
        arr[..., i + 1, :] = -k2 * safe
    return PathArrays(valid, gain, delay, dep, arr)


def trace(scene, src, dst, max_reflections=1, frequency=26e9):
    """Paths from ``src`` to ``dst``: LOS first (if visible), then walls in index order.

    Raises
    ------
    DegenerateGeometry
        If the endpoints coincide or an endpoint is not strictly inside the
        corridor.
    """
    pa = trace_arrays(scene, np.asarray(src, float), np.asarray(dst, float), frequency, max_reflections)
    return pa.records()


# ---------------------------------------------------------------------------
# path files
# ---------------------------------------------------------------------------


def _fmt(x):
    return repr(float(x))


def dumps_paths(paths):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PATH_HEADER)
    for p in paths:
        g = p.gain
        row = []
        for i in range(2):
            for j in range(2):
                row += [_fmt(g[i, j].real), _fmt(g[i, j].imag)]
        row += [_fmt(p.delay), _fmt(p.depart.theta), _fmt(p.depart.phi), _fmt(p.arrive.theta), _fmt(p.arrive.phi)]
        w.writerow(row)
    return buf.getvalue()


def save_paths(paths, dest):
    Path(dest).write_text(dumps_paths(paths), encoding="utf-8")


def loads_paths(text):
    """Parse path-record CSV text (see ``PATH_HEADER``)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty file", line=1) from None
    if [h.strip() for h in header] != PATH_HEADER:
        raise SchemaError("unexpected header", line=1)
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(PATH_HEADER):
            raise SchemaError(f"expected {len(PATH_HEADER)} columns, got {len(row)}", line=lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise SchemaError(f"not a number ({exc})", line=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"line {lineno}: non-finite entry")
        g = np.array(vals[0:8:2]) + 1j * np.array(vals[1:8:2])
        if vals[8] < 0:
            raise ValueError(f"line {lineno}: negative delay")
        out.append(PathRecord(g.reshape(2, 2), vals[8], Direction(vals[9], vals[10]), Direction(vals[11], vals[12])))
    return out


def load_paths(source):
    return loads_paths(Path(source).read_text(encoding="utf-8"))


def path_arrays_from_records(paths):
    """Stack a record list into a single-row :class:`PathArrays`."""
    P = len(paths)
    valid = np.ones(P, dtype=bool)
    gain = np.array([p.gain for p in paths], dtype=complex).reshape(P, 2, 2)
    delay = np.array([p.delay for p in paths], dtype=float)
    dep = direction_vector(*np.array([[p.depart.theta, p.depart.phi] for p in paths]).reshape(P, 2).T)
    arr = direction_vector(*np.array([[p.arrive.theta, p.arrive.phi] for p in paths]).reshape(P, 2).T)
    return PathArrays(valid, gain, delay, dep.reshape(P, 3), arr.reshape(P, 3))


__all__ = [
    "PATH_HEADER",
    "PathArrays",
    "PathRecord",
    "FreeSpace",
    "TCorridor",
    "Wall",
    "trace",
    "trace_arrays",
    "save_paths",
    "load_paths",
    "dumps_paths",
    "loads_paths",
    "path_arrays_from_records",
]
