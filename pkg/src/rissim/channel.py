"""Cascaded Tx-RIS-Rx channel assembly.

Every element ``n`` contributes, for each incoming path ``l`` and outgoing
path ``k``, one tap

    gain = A_k . P_out G_n P_in^T . B_l,   delay = tau_l + tau_k

where ``B_l`` / ``A_k`` are the path gains, ``G_n`` the local element
response for that angle pair and ``P_in`` / ``P_out`` the local-to-global
polarisation rotations at the arrival and departure directions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rissim.constants import wavelength
from rissim.coords import Frame, direction_angles, direction_vector, rotation_matrices
from rissim.errors import UnnormalizedWeights
from rissim.radiation import CurrentBundle, element_currents, radiate_response
from rissim.raytrace import PathArrays, trace_arrays

POWER_FLOOR_DB = -300.0

CIR_HEADER = [
    "tap",
    "re_gtt",
    "im_gtt",
    "re_gtp",
    "im_gtp",
    "re_gpt",
    "im_gpt",
    "re_gpp",
    "im_gpp",
    "delay_s",
]


@dataclass(frozen=True, eq=False)
class RISPanel:
    """Planar array of ``rows x cols`` elements in a frame's local xy plane.

    ``desired`` holds one coefficient set per element (flat index
    ``n = row * cols + col``; rows run along local y, columns along local x).
    """

    frame: Frame
    rows: int
    cols: int
    spacing: float
    desired: object
    frequency: float = 26e9
    element_dims: tuple | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("panel needs at least one element")
        if self.element_dims is None:
            lam = wavelength(self.frequency)
            object.__setattr__(self, "element_dims", (lam / 2, lam / 2))
        if self.desired is not None and self.desired.shape not in ((self.size,), ()):
            raise ValueError(f"desired coefficients have shape {self.desired.shape}, expected ({self.size},)")

    @property
    def size(self):
        return self.rows * self.cols

    @property
    def local_centers(self):
        r = (np.arange(self.rows) - (self.rows - 1) / 2) * self.spacing
        c = (np.arange(self.cols) - (self.cols - 1) / 2) * self.spacing
        Y, X = np.meshgrid(r, c, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), np.zeros(self.size)], -1)

    @property
    def centers(self):
        return self.frame.to_global_point(self.local_centers)

    def with_desired(self, desired):
        return RISPanel(self.frame, self.rows, self.cols, self.spacing, desired, self.frequency, self.element_dims)

    @property
    def type_tag(self):
        return getattr(self.desired, "kind", None)


@dataclass(frozen=True, eq=False)
class ChannelImpulseResponse:
    """Ordered taps: ``gains`` of shape ``(T, 2, 2)`` and ``delays`` of shape ``(T,)``."""

    gains: np.ndarray
    delays: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex).reshape(-1, 2, 2)
        d = np.asarray(self.delays, dtype=float).reshape(-1)
        if g.shape[0] != d.shape[0]:
            raise ValueError("gains and delays differ in length")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)

    @property
    def taps(self):
        return list(zip(self.gains, self.delays))

    def __len__(self):
        return self.delays.shape[0]


def cascade_element(in_paths, G_global, out_paths):
    """Taps of one element, l-major / k-minor.

    ``G_global`` is a single ``(2, 2)`` response or one per angle pair with
    shape ``(L, K, 2, 2)``.
    """
    L, K = len(in_paths), len(out_paths)
    G = np.asarray(G_global, dtype=complex)
    if G.shape == (2, 2):
        G = np.broadcast_to(G, (L, K, 2, 2))
    elif G.shape != (L, K, 2, 2):
        raise ValueError(f"response shape {G.shape} does not match {L} x {K} paths")
    taps = []
    for l, pin in enumerate(in_paths):
        for k, pout in enumerate(out_paths):
            taps.append((pout.gain @ G[l, k] @ pin.gain, pin.delay + pout.delay))
    return taps


def assemble(direct, per_element, metadata=None) -> ChannelImpulseResponse:
    """Direct taps followed by every element's taps in element order."""
    taps = list(direct)
    for t in per_element:
        taps.extend(t)
    if taps:
        gains = np.array([g for g, _ in taps], dtype=complex)
        delays = np.array([d for _, d in taps], dtype=float)
    else:
        gains = np.zeros((0, 2, 2), complex)
        delays = np.zeros(0)
    return ChannelImpulseResponse(gains, delays, dict(metadata or {}))


def check_weights(tx_weights):
    w = np.asarray(tx_weights, dtype=complex).reshape(2)
    if abs(np.sum(np.abs(w) ** 2) - 1.0) > 1e-12:
        raise UnnormalizedWeights("transmit weights must have unit total power")
    return w


def power_db(h, rx_pol):
    """Power in dB of narrowband field vector(s) ``h`` (trailing axis 2)."""
    h = np.asarray(h)
    if rx_pol == "theta":
        p = np.abs(h[..., 0]) ** 2
    elif rx_pol == "phi":
        p = np.abs(h[..., 1]) ** 2
    elif rx_pol == "dual":
        p = np.sum(np.abs(h) ** 2, axis=-1)
    else:
        raise ValueError(f"unknown receive polarisation {rx_pol!r}")
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(p)
    return np.maximum(db, POWER_FLOOR_DB)


def narrowband_matrix(cir: ChannelImpulseResponse, frequency):
    """``sum_taps gain exp(-j 2 pi f tau)`` as a 2x2 matrix."""
    ph = np.exp(-2j * np.pi * frequency * cir.delays)
    return np.sum(cir.gains * ph[:, None, None], axis=0)


def received_power(cir: ChannelImpulseResponse, tx_weights, rx_pol, frequency):
    """Coherent narrowband received power in dB relative to unit transmit power."""
    w = check_weights(tx_weights)
    h = narrowband_matrix(cir, frequency) @ w
    return float(power_db(h, rx_pol))


# ---------------------------------------------------------------------------
# panel cascades
# ---------------------------------------------------------------------------


def _index_desired(desired, idx):
    return desired if desired.shape == () else desired[idx]


def _expand_bundle(b: CurrentBundle, extra):
    """Insert ``extra`` singleton axes after the element/in-path axes."""
    sl = (Ellipsis,) + (None,) * extra + (slice(None), slice(None))

    def e(x):
        return x[sl]

    return CurrentBundle(e(b.J_r), e(b.M_r), e(b.J_t), e(b.M_t), b.k_t[(Ellipsis,) + (None,) * extra + (slice(None),)])


@dataclass
class PanelIllumination:
    """Incoming paths and element currents, reusable across receivers."""

    paths: PathArrays
    usable: np.ndarray
    bundle: CurrentBundle
    P_in: np.ndarray


def illuminate(panel: RISPanel, scene, tx, mode="actual", max_reflections=1) -> PanelIllumination:
    """Trace Tx to every element and compute the excited currents.

    Incoming paths that reach the panel from behind (local z <= 0) are
    discarded: the element model assumes illumination of its front face.
    """
    f = panel.frequency
    pin = trace_arrays(scene, np.asarray(tx, float), panel.centers[:, None, :], f, max_reflections)
    pin = PathArrays(pin.valid[:, 0], pin.gain[:, 0], pin.delay[:, 0], pin.dep[:, 0], pin.arr[:, 0])
    axes = panel.frame.axes
    loc = pin.arr @ axes
    usable = pin.valid & (loc[..., 2] > 1e-12)
    loc = np.where(usable[..., None], loc, np.array([0.0, 0.0, 1.0]))
    th, ph = direction_angles(loc)
    desired = panel.desired
    if desired.shape != ():
        desired = desired[:, None]
    bundle = element_currents(desired, th, ph, f, mode)
    P_in = rotation_matrices(axes, np.where(usable[..., None], pin.arr, np.array([0.0, 0.0, 1.0])))
    return PanelIllumination(pin, usable, bundle, P_in)


def cascade_matrix(panel: RISPanel, scene, ill: PanelIllumination, rx_points, max_reflections=1):
    """Narrowband 2x2 cascaded channel at each receiver, summed over all taps.

    Returns an array of shape ``(R, 2, 2)``.  For each receiver the
    contributions are reduced over a contiguous axis in fixed
    (element, l, k) order, so results do not depend on how receivers are
    batched.
    """
    f = panel.frequency
    rx = np.atleast_2d(np.asarray(rx_points, float))
    axes = panel.frame.axes
    pout = trace_arrays(scene, panel.centers[:, None, :], rx[None, :, :], f, max_reflections)
    # (N, R, K) -> contributions (R, N, L, K)
    out_loc = pout.dep @ axes
    out_loc = np.where(pout.valid[..., None], out_loc, np.array([0.0, 0.0, 1.0]))
    P_out = rotation_matrices(axes, np.where(pout.valid[..., None], pout.dep, np.array([0.0, 0.0, 1.0])))
    b = _expand_bundle(ill.bundle, 2)  # (N, L, 1, 1, 2, 3)
    G = radiate_response(b, out_loc[:, None, :, :, :], panel.element_dims, f)  # (N, L, R, K, 2, 2)
    Pin_T = np.swapaxes(ill.P_in, -1, -2)[:, :, None, None]
    Gg = P_out[:, None] @ G @ Pin_T
    A = pout.gain[:, None]  # (N, 1, R, K, 2, 2)
    B = ill.paths.gain[:, :, None, None]  # (N, L, 1, 1, 2, 2)
    taps = A @ Gg @ B
    delay = ill.paths.delay[:, :, None, None] + pout.delay[:, None]
    mask = ill.usable[:, :, None, None] & pout.valid[:, None]
    ph = np.where(mask, np.exp(-2j * np.pi * f * delay), 0.0)
    contrib = taps * ph[..., None, None]  # (N, L, R, K, 2, 2)
    contrib = np.moveaxis(contrib, 2, 0)  # (R, N, L, K, 2, 2)
    R = contrib.shape[0]
    flat = np.ascontiguousarray(np.moveaxis(contrib.reshape(R, -1, 2, 2), 1, -1))
    return flat.sum(axis=-1)


def direct_matrix(scene, tx, rx_points, frequency, max_reflections=1):
    """Narrowband 2x2 Tx-Rx channel without the panel, shape ``(R, 2, 2)``."""
    rx = np.atleast_2d(np.asarray(rx_points, float))
    pd = trace_arrays(scene, np.asarray(tx, float), rx, frequency, max_reflections)
    ph = np.where(pd.valid, np.exp(-2j * np.pi * frequency * pd.delay), 0.0)
    c = pd.gain * ph[..., None, None]
    return np.ascontiguousarray(np.moveaxis(c, 1, -1)).sum(axis=-1)


def element_subchannels(panel: RISPanel, scene, tx, rx, max_reflections=1):
    """Per-element ``(in_paths, out_paths)`` record lists (global directions).

    Incoming paths from behind the panel are omitted, as in :func:`illuminate`.
    """
    f = panel.frequency
    c = panel.centers
    pin = trace_arrays(scene, np.asarray(tx, float), c, f, max_reflections)
    pout = trace_arrays(scene, c, np.asarray(rx, float), f, max_reflections)
    loc = pin.arr @ panel.frame.axes
    pin.valid &= loc[..., 2] > 1e-12
    return [(pin.records(n), pout.records(n)) for n in range(panel.size)]


def local_response(panel: RISPanel, n, in_path, out_path, mode="actual"):
    """Global-frame response ``P_out G P_in^T`` of element ``n`` for one path pair."""
    axes = panel.frame.axes
    a = direction_vector(in_path.arrive.theta, in_path.arrive.phi)
    d = direction_vector(out_path.depart.theta, out_path.depart.phi)
    th, ph = direction_angles(a @ axes)
    b = element_currents(_index_desired(panel.desired, n), th, ph, panel.frequency, mode)
    G = radiate_response(b, d @ axes, panel.element_dims, panel.frequency)
    return rotation_matrices(axes, d) @ G @ rotation_matrices(axes, a).T


def panel_cir(panel: RISPanel, scene, tx, rx, mode="actual", include_direct=True, max_reflections=1):
    """Full tap list for one receiver, built element by element."""
    direct = []
    if include_direct:
        pd = trace_arrays(scene, np.asarray(tx, float), np.asarray(rx, float), panel.frequency, max_reflections)
        direct = [(p.gain, p.delay) for p in pd.records()]
    per = []
    for n, (pin, pout) in enumerate(element_subchannels(panel, scene, tx, rx, max_reflections)):
        G = np.zeros((len(pin), len(pout), 2, 2), complex)
        for l, a in enumerate(pin):
            for k, b in enumerate(pout):
                G[l, k] = local_response(panel, n, a, b, mode)
        per.append(cascade_element(pin, G, pout))
    meta = {"type": panel.type_tag, "mode": mode, "elements": panel.size, "direct_taps": len(direct)}
    return assemble(direct, per, meta)


# ---------------------------------------------------------------------------
# CIR export
# ---------------------------------------------------------------------------


def dumps_cir(cir: ChannelImpulseResponse):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CIR_HEADER)
    for t, (g, d) in enumerate(cir.taps):
        row = [str(t)]
        for i in range(2):
            for j in range(2):
                row += [repr(float(g[i, j].real)), repr(float(g[i, j].imag))]
        row.append(repr(float(d)))
        w.writerow(row)
    return buf.getvalue()


def save_cir(cir: ChannelImpulseResponse, dest):
    Path(dest).write_text(dumps_cir(cir), encoding="utf-8")
