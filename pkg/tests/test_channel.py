import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.channel import (
    CIR_HEADER,
    POWER_FLOOR_DB,
    RISPanel,
    assemble,
    cascade_element,
    cascade_matrix,
    direct_matrix,
    dumps_cir,
    element_subchannels,
    illuminate,
    narrowband_matrix,
    panel_cir,
    power_db,
    received_power,
)
from rissim.codebook import beamform_phases, configure_type1_reflect, configure_type1_star
from rissim.constants import C0
from rissim.coords import Direction, Frame, direction_angles
from rissim.errors import UnnormalizedWeights
from rissim.gstc import Type1
from rissim.raytrace import FreeSpace, PathRecord, TCorridor, loads_paths, trace

F = 26e9
LAM = C0 / F
PANEL_FRAME = Frame.identity()
TX = 12.0 * Direction.from_degrees(60, 180).vector


def _rec(g, delay):
    return PathRecord(np.asarray(g, complex), delay, Direction(0.5, 0.1), Direction(2.0, 3.0))


def _random_paths(rng, n):
    return [_rec(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)), rng.uniform(1e-9, 1e-7)) for _ in range(n)]


def test_tap_count_lk():
    rng = np.random.default_rng(0)
    taps = cascade_element(_random_paths(rng, 2), np.eye(2), _random_paths(rng, 3))
    assert len(taps) == 6


def test_identity_response_multiplies_path_gains():
    a = _rec(np.diag([2.0, 3.0]), 1e-8)
    b = _rec([[0, 1j], [1, 0]], 3e-8)
    ((g, d),) = cascade_element([a], np.eye(2), [b])
    assert np.array_equal(g, b.gain @ a.gain)
    assert d == pytest.approx(4e-8, abs=1e-20)


def test_two_path_hand_expansion_from_file():
    text = (
        "re_gtt,im_gtt,re_gtp,im_gtp,re_gpt,im_gpt,re_gpp,im_gpp,delay_s,dep_theta_rad,dep_phi_rad,arr_theta_rad,arr_phi_rad\n"
        "0.5,0.0,0.0,0.0,0.0,0.0,-0.5,0.0,1e-8,0.1,0.0,2.0,0.0\n"
        "0.0,0.25,0.0,0.0,0.0,0.0,0.0,-0.25,2e-8,0.2,0.0,2.1,0.0\n"
    )
    ins = loads_paths(text)
    outs = [_rec([[1, 2], [3, 4]], 5e-9)]
    G = np.array([[1 + 1j, 0.5], [-0.5j, 2]])
    taps = cascade_element(ins, G, outs)
    # written out by hand: A (G B_l) with B_1 = diag(.5, -.5), B_2 = diag(.25j, -.25j)
    GB1 = np.array([[0.5 + 0.5j, -0.25], [-0.25j, -1.0]])
    GB2 = np.array([[-0.25 + 0.25j, -0.125j], [0.125, -0.5j]])
    A = np.array([[1, 2], [3, 4]])
    assert np.allclose(taps[0][0], A @ GB1, atol=1e-12) and np.allclose(taps[1][0], A @ GB2, atol=1e-12)
    assert taps[0][1] == pytest.approx(1.5e-8) and taps[1][1] == pytest.approx(2.5e-8)


def test_empty_inputs_give_no_taps():
    assert cascade_element([], np.eye(2), [_rec(np.eye(2), 1e-9)]) == []
    assert len(assemble([], [[]])) == 0


@settings(max_examples=50)
@given(st.integers(0, 5), st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=12), st.integers(0, 2**32 - 1))
def test_tap_count_is_sum_of_lk(n_direct, sizes, seed):
    rng = np.random.default_rng(seed)
    direct = [(p.gain, p.delay) for p in _random_paths(rng, n_direct)]
    per = [cascade_element(_random_paths(rng, L), np.eye(2), _random_paths(rng, K)) for L, K in sizes]
    cir = assemble(direct, per)
    assert len(cir) == sum(L * K for L, K in sizes) + n_direct
    # direct taps first, then element order, no merging
    assert np.array_equal(cir.delays[:n_direct], [d for _, d in direct])


def test_assemble_trivial_cases():
    rng = np.random.default_rng(1)
    el = cascade_element(_random_paths(rng, 2), np.eye(2), _random_paths(rng, 2))
    cir = assemble([], [el])
    assert np.array_equal(cir.gains, [g for g, _ in el])
    d = [(np.eye(2), 1e-9)]
    assert np.array_equal(assemble(d, []).gains, [np.eye(2)])


def test_assemble_counts_a_full_panel():
    rng = np.random.default_rng(2)
    per = [cascade_element(_random_paths(rng, 1), np.eye(2), _random_paths(rng, 1)) for _ in range(900)]
    assert len(assemble([(np.eye(2), 1e-9)] * 3, per)) == 903


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.integers(0, 2**32 - 1))
def test_cascade_is_linear_in_response(c, seed):
    rng = np.random.default_rng(seed)
    ins, outs = _random_paths(rng, 2), _random_paths(rng, 3)
    G = rng.normal(size=(2, 3, 2, 2)) + 1j * rng.normal(size=(2, 3, 2, 2))
    a = cascade_element(ins, G, outs)
    b = cascade_element(ins, c * G, outs)
    for (ga, _), (gb, _) in zip(a, b):
        assert np.allclose(gb, c * ga, rtol=1e-12, atol=1e-300)


def test_received_power_unit_tap():
    cir = assemble([(np.eye(2), 0.0)], [])
    assert received_power(cir, (1, 0), "theta", F) == pytest.approx(0.0, abs=1e-12)
    assert received_power(cir, (1, 0), "phi", F) == POWER_FLOOR_DB


def test_antiphase_taps_cancel():
    cir = assemble([(np.eye(2), 0.0), (np.eye(2), 1 / (2 * F))], [])
    assert received_power(cir, (1, 0), "dual", F) == POWER_FLOOR_DB


def test_weights_must_be_normalised():
    cir = assemble([(np.eye(2), 0.0)], [])
    with pytest.raises(UnnormalizedWeights):
        received_power(cir, (1, 1), "dual", F)
    with pytest.raises(ValueError):
        power_db(np.ones(2), "circular")


# ---------------------------------------------------------------------------
# panel geometry
# ---------------------------------------------------------------------------


def _panel(rows=30, cols=30, desired=None):
    return RISPanel(PANEL_FRAME, rows, cols, LAM / 2, desired, F)


def test_free_space_subchannels():
    p = _panel(desired=Type1(np.full(900, np.sqrt(0.5)), np.full(900, 1j * np.sqrt(0.5))))
    rx = 20.0 * Direction.from_degrees(45, 0).vector
    subs = element_subchannels(p, FreeSpace(), TX, rx, max_reflections=0)
    assert len(subs) == 900 and all(len(i) == 1 and len(o) == 1 for i, o in subs)
    # the panel centre sees the configured 60 degree zenith exactly
    th, _ = direction_angles(TX / np.linalg.norm(TX))
    assert np.degrees(th) == pytest.approx(60.0, abs=1e-12)
    one = element_subchannels(_panel(1, 1, Type1(0.6, 0.8j)), FreeSpace(), TX, rx, 0)
    assert np.degrees(one[0][0][0].arrive.theta) == pytest.approx(60.0, abs=1e-12)


def test_corner_delay_spread_hand_geometry():
    p = _panel(desired=Type1(np.full(900, 0.6), np.full(900, 0.8j)))
    subs = element_subchannels(p, FreeSpace(), TX, TX * 2, max_reflections=0)
    d = np.array([s[0][0].delay for s in subs])
    h = 14.5 * LAM / 2
    # Tx sits at (-12 sin60, 0, 12 cos60): the farthest elements are the
    # corners at x = +h, the nearest are the two middle rows at x = -h
    near = np.linalg.norm(TX - np.array([-h, LAM / 4, 0]))
    far = np.linalg.norm(TX - np.array([h, h, 0]))
    assert d.max() - d.min() == pytest.approx((far - near) / C0, abs=1e-15)


def test_blocked_receiver_gets_nothing():
    sc = TCorridor()
    frame = Frame.from_normal_up((-10, 2.9, 1.5), (0, -1, 0), (0, 0, 1))
    p = RISPanel(frame, 4, 4, LAM / 2, Type1(np.full(16, 0.6), np.full(16, 0.8j)), F)
    tx, rx = np.array([-5.0, 1.5, 1.5]), np.array([0.0, -12.0, 1.5])
    # a receiver deep in the stem sees neither the panel nor the Tx
    rx_shadow = np.array([1.2, -15.0, 1.5])
    subs = element_subchannels(p, sc, tx, rx_shadow, max_reflections=0)
    assert all(len(o) == 0 for _, o in subs)
    ill = illuminate(p, sc, tx, max_reflections=0)
    H = cascade_matrix(p, sc, ill, rx_shadow[None], max_reflections=0)
    assert np.all(H == 0)
    assert trace(sc, tx, rx, 0, F) == []


def test_vectorised_cascade_matches_element_loop():
    sc = TCorridor()
    frame = Frame.from_normal_up((0, 2.9, 1.5), (0, -1, 0), (0, 0, 1))
    tx = np.array([-5.0, 1.0, 1.2])
    p = RISPanel(frame, 3, 4, LAM / 2, None, F)
    d = configure_type1_star(p, tx, Direction.from_vector((1, -0.2, 0)), Direction.from_vector((0.3, 1, 0)))
    p = p.with_desired(d)
    rx = np.array([[6.0, 1.0, 1.6], [3.0, 0.5, 1.1]])
    for mode in ("actual", "ideal"):
        ill = illuminate(p, sc, tx, mode)
        H = cascade_matrix(p, sc, ill, rx) + direct_matrix(sc, tx, rx, F)
        for i, r in enumerate(rx):
            cir = panel_cir(p, sc, tx, r, mode)
            assert len(cir) > p.size
            ref = narrowband_matrix(cir, F)
            assert np.allclose(H[i], ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())


def test_beamformed_beats_mismatched():
    p = _panel()
    rx = 20.0 * Direction.from_degrees(45, 0).vector
    good = p.with_desired(configure_type1_reflect(p, TX, Direction.from_degrees(45, 0)))
    bad = p.with_desired(configure_type1_reflect(p, TX, Direction.from_degrees(20, 0)))
    w = np.array([1, 1]) / np.sqrt(2)
    pw = []
    for panel in (good, bad):
        ill = illuminate(panel, FreeSpace(), TX, max_reflections=0)
        pw.append(power_db(cascade_matrix(panel, FreeSpace(), ill, rx[None], 0) @ w, "dual")[0])
    assert pw[0] > pw[1] + 10


def test_lossless_panel_below_unit_amplitude_bound():
    # |R| = |T| = 1 is not physical but bounds what a lossless split can deliver
    p = _panel(10, 10)
    tgt_r, tgt_t = Direction.from_degrees(45, 0), Direction.from_degrees(135, 0)
    pl = configure_type1_star(p, TX, tgt_r, tgt_t)
    aR, aT = beamform_phases(p, TX, tgt_r), beamform_phases(p, TX, tgt_t)
    ub = Type1(np.exp(1j * aR), np.exp(1j * aT))
    w = np.array([1, 1]) / np.sqrt(2)
    # the bound applies where the beams are steered; elsewhere the
    # projected phases only reshuffle the sidelobes
    rx = np.array([20.0 * tgt_r.vector, 20.0 * tgt_t.vector, 2.0 * tgt_r.vector, 5.0 * tgt_t.vector])
    out = []
    for d in (pl, ub):
        panel = p.with_desired(d)
        ill = illuminate(panel, FreeSpace(), TX, mode="ideal", max_reflections=0)
        out.append(power_db(cascade_matrix(panel, FreeSpace(), ill, rx, 0) @ w, "dual"))
    assert np.all(out[0] <= out[1] + 1e-9)


def test_cir_export_header_and_rows():
    cir = assemble([(np.array([[1, 2j], [3, 4]]), 1e-9)], [[(np.eye(2), 2e-9)]])
    lines = dumps_cir(cir).splitlines()
    assert lines[0].split(",") == CIR_HEADER
    assert lines[1].split(",")[:4] == ["0", "1.0", "0.0", "0.0"]
    assert lines[2].split(",")[0] == "1" and float(lines[2].split(",")[-1]) == 2e-9
