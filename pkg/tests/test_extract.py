import numpy as np
import pytest

from sawkit import mbvd
from sawkit.errors import (
    DomainError,
    EmptyBand,
    ResonanceNotBracketed,
    TooFewPoints,
)
from sawkit.extract import (
    CSV_HEADER,
    ExtractOptions,
    admittance_ratio,
    bode_q,
    find_fs_fp,
    fom,
    full_extraction,
    keff2,
    q_max,
    report_csv_row,
    report_to_json,
)
from sawkit.network import AdmittanceTrace, OnePortTrace, s_to_y

from conftest import C_0, F_S, KEFF2, Q_M


def test_keff2_formula():
    # pi^2/8 * (f_p^2 - f_s^2)/f_s^2
    np.testing.assert_allclose(
        keff2(1.0e9, 1.1e9), np.pi**2 / 8.0 * 0.21, rtol=1e-12
    )
    np.testing.assert_allclose(keff2(1.0e9, 1.1e9), 0.2591, atol=1e-4)


def test_keff2_published_operating_point():
    assert abs(keff2(9.05e9, 9.586e9) - 0.150) < 1e-3


def test_keff2_domain():
    with pytest.raises(DomainError):
        keff2(1.1e9, 1.0e9)
    with pytest.raises(DomainError):
        keff2(-1.0, 2.0)


def test_find_fs_fp_on_synthetic(device_trace, device_fp):
    f_s, f_p = find_fs_fp(s_to_y(device_trace))
    np.testing.assert_allclose(f_s, F_S, rtol=5e-4)
    np.testing.assert_allclose(f_p, device_fp, rtol=1e-3)
    # parabolic refinement beats the raw 0.5 MHz grid pitch by a lot
    np.testing.assert_allclose(f_s, 9049060411.2, rtol=1e-6)
    np.testing.assert_allclose(f_p, 9585287284.8, rtol=1e-6)


def test_find_fs_fp_needs_bracketed_peak():
    # plain capacitor: |Y| grows monotonically, maximum sits on the edge
    f = np.linspace(1e9, 2e9, 101)
    trace = AdmittanceTrace(frequencies=f, y=1j * 2 * np.pi * f * 1e-12)
    with pytest.raises(ResonanceNotBracketed):
        find_fs_fp(trace)


def test_find_fs_fp_needs_interior_valley(device_params):
    # grid stops before the anti-resonance: peak is bracketed, valley is not
    grid = np.linspace(8.5e9, 9.2e9, 1001)
    trace = s_to_y(mbvd.synthesize_s11(device_params, grid, z0=50.0))
    with pytest.raises(ResonanceNotBracketed):
        find_fs_fp(trace)


def test_admittance_ratio_plain_numbers():
    trace = AdmittanceTrace(
        frequencies=np.array([1e9, 2e9, 3e9]),
        y=np.array([0.2 + 0j, 2e-4 + 0j, 1e-3 + 0j]),
    )
    ratio = admittance_ratio(trace, 1e9, 2e9)
    np.testing.assert_allclose(ratio.linear, 1000.0, rtol=1e-12)
    np.testing.assert_allclose(ratio.db, 60.0, rtol=1e-12)


def test_admittance_ratio_outside_span():
    trace = AdmittanceTrace(
        frequencies=np.array([1e9, 2e9, 3e9]), y=np.ones(3, complex)
    )
    with pytest.raises(DomainError):
        admittance_ratio(trace, 0.5e9, 2e9)


def test_higher_q_device_has_deeper_contrast(device_trace):
    # same static branch, higher Q_m: the series peak is taller and the
    # anti-resonance dip deeper, so the level contrast must grow
    rep_a = full_extraction(device_trace)
    p_f = mbvd.params_from_metrics(9.34e9, 0.16, 99.0, C_0, r_s=0.5, r_0=0.5)
    grid = np.linspace(0.9 * 9.34e9, 1.1 * mbvd.derived_fp(p_f), 4001)
    rep_f = full_extraction(mbvd.synthesize_s11(p_f, grid, z0=50.0))
    assert rep_a.y_ratio_db > rep_f.y_ratio_db


def test_bode_q_tracks_motional_q():
    # nearly lossless device: Q(f) should read back Q_m at series resonance
    p = mbvd.params_from_metrics(F_S, KEFF2, q_m=200.0, c_0=C_0)
    grid = np.linspace(0.95 * F_S, 1.05 * F_S, 20001)
    trace = mbvd.synthesize_s11(p, grid, z0=50.0)
    q_trace = bode_q(trace)
    assert q_trace.flagged.size == 0
    i_fs = np.argmin(np.abs(q_trace.frequencies - F_S))
    assert abs(q_trace.q[i_fs] - 200.0) / 200.0 < 0.1
    np.testing.assert_allclose(q_trace.q[i_fs], 199.9794, rtol=1e-4)
    np.testing.assert_allclose(q_trace.q.max(), 208.4915, rtol=1e-4)


def test_bode_q_flags_unimodular_reflection():
    p = mbvd.params_from_metrics(F_S, KEFF2, q_m=float("inf"), c_0=C_0)
    grid = np.linspace(0.9 * F_S, 1.1 * mbvd.derived_fp(p), 4001)
    q_trace = bode_q(mbvd.synthesize_s11(p, grid, z0=50.0))
    assert q_trace.frequencies.size == 0
    assert q_trace.flagged.size == grid.size


def test_bode_q_needs_three_points():
    trace = OnePortTrace(
        frequencies=np.array([1e9, 2e9]), s11=np.zeros(2, complex), z0=50.0
    )
    with pytest.raises(TooFewPoints):
        bode_q(trace)


def test_bode_q_smoothing_validation(device_trace):
    with pytest.raises(ValueError):
        bode_q(device_trace, smooth_window=10)
    with pytest.raises(ValueError):
        bode_q(device_trace, smooth_window=3)
    with pytest.raises(ValueError):
        bode_q(device_trace, smooth_window=4003)


def test_bode_q_smoothing_suppresses_noise(device_trace):
    rng = np.random.default_rng(11)
    g = device_trace.frequencies
    noise = 0.002 * (rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size))
    noisy = OnePortTrace(frequencies=g, s11=device_trace.s11 + noise / np.sqrt(2), z0=50.0)
    clean = bode_q(device_trace)
    raw = bode_q(noisy)
    smooth = bode_q(noisy, smooth_window=31)

    def rms_error(q_trace):
        ref = np.interp(q_trace.frequencies, clean.frequencies, clean.q)
        sel = (q_trace.frequencies > 8.9e9) & (q_trace.frequencies < 9.7e9)
        return np.sqrt(np.mean((q_trace.q[sel] - ref[sel]) ** 2))

    assert rms_error(smooth) < 0.25 * rms_error(raw)


def test_bode_q_frequency_scaling_invariance(device_trace):
    q_ref = bode_q(device_trace)
    doubled = OnePortTrace(
        frequencies=2.0 * device_trace.frequencies,
        s11=device_trace.s11.copy(),
        z0=50.0,
    )
    q_scaled = bode_q(doubled)
    np.testing.assert_allclose(q_scaled.q, q_ref.q, rtol=1e-10)
    np.testing.assert_allclose(q_scaled.frequencies, 2.0 * q_ref.frequencies)


def test_q_max_band_selection(device_trace):
    q_trace = bode_q(device_trace)
    full_band = q_max(q_trace, (q_trace.frequencies[0], q_trace.frequencies[-1]))
    assert full_band >= q_max(q_trace, (9.0e9, 9.1e9))
    # a single-sample band returns that sample
    f0 = q_trace.frequencies[2000]
    np.testing.assert_allclose(
        q_max(q_trace, (f0, f0)), q_trace.q[2000], rtol=1e-15
    )


def test_q_max_empty_band(device_trace):
    q_trace = bode_q(device_trace)
    with pytest.raises(EmptyBand):
        q_max(q_trace, (20e9, 30e9))
    # fully flagged trace: every band is empty
    p = mbvd.params_from_metrics(F_S, KEFF2, q_m=float("inf"), c_0=C_0)
    grid = np.linspace(0.9 * F_S, 1.1 * mbvd.derived_fp(p), 2001)
    flagged = bode_q(mbvd.synthesize_s11(p, grid, z0=50.0))
    with pytest.raises(EmptyBand):
        q_max(flagged, (grid[0], grid[-1]))


def test_fom_arithmetic():
    np.testing.assert_allclose(fom(0.15, 213.0), 31.95, rtol=1e-12)
    np.testing.assert_allclose(fom(0.07, 58.0), 4.06, rtol=1e-12)
    with pytest.raises(DomainError):
        fom(-0.1, 100.0)


def test_full_extraction_regression(device_trace):
    rep = full_extraction(device_trace)
    np.testing.assert_allclose(rep.f_s, 9.04906041e9, rtol=1e-7)
    np.testing.assert_allclose(rep.f_p, 9.58528728e9, rtol=1e-7)
    np.testing.assert_allclose(rep.keff2, 0.1505447, rtol=1e-5)
    np.testing.assert_allclose(rep.q_max, 210.5419, rtol=1e-5)
    np.testing.assert_allclose(rep.z0_star, 166.185, atol=0.2)
    np.testing.assert_allclose(rep.fom, rep.keff2 * rep.q_max, rtol=1e-12)
    np.testing.assert_allclose(rep.y_ratio_db, 54.329, atol=5e-3)
    # the Q maximum sits strictly inside the search band, not on an edge
    lo, hi = 0.9 * rep.f_s, 1.1 * rep.f_p
    sel = (rep.q_bode.frequencies >= lo) & (rep.q_bode.frequencies <= hi)
    in_band = rep.q_bode.q[sel]
    k = int(np.argmax(in_band))
    assert 0 < k < in_band.size - 1


def test_full_extraction_is_source_impedance_agnostic(device_params):
    grid = np.linspace(8.5e9, 10.5e9, 4001)
    reference = None
    for z0 in (25.0, 50.0, 75.0, 200.0):
        rep = full_extraction(mbvd.synthesize_s11(device_params, grid, z0=z0))
        values = np.array(
            [rep.f_s, rep.f_p, rep.keff2, rep.q_max, rep.y_ratio, rep.z0_star]
        )
        if reference is None:
            reference = values
        else:
            np.testing.assert_allclose(values, reference, rtol=1e-6)


def test_full_extraction_band_overrides(device_trace):
    opts = ExtractOptions(qmax_band=(9.0e9, 9.1e9))
    rep = full_extraction(device_trace, opts)
    default = full_extraction(device_trace)
    assert rep.q_max <= default.q_max
    assert rep.f_s == default.f_s


def test_report_json_shape(device_trace):
    rep = full_extraction(device_trace)
    obj = report_to_json(rep)
    assert obj["schema_version"] == 1
    for key in (
        "f_s_hz",
        "f_p_hz",
        "keff2",
        "y_ratio",
        "y_ratio_db",
        "q_max",
        "fom",
        "z0_star_ohm",
    ):
        assert isinstance(obj[key], float)
    assert len(obj["q_bode"]["frequency_hz"]) == len(obj["q_bode"]["q"])
    np.testing.assert_allclose(obj["f_s_hz"], rep.f_s)


def test_report_csv_row(device_trace):
    rep = full_extraction(device_trace)
    row = report_csv_row(rep, device="deviceA", lambda_nm=400)
    assert row == "deviceA,400,9.04906,15.0545,210.542,31.696"
    assert CSV_HEADER == "device,lambda_nm,f_s_GHz,keff2_pct,q_max,fom"
