"""Folding-arm spring model: closed form, contact integration, identification."""
import numpy as np
import pytest

from foldquad.arm import (ArmState, ContactTimeoutError, DisplacementTrace,
                          SpringParams, advance_arm, analytic_response,
                          fit_spring_params, simulate_contact, spring_derivative)

NOMINAL = SpringParams(b_s=30.0, k_s=500.0)


def random_underdamped(rng, l_max=1e6, delta_l=1e-9):
    wn = rng.uniform(8.0, 40.0)
    zeta = rng.uniform(0.1, 0.8)
    return SpringParams(b_s=2.0 * zeta * wn, k_s=wn * wn,
                        l_max=l_max, delta_l=delta_l)


# -- parameters ---------------------------------------------------------------

def test_derived_frequencies():
    p = NOMINAL
    assert abs(p.omega_n - np.sqrt(500.0)) < 1e-12
    assert abs(p.zeta - 30.0 / (2.0 * np.sqrt(500.0))) < 1e-12
    assert p.is_underdamped


def test_param_validation():
    with pytest.raises(ValueError):
        SpringParams(b_s=-1.0)
    with pytest.raises(ValueError):
        SpringParams(k_s=0.0)
    with pytest.raises(ValueError):
        SpringParams(delta_l=0.05, l_max=0.03)


def test_spring_derivative():
    ldot, lddot = spring_derivative(ArmState(l=0.01, l_dot=0.5), NOMINAL)
    assert ldot == 0.5
    assert abs(lddot - (-30.0 * 0.5 - 500.0 * 0.01)) < 1e-15


# -- analytic_response --------------------------------------------------------

def test_analytic_initial_condition():
    l, l_dot = analytic_response(1.4, NOMINAL, 0.0)
    assert l == 0.0
    assert abs(l_dot - 1.4) < 1e-12


def test_analytic_peak_nominal_params():
    p = NOMINAL
    t_pk = np.arctan2(p.omega_d, p.zeta * p.omega_n) / p.omega_d
    l_pk, l_dot_pk = analytic_response(1.4, p, t_pk)
    assert abs(t_pk - 0.050) < 0.002
    assert abs(l_pk - 0.029) < 0.001
    assert abs(l_dot_pk) < 1e-12  # rate vanishes at the peak


def test_analytic_first_zero_crossing():
    p = NOMINAL
    t_zc = np.pi / p.omega_d
    l, l_dot = analytic_response(1.4, p, t_zc)
    assert abs(l) < 1e-12
    expected = -1.4 * np.exp(-p.zeta * p.omega_n * np.pi / p.omega_d)
    assert abs(l_dot - expected) < 1e-12


def test_analytic_rejects_overdamped():
    with pytest.raises(ValueError):
        analytic_response(1.0, SpringParams(b_s=100.0, k_s=500.0), 0.1)


# -- simulate_contact ---------------------------------------------------------

def test_contact_matches_oracle_small_impact():
    """Unclamped rebound within 2% of the closed-form zero-crossing speed."""
    p = SpringParams(b_s=30.0, k_s=500.0, l_max=1e6, delta_l=1e-9)
    res = simulate_contact(0.2, p, dt=1e-4)
    expected = 0.2 * np.exp(-p.zeta * p.omega_n * np.pi / p.omega_d)
    assert abs(res.v_rb - expected) / expected < 0.02
    assert not res.saturated


def test_contact_nominal_impact_dissipative():
    res = simulate_contact(1.4, NOMINAL, dt=1e-3)
    assert 0.0 < res.v_rb < 1.4
    assert res.duration > 0.0
    assert res.peak_l <= NOMINAL.l_max


def test_contact_tiny_impact_peak():
    p = SpringParams(b_s=30.0, k_s=500.0, l_max=0.03, delta_l=1e-9)
    res = simulate_contact(0.01, p, dt=1e-4)
    t_pk = np.arctan2(p.omega_d, p.zeta * p.omega_n) / p.omega_d
    l_pk, _ = analytic_response(0.01, p, t_pk)
    assert abs(res.peak_l - l_pk) / l_pk < 0.01
    assert not res.saturated


def test_contact_clamp_saturates():
    # large impact drives the arm into the travel stop
    res = simulate_contact(3.0, NOMINAL, dt=1e-4)
    assert res.saturated
    assert res.peak_l == NOMINAL.l_max


def test_contact_input_validation():
    with pytest.raises(ValueError):
        simulate_contact(0.0, NOMINAL)
    with pytest.raises(ValueError):
        simulate_contact(1.0, NOMINAL, dt=2e-3)


def test_contact_timeout_guard():
    # a very soft spring has its first peak far beyond the 1 s guard
    soft = SpringParams(b_s=0.0, k_s=1.0, l_max=1e6, delta_l=1e-3)
    with pytest.raises(ContactTimeoutError):
        simulate_contact(1.0, soft, dt=1e-3)


# -- invariants ---------------------------------------------------------------

def test_energy_monotone_along_contact():
    p = NOMINAL
    l, l_dot = 0.0, 1.4
    energy = 0.5 * l_dot**2
    for _ in range(400):
        l, l_dot, _, exited = advance_arm(l, l_dot, p, 1e-3)
        e_new = 0.5 * l_dot**2 + 0.5 * p.k_s * l**2
        assert e_new <= energy * (1.0 + 1e-9)
        energy = e_new
        if exited:
            break


def test_rebound_strictly_below_impact():
    for v in [0.05, 0.2, 0.8, 1.4, 2.5]:
        res = simulate_contact(v, NOMINAL, dt=1e-4)
        assert res.v_rb < v


def test_rebound_linearity():
    p = SpringParams(b_s=30.0, k_s=500.0, l_max=1e6, delta_l=1e-9)
    u = 0.3
    r1 = simulate_contact(u, p, dt=1e-4)
    r2 = simulate_contact(2.0 * u, p, dt=1e-4)
    assert abs(r2.v_rb / r1.v_rb - 2.0) < 1e-6


def test_lossless_spring_limit():
    p = SpringParams(b_s=0.0, k_s=500.0, l_max=1e6, delta_l=1e-9)
    res = simulate_contact(1.0, p, dt=1e-5)
    assert abs(res.v_rb - 1.0) < 1e-4


# -- fitting ------------------------------------------------------------------

def _synthetic_trace(v0=1.4, p=NOMINAL, n=350, dt=1e-3):
    t = np.arange(n) * dt
    l, _ = analytic_response(v0, p, t)
    return t, l


def test_fit_noise_free_round_trip():
    t, l = _synthetic_trace()
    res = fit_spring_params(DisplacementTrace(t=t, l=l),
                            SpringParams(b_s=20.0, k_s=300.0))
    assert res.converged
    assert abs(res.params.b_s - 30.0) / 30.0 < 0.01
    assert abs(res.params.k_s - 500.0) / 500.0 < 0.01


def test_fit_rejects_constant_trace():
    t = np.arange(50) * 1e-3
    with pytest.raises(ValueError):
        fit_spring_params(DisplacementTrace(t=t, l=np.zeros(50)),
                          SpringParams(b_s=20.0, k_s=300.0))


def test_fit_rejects_monotone_trace():
    t = np.arange(50) * 1e-3
    with pytest.raises(ValueError):
        fit_spring_params(DisplacementTrace(t=t, l=t * 0.1),
                          SpringParams(b_s=20.0, k_s=300.0))


def test_fit_rejects_short_trace():
    t = np.arange(5) * 1e-3
    with pytest.raises(ValueError):
        fit_spring_params(DisplacementTrace(t=t, l=np.sin(40 * t)),
                          SpringParams(b_s=20.0, k_s=300.0))


def test_trace_csv_round_trip(tmp_path):
    t, l = _synthetic_trace(n=50)
    path = tmp_path / "trace.csv"
    path.write_text("t,l\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(t, l)))
    trace = DisplacementTrace.from_csv(path)
    assert np.array_equal(trace.t, t)
    assert np.array_equal(trace.l, l)
    # headerless variant
    path2 = tmp_path / "trace2.csv"
    path2.write_text("\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(t, l)))
    trace2 = DisplacementTrace.from_csv(path2)
    assert np.array_equal(trace2.l, l)


def test_trace_validation():
    with pytest.raises(ValueError):
        DisplacementTrace(t=[0.0, 1.0], l=[0.0])
    with pytest.raises(ValueError):
        DisplacementTrace(t=[0.0, 0.0], l=[0.0, 1.0])
