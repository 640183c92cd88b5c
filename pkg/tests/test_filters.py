import numpy as np
import pytest
from scipy.integrate import quad

from stspec import (SequenceSettings, filter_transform, filter_transform_comb,
                    make_layout, passband, schedule_from_shift,
                    schedules_for_register, temporal_coefficient, time_filter)
from stspec.filters import filter_edges, filter_time_transform, schedule_sign


@pytest.fixture
def settings():
    return SequenceSettings(tau_p=1.0, k_p=2.0, n_t=4)


# -- square wave -----------------------------------------------------------

def test_square_wave_values():
    tau = 1.3
    assert time_filter(0.5 * tau, tau) == 1
    assert time_filter(1.5 * tau, tau) == -1
    assert time_filter(0.5 * tau, tau, shift=tau) == -1
    assert time_filter(-0.2 * tau, tau) == 0


def test_square_wave_right_continuous():
    tau = 1.0
    assert time_filter(0.0, tau) == 1
    assert time_filter(tau, tau) == -1
    assert time_filter(2 * tau, tau) == 1
    # shifted: switch exactly at zero belongs to the new half period
    assert time_filter(0.0, tau, shift=tau) == -1


# -- schedules --------------------------------------------------------------

def test_schedule_zero_shift(settings):
    sched = schedule_from_shift(0.0, settings)
    expected = settings.tau_p * np.arange(1, 2 * settings.n_t)
    np.testing.assert_allclose(sched.times, expected)
    assert len(sched.times) == 2 * settings.n_t - 1


def test_schedule_even_case(settings):
    # shift 2.4 tau_p: first pulse at 0.6 tau_p, then every tau_p
    sched = schedule_from_shift(2.4 * settings.tau_p, settings)
    assert sched.times[0] == pytest.approx(0.6 * settings.tau_p)
    np.testing.assert_allclose(np.diff(sched.times), settings.tau_p)
    assert len(sched.times) == 2 * settings.n_t


def test_schedule_odd_case_adds_pulse_at_zero(settings):
    sched = schedule_from_shift(3.4 * settings.tau_p, settings)
    assert sched.times[0] == 0.0
    assert sched.times[1] == pytest.approx(0.6 * settings.tau_p)
    np.testing.assert_allclose(np.diff(sched.times[1:]), settings.tau_p)
    assert len(sched.times) == 2 * settings.n_t + 1
    # the filter indeed starts negative
    assert schedule_sign(sched.times, 0.0) == -1


def test_schedule_matches_filter_at_random_times(settings):
    rng = np.random.default_rng(17)
    for shift in (0.0, 0.3, 1.0, 2.4, 3.4, 5.0, 7.77):
        shift = shift * settings.tau_p
        sched = schedule_from_shift(shift, settings)
        t = rng.uniform(0.0, settings.duration, size=1000)
        np.testing.assert_array_equal(
            schedule_sign(sched.times, t),
            time_filter(t, settings.tau_p, shift))


def test_register_schedules_use_position_shifts(settings):
    lay = make_layout("regular", 2, 1.0).with_repetitions(2)
    scheds = schedules_for_register(lay, settings)
    assert [s.qubit for s in scheds] == [0, 1, 2, 3]
    shift = settings.shift_for(lay.positions()[2])
    expected = schedule_from_shift(shift, settings)
    assert scheds[2].times == expected.times


# -- harmonic weights -------------------------------------------------------

def test_temporal_coefficient_values():
    assert temporal_coefficient(1) == pytest.approx(-2j / np.pi)
    assert temporal_coefficient(2) == 0
    assert temporal_coefficient(0) == 0
    ms = np.arange(-9, 10)
    np.testing.assert_allclose(temporal_coefficient(-ms),
                               np.conj(temporal_coefficient(ms)))


def test_temporal_coefficient_against_quadrature():
    # direct Fourier integral over one period of the square wave
    tau = 0.7
    t0 = 2 * tau
    for m in range(1, 10):
        w = m * np.pi / tau
        re = quad(lambda t: time_filter(t, tau) * np.cos(w * t), 0, t0,
                  points=[tau], limit=200, epsabs=1e-13)[0]
        im = quad(lambda t: time_filter(t, tau) * np.sin(w * t), 0, t0,
                  points=[tau], limit=200, epsabs=1e-13)[0]
        oracle = (re - 1j * im) / t0
        assert abs(oracle - temporal_coefficient(m)) < 1e-10


def test_square_wave_parseval():
    ms = np.arange(-100001, 100002)
    total = np.sum(np.abs(temporal_coefficient(ms)) ** 2)
    assert abs(total - 1.0) < 1e-4
    # partial sums approach 1 like 1/m_max
    small = np.sum(np.abs(temporal_coefficient(np.arange(-9, 10))) ** 2)
    assert 1.0 - small == pytest.approx(4 / (np.pi ** 2 * 10), rel=0.3)


# -- passband kernel ---------------------------------------------------------

def test_passband_special_values():
    w = 3.7
    assert passband(w, 0.0) == pytest.approx(w)
    assert abs(passband(w, 2 * np.pi / w)) < 1e-14
    assert abs(passband(w, np.pi / w)) ** 2 == pytest.approx(
        w ** 2 * (2 / np.pi) ** 2)


def test_passband_matches_quadrature():
    w, u = 2.3, 1.7
    re = quad(lambda s: np.cos(s * u), 0, w, epsabs=1e-14)[0]
    im = quad(lambda s: -np.sin(s * u), 0, w, epsabs=1e-14)[0]
    assert passband(w, u) == pytest.approx(re + 1j * im, abs=1e-12)


def test_passband_requires_positive_width():
    with pytest.raises(ValueError):
        passband(0.0, 1.0)


# -- edge representation ------------------------------------------------------

def test_filter_edges_reconstruct_filter(settings):
    rng = np.random.default_rng(23)
    for shift in (0.0, 0.4, 1.0, 2.0, 3.3):
        edges, jumps = filter_edges(shift * settings.tau_p, settings)
        assert jumps.sum() == pytest.approx(0.0)
        t = rng.uniform(0, settings.duration, size=400)
        rebuilt = (t[:, None] >= edges[None, :]) @ jumps
        np.testing.assert_array_equal(
            rebuilt.astype(int),
            time_filter(t, settings.tau_p, shift * settings.tau_p))


def test_time_transform_small_frequency_limit(settings):
    # w -> 0 limit equals the plain integral of the filter
    edges, jumps = filter_edges(0.7, settings)
    direct = -(jumps @ edges)
    assert filter_time_transform(0.0, 0.7, settings) == pytest.approx(direct)
    assert filter_time_transform(1e-12, 0.7, settings) == pytest.approx(direct,
                                                                        abs=1e-9)


# -- restricted transform -----------------------------------------------------

def brute_force_transform(k, w, layout, settings, rng=None):
    """Numeric 2D transform of the explicit shifted-square-wave filter."""
    out = 0j
    T = settings.duration
    for x, shift in zip(layout.positions(), settings.shift_for(layout.positions())):
        breaks = [j * settings.tau_p - shift
                  for j in range(int(shift / settings.tau_p) - 1,
                                 int((T + shift) / settings.tau_p) + 2)]
        breaks = sorted(b for b in breaks if 0 < b < T)
        re = quad(lambda t: time_filter(t, settings.tau_p, shift) * np.cos(w * t),
                  0, T, points=breaks, limit=400, epsabs=1e-12)[0]
        im = quad(lambda t: time_filter(t, settings.tau_p, shift) * np.sin(w * t),
                  0, T, points=breaks, limit=400, epsabs=1e-12)[0]
        out += np.exp(-1j * k * x) * (re - 1j * im)
    return out


def test_transform_matches_brute_force(paper_layout):
    settings = SequenceSettings(tau_p=0.9, k_p=1.4, n_t=3)
    lay = paper_layout.with_repetitions(2)
    peak = abs(filter_transform(settings.k_p, settings.omega_p, lay, settings))
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(8):
        k = rng.uniform(-2.5, 2.5) * lay.kd
        w = rng.uniform(-3.5, 3.5) * settings.omega_p
        exact = filter_transform(k, w, lay, settings)
        if abs(exact) < 1e-3 * peak:
            continue
        oracle = brute_force_transform(k, w, lay, settings)
        assert abs(exact - oracle) <= 1e-6 * abs(oracle)
        checked += 1
    assert checked >= 5


def test_transform_conjugate_symmetry(paper_layout):
    settings = SequenceSettings(tau_p=1.1, k_p=0.9, n_t=5)
    lay = paper_layout.with_repetitions(3)
    k = np.array([0.3, -1.7, 4.2])
    w = np.array([2.0, 0.6, -3.3])
    np.testing.assert_allclose(filter_transform(-k, -w, lay, settings),
                               np.conj(filter_transform(k, w, lay, settings)),
                               rtol=1e-12)


def test_transform_resonance_dominated_by_first_harmonic(paper_layout):
    settings = SequenceSettings(tau_p=1.0, k_p=np.pi / 1.5, n_t=40)
    lay = paper_layout.with_repetitions(6)
    peak = filter_transform(settings.k_p, settings.omega_p, lay, settings)
    # (m=1, l=0) term alone: c_1 h_T(0) v_0 h_L(0) = c_1 T N
    resonant = temporal_coefficient(1) * settings.duration * lay.n_qubits
    assert abs(peak - resonant) < 0.15 * abs(resonant)


def test_comb_form_selection_rule(paper_layout):
    settings = SequenceSettings(tau_p=0.8, k_p=1.2, n_t=2)
    lay = paper_layout.with_repetitions(3)
    pts = [(0.7, 1.9), (2.0, -0.4), (-1.3, 3.1)]
    for k, w in pts:
        block = filter_transform_comb(k, w, lay, settings, m_max=21, l_max=50)
        full = filter_transform_comb(k, w, lay, settings, m_max=21, l_max=50,
                                     full_register=True)
        assert abs(block - full) < 1e-10


def test_comb_form_converges_toward_exact(paper_layout):
    settings = SequenceSettings(tau_p=0.8, k_p=1.2, n_t=2)
    lay = paper_layout.with_repetitions(2)
    exact = filter_transform(1.1, 2.3, lay, settings)
    coarse = filter_transform_comb(1.1, 2.3, lay, settings, m_max=11, l_max=30)
    fine = filter_transform_comb(1.1, 2.3, lay, settings, m_max=81, l_max=800)
    assert abs(fine - exact) < abs(coarse - exact)
    assert abs(fine - exact) < 0.02 * abs(exact)


# -- settings validation ------------------------------------------------------

def test_settings_validation():
    with pytest.raises(ValueError):
        SequenceSettings(tau_p=0.0, k_p=1.0, n_t=2)
    with pytest.raises(ValueError):
        SequenceSettings(tau_p=1.0, k_p=-0.5, n_t=2)
    with pytest.raises(ValueError):
        SequenceSettings(tau_p=1.0, k_p=1.0, n_t=0)
    s = SequenceSettings(tau_p=2.0, k_p=1.0, n_t=3)
    assert s.omega_p == pytest.approx(np.pi / 2)
    assert s.duration == pytest.approx(12.0)
    assert s.shift_for(3.0) == pytest.approx(1.0 / s.omega_p * 3.0)


def test_negative_shift_rejected(settings):
    with pytest.raises(ValueError):
        schedule_from_shift(-0.1, settings)
