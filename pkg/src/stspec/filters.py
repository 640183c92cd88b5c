"""Pulse schedules, square-wave filter functions, and their Fourier structure.

The time-domain filter is the unit square wave of period ``2 tau_p`` that is
+1 on [0, tau_p) and switches sign at every pulse.  Each qubit's filter is
the same wave advanced by a time shift proportional to the qubit position,
``shift = (k_p / w_p) x``; the register therefore realizes a joint
wavenumber-frequency comb.  The restricted transform

    F(k, w) = integral_0^L dx integral_0^T dt e^{-ikx - iwt} f(x, t)

is evaluated in closed form: each qubit contributes a phase factor times an
exact piecewise integral of its shifted square wave.  This resums the
harmonic double series (temporal weights ``c_m``, spatial comb ``v_l``,
passband kernels ``h_W``) to machine precision; the literal truncated series
is available separately for diagnostics as :func:`filter_transform_comb`.
All filters are right-continuous at switch points.
"""

import dataclasses

import numpy as np

from .register import spatial_coefficient, full_register_coefficient

__all__ = [
    "SequenceSettings",
    "PulseSchedule",
    "time_filter",
    "schedule_from_shift",
    "schedules_for_register",
    "schedule_sign",
    "temporal_coefficient",
    "passband",
    "filter_edges",
    "filter_time_transform",
    "filter_transform",
    "filter_transform_comb",
]


@dataclasses.dataclass(frozen=True)
class SequenceSettings:
    """Pulse-sequence settings shared by every qubit of the register.

    tau_p : pulse interval; the filter frequency is w_p = pi / tau_p.
    k_p   : wavenumber slope tying time shifts to positions (>= 0).
    n_t   : number of base periods; total duration T = 2 n_t tau_p.
    """

    tau_p: float
    k_p: float
    n_t: int

    def __post_init__(self):
        if not (np.isfinite(self.tau_p) and self.tau_p > 0):
            raise ValueError("tau_p must be positive and finite")
        if not np.isfinite(self.k_p) or self.k_p < 0:
            raise ValueError("k_p must be non-negative (coordinate convention)")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ValueError("n_t must be a positive integer")
        object.__setattr__(self, "tau_p", float(self.tau_p))
        object.__setattr__(self, "k_p", float(self.k_p))
        object.__setattr__(self, "n_t", int(self.n_t))

    @property
    def omega_p(self):
        return np.pi / self.tau_p

    @property
    def base_period(self):
        return 2.0 * self.tau_p

    @property
    def duration(self):
        return self.n_t * self.base_period

    def shift_for(self, x):
        """Per-qubit time shift (k_p / w_p) x for position(s) x."""
        return self.k_p / self.omega_p * np.asarray(x, dtype=float)


@dataclasses.dataclass(frozen=True)
class PulseSchedule:
    """Pulse times for one qubit over [0, T].

    Coincident times are kept verbatim: a doubled pulse cancels in the
    induced sign function but is part of the literal sequence protocol.
    """

    qubit: int
    times: tuple

    def sign(self, t, settings=None):
        return schedule_sign(self.times, t)


def time_filter(t, tau_p, shift=0.0):
    """Shifted square-wave filter f(t + shift) in {-1, 0, +1}.

    Zero for t + shift < 0; +1 on [0, tau_p) of every even half-period,
    -1 on odd half-periods; right-continuous at switches.
    """
    s = np.asarray(t, dtype=float) + shift
    j = np.floor(s / tau_p).astype(np.int64)
    out = np.where(j % 2 == 0, 1, -1)
    out = np.where(s < 0, 0, out)
    if np.isscalar(t) or np.ndim(t) == 0:
        return int(out)
    return out


def schedule_from_shift(shift, settings, qubit=0):
    """Pulse sequence generating the filter f(t + shift) on [0, T].

    Zero shift: pulses at tau_p, 2 tau_p, ..., (2 n_t - 1) tau_p.  Positive
    shift decomposed as (m - 1) tau_p + dtau with 0 < dtau <= tau_p: first
    pulse at tau_p - dtau followed by 2 n_t - 1 more every tau_p, plus one
    extra pulse at t = 0 when m - 1 is odd so the filter starts negative.
    """
    if shift < 0:
        raise ValueError("shift must be non-negative")
    tau_p, n_t = settings.tau_p, settings.n_t
    if shift == 0.0:
        times = tau_p * np.arange(1, 2 * n_t)
    else:
        m = int(np.ceil(shift / tau_p - 1e-12))
        m = max(m, 1)
        dtau = shift - (m - 1) * tau_p
        first = tau_p - dtau
        times = first + tau_p * np.arange(2 * n_t)
        if (m - 1) % 2 == 1:
            times = np.concatenate(([0.0], times))
    return PulseSchedule(qubit=qubit, times=tuple(float(t) for t in times))


def schedules_for_register(layout, settings):
    """One schedule per qubit of the full register."""
    shifts = settings.shift_for(layout.positions())
    return [schedule_from_shift(s, settings, qubit=q)
            for q, s in enumerate(shifts)]


def schedule_sign(times, t):
    """Sign function induced by a pulse sequence: starts at +1, flips at
    every pulse, right-continuous (a pulse at exactly t counts)."""
    times = np.asarray(times, dtype=float)
    t = np.asarray(t, dtype=float)
    flips = (times[None, ...] <= t[..., None]).sum(axis=-1) if t.ndim else \
        int((times <= t).sum())
    out = np.where(np.asarray(flips) % 2 == 0, 1, -1)
    return int(out) if np.ndim(t) == 0 else out


def temporal_coefficient(m):
    """Fourier-series weight of the square wave: 2/(i m pi) for odd m, else 0."""
    scalar = np.ndim(m) == 0
    m_arr = np.atleast_1d(np.asarray(m))
    out = np.zeros(m_arr.shape, dtype=complex)
    odd = m_arr % 2 != 0
    out[odd] = 2.0 / (1j * m_arr[odd] * np.pi)
    return complex(out[0]) if scalar else out.reshape(np.shape(m))


def passband(width, u):
    """Passband kernel h_W(u) = integral_0^W e^{-iwu} dw.

    Stable closed form W e^{-iWu/2} sinc(Wu/2) with the u -> 0 limit W.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    u = np.asarray(u, dtype=float)
    half = 0.5 * width * u
    return width * np.exp(-1j * half) * np.sinc(half / np.pi)


def filter_edges(shift, settings):
    """Edge positions and sign jumps of f(t + shift) restricted to [0, T].

    Returns (edges, jumps) with f(t) = sum_k jumps[k] * step(t - edges[k])
    and sum(jumps) = 0.  Interior edges are the switch points
    j tau_p - shift in (0, T); boundary jumps at 0 and T close the support.
    """
    tau_p = settings.tau_p
    T = settings.duration
    j0 = int(np.floor(shift / tau_p + 1e-12))    # half-period index at t = 0
    s0 = 1 if j0 % 2 == 0 else -1
    j_first = j0 + 1
    # largest j with j tau_p - shift < T
    j_last = int(np.ceil((T + shift) / tau_p - 1e-12)) - 1
    n_switch = max(j_last - j_first + 1, 0)
    edges = np.empty(n_switch + 2)
    jumps = np.empty(n_switch + 2)
    edges[0], jumps[0] = 0.0, s0
    edges[1:-1] = tau_p * np.arange(j_first, j_first + n_switch) - shift
    signs = s0 * (-1) ** np.arange(1, n_switch + 1)      # sign after each switch
    jumps[1:-1] = 2 * signs
    last_sign = signs[-1] if n_switch else s0
    edges[-1], jumps[-1] = T, -last_sign
    return edges, jumps


def filter_time_transform(w, shift, settings):
    """Exact restricted transform of one shifted square wave.

    I(w) = integral_0^T e^{-iwt} f(t + shift) dt, vectorized over w.
    """
    edges, jumps = filter_edges(shift, settings)
    w = np.asarray(w, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) * settings.duration < 1e-8
    if np.any(~small):
        wb = w[~small]
        phases = np.exp(-1j * np.multiply.outer(wb, edges))
        out[~small] = phases @ jumps / (1j * wb)
    if np.any(small):
        # series around w = 0: I = -sum J g + (i w / 2) sum J g^2 + O(w^2)
        wb = w[small]
        m1 = -(jumps @ edges)
        m2 = jumps @ edges ** 2
        out[small] = m1 + 0.5j * wb * m2
    return out[0] if scalar else out


def filter_transform(k, w, layout, settings):
    """Restricted transform of the full spatiotemporal filter, exact.

    F(k, w) = sum over qubits of e^{-i k x_q} I_q(w) where I_q is the exact
    time transform of the qubit's shifted square wave.  Equals the resummed
    harmonic double series; satisfies F(-k, -w) = conj(F(k, w)).
    Vectorized over broadcastable (k, w).
    """
    k = np.asarray(k, dtype=float)
    w = np.asarray(w, dtype=float)
    k, w = np.broadcast_arrays(k, w)
    scalar = k.ndim == 0
    kf = np.atleast_1d(k).ravel()
    wf = np.atleast_1d(w).ravel()
    pos = layout.positions()
    shifts = settings.shift_for(pos)
    out = np.zeros(kf.shape, dtype=complex)
    for x, shift in zip(pos, shifts):
        out += np.exp(-1j * kf * x) * filter_time_transform(wf, shift, settings)
    if scalar:
        return complex(out[0])
    return out.reshape(k.shape)


def filter_transform_comb(k, w, layout, settings, m_max=41, l_max=200,
                          full_register=False):
    """Truncated harmonic double series of the restricted transform.

    F ~ sum_{|m| <= m_max, odd} c_m h_T(w - m w_p)
        sum_{|l| <= l_max} v_l h_L(k - m k_p - l k_d)

    The minus sign in the spatial kernel argument follows from the Fourier
    series of the restricted distribution: the coefficient v_l pairs with
    the passband centered at m k_p + l k_d.  (Relabeling l -> -l moves the
    passband to m k_p - l k_d with weight conj(v_l); only |v_l|^2 enters
    the spectroscopic formulas, which are insensitive to the choice.)

    With ``full_register`` the spatial comb uses the whole-register
    coefficients on the fine spacing 2 pi / L (indices up to ns * l_max),
    which must agree with the block form by the selection rule.  Truncation
    converges only polynomially; use :func:`filter_transform` for accurate
    point values.
    """
    k = np.asarray(k, dtype=float)
    w = np.asarray(w, dtype=float)
    k, w = np.broadcast_arrays(k, w)
    scalar = k.ndim == 0
    kf = np.atleast_1d(k).ravel()
    wf = np.atleast_1d(w).ravel()

    T = settings.duration
    L = layout.length
    wp = settings.omega_p
    kp = settings.k_p
    ms = np.arange(-m_max, m_max + 1)
    ms = ms[ms % 2 != 0]
    cm = temporal_coefficient(ms)

    if full_register:
        ls = np.arange(-layout.ns * l_max, layout.ns * l_max + 1)
        vl = full_register_coefficient(layout, ls)
        dk = 2.0 * np.pi / L
    else:
        ls = np.arange(-l_max, l_max + 1)
        vl = spatial_coefficient(layout, ls)
        dk = layout.kd

    out = np.zeros(kf.shape, dtype=complex)
    for m, c in zip(ms, cm):
        # spatial comb for this harmonic: sum_l v_l h_L(k - m k_p - l dk)
        u = kf[:, None] - m * kp - ls[None, :] * dk
        spatial = passband(L, u) @ vl
        out += c * passband(T, wf - m * wp) * spatial
    if scalar:
        return complex(out[0])
    return out.reshape(k.shape)
