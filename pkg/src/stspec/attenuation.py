"""Attenuation function of the driven register, two independent ways.

The attenuation function is the Gaussian-noise overlap integral

    chi(L, T) = 1/2 (2 pi)^-2 integral dk dw |F(k, w)|^2 S(k, w)

with ``F`` the restricted transform of the spatiotemporal filter.  Two
independent engines evaluate it:

``chi_quadrature``
    Deterministic.  The double filter sum collapses pairwise: writing each
    qubit filter as a sum of sign jumps, chi reduces to jump-weighted values
    of the second antiderivative of the temporal autocorrelation, weighted by
    the spatial correlation at the qubit separations.  For damped-cosine
    autocorrelations (the factorized Lorentzian model) the antiderivative is
    closed form and the result is exact to machine rounding; general models
    fall back to panel quadrature against the pair overlap function.

``chi_monte_carlo``
    Stochastic.  Synthesizes stationary Gaussian field realizations on the
    qubit positions by spectral sampling (midpoint (k, w) grid with
    independent Gaussian amplitudes of variance S dk dw / (2 pi)^2, sampled
    through per-frequency spatial Cholesky factors, which draws from the
    identical field law) and averages the accumulated phase factor
    exp(-i phi).  Reports both -ln|<exp(-i phi)>| and the Gaussian shortcut
    <phi^2>/2 with bootstrap errors.

The spectroscopic formulas (the duration-linear part ``chi_S``, the exact
marginal spectrum ``S*``, its comb approximation, and the two-stage slope)
live here as well.
"""

import dataclasses
import warnings

import numpy as np

from .errors import SynthesisError, TruncationWarning
from .filters import (SequenceSettings, filter_edges, filter_time_transform,
                      temporal_coefficient)
from .register import spatial_coefficient
from .spectra import LorentzianFactorizedModel

__all__ = [
    "AttenuationGrid",
    "MonteCarloResult",
    "chi_quadrature",
    "chi_monte_carlo",
    "chi_spectroscopic",
    "marginal_spectrum_formula",
    "slope_formula",
    "attenuation_grid",
    "synthesize_field",
]

_MC_CHUNK = 128          # fixed chunk of realizations per RNG stream
_MC_MIN_REALIZATIONS = 100
_VARIANCE_CAPTURE_TOL = 0.02


# ---------------------------------------------------------------------------
# deterministic engine
# ---------------------------------------------------------------------------

def _damped_cosine_g2(u, rate, freq):
    """Second antiderivative of exp(-rate |t|) cos(freq t), even in u.

    G2'' = g, G2(0) = G2'(0) = 0; closed complex form with p = rate - i freq.
    """
    p = complex(rate, -freq)
    au = np.abs(u)
    return np.real(au / p + (np.exp(-p * au) - 1.0) / (p * p))


def _register_edges(layout, settings):
    """Edge positions / jumps for every qubit, padded to equal length.

    Returns (edges, jumps) of shape (N, P); padded entries carry zero jump.
    """
    shifts = settings.shift_for(layout.positions())
    per_qubit = [filter_edges(s, settings) for s in shifts]
    pmax = max(e.size for e, _ in per_qubit)
    n = len(per_qubit)
    edges = np.zeros((n, pmax))
    jumps = np.zeros((n, pmax))
    for q, (e, j) in enumerate(per_qubit):
        edges[q, :e.size] = e
        jumps[q, :j.size] = j
    return edges, jumps


def _pair_time_overlaps_exact(layout, settings, rate, freq):
    """Pair matrix W[q, q'] = int int f_q(t) f_q'(t') g(t - t') dt dt'
    for the damped cosine g, via the jump representation:
    W = - sum_{a,b} J_a J'_b G2(e_a - e'_b).
    """
    edges, jumps = _register_edges(layout, settings)
    n, p = edges.shape
    ef, jf = edges.ravel(), jumps.ravel()
    m = ef.size
    w = np.empty((n, n))
    # row-chunked outer difference keeps memory at O(P * N * P)
    for q in range(n):
        d = ef[q * p:(q + 1) * p, None] - ef[None, :]
        g2 = _damped_cosine_g2(d, rate, freq)
        contrib = (jf[q * p:(q + 1) * p, None] * jf[None, :]) * g2
        w[q] = -contrib.reshape(p, n, p).sum(axis=(0, 2))
    return w


def _pair_overlap_function(edges_a, jumps_a, edges_b, jumps_b):
    """Breakpoints and evaluator of K(tau) = int f_a(t) f_b(t - tau) dt."""
    d = np.subtract.outer(edges_a, edges_b).ravel()
    wgt = np.multiply.outer(jumps_a, jumps_b).ravel()
    keep = wgt != 0
    d, wgt = d[keep], wgt[keep]
    breakpoints = np.unique(d)

    def overlap(tau):
        tau = np.asarray(tau, dtype=float)
        ramp = np.maximum(tau[..., None] - d, 0.0)
        return -(ramp @ wgt)

    return breakpoints, overlap


def _gauss_panels(breakpoints, lo, hi, max_width, order=8):
    """Gauss-Legendre nodes/weights on panels aligned with breakpoints."""
    pts = breakpoints[(breakpoints > lo) & (breakpoints < hi)]
    knots = np.unique(np.concatenate(([lo], pts, [hi])))
    xs, ws = [], []
    gx, gw = np.polynomial.legendre.leggauss(order)
    for a, b in zip(knots[:-1], knots[1:]):
        nsub = max(1, int(np.ceil((b - a) / max_width)))
        sub = np.linspace(a, b, nsub + 1)
        for sa, sb in zip(sub[:-1], sub[1:]):
            half = 0.5 * (sb - sa)
            xs.append(0.5 * (sa + sb) + half * gx)
            ws.append(half * gw)
    return np.concatenate(xs), np.concatenate(ws)


def _chi_pairwise_quadrature(model, layout, settings):
    """General-model engine: panel quadrature of C against pair overlaps."""
    edges, jumps = _register_edges(layout, settings)
    pos = layout.positions()
    n = pos.size
    tcut = 80.0 * model.correlation_time
    width = 0.5 * min(model.correlation_time, settings.tau_p)
    total = 0.0
    for qa in range(n):
        for qb in range(qa, n):
            bps, overlap = _pair_overlap_function(edges[qa], jumps[qa],
                                                  edges[qb], jumps[qb])
            lo = max(bps[0], -tcut)
            hi = min(bps[-1], tcut)
            if hi <= lo:
                continue
            taus, wts = _gauss_panels(bps, lo, hi, width)
            dx = pos[qa] - pos[qb]
            vals = model.autocorr(np.full(taus.shape, dx), taus)
            q = float((overlap(taus) * vals) @ wts)
            total += q if qa == qb else 2.0 * q
    return 0.5 * total


def chi_quadrature(model, layout, settings):
    """Attenuation function by the deterministic spectral-overlap route.

    Exact (machine precision) for the factorized Lorentzian model; panel
    quadrature against the model autocorrelation otherwise (the closed-form
    autocorrelation is used when present, the numeric inverse transform of
    the spectrum when not).
    """
    if isinstance(model, LorentzianFactorizedModel):
        w = _pair_time_overlaps_exact(layout, settings,
                                      1.0 / model.tc, model.ws)
        w *= model.nu_t ** 2
        pos = layout.positions()
        cs = model.spatial_autocorr(pos[:, None] - pos[None, :])
        val = 0.5 * float(np.sum(cs * w))
    else:
        val = _chi_pairwise_quadrature(model, layout, settings)
    if val < 0 and val > -1e-10 * (1.0 + abs(val)):
        val = 0.0
    return val


def _chi_grid_exact(model, layout, tau_p, k_p, ns_values, nt_values):
    """Quadrature grid for the factorized model, one pair matrix per n_t.

    The pair matrix at the largest n_s contains every smaller register as a
    leading block, so a 2D prefix sum yields the whole n_s column at once.
    """
    ns_values = np.asarray(ns_values, dtype=int)
    full = layout.with_repetitions(int(ns_values.max()))
    pos = full.positions()
    cs = model.spatial_autocorr(pos[:, None] - pos[None, :])
    out = np.empty((ns_values.size, len(nt_values)))
    for j, nt in enumerate(nt_values):
        settings = SequenceSettings(tau_p=tau_p, k_p=k_p, n_t=int(nt))
        w = _pair_time_overlaps_exact(full, settings, 1.0 / model.tc, model.ws)
        cw = cs * w * model.nu_t ** 2
        block = cw.reshape(full.ns, layout.n0, full.ns, layout.n0).sum(axis=(1, 3))
        prefix = block.cumsum(axis=0).cumsum(axis=1)
        for i, ns in enumerate(ns_values):
            out[i, j] = max(0.5 * prefix[ns - 1, ns - 1], 0.0)
    return out


# ---------------------------------------------------------------------------
# spectroscopic formulas
# ---------------------------------------------------------------------------

def marginal_spectrum(model, layout, m, settings):
    """Exact finite-register marginal spectral density S*(m w_p | ns L0).

    Pairwise reduction of the wavenumber-comb overlap:
    S* = sum_{q,q'} e^{i m k_p dx} R(-dx, m w_p) with R the cross spectrum.
    """
    pos = layout.positions()
    dx = (pos[:, None] - pos[None, :]).ravel()
    r = model.cross_spectrum(-dx, m * settings.omega_p)
    phase = np.exp(1j * m * settings.k_p * dx)
    return float(np.real(np.sum(phase * r)))


def chi_spectroscopic(model, layout, settings, m_max=41, tail_tol=0.01):
    """Duration-linear part of the attenuation function.

    chi_S = (n_t T_0 / 2) sum_{odd |m| <= m_max} |c_m|^2 S*(m w_p | ns L0),
    folded onto positive m by the spectral symmetry.  Emits a
    TruncationWarning when the estimated harmonic tail exceeds ``tail_tol``
    of the retained sum.
    """
    ms = np.arange(1, m_max + 1, 2)
    weights = np.abs(temporal_coefficient(ms)) ** 2
    svals = np.array([marginal_spectrum(model, layout, int(m), settings)
                      for m in ms])
    partial = settings.duration * float(weights @ svals)
    tail = settings.duration * weights[-1] * abs(svals[-1]) * ms[-1] / 2.0
    if partial != 0.0 and tail > tail_tol * abs(partial):
        warnings.warn(
            f"harmonic tail estimate {tail:.3g} exceeds {tail_tol:.1%} of "
            f"chi_S = {partial:.6g}; raise m_max", TruncationWarning)
    return partial


def marginal_spectrum_formula(model, layout, m, settings, l_max=200):
    """Register-length-linear comb approximation S*_S of the marginal.

    S*_S = ns L0 sum_{|l| <= l_max} |v_l|^2 S(m k_p - l k_d, m w_p)
    """
    ls = np.arange(-l_max, l_max + 1)
    weights = np.abs(spatial_coefficient(layout, ls)) ** 2
    svals = model.evaluate(m * settings.k_p - ls * layout.kd,
                           np.full(ls.shape, m * settings.omega_p))
    return layout.length * float(weights @ svals)


def slope_formula(model, layout, k_p, omega_p, m_max=41, l_max=200):
    """Asymptotic two-stage slope A(k_p, w_p) of the attenuation data.

    A = sum_{odd m >= 1} |c_m|^2 sum_l |v_l|^2 S(m k_p - l k_d, m w_p)
    """
    ms = np.arange(1, m_max + 1, 2)
    cw = np.abs(temporal_coefficient(ms)) ** 2
    ls = np.arange(-l_max, l_max + 1)
    vw = np.abs(spatial_coefficient(layout, ls)) ** 2
    kk = ms[:, None] * k_p - ls[None, :] * layout.kd
    ww = np.broadcast_to((ms * omega_p)[:, None], kk.shape)
    svals = model.evaluate(kk, ww)
    return float(cw @ (svals @ vw))


# ---------------------------------------------------------------------------
# Monte-Carlo engine
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class MonteCarloResult:
    """Monte-Carlo attenuation estimate with bootstrap uncertainties."""

    chi: float
    stderr: float
    chi_gaussian: float
    stderr_gaussian: float
    stderr_difference: float
    realizations: int
    variance_capture: float


def _mc_grid(model, layout, settings, m_max, oversample, k_extent):
    """Midpoint (k, w) synthesis grid covering the retained passbands."""
    T = settings.duration
    L = layout.length
    dw = 2.0 * np.pi / (oversample * T)
    w_extent = (m_max + 1) * settings.omega_p
    nhw = int(np.ceil(w_extent / dw))
    w_nodes = (np.arange(-nhw, nhw) + 0.5) * dw
    dk = 2.0 * np.pi / (oversample * L)
    if k_extent is None:
        k_extent = ((m_max + 1) * settings.k_p
                    + max(8.0 * layout.kd, 40.0 / model.correlation_length))
    nhk = int(np.ceil(k_extent / dk))
    k_nodes = (np.arange(-nhk, nhk) + 0.5) * dk
    return w_nodes, dw, k_nodes, dk


def _mc_covariances(model, layout, w_nodes, dw, k_nodes, dk):
    """Per-frequency spatial covariance blocks of the synthesized field.

    Sigma[i] = sum_j var_j cos(k_j dx),  Gamma[i] = sum_j var_j sin(k_j dx)
    with var_j = S(k_j, w_i) dk dw / (2 pi)^2.
    """
    pos = layout.positions()
    n = pos.size
    dx = (pos[:, None] - pos[None, :]).ravel()
    cosm = np.cos(np.multiply.outer(k_nodes, dx))
    sinm = np.sin(np.multiply.outer(k_nodes, dx))
    scale = dk * dw / (2.0 * np.pi) ** 2
    kk, ww = np.broadcast_arrays(k_nodes[None, :], w_nodes[:, None])
    svals = np.asarray(model.evaluate(kk, ww)) * scale
    sigma = (svals @ cosm).reshape(-1, n, n)
    gamma = (svals @ sinm).reshape(-1, n, n)
    return sigma, gamma


def _mc_cholesky(sigma, gamma):
    """Stacked Cholesky factors of [[Sigma, Gamma], [Gamma^T, Sigma]]."""
    nw, n, _ = sigma.shape
    m = np.empty((nw, 2 * n, 2 * n))
    m[:, :n, :n] = sigma
    m[:, n:, n:] = sigma
    m[:, :n, n:] = gamma
    m[:, n:, :n] = np.transpose(gamma, (0, 2, 1))
    jitter = 1e-12 * np.trace(sigma, axis1=1, axis2=2) / n
    m[:, np.arange(2 * n), np.arange(2 * n)] += jitter[:, None]
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        # clip tiny negative eigenvalues from roundoff
        vals, vecs = np.linalg.eigh(m)
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)[:, None, :]


def _mc_setup(model, layout, settings, m_max, oversample, k_extent):
    w_nodes, dw, k_nodes, dk = _mc_grid(model, layout, settings, m_max,
                                        oversample, k_extent)
    sigma, gamma = _mc_covariances(model, layout, w_nodes, dw, k_nodes, dk)
    variance = float(sigma.sum(axis=0)[0, 0])
    c00 = float(model.autocorr(0.0, 0.0))
    if c00 <= 0.0:
        capture = 1.0 if variance <= 1e-30 else np.nan
    else:
        capture = variance / c00
    if not np.isfinite(capture) or abs(capture - 1.0) > _VARIANCE_CAPTURE_TOL:
        raise SynthesisError(
            f"synthesis grid captures {capture:.4f} of the field variance "
            f"(C(0,0) = {c00:.6g}); widen the grid extents")
    chol = _mc_cholesky(sigma, gamma)
    return w_nodes, chol, capture


def chi_monte_carlo(model, layout, settings, realizations, seed,
                    m_max=41, oversample=8, k_extent=None, bootstrap=200,
                    _stream_key=()):
    """Monte-Carlo attenuation estimate from synthesized field trajectories.

    Each realization accumulates the register phase
    phi = sum_q int f_q(t) xi(x_q, t) dt, integrated per harmonic in closed
    form; the estimate is -ln|<exp(-i phi)>| with a bootstrap standard
    error.  The Gaussian shortcut <phi^2>/2 is recorded alongside.

    Raises SynthesisError when the synthesis grid misses more than 2 percent
    of the total field variance.
    """
    if realizations < _MC_MIN_REALIZATIONS:
        raise ValueError(f"realizations must be >= {_MC_MIN_REALIZATIONS}")
    w_nodes, chol, capture = _mc_setup(model, layout, settings, m_max,
                                       oversample, k_extent)
    pos = layout.positions()
    shifts = settings.shift_for(pos)
    n = pos.size
    # projection of each (cos, sin) field coefficient onto the phase
    it = np.stack([filter_time_transform(w_nodes, s, settings) for s in shifts])
    proj = np.concatenate([np.real(it), -np.imag(it)], axis=0)  # (2N, nw)
    wvec = np.einsum("wij,iw->wj", chol, proj).ravel()          # (nw * 2N,)

    dim = wvec.size
    phi = np.empty(realizations)
    done = 0
    chunk_idx = 0
    while done < realizations:
        take = min(_MC_CHUNK, realizations - done)
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=seed, spawn_key=(*_stream_key, chunk_idx)))
        z = rng.standard_normal((take, dim))
        phi[done:done + take] = z @ wvec
        done += take
        chunk_idx += 1

    cosp, sinp = np.cos(phi), np.sin(phi)
    mean_re, mean_im = cosp.mean(), sinp.mean()
    chi = -0.5 * np.log(mean_re ** 2 + mean_im ** 2)
    chi_gauss = 0.5 * float(np.mean(phi ** 2))

    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=(*_stream_key, 2 ** 31)))
    idx = rng.integers(0, realizations, size=(bootstrap, realizations))
    bre = cosp[idx].mean(axis=1)
    bim = sinp[idx].mean(axis=1)
    bchi = -0.5 * np.log(bre ** 2 + bim ** 2)
    bgauss = 0.5 * (phi ** 2)[idx].mean(axis=1)
    return MonteCarloResult(
        chi=float(chi),
        stderr=float(bchi.std(ddof=1)),
        chi_gaussian=chi_gauss,
        stderr_gaussian=float(bgauss.std(ddof=1)),
        stderr_difference=float((bchi - bgauss).std(ddof=1)),
        realizations=int(realizations),
        variance_capture=float(capture),
    )


def synthesize_field(model, layout, settings, realizations, seed, t_grid,
                     m_max=41, oversample=8, k_extent=None):
    """Sample stationary field realizations at the qubit positions.

    Returns an array of shape (realizations, N, len(t_grid)) drawn from the
    same law as the Monte-Carlo engine; intended for statistical diagnostics
    of the synthesis (stationarity, autocorrelation checks).
    """
    w_nodes, chol, _ = _mc_setup(model, layout, settings, m_max,
                                 oversample, k_extent)
    t_grid = np.asarray(t_grid, dtype=float)
    n = layout.positions().size
    nw = w_nodes.size
    cos_t = np.cos(np.multiply.outer(w_nodes, t_grid))   # (nw, nt)
    sin_t = np.sin(np.multiply.outer(w_nodes, t_grid))
    out = np.empty((realizations, n, t_grid.size))
    done = 0
    chunk_idx = 0
    while done < realizations:
        take = min(_MC_CHUNK, realizations - done)
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=seed, spawn_key=(chunk_idx,)))
        z = rng.standard_normal((take, nw, 2 * n))
        coeff = np.einsum("wij,rwj->rwi", chol, z)       # (take, nw, 2N)
        a, b = coeff[:, :, :n], coeff[:, :, n:]
        out[done:done + take] = (np.einsum("rwq,wt->rqt", a, cos_t)
                                 + np.einsum("rwq,wt->rqt", b, sin_t))
        done += take
        chunk_idx += 1
    return out


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class AttenuationGrid:
    """Attenuation data matrix over register repetitions and pulse periods."""

    tau_p: float
    k_p: float
    period: float
    ns_values: tuple
    nt_values: tuple
    chi: np.ndarray
    stderr: np.ndarray
    method: str

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float)
        err = np.asarray(self.stderr, dtype=float)
        expected = (len(self.ns_values), len(self.nt_values))
        if chi.shape != expected or err.shape != expected:
            raise ValueError(f"grid shape {chi.shape} != {expected}")
        if np.any(chi < -1e-10 * max(np.max(np.abs(chi)), 1e-300)):
            raise ValueError("attenuation values must be non-negative")
        object.__setattr__(self, "ns_values", tuple(int(v) for v in self.ns_values))
        object.__setattr__(self, "nt_values", tuple(int(v) for v in self.nt_values))
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "stderr", err)

    @property
    def durations(self):
        return 2.0 * self.tau_p * np.asarray(self.nt_values, dtype=float)

    @property
    def lengths(self):
        return self.period * np.asarray(self.ns_values, dtype=float)


def attenuation_grid(model, layout, tau_p, k_p, ns_values, nt_values,
                     method="quadrature", realizations=10000, seed=None,
                     **mc_kwargs):
    """Build the (n_s, n_t) attenuation data matrix for one filter setting.

    ``layout`` supplies the block; its repetition count is overridden by the
    values in ``ns_values``.  Monte-Carlo entries use independent RNG
    streams keyed by (seed, n_s, n_t) so results do not depend on traversal
    order; the seed is then mandatory.
    """
    ns_values = [int(v) for v in ns_values]
    nt_values = [int(v) for v in nt_values]
    if min(ns_values) < 1 or min(nt_values) < 1:
        raise ValueError("ns and nt values must be positive")
    shape = (len(ns_values), len(nt_values))
    err = np.zeros(shape)
    if method == "quadrature":
        if isinstance(model, LorentzianFactorizedModel):
            chi = _chi_grid_exact(model, layout, tau_p, k_p, ns_values, nt_values)
        else:
            chi = np.empty(shape)
            for i, ns in enumerate(ns_values):
                lay = layout.with_repetitions(ns)
                for j, nt in enumerate(nt_values):
                    settings = SequenceSettings(tau_p=tau_p, k_p=k_p, n_t=nt)
                    chi[i, j] = chi_quadrature(model, lay, settings)
    elif method == "monte_carlo":
        if seed is None:
            raise ValueError("monte_carlo grids require a seed")
        chi = np.empty(shape)
        for i, ns in enumerate(ns_values):
            lay = layout.with_repetitions(ns)
            for j, nt in enumerate(nt_values):
                settings = SequenceSettings(tau_p=tau_p, k_p=k_p, n_t=nt)
                res = chi_monte_carlo(model, lay, settings, realizations,
                                      seed, _stream_key=(ns, nt), **mc_kwargs)
                chi[i, j] = res.chi
                err[i, j] = res.stderr
    else:
        raise ValueError(f"unknown method {method!r}")
    return AttenuationGrid(tau_p=float(tau_p), k_p=float(k_p),
                           period=layout.period, ns_values=tuple(ns_values),
                           nt_values=tuple(nt_values), chi=chi, stderr=err,
                           method=method)
