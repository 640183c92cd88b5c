"""Statistical models of the noise field.

A model is fully described by its two-dimensional spectral density
``S(k, w)`` over wavenumber ``k`` and angular frequency ``w``.  The spectral
density is the double Fourier transform of the stationary, spatially uniform
autocorrelation ``C(x, t)``:

    S(k, w) = integral dx dt C(x, t) exp(-i k x - i w t)
    C(x, t) = (2 pi)^-2 integral dk dw S(k, w) exp(+i k x + i w t)

Models must be non-negative and symmetric under the joint sign flip
``S(-k, -w) = S(k, w)``; both are validated by sampling at construction.
The mixed representation ``cross_spectrum(x, w)`` (correlation across a
spatial separation of the noise component at a single frequency) is what the
deterministic attenuation engine consumes; it has a closed form for the
factorized Lorentzian model and a numeric fallback otherwise.
"""

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import InvalidModelError

__all__ = [
    "SpectralModel",
    "LorentzianFactorizedModel",
    "lorentzian_line",
    "eval_spectrum",
    "eval_autocorr",
]

# Number of random probe points used by the construction-time sanity check.
_VALIDATION_SAMPLES = 64
_SYMMETRY_RTOL = 1e-9


def lorentzian_line(z):
    """Unit Lorentzian line shape, peak value 2 at z = 0."""
    z = np.asarray(z, dtype=float)
    return 2.0 / (1.0 + z * z)


class SpectralModel:
    """Generic noise-field model defined by a spectral density callable.

    Parameters
    ----------
    evaluate : callable
        ``evaluate(k, w) -> S`` vectorized over numpy arrays.  Units:
        field-variance * length * time.
    autocorr : callable, optional
        ``autocorr(x, t) -> C`` closed form.  When absent, ``eval_autocorr``
        falls back to adaptive Fourier quadrature of ``evaluate``.
    mean : float
        Constant mean value of the field.  The balanced pulse filter removes
        any constant offset, so the mean never enters the attenuation; it is
        stored for completeness.
    correlation_time, correlation_length : float
        Decay scales of the autocorrelation.  Used to size quadrature and
        synthesis grids; must be positive and finite.
    validate : bool
        Sample-check non-negativity and S(-k,-w) = S(k,w) at construction.
    """

    def __init__(self, evaluate, autocorr=None, mean=0.0,
                 correlation_time=1.0, correlation_length=1.0,
                 validate=True, seed=0):
        if not np.isfinite(correlation_time) or correlation_time <= 0:
            raise InvalidModelError(
                f"correlation_time must be positive and finite, got {correlation_time}")
        if not np.isfinite(correlation_length) or correlation_length <= 0:
            raise InvalidModelError(
                f"correlation_length must be positive and finite, got {correlation_length}")
        if not np.isfinite(mean):
            raise InvalidModelError(f"mean must be finite, got {mean}")
        self._evaluate = evaluate
        self._autocorr = autocorr
        self.mean = float(mean)
        self.correlation_time = float(correlation_time)
        self.correlation_length = float(correlation_length)
        if validate:
            self._sample_check(seed)

    # -- contract checks ---------------------------------------------------

    def _sample_check(self, seed):
        rng = np.random.default_rng(seed)
        k = rng.normal(scale=4.0 / self.correlation_length,
                       size=_VALIDATION_SAMPLES)
        w = rng.normal(scale=4.0 / self.correlation_time,
                       size=_VALIDATION_SAMPLES)
        s = np.asarray(self._evaluate(k, w), dtype=float)
        if not np.all(np.isfinite(s)):
            raise InvalidModelError("spectral density evaluated to a non-finite value")
        scale = float(np.max(np.abs(s))) or 1.0
        if np.any(s < -_SYMMETRY_RTOL * scale):
            raise InvalidModelError("spectral density is negative at sampled points")
        mirrored = np.asarray(self._evaluate(-k, -w), dtype=float)
        if np.any(np.abs(s - mirrored) > _SYMMETRY_RTOL * scale):
            raise InvalidModelError(
                "spectral density violates S(-k,-w) = S(k,w) at sampled points")

    @property
    def has_autocorr(self):
        return self._autocorr is not None

    # -- evaluation --------------------------------------------------------

    def evaluate(self, k, w):
        """Spectral density S(k, w), vectorized."""
        return np.asarray(self._evaluate(np.asarray(k, dtype=float),
                                         np.asarray(w, dtype=float)), dtype=float)

    def autocorr(self, x, t, numeric_fallback=True):
        """Autocorrelation C(x, t); numeric inverse transform if no closed form."""
        if self._autocorr is not None:
            return np.asarray(self._autocorr(np.asarray(x, dtype=float),
                                             np.asarray(t, dtype=float)), dtype=float)
        if not numeric_fallback:
            raise InvalidModelError(
                "model has no closed-form autocorrelation and the numeric "
                "inverse transform is disabled")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, t = np.broadcast_arrays(x, t)
        out = np.empty(x.shape, dtype=float)
        for idx in np.ndindex(x.shape):
            out[idx] = self._autocorr_numeric(x[idx], t[idx])
        return out if out.shape else float(out)

    def cross_spectrum(self, x, w):
        """Mixed representation R(x, w) = (2 pi)^-1 integral dk S(k, w) e^{ikx}.

        Complex in general; real when S is even in k alone.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        w = np.atleast_1d(np.asarray(w, dtype=float))
        x, w = np.broadcast_arrays(x, w)
        out = np.empty(x.shape, dtype=complex)
        for idx in np.ndindex(x.shape):
            out[idx] = self._cross_spectrum_numeric(x[idx], w[idx])
        return out

    # -- numeric transforms ------------------------------------------------

    def _fourier_k(self, func, x, epsabs):
        """integral over the real k line of func(k) * e^{ikx} by QUADPACK.

        func must decay at least like 1/k^2.  Oscillatory weights handle the
        infinite range when x != 0.
        """
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            if x == 0.0:
                even = quad(lambda k: func(k) + func(-k), 0.0, np.inf,
                            epsabs=epsabs, limit=400)[0]
                return complex(even, 0.0)
            ax = abs(x)
            re = (quad(lambda k: func(k) + func(-k), 0.0, np.inf,
                       weight="cos", wvar=ax, epsabs=epsabs, limlst=200)[0])
            im = (quad(lambda k: func(k) - func(-k), 0.0, np.inf,
                       weight="sin", wvar=ax, epsabs=epsabs, limlst=200)[0])
        if x < 0.0:
            im = -im
        return complex(re, im)

    def _cross_spectrum_numeric(self, x, w, epsabs=1e-12):
        scale = max(self._probe_scale(), 1e-300)
        val = self._fourier_k(lambda k: self._evaluate(k, w), x,
                              epsabs * scale / self.correlation_length)
        return val / (2.0 * np.pi)

    def _autocorr_numeric(self, x, t, epsabs=1e-9):
        scale = max(self._probe_scale(), 1e-300)
        eps_in = epsabs * scale / self.correlation_time

        def g(k):
            r = self._fourier_w(k, t, eps_in)
            return r

        # outer integral over k of g(k) e^{ikx}; g obeys g(-k) = conj(g(k))
        # only for real S, so integrate real and imaginary parts separately.
        eps_out = epsabs * scale / (self.correlation_time * self.correlation_length)
        val = self._fourier_k_complex(g, x, eps_out)
        return float(np.real(val)) / (2.0 * np.pi) ** 2

    def _fourier_w(self, k, t, epsabs):
        """inner integral over w of S(k, w) e^{iwt}."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            if t == 0.0:
                re = quad(lambda w: self._evaluate(k, w) + self._evaluate(k, -w),
                          0.0, np.inf, epsabs=epsabs, limit=400)[0]
                return complex(re, 0.0)
            at = abs(t)
            re = quad(lambda w: self._evaluate(k, w) + self._evaluate(k, -w),
                      0.0, np.inf, weight="cos", wvar=at, epsabs=epsabs,
                      limlst=200)[0]
            im = quad(lambda w: self._evaluate(k, w) - self._evaluate(k, -w),
                      0.0, np.inf, weight="sin", wvar=at, epsabs=epsabs,
                      limlst=200)[0]
        if t < 0.0:
            im = -im
        return complex(re, im)

    def _fourier_k_complex(self, g, x, epsabs):
        parts = []
        for comp in (lambda k: np.real(g(k)), lambda k: np.imag(g(k))):
            parts.append(self._fourier_k(comp, x, epsabs))
        return parts[0] + 1j * parts[1]

    def _probe_scale(self):
        k = np.linspace(0.0, 4.0 / self.correlation_length, 9)
        w = np.linspace(0.0, 4.0 / self.correlation_time, 9)
        kk, ww = np.meshgrid(k, w)
        return float(np.max(np.abs(self._evaluate(kk, ww))))


class LorentzianFactorizedModel(SpectralModel):
    """Factorized model with mirrored Lorentzian lines in k and w.

    S(k, w) = S_s(k) S_t(w) with

        S_s(k) = nu_s^2 x_c [ L(x_c (k + k_s)) + L(x_c (k - k_s)) ] / 2
        S_t(w) = nu_t^2 t_c [ L(t_c (w + w_s)) + L(t_c (w - w_s)) ] / 2

    where L(z) = 2 / (1 + z^2).  The exact autocorrelation factorizes into
    damped cosines:

        C(x, t) = nu_s^2 nu_t^2 e^{-|x|/x_c} cos(k_s x) e^{-|t|/t_c} cos(w_s t)
    """

    def __init__(self, nu_s=1.0, nu_t=1.0, xc=1.0, tc=1.0, ks=0.0, ws=0.0):
        params = dict(nu_s=nu_s, nu_t=nu_t, xc=xc, tc=tc, ks=ks, ws=ws)
        for name, value in params.items():
            if not np.isfinite(value):
                raise InvalidModelError(f"parameter {name} must be finite, got {value}")
        if xc <= 0 or tc <= 0:
            raise InvalidModelError("correlation scales xc, tc must be positive")
        self.nu_s = float(nu_s)
        self.nu_t = float(nu_t)
        self.xc = float(xc)
        self.tc = float(tc)
        self.ks = float(ks)
        self.ws = float(ws)
        super().__init__(self._spectrum, autocorr=self._autocorr_closed,
                         correlation_time=tc, correlation_length=xc,
                         validate=True)

    def spatial_spectrum(self, k):
        k = np.asarray(k, dtype=float)
        return self.nu_s ** 2 * self.xc * 0.5 * (
            lorentzian_line(self.xc * (k + self.ks))
            + lorentzian_line(self.xc * (k - self.ks)))

    def temporal_spectrum(self, w):
        w = np.asarray(w, dtype=float)
        return self.nu_t ** 2 * self.tc * 0.5 * (
            lorentzian_line(self.tc * (w + self.ws))
            + lorentzian_line(self.tc * (w - self.ws)))

    def spatial_autocorr(self, x):
        x = np.asarray(x, dtype=float)
        return self.nu_s ** 2 * np.exp(-np.abs(x) / self.xc) * np.cos(self.ks * x)

    def temporal_autocorr(self, t):
        t = np.asarray(t, dtype=float)
        return self.nu_t ** 2 * np.exp(-np.abs(t) / self.tc) * np.cos(self.ws * t)

    def _spectrum(self, k, w):
        return self.spatial_spectrum(k) * self.temporal_spectrum(w)

    def _autocorr_closed(self, x, t):
        return self.spatial_autocorr(x) * self.temporal_autocorr(t)

    def cross_spectrum(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        return (self.spatial_autocorr(x) * self.temporal_spectrum(w)).astype(complex)

    def autocorr_numeric(self, x, t, epsabs=1e-9):
        """Force the generic quadrature path (bypassing the closed form)."""
        return self._autocorr_numeric(float(x), float(t), epsabs=epsabs)


def eval_spectrum(model, k, w):
    """Spectral density of ``model`` at (k, w)."""
    return model.evaluate(k, w)


def eval_autocorr(model, x, t, numeric_fallback=True):
    """Autocorrelation of ``model`` at (x, t)."""
    return model.autocorr(x, t, numeric_fallback=numeric_fallback)
