import numpy as np
import pytest
from scipy.integrate import quad

from stspec import (InvalidModelError, LorentzianFactorizedModel,
                    SpectralModel, eval_autocorr, eval_spectrum,
                    lorentzian_line)

TWO_PI = 2.0 * np.pi


def lorentzian_reference(k, w, nu_s, nu_t, xc, tc, ks, ws):
    """Independent spelling of the factorized double-Lorentzian density."""
    line = lambda z: 2.0 / (1.0 + z * z)
    ss = nu_s ** 2 * xc * (line(xc * (k + ks)) + line(xc * (k - ks))) / 2.0
    st = nu_t ** 2 * tc * (line(tc * (w + ws)) + line(tc * (w - ws))) / 2.0
    return ss * st


def test_peak_value_for_well_separated_lines():
    # k_s x_c >> 1 and w_s t_c >> 1: mirror lines are negligible at the peak
    m = LorentzianFactorizedModel(nu_s=1.3, nu_t=0.7, xc=50.0, tc=40.0,
                                  ks=1.0, ws=1.0)
    peak = eval_spectrum(m, m.ks, m.ws)
    expected = m.nu_s ** 2 * m.nu_t ** 2 * m.xc * m.tc
    assert abs(peak / expected - 1.0) < 1e-2


def test_symmetry_at_random_points(paper_model):
    rng = np.random.default_rng(3)
    k = rng.normal(scale=5.0, size=200)
    w = rng.normal(scale=5.0, size=200)
    np.testing.assert_array_equal(eval_spectrum(paper_model, k, w),
                                  eval_spectrum(paper_model, -k, -w))


def test_reference_values_on_reconstruction_grid(paper_model):
    # frozen values of the reference model on points of the sweep grid,
    # computed from the explicit Lorentzian-product formula
    cases = [
        # (k / k_d, w t_c / 2 pi, S)
        (0.20, 0.20, 1.8170965864979376),
        (0.00, 0.20, 0.7489537376338858),
        (0.25, 0.15, 1.4129256240551618),
        (-0.80, 0.45, 0.021451299726985326),
        (1.25, 0.75, 0.002420840797040884),
    ]
    for ku, wu, expected in cases:
        got = eval_spectrum(paper_model, ku * TWO_PI, wu * TWO_PI)
        assert got == pytest.approx(expected, rel=1e-12)
        ref = lorentzian_reference(ku * TWO_PI, wu * TWO_PI, 1.0, 1.0, 1.5,
                                   1.0, 0.2 * TWO_PI, 0.2 * TWO_PI)
        assert got == pytest.approx(ref, rel=1e-14)


def test_autocorr_origin_is_total_variance(paper_model):
    assert eval_autocorr(paper_model, 0.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    # quadrature oracle: C(0,0) = (2 pi)^-2 double integral of S, evaluated
    # via the factor marginals on a wide interval plus analytic tail bound
    for marg, scale in ((paper_model.spatial_spectrum, paper_model.xc),
                        (paper_model.temporal_spectrum, paper_model.tc)):
        cut = 2000.0 / scale
        val = quad(marg, -cut, cut, limit=800)[0] / TWO_PI
        assert val == pytest.approx(1.0, abs=2e-3 / scale * paper_model.xc)
    num = (quad(paper_model.spatial_spectrum, -3000, 3000, limit=1200)[0]
           * quad(paper_model.temporal_spectrum, -3000, 3000, limit=1200)[0]
           / TWO_PI ** 2)
    assert num == pytest.approx(1.0, rel=2e-3)


def test_autocorr_long_time_envelope(paper_model):
    t = 50.0 * paper_model.tc
    for x in (0.0, 0.4, 2.0):
        c = eval_autocorr(paper_model, x, t)
        assert abs(c) <= np.exp(-50.0) * (1.0 + 1e-12)


def test_autocorr_symmetry(paper_model):
    rng = np.random.default_rng(5)
    x = rng.normal(scale=2.0, size=50)
    t = rng.normal(scale=2.0, size=50)
    np.testing.assert_allclose(eval_autocorr(paper_model, x, t),
                               eval_autocorr(paper_model, -x, -t), rtol=1e-14)


def test_numeric_inverse_transform_matches_closed_form(paper_model):
    pts = [(0.0, 0.0), (0.5, 0.3), (1.5, 1.0), (0.3, 0.8)]
    for x, t in pts:
        exact = float(paper_model.autocorr(x, t))
        assert abs(exact) > 1e-3  # stay away from cosine zeros
        num = paper_model.autocorr_numeric(x, t)
        assert num == pytest.approx(exact, rel=1e-6)


def test_generic_model_numeric_autocorr(paper_model):
    # strip the closed form and let the generic nested transform recover it
    generic = SpectralModel(paper_model.evaluate,
                            correlation_time=paper_model.tc,
                            correlation_length=paper_model.xc)
    assert not generic.has_autocorr
    got = eval_autocorr(generic, 0.5, 0.3)
    assert float(got) == pytest.approx(float(paper_model.autocorr(0.5, 0.3)),
                                       rel=1e-6)
    with pytest.raises(InvalidModelError):
        eval_autocorr(generic, 0.5, 0.3, numeric_fallback=False)


def test_generic_cross_spectrum_matches_factorized(paper_model):
    generic = SpectralModel(paper_model.evaluate,
                            correlation_time=paper_model.tc,
                            correlation_length=paper_model.xc)
    for x, w in ((0.0, 1.0), (0.7, 2.5), (-1.2, 0.4)):
        got = generic.cross_spectrum(x, w).item()
        ref = paper_model.cross_spectrum(x, w).item()
        assert got == pytest.approx(ref, rel=1e-7, abs=1e-12)


def test_wiener_khinchin_closure(paper_model):
    # forward transform of the autocorrelation reproduces the density on a
    # 5 x 5 grid; QAWF oracle per factor (the model factorizes)
    ks = np.linspace(-1.5, 1.5, 5) * TWO_PI
    ws = np.linspace(-1.2, 1.2, 5) * TWO_PI

    def forward(corr, arg):
        if arg == 0.0:
            return 2.0 * quad(corr, 0, np.inf, epsabs=1e-13)[0]
        return 2.0 * quad(corr, 0, np.inf, weight="cos", wvar=abs(arg),
                          epsabs=1e-13, limlst=200)[0]

    for k in ks:
        s_s = forward(paper_model.spatial_autocorr, k)
        for w in ws:
            s_t = forward(paper_model.temporal_autocorr, w)
            assert s_s * s_t == pytest.approx(
                float(eval_spectrum(paper_model, k, w)), rel=1e-8)


def test_mean_is_stored_but_defaults_to_zero(paper_model):
    assert paper_model.mean == 0.0
    shifted = SpectralModel(paper_model.evaluate, mean=2.5,
                            correlation_time=1.0, correlation_length=1.5)
    assert shifted.mean == 2.5


def test_invalid_parameters_raise():
    with pytest.raises(InvalidModelError):
        LorentzianFactorizedModel(nu_s=np.nan, xc=1.0, tc=1.0)
    with pytest.raises(InvalidModelError):
        LorentzianFactorizedModel(xc=-1.0, tc=1.0)
    with pytest.raises(InvalidModelError):
        LorentzianFactorizedModel(xc=1.0, tc=0.0)


def test_negative_density_rejected_at_load():
    with pytest.raises(InvalidModelError):
        SpectralModel(lambda k, w: np.cos(k) * np.ones_like(w),
                      correlation_time=1.0, correlation_length=1.0)


def test_asymmetric_density_rejected_at_load():
    bad = lambda k, w: 1.0 / (1.0 + (k - 0.3) ** 2) / (1.0 + w ** 2)
    with pytest.raises(InvalidModelError):
        SpectralModel(bad, correlation_time=1.0, correlation_length=1.0)


def test_line_shape_normalization():
    assert lorentzian_line(0.0) == 2.0
    assert quad(lorentzian_line, -np.inf, np.inf)[0] == pytest.approx(TWO_PI, rel=1e-10)
