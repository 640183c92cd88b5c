"""Two-stage linear-fit slope extraction and comb deconvolution.

The attenuation data matrix over (n_s, n_t) carries the spectroscopic
content in its asymptotic slopes: fitting the tail of chi against the
duration for each register length gives per-length slopes, whose own tail
against the length gives the setting slope A(k_p, w_p).  Arranged over the
harmonic settings (m (k_0 + l k_d), m w_0), the slopes are a known linear
image of the spectral density sampled on the comb; inverting the truncated
harmonic-weight matrix and the truncated comb-weight matrices (the
Alvarez-Suter step) recovers the sampled spectral values.
"""

import dataclasses

import numpy as np

from .errors import (IllConditionedError, NoLinearTrendError,
                     ReconstructionImpossibleError)
from .register import spatial_coefficient

__all__ = [
    "LinearTailFit",
    "SlopesResult",
    "SlopeMatrix",
    "ReconstructedPoint",
    "ReconstructionResult",
    "fit_linear_tail",
    "slopes_from_grid",
    "build_U",
    "build_U_inverse",
    "build_V",
    "build_V_inverse",
    "choose_index_set",
    "alvarez_suter",
]

_DEFAULT_THRESHOLD = 1e-4
_DEFAULT_COND_LIMIT = 1e8


# ---------------------------------------------------------------------------
# linear tail fits
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class LinearTailFit:
    """Result of a scanned-cutoff least-squares tail fit."""

    slope: float
    intercept: float
    cutoff: int
    residual_per_dof: float
    n_used: int
    decay_scale: "float | None" = None   # envelope scale of pre-cutoff residuals


def _ols(x, y):
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    denom = float(dx @ dx)
    slope = float(dx @ (y - ym)) / denom
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    return slope, intercept, float(resid @ resid)


def _envelope_scale(x, resid):
    """Exponential decay scale of the |resid| envelope (informational).

    Fits log of the local maxima of |resid| so the oscillation's zero
    crossings do not bias the scale.
    """
    mag = np.abs(resid)
    floor = 1e-9 * max(mag.max(), 1e-300)
    peaks = [0] if mag.size and mag[0] > floor else []
    for i in range(1, mag.size - 1):
        if mag[i] > floor and mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1]:
            peaks.append(i)
    if len(peaks) < 3:
        keep = mag > floor
        if keep.sum() < 3:
            return None
        xs, ys = x[keep], np.log(mag[keep])
    else:
        xs, ys = x[peaks], np.log(mag[peaks])
    slope, _, _ = _ols(xs, ys)
    if slope >= 0:
        return None
    return -1.0 / slope


def fit_linear_tail(x, y, min_points=3, threshold=_DEFAULT_THRESHOLD,
                    abs_floor=None):
    """Least-squares line on the tail of (x, y), cutoff chosen by scan.

    Every cutoff keeping at least ``min_points`` points is fitted by
    ordinary least squares; the cutoff minimizing the residual variance per
    degree of freedom wins (ties toward the smallest cutoff).  The fit is
    accepted when that residual is at most ``threshold * (slope * span)^2``
    (span = x range of the kept points) or the absolute floor; otherwise a
    NoLinearTrendError is raised - the self-diagnosis that the data never
    settles onto a linear trend.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be equal-length 1D arrays")
    if min_points < 3:
        raise ValueError("min_points must be at least 3")
    n = x.size
    if n < min_points + 2:
        raise ValueError(f"need at least min_points + 2 = {min_points + 2} "
                         f"points, got {n}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")

    best = None
    for cutoff in range(0, n - min_points + 1):
        xs, ys = x[cutoff:], y[cutoff:]
        if xs.size < 3:
            break
        slope, intercept, ssr = _ols(xs, ys)
        rpd = ssr / (xs.size - 2)
        if best is None or rpd < best[0] * (1.0 - 1e-12):
            best = (rpd, cutoff, slope, intercept, xs.size)

    rpd, cutoff, slope, intercept, n_used = best
    span = x[-1] - x[cutoff]
    if abs_floor is None:
        abs_floor = (1e-10 * max(np.max(np.abs(y)), 1e-300)) ** 2
    accept = threshold * (slope * span) ** 2 + abs_floor
    if rpd > accept:
        raise NoLinearTrendError(
            f"best tail fit residual/dof {rpd:.3g} exceeds acceptance "
            f"{accept:.3g}; no linear trend emerged")

    decay = None
    if cutoff >= 3:
        pre = y[:cutoff] - (slope * x[:cutoff] + intercept)
        decay = _envelope_scale(x[:cutoff], pre)
    return LinearTailFit(slope=slope, intercept=intercept, cutoff=cutoff,
                         residual_per_dof=rpd, n_used=n_used,
                         decay_scale=decay)


@dataclasses.dataclass(frozen=True)
class SlopesResult:
    """Two-stage slope extraction from one attenuation grid."""

    slope: float                       # A(k_p, w_p)
    row_slopes: np.ndarray             # a_{n_s}
    row_fits: tuple
    length_fit: LinearTailFit
    correlation_time_estimate: "float | None"
    correlation_length_estimate: "float | None"


def slopes_from_grid(grid, min_points=4, threshold=_DEFAULT_THRESHOLD):
    """Extract the setting slope A(k_p, w_p) from an attenuation grid.

    Stage 1 fits chi against the duration T for every register length,
    stage 2 fits those slopes against the length L.  Intercepts are
    discarded; pre-cutoff residual envelopes give informational estimates of
    the correlation time (stage 1) and length (stage 2).  Propagates
    NoLinearTrendError tagged with the failing stage.
    """
    if len(grid.nt_values) < 5 or len(grid.ns_values) < 5:
        raise ValueError("grid needs at least 5 values along each axis")
    durations = grid.durations
    row_fits = []
    for i, ns in enumerate(grid.ns_values):
        try:
            fit = fit_linear_tail(durations, grid.chi[i], min_points=min_points,
                                  threshold=threshold)
        except NoLinearTrendError as err:
            raise NoLinearTrendError(
                f"stage 1 (duration) fit failed for n_s = {ns}: {err}",
                stage="T", row=ns) from err
        row_fits.append(fit)
    row_slopes = np.array([f.slope for f in row_fits])

    lengths = grid.lengths
    try:
        length_fit = fit_linear_tail(lengths, row_slopes, min_points=min_points,
                                     threshold=threshold)
    except NoLinearTrendError as err:
        raise NoLinearTrendError(
            f"stage 2 (length) fit failed: {err}", stage="L") from err

    tc_estimates = [f.decay_scale for f in row_fits if f.decay_scale]
    return SlopesResult(
        slope=length_fit.slope,
        row_slopes=row_slopes,
        row_fits=tuple(row_fits),
        length_fit=length_fit,
        correlation_time_estimate=(float(np.median(tc_estimates))
                                   if tc_estimates else None),
        correlation_length_estimate=length_fit.decay_scale,
    )


# ---------------------------------------------------------------------------
# Alvarez-Suter deconvolution
# ---------------------------------------------------------------------------

def _odd_indices(m_c):
    if m_c < 1 or m_c % 2 == 0:
        raise ValueError("m_c must be a positive odd integer")
    return np.arange(1, m_c + 1, 2)


def build_U(m_c):
    """Harmonic-weight matrix over odd indices 1..m_c.

    U[m, m'] = 4 / (pi^2 n^2) when m' = n m for a positive integer n, else 0;
    upper triangular in this ordering, hence always invertible.
    """
    ms = _odd_indices(m_c)
    u = np.zeros((ms.size, ms.size))
    for i, m in enumerate(ms):
        for j, mp in enumerate(ms):
            if mp % m == 0:
                n = mp // m
                u[i, j] = 4.0 / (np.pi ** 2 * n ** 2)
    return u


def build_U_inverse(m_c):
    """Exact inverse of the truncated harmonic-weight matrix."""
    u = build_U(m_c)
    return np.linalg.inv(u)


def choose_index_set(layout, m, l_c, strategy="centered", l_scan=None):
    """Comb indices retained for the harmonic ``m`` deconvolution.

    centered        {-l_c/2, ..., +l_c/2} (requires even l_c)
    largest_weights indices of the l_c + 1 largest |v_l|^2 within
                    |l| <= l_scan, ties toward smaller |l|
    """
    if l_c < 0:
        raise ValueError("l_c must be non-negative")
    if l_c == 0:
        return (0,)
    if strategy == "centered":
        if l_c % 2 != 0:
            raise ValueError("centered index set requires an even l_c")
        half = l_c // 2
        return tuple(range(-half, half + 1))
    if strategy == "largest_weights":
        if l_scan is None:
            l_scan = max(8 * (l_c + 1), 32)
        ls = np.arange(-l_scan, l_scan + 1)
        w = np.abs(spatial_coefficient(layout, ls)) ** 2
        order = np.lexsort((ls, np.abs(ls), -w))
        chosen = sorted(int(ls[i]) for i in order[:l_c + 1])
        return tuple(chosen)
    raise ValueError(f"unknown strategy {strategy!r}")


def build_V(layout, m, l_c, index_set):
    """Comb-weight matrix V[l, j] = |v_{(l'_j + m l) k_d}|^2.

    Rows l = 0..l_c follow the wavenumber offsets of the slope dataset;
    columns run over the retained spectral indices.
    """
    index_set = tuple(index_set)
    if len(index_set) != l_c + 1:
        raise ValueError("index set size must equal l_c + 1")
    if len(set(index_set)) != len(index_set):
        raise ValueError("index set entries must be distinct")
    rows = np.arange(l_c + 1)
    idx = np.asarray(index_set)[None, :] + m * rows[:, None]
    return np.abs(spatial_coefficient(layout, idx)) ** 2


def build_V_inverse(layout, m, l_c, index_set, cond_limit=_DEFAULT_COND_LIMIT):
    """Inverse comb-weight matrix, guarded by its condition number.

    Raises IllConditionedError naming the harmonic and index set when the
    condition number exceeds ``cond_limit`` - the failure mode of regular
    layouts whose comb weights revive with period <= l_c.
    """
    v = build_V(layout, m, l_c, index_set)
    cond = float(np.linalg.cond(v))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"comb-weight matrix for m = {m} with indices {tuple(index_set)} "
            f"has condition number {cond:.3g} > {cond_limit:.3g}",
            m=m, index_set=index_set, cond=cond)
    return np.linalg.inv(v), cond


@dataclasses.dataclass(frozen=True)
class SlopeMatrix:
    """Slope dataset for one primary setting (k_0, w_0).

    Entry [i, l] holds A(m_i (k_0 + l k_d), m_i w_0) for odd m_i and
    l = 0..l_c, with optional per-entry fit quality (residual/dof).
    """

    k0: float
    omega0: float
    m_c: int
    values: np.ndarray
    fit_residuals: np.ndarray = None

    def __post_init__(self):
        ms = _odd_indices(self.m_c)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != ms.size:
            raise ValueError(
                f"values must have {ms.size} rows (odd m up to {self.m_c})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("slope matrix has non-finite entries")
        if np.any(vals < -1e-9 * max(np.max(np.abs(vals)), 1e-300)):
            raise ValueError("slopes of non-decreasing attenuation must be >= 0")
        res = self.fit_residuals
        if res is None:
            res = np.full(vals.shape, np.nan)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "fit_residuals", np.asarray(res, dtype=float))

    @property
    def l_c(self):
        return self.values.shape[1] - 1

    @property
    def m_values(self):
        return tuple(int(m) for m in _odd_indices(self.m_c))


@dataclasses.dataclass(frozen=True)
class ReconstructedPoint:
    """One reconstructed spectral-density sample."""

    k: float
    omega: float
    value: float
    m: int
    l: int
    k0: float
    omega0: float
    negative: bool


@dataclasses.dataclass(frozen=True)
class ReconstructionResult:
    """Deconvolved spectral-density samples with conditioning diagnostics."""

    points: tuple
    index_sets: dict
    condition_numbers: dict
    skipped_m: tuple
    kd: float

    @property
    def any_negative(self):
        return any(p.negative for p in self.points)


def alvarez_suter(slopes, layout, m_c, l_c, strategy="centered",
                  cond_limit=_DEFAULT_COND_LIMIT, index_sets=None):
    """Deconvolve spectral-density samples from slope datasets.

    ``slopes`` is an iterable of SlopeMatrix objects (one per primary
    setting).  For every harmonic m with an invertible comb-weight matrix:

        S(m k_0 - l k_d, m w_0)
            = sum_m' Uinv[m, m'] sum_l' Vinv^(m)[l, l'] A[m', l']

    Negative outputs are kept and flagged (they diagnose truncation error).
    Harmonics whose comb matrix is ill conditioned are skipped and recorded;
    if every harmonic is skipped the reconstruction is impossible.
    """
    slopes = list(slopes)
    if not slopes:
        raise ValueError("no slope matrices supplied")
    ms = _odd_indices(m_c)
    for sm in slopes:
        if sm.m_c != m_c or sm.l_c != l_c:
            raise ValueError("slope matrices disagree with m_c / l_c")

    u_inv = build_U_inverse(m_c)
    cond = {"U": float(np.linalg.cond(build_U(m_c)))}
    v_invs, sets, skipped = {}, {}, []
    for m in ms:
        m = int(m)
        lset = (tuple(index_sets[m]) if index_sets is not None
                else choose_index_set(layout, m, l_c, strategy))
        sets[m] = lset
        try:
            v_inv, c = build_V_inverse(layout, m, l_c, lset, cond_limit)
        except IllConditionedError as err:
            skipped.append(m)
            cond[f"V_m{m}"] = err.cond
            continue
        v_invs[m] = v_inv
        cond[f"V_m{m}"] = c
    if not v_invs:
        raise ReconstructionImpossibleError(
            f"every comb-weight matrix up to m_c = {m_c} is ill conditioned "
            f"(condition limit {cond_limit:.3g})")

    points = []
    for sm in slopes:
        b = u_inv @ sm.values
        for i, m in enumerate(ms):
            m = int(m)
            if m not in v_invs:
                continue
            s = v_invs[m] @ b[i]
            for l, value in zip(sets[m], s):
                points.append(ReconstructedPoint(
                    k=m * sm.k0 - l * layout.kd,
                    omega=m * sm.omega0,
                    value=float(value),
                    m=m, l=int(l), k0=sm.k0, omega0=sm.omega0,
                    negative=bool(value < 0)))
    return ReconstructionResult(points=tuple(points), index_sets=sets,
                                condition_numbers=cond,
                                skipped_m=tuple(skipped), kd=layout.kd)
