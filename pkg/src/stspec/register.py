"""Linear qubit register as a periodic arrangement of identical blocks.

A register is ``n_s`` repetitions of a block of ``N_0`` qubits at positions
``0 < x_1 < ... < x_{N0} < L_0`` with the origin fixed by
``x_1 + x_{N0} = L_0``.  The block's discrete spatial Fourier coefficients

    v_l = (k_d / 2 pi) sum_q exp(-i l k_d x_q),    k_d = 2 pi / L_0

set the weights of the wavenumber comb seen by the spatiotemporal filter.
"""

import dataclasses
import json

import numpy as np

from .errors import LayoutGenerationError

__all__ = [
    "RegisterLayout",
    "RevivalReport",
    "make_layout",
    "spatial_coefficient",
    "full_register_coefficient",
    "revival_diagnostic",
]

_ORDER_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class RegisterLayout:
    """Periodic register: one block of positions repeated ``ns`` times."""

    block_positions: tuple
    period: float
    ns: int = 1

    def __post_init__(self):
        pos = np.asarray(self.block_positions, dtype=float)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("block_positions must be a non-empty 1D sequence")
        if not np.all(np.isfinite(pos)) or not np.isfinite(self.period):
            raise ValueError("positions and period must be finite")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if int(self.ns) != self.ns or self.ns < 1:
            raise ValueError("ns must be a positive integer")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("block positions must be strictly increasing")
        if pos[0] <= 0 or pos[-1] >= self.period:
            raise ValueError("block positions must lie strictly inside (0, period)")
        if abs((pos[0] + pos[-1]) - self.period) > _ORDER_TOL * self.period:
            raise ValueError(
                "origin convention violated: first and last block positions "
                f"must sum to the period (got {pos[0] + pos[-1]!r}, "
                f"period {self.period!r})")
        object.__setattr__(self, "block_positions", tuple(float(p) for p in pos))
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "ns", int(self.ns))

    @property
    def n0(self):
        return len(self.block_positions)

    @property
    def n_qubits(self):
        return self.n0 * self.ns

    @property
    def length(self):
        return self.ns * self.period

    @property
    def kd(self):
        return 2.0 * np.pi / self.period

    def positions(self):
        """All qubit positions over the full register, shape (ns * N0,)."""
        block = np.asarray(self.block_positions)
        shifts = self.period * np.arange(self.ns)
        return (block[None, :] + shifts[:, None]).ravel()

    def with_repetitions(self, ns):
        return dataclasses.replace(self, ns=ns)

    # -- serialization (bit-exact round trip via repr of floats) -----------

    def to_dict(self):
        return {
            "block_positions": [repr(p) for p in self.block_positions],
            "period": repr(self.period),
            "ns": self.ns,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(block_positions=tuple(float(p) for p in data["block_positions"]),
                   period=float(data["period"]), ns=int(data["ns"]))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def make_layout(kind, n0, period=1.0, ns=1, gamma=None, sigma=None, seed=None,
                max_retries=100):
    """Construct a block layout of one of the standard kinds.

    Parameters
    ----------
    kind : {'regular', 'compressed', 'jittered'}
        regular     x_q = q L0 / (N0 + 1)
        compressed  x_q = q gamma L0 / (N0 + 1) + (1 - gamma) L0 / 2
        jittered    x_{q < N0} drawn from a Gaussian centered on the regular
                    position with std ``sigma``; the last position is pinned
                    by x_1 + x_{N0} = L0.  Draws violating the ordering are
                    rejected and re-sampled up to ``max_retries`` times.
    """
    if n0 < 1 or int(n0) != n0:
        raise ValueError("n0 must be a positive integer")
    n0 = int(n0)
    q = np.arange(1, n0 + 1, dtype=float)
    base = q * period / (n0 + 1)

    if kind == "regular":
        return RegisterLayout(tuple(base), period, ns)

    if kind == "compressed":
        if gamma is None or not 0 < gamma <= 1:
            raise ValueError("compressed layout requires 0 < gamma <= 1")
        pos = q * gamma * period / (n0 + 1) + (1 - gamma) * period / 2
        return RegisterLayout(tuple(pos), period, ns)

    if kind == "jittered":
        if sigma is None or sigma < 0:
            raise ValueError("jittered layout requires sigma >= 0")
        rng = np.random.default_rng(seed)
        for _ in range(max_retries):
            pos = base.copy()
            if n0 > 1:
                pos[:-1] = rng.normal(loc=base[:-1], scale=sigma)
            pos[-1] = period - pos[0]
            inside = 0 < pos[0] and pos[-1] < period
            if inside and np.all(np.diff(pos) > 0):
                return RegisterLayout(tuple(pos), period, ns)
        raise LayoutGenerationError(
            f"no valid jittered layout after {max_retries} draws "
            f"(n0={n0}, sigma={sigma})")

    raise ValueError(f"unknown layout kind {kind!r}")


def spatial_coefficient(layout, l):
    """Block Fourier coefficient v_{l k_d}, vectorized over ``l``.

    v_0 equals N0 / L0; coefficients of opposite index are conjugate.
    """
    l = np.asarray(l)
    pos = np.asarray(layout.block_positions)
    phase = np.exp(-1j * layout.kd * np.multiply.outer(l, pos))
    return phase.sum(axis=-1) / layout.period


def full_register_coefficient(layout, l):
    """Fourier coefficient of the full register over its total length.

    Computed from all ``ns * N0`` positions with the comb spacing
    ``2 pi / (ns L0)``.  Nonzero (and equal to the block coefficient) only
    when ``l`` is a multiple of ``ns``.
    """
    l = np.asarray(l)
    pos = layout.positions()
    dk = 2.0 * np.pi / layout.length
    phase = np.exp(-1j * dk * np.multiply.outer(l, pos))
    return phase.sum(axis=-1) / layout.length


@dataclasses.dataclass(frozen=True)
class RevivalReport:
    """Near-periodicity diagnostic of the comb weights |v_l|^2."""

    period: "float | None"
    similarity: float
    degenerate: bool = False

    @property
    def has_revivals(self):
        return self.period is not None


def revival_diagnostic(layout, l_max, threshold=0.9):
    """Detect periodic revivals in the comb-weight sequence |v_l|^2.

    Scans lag autocorrelation of the weights for l = 0..l_max and reports the
    dominant period (parabolic sub-lag refinement around the first strong
    peak) and its similarity score in [0, 1].  A period is only reported when
    the score reaches ``threshold``; regular blocks revive with period
    N0 + 1, compressed ones with period (N0 + 1) / gamma.
    """
    if l_max < 2 * (layout.n0 + 1):
        raise ValueError("l_max must be at least 2 (N0 + 1)")
    w = np.abs(spatial_coefficient(layout, np.arange(l_max + 1))) ** 2
    if np.ptp(w) <= 1e-12 * max(np.max(w), 1e-300):
        # single phasor (or accidental constancy): every lag matches
        return RevivalReport(period=1.0, similarity=1.0, degenerate=True)

    lags = np.arange(1, l_max // 2 + 1)
    scores = np.full(lags.size, -np.inf)
    for i, p in enumerate(lags):
        a, b = w[:-p], w[p:]
        sa, sb = a.std(), b.std()
        if sa <= 0 or sb <= 0:
            continue
        scores[i] = np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)

    # first local maximum reaching the threshold = the dominant period
    for i, p in enumerate(lags):
        if scores[i] < threshold:
            continue
        left = scores[i - 1] if i > 0 else -np.inf
        right = scores[i + 1] if i + 1 < scores.size else -np.inf
        if scores[i] >= left and scores[i] >= right:
            period = float(p)
            if scores[i] < 1.0 - 1e-12 and 0 < i < scores.size - 1:
                denom = scores[i - 1] - 2 * scores[i] + scores[i + 1]
                if denom < 0:
                    period += 0.5 * (scores[i - 1] - scores[i + 1]) / denom
            return RevivalReport(period=period, similarity=float(scores[i]))

    best = float(np.max(scores)) if np.any(np.isfinite(scores)) else 0.0
    return RevivalReport(period=None, similarity=max(best, 0.0))
