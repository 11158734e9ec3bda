"""Interaction functionals and runtime auditing of the BV bounds.

Per strip the engine computes the linear functional L (total wave
strength), the quadratic functional Q over approaching wave pairs, and
G = L + 2 c0 Q whose decay drives the BV estimate.  Between consecutive
strips it forms the interaction diamonds: each diamond takes the wave
portions entering from the two fans below (split at their sampling rays)
and compares them with the fan that emerges above; the defect must be
controlled by h times the entering strength plus the local interaction
product D.  Everything streams, so arbitrarily long runs use O(1) memory.

Wave kind codes follow the strip protocol: 0 null, 1 shock,
2 rarefaction, 3 contact.
"""

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

KIND_NULL, KIND_SHOCK, KIND_RAREFACTION, KIND_CONTACT = 0, 1, 2, 3

DEFAULT_C0 = 5.0


@dataclass(frozen=True)
class WaveRecord:
    """One elementary wave of a strip, for inspection and tests."""

    col: int
    family: int
    kind: int
    strength: float
    speed_lo: float
    speed_hi: float
    gnl: bool


def level_waves(strip, threshold: float = 0.0):
    """Materialize the nontrivial waves of a strip as records."""
    wd = strip.wave_data()
    out = []
    nf, n = wd["tau"].shape
    for k in range(nf):
        for i in range(n):
            tau = float(wd["tau"][k, i])
            if wd["kind"][k, i] == KIND_NULL or abs(tau) <= threshold:
                continue
            out.append(WaveRecord(
                col=int(wd["fan_cols"][k]), family=i,
                kind=int(wd["kind"][k, i]), strength=tau,
                speed_lo=float(wd["speed_lo"][k, i]),
                speed_hi=float(wd["speed_hi"][k, i]),
                gnl=bool(wd["gnl"][i])))
    return out


# ---------------------------------------------------------------------------
# functionals


def functional_L(wave_data) -> float:
    """Total strength of all waves on the level."""
    return float(np.sum(np.abs(wave_data["tau"])))


def functional_Q(wave_data) -> float:
    """Quadratic potential over approaching pairs.

    A left wave of family i approaches a right wave of family j when i > j,
    or when i = j, the family is genuinely nonlinear and at least one of
    the two is a shock.  Waves of one fan emanate from a single point and
    never approach each other.
    """
    tau = np.abs(wave_data["tau"])
    kind = wave_data["kind"]
    gnl = wave_data["gnl"]
    nf, n = tau.shape
    if nf == 0:
        return 0.0
    Q = 0.0
    prefix = np.vstack([np.zeros((1, n)), np.cumsum(tau, axis=0)[:-1]])
    for i in range(n):
        for j in range(i):
            Q += float(np.sum(prefix[:, i] * tau[:, j]))
    for i in range(n):
        if not gnl[i]:
            continue
        a = tau[:, i]
        r = np.where(kind[:, i] != KIND_SHOCK, a, 0.0)
        T, R = float(a.sum()), float(r.sum())
        Q += 0.5 * ((T * T - float(a @ a)) - (R * R - float(r @ r)))
    return Q


def functional_G(L: float, Q: float, c0: float = DEFAULT_C0) -> float:
    """Glimm functional L + 2 c0 Q; decreasing up to the source budget."""
    return L + 2.0 * c0 * Q


# ---------------------------------------------------------------------------
# interaction diamonds


def diamond_stats(prev_wd, cur_wd, h: float):
    """Interaction and balance statistics over one row of diamonds.

    The diamond centered at odd column q of the previous level receives
    alpha = the right-of-ray portion of the fan at q-1 and beta = the
    left-of-ray portion of the fan at q+1, and emits the fan at q of the
    next strip.  Returns (D_total, residual_sum, ratio_max) where the
    per-diamond ratio is |emitted - alpha - beta|_1 over
    h (|alpha| + |beta|) + h^2 + D(diamond).
    """
    fp = prev_wd["fan_cols"]
    fc = cur_wd["fan_cols"]
    if fp.size < 2 or fc.size == 0:
        return 0.0, 0.0, 0.0
    off = (int(fp[0]) + 1 - int(fc[0])) // 2
    k_lo = max(0, -off)
    k_hi = min(fp.size - 2, fc.size - 1 - off)
    if k_hi < k_lo:
        return 0.0, 0.0, 0.0
    sl = slice(k_lo, k_hi + 1)
    alpha = prev_wd["tau_right"][sl]
    beta = prev_wd["tau_left"][k_lo + 1:k_hi + 2]
    akind = prev_wd["kind"][sl]
    bkind = prev_wd["kind"][k_lo + 1:k_hi + 2]
    emitted = cur_wd["tau"][k_lo + off:k_hi + 1 + off]
    gnl = prev_wd["gnl"]

    aab = np.abs(alpha)
    bab = np.abs(beta)
    n = alpha.shape[1]
    D = np.zeros(alpha.shape[0])
    for i in range(n):
        for j in range(n):
            if i > j:
                D += aab[:, i] * bab[:, j]
            elif i == j and gnl[i]:
                shock = (akind[:, i] == KIND_SHOCK) | (bkind[:, i] == KIND_SHOCK)
                D += np.where(shock, aab[:, i] * bab[:, i], 0.0)

    residual = np.sum(np.abs(emitted - alpha - beta), axis=1)
    denom = h * (aab.sum(axis=1) + bab.sum(axis=1)) + h * h + D
    ratios = residual / denom
    return float(D.sum()), float(residual.sum()), float(ratios.max())


# ---------------------------------------------------------------------------
# streaming engine


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Constants entering the functionals and the claimed a priori bounds.

    The TV bound has the form c1 e^sigma (TV u0 + omega) with
    sigma = sigma_prefactor * omega * psi_l1; the theory leaves the
    constants unspecified, so they are user-supplied and checks report
    margins against them.
    """

    c0: float = DEFAULT_C0          # quadratic weight in G = L + 2 c0 Q
    c1: float = 2.0                 # TV bound prefactor
    c2: float = 2.0                 # sup bound prefactor
    sigma_prefactor: float = 0.0
    omega: float = 0.3              # inhomogeneity budget of the system
    psi_l1: float = 1.0             # L1 norm of the time-decay envelope
    tv_u0: Optional[float] = None
    sup_u0: Optional[float] = None

    @property
    def sigma(self) -> float:
        return self.sigma_prefactor * self.omega * self.psi_l1

    def tv_bound(self) -> float:
        if self.tv_u0 is None:
            return math.nan
        return self.c1 * math.exp(self.sigma) * (self.tv_u0 + self.omega)

    def sup_bound(self) -> float:
        if self.tv_u0 is None or self.sup_u0 is None:
            return math.nan
        return self.sup_u0 + self.c2 * math.exp(self.sigma) * (
            self.tv_u0 + self.omega)


@dataclass(frozen=True)
class FunctionalReport:
    """Per-strip diagnostics record."""

    s: int
    t_lo: float
    t_hi: float
    L: float
    Q: float
    G: float
    tv: float
    sup: float
    max_speed: float
    n_waves: int
    D_total: float
    balance_residual: float
    balance_ratio_max: float
    tv_bound: float

    def to_dict(self):
        return asdict(self)


class InteractionMonitor:
    """Streams strips into FunctionalReports; plugs into scheme.run."""

    def __init__(self, config: DiagnosticsConfig = DiagnosticsConfig()):
        self.config = config
        self.reports = []
        self._prev_wd = None

    def on_strip(self, strip):
        wd = strip.wave_data()
        L = functional_L(wd)
        Q = functional_Q(wd)
        G = functional_G(L, Q, self.config.c0)
        if self._prev_wd is None:
            D_total, residual, ratio_max = 0.0, 0.0, 0.0
        else:
            D_total, residual, ratio_max = diamond_stats(
                self._prev_wd, wd, strip.grid.h)
        self.reports.append(FunctionalReport(
            s=strip.s, t_lo=strip.t_lo, t_hi=strip.t_hi, L=L, Q=Q, G=G,
            tv=strip.tv(), sup=strip.sup_norm(),
            max_speed=float(strip.max_abs_speed),
            n_waves=int(np.count_nonzero(wd["tau"])),
            D_total=D_total, balance_residual=residual,
            balance_ratio_max=ratio_max,
            tv_bound=self.config.tv_bound()))
        self._prev_wd = wd

    def finish(self):
        self._prev_wd = None


# ---------------------------------------------------------------------------
# bound checks


def check_theorem_bounds(reports, config: DiagnosticsConfig):
    """Compare the streamed functionals against the claimed a priori bounds.

    Returns a dict with the observed maxima, the bounds, and pass flags;
    bounds needing unknown initial-data numbers come out NaN/ignored.
    """
    if not reports:
        raise ValueError("no reports to check")
    max_tv = max(r.tv for r in reports)
    max_sup = max(r.sup for r in reports)
    max_G = max(r.G for r in reports)
    tv_bound = config.tv_bound()
    sup_bound = config.sup_bound()
    tv_ok = bool(max_tv <= tv_bound) if math.isfinite(tv_bound) else None
    sup_ok = bool(max_sup <= sup_bound) if math.isfinite(sup_bound) else None
    return {
        "max_tv": max_tv,
        "tv_bound": tv_bound,
        "tv_ok": tv_ok,
        "max_sup": max_sup,
        "sup_bound": sup_bound,
        "sup_ok": sup_ok,
        "max_G": max_G,
        "max_balance_ratio": max(r.balance_ratio_max for r in reports),
        "passed": (tv_ok is not False) and (sup_ok is not False),
    }


def increment_constant(reports, h: float, omega: float,
                       psi: Callable = None) -> float:
    """Empirical constant in the per-strip growth bound of G.

    The theory bounds each increment by
    K h omega (1 + G_s) psi(t_{s+1}) plus higher order, so

        K_emp = sum_s [G_{s+1} - G_s]_+ / sum_s h omega (1 + G_s) psi(t_{s+1})

    estimates K; it should stabilize as h shrinks on a fixed problem.
    """
    if psi is None:
        def psi(t):
            return math.exp(-t)
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    num = 0.0
    den = 0.0
    for a, b in zip(reports[:-1], reports[1:]):
        num += max(b.G - a.G, 0.0)
        den += h * omega * (1.0 + a.G) * psi(b.t_lo)
    if den == 0.0:
        raise ValueError("zero increment budget; check omega and psi")
    return num / den
