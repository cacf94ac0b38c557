"""Dwell-time certificates for bilinear impulsive delay systems, plus scalar checkers.

The bilinear certificates reduce stability of the full delay system to a
handful of matrix quantities.  The scalar checkers evaluate the generic
Lyapunov-Krasovskii conditions once the constants mu, rho1, rho2, kappa are
known.  All strict inequalities are decided exactly; when a margin lies within
``DEAD_BAND`` of zero a note is attached so knife-edge cases are visible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError
from .linalg import eig_sym, eigenvalues, is_hurwitz, lyapunov_residual, solve_lyapunov, spectral_norm
from .system import BilinearSystem

DEAD_BAND = 1e-12

INF_DWELL = "iISS_over_inf_dwell"
SUP_DWELL = "iISS_over_sup_dwell"
ALL = "iISS_over_all"
INCONCLUSIVE = "inconclusive"


@dataclass
class CertificateReport:
    """Verdict plus every intermediate quantity used to reach it.

    ``delta_bound`` is an open bound: the dwell time must be strictly above it
    for ``iISS_over_inf_dwell`` and strictly below it for
    ``iISS_over_sup_dwell``.  ``math.inf`` is serialized as ``null``.
    """

    verdict: str
    delta_bound: float | None
    intermediates: dict
    notes: list = field(default_factory=list)
    regime: str = "hurwitz"

    @property
    def positive(self) -> bool:
        return self.verdict != INCONCLUSIVE

    def admits(self, inf_gap: float, sup_gap: float) -> bool:
        """Whether a schedule with the given gap extremes lies in the certified class."""
        if self.verdict == ALL:
            return True
        if self.verdict == INF_DWELL:
            return inf_gap > self.delta_bound
        if self.verdict == SUP_DWELL:
            return self.delta_bound is None or math.isinf(self.delta_bound) or sup_gap < self.delta_bound
        return False

    def to_dict(self) -> dict:
        bound = self.delta_bound
        if bound is not None and not math.isfinite(bound):
            bound = None
        return {
            "verdict": self.verdict,
            "delta_bound": bound,
            "intermediates": {k: _jsonable(v) for k, v in self.intermediates.items()},
            "notes": list(self.notes),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _jsonable(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    v = float(v)
    return v if math.isfinite(v) else None


def _matrix_entries(prefix: str, M: np.ndarray) -> dict:
    return {f"{prefix}_{i + 1}{j + 1}": float(M[i, j]) for i in range(M.shape[0]) for j in range(M.shape[1])}


def hurwitz_quantities(sys: BilinearSystem) -> dict:
    """P, its extreme eigenvalues, a, b and mu0 for a Hurwitz A."""
    P = solve_lyapunov(sys.A)
    lmin_p, lmax_p = eig_sym(P)
    n = sys.n
    G = np.eye(n) + sys.D
    a = eig_sym(G.T @ P @ G)[1] / lmin_p
    b = eig_sym(sys.E.T @ P @ sys.E)[1] / lmin_p
    a, b = max(a, 0.0), max(b, 0.0)
    mu0 = 1.0 / lmax_p if sys.r == 0 else min(1.0 / lmax_p, 1.0 / (2.0 * sys.r))
    return {"P": P, "lambda_min_P": lmin_p, "lambda_max_P": lmax_p, "a": a, "b": b, "mu0": mu0}


def inf_dwell_bound(a: float, b: float, mu0: float, tau: float) -> float:
    """Smallest admissible dwell time ``2 ln(sqrt(a) + sqrt(b e^{mu0 tau})) / mu0``."""
    return 2.0 * math.log(math.sqrt(a) + math.sqrt(b * math.exp(mu0 * tau))) / mu0


def certify_hurwitz_bilinear(sys: BilinearSystem) -> CertificateReport:
    """Certificate for Hurwitz ``A``: arbitrary impulses or a minimum dwell time."""
    eigs = eigenvalues(sys.A)
    spectral_abscissa = float(np.max(eigs.real))
    base = {
        "spectral_abscissa_A": spectral_abscissa,
        "norm_I_plus_D": spectral_norm(np.eye(sys.n) + sys.D),
        "norm_E": spectral_norm(sys.E),
        "r": sys.r, "d": sys.d, "tau": sys.max_delay,
    }
    if not is_hurwitz(sys.A):
        return CertificateReport(INCONCLUSIVE, None, base, ["not_hurwitz"], "hurwitz")

    notes = []
    qty = hurwitz_quantities(sys)
    a, b, mu0 = qty["a"], qty["b"], qty["mu0"]
    tau = sys.max_delay
    if sys.r == 0:
        notes.append("zero_delay_mu0")
    s = math.sqrt(a) + math.sqrt(b)
    inter = dict(base)
    inter.update(_matrix_entries("P", qty["P"]))
    inter.update({
        "lambda_min_P": qty["lambda_min_P"], "lambda_max_P": qty["lambda_max_P"],
        "lyapunov_residual": lyapunov_residual(sys.A, qty["P"]),
        "a": a, "b": b, "mu0": mu0, "sqrt_a_plus_sqrt_b": s,
    })

    margin = s - 1.0
    if abs(margin) <= DEAD_BAND:
        notes.append("knife_edge_sqrt_a_plus_sqrt_b")
        if b > DEAD_BAND:
            return _inf_dwell_report(a, b, mu0, tau, inter, notes)
        if abs(a - 1.0) <= DEAD_BAND:
            return CertificateReport(ALL, None, inter, notes, "hurwitz")
        notes.append("unclassified_boundary")
        return CertificateReport(INCONCLUSIVE, None, inter, notes, "hurwitz")
    if margin < 0:
        return CertificateReport(ALL, None, inter, notes, "hurwitz")
    return _inf_dwell_report(a, b, mu0, tau, inter, notes)


def _inf_dwell_report(a, b, mu0, tau, inter, notes):
    bound = inf_dwell_bound(a, b, mu0, tau)
    inter["log_lhs_2ln"] = 2.0 * math.log(math.sqrt(a) + math.sqrt(b * math.exp(mu0 * tau)))
    inter["delta_min"] = bound
    notes = notes + ["delta_strictly_greater_than_bound"]
    return CertificateReport(INF_DWELL, bound, inter, notes, "hurwitz")


def certify_unstable_bilinear(sys: BilinearSystem) -> CertificateReport:
    """Certificate for non-Hurwitz ``A``: impulses must be frequent enough."""
    n = sys.n
    norm_g = spectral_norm(np.eye(n) + sys.D)
    norm_e = spectral_norm(sys.E)
    s = norm_g + norm_e
    m = eig_sym(sys.A + sys.A.T)[1]
    inter = {
        "norm_I_plus_D": norm_g, "norm_E": norm_e, "jump_gain_sum": s,
        "lambda_max_A_plus_AT": m, "r": sys.r, "d": sys.d, "tau": sys.max_delay,
    }
    notes = []
    if abs(s - 1.0) <= DEAD_BAND:
        notes.append("knife_edge_jump_gain")
    if abs(m) <= DEAD_BAND:
        notes.append("knife_edge_growth_rate")
    if s >= 1.0 - DEAD_BAND:
        return CertificateReport(INCONCLUSIVE, None, inter, notes + ["jump_not_contractive"], "unstable")
    if m <= DEAD_BAND:
        return CertificateReport(INCONCLUSIVE, None, inter, notes + ["use_hurwitz_certificate"], "unstable")
    if s == 0.0:
        inter["log_lhs_2ln"] = -math.inf
        return CertificateReport(SUP_DWELL, math.inf, inter, notes + ["total_reset"], "unstable")
    bound = -2.0 * math.log(s) / m
    inter["log_lhs_2ln"] = 2.0 * math.log(s)
    inter["delta_max"] = bound
    return CertificateReport(SUP_DWELL, bound, inter, notes + ["delta_strictly_less_than_bound"], "unstable")


def certify(sys: BilinearSystem) -> CertificateReport:
    """Hurwitz certificate when ``A`` is Hurwitz, otherwise the unstable one."""
    if is_hurwitz(sys.A):
        return certify_hurwitz_bilinear(sys)
    return certify_unstable_bilinear(sys)


# ---------------------------------------------------------------------------
# scalar checkers


@dataclass(frozen=True)
class TheoremParams:
    mu: float
    rho1: float
    rho2: float
    r: float
    delta: float
    kappa: float | None = None

    def __post_init__(self):
        vals = [self.mu, self.rho1, self.rho2, self.r, self.delta]
        if self.kappa is not None:
            vals.append(self.kappa)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("theorem parameters must be finite")
        if self.rho1 < 0 or self.rho2 < 0:
            raise InputError("rho1 and rho2 must be nonnegative")


def _require(cond: bool, clause: str):
    if not cond:
        raise PreconditionError(f"precondition failed: {clause}")


def check_thm1(p: TheoremParams, case: str) -> tuple[bool, float]:
    """Minimum-dwell condition ``ln rho < mu delta``; returns (holds, rho)."""
    _require(p.mu > 0, "mu > 0")
    if case == "a":
        _require(p.rho1 >= 1, "case a requires rho1 >= 1")
        rho = p.rho1 + p.rho2 * math.exp(p.mu * p.r)
    elif case == "b":
        _require(p.rho1 < 1, "case b requires rho1 < 1")
        _require(p.kappa is not None, "case b requires kappa")
        _require(p.rho1 + p.rho2 >= 1, "case b requires rho1 + rho2 >= 1")
        rho = p.rho1 + (p.rho2 + (1 - p.rho1) * p.kappa) * math.exp(p.mu * p.r)
    else:
        raise InputError(f"case must be 'a' or 'b', got {case!r}")
    return math.log(rho) < p.mu * p.delta, rho


def _thm3_argument(p: TheoremParams) -> float:
    _require(p.mu > 0, "mu > 0")
    _require(p.kappa is not None and p.kappa > 0, "kappa > 0")
    _require(0 <= p.rho1 < 1, "0 <= rho1 < 1")
    return p.rho1 + p.rho2 + (1 - p.rho1) * p.kappa


def check_thm3(p: TheoremParams) -> bool:
    """Maximum-dwell condition ``ln[rho1 + rho2 + (1 - rho1) kappa] < -mu delta``."""
    return math.log(_thm3_argument(p)) < -p.mu * p.delta


def thm3_delta_max(p: TheoremParams) -> float | None:
    """Largest dwell bound implied by the maximum-dwell condition, or None if no delta > 0 works."""
    arg = _thm3_argument(p)
    if arg >= 1:
        return None
    return -math.log(arg) / p.mu


def check_thm4(p: TheoremParams, case: str) -> bool:
    """Conditions under which every impulse sequence is admissible."""
    if case == "a":
        _require(p.mu > 0, "case a requires mu > 0")
        _require(0 <= p.rho1 <= 1, "case a requires 0 <= rho1 <= 1")
        return p.rho1 + p.rho2 < 1 or (p.rho1 == 1 and p.rho2 == 0)
    if case == "b":
        _require(p.mu == 0, "case b requires mu = 0")
        _require(p.kappa is not None, "case b requires kappa")
        return p.rho1 + p.rho2 + (1 - p.rho1) * p.kappa < 1
    raise InputError(f"case must be 'a' or 'b', got {case!r}")
