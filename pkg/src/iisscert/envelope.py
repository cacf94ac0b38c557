"""Lyapunov-Krasovskii constants for the bilinear certificates and the envelope check.

The certificates say a trajectory obeys an exponential envelope

    v(t) e^{lam (t - t0)} <= u(t)

where ``v = V1 + V2`` is a Lyapunov-Krasovskii functional and ``u`` collects
the initial-condition term, the integrated input and the impulse inputs.
This module builds every constant entering ``u`` and evaluates both sides
along a simulated trajectory.

Two regimes exist.  For Hurwitz ``A``, ``V1 = x'Px`` and ``V2`` integrates
``|x|^2`` over the last ``r`` time units with the weight ``2 + (s - t)/r``.
Otherwise ``V1 = x'x``, ``V2`` is the unweighted integral, and the envelope
carries the amplification constants ``M`` and ``c``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .certificates import (INCONCLUSIVE, SUP_DWELL, certify_hurwitz_bilinear, certify_unstable_bilinear,
                           hurwitz_quantities)
from .errors import ConfigurationError, DomainError, InputError, NumericalError, PreconditionError
from .integrator import GRID_RTOL, Trajectory
from .linalg import eig_sym, is_hurwitz, spectral_norm
from .system import BilinearSystem, ImpulseSchedule, InputSignal, classify_schedule

LAMBDA_FRACTION = 0.9
BISECTION_TOL = 1e-10
ENVELOPE_RTOL = 1e-6
JUMP_TOL = 1e-9


@dataclass(frozen=True)
class EnvelopeParams:
    """Constants of one envelope construction.

    ``chi(s) = max(chi1_lin*s + chi1_quad*s^2, chi2*s^2, chi3*s^2)`` with ``s = |w|``.
    ``rho`` is the multiplier on the input integral in the Hurwitz regime and
    the jump budget ``rho1 + [rho2 + (1 - rho1) kappa] e^{lam tau}`` in the
    unstable regime.  ``path`` records which admissibility condition was used.
    """

    regime: str
    path: str
    epsilon: float
    xi: float
    young: float | None
    mu: float
    lam: float
    lam_cap: float
    kappa: float
    rho1: float
    rho2: float
    rho: float
    chi1_lin: float
    chi1_quad: float
    chi2: float
    chi3: float
    alpha2: float
    alpha3: float
    r: float
    tau: float
    P: np.ndarray = field(repr=False)
    delta: float | None = None
    M: float | None = None
    c: float | None = None

    def chi(self, s):
        s = np.asarray(s, dtype=float)
        c1 = self.chi1_lin * s + self.chi1_quad * s * s
        return np.maximum(np.maximum(c1, self.chi2 * s * s), self.chi3 * s * s)

    def chi3_of(self, s):
        s = np.asarray(s, dtype=float)
        return self.chi3 * s * s

    def v1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.P, x)

    def with_lambda(self, lam: float) -> "EnvelopeParams":
        """Same constants with the envelope rate replaced (for negative controls)."""
        if not lam > 0:
            raise InputError("lambda must be positive")
        if self.regime == "unstable":
            jump = self.rho1 + (self.rho2 + (1 - self.rho1) * self.kappa) * math.exp(lam * self.tau)
            return replace(self, lam=lam, rho=jump, M=math.exp((self.mu + lam) * self.delta))
        return replace(self, lam=lam)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "P"}
        out["P"] = np.asarray(self.P).tolist()
        return out


def _check_slacks(eps: float, xi: float, eps_max: float | None):
    if not eps > 0 or (eps_max is not None and not eps < eps_max):
        raise PreconditionError(f"eps must lie in (0, {eps_max if eps_max else 'inf'}), got {eps}")
    if not xi > 0:
        raise PreconditionError(f"xi must be positive, got {xi}")


def _young_split(g2: float, e2: float, f2: float, xi: float, cross: float):
    """Split ``|G x + E y + F w|^2`` into ``rho1, rho2, chi3`` coefficients.

    ``g2, e2, f2`` bound the three squared terms; ``cross`` is the ratio used
    for the first split when both ``g2`` and ``e2`` are positive.
    """
    if g2 == 0.0:
        return None, 0.0, (1 + xi) * e2, (1 + 1 / xi) * f2
    if e2 == 0.0:
        if f2 == 0.0:
            return 0.0, g2, 0.0, 0.0
        return xi, (1 + xi) * g2, 0.0, (1 + 1 / xi) * f2
    ye = cross
    return ye, (1 + ye) * g2, (1 + 1 / ye) * (1 + xi) * e2, (1 + 1 / ye) * (1 + 1 / xi) * f2


def build_params_hurwitz(sys: BilinearSystem, eps: float = 0.01, xi: float = 0.01,
                         delta: float | None = None, lam: float | None = None) -> EnvelopeParams:
    """Envelope constants for Hurwitz ``A``.

    When the jump gains admit every impulse sequence, ``delta`` is ignored and
    the multiplier is 1.  Otherwise ``delta`` (the minimum dwell time of the
    schedule) is required and must satisfy the dwell inequality at the given
    slacks.
    """
    _check_slacks(eps, xi, 1.0 / 3.0)
    if not is_hurwitz(sys.A):
        raise PreconditionError("A is not Hurwitz; use build_params_unstable")
    if certify_hurwitz_bilinear(sys).verdict == INCONCLUSIVE:
        raise PreconditionError("Hurwitz certificate is inconclusive for this system")
    qty = hurwitz_quantities(sys)
    P, lmin, lmax = qty["P"], qty["lambda_min_P"], qty["lambda_max_P"]
    a, b = qty["a"], qty["b"]
    r, tau, q = sys.r, sys.max_delay, sys.q

    mu = (1 - 3 * eps) / lmax if r == 0 else min((1 - 3 * eps) / lmax, 1 / (2 * r))
    kappa = 3 * r * eps / (2 * lmin)
    lam_f = max(eig_sym(sys.F.T @ P @ sys.F)[1], 0.0)
    cross = math.sqrt((1 + xi) * b * math.exp(mu * tau) / a) if a > 0 and b > 0 else 0.0
    young, rho1, rho2, chi3 = _young_split(a, b, lam_f, xi, cross)

    p1 = max(spectral_norm(P @ Ai) for Ai in sys.A_list)
    p2 = max(spectral_norm(P @ Bi) for Bi in sys.B_list)
    chi1_lin = 2 * q * p1 / lmin
    chi1_quad = q * q * p2 * p2 / (eps * lmin)
    chi2 = spectral_norm(P @ sys.C) ** 2 / eps

    rho2_eff = rho2 + max(0.0, 1 - rho1) * kappa
    if rho1 + rho2_eff < 1 or (rho1 == 1 and rho2 == 0):
        path, multiplier = "all", 1.0
        if rho2_eff == 0 or tau == 0:
            lam_cap = mu
        else:
            lam_cap = min(mu, math.log((1 - rho1) / rho2_eff) / tau)
    else:
        if delta is None or not delta > 0:
            raise PreconditionError("jump gains need a minimum dwell time; pass delta > 0")
        if rho1 >= 1:
            path, multiplier = "inf_dwell_a", rho1 + rho2 * math.exp(mu * tau)
        else:
            path, multiplier = "inf_dwell_b", rho1 + rho2_eff * math.exp(mu * tau)
        if not math.log(multiplier) < mu * delta:
            raise PreconditionError(
                f"dwell inequality fails: ln(rho)={math.log(multiplier):.6g} >= mu*delta={mu * delta:.6g}; "
                "reduce eps/xi or increase delta")
        lam_cap = mu - math.log(multiplier) / delta
    lam_cap = min(lam_cap, mu)
    if not lam_cap > 0:
        raise PreconditionError("no positive envelope rate exists at these slacks")
    chosen = LAMBDA_FRACTION * lam_cap if lam is None else float(lam)
    if not chosen > 0:
        raise InputError("lambda must be positive")
    return EnvelopeParams(
        regime="hurwitz", path=path, epsilon=eps, xi=xi, young=young, mu=mu, lam=chosen, lam_cap=lam_cap,
        kappa=kappa, rho1=rho1, rho2=rho2, rho=multiplier, chi1_lin=chi1_lin, chi1_quad=chi1_quad,
        chi2=chi2, chi3=chi3, alpha2=lmax, alpha3=2 * eps * r, r=r, tau=tau, P=P, delta=delta)


def _bisect_increasing(fn, lo: float, hi: float, tol: float = BISECTION_TOL) -> float:
    """Largest x in [lo, hi] with fn(x) <= 0, for increasing fn with fn(lo) <= 0."""
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if fn(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def build_params_unstable(sys: BilinearSystem, eps: float = 0.01, xi: float = 0.01,
                          delta: float | None = None, lam: float | None = None) -> EnvelopeParams:
    """Envelope constants for non-Hurwitz ``A`` with impulses at most ``delta`` apart."""
    _check_slacks(eps, xi, None)
    report = certify_unstable_bilinear(sys)
    if report.verdict != SUP_DWELL:
        raise PreconditionError(f"unstable certificate does not apply ({', '.join(report.notes)})")
    if delta is None or not 0 < delta < report.delta_bound:
        raise PreconditionError(f"delta must lie in (0, {report.delta_bound:.10g}), got {delta}")
    n, q, r, tau = sys.n, sys.q, sys.r, sys.max_delay
    g = spectral_norm(np.eye(n) + sys.D)
    e = spectral_norm(sys.E)
    f = spectral_norm(sys.F)
    cross = math.sqrt(1 + xi) * e / g if g > 0 and e > 0 else 0.0
    young, rho1, rho2, chi3 = _young_split(g * g, e * e, f * f, xi, cross)
    mu = report.intermediates["lambda_max_A_plus_AT"] + 2 * eps
    kappa = eps * r
    if not rho1 < 1:
        raise PreconditionError(f"rho1={rho1:.6g} must be below 1; reduce xi")
    gain = rho2 + (1 - rho1) * kappa
    if not math.log(rho1 + gain) < -mu * delta:
        raise PreconditionError(
            f"dwell inequality fails: ln(rho1+rho2+(1-rho1)kappa)={math.log(rho1 + gain):.6g} "
            f">= -mu*delta={-mu * delta:.6g}; reduce eps/xi or delta")

    def excess(x):
        return math.log(rho1 + gain * math.exp(x * tau)) + (mu + x) * delta

    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
    lam_cap = _bisect_increasing(excess, 0.0, hi)
    chosen = LAMBDA_FRACTION * lam_cap if lam is None else float(lam)
    if not chosen > 0:
        raise InputError("lambda must be positive")
    p1 = max(spectral_norm(Ai + Ai.T) for Ai in sys.A_list)
    p2 = max(spectral_norm(Bi) for Bi in sys.B_list)
    return EnvelopeParams(
        regime="unstable", path="sup_dwell", epsilon=eps, xi=xi, young=young, mu=mu, lam=chosen,
        lam_cap=lam_cap, kappa=kappa, rho1=rho1, rho2=rho2,
        rho=rho1 + gain * math.exp(chosen * tau),
        chi1_lin=q * p1, chi1_quad=q * q * p2 * p2 / eps, chi2=spectral_norm(sys.C) ** 2 / eps, chi3=chi3,
        alpha2=1.0, alpha3=eps * r, r=r, tau=tau, P=np.eye(n), delta=delta,
        M=math.exp((mu + chosen) * delta), c=math.exp(mu * delta))


def build_params(sys: BilinearSystem, eps: float = 0.01, xi: float = 0.01,
                 delta: float | None = None, lam: float | None = None) -> EnvelopeParams:
    if is_hurwitz(sys.A):
        return build_params_hurwitz(sys, eps, xi, delta, lam)
    return build_params_unstable(sys, eps, xi, delta, lam)


# ---------------------------------------------------------------------------
# functional evaluation


def _weight(params: EnvelopeParams, s, t):
    if params.regime == "hurwitz":
        return 2.0 + (np.asarray(s) - t) / params.r
    return np.ones_like(np.asarray(s, dtype=float))


def eval_V(traj: Trajectory, params: EnvelopeParams, t: float, side: str = "right") -> tuple[float, float]:
    """``(V1, V2)`` at time ``t`` by direct trapezoid over the grid samples in ``[t - r, t]``.

    Panels are split at impulse nodes: the left limit closes the panel that
    ends there and the post-impulse value opens the next one.
    """
    x = traj.lookup(t, side)
    v1 = float(params.v1(x))
    r = params.r
    if r == 0:
        return v1, 0.0
    lo = t - r
    lower = traj.t0 - traj.max_delay
    if lo < lower - GRID_RTOL * max(1.0, abs(lower)):
        raise DomainError(f"t - r = {lo} is below the history domain start {lower}")
    h = traj.h
    j_lo = math.floor((lo - traj.t0) / h + GRID_RTOL) + 1
    j_hi = math.ceil((t - traj.t0) / h - GRID_RTOL) - 1
    impulse_nodes = set(traj.impulse_indices)
    pts = [(lo, traj.lookup(lo, "right"))]
    for j in range(j_lo, j_hi + 1):
        tj = traj.t0 + j * h
        if j <= 0:
            pts.append((tj, traj.lookup(tj)))
        elif j in impulse_nodes:
            pts.append((tj, traj.states_left[j]))
            pts.append((tj, traj.states[j]))
        else:
            pts.append((tj, traj.states[j]))
    pts.append((t, traj.lookup(t, "left")))
    s = np.array([p[0] for p in pts])
    g = np.array([float(p[1] @ p[1]) for p in pts]) * _weight(params, s, t)
    v2 = params.epsilon * float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(s)))
    return v1, v2


@dataclass
class _Samples:
    times: np.ndarray      # sample times (impulse nodes appear twice)
    nodes: np.ndarray      # grid index of each sample
    is_left: np.ndarray    # True for the pre-impulse sample
    states: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


def _samples(traj: Trajectory, params: EnvelopeParams) -> _Samples:
    """V1 and V2 at every node, plus left samples at impulse nodes, via cumulative sums."""
    h, t0 = traj.h, traj.t0
    N = len(traj.times)
    imp = np.zeros(N, dtype=bool)
    imp[list(traj.impulse_indices)] = True

    counts = np.where(imp, 2, 1)
    nodes = np.repeat(np.arange(N), counts)
    is_left = np.zeros(len(nodes), dtype=bool)
    right_pos = np.cumsum(counts) - 1
    is_left[right_pos[imp] - 1] = True
    states = np.where(is_left[:, None], traj.states_left[nodes], traj.states[nodes])
    times = t0 + h * nodes
    v1 = params.v1(states)

    r = params.r
    if r == 0:
        return _Samples(times, nodes, is_left, states, v1, np.zeros_like(v1))
    m = int(round(r / h))
    if abs(m * h - r) > GRID_RTOL * max(1.0, r):
        raise ConfigurationError(f"delay r={r} is not a multiple of the grid step {h}")
    hist_nodes = np.arange(-m, 0)
    hist_states = traj.initial(hist_nodes * h)
    all_rel = np.concatenate((hist_nodes * h, nodes * h))          # s - t0
    all_g = np.concatenate((np.sum(hist_states ** 2, axis=1), np.sum(states ** 2, axis=1)))
    ds = np.diff(all_rel)
    # cumulative trapezoid of g and of (s - t0) g
    c0 = np.concatenate(([0.0], np.cumsum(0.5 * (all_g[1:] + all_g[:-1]) * ds)))
    sg = all_rel * all_g
    c1 = np.concatenate(([0.0], np.cumsum(0.5 * (sg[1:] + sg[:-1]) * ds)))
    # position (in the concatenated array) of the right sample of node j - m
    offset = m
    start_node = nodes - m
    start_pos = np.where(start_node < 0, start_node + m, offset + right_pos[np.maximum(start_node, 0)])
    end_pos = offset + np.arange(len(nodes))
    int_g = c0[end_pos] - c0[start_pos]
    if params.regime == "hurwitz":
        int_sg = c1[end_pos] - c1[start_pos]
        rel_t = nodes * h
        v2 = params.epsilon * ((2.0 - rel_t / r) * int_g + int_sg / r)
    else:
        v2 = params.epsilon * int_g
    return _Samples(times, nodes, is_left, states, v1, v2)


@dataclass
class EnvelopeTrace:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margin: np.ndarray
    tolerance: float
    violated: bool
    first_violation_t: float | None
    min_margin: float
    params: EnvelopeParams
    quadrature_note: str = ""
    notes: list = field(default_factory=list)

    def verdict(self) -> dict:
        return {
            "violated": self.violated,
            "first_violation_t": self.first_violation_t,
            "min_margin": self.min_margin,
            "tolerance": self.tolerance,
            "notes": list(self.notes),
            "params_echo": self.params.to_dict(),
        }

    def verdict_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.verdict(), indent=indent)

    def to_csv(self, dest) -> None:
        if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
            with open(dest, "w", newline="") as fh:
                self.to_csv(fh)
            return
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["t", "lhs", "rhs", "margin"])
        for row in zip(self.times, self.lhs, self.rhs, self.margin):
            writer.writerow([f"{v:.17g}" for v in row])


def eval_envelope(traj: Trajectory, params: EnvelopeParams, w: InputSignal,
                  sched: ImpulseSchedule | None = None) -> EnvelopeTrace:
    """Evaluate ``lhs = v e^{lam (t - t0)}`` and the envelope ``rhs`` at every sample."""
    smp = _samples(traj, params)
    t0, lam = traj.t0, params.lam
    rel = smp.times - t0
    growth = np.exp(lam * rel)
    lhs = (smp.v1 + smp.v2) * growth

    node_times = traj.times
    with np.errstate(all="ignore"):
        w_right = np.linalg.norm(w.evaluate(node_times, "right"), axis=-1)
        w_left = np.linalg.norm(w.evaluate(node_times, "left"), axis=-1)
        chi_right = params.chi(w_right)
        chi_left = params.chi(w_left)
        panels = 0.5 * (chi_right[:-1] + chi_left[1:]) * np.diff(node_times)
        integral = np.concatenate(([0.0], np.cumsum(panels)))
        growth_factor = np.exp(integral)
    if not np.all(np.isfinite(integral)):
        bad = int(np.argmax(~np.isfinite(integral)))
        raise NumericalError(f"integral of chi(|w|) is not finite (from t={node_times[max(bad - 1, 0)]:.6g}); "
                             "check the input near the start time")

    # impulse sum, counting t_k <= t except at the pre-impulse sample of t_k itself
    contrib = np.zeros(len(node_times))
    for rec in traj.impulses:
        contrib[rec.index] = math.exp(lam * (rec.time - t0)) * float(params.chi(np.linalg.norm(rec.w_minus)))
    cum = np.cumsum(contrib)
    S = cum[smp.nodes] - np.where(smp.is_left, contrib[smp.nodes], 0.0)
    I = integral[smp.nodes]
    E = growth_factor[smp.nodes]

    phi = traj.initial
    alpha = params.alpha2 * float(np.sum(phi(0.0) ** 2)) + params.alpha3 * phi.sup_norm() ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        if params.regime == "hurwitz":
            rhs = E * (alpha + params.rho * growth * I + S)
        else:
            rhs = E * (params.M * alpha + params.c * growth * I + params.M * S)
        margin = rhs - lhs
    finite_rhs = rhs[np.isfinite(rhs)]
    tol = ENVELOPE_RTOL * (1.0 + (float(np.max(finite_rhs)) if finite_rhs.size else 0.0))
    bad = margin < -tol
    violated = bool(np.any(bad))
    notes = []
    if not np.all(np.isfinite(growth_factor)):
        # the bound is still valid, only vacuous from the overflow point on
        notes.append("input_factor_overflow")
    if sched is not None:
        notes += _schedule_notes(params, sched, traj)
    if traj.blow_up:
        notes.append("trajectory_truncated_by_blow_up")
    return EnvelopeTrace(
        times=smp.times, lhs=lhs, rhs=rhs, margin=margin, tolerance=tol, violated=violated,
        first_violation_t=float(smp.times[np.argmax(bad)]) if violated else None,
        min_margin=float(np.min(margin)), params=params,
        quadrature_note="trapezoid on the integration grid; panels split at impulse nodes", notes=notes)


def _schedule_notes(params: EnvelopeParams, sched: ImpulseSchedule, traj: Trajectory) -> list:
    times = sched.up_to(traj.T)
    if not times or params.delta is None:
        return []
    gaps = classify_schedule(ImpulseSchedule(times, sched.t0))
    slack = GRID_RTOL * max(1.0, params.delta)
    if params.path.startswith("inf_dwell") and gaps.inf_gap < params.delta - slack:
        return ["schedule_outside_certified_class"]
    if params.path == "sup_dwell" and gaps.sup_gap > params.delta + slack:
        return ["schedule_outside_certified_class"]
    return []


# ---------------------------------------------------------------------------
# sampled Lyapunov conditions


@dataclass(frozen=True)
class JumpCheck:
    time: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + JUMP_TOL * max(1.0, abs(self.rhs))


def check_jump_inequality(traj: Trajectory, params: EnvelopeParams) -> list[JumpCheck]:
    """``V1(t_k) <= rho1 V1(t_k^-) + rho2 sup V1 + chi3(|w(t_k^-)|)`` at every impulse.

    The sup runs over grid samples (and recorded left limits) in
    ``[t_k - tau, t_k)`` together with the initial function where that window
    reaches before ``t0``.
    """
    smp = _samples(traj, params)
    h, tau = traj.h, params.tau
    span = int(math.ceil(tau / h - GRID_RTOL))
    hist_v1 = params.v1(traj.initial(-h * np.arange(1, span + 1))) if span else np.zeros(0)
    out = []
    for rec in traj.impulses:
        j = rec.index
        window = ((smp.nodes >= j - span) & (smp.nodes <= j) & ~((smp.nodes == j) & ~smp.is_left)
                  & ~((smp.nodes == j - span) & smp.is_left))
        sup_v1 = float(np.max(smp.v1[window]))
        if j - span < 0 and len(hist_v1):
            sup_v1 = max(sup_v1, float(np.max(hist_v1[: span - j])))
        lhs = float(params.v1(rec.x_plus))
        rhs = (params.rho1 * float(params.v1(rec.x_minus)) + params.rho2 * sup_v1
               + float(params.chi3_of(np.linalg.norm(rec.w_minus))))
        out.append(JumpCheck(rec.time, lhs, rhs))
    return out


def functional_bound_ratio(traj: Trajectory, params: EnvelopeParams) -> float:
    """Largest ``V2 / (kappa sup V1)`` over the samples; at most 1 when the functional bound holds.

    The sup runs over the grid samples in ``[t - r, t]`` and, before ``t0``,
    over the initial function at grid offsets.
    """
    if params.r == 0:
        return 0.0
    smp = _samples(traj, params)
    h = traj.h
    m = int(round(params.r / h))
    N = len(traj.times)
    node_max = np.full(N, -np.inf)
    np.maximum.at(node_max, smp.nodes, smp.v1)
    hist_v1 = params.v1(traj.initial(h * np.arange(-m, 0)))
    padded = np.concatenate((hist_v1, node_max))
    # window k of size m + 1 covers nodes k - m .. k
    win_incl = sliding_window_view(padded, m + 1).max(axis=1)
    # window of size m ending at node j - 1 covers nodes j - m .. j - 1
    win_prev = sliding_window_view(padded, m).max(axis=1)
    sup = np.where(smp.is_left, np.maximum(win_prev[smp.nodes], smp.v1), win_incl[smp.nodes])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sup > 0, smp.v2 / (params.kappa * sup), 0.0)
    return float(np.max(ratio))
