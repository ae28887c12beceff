"""Iteration engine: recursion, termination determinant, and the controller.

The recursion generates (lam_n, s_n) from (lam_0, s_0) via

    lam_n = lam_{n-1}' + s_{n-1} + lam_0 * lam_{n-1}
    s_n   = s_{n-1}'   + s_0 * lam_{n-1}

with the convention lam_{-1} = 1, s_{-1} = 0, so the iteration-0 state is
exactly (lam_0, s_0).  The termination determinant

    delta_n = lam_n * s_{n-1} - lam_{n-1} * s_n

evaluated at a point r0 is a polynomial in E whose tracked root converges to
the eigenvalue.  Two backends carry the recursion: "symbolic" keeps full
SymFunc objects in r, "jet" keeps arrays of derivative values at r0 and uses
the Leibniz rule for the lam_0 * lam_{n-1} products.  They must agree and are
tested against each other.

The controller (solve) tracks the root across iterations, confirms
convergence from consecutive root movements, detects oscillation of the
estimates, and responds by escalating the working precision, then by moving
r0 outward once, before giving up.

Internally the symbolic solver path runs the recursion in the scaled
variable u = r/r0: with L_n(u) = r0^(n+1) lam_n(r0 u) and
S_n(u) = r0^(n+2) s_n(r0 u) the recursion keeps its exact shape and the
determinant at u = 1 is a positive multiple of delta_n at r0, so every
tracked root is unchanged while evaluation reduces to column sums and a
coefficient's magnitude equals its contribution.  The public operations
(aim_step, delta_n, normalize, delta_sequence) keep the plain r form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from mpmath import mp, mpf

from .errors import (
    ConfigurationError,
    DegenerateStateError,
    JetExhaustionError,
    RootLostError,
)
from .problem import (
    ProblemSpec,
    Regime,
    build_pair,
    effective_potential,
    exact_alpha2,
    potential_minimizer,
    r0_heuristic,
)
from .symcore import (
    EPoly,
    PowerCache,
    SymFunc,
    epoly_real_roots,
    precision,
    sf_diff,
    sf_eval,
    to_big,
)

__all__ = [
    "AimState",
    "ConvergenceReport",
    "PrecisionPolicy",
    "Termination",
    "aim_step",
    "delta_n",
    "delta_sequence",
    "detect_oscillation",
    "identity_state",
    "normalize",
    "solve",
    "track_root",
    "trajectory",
]


class Termination(Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    OSCILLATION_UNRESOLVED = "oscillation_unresolved"


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working-precision schedule for a solve run.

    start_digits is bumped up to target_digits + 8 if set lower, keeping the
    guard-digit invariant without rejecting otherwise sensible requests;
    max_digits is bumped to start_digits for the same reason.  Escalation by
    escalation_step happens only when oscillation is detected.
    """

    start_digits: int = 30
    max_digits: int = 120
    escalation_step: int = 10
    target_digits: int = 7

    def __post_init__(self):
        if self.target_digits < 1:
            raise ConfigurationError(f"target_digits must be positive, got {self.target_digits}")
        if self.escalation_step < 1:
            raise ConfigurationError(f"escalation_step must be positive, got {self.escalation_step}")
        floor = self.target_digits + 8
        if self.start_digits < floor:
            object.__setattr__(self, "start_digits", floor)
        if self.max_digits < self.start_digits:
            object.__setattr__(self, "max_digits", self.start_digits)

    @property
    def tolerance(self) -> mpf:
        return mpf(10) ** (-self.target_digits)


class _JetBase:
    """Derivative values of (lam_0, s_0) at r0, orders 0..horizon."""

    __slots__ = ("r0", "lam0", "s0")

    def __init__(self, lam0: SymFunc, s0: SymFunc, r0: mpf, horizon: int):
        self.r0 = r0
        pc = PowerCache(r0)
        self.lam0: list[EPoly] = []
        self.s0: list[EPoly] = []
        f, g = lam0, s0
        for _ in range(horizon + 1):
            self.lam0.append(sf_eval(f, r0, pc))
            self.s0.append(sf_eval(g, r0, pc))
            f = sf_diff(f)
            g = sf_diff(g)


class AimState:
    """One iteration's (lam_n, s_n), in symbolic or jet form.

    Symbolic states hold SymFunc fields; jet states hold lists of EPoly
    derivative values at the base point, shrinking by one order per step so
    a state at iteration n constructed for horizon h keeps h - n + 1 orders.
    """

    __slots__ = ("n", "lam", "s", "lam_jets", "s_jets", "base")

    def __init__(self, n, lam=None, s=None, lam_jets=None, s_jets=None, base=None):
        self.n = n
        self.lam = lam
        self.s = s
        self.lam_jets = lam_jets
        self.s_jets = s_jets
        self.base = base

    @property
    def backend(self) -> str:
        return "symbolic" if self.lam is not None else "jet"

    def value_at(self, which: str, r0, powers: PowerCache | None = None) -> EPoly:
        """lam_n or s_n at r0 as a polynomial in E."""
        if self.lam is not None:
            f = self.lam if which == "lam" else self.s
            return sf_eval(f, r0, powers)
        jets = self.lam_jets if which == "lam" else self.s_jets
        return jets[0]


def identity_state(backend: str = "symbolic", *, lam0: SymFunc | None = None,
                   s0: SymFunc | None = None, r0=None, horizon: int | None = None) -> AimState:
    """The n = -1 seed (lam = 1, s = 0); one step turns it into (lam_0, s_0).

    The jet form needs lam0, s0, r0 and a horizon: derivative tables of the
    coefficient pair are precomputed here and shared by every descendant
    state, sized so that `horizon` steps are possible.
    """
    if backend == "symbolic":
        return AimState(-1, lam=SymFunc.constant([1]), s=SymFunc.constant([]))
    if backend != "jet":
        raise ConfigurationError(f"unknown backend {backend!r}")
    if lam0 is None or s0 is None or r0 is None or horizon is None:
        raise ConfigurationError("jet identity state needs lam0, s0, r0 and horizon")
    if horizon < 1:
        raise ConfigurationError(f"horizon must be positive, got {horizon}")
    base = _JetBase(lam0, s0, to_big(r0), horizon)
    size = horizon + 2
    one = [EPoly([1])] + [EPoly([]) for _ in range(size - 1)]
    zero = [EPoly([]) for _ in range(size)]
    return AimState(-1, lam_jets=one, s_jets=zero, base=base)


def aim_step(state: AimState, lam0: SymFunc, s0: SymFunc) -> AimState:
    """Advance one iteration.  Jet states use their precomputed base tables."""
    if state.lam is not None:
        lam_new = sf_diff(state.lam) + state.s + lam0 * state.lam
        s_new = sf_diff(state.s) + s0 * state.lam
        return AimState(state.n + 1, lam=lam_new, s=s_new)

    lj, sj = state.lam_jets, state.s_jets
    if len(lj) < 2:
        raise JetExhaustionError(
            f"jet state at iteration {state.n} has no derivative headroom; "
            "the identity state was sized with too small a horizon"
        )
    base = state.base
    new_len = len(lj) - 1
    lam_new = []
    s_new = []
    for k in range(new_len):
        acc_l = lj[k + 1] + sj[k]
        acc_s = sj[k + 1]
        for j in range(k + 1):
            w = math.comb(k, j)
            fac = lj[k - j]
            pl = base.lam0[j] * fac
            ps = base.s0[j] * fac
            if w != 1:
                pl = pl.scaled(w)
                ps = ps.scaled(w)
            acc_l = acc_l + pl
            acc_s = acc_s + ps
        lam_new.append(acc_l)
        s_new.append(acc_s)
    return AimState(state.n + 1, lam_jets=lam_new, s_jets=s_new, base=base)


def normalize(state: AimState) -> AimState:
    """Divide lam_n and s_n by their joint largest coefficient magnitude.

    A common positive E-independent scalar cancels in every later determinant,
    so root sets are unchanged; without it coefficients overflow across
    hundreds of iterations.  Symbolic states additionally shed terms whose
    coefficients sit below 10**(-2*digits) of the rescaled maximum, far under
    anything that can move a root at working precision.
    """
    if state.lam is not None:
        scale = max(state.lam.max_abs(), state.s.max_abs())
        if scale == 0:
            raise DegenerateStateError(f"iteration {state.n} produced the zero state")
        inv = 1 / scale
        floor = mpf(10) ** (-2 * mp.dps)
        lam = state.lam.scaled(inv).pruned(floor)
        s = state.s.scaled(inv).pruned(floor)
        return AimState(state.n, lam=lam, s=s)

    scale = mpf(0)
    for arr in (state.lam_jets, state.s_jets):
        for p in arr:
            m = p.max_abs()
            if m > scale:
                scale = m
    if scale == 0:
        raise DegenerateStateError(f"iteration {state.n} produced the zero state")
    inv = 1 / scale
    lam_jets = [p.scaled(inv) for p in state.lam_jets]
    s_jets = [p.scaled(inv) for p in state.s_jets]
    return AimState(state.n, lam_jets=lam_jets, s_jets=s_jets, base=state.base)


def delta_n(state: AimState, prev: AimState, r0, powers: PowerCache | None = None) -> EPoly:
    """Termination determinant lam_n*s_{n-1} - lam_{n-1}*s_n at r0, in E."""
    if state.n != prev.n + 1:
        raise ConfigurationError(f"need consecutive states, got n={state.n} after n={prev.n}")
    if state.lam is None and state.base.r0 != to_big(r0):
        raise ConfigurationError(f"jet state was built at r0={state.base.r0}, asked at {r0}")
    lam_n = state.value_at("lam", r0, powers)
    s_n = state.value_at("s", r0, powers)
    lam_p = prev.value_at("lam", r0, powers)
    s_p = prev.value_at("s", r0, powers)
    return lam_n * s_p - lam_p * s_n


def track_root(delta: EPoly, prev_estimate, window) -> mpf:
    """Root of delta nearest prev_estimate within +-window (widened x4 once)."""
    prev_estimate = to_big(prev_estimate)
    window = to_big(window)
    if window <= 0:
        raise ConfigurationError(f"window must be positive, got {window}")
    for w in (window, window * 4):
        # keep the scan density when the window widens
        pts = max(64, int(64 * w / window) if w > window else 64)
        roots = epoly_real_roots(delta, prev_estimate - w, prev_estimate + w, min(pts, 512))
        if roots:
            return min(roots, key=lambda r: abs(r - prev_estimate))
    raise RootLostError(
        f"no root within {window * 4} of {mp.nstr(prev_estimate, 12)}"
    )


def detect_oscillation(history, tol=0) -> bool:
    """True when the last six estimates flip direction more than twice and the
    movements are not already below tol (i.e. not merely converged jitter)."""
    if len(history) < 6:
        return False
    tail = [to_big(x) for x in history[-6:]]
    diffs = [tail[k + 1] - tail[k] for k in range(5)]
    if tol and max(abs(d) for d in diffs) < to_big(tol):
        return False
    signs = [1 if d > 0 else (-1 if d < 0 else 0) for d in diffs]
    changes = 0
    last = 0
    for s in signs:
        if s == 0:
            continue
        if last and s != last:
            changes += 1
        last = s
    return changes > 2


def _harmonic_estimate(spec: ProblemSpec) -> mpf:
    """Level estimate from the quadratic expansion around the potential minimum."""
    r_v = potential_minimizer(spec)
    g = to_big(spec.gamma)
    lam = to_big(spec.lam)
    a = to_big(spec.alpha)
    v2 = 2 + 6 * g * (g + 1) / r_v ** 4 + a * (a + 1) * lam * r_v ** (-a - 2)
    if v2 < 0:
        v2 = mpf(0)
    return effective_potential(spec, r_v) + (2 * spec.state_index + 1) * mp.sqrt(v2 / 2)


def _unperturbed_estimate(spec: ProblemSpec) -> mpf:
    return to_big(4 * spec.state_index + 2 * spec.gamma + 3)


def _scan_bracket(spec: ProblemSpec) -> tuple[mpf, mpf]:
    lo = to_big(2 * spec.gamma + 3)
    lam = to_big(spec.lam)
    spread = mpf(50)
    if lam > 0:
        spread = max(spread, 3 * lam ** (2 / (to_big(spec.alpha) + 2)))
    return lo, lo + spread


def _global_scan(delta: EPoly, spec: ProblemSpec, prefer: mpf) -> mpf | None:
    lo, hi = _scan_bracket(spec)
    roots = epoly_real_roots(delta, lo, hi, 1024)
    if not roots:
        return None
    return min(roots, key=lambda r: abs(r - prefer))


@dataclass(frozen=True)
class ConvergenceReport:
    """Everything one run produced.  history rows are (n, estimate, |change|);
    oscillation_events are (n, digits) pairs at detection points."""

    energy: mpf
    iterations_used: int
    history: tuple
    r0_used: mpf
    digits_used: int
    termination: Termination
    backend: str
    oscillation_events: tuple = ()
    final_state: AimState | None = None


_JET_START_HORIZON = 96

_z = mpf(0)


def _fused_items(sf: SymFunc, r0, shift: int) -> list[tuple]:
    """Terms of sf conjugated to u = r/r0, as (exponent, E-coefficient tuple).

    A term c*r**p maps to c*r0**(p+shift) * u**p; shift is 1 for lam_0 and 2
    for s_0, matching the conjugation orders L_n ~ r0^(n+1), S_n ~ r0^(n+2).
    """
    pc = PowerCache(r0)
    items = []
    for p in sf.exponents():
        w = pc(p + shift)
        items.append((p, tuple(c * w for c in sf.terms[p].coeffs)))
    return items


def _add_into(cur: list, vals, k: int):
    """cur[k:] += vals elementwise, growing cur as needed."""
    need = k + len(vals)
    if len(cur) < need:
        cur.extend([_z] * (need - len(cur)))
    cur[k:need] = [a + b for a, b in zip(cur[k:need], vals)]


def _acc(dst: dict, key, src, coeff):
    """dst[key] += coeff*src where coeff is an E-coefficient tuple (None = 1)."""
    cur = dst.get(key)
    if cur is None:
        cur = []
        dst[key] = cur
    if coeff is None:
        _add_into(cur, src, 0)
        return
    for k, c in enumerate(coeff):
        if c:
            _add_into(cur, [c * v for v in src], k)


def _fused_step(lam: dict, s: dict, lam0_items, s0_items, dcache: dict):
    """One recursion step on exponent->coefficient-list states in u."""
    new_lam: dict = {}
    new_s: dict = {}
    for p, cl in lam.items():
        if p:
            d = dcache.get(p)
            if d is None:
                d = to_big(p)
                dcache[p] = d
            _acc(new_lam, p - 1, [d * v for v in cl], None)
        for q, cc in lam0_items:
            _acc(new_lam, p + q, cl, cc)
        for q, cc in s0_items:
            _acc(new_s, p + q, cl, cc)
    for p, cl in s.items():
        if p:
            d = dcache.get(p)
            if d is None:
                d = to_big(p)
                dcache[p] = d
            _acc(new_s, p - 1, [d * v for v in cl], None)
        _acc(new_lam, p, cl, None)
    return new_lam, new_s


def _weighted_max(cl, e_powers: list, e_scale) -> mpf:
    while len(e_powers) < len(cl):
        e_powers.append(e_powers[-1] * e_scale)
    m = _z
    for k, c in enumerate(cl):
        if c:
            w = abs(c) * e_powers[k]
            if w > m:
                m = w
    return m


def _colsum(d: dict) -> EPoly:
    out: list = []
    for cl in d.values():
        if len(out) < len(cl):
            out.extend([_z] * (len(cl) - len(out)))
        out[:len(cl)] = [a + b for a, b in zip(out, cl)]
    return EPoly(out)


def _fused_scale(lam, s, n, normalize_states, floor_ratio, e_powers, e_scale,
                 want_sums):
    """Joint rescale by the weighted coefficient maximum, prune, column-sum.

    The weight e_scale**k on the k-th E-coefficient keeps pruning honest when
    the eigenvalue is large: what matters is a term's contribution to delta
    evaluations near the tracked root, not its raw size.  Rescaling by a
    common positive scalar leaves every determinant root unchanged.
    """
    entries = []
    big = _z
    for d in (lam, s):
        for key, cl in d.items():
            m = _weighted_max(cl, e_powers, e_scale)
            entries.append((d, key, m))
            if m > big:
                big = m
    if big == 0:
        raise DegenerateStateError(f"iteration {n} produced the zero state")
    if normalize_states:
        inv = 1 / big
        floor = big * floor_ratio
        for d, key, m in entries:
            if m < floor:
                del d[key]
            else:
                d[key] = [c * inv for c in d[key]]
    if not want_sums:
        return None
    return _colsum(lam), _colsum(s)


def _fused_state(n, lam, s, r0) -> AimState:
    """Back to a plain-r symbolic AimState, up to one common positive scalar.

    Undoing u**p -> r0**-p r**p leaves the extra conjugation order on s
    (S_n ~ r0 * L_n's order), so s picks up 1/r0; the s/lam ratio, which is
    what downstream consumers of a final state use, is then exact.
    """
    pc = PowerCache(r0)
    inv_r0 = 1 / r0
    lam_sf = SymFunc((p, EPoly([c * pc(-p) for c in cl])) for p, cl in lam.items())
    s_sf = SymFunc((p, EPoly([c * pc(-p) * inv_r0 for c in cl])) for p, cl in s.items())
    return AimState(n, lam=lam_sf, s=s_sf)


def _fused_deltas(lam0, s0, r0, n_max, start_n, normalize_states, e_scale):
    """Yield (n, delta, state_handle) for n = 1..n_max in the u variable.

    delta is None while n < start_n (nothing tracks that early, so sums and
    the delta product are skipped); state_handle materializes the current
    state as a symbolic AimState on demand.
    """
    lam0_items = _fused_items(lam0, r0, 1)
    s0_items = _fused_items(s0, r0, 2)
    dcache: dict = {}
    e_powers = [mpf(1)]
    floor_ratio = mpf(10) ** (-2 * mp.dps)
    lam = {p: list(cl) for p, cl in lam0_items}
    s = {p: list(cl) for p, cl in s0_items}
    first_sum = max(0, start_n - 1)
    cur_sums = _fused_scale(lam, s, 0, normalize_states, floor_ratio,
                            e_powers, e_scale, first_sum <= 0)
    for n in range(1, n_max + 1):
        lam, s = _fused_step(lam, s, lam0_items, s0_items, dcache)
        prev_sums = cur_sums
        cur_sums = _fused_scale(lam, s, n, normalize_states, floor_ratio,
                                e_powers, e_scale, n >= first_sum)
        if n < start_n or prev_sums is None:
            yield n, None, None
            continue
        lam_n, s_n = cur_sums
        lam_p, s_p = prev_sums
        delta = lam_n * s_p - lam_p * s_n
        yield n, delta, (lambda L=lam, S=s, N=n: _fused_state(N, L, S, r0))


def _jet_deltas(lam0, s0, r0, n_max, start_n, normalize_states):
    """Yield (n, delta, state_handle) from the jet backend at r0."""
    powers = PowerCache(r0)
    state = identity_state("jet", lam0=lam0, s0=s0, r0=r0, horizon=n_max + 1)
    state = aim_step(state, lam0, s0)
    if normalize_states:
        state = normalize(state)
    for n in range(1, n_max + 1):
        prev = state
        state = aim_step(state, lam0, s0)
        if normalize_states:
            state = normalize(state)
        if n < start_n:
            yield n, None, None
            continue
        yield n, delta_n(state, prev, r0, powers), (lambda S=state: S)


def _run_fixed(spec, lam0, s0, r0, digits, target_digits, n_max, k_confirm,
               backend, normalize_states, initial_guess, track_window,
               stop_on_oscillation):
    """One fixed-precision pass.  Returns (termination_or_None, history,
    events, final_state); termination None means oscillation stopped the run.
    Caller wraps this in a precision context.
    """
    r0 = to_big(r0)
    tol = mpf(10) ** (-target_digits)
    window = to_big(track_window)

    prefer = to_big(initial_guess) if initial_guess is not None else None
    if spec.lam > 1:
        # strong coupling: the early determinants have not yet organized into
        # level branches, and tracking from n = 1 follows a drifting branch
        # whatever the starting estimate; lock on only at n = 30
        est = None
        start_n = min(30, n_max)
        e_scale = (max(mpf(1), 2 * abs(prefer)) if prefer is not None
                   else max(mpf(1), _scan_bracket(spec)[1]))
    else:
        est = prefer if prefer is not None else _unperturbed_estimate(spec)
        # level j first enters the determinant at n = 2j (its radial
        # polynomial has degree 2j); tracking earlier locks onto lower levels
        start_n = min(max(1, 2 * spec.state_index), n_max)
        e_scale = max(mpf(1), 2 * abs(est))

    if backend == "symbolic":
        deltas = _fused_deltas(lam0, s0, r0, n_max, start_n, normalize_states,
                               e_scale)
    else:
        deltas = _jet_deltas(lam0, s0, r0, n_max, start_n, normalize_states)

    history: list[tuple] = []
    ests: list[mpf] = []
    events: list[tuple] = []
    confirms = 0
    prev_move = mp.inf
    live_window = window
    handle = None

    for n, delta, h in deltas:
        if delta is None:
            continue
        handle = h

        if est is None:
            found = _global_scan(delta, spec,
                                 prefer if prefer is not None
                                 else _harmonic_estimate(spec))
            if found is None:
                continue
            est = found
            history.append((n, est, mp.inf))
            ests.append(est)
            continue

        try:
            root = track_root(delta, est, live_window)
        except RootLostError:
            root = _global_scan(delta, spec, est)
            if root is None:
                continue
        move = abs(root - est)
        est = root
        history.append((n, est, move))
        ests.append(est)
        # shrink the window with the movement so drifting spurious roots
        # cannot capture the track once the estimate has settled
        live_window = min(window, max(50 * move, 10 * tol))

        # confirmation: each step must sit comfortably inside tol (converged
        # tails plateau with jitter around tol/10) or project a remaining
        # geometric-tail distance under tol/2; the net displacement across
        # the confirming steps then guards against slow creep that passes
        # the per-step gates individually
        if move < tol and (move == 0 or 5 * move <= tol
                           or _tail_projection(move, prev_move) <= tol / 2):
            confirms += 1
            if (confirms >= k_confirm and len(ests) > k_confirm
                    and abs(ests[-1] - ests[-1 - k_confirm]) < tol / 2):
                return (Termination.CONVERGED, history, events, handle(),
                        _extrapolated(ests))
        else:
            confirms = 0
        prev_move = move

        if detect_oscillation(ests, tol):
            events.append((n, digits))
            if stop_on_oscillation:
                return None, history, events, handle(), ests[-1]

    return (Termination.MAX_ITER, history, events,
            handle() if handle is not None else None,
            _extrapolated(ests) if ests else mp.nan)


def _tail_projection(move, prev_move):
    """Remaining distance in a geometric tail: move*q/(1-q) at q = move/prev_move."""
    if prev_move <= move:
        return mp.inf
    return move * move / (prev_move - move)


def _extrapolated(ests):
    """Aitken limit of a cleanly geometric tail, else the raw last estimate.

    Tracked roots often approach the eigenvalue geometrically; when the last
    three signed steps share a sign and a stable ratio away from 1, the
    remaining distance is d*q/(1-q) and adding it is worth one to two digits.
    Sign flips, ratio drift, or a near-unit ratio void the correction, so
    plateaued or jittering tails are reported raw.
    """
    if len(ests) < 4:
        return ests[-1]
    d1 = ests[-3] - ests[-4]
    d2 = ests[-2] - ests[-3]
    d3 = ests[-1] - ests[-2]
    if d1 == 0 or d2 == 0 or d3 == 0:
        return ests[-1]
    if (d1 > 0) != (d2 > 0) or (d2 > 0) != (d3 > 0):
        return ests[-1]
    r2 = d2 / d1
    r3 = d3 / d2
    lo, hi = mpf("0.2"), mpf("0.98")
    if not (lo <= r2 <= hi and lo <= r3 <= hi) or abs(r3 - r2) > mpf("0.1"):
        return ests[-1]
    return ests[-1] + d3 * r3 / (1 - r3)


def _report(spec, termination, history, events, state, r0, digits, backend,
            energy=None):
    if energy is None:
        energy = history[-1][1] if history else mp.nan
    return ConvergenceReport(
        energy=energy,
        iterations_used=history[-1][0] if history else 0,
        history=tuple(history),
        r0_used=to_big(r0),
        digits_used=digits,
        termination=termination,
        backend=backend,
        oscillation_events=tuple(events),
        final_state=state,
    )


def solve(spec: ProblemSpec, r0=None, policy: PrecisionPolicy | None = None,
          n_max: int = 500, k_confirm: int = 3, *, backend: str = "symbolic",
          normalize_states: bool = True, initial_guess=None,
          track_window=0.5) -> ConvergenceReport:
    """Find the eigenvalue for spec, managing precision and r0 escalation.

    r0 defaults to the problem heuristic.  Oscillation first escalates the
    working precision in policy steps; if max_digits is exhausted, r0 moves
    outward by 1 once and the digit ladder restarts; a second exhaustion
    reports OSCILLATION_UNRESOLVED.  Backends: "symbolic" (default) or "jet"
    (starts at a short derivative horizon and doubles it on MAX_ITER until
    n_max is covered).
    """
    if policy is None:
        policy = PrecisionPolicy()
    if n_max < 5:
        raise ConfigurationError(f"n_max must be at least 5, got {n_max}")
    if k_confirm < 2:
        raise ConfigurationError(f"k_confirm must be at least 2, got {k_confirm}")
    if backend not in ("symbolic", "jet"):
        raise ConfigurationError(f"unknown backend {backend!r}")

    if spec.regime is Regime.CRITICAL:
        with precision(policy.start_digits):
            energy = exact_alpha2(spec)
            r0_used = to_big(r0) if r0 is not None else r0_heuristic(spec)
        return ConvergenceReport(
            energy=energy, iterations_used=0, history=(), r0_used=r0_used,
            digits_used=policy.start_digits, termination=Termination.CONVERGED,
            backend="closed-form")

    if r0 is not None and to_big(r0) <= 0:
        raise ConfigurationError(f"r0 must be positive, got {r0}")

    digits = policy.start_digits
    r0_bumps_left = 1
    r0_current = r0
    guess = initial_guess
    all_events: list[tuple] = []
    last_detect_n = None

    while True:
        with precision(digits):
            r0_val = to_big(r0_current) if r0_current is not None else r0_heuristic(spec)
            lam0, s0 = build_pair(spec)
            if backend == "jet":
                outcome = _solve_jet_ladder(
                    spec, lam0, s0, r0_val, digits, policy, n_max, k_confirm,
                    normalize_states, guess, track_window)
            else:
                outcome = _run_fixed(
                    spec, lam0, s0, r0_val, digits, policy.target_digits,
                    n_max, k_confirm, "symbolic", normalize_states, guess,
                    track_window, stop_on_oscillation=True)
        termination, history, events, state, energy = outcome
        all_events.extend(events)

        if termination is Termination.CONVERGED or termination is Termination.MAX_ITER:
            return _report(spec, termination, history, all_events, state,
                           r0_val, digits, backend, energy)

        # oscillation: escalate digits, then bump r0 once, then give up.
        # When added digits leave the detection point where it was, the
        # instability is a property of this r0, not of round-off, so further
        # digits are wasted and r0 moves immediately.
        n_detect = events[-1][0] if events else None
        digits_stuck = (last_detect_n is not None and n_detect is not None
                        and abs(n_detect - last_detect_n) <= 3)
        last_detect_n = n_detect
        if history:
            guess = history[-1][1]
        bump_r0 = False
        if digits_stuck and r0_bumps_left > 0:
            bump_r0 = True
        elif digits + policy.escalation_step <= policy.max_digits:
            digits += policy.escalation_step
            continue
        elif r0_bumps_left > 0:
            bump_r0 = True
        if bump_r0:
            r0_bumps_left -= 1
            r0_current = (to_big(r0_current) if r0_current is not None
                          else r0_val) + 1
            digits = policy.start_digits
            last_detect_n = None
            continue
        return _report(spec, Termination.OSCILLATION_UNRESOLVED, history,
                       all_events, state, r0_val, digits, backend)


def _solve_jet_ladder(spec, lam0, s0, r0_val, digits, policy, n_max, k_confirm,
                      normalize_states, guess, track_window):
    """Jet runs start with a short horizon and double it on MAX_ITER; the cost
    of a horizon-h run is quartic in h, so overshooting n_max up front is far
    worse than replaying a failed short run."""
    horizon = min(n_max, _JET_START_HORIZON)
    while True:
        outcome = _run_fixed(
            spec, lam0, s0, r0_val, digits, policy.target_digits, horizon,
            k_confirm, "jet", normalize_states, guess, track_window,
            stop_on_oscillation=True)
        termination, history, events, state, energy = outcome
        if termination is Termination.MAX_ITER and horizon < n_max:
            if history:
                guess = history[-1][1]
            horizon = min(horizon * 2, n_max)
            continue
        return outcome


def trajectory(spec: ProblemSpec, r0, digits: int, n_max: int, *,
               target_digits: int = 7, k_confirm: int = 3,
               backend: str = "symbolic", normalize_states: bool = True,
               initial_guess=None, track_window=0.5) -> ConvergenceReport:
    """One fixed-precision pass with no escalation: the raw convergence story.

    Oscillation is recorded in the report, never acted on, so low-precision
    behaviour can be observed directly.  Jet runs use horizon = n_max.
    """
    if spec.regime is Regime.CRITICAL:
        raise ConfigurationError("alpha = 2 has no iteration trajectory")
    with precision(digits):
        r0_val = to_big(r0)
        lam0, s0 = build_pair(spec)
        termination, history, events, state, energy = _run_fixed(
            spec, lam0, s0, r0_val, digits, target_digits, n_max, k_confirm,
            backend, normalize_states, initial_guess, track_window,
            stop_on_oscillation=False)
    return _report(spec, termination, history, events, state, r0_val,
                   digits, backend, energy)


def delta_sequence(spec: ProblemSpec, r0, n_limit: int, *,
                   backend: str = "symbolic", normalize_states: bool = True):
    """Yield (n, delta_n) for n = 1..n_limit at the caller's precision.

    The raw determinants, mostly for studying root structure and for
    backend-agreement checks.  The recursion itself runs twelve digits above
    the caller (forty steps of an unnormalized chain lose about seven digits
    to rounding, in either representation), and each determinant is rounded
    back on the way out, so the coefficients are correct at the caller's
    precision rather than carrying backend-specific noise.
    """
    deltas = []
    with precision(mp.dps + 12):
        lam0, s0 = build_pair(spec)
        r0 = to_big(r0)
        powers = PowerCache(r0)
        if backend == "jet":
            state = identity_state("jet", lam0=lam0, s0=s0, r0=r0,
                                   horizon=n_limit + 1)
        else:
            state = identity_state()
        state = aim_step(state, lam0, s0)
        if normalize_states:
            state = normalize(state)
        for n in range(1, n_limit + 1):
            prev = state
            state = aim_step(state, lam0, s0)
            if normalize_states:
                state = normalize(state)
            deltas.append(delta_n(state, prev, r0, powers))
    for n, delta in enumerate(deltas, start=1):
        yield n, EPoly([+c for c in delta.coeffs])
