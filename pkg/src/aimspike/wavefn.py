"""Eigenfunction reconstruction from a converged iteration state.

The stable ratio rho(r) = s_n(r; E) / lambda_n(r; E) of the final iteration
state is the logarithmic derivative -f'/f of the correction factor, so

    psi(r) = psi_a(r) * f(r),     f(r) = exp(-int rho dt)

recovers the eigenfunction up to normalization.  Excited states make f
vanish at their nodes, where rho has a simple pole; the integral is taken in
principal value around each pole with a sign flip per crossing, which
restores f including its sign and keeps node counting meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .engine import AimState, ConvergenceReport, Termination
from .errors import ConfigurationError, PoleError, ReconstructionError
from .problem import ProblemSpec, ansatz_for
from .symcore import PowerCache, precision, sf_eval

__all__ = [
    "WavefnSamples",
    "default_radii",
    "node_count",
    "reconstruct",
    "rho_at",
]

_POLE_EPS = mpf("1e-6")
_QUAD_TOL = mpf("1e-10")


@dataclass(frozen=True)
class WavefnSamples:
    """Unnormalized eigenfunction samples and their grid L2 norm.

    values are raw psi_a * f products; normalization is the trapezoid
    L2 norm over the sampled radii, so values[i] / normalization integrates
    to one on the same grid.
    """

    radii: tuple
    values: tuple
    normalization: mpf

    def normalized(self) -> tuple:
        return tuple(v / self.normalization for v in self.values)


class _FrozenRho:
    """rho with the energy substituted once, for bulk evaluation.

    Collapsing each term's E-polynomial to a scalar up front turns every
    later point evaluation into a plain power sum, which is what makes the
    quadrature affordable on late-iteration states with hundreds of terms.
    """

    def __init__(self, state: AimState, energy):
        if state.lam is None:
            raise ConfigurationError(
                "eigenfunction reconstruction needs a symbolic state; jet "
                "states only know derivative data at their base point")
        self.lam_items = [(p, c(energy)) for p, c in state.lam.terms.items()]
        self.s_items = [(p, c(energy)) for p, c in state.s.terms.items()]

    def pair(self, r):
        r = mpf(r)
        if r <= 0:
            raise ConfigurationError(f"rho is defined for r > 0, got {r}")
        pc = PowerCache(r)
        lam_val = sum((c * pc(p) for p, c in self.lam_items), mpf(0))
        s_val = sum((c * pc(p) for p, c in self.s_items), mpf(0))
        return lam_val, s_val

    def __call__(self, r) -> mpf:
        lam_val, s_val = self.pair(r)
        if lam_val == 0:
            raise PoleError(f"lambda_n vanishes at r={mpf(r)}", location=mpf(r))
        return s_val / lam_val


def rho_at(state: AimState, r, energy) -> mpf:
    """The ratio s_n/lambda_n at radius r with the energy frozen.

    Raises a pole error where lambda_n vanishes; callers probing near a node
    should perturb r by ~1e-6.
    """
    if state.lam is None:
        raise ConfigurationError(
            "rho needs a symbolic state; jet states only know derivative "
            "data at their base point")
    r = mpf(r)
    if r <= 0:
        raise ConfigurationError(f"rho is defined for r > 0, got {r}")
    pc = PowerCache(r)
    lam_val = sf_eval(state.lam, r, pc)(energy)
    if lam_val == 0:
        raise PoleError(f"lambda_n vanishes at r={r}", location=r)
    return sf_eval(state.s, r, pc)(energy) / lam_val


def _find_poles(rho: _FrozenRho, a, b, scan: int = 400) -> list:
    """Zeros of lambda_n(r; energy) on [a, b] as (location, residue, regular).

    Sign-scan plus bisection.  The residue of rho at each zero separates a
    genuine node of f (residue -1, since rho = -f'/f) from a finite-n
    artifact where s_n nearly shares the zero (residue ~ 0); both kinds get
    a principal-value window, only genuine nodes flip the sign of f.  The
    regular part of rho at the zero (the edge mean; pole parts cancel) lets
    the integration put back what the window excludes.
    """
    pts = [a + (b - a) * k / scan for k in range(scan + 1)]
    vals = [rho.pair(r)[0] for r in pts]
    poles = []
    for k in range(scan):
        if vals[k] == 0 or vals[k] * vals[k + 1] >= 0:
            continue
        lo, hi = pts[k], pts[k + 1]
        for _ in range(60):
            mid = (lo + hi) / 2
            lam_mid = rho.pair(mid)[0]
            if lam_mid == 0:
                lo = hi = mid
                break
            if lam_mid * vals[k] > 0:
                lo = mid
            else:
                hi = mid
        x = (lo + hi) / 2
        above, below = rho(x + _POLE_EPS), rho(x - _POLE_EPS)
        residue = _POLE_EPS * (above - below) / 2
        poles.append((x, residue, (above + below) / 2))
    return poles


def _adaptive_simpson(f, a, b, tol) -> mpf:
    fa, fb = f(a), f(b)
    m = (a + b) / 2
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)

    def recurse(a, m, b, fa, fm, fb, whole, tol, depth):
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth > 40:
            raise ReconstructionError(
                f"quadrature failed to settle near r={m}", location=m)
        if abs(left + right - whole) < 15 * tol:
            return left + right + (left + right - whole) / 15
        return (recurse(a, lm, m, fa, flm, fm, left, tol / 2, depth + 1)
                + recurse(m, rm, b, fm, frm, fb, right, tol / 2, depth + 1))

    return recurse(a, m, b, fa, fm, fb, whole, tol, 0)


def reconstruct(spec: ProblemSpec, report: ConvergenceReport,
                radii) -> WavefnSamples:
    """Sample the eigenfunction psi_a * exp(-int rho) at the given radii.

    The integration starts at the smallest radius (f there is taken as 1;
    the overall scale is arbitrary before normalization).  Principal-value
    windows of half-width 1e-6 around each pole of rho keep the quadrature
    finite; a requested radius inside such a window is unrecoverable and
    raises a reconstruction error with the pole location.
    """
    if report.termination is not Termination.CONVERGED:
        raise ConfigurationError(
            f"reconstruction needs a CONVERGED report, got {report.termination}")
    radii = [mpf(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise ConfigurationError("radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigurationError("radii must be strictly ascending")
    state = report.final_state
    if state is None:
        raise ConfigurationError("report carries no final iteration state")
    ansatz = ansatz_for(spec)

    # Evaluating rho at distance d from a node cancels about 2*log10(1/d)
    # digits in lambda_n, twelve at the window edge; the guard keeps the
    # integrand noise below the quadrature tolerance at the caller's dps.
    with precision(mp.dps + 25):
        rho = _FrozenRho(state, report.energy)
        poles = _find_poles(rho, radii[0], radii[-1])
        for x, _, _ in poles:
            for r in radii:
                if abs(r - x) <= _POLE_EPS:
                    raise ReconstructionError(
                        f"sample radius {r} sits inside the pole window at {x}",
                        location=x)

        def smooth(r):
            val = rho(r)
            for x, res, _ in poles:
                val -= res / (r - x)
            return val

        def integrate(a, b) -> tuple:
            """(principal-value integral of rho over [a, b], sign flips).

            Every detected pole is subtracted from the integrand and put
            back in closed form (its principal value over [a, b] is
            res * ln(|b - x| / |a - x|), window included by symmetry), so
            the quadrature only ever sees the smooth remainder even when a
            sample radius sits just outside a pole window.
            """
            inside = [entry for entry in poles if a < entry[0] < b]
            total = mpf(0)
            flips = 0
            lo = a
            for x, res, reg in inside:
                total += _adaptive_simpson(smooth, lo, x - _POLE_EPS,
                                           _QUAD_TOL)
                # the window's smooth remainder: the edge mean less the
                # other poles' parts there (the pole's own term cancels
                # edge to edge)
                other = sum(r2 / (x - x2) for x2, r2, _ in poles if x2 != x)
                total += 2 * _POLE_EPS * (reg - other)
                lo = x + _POLE_EPS
                if abs(res + 1) < mpf("0.5"):
                    flips += 1
            total += _adaptive_simpson(smooth, lo, b, _QUAD_TOL)
            for x, res, _ in poles:
                total += res * (mp.log(abs(b - x)) - mp.log(abs(a - x)))
            return total, flips

        values = []
        f_val = mpf(1)
        for k, r in enumerate(radii):
            if k > 0:
                piece, flips = integrate(radii[k - 1], r)
                f_val *= mp.exp(-piece) * (-1) ** flips
            values.append(ansatz.psi(r) * f_val)

        sq = [v * v for v in values]
        if len(radii) > 1:
            norm_sq = sum((sq[k] + sq[k + 1]) * (radii[k + 1] - radii[k]) / 2
                          for k in range(len(radii) - 1))
        else:
            norm_sq = sq[0]
        norm = mp.sqrt(norm_sq)
    values = [+v for v in values]
    norm = +norm
    if norm == 0 or not mp.isfinite(norm):
        raise ReconstructionError("reconstructed samples have no finite norm")
    return WavefnSamples(tuple(radii), tuple(values), norm)


def node_count(samples: WavefnSamples) -> int:
    """Strict sign changes of the samples, ignoring near-zero entries."""
    if len(samples.values) < 10:
        raise ConfigurationError(
            f"node counting needs >= 10 samples, got {len(samples.values)}")
    peak = max(abs(v) for v in samples.values)
    body = [v for v in samples.values if abs(v) > mpf("1e-9") * peak]
    return sum(1 for a, b in zip(body, body[1:]) if a * b < 0)


def default_radii(spec: ProblemSpec, count: int = 400) -> list:
    """Evenly spaced radii covering where the asymptotic factor lives.

    Ends are placed where psi_a falls to 1e-8 of its peak, which keeps the
    smallest sample deep inside the Dirichlet suppression and the largest
    in the Gaussian tail.
    """
    if count < 10:
        raise ConfigurationError(f"count must be >= 10, got {count}")
    ansatz = ansatz_for(spec)
    peak = ansatz.maximizer()
    target = ansatz.log_psi(peak) - 8 * mp.log(10)

    def edge(lo, hi):
        for _ in range(80):
            mid = (lo + hi) / 2
            if ansatz.log_psi(mid) > target:
                hi = mid
            else:
                lo = mid
        return (lo + hi) / 2

    r_lo = edge(mpf("1e-12"), peak)
    # outer edge: Gaussian guarantees a sign change of log_psi - target
    hi = peak
    while ansatz.log_psi(hi) > target:
        hi *= 2
    r_hi = edge_out = hi
    lo = hi / 2
    for _ in range(80):
        mid = (lo + edge_out) / 2
        if ansatz.log_psi(mid) > target:
            lo = mid
        else:
            edge_out = mid
    r_hi = edge_out
    step = (r_hi - r_lo) / (count - 1)
    return [r_lo + step * k for k in range(count)]
