"""Independent eigenvalue checks: finite differences, shooting, perturbation.

Three mutually independent routes to the same eigenvalues the iteration
engine produces, used to validate it to roughly six to nine digits:

* fd_eigenvalue discretizes the radial equation on a uniform grid with
  Dirichlet ends and Richardson-extrapolates two resolutions;
* shoot_eigenvalue integrates outward from the asymptotic inner form and
  inward from Gaussian decay, then bisects the log-derivative mismatch;
* perturbation_first_order evaluates the closed-form first-order shift,
  valid only while the matrix element converges (alpha < 2*gamma + 3).

All three work in ordinary floating point; they are accuracy references,
not high-precision producers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from .errors import AccuracyError, BracketError, ConfigurationError, DomainError
from .problem import ProblemSpec, Regime, ansatz_for, potential_minimizer
from .symcore import to_big

__all__ = [
    "GridSpec",
    "default_grid",
    "fd_eigenpair",
    "fd_eigenvalue",
    "perturbation_first_order",
    "shoot_eigenvalue",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform radial grid: interior points between truncation radii."""

    r_min: float
    r_max: float
    points: int

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ConfigurationError(
                f"need 0 < r_min < r_max, got [{self.r_min}, {self.r_max}]")
        if self.points < 100:
            raise ConfigurationError(f"points must be >= 100, got {self.points}")


_SPIKE_EXPONENT = 30.0


def default_grid(spec: ProblemSpec, points: int = 9000) -> GridSpec:
    """Problem-sized grid.

    The inner truncation acts like a hard wall, and for soft problems
    (u ~ r**(gamma+1) at the origin) the wall shifts the eigenvalue linearly
    in r_min, exactly like a scattering length, so r_min must sit far below
    the intended accuracy: 1e-7 keeps the shift near 2e-7.  Supersingular
    problems suppress the wavefunction as exp(-c*r**-m), so the wall goes
    where that exponent reaches -30.  The outer radius follows the classical
    turning point of the estimated level so large-lambda states stay inside.
    """
    alpha = float(spec.alpha)
    lam = float(spec.lam)
    gamma = float(spec.gamma)
    if spec.regime is Regime.SUPERSINGULAR:
        m = float(spec.m)
        c = math.sqrt(lam) / m
        r_min = (c / _SPIKE_EXPONENT) ** (1.0 / m)
    else:
        r_min = 1e-7
    level = 4 * spec.state_index + 2 * gamma + 3
    if lam > 0:
        # crude upper estimate of the level for the turning-point radius
        level += lam * max(1.0, r_min) ** (-min(alpha, 2.0)) if alpha >= 2 else 0
        level = max(level, 3 * lam ** (2.0 / (alpha + 2)))
    r_max = max(12.0, math.sqrt(level) + 6.0)
    return GridSpec(r_min=r_min, r_max=r_max, points=points)


def _potential(spec: ProblemSpec, r: np.ndarray) -> np.ndarray:
    alpha = float(spec.alpha)
    lam = float(spec.lam)
    gamma = float(spec.gamma)
    v = r * r
    if gamma != 0.0:
        v = v + gamma * (gamma + 1.0) / (r * r)
    if lam != 0.0:
        v = v + lam * r ** (-alpha)
    return v


def _fd_levels(spec: ProblemSpec, grid: GridSpec, points: int, which: int,
               vectors: bool):
    """Eigenvalues (and optionally vectors) of the three-point discretization.

    The grid spans [r_min, r_max] with `points` interior nodes; both ends are
    Dirichlet walls (the matrix simply omits them).
    """
    r = np.linspace(grid.r_min, grid.r_max, points + 2)[1:-1]
    h = r[1] - r[0]
    diag = 2.0 / (h * h) + _potential(spec, r)
    off = np.full(points - 1, -1.0 / (h * h))
    if vectors:
        vals, vecs = eigh_tridiagonal(diag, off, select="i",
                                      select_range=(which, which))
        return vals[0], r, vecs[:, 0]
    vals = eigvalsh_tridiagonal(diag, off, select="i",
                                select_range=(which, which))
    return vals[0]


def fd_eigenvalue(spec: ProblemSpec, grid: GridSpec | None = None,
                  which: int = 0, tolerance: float = 1e-5) -> mpf:
    """Richardson-extrapolated finite-difference eigenvalue (which-th lowest).

    Runs the discretization at the grid's resolution and at double
    resolution; the h**2 error term cancels in (4*E_fine - E_coarse)/3.  The
    two raw values must already agree to `tolerance` relative, otherwise the
    grid is too coarse for the request and an accuracy error carries both.
    """
    if which < 0:
        raise ConfigurationError(f"which must be non-negative, got {which}")
    if grid is None:
        grid = default_grid(spec)
    e_coarse = _fd_levels(spec, grid, grid.points, which, vectors=False)
    e_fine = _fd_levels(spec, grid, 2 * grid.points + 1, which, vectors=False)
    if abs(e_fine - e_coarse) > tolerance * max(1.0, abs(e_fine)):
        raise AccuracyError(
            f"finite-difference grid too coarse: {e_coarse!r} vs {e_fine!r}",
            values=(e_coarse, e_fine))
    return mpf((4.0 * e_fine - e_coarse) / 3.0)


def fd_eigenpair(spec: ProblemSpec, grid: GridSpec | None = None,
                 which: int = 0):
    """(energy, radii, unnormalized eigenvector) at the grid's resolution.

    No Richardson pass: the vector is wanted on a concrete grid, for node
    counting and shape comparison, where the plain value is accurate enough.
    """
    if which < 0:
        raise ConfigurationError(f"which must be non-negative, got {which}")
    if grid is None:
        grid = default_grid(spec)
    energy, r, vec = _fd_levels(spec, grid, grid.points, which, vectors=True)
    return mpf(energy), r, vec


def _ansatz_floats(spec: ProblemSpec):
    """(prefactor exponent a, spike coefficient c, spike order m) as floats;
    the ansatz is r**a * exp(-r**2/2 - c*r**-m), with c = 0 for soft."""
    ans = ansatz_for(spec)
    a = float(ans.prefactor_exponent)
    if ans.regime is Regime.SUPERSINGULAR:
        return a, float(ans.spike_coefficient()), float(spec.m)
    return a, 0.0, 1.0


def _shoot_mismatch(spec: ProblemSpec, energy: float, grid: GridSpec,
                    r_match: float, rtol: float) -> float:
    """Log-derivative mismatch at r_match between outward and inward sweeps.

    Both sweeps integrate u'' = (V - E) u with solve_ivp and start from the
    asymptotic forms: outward from the inner ansatz, inward from Gaussian
    decay.  The mismatch u'/u|out - u'/u|in is scale-free, so neither sweep
    needs renormalizing; integration in several segments keeps the dynamic
    range of (u, u') inside double-precision exponents anyway.
    """
    a, c, m = _ansatz_floats(spec)

    def rhs(r, y):
        return [y[1], (_potential(spec, np.asarray(r)) - energy) * y[0]]

    def sweep(r_from, r_to, dlog_start):
        u, du = 1.0, dlog_start
        segs = 8
        bounds = np.linspace(r_from, r_to, segs + 1)
        for k in range(segs):
            sol = solve_ivp(rhs, (bounds[k], bounds[k + 1]), [u, du],
                            method="DOP853", rtol=rtol, atol=1e-280)
            u, du = sol.y[0, -1], sol.y[1, -1]
            scale = max(abs(u), abs(du))
            if scale == 0.0 or not math.isfinite(scale):
                raise BracketError(
                    f"sweep degenerated at r={bounds[k + 1]:.3g}, E={energy}")
            u, du = u / scale, du / scale
        return du / u if u != 0 else math.inf

    dlog_in = a / grid.r_min - grid.r_min + c * m * grid.r_min ** (-m - 1.0)
    out = sweep(grid.r_min, r_match, dlog_in)
    dlog_out = -grid.r_max + a / grid.r_max
    inw = sweep(grid.r_max, r_match, dlog_out)
    return out - inw


def shoot_eigenvalue(spec: ProblemSpec, grid: GridSpec | None = None,
                     bracket: tuple = (2.0, 10.0), target_digits: int = 9,
                     rtol: float = 1e-12) -> mpf:
    """Eigenvalue by outward/inward shooting and bisection on the bracket.

    The matching point is the potential minimum (clamped inside the grid),
    where both sweeps are comfortably oscillatory-free.  The bracket must
    change the sign of the mismatch; bisection then narrows it to
    10**-target_digits.
    """
    if grid is None:
        grid = default_grid(spec)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ConfigurationError(f"bad bracket {bracket}")
    # Match where the solution is classically active and E-sensitive.  The
    # potential minimum handles strongly coupled wells; the ansatz peak takes
    # over when the minimum degenerates toward the origin (small lam).
    r_match = max(float(potential_minimizer(spec)),
                  float(ansatz_for(spec).maximizer()))
    r_match = min(max(r_match, grid.r_min * 4), grid.r_max / 2)

    f_lo = _shoot_mismatch(spec, lo, grid, r_match, rtol)
    f_hi = _shoot_mismatch(spec, hi, grid, r_match, rtol)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise BracketError(
            f"no sign change of the shooting mismatch on [{lo}, {hi}]: "
            f"{f_lo:.3g} and {f_hi:.3g}")
    tol = 10.0 ** (-target_digits)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = _shoot_mismatch(spec, mid, grid, r_match, rtol)
        if f_mid == 0.0:
            return mpf(mid)
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return mpf(0.5 * (lo + hi))


def perturbation_first_order(spec: ProblemSpec) -> mpf:
    """First-order ground-state shift (2*gamma+3) + lam*G(gamma+(3-alpha)/2)/G(gamma+3/2).

    The expectation of r**-alpha in the unperturbed ground state converges
    only for alpha < 2*gamma + 3; at or beyond that the matrix element (and
    every higher order) diverges, which is the defining failure of the
    supersingular regime.
    """
    if spec.state_index != 0:
        raise ConfigurationError(
            "first-order shift implemented for the ground state only")
    a, g, lam = to_big(spec.alpha), to_big(spec.gamma), to_big(spec.lam)
    if a >= 2 * g + 3:
        raise DomainError(
            f"matrix element of r**-alpha diverges for alpha={spec.alpha} "
            f">= 2*gamma+3={2 * spec.gamma + 3}")
    return (2 * g + 3) + lam * mp.gamma(g + (3 - a) / 2) / mp.gamma(g + mpf(3) / 2)
