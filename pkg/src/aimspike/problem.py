"""Problem setup for the spiked oscillator r**2 + gamma*(gamma+1)/r**2 + lam/r**alpha.

Given the physical parameters, this module classifies the singularity regime,
builds the coefficient pair (lam0, s0) that seeds the iteration, exposes the
asymptotic wavefunction factor psi_a, and supplies heuristics for the
evaluation point r0.  The alpha = 2 case is solved in closed form here and
never reaches the iteration engine.

Parameters are stored as exact rationals so that a spec constructed from
"0.1" means one tenth at every working precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from mpmath import mp, mpf

from .errors import ConfigurationError, DomainError
from .symcore import EPoly, SymFunc, to_big

__all__ = [
    "Ansatz",
    "ProblemSpec",
    "Regime",
    "ansatz_for",
    "build_pair",
    "build_soft",
    "build_supersingular",
    "effective_potential",
    "exact_alpha2",
    "gamma_from_angular",
    "potential_minimizer",
    "r0_heuristic",
]


class Regime(Enum):
    SOFT = "soft"                    # 0 < alpha < 2
    CRITICAL = "critical"            # alpha = 2, closed form
    SUPERSINGULAR = "supersingular"  # alpha > 2


def _rational(x, name: str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # repr round-trips the decimal the user typed, not the binary float
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    raise ConfigurationError(f"{name} must be rational-valued, got {type(x).__name__}")


def gamma_from_angular(l: int, n_dim: int) -> Fraction:
    """Centrifugal parameter for angular momentum l in n_dim spatial dimensions."""
    if l < 0:
        raise ConfigurationError(f"angular momentum must be non-negative, got {l}")
    if n_dim < 1:
        raise ConfigurationError(f"dimension must be at least 1, got {n_dim}")
    return Fraction(2 * l + n_dim - 3, 2)


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable description of one bound-state problem.

    alpha > 0 is the singularity exponent, lam >= 0 the coupling, gamma the
    centrifugal parameter (>= -1/2 so gamma*(gamma+1) >= -1/4), and
    state_index the radial quantum number of the level sought.
    """

    alpha: Fraction
    lam: Fraction
    gamma: Fraction
    state_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _rational(self.alpha, "alpha"))
        object.__setattr__(self, "lam", _rational(self.lam, "lam"))
        object.__setattr__(self, "gamma", _rational(self.gamma, "gamma"))
        if self.alpha <= 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if self.lam < 0:
            raise ConfigurationError(f"lam must be non-negative, got {self.lam}")
        if self.gamma < Fraction(-1, 2):
            raise ConfigurationError(f"gamma must be at least -1/2, got {self.gamma}")
        if not isinstance(self.state_index, int) or self.state_index < 0:
            raise ConfigurationError(f"state_index must be a non-negative integer, got {self.state_index}")

    @classmethod
    def from_angular(cls, alpha, lam, l: int, n_dim: int, state_index: int = 0) -> "ProblemSpec":
        return cls(alpha, lam, gamma_from_angular(l, n_dim), state_index)

    @property
    def regime(self) -> Regime:
        if self.alpha < 2:
            return Regime.SOFT
        if self.alpha == 2:
            return Regime.CRITICAL
        return Regime.SUPERSINGULAR

    @property
    def m(self) -> Fraction:
        """Spike strength exponent (alpha - 2)/2; meaningful for alpha > 2."""
        return (self.alpha - 2) / 2

    def with_state(self, state_index: int) -> "ProblemSpec":
        return ProblemSpec(self.alpha, self.lam, self.gamma, state_index)


@dataclass(frozen=True)
class Ansatz:
    """Asymptotic factor psi_a = r**pre * exp(-r**2/2 - spike/r**m).

    SOFT: pre = gamma+1, no spike term.  SUPERSINGULAR: pre = (m+1)/2 and
    spike = sqrt(lam)/m, which kills both the r -> 0 and r -> inf divergences
    of the full problem.
    """

    regime: Regime
    prefactor_exponent: Fraction
    lam: Fraction
    m: Fraction | None = None

    def spike_coefficient(self) -> mpf:
        if self.regime is not Regime.SUPERSINGULAR:
            return mpf(0)
        return mp.sqrt(to_big(self.lam)) / to_big(self.m)

    def log_psi(self, r) -> mpf:
        r = mpf(r)
        if r <= 0:
            raise DomainError(f"psi_a needs r > 0, got {r}")
        out = to_big(self.prefactor_exponent) * mp.log(r) - r * r / 2
        if self.regime is Regime.SUPERSINGULAR:
            out -= self.spike_coefficient() * r ** (-to_big(self.m))
        return out

    def psi(self, r) -> mpf:
        return mp.exp(self.log_psi(r))

    def dlog_psi(self, r) -> mpf:
        """Logarithmic derivative psi_a'/psi_a."""
        r = mpf(r)
        if r <= 0:
            raise DomainError(f"psi_a needs r > 0, got {r}")
        out = to_big(self.prefactor_exponent) / r - r
        if self.regime is Regime.SUPERSINGULAR:
            out += mp.sqrt(to_big(self.lam)) * r ** (-to_big(self.m) - 1)
        return out

    def maximizer(self) -> mpf:
        """Location of the peak of psi_a (unique: dlog falls from +inf to -inf)."""
        lo, hi = mpf("1e-4"), mpf(20)
        if self.dlog_psi(lo) <= 0:
            return lo
        if self.dlog_psi(hi) >= 0:
            return hi
        for _ in range(80):
            mid = (lo + hi) / 2
            if self.dlog_psi(mid) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def ansatz_for(spec: ProblemSpec) -> Ansatz:
    if spec.regime is Regime.SUPERSINGULAR and spec.lam > 0:
        return Ansatz(Regime.SUPERSINGULAR, (spec.m + 1) / 2, spec.lam, spec.m)
    return Ansatz(Regime.SOFT, spec.gamma + 1, spec.lam)


def _sqrt_lam(spec: ProblemSpec) -> mpf:
    return mp.sqrt(to_big(spec.lam))


def build_supersingular(spec: ProblemSpec) -> tuple[SymFunc, SymFunc]:
    """Coefficient pair for alpha > 2, lam > 0.

    lam0 = 2r - 2*sqrt(lam)*r**(-m-1) - (1+m)/r
    s0   = (2+m) + 2*sqrt(lam)*r**(-m) + (2g+1-m)(2g+1+m)/4 * r**-2 - E
    """
    if spec.alpha <= 2:
        raise ConfigurationError(f"supersingular builder needs alpha > 2, got {spec.alpha}")
    if spec.lam == 0:
        raise ConfigurationError(
            "lam = 0 with alpha > 2 has no spike factor; build the soft pair instead"
        )
    m = spec.m
    root = _sqrt_lam(spec)
    lam0 = SymFunc({
        Fraction(1): [2],
        -m - 1: [-2 * root],
        Fraction(-1): [-to_big(1 + m)],
    })
    g2 = 2 * spec.gamma + 1
    quad = (g2 - m) * (g2 + m) / 4
    # pair list, not a dict: at m = 2 the spike exponent -m collides with the
    # centrifugal -2 and the two coefficients must merge
    s0_terms = [
        (Fraction(0), EPoly([to_big(2 + m), -1])),
        (-m, EPoly([2 * root])),
    ]
    if quad != 0:
        s0_terms.append((Fraction(-2), EPoly([to_big(quad)])))
    return lam0, SymFunc(s0_terms)


def build_soft(spec: ProblemSpec) -> tuple[SymFunc, SymFunc]:
    """Coefficient pair for 0 < alpha < 2, lam >= 0.

    lam0 = 2r - 2*(gamma+1)/r;  s0 = (2*gamma+3) + lam*r**(-alpha) - E
    """
    if spec.alpha >= 2:
        raise ConfigurationError(f"soft builder needs alpha < 2, got {spec.alpha}")
    lam0 = SymFunc({
        Fraction(1): [2],
        Fraction(-1): [-2 * to_big(spec.gamma + 1)],
    })
    s0_terms = {Fraction(0): EPoly([to_big(2 * spec.gamma + 3), -1])}
    if spec.lam != 0:
        s0_terms[-spec.alpha] = [to_big(spec.lam)]
    return lam0, SymFunc(s0_terms)


def build_pair(spec: ProblemSpec) -> tuple[SymFunc, SymFunc]:
    """Dispatch to the regime's builder; alpha = 2 never iterates."""
    if spec.regime is Regime.CRITICAL:
        raise ConfigurationError("alpha = 2 is solved in closed form; no coefficient pair exists")
    if spec.regime is Regime.SUPERSINGULAR and spec.lam == 0:
        # the spike ansatz degenerates; the problem is the plain oscillator
        return build_soft(ProblemSpec(Fraction(1), 0, spec.gamma, spec.state_index))
    if spec.regime is Regime.SOFT:
        return build_soft(spec)
    return build_supersingular(spec)


def exact_alpha2(spec: ProblemSpec) -> mpf:
    """Closed-form level for alpha = 2: absorb lam into the centrifugal term.

    gamma' solves gamma'*(gamma'+1) = gamma*(gamma+1) + lam with
    gamma' >= -1/2, giving E = 4n + 3 + 2*gamma'.
    """
    if spec.alpha != 2:
        raise ConfigurationError(f"closed form applies only at alpha = 2, got {spec.alpha}")
    g = to_big(spec.gamma)
    lam = to_big(spec.lam)
    g_eff = mpf(-1) / 2 + mp.sqrt((g + mpf(1) / 2) ** 2 + lam)
    return 4 * spec.state_index + 3 + 2 * g_eff


def effective_potential(spec: ProblemSpec, r) -> mpf:
    """r**2 + gamma*(gamma+1)/r**2 + lam/r**alpha at a point r > 0."""
    r = mpf(r)
    if r <= 0:
        raise DomainError(f"potential needs r > 0, got {r}")
    g = to_big(spec.gamma)
    out = r * r + g * (g + 1) / (r * r)
    if spec.lam != 0:
        out += to_big(spec.lam) * r ** (-to_big(spec.alpha))
    return out


def potential_minimizer(spec: ProblemSpec) -> mpf:
    """Location of the minimum of the effective potential on (0, 20]."""
    lo, hi = mpf("1e-4"), mpf(20)
    n = 200
    ratio = (hi / lo) ** (mpf(1) / (n - 1))
    xs = [lo * ratio ** k for k in range(n)]
    vals = [effective_potential(spec, x) for x in xs]
    i = min(range(n), key=lambda k: vals[k])
    if i == 0 or i == n - 1:
        return xs[i]
    a, b = xs[i - 1], xs[i + 1]
    # V' changes sign across an interior minimum
    g = to_big(spec.gamma)
    lam = to_big(spec.lam)
    alpha = to_big(spec.alpha)

    def dv(r):
        out = 2 * r - 2 * g * (g + 1) / r ** 3
        if lam:
            out -= alpha * lam * r ** (-alpha - 1)
        return out

    if dv(a) >= 0 or dv(b) <= 0:
        return xs[i]
    for _ in range(80):
        mid = (a + b) / 2
        if dv(mid) < 0:
            a = mid
        else:
            b = mid
    return (a + b) / 2


def r0_heuristic(spec: ProblemSpec) -> mpf:
    """Suggested evaluation point: the larger of the potential minimum and the
    psi_a peak, never below 3 (small couplings put both well inside the safe
    region, where evaluation at their literal location stalls)."""
    candidates = [potential_minimizer(spec), ansatz_for(spec).maximizer(), mpf(3)]
    return max(candidates)
