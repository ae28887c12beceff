"""Tests for eigenfunction reconstruction."""

from fractions import Fraction as F

import pytest
from mpmath import mp, mpf

from aimspike.engine import AimState, aim_step, identity_state, solve
from aimspike.errors import (ConfigurationError, PoleError,
                             ReconstructionError)
from aimspike.oracle import GridSpec, fd_eigenpair
from aimspike.problem import ProblemSpec, build_pair
from aimspike.symcore import SymFunc
from aimspike.wavefn import (WavefnSamples, default_radii, node_count,
                             reconstruct, rho_at)


@pytest.fixture(autouse=True)
def _precision():
    with mp.workdps(30):
        yield


SOFT = ProblemSpec(F(1), F(0), F(0))


def _state_at(spec, n):
    lam0, s0 = build_pair(spec)
    state = identity_state()
    for _ in range(n + 1):
        state = aim_step(state, lam0, s0)
    return state


def _trapezoid_norm_sq(radii, values):
    return sum((values[k] ** 2 + values[k + 1] ** 2)
               * (radii[k + 1] - radii[k]) / 2
               for k in range(len(radii) - 1))


class TestRhoAt:
    def test_ground_state_ratio_vanishes(self):
        # s_0 = 3 - E is identically zero at the ground energy; avoid r = 1
        # where lambda_0 = 2(r - 1/r) has its own zero
        state = _state_at(SOFT, 0)
        for r in (mpf("0.5"), mpf(2), mpf(3)):
            assert abs(rho_at(state, r, mpf(3))) < mpf("1e-25")

    def test_excited_ratio_matches_log_derivative(self):
        # at E=7 the correction factor is f = 1 - 2r^2/3, so the ratio must
        # equal -f'/f = -8/5 at r = 2, already at n = 2
        state = _state_at(SOFT, 2)
        got = rho_at(state, mpf(2), mpf(7))
        assert abs(got - mpf(-8) / 5) < mpf("1e-25")

    def test_pole_error_where_lambda_vanishes(self):
        state = AimState(0, lam=SymFunc.constant([]), s=SymFunc.constant([1]))
        with pytest.raises(PoleError) as exc:
            rho_at(state, mpf(1), mpf(3))
        assert exc.value.location == 1

    def test_jet_state_rejected(self):
        lam0, s0 = build_pair(SOFT)
        state = identity_state("jet", lam0=lam0, s0=s0, r0=3, horizon=4)
        with pytest.raises(ConfigurationError):
            rho_at(state, mpf(1), mpf(3))

    def test_nonpositive_radius_rejected(self):
        state = _state_at(SOFT, 0)
        with pytest.raises(ConfigurationError):
            rho_at(state, mpf(0), mpf(3))


@pytest.fixture(scope="module")
def ground_run():
    with mp.workdps(30):
        spec = SOFT
        report = solve(spec, r0=3)
        radii = default_radii(spec, 200)
        return spec, report, radii, reconstruct(spec, report, radii)


@pytest.fixture(scope="module")
def excited_run():
    with mp.workdps(30):
        spec = ProblemSpec(F(1), F(0), F(0), 1)
        report = solve(spec, r0=3, initial_guess=7.2)
        radii = default_radii(spec, 200)
        return spec, report, radii, reconstruct(spec, report, radii)


class TestReconstruct:
    def test_ground_state_matches_exact(self, ground_run):
        _, _, radii, samples = ground_run
        vals = samples.normalized()
        exact = [r * mp.exp(-r * r / 2) for r in radii]
        scale = mp.sqrt(_trapezoid_norm_sq(radii, exact))
        exact = [v / scale for v in exact]
        peak = max(abs(v) for v in vals)
        dev = max(abs(vals[k] - exact[k]) / peak for k in range(len(radii))
                  if abs(exact[k]) > mpf("1e-3") * peak)
        assert dev < mpf("1e-6")

    def test_ground_state_peaks_at_one(self, ground_run):
        _, _, radii, samples = ground_run
        vals = samples.normalized()
        r_peak = radii[max(range(len(vals)), key=lambda k: abs(vals[k]))]
        assert abs(r_peak - 1) < 0.05

    def test_dirichlet_suppression_at_inner_edge(self, ground_run):
        _, _, _, samples = ground_run
        peak = max(abs(v) for v in samples.values)
        assert abs(samples.values[0]) < mpf("1e-6") * peak

    def test_normalized_samples_integrate_to_one(self, ground_run):
        _, _, radii, samples = ground_run
        total = _trapezoid_norm_sq(radii, samples.normalized())
        assert abs(total - 1) < mpf("1e-4")

    def test_excited_state_has_one_node_at_known_root(self, excited_run):
        _, _, radii, samples = excited_run
        assert node_count(samples) == 1
        vals = samples.normalized()
        crossing = [k for k in range(len(vals) - 1) if vals[k] * vals[k + 1] < 0]
        assert len(crossing) == 1
        lo, hi = radii[crossing[0]], radii[crossing[0] + 1]
        assert lo < mp.sqrt(mpf(3) / 2) < hi

    def test_excited_state_matches_exact_through_the_node(self, excited_run):
        _, _, radii, samples = excited_run
        vals = samples.normalized()
        exact = [r * (1 - 2 * r * r / 3) * mp.exp(-r * r / 2) for r in radii]
        scale = mp.sqrt(_trapezoid_norm_sq(radii, exact))
        exact = [v / scale for v in exact]
        peak = max(abs(v) for v in vals)
        sign = 1 if vals[20] * exact[20] > 0 else -1
        dev = max(abs(vals[k] - sign * exact[k]) / peak
                  for k in range(len(radii))
                  if abs(exact[k]) > mpf("1e-3") * peak)
        assert dev < mpf("1e-6")

    def test_unconverged_report_rejected(self, ground_run):
        import dataclasses
        spec, report, radii, _ = ground_run
        from aimspike.engine import Termination
        broken = dataclasses.replace(report, termination=Termination.MAX_ITER)
        with pytest.raises(ConfigurationError):
            reconstruct(spec, broken, radii)

    def test_bad_radii_rejected(self, ground_run):
        spec, report, _, _ = ground_run
        with pytest.raises(ConfigurationError):
            reconstruct(spec, report, [2.0, 1.0])
        with pytest.raises(ConfigurationError):
            reconstruct(spec, report, [-1.0, 1.0])
        with pytest.raises(ConfigurationError):
            reconstruct(spec, report, [])

    def test_sample_inside_pole_window_rejected(self, excited_run):
        spec, report, _, _ = excited_run
        node = mp.sqrt(mpf(3) / 2)
        with pytest.raises(ReconstructionError) as exc:
            reconstruct(spec, report, [mpf(1), node + mpf("1e-9"), mpf(2)])
        assert abs(exc.value.location - node) < mpf("1e-5")


class TestSupersingularReconstruction:
    def test_ground_state_nodeless_and_suppressed(self):
        spec = ProblemSpec(F(4), F(1, 10), F(0))
        report = solve(spec, r0=3)
        radii = default_radii(spec, 120)
        samples = reconstruct(spec, report, radii)
        assert node_count(samples) == 0
        vals = samples.normalized()
        peak = max(abs(v) for v in vals)
        assert abs(vals[0]) < mpf("1e-6") * peak


class TestNodeCount:
    def test_needs_ten_samples(self):
        samples = WavefnSamples((mpf(1),) * 9, (mpf(1),) * 9, mpf(1))
        with pytest.raises(ConfigurationError):
            node_count(samples)

    def test_exact_ground_zero_nodes(self):
        radii = [mpf(k) / 10 for k in range(1, 60)]
        vals = [r * mp.exp(-r * r / 2) for r in radii]
        s = WavefnSamples(tuple(radii), tuple(vals),
                          mp.sqrt(_trapezoid_norm_sq(radii, vals)))
        assert node_count(s) == 0

    def test_exact_excited_one_node(self):
        radii = [mpf(k) / 10 for k in range(1, 60)]
        vals = [r * (1 - 2 * r * r / 3) * mp.exp(-r * r / 2) for r in radii]
        s = WavefnSamples(tuple(radii), tuple(vals),
                          mp.sqrt(_trapezoid_norm_sq(radii, vals)))
        assert node_count(s) == 1

    def test_near_zero_entries_ignored(self):
        radii = tuple(mpf(k) for k in range(1, 13))
        vals = [mpf(1)] * 12
        vals[5] = mpf("-1e-12")  # numerical dust, not a crossing
        s = WavefnSamples(radii, tuple(vals), mpf(1))
        assert node_count(s) == 0

    def test_fd_oracle_ground_vector_nodeless(self):
        spec = ProblemSpec(F(4), F(1), F(0))
        _, r, vec = fd_eigenpair(spec, GridSpec(1e-3, 12.0, 1500))
        s = WavefnSamples(tuple(mpf(x) for x in r),
                          tuple(mpf(float(v)) for v in vec), mpf(1))
        assert node_count(s) == 0


class TestDefaultRadii:
    def test_ends_are_deep_in_the_tails(self):
        from aimspike.problem import ansatz_for
        for spec in (SOFT, ProblemSpec(F(4), F(1, 10), F(0))):
            radii = default_radii(spec, 50)
            ans = ansatz_for(spec)
            peak = ans.log_psi(ans.maximizer())
            assert ans.log_psi(radii[0]) < peak - 6 * mp.log(10)
            assert ans.log_psi(radii[-1]) < peak - 6 * mp.log(10)

    def test_count_and_ordering(self):
        radii = default_radii(SOFT, 37)
        assert len(radii) == 37
        assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_small_count_rejected(self):
        with pytest.raises(ConfigurationError):
            default_radii(SOFT, 5)
