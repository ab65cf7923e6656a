import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swesat.errors import AdmissibilityError, ConfigurationError
from swesat.model import Direction, Regime, RegimeKind, reflection_coefficients, spectral_data
from swesat.sat import (
    BoundaryCountError,
    BoundaryData,
    PenaltySet,
    assemble_sat,
    boundary_data_from_physical,
    boundary_residuals,
    default_penalties,
    imposed_conditions,
    required_conditions,
    transmissive_setup,
    validate_penalties,
)

from conftest import REGIME_CASES, flow

SLOTS = ("tau01", "tau02", "tauN1", "tauN2")


def penalties_for(cfg, **overrides):
    sd = spectral_data(cfg)
    gamma = reflection_coefficients(cfg) if sd.regime.kind is RegimeKind.SUBCRITICAL else None
    return sd, default_penalties(sd, gamma, **overrides)


def literal_sat(q, t, sd, pen, data):
    """-gH/2 W^-1 S (tau r) at each end node, assembled with unit vectors."""
    cfg = sd.cfg
    n = q.size // 2
    h, u = q[:n], q[n:]
    w0 = sd.S.T @ np.array([h[0], u[0]])
    wN = sd.S.T @ np.array([h[-1], u[-1]])
    b1, b2 = data.b1(t), data.b2(t)
    if sd.regime.kind is RegimeKind.SUBCRITICAL:
        r01 = r02 = w0[0] - pen.gamma0 * w0[1] - b1
        rN1 = rN2 = wN[1] - pen.gamma1 * wN[0] - b2
    elif sd.regime.direction is Direction.POSITIVE:
        r01, r02, rN1, rN2 = w0[0] - b1, w0[1] - b2, 0.0, 0.0
    else:
        r01, r02, rN1, rN2 = 0.0, 0.0, wN[0] - b1, wN[1] - b2
    Winv = np.linalg.inv(cfg.W)
    e0 = np.zeros(n)
    e0[0] = 1.0
    eN = np.zeros(n)
    eN[-1] = 1.0
    sat0 = -cfg.gH / 2 * Winv @ sd.S @ np.array([pen.tau01 * r01, pen.tau02 * r02])
    satN = -cfg.gH / 2 * Winv @ sd.S @ np.array([pen.tauN1 * rN1, pen.tauN2 * rN2])
    return np.kron(sat0, e0) + np.kron(satN, eN)


class TestCounting:
    @pytest.mark.parametrize(
        "kind, direction, expected",
        [
            (RegimeKind.SUBCRITICAL, Direction.POSITIVE, (1, 1)),
            (RegimeKind.SUBCRITICAL, Direction.NEGATIVE, (1, 1)),
            (RegimeKind.SUBCRITICAL, Direction.ZERO, (1, 1)),
            (RegimeKind.CRITICAL, Direction.POSITIVE, (1, 0)),
            (RegimeKind.CRITICAL, Direction.NEGATIVE, (0, 1)),
            (RegimeKind.SUPERCRITICAL, Direction.POSITIVE, (2, 0)),
            (RegimeKind.SUPERCRITICAL, Direction.NEGATIVE, (0, 2)),
        ],
    )
    def test_required(self, kind, direction, expected):
        assert required_conditions(Regime(kind, direction)) == expected

    def test_defaults_impose_required(self, regime_flow):
        sd, pen = penalties_for(regime_flow)
        assert imposed_conditions(pen) == required_conditions(sd.regime)

    def test_outflow_sat_in_supercritical_refused(self):
        sd, pen = penalties_for(flow(2.0))
        with pytest.raises(BoundaryCountError):
            validate_penalties(PenaltySet(pen.regime, pen.tau01, pen.tau02, tauN1=1.0), sd)
        with pytest.raises(BoundaryCountError):
            default_penalties(sd, tauN2=1.0)

    def test_single_condition_in_supercritical_refused(self):
        sd, pen = penalties_for(flow(-2.0))
        with pytest.raises(BoundaryCountError):
            default_penalties(sd, tauN1=0.0)

    def test_critical_refuses_outflow(self):
        sd, _ = penalties_for(flow(1.0))
        with pytest.raises(BoundaryCountError):
            default_penalties(sd, tauN2=1.0)

    def test_subcritical_needs_both_ends(self):
        sd, pen = penalties_for(flow(0.5))
        with pytest.raises(BoundaryCountError):
            validate_penalties(PenaltySet(pen.regime, pen.tau01, pen.tau02, 0.0, 0.0, pen.gamma0, pen.gamma1), sd)

    @pytest.mark.parametrize("label, multiple", REGIME_CASES)
    def test_exhaustive_placement(self, label, multiple):
        """Only penalty patterns with the right count at each end are accepted."""
        sd, base = penalties_for(flow(multiple))
        want = required_conditions(sd.regime)
        for mask in range(16):
            values = {}
            for i, slot in enumerate(SLOTS):
                on = bool(mask >> i & 1)
                values[slot] = (getattr(base, slot) or 10.0) if on else 0.0
            pen = PenaltySet(base.regime, **values, gamma0=base.gamma0, gamma1=base.gamma1)
            try:
                validate_penalties(pen, sd)
                outcome = "accepted"
            except BoundaryCountError:
                outcome = "count"
            except AdmissibilityError:
                outcome = "value"
            if imposed_conditions(pen) != want:
                assert outcome == "count", (label, values)
            else:
                assert outcome != "count", (label, values)
        # the minimal pattern itself is accepted
        validate_penalties(base, sd)


class TestPenalties:
    def test_subcritical_equalities(self):
        sd, pen = penalties_for(flow(0.5))
        assert pen.tau01 == sd.lambda1
        assert pen.tau02 == pen.gamma0 * sd.lambda1
        assert pen.tauN2 == -sd.lambda2
        assert pen.tauN1 == -pen.gamma1 * sd.lambda2

    def test_subcritical_requires_gamma(self):
        with pytest.raises(ConfigurationError):
            default_penalties(spectral_data(flow(0.5)))

    def test_gamma_refused_outside_subcritical(self):
        with pytest.raises(ConfigurationError):
            default_penalties(spectral_data(flow(2.0)), (0.1, 0.1))

    def test_subcritical_override_breaks_equality(self):
        with pytest.raises(AdmissibilityError, match="tau01"):
            penalties_for(flow(0.5), tau01=100.0)

    @pytest.mark.parametrize("multiple, slot", [(2.0, "tau01"), (2.0, "tau02"), (-2.0, "tauN1"), (1.0, "tau01"),
                                                (-1.0, "tauN2")])
    def test_inequalities(self, multiple, slot):
        sd, pen = penalties_for(flow(multiple))
        bound = getattr(pen, slot)
        penalties_for(flow(multiple), **{slot: bound * 2})
        with pytest.raises(AdmissibilityError, match=slot):
            penalties_for(flow(multiple), **{slot: bound * 0.5})

    def test_validate_false_skips_checks(self):
        sd = spectral_data(flow(0.5))
        pen = default_penalties(sd, (5.0, 5.0), validate=False)
        assert pen.gamma0 == 5.0
        with pytest.raises(AdmissibilityError):
            validate_penalties(pen, sd)

    def test_regime_mismatch(self):
        _, pen = penalties_for(flow(2.0))
        with pytest.raises(ConfigurationError):
            validate_penalties(pen, spectral_data(flow(-2.0)))

    def test_as_dict_plain_floats(self):
        _, pen = penalties_for(flow(0.5))
        assert all(type(v) is float for v in pen.as_dict().values())


class TestAssembly:
    @settings(max_examples=60, deadline=None)
    @given(case=st.sampled_from(REGIME_CASES), seed=st.integers(0, 2**31), t=st.floats(0, 2))
    def test_matches_literal_formula(self, case, seed, t):
        cfg = flow(case[1])
        sd, pen = penalties_for(cfg)
        data = BoundaryData(lambda s: math.sin(s) + 0.3, lambda s: math.cos(3 * s))
        q = np.random.default_rng(seed).standard_normal(2 * 6)
        np.testing.assert_allclose(assemble_sat(q, t, sd, pen, data), literal_sat(q, t, sd, pen, data),
                                   atol=1e-12, rtol=1e-12)

    def test_only_end_nodes(self, regime_flow):
        sd, pen = penalties_for(regime_flow)
        q = np.random.default_rng(1).standard_normal(2 * 9).reshape(2, 9)
        sat = assemble_sat(q.ravel(), 0.0, sd, pen, BoundaryData.zero()).reshape(2, 9)
        assert np.all(sat[:, 1:-1] == 0)

    def test_zero_on_matching_data(self, regime_flow):
        sd, pen = penalties_for(regime_flow)
        q = np.random.default_rng(2).standard_normal((2, 5))
        w0, wN = sd.S.T @ q[:, 0], sd.S.T @ q[:, -1]
        if sd.regime.kind is RegimeKind.SUBCRITICAL:
            data = BoundaryData(lambda t: w0[0] - pen.gamma0 * w0[1], lambda t: wN[1] - pen.gamma1 * wN[0])
        elif sd.regime.direction is Direction.POSITIVE:
            data = BoundaryData(lambda t: w0[0], lambda t: w0[1])
        else:
            data = BoundaryData(lambda t: wN[0], lambda t: wN[1])
        assert np.abs(assemble_sat(q.ravel(), 0.3, sd, pen, data)).max() <= 1e-14

    def test_regime_mismatch(self):
        _, pen = penalties_for(flow(2.0))
        with pytest.raises(ConfigurationError):
            assemble_sat(np.zeros(8), 0.0, spectral_data(flow(0.5)), pen, BoundaryData.zero())


class TestPhysicalData:
    @settings(max_examples=60, deadline=None)
    @given(case=st.sampled_from(REGIME_CASES), a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 99))
    def test_transmissive_states_have_zero_residual(self, case, a, b, seed):
        """States whose inflow Riemann variables equal g1, g2 satisfy the characteristic conditions."""
        cfg = flow(case[1])
        sd, pen, data = transmissive_setup(cfg, lambda t: a, lambda t: b)
        r = math.sqrt(cfg.H / cfg.g)
        q = np.random.default_rng(seed).standard_normal((2, 4))
        kind, positive = sd.regime.kind, sd.regime.direction is Direction.POSITIVE

        def impose(k, plus=None, minus=None):
            # adjust node k so that (h + r u)/2 = plus and/or (h - r u)/2 = minus
            h, u = q[:, k]
            p = plus if plus is not None else (h + r * u) / 2
            m = minus if minus is not None else (h - r * u) / 2
            q[:, k] = [p + m, (p - m) / r]

        if kind is RegimeKind.SUBCRITICAL:
            impose(0, plus=a)
            impose(-1, minus=b)
        elif kind is RegimeKind.CRITICAL:
            impose(0, plus=a) if positive else impose(-1, minus=b)
        else:
            impose(0 if positive else -1, plus=a, minus=b)
        (r01, r02), (rN1, rN2) = boundary_residuals(q, 0.0, sd, pen, data)
        used = [pen.tau01 * r01, pen.tau02 * r02, pen.tauN1 * rN1, pen.tauN2 * rN2]
        assert max(abs(v) for v in used) <= 1e-11

    def test_supercritical_maps_through_eigenvectors(self):
        cfg = flow(2.0)
        sd = spectral_data(cfg)
        data = boundary_data_from_physical(cfg, lambda t: 0.7, lambda t: -0.2)
        r = math.sqrt(cfg.H / cfg.g)
        q = np.array([0.5, 0.9 / r])
        np.testing.assert_allclose([data.b1(0.0), data.b2(0.0)], sd.S.T @ q, atol=1e-14)

    def test_zero_data(self):
        data = BoundaryData.zero()
        assert data.b1(3.0) == 0.0 and data.b2(3.0) == 0.0
