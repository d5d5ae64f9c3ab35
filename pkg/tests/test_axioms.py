import numpy as np
import pytest

from riskenv.axioms import (
    DEMO_PAIR,
    AxiomKind,
    EnvelopeFlavor,
    Witness,
    check_axiom,
    fubini_check,
    gap_witness_var,
    random_comonotonic_pair,
    random_doubly_stochastic,
    replay_witness,
    ssd_certificate,
    ssd_coherent_value,
    trial_rng,
    verify_envelope,
)
from riskenv.errors import InvalidInput, NonUniformSpace, NoWitnessFound, SpecNotPositivelyHomogeneous
from riskenv.measures import (
    AVaR,
    ChoquetOf,
    DiscreteMeasure,
    DistortionOfP,
    Entropic,
    VaR,
    WorstCase,
    evaluate,
)
from riskenv.space import avar, build_space, is_comonotonic, ssd_dominates, uniform_space, var


def test_parse_axiom_names():
    assert AxiomKind.parse("com-additivity") is AxiomKind.COM_ADDITIVITY
    assert AxiomKind.parse("ID_CONVEXITY") is AxiomKind.ID_CONVEXITY
    with pytest.raises(InvalidInput):
        AxiomKind.parse("subadditivity")


def test_samplers():
    rng = trial_rng(42, 0)
    for _ in range(50):
        X, Y = random_comonotonic_pair(rng, 6)
        assert is_comonotonic(uniform_space(6), X, Y)
        D = random_doubly_stochastic(rng, 5)
        assert np.allclose(D.sum(axis=0), 1) and np.allclose(D.sum(axis=1), 1) and np.all(D >= 0)


def test_trial_streams_independent_of_order():
    a = trial_rng(42, 7).random(3)
    trial_rng(42, 3).random(10)
    assert np.array_equal(a, trial_rng(42, 7).random(3))


def test_spec_convexity_witness(u4):
    # hand-made witness: the midpoint has VaR 1 while both ends have VaR 0
    X = np.array([-2.0, 0, 0, 0])
    Y = np.array([0, -2.0, 0, 0])
    assert var(u4, (X + Y) / 2, 0.25) == 1.0
    assert var(u4, X, 0.25) == 0.0 and var(u4, Y, 0.25) == 0.0
    w = Witness({"X": tuple(X), "Y": tuple(Y), "alpha": 0.5}, 0, 0, 0)
    assert replay_witness("convexity", VaR(0.25), u4, w).margin == 1.0
    w = Witness({"X": tuple(X), "perms": [(0, 1, 2, 3), (1, 0, 2, 3)], "weights": (0.5, 0.5)}, 0, 0, 0)
    assert replay_witness("id-convexity", VaR(0.25), u4, w).margin == 1.0


@pytest.mark.parametrize("kind", ["convexity", "id-convexity"])
def test_var_violations_replay(u4, kind):
    rep = check_axiom(kind, VaR(0.25), u4, 1000, 42)
    assert not rep.holds
    again = replay_witness(kind, VaR(0.25), u4, rep.witness)
    assert again.margin == pytest.approx(rep.witness.margin, abs=1e-12)
    assert again.margin > 1e-9


def test_deterministic_reports(u4):
    a = check_axiom("convexity", VaR(0.25), u4, 1000, 42)
    b = check_axiom("convexity", VaR(0.25), u4, 1000, 42)
    assert a == b


@pytest.mark.parametrize(
    "kind", ["monotonicity", "translation-invariance", "positive-homogeneity", "com-additivity", "com-convexity", "law-invariance", "fsd-consistency"]
)
def test_var_passes(u4, kind):
    assert check_axiom(kind, VaR(0.25), u4, 300, 42).holds


def test_entropic_not_homogeneous(u4):
    assert not check_axiom("positive-homogeneity", Entropic(1.0), u4, 200, 42).holds
    assert check_axiom("convexity", Entropic(1.0), u4, 200, 42).holds


def test_law_dependent_needs_uniform():
    sp = build_space([0.2, 0.8])
    with pytest.raises(NonUniformSpace):
        check_axiom("law-invariance", VaR(0.5), sp, 10, 0)
    assert check_axiom("convexity", AVaR(0.5), sp, 50, 0).holds


def test_envelope_examples(u4, x0):
    rep = verify_envelope(EnvelopeFlavor.MONETARY, VaR(0.25), u4, x0)
    assert rep.holds and rep.details["attained"] == 1.0
    rep = verify_envelope(EnvelopeFlavor.POS_HOMOGENEOUS, VaR(0.25), u4, x0)
    assert rep.holds and rep.details["attained"] == pytest.approx(1.0, abs=1e-12)
    rep = verify_envelope(EnvelopeFlavor.SSD, AVaR(0.5), u4, x0)
    assert rep.holds and rep.details["attained"] == pytest.approx(2.5, abs=1e-12)
    rep = verify_envelope("law", VaR(0.25), u4, x0)
    assert rep.holds


def test_envelope_rejects_nonhomogeneous(u4, x0):
    with pytest.raises(SpecNotPositivelyHomogeneous):
        verify_envelope(EnvelopeFlavor.POS_HOMOGENEOUS, Entropic(1.0), u4, x0)
    with pytest.raises(NonUniformSpace):
        verify_envelope(EnvelopeFlavor.SSD, AVaR(0.5), build_space([0.2, 0.8]), [0, 1])


def test_envelope_detects_non_ssd_measure(u4):
    # VaR is not SSD-consistent, so its SSD envelope cannot attain it everywhere
    fails = 0
    for t in range(50):
        X = trial_rng(1, t).integers(-5, 6, 4).astype(float)
        if not verify_envelope(EnvelopeFlavor.SSD, VaR(0.5), u4, X, 20, t).holds:
            fails += 1
    assert fails > 0


def test_ssd_coherent_value_for_avar(u4):
    for t in range(30):
        X = trial_rng(9, t).uniform(-5, 5, 4)
        Z0 = X + avar(u4, X, 0.5)
        assert ssd_coherent_value(u4, Z0, X) == pytest.approx(avar(u4, X, 0.5), abs=1e-9)


def test_certificate_examples():
    sp = uniform_space(2)
    cert = ssd_certificate(sp, [0, 0], [-1, 1])
    assert cert is not None and cert.is_valid()
    assert np.allclose(cert.matrix, 0.5) and np.allclose(cert.slack, 0)
    assert ssd_certificate(sp, [-1, 1], [0, 0]) is None
    sp3 = uniform_space(3)
    cert = ssd_certificate(sp3, [3, 1, 2], [1, 2, 3])
    assert cert.is_valid() and cert.residual() <= 1e-12


def test_certificate_matches_partial_sums():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        X = rng.integers(-4, 5, n).astype(float)
        Y = rng.integers(-4, 5, n).astype(float)
        sp = uniform_space(n)
        cert = ssd_certificate(sp, X, Y)
        assert (cert is not None) == ssd_dominates(sp, X, Y)
        if cert is not None:
            assert cert.is_valid()


def test_gap_demo():
    sp = uniform_space(4)
    g = gap_witness_var(sp, 0.5)
    assert (g.X, g.Y) == DEMO_PAIR
    assert g.var_X == -3.0 and g.var_Y == -4.0 and g.ssd_holds
    X, Y = np.array(g.X), np.array(g.Y)
    assert var(sp, X + 1, 0.5) == -4.0 and var(sp, Y + 1, 0.5) == -5.0
    assert avar(sp, X, 0.5) == -1.0 and avar(sp, Y, 0.5) == 0.0


@pytest.mark.parametrize("n,t", [(5, 0.5), (6, 1.0), (4, 0.3), (8, 0.75)])
def test_gap_search_other_sizes(n, t):
    sp = uniform_space(n)
    g = gap_witness_var(sp, t)
    assert ssd_dominates(sp, g.X, g.Y)
    assert var(sp, g.X, t) > var(sp, g.Y, t)


def test_gap_none_at_level_zero():
    # VaR_0 is the worst case, which is SSD-consistent
    with pytest.raises(NoWitnessFound):
        gap_witness_var(uniform_space(4), 0.0, trials=200)


def test_fubini_examples(u4, x0):
    for t, expected in ((0.5, 2.5), (1.0, 0.0), (0.0, 4.0)):
        rep = fubini_check(u4, x0, DiscreteMeasure.point(t))
        assert rep.holds
        assert rep.details["lhs"] == pytest.approx(expected, abs=1e-12)
        assert rep.details["rhs"] == pytest.approx(expected, abs=1e-12)


def test_choquet_com_additivity_and_worst_case(u4):
    for c in (DistortionOfP(lambda u: u), DistortionOfP(lambda u: u * u)):
        assert check_axiom("com-additivity", ChoquetOf(c), u4, 300, 42).holds
    for kind in ("convexity", "ssd-consistency", "positive-homogeneity"):
        assert check_axiom(kind, WorstCase(), u4, 300, 42).holds


def test_evaluate_symmetry_used_by_checks(u4, x0):
    assert evaluate(VaR(0.25), u4, x0[::-1]) == evaluate(VaR(0.25), u4, x0)
