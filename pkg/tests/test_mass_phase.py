from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from augstab import mass_phase as mp_
from augstab.mass_phase import (
    EmptyMeasureError,
    MassMeasure,
    PhaseSequence,
    SemisimpleTriangle,
    c_t,
    check_cosh_mass_bound,
    check_filtration_inequality,
    check_gt_inequality,
    check_image_bound,
    check_triangle,
    check_truncated_triangle,
    cosh_threshold,
    ell_t,
    filtration_constant,
    filtration_constant_loop,
    g_t,
    m_t,
    max_gt_on_polygon,
    phi_t,
    r_eps,
    truncate,
)
from conftest import rng_from, seeds

TWO = MassMeasure.of([(0, 1), (1, 1)])


# ----------------------------------------------------------------------
# frozen values (computed independently by hand or with mpmath)
# ----------------------------------------------------------------------
def test_polynomial_mass_values():
    assert m_t(MassMeasure.of([(0, 1)]), 3.7) == 1
    assert m_t(TWO, 1) == pytest.approx(1 + math.e, rel=1e-15)
    assert m_t(TWO, 1) == pytest.approx(3.718281828459045, rel=1e-15)
    shifted = MassMeasure.of([(0.4, 1), (1.4, 1)])
    assert m_t(shifted, 2) == pytest.approx(math.exp(0.8) * m_t(TWO, 2), rel=1e-14)
    with pytest.raises(EmptyMeasureError):
        m_t(MassMeasure(), 1)


def test_smoothed_phase_values():
    assert phi_t(MassMeasure.of([(0.3, 2)]), -4) == pytest.approx(0.3, abs=1e-15)
    assert phi_t(TWO, 0) == 0.5
    # (1/10) log((1 + e^10) / 2)
    assert phi_t(TWO, 10) == pytest.approx(0.9306898218339271, rel=1e-14)
    assert phi_t(TWO, 10) == pytest.approx(math.log((1 + math.exp(10)) / 2) / 10, rel=1e-14)
    assert phi_t(TWO, math.inf) == 1 and phi_t(TWO, -math.inf) == 0
    assert phi_t(TWO, 200) == pytest.approx(1 - math.log(2) / 200, rel=1e-12)


def test_log_central_charge_values():
    assert ell_t(TWO, 0) == pytest.approx(complex(math.log(2), math.pi / 2))
    w, th = 2.5, 0.3
    assert ell_t(MassMeasure.of([(th, w)]), 5.0) == pytest.approx(complex(math.log(w), math.pi * th))
    # the relative charge is invariant under the simultaneous shift
    z = complex(0.7, 0.4 * math.pi)
    mu, ref = MassMeasure.of([(0.1, 1), (0.8, 3)]), MassMeasure.of([(0.2, 2)])
    rel = mp_.relative_ell_t(mu, ref, 1.5)
    assert mp_.relative_ell_t(mu.shift(z), ref.shift(z), 1.5) == pytest.approx(rel, abs=1e-13)


def test_concentration_values():
    assert c_t(MassMeasure.of([(0.2, 3)]), 9.0) == 1.0
    assert c_t(TWO, 1) == pytest.approx(math.cosh(0.5), rel=1e-15)
    assert c_t(TWO, 1) == pytest.approx(1.1276259652063807, rel=1e-15)
    assert c_t(TWO, 2) >= c_t(TWO, 1) >= 1


def test_truncation_cases():
    assert truncate(TWO, 0.5, "<=").atoms == ((0.0, 1.0),)
    assert truncate(TWO, 0.5, ">").atoms == ((1.0, 1.0),)
    assert truncate(TWO, -1, "<=").atoms == ()
    with pytest.raises(ValueError):
        truncate(TWO, 0, "?")


def test_g_t_values():
    assert g_t(3 - 4j, 0) == 5
    assert g_t(1j, 1) == pytest.approx(math.exp(0.5), rel=1e-15)
    assert g_t(1j, 1) == pytest.approx(1.6487212707001282, rel=1e-15)
    assert g_t(-1, 2.5) == pytest.approx(math.exp(2.5))
    with pytest.raises(ValueError):
        g_t(0, 1)


def test_gt_lemma_example():
    z = PhaseSequence.sorted_from([-1, 1j])
    w = PhaseSequence((-1 + 1j,))
    rep = check_gt_inequality(z, w, 0.0)
    assert rep.conditions_hold
    assert rep.margin == pytest.approx(2 - math.sqrt(2), rel=1e-14)
    assert rep.margin == pytest.approx(0.5857864376269049, rel=1e-14)
    same = check_gt_inequality(z, z, 1.3)
    assert same.conditions_hold and same.margin == 0
    with pytest.raises(ValueError):
        check_gt_inequality(z, PhaseSequence((1j,)), 0.0)


def test_polygon_maximum_examples():
    assert max_gt_on_polygon([1, 2], 1.7) == pytest.approx(2)
    assert max_gt_on_polygon([0, 1j, 1 + 1j], 0) == pytest.approx(math.sqrt(2), rel=1e-9)
    # horizontal edge: the interior critical point is a minimum, so an endpoint wins
    t = 2.0
    val = max_gt_on_polygon([-3 + 1j, 3 + 1j], t)
    assert val == pytest.approx(max(g_t(-3 + 1j, t), g_t(3 + 1j, t)), rel=1e-9)


def test_image_bound_example():
    rep = check_image_bound(PhaseSequence((2j,)), PhaseSequence((1j,)), 0.5, 0.5, 0.3)
    assert rep.brute_max == pytest.approx(math.exp(0.15), rel=1e-9)
    assert rep.bound == pytest.approx(2 * math.exp(0.15), rel=1e-12)
    assert rep.holds and rep.bound - rep.brute_max > 0


def test_r_eps_and_filtration_constant():
    assert r_eps(0.5, 0) == 1
    assert filtration_constant(2, 0.25, 0) == pytest.approx(4.0, rel=1e-15)
    assert filtration_constant_loop(2, 0.25, 0) == pytest.approx(4.0, rel=1e-15)
    for n in range(1, 6):
        for eps in (0.1, 0.5, 0.9):
            for t in (-2.0, 0.0, 1.5):
                assert filtration_constant(n, eps, t) == pytest.approx(filtration_constant_loop(n, eps, t), rel=1e-12)
    with pytest.raises(ValueError):
        r_eps(1.0, 0)


def test_cosh_threshold_example():
    assert cosh_threshold(0.1, 2, 1, 1) == pytest.approx(1.1275434, abs=1e-7)
    rep = check_cosh_mass_bound(MassMeasure.of([(0.3, 2)]), 2, 1, 1, 0.1)
    assert rep.hypothesis_holds and rep.tails == 0 and rep.ok
    with pytest.raises(ValueError):
        check_cosh_mass_bound(TWO, 1, 2, 1, 0.1)


def test_split_triangle_examples():
    E, G = MassMeasure.of([(0.7, 1), (1.2, 2)]), MassMeasure.of([(-0.4, 3)])
    rep = check_triangle(E, E + G, G, 1.1, 0.0)
    assert rep.left == pytest.approx(0, abs=1e-12)
    assert rep.left_holds and rep.right_holds
    filt = check_filtration_inequality([MassMeasure.of([(0.2, 1)])], MassMeasure.of([(0.2, 1)]), [], 0.3, 1.0)
    assert filt.total == filt.mass_e and filt.left_holds and filt.right_holds


def test_mass_additivity_on_split_models():
    rng = rng_from(5)
    for _ in range(200):
        tri = mp_.random_semisimple_triangle(rng)
        t, a = rng.uniform(-3, 3), rng.uniform(-1.5, 1.5)
        assert mp_.check_mass_additivity(tri, t, a) >= -1e-12 * (1 + m_t(tri.E, t, allow_empty=True))
        split = SemisimpleTriangle(MassMeasure(), tri.I, tri.Q)
        assert abs(mp_.check_mass_additivity(split, t, a)) <= 1e-12 * (1 + m_t(split.F, t, allow_empty=True))


def test_unsorted_cut_points():
    F = [MassMeasure.of([(0.1, 1)])] * 3
    with pytest.raises(ValueError):
        check_filtration_inequality(F, F[0], [0.5, 0.2], 0.3, 1.0)


# ----------------------------------------------------------------------
# properties
# ----------------------------------------------------------------------
def _measure(seed: int) -> MassMeasure:
    return mp_.random_measure(rng_from(seed), 5, 2.0, empty_ok=False)


ts = st.floats(-6, 6)


@given(seeds, ts)
def test_jensen(seed, t):
    mu = _measure(seed)
    lhs = mu.total * math.exp(t * phi_t(mu, 0))
    assert lhs <= m_t(mu, t) * (1 + 1e-12)


@given(seeds, ts)
def test_phase_is_monotone(seed, t):
    mu = _measure(seed)
    assert (phi_t(mu, t + 1e-5) - phi_t(mu, t)) / 1e-5 >= -1e-7
    assert mu.phases[0] - 1e-12 <= phi_t(mu, t) <= mu.phases[-1] + 1e-12


@given(seeds, ts)
def test_concentration_is_one_only_for_single_phase(seed, t):
    mu = _measure(seed)
    single = MassMeasure.of([(mu.phases[0], mu.total)])
    assert c_t(single, t) == 1.0
    if len(mu.phases) > 1 and abs(t) * (mu.phases[-1] - mu.phases[0]) > 1e-6:
        assert c_t(mu, t) > 1.0


@given(seeds, ts, st.floats(0.05, 0.95))
def test_subdivision_and_concatenation(seed, t, lam):
    rng = rng_from(seed)
    seq = mp_.random_heart_sequence(rng, 4)
    other = mp_.random_heart_sequence(rng, 4)
    i = int(rng.integers(0, len(seq)))
    assert seq.subdivide(i, lam).g_t(t) == pytest.approx(seq.g_t(t), rel=1e-12)
    low = PhaseSequence(tuple(z for z in other.entries if mp_.phase(z) <= min(seq.phases)))
    assert seq.concat(low).g_t(t) == pytest.approx(seq.g_t(t) + low.g_t(t), rel=1e-12)


@given(seeds)
def test_gt_lemma_on_candidates(seed):
    rng = rng_from(seed)
    for _ in range(20):
        z, w, t = mp_.random_gt_candidate(rng)
        rep = check_gt_inequality(z, w, t)
        if rep.conditions_hold:
            assert rep.margin >= -1e-10


@given(seeds)
def test_truncated_triangle_on_semisimple_triangles(seed):
    rng = rng_from(seed)
    tri = mp_.random_semisimple_triangle(rng)
    t, a, eps = rng.uniform(-3, 3), rng.uniform(-1.5, 1.5), rng.uniform(0.02, 0.98)
    assert check_truncated_triangle(tri.E, tri.F, tri.G, t, a, eps).holds
    assert check_triangle(tri.E, tri.F, tri.G, t, a).left_holds


@given(seeds)
def test_filtration_inequality_on_semisimple_filtrations(seed):
    rng = rng_from(seed)
    n = int(rng.integers(1, 5))
    F_list, E = mp_.semisimple_filtration(rng, n)
    a_list = sorted(rng.uniform(-1.5, 1.5, size=n - 1) + 1e-9 * np.arange(n - 1))
    rep = check_filtration_inequality(F_list, E, a_list, rng.uniform(0.02, 0.98), rng.uniform(-3, 3))
    assert rep.left_holds and rep.right_holds


@given(seeds)
def test_image_bound_on_random_heart_data(seed):
    rng = rng_from(seed)
    G, E = mp_.random_heart_sequence(rng), mp_.random_heart_sequence(rng)
    a, b = rng.uniform(0.02, 0.98, 2)
    assert check_image_bound(G, E, a, b, rng.uniform(-3, 3)).holds


@given(seeds)
def test_cosh_bound(seed):
    rng = rng_from(seed)
    t = rng.uniform(0.1, 5)
    s = rng.uniform(-t, t) * 0.999 or 0.01
    mu = mp_.random_measure(rng, 4, rng.uniform(0.01, 2.0), empty_ok=False)
    assert check_cosh_mass_bound(mu, t, s, rng.uniform(0.01, 2), 10 ** rng.uniform(-3, 0)).ok


def test_charges_round_trip_through_measures():
    charges = [2 * cmath.exp(0.3j * math.pi), 0.5 * cmath.exp(-0.7j * math.pi)]
    mu = MassMeasure.from_charges(charges)
    assert mu.charge() == pytest.approx(sum(charges))
