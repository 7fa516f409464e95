import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from orbicensus.asymptotics_lab import (
    MIN_TRACE_LENGTH,
    DensityCurve,
    HFunctionSpec,
    Selector,
    admits_no_small_field,
    all_classes_curve,
    count_all_classes_2d,
    count_on_grid,
    count_phi_bounded_embeddable,
    density_no_small_field,
    disc_embeddable_curve,
    fit_power_law,
    fit_power_log,
    geodesic_surface_density,
    geometric_grid,
    no_small_field_curve,
    phi_embeddable_curve,
    phi_search_bound,
    short_systole_curve,
    short_systole_density,
    short_trace_fields,
    surface_exactness_cutoff,
    surface_fields,
)
from orbicensus.core_arith import sieve_primes
from orbicensus.errors import ConfigurationError, DomainError, FitError
from orbicensus.geodesics_heights import geodesic_length_from_trace
from orbicensus.quadratic_fields import field_from_delta, make_field
from orbicensus.quaternion_census import QuaternionAlgebraQ, covolume_3d, enumerate_classes_3d, induced_algebra

GRID = (10.0, 100.0, 1000.0, 10_000.0)
PHI_LIST = oracles.phi_bounded(10_000)
PHI_OF = {d: oracles.phi_int(d) for d in PHI_LIST}


# ---------------------------------------------------------------------------
# first-principles counts (sympy factorizations, root-counting splitting)


def naive_phi_embeddable(delta, x):
    return sum(1 for d in PHI_LIST if PHI_OF[d] <= x and oracles.embeds_finite(d, delta))


def naive_disc_embeddable(delta, x):
    return sum(1 for d in range(1, int(x) + 1) if oracles.squarefree(d) and oracles.embeds(d, delta))


def naive_no_small_field(x, H):
    fields = [f for f in oracles.fundamentals(H)]
    good = total = 0
    for D in range(2, int(x) + 1):
        if not oracles.squarefree(D) or oracles.omega(D) % 2:
            continue
        total += 1
        good += all(not oracles.embeds(D, f) for f in fields)
    return good, total


def naive_short(x0, x):
    short = total = 0
    for D in PHI_LIST:
        if D == 1 or PHI_OF[D] > x or oracles.omega(D) % 2:
            continue
        total += 1
        t, _ = oracles.class_systole_trace(D)
        short += 2 * math.acosh(t / 2) <= x0
    return short, total


# ---------------------------------------------------------------------------


def test_density_curve_invariants():
    c = DensityCurve((1, 10), (1, 2), (3, 4))
    assert c.ratios == (1 / 3, 0.5) and c.densities() == (1.0, 0.2) and c.at(10) == (2, 4)
    with pytest.raises(DomainError):
        DensityCurve((10, 1), (1, 2), (3, 4))
    with pytest.raises(DomainError):
        DensityCurve((1, 10), (5, 2), (3, 4))
    with pytest.raises(DomainError):
        DensityCurve((1,), (1, 2), (3, 4))
    with pytest.raises(FitError):
        c.with_fit((1.0, math.nan))


def test_h_function_spec():
    assert HFunctionSpec(threshold=7)(10**9) == 7.0
    assert HFunctionSpec(exponent=0.4)(math.e**32) == pytest.approx(4.0)
    for bad in ({}, {"exponent": 0.5}, {"exponent": 0.2, "threshold": 3}):
        with pytest.raises(ConfigurationError):
            HFunctionSpec(**bad)


def test_geometric_grid():
    g = geometric_grid(1e4, 1e7, 13)
    assert g[0] == 1e4 and g[4] == 1e5 and g[8] == 1e6 and g[-1] == 1e7
    assert all(a < b for a, b in zip(g, g[1:]))
    assert geometric_grid(5, 5, 1) == (5.0,)
    with pytest.raises(ConfigurationError):
        geometric_grid(0, 10, 3)


def test_phi_search_bound_covers_oracle():
    for x in (1, 2, 10, 30, 100, 1000, 10_000):
        found = [d for d in PHI_LIST if PHI_OF[d] <= x]
        assert max(found) <= phi_search_bound(x)
    assert phi_search_bound(0.5) == 0
    # tighter than the textbook 4 x log log(x + 16) bound
    assert phi_search_bound(1e7) < 4e7 * math.log(math.log(1e7 + 16))


@given(st.integers(1, 10_000))
def test_phi_search_bound_property(x):
    assert all(d <= phi_search_bound(x) for d in PHI_LIST if PHI_OF[d] <= x)


def test_phi_embeddable_examples(table):
    assert count_phi_bounded_embeddable(make_field(5), 10, table) == 10
    assert count_phi_bounded_embeddable(make_field(-1), 0.5, table) == 0


@pytest.mark.parametrize("delta", [5, -4, -3, 8, -7, 13, -20, 12])
def test_phi_embeddable_matches_oracle(delta, table):
    curve = phi_embeddable_curve(field_from_delta(delta), GRID, table)
    assert list(curve.counts) == [naive_phi_embeddable(delta, x) for x in GRID]
    assert list(curve.totals) == [sum(1 for d in PHI_LIST if PHI_OF[d] <= x) for x in GRID]
    assert count_phi_bounded_embeddable(field_from_delta(delta), 10_000, table) == curve.counts[-1]


@pytest.mark.parametrize("delta", [5, -4, 8, -3])
def test_disc_embeddable_matches_oracle(delta, table):
    curve = disc_embeddable_curve(field_from_delta(delta), (100.0, 3000.0), table)
    assert list(curve.counts) == [naive_disc_embeddable(delta, x) for x in (100, 3000)]


def test_phi_embeddable_decay_and_scale(big_table):
    K = make_field(5)
    curve = phi_embeddable_curve(K, (1e3, 1e4, 1e5, 1e6), big_table)
    dens = curve.densities()
    assert all(a >= b for a, b in zip(dens, dens[1:]))
    scaled = [n * math.sqrt(math.log(x)) / x for n, x in zip(curve.counts, curve.grid)]
    assert max(scaled) / min(scaled) < 1.05


def test_all_classes_examples(big_table):
    assert count_all_classes_2d(10, big_table) == 6
    assert count_all_classes_2d(1, big_table) == 1
    assert count_all_classes_2d(1, big_table, include_split=False) == 0
    ratios = [count_all_classes_2d(x, big_table) / x for x in (1e4, 1e5, 1e6)]
    assert all(0.2 <= r <= 2.0 for r in ratios)
    assert max(ratios) / min(ratios) < 1.05


def test_all_classes_matches_oracle(table):
    curve = all_classes_curve(GRID, table)
    expected = [sum(1 for d in PHI_LIST if PHI_OF[d] <= x and oracles.omega(d) % 2 == 0) for x in GRID]
    assert list(curve.counts) == expected


def test_no_small_field_examples(table):
    assert not admits_no_small_field(6, 5)
    assert not admits_no_small_field(91, 5)
    for D in (1, 6, 91, 209):
        assert admits_no_small_field(D, 2.9)
    pt = density_no_small_field(100, HFunctionSpec(threshold=5), table)
    assert (pt.counts[0], pt.totals[0]) == naive_no_small_field(100, 5) == (1, 30)
    pt = density_no_small_field(100, HFunctionSpec(exponent=0.4), table)
    assert pt.ratios == (1.0,)


def test_no_small_field_matches_oracle(table):
    for H in (3, 5, 8, 13, 24):
        curve = no_small_field_curve((300.0, 3000.0), HFunctionSpec(threshold=H), table)
        assert list(zip(curve.counts, curve.totals)) == [naive_no_small_field(x, H) for x in (300, 3000)]


def test_no_small_field_trends(big_table):
    curve = no_small_field_curve((1e4, 1e5, 1e6), HFunctionSpec(threshold=24), big_table)
    assert all(0 < r < 1 for r in curve.ratios)
    assert curve.ratios[0] < curve.ratios[1] < curve.ratios[2]
    ratios = [density_no_small_field(1e5, HFunctionSpec(threshold=H), big_table).ratios[0] for H in (2, 3, 5, 8, 12, 24, 40)]
    assert all(a >= b for a, b in zip(ratios, ratios[1:]))


def test_short_trace_fields():
    assert short_trace_fields(1.0) == ()
    assert short_trace_fields(MIN_TRACE_LENGTH) == (5,)
    assert short_trace_fields(2.0) == (5,)
    assert short_trace_fields(geodesic_length_from_trace(6)) == (5, 8, 12, 21)


def test_short_systole_examples(table):
    curve = short_systole_density(2.0, 2.0, table)  # only disc 6 has phi <= 2
    assert (curve.counts[0], curve.totals[0]) == (1, 1)
    # disc 209 (phi 180) has systole 3.1336: not short at x0 = 2
    at_180 = short_systole_density(2.0, 180, table)
    assert at_180.counts[0] == naive_short(2.0, 180)[0]
    assert oracles.class_systole_trace(209)[0] == 5
    with pytest.warns(UserWarning):
        curve = short_systole_density(1.0, 1000, table)
    assert curve.counts == (0,) and curve.totals[0] > 0


@pytest.mark.parametrize("x0", [2.0, 2.7, 3.2, 3.6])
def test_short_systole_matches_oracle(x0, table):
    curve = short_systole_curve(x0, GRID, table)
    assert list(zip(curve.counts, curve.totals)) == [naive_short(x0, x) for x in GRID]


def test_short_bounded_by_witness_fields(table):
    for x0 in (2.0, 3.0, 4.0):
        curve = short_systole_curve(x0, GRID, table)
        for x, n in zip(curve.grid, curve.counts):
            assert n <= sum(count_phi_bounded_embeddable(field_from_delta(f), x, table) for f in short_trace_fields(x0))


def test_count_on_grid_validation(table):
    with pytest.raises(ConfigurationError):
        count_on_grid([10], [Selector()], "volume", table)
    with pytest.raises(ConfigurationError):
        Selector("some")
    with pytest.raises(DomainError):
        count_on_grid([10, 5], [Selector()], "n", table)
    assert count_on_grid([0.5], [Selector()], "n", table).tolist() == [[0]]


def test_count_on_grid_worker_invariance():
    table = sieve_primes(10**4)
    sels = [Selector(), Selector("embeds_any", (5, -4), even=True), Selector("split_all", (-3, 8), exclude_one=True)]
    one = count_on_grid(geometric_grid(10, 3e5, 7), sels, "phi", sieve_primes(10**5), workers=1)
    two = count_on_grid(geometric_grid(10, 3e5, 7), sels, "phi", sieve_primes(10**5), workers=2)
    assert (one == two).all()
    n_key = count_on_grid([5e4], sels, "n", table, workers=3)
    assert n_key.shape == (3, 1)


# ---------------------------------------------------------------------------
# fits


def synthetic(grid, fn):
    # float counts are not allowed on a DensityCurve; exact models go through a large scale factor
    return DensityCurve(grid, [round(1e6 * fn(x)) for x in grid], [round(1e6 * fn(x)) for x in grid])


def test_fit_power_log_recovers_exact_models():
    grid = geometric_grid(1e3, 1e7, 17)
    for a in (-0.5, 0.0, -1.0, 0.25):
        c, fa = fit_power_log(synthetic(grid, lambda x: x * math.log(x) ** a))
        assert fa == pytest.approx(a, abs=1e-6)
        assert c == pytest.approx(1e6, rel=1e-5)


def test_fit_power_law_recovers_exponent():
    grid = geometric_grid(10, 1e4, 9)
    for a in (2 / 3, 1.0, 0.5):
        c, fa = fit_power_law(synthetic(grid, lambda x: x**a))
        assert fa == pytest.approx(a, abs=1e-6)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_power_log(DensityCurve((10, 100, 1000), (1, 2, 3), (5, 5, 5)))
    with pytest.raises(FitError):
        fit_power_log(DensityCurve((10, 100, 1000, 10**4), (0, 2, 3, 4), (5, 5, 5, 5)))
    with pytest.raises(FitError):
        fit_power_log(DensityCurve((1, 100, 1000, 10**4), (1, 2, 3, 4), (5, 5, 5, 5)))


# ---------------------------------------------------------------------------
# surface classes


def test_surface_fields_examples():
    B0 = QuaternionAlgebraQ.from_disc(6)
    fields = {f.delta: f for f in surface_fields(B0, 50.0, 100)}
    assert fields[-20].induced_phi == 4 and fields[-20].cocompact
    assert fields[-4].induced_phi == 1 and not fields[-4].cocompact
    with pytest.raises(DomainError):
        surface_fields(QuaternionAlgebraQ.from_disc(1), 50.0, 100)
    with pytest.raises(DomainError):
        surface_fields(QuaternionAlgebraQ.from_disc(2), 50.0, 100)


def brute_surface(B0_disc, V, delta_max, table):
    """Direct enumeration through the 3d census."""
    with_surface = everything = 0
    for delta in [d for d in oracles.fundamentals(delta_max) if d < 0]:
        L = field_from_delta(delta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            everything += sum(1 for _ in enumerate_classes_3d(L, V, table))
        with_surface += covolume_3d(induced_algebra(QuaternionAlgebraQ.from_disc(B0_disc), L)) <= V
    return with_surface, everything


@pytest.mark.parametrize("b0", [6, 15, 35])
def test_surface_density_matches_census(b0, table):
    delta_max = 200
    V = min(surface_exactness_cutoff(delta_max), 60.0)
    ws, al = geodesic_surface_density(QuaternionAlgebraQ.from_disc(b0), V, delta_max, table, points=5, decades=1.0)
    assert ws.grid == al.grid and ws.totals == al.counts
    for x, a, b in zip(ws.grid, ws.counts, al.counts):
        assert (a, b) == brute_surface(b0, x, delta_max, table)


def test_surface_cutoff_warning(table):
    with pytest.warns(UserWarning):
        geodesic_surface_density(QuaternionAlgebraQ.from_disc(6), surface_exactness_cutoff(50) * 2, 50, table, points=4)
