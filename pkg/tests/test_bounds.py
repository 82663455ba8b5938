import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab.bounds import (
    KINDS,
    BoundReport,
    WidthRecord,
    class_bound,
    class_reports,
    cover_report,
    disc_eigenvalue,
    fit_constants,
    hinge_report,
    hinge_value,
    m_linear_check,
    m_linear_threshold,
    pleijel_constant,
    second_term_ratios,
    sharp_certificate,
    square_neumann_eigenvalues,
    square_nodal_table,
    weyl_check,
)
from chainlab.errors import ParamError, TruncationError
from chainlab.geometry import estimate_geometric_constants
from chainlab.presets import square

J2 = sps.jn_zeros(0, 1)[0] ** 2  # independent oracle for j_{0,1}^2


def test_pleijel_constant():
    assert disc_eigenvalue() == pytest.approx(J2, rel=1e-13)
    assert pleijel_constant() == pytest.approx(4 / J2, rel=1e-13)
    assert 0.6916 <= pleijel_constant() <= 0.6918


def test_bulk_bound_example():
    # (1/(pi j^2)) [(1.25/0.75) 1000 + (5/0.75) 1000^0.75]
    expect = ((1.25 / 0.75) * 1000 + (5 / 0.75) * 1000**0.75) / (math.pi * J2)
    assert class_bound("bulk", 1000.0, eps=0.25) == pytest.approx(expect, rel=1e-12)
    assert class_bound("bulk", 1000.0, eps=0.25) == pytest.approx(156.986, abs=1e-3)


@pytest.mark.parametrize(
    "kind, expect",
    [
        ("boundary", 1e4**0.625 / 0.1),
        ("corner", 1e4**0.75 / 1e-4),
        ("neck", 1e4**0.625 / 0.1 + 1e4**0.75 / 1e-4),
    ],
)
def test_lower_order_bounds(kind, expect):
    assert class_bound(kind, 1e4) == pytest.approx(expect, rel=1e-12)


def test_boundary_bound_frozen():
    assert class_bound("boundary", 1e4) == pytest.approx(3162.2777, abs=1e-4)


def test_bound_is_vectorized():
    xs = np.array([10.0, 100.0])
    assert np.allclose(class_bound("bulk", xs), [class_bound("bulk", x) for x in xs])


@pytest.mark.parametrize("kw", [dict(x=0.0), dict(x=10.0, eps=0.5), dict(x=10.0, beta=0.5)])
def test_bound_parameter_errors(kw):
    with pytest.raises(ParamError):
        class_bound("bulk", **kw)


def test_unknown_class():
    with pytest.raises(ParamError):
        class_bound("edge", 10.0)


def test_fit_single_point():
    assert fit_constants([(100.0, 0)], "boundary") == 0.0
    with pytest.raises(ParamError):
        fit_constants([], "bulk")


def test_fit_is_tight():
    data = [(50.0, 3), (200.0, 9), (800.0, 20)]
    C = fit_constants(data, "boundary")
    vals = [class_bound("boundary", x, C=C) for x, _ in data]
    assert all(v >= nu - 1e-12 for v, (_, nu) in zip(vals, data))
    assert min(v - nu for v, (_, nu) in zip(vals, data)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(1.0, 1e4), st.integers(0, 500)), min_size=1, max_size=8),
    st.tuples(st.floats(1.0, 1e4), st.integers(0, 500)),
    st.sampled_from(KINDS),
)
def test_fit_monotone_in_data(data, extra, kind):
    assert fit_constants(data + [extra], kind) >= fit_constants(data, kind)


def test_class_reports_hold_with_fitted_constants():
    counts = (12, 5, 1, 0)
    Cs = [fit_constants([(300.0, n)], k) for k, n in zip(KINDS, counts)]
    reps = class_reports(300.0, counts, 0.1, 0.375, Cs)
    assert [r.id for r in reps] == [f"class-{k}" for k in KINDS]
    assert all(r.satisfied for r in reps)


def test_cover_report():
    assert cover_report(5, (3, 2, 0, 0)).satisfied
    assert not cover_report(6, (3, 2, 0, 0)).satisfied


def test_bound_report_tolerance():
    assert BoundReport("x", 1.0 + 1e-10, 1.0, tol=1e-9).satisfied
    assert not BoundReport("x", 1.1, 1.0).satisfied
    assert BoundReport("x", 0.5, 1.0).margin == 0.5


def test_hinge():
    assert hinge_value(0.1) == pytest.approx(1.1 / (0.9 * math.pi * J2), rel=1e-13)
    assert hinge_value(0.1) == pytest.approx(0.067272, abs=1e-6)
    rep = hinge_report(0.1)
    assert rep.satisfied and rep.rhs == pytest.approx(1 / (4 * math.pi))


@pytest.mark.parametrize("kind", KINDS)
def test_second_terms_sublinear(kind):
    r = second_term_ratios(kind, np.geomspace(10, 1e6, 30))
    assert np.all(np.diff(r) < 0) and np.all(r > 0)


def test_square_neumann_eigenvalues_against_enumeration():
    mu = square_neumann_eigenvalues(2.0, 100.0)
    brute = sorted((math.pi / 2) ** 2 * (m * m + n * n) for m in range(20) for n in range(20))
    brute = [v for v in brute if v <= 100.0]
    assert np.allclose(mu, brute)


def test_weyl_examples():
    spec = square_neumann_eigenvalues(2.0, 1200.0)
    reps = weyl_check(spec, 4.0, [50.0, 500.0])
    assert reps[0].log["N"] == 22
    assert reps[1].log["ratio"] == pytest.approx(1.0996, abs=1e-4)
    # the Neumann count exceeds the leading Weyl term, so the deficit is negative
    assert all(r.lhs < 0 for r in reps)
    assert reps[0].constants["C"] == 0.0
    assert all(r.satisfied for r in reps)


def test_weyl_truncation():
    spec = square_neumann_eigenvalues(2.0, 100.0)
    with pytest.raises(TruncationError):
        weyl_check(spec, 4.0, [50.0, 150.0])


@pytest.fixture(scope="module")
def unit_square_setup(unit_square):
    dom = unit_square.build(0.05)
    consts = estimate_geometric_constants(unit_square.pieces)
    return dom, consts


def test_m_linear_unit_square(unit_square_setup):
    dom, consts = unit_square_setup
    t = np.array([0.02, 0.1, 0.2, 0.3, 0.45])
    assert t[-1] < m_linear_threshold(dom, consts)
    reps = m_linear_check(dom, consts, t)
    assert reps[1].log["ratio"] == pytest.approx(0.9)
    # M(t) = 1 - (1 - 2t)^2 for t < 1/2 on the unit square, so M / (L t) = 1 - t
    assert [r.log["ratio"] for r in reps] == pytest.approx(list(1 - t), abs=1e-9)
    assert reps[0].constants["C"] == pytest.approx(1 - t[0], abs=1e-9)
    assert all(r.satisfied and r.log["monotone"] for r in reps)


def test_m_linear_range(unit_square_setup):
    dom, consts = unit_square_setup
    with pytest.raises(ParamError):
        m_linear_check(dom, consts, [m_linear_threshold(dom, consts)])
    with pytest.raises(ParamError):
        m_linear_check(dom, consts, [0.0])


@settings(max_examples=8, deadline=None)
@given(st.floats(0.5, 3.0))
def test_m_linear_dilation_invariant(c):
    base = square(1.0, (0.5, 0.5))
    big = base.scaled(c)
    d0, d1 = base.build(0.05), big.build(0.05 * c)
    k0 = estimate_geometric_constants(base.pieces)
    k1 = estimate_geometric_constants(big.pieces)
    t = np.linspace(0.1, 0.9, 5) * m_linear_threshold(d0, k0)
    C0 = m_linear_check(d0, k0, t)[0].constants["C"]
    C1 = m_linear_check(d1, k1, c * t)[0].constants["C"]
    assert C1 == pytest.approx(C0, abs=1e-6)


def test_square_nodal_table_against_enumeration():
    mu, nu = square_nodal_table(2.0, 40)
    pairs = sorted(((m * m + n * n, m, (m + 1) * (n + 1)) for m in range(12) for n in range(12)))[:40]
    assert np.allclose(mu, [(math.pi / 2) ** 2 * p[0] for p in pairs])
    assert nu.tolist() == [p[2] for p in pairs]


def test_pleijel_ratio_window():
    # independent enumeration: sort (m^2 + n^2, m) and read off (m + 1)(n + 1) / index
    pairs = sorted((m * m + n * n, m, n) for m in range(30) for n in range(30))
    ratios = [(p[1] + 1) * (p[2] + 1) / k for k, p in enumerate(pairs[:120], start=1)]
    best = max(ratios[59:120])
    assert best == pytest.approx(49 / 65, abs=1e-12)
    _, nu = square_nodal_table(2.0, 120)
    mine = (nu / np.arange(1, 121))[59:]
    assert mine.max() == pytest.approx(best, abs=1e-12)
    assert 0.55 <= mine.max() <= 0.76


def _record(width, area, sharp_upto, n=12):
    mu = np.arange(n, dtype=float)
    sharp = np.zeros(n, bool)
    sharp[:sharp_upto] = True
    return WidthRecord(width, area, mu, np.arange(1, n + 1), sharp)


def test_sharp_certificate():
    cert = sharp_certificate([_record(0.5, 9.0, 4), _record(0.1, 8.2, 3)])
    assert cert.rows[0]["last_sharp"] == 4 and cert.rows[0]["x"] == pytest.approx(27.0)
    assert cert.rows[1]["x"] == pytest.approx(8.2 * 2)
    assert cert.certificate == pytest.approx(27.0)
    assert cert.flatness == pytest.approx(27.0 / 16.4)
    assert all(r["depth_ok"] for r in cert.rows)
    assert all(r.satisfied for r in cert.reports)


def test_sharp_certificate_ignores_first_mode():
    cert = sharp_certificate([_record(0.5, 9.0, 1), _record(0.1, 8.2, 3, n=6)])
    assert cert.rows[0]["x"] is None and cert.flatness is None
    # six pairs computed, fewer than three times the sharp index 3
    assert cert.rows[1]["depth_ok"] is False
