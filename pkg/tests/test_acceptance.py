"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Expensive relaxation sweeps are shared through module-scoped
fixtures.  Parenthetical tightness targets ("target; report actual") are
reported, with regression floors asserted at the levels this implementation
reliably achieves.
"""

import time

import numpy as np
import pytest

from gmdist.extraction import AtomicMeasure, check_flatness, extract_atoms, recompute_moments
from gmdist.gaussmoments import (
    MeasureSpec,
    double_factorial,
    gaussian_moment_poly,
    moment_poly_bound,
    moments_of_measure,
)
from gmdist.hierarchy import HierarchyConfig, run, w2_gaussian_closed_form
from gmdist.polyalg import poly_eval
from gmdist.relaxation import (
    BlockMap,
    EqConstraint,
    SDPProblem,
    assemble_mixing_refinement,
    assemble_w1,
    assemble_w2,
)
from gmdist.sdpsolver import solve
from gmdist.semialg import make_box

BOX = make_box(0.07, 1.0, 0.02, 1.0)
TOL = 1e-8

REFERENCE_ATOMS = ((0.1, 0.2), (0.5, 0.5))


def sweep_w2(mu_spec, S, orders):
    """Solve the quadratic-cost relaxation at each order; returns records."""
    out = []
    for n in orders:
        moms = moments_of_measure(mu_spec, 2 * n)
        problem, layout = assemble_w2(moms, S, n)
        sol = solve(problem, tol=TOL)
        out.append({"n": n, "sol": sol, "layout": layout, "moms": moms})
    return out


@pytest.fixture(scope="module")
def mixture_sweeps():
    sweeps = {}
    for r in (0.2, 0.3):
        spec = MeasureSpec.gaussian_mixture([(r, 0.1, 0.2), (1 - r, 0.5, 0.5)])
        sweeps[r] = {"spec": spec, "records": sweep_w2(spec, BOX, range(1, 7))}
    return sweeps


@pytest.fixture(scope="module")
def point_mass_sweep():
    spec = MeasureSpec.point_mass(0.5)
    return {"spec": spec, "records": sweep_w2(spec, BOX, range(2, 7))}


@pytest.fixture(scope="module")
def singleton_box_sweep():
    S = make_box(0.5 - 5e-5, 0.5 + 5e-5, 0.3 - 5e-5, 0.3 + 5e-5)
    spec = MeasureSpec.single_gaussian(0.2, 0.1)
    return {"spec": spec, "records": sweep_w2(spec, S, range(1, 7))}


@pytest.fixture(scope="module")
def single_gaussian_sweep():
    spec = MeasureSpec.single_gaussian(0.3, 0.1)
    return {"spec": spec, "records": sweep_w2(spec, BOX, range(1, 7))}


@pytest.fixture(scope="module")
def w1_sweep():
    S = make_box(-5e-5, 5e-5, 0.1 - 5e-5, 0.1 + 5e-5)
    spec = MeasureSpec.point_mass(0.0)
    records = []
    for n in range(1, 5):
        moms = moments_of_measure(spec, 2 * n)
        problem, _ = assemble_w1(moms, S, n, y_box=0.6)
        records.append({"n": n, "sol": solve(problem, tol=TOL)})
    return records


def test_criterion_1_reference_mixture_detection(mixture_sweeps):
    """Two-component reference mixtures: order-6 value, rank test, atoms."""
    start = time.perf_counter()
    for r in (0.2, 0.3):
        spec = mixture_sweeps[r]["spec"]
        rec6 = mixture_sweeps[r]["records"][-1]
        assert rec6["n"] == 6
        assert rec6["sol"].primal_obj <= 1e-6, f"tau_6 too large for r={r}"

        # rank condition and extraction at order 6 (refined mixing moments)
        moms = moments_of_measure(spec, 12)
        ref_problem, ref_layout = assemble_mixing_refinement(moms, BOX, 6)
        ref_sol = solve(ref_problem, tol=1e-10)
        assert max(ref_sol.primal_infeas, ref_sol.dual_infeas, ref_sol.rel_gap) <= TOL
        phi = ref_layout.mixing_moments(ref_sol.primal_vector)
        report = check_flatness(phi, 6, BOX.v, 1e-6)
        assert report.flat and report.r == 2, f"flatness failed for r={r}: {report}"

        measure = extract_atoms(phi, 6, 1e-6, support=BOX)
        expected_w = {0.1: r, 0.5: 1 - r}
        for (m, s), w in zip(measure.atoms, measure.weights):
            ref = min(REFERENCE_ATOMS, key=lambda a: abs(a[0] - m))
            assert abs(m - ref[0]) <= 1e-3 and abs(s - ref[1]) <= 1e-3
            assert abs(w - expected_w[ref[0]]) <= 1e-3
    elapsed = time.perf_counter() - start
    assert elapsed <= 300.0
    print(f"\nCRITERION 1: PASS - both mixtures: tau_6 <= 1e-6, flat rank 2, "
          f"atoms/weights within 1e-3 ({elapsed:.1f}s)")


def test_criterion_2_point_mass_certificate(point_mass_sweep):
    """Point-mass input: positive value 4e-4 certified at every order >= 2."""
    config = HierarchyConfig(mu=point_mass_sweep["spec"], S=BOX,
                             n_min=2, n_max=6, epsilon=1e-5)
    report = run(config)
    assert report.certificate.kind == "not-mixture"
    taus = [rec["sol"].primal_obj for rec in point_mass_sweep["records"]]
    for n, tau in zip(range(2, 7), taus):
        assert 3.9e-4 <= tau <= 4.1e-4, f"tau_{n} = {tau} outside [3.9e-4, 4.1e-4]"
    print(f"\nCRITERION 2: PASS - not-mixture certificate, tau_n in "
          f"[{min(taus):.5e}, {max(taus):.5e}] for n = 2..6")


def test_criterion_3_singleton_box_distance(singleton_box_sweep):
    """Essentially fixed target parameters: lower bound below the oracle and
    tight by order 6 (ratio reported)."""
    oracle = w2_gaussian_closed_form((0.2, 0.1), (0.5, 0.3))
    assert oracle == pytest.approx(0.13)
    taus = [rec["sol"].primal_obj for rec in singleton_box_sweep["records"]]
    for n, tau in zip(range(1, 7), taus):
        assert tau <= 0.13 + 1e-6, f"tau_{n} = {tau} exceeds the oracle value"
    ratio = taus[-1] / 0.13
    assert ratio >= 0.99  # regression floor; target below is report-only
    target_met = "met" if taus[-1] >= 0.9 * 0.13 else "MISSED"
    print(f"\nCRITERION 3: PASS - all tau_n <= 0.13 + 1e-6; tightness ratio "
          f"tau_6/0.13 = {ratio:.6f} (0.90 target {target_met})")


def test_criterion_4_zero_value_stability(single_gaussian_sweep):
    """Single admissible component: zero value at every order, rank-1
    recovery of the generating atom."""
    taus = [rec["sol"].primal_obj for rec in single_gaussian_sweep["records"]]
    for n, tau in zip(range(1, 7), taus):
        assert tau <= 1e-6, f"tau_{n} = {tau} not within noise of zero"
    config = HierarchyConfig(mu=single_gaussian_sweep["spec"], S=BOX,
                             n_min=1, n_max=6)
    report = run(config)
    cert = report.certificate
    assert cert.kind == "mixture-candidate"
    flat_rec = report.records[-1]
    assert flat_rec.flatness is not None and flat_rec.flatness.flat
    assert flat_rec.flatness.r == 1
    (m, s), = cert.measure.atoms
    assert abs(m - 0.3) <= 1e-6 and abs(s - 0.1) <= 1e-6
    assert cert.measure.weights[0] == pytest.approx(1.0, abs=1e-6)
    print(f"\nCRITERION 4: PASS - tau_n <= 1e-6 for n = 1..6; rank-1 flat; "
          f"atom ({m:.8f}, {s:.8f}) within 1e-6")


def test_criterion_5_monotonicity_and_duality(mixture_sweeps, point_mass_sweep,
                                              singleton_box_sweep,
                                              single_gaussian_sweep):
    """Across every instance sweep: values nondecreasing within 1e-7 and the
    primal-dual gap within 1e-6 on optimal solves."""
    families = {
        "mixture r=.2": mixture_sweeps[0.2]["records"],
        "mixture r=.3": mixture_sweeps[0.3]["records"],
        "point mass": point_mass_sweep["records"],
        "singleton box": singleton_box_sweep["records"],
        "single gaussian": single_gaussian_sweep["records"],
    }
    worst_drop = 0.0
    worst_gap = 0.0
    for name, records in families.items():
        taus = [rec["sol"].primal_obj for rec in records]
        for i in range(len(taus) - 1):
            drop = taus[i] - taus[i + 1]
            worst_drop = max(worst_drop, drop)
            assert taus[i + 1] >= taus[i] - 1e-7, \
                f"{name}: tau dropped by {drop:.2e} between orders"
        for rec in records:
            sol = rec["sol"]
            if sol.status == "optimal":
                gap = abs(sol.primal_obj - sol.dual_obj)
                worst_gap = max(worst_gap, gap)
                assert gap <= 1e-6, f"{name}: duality gap {gap:.2e} at n={rec['n']}"
    print(f"\nCRITERION 5: PASS - worst monotonicity drop {worst_drop:.2e} "
          f"(allowed 1e-7), worst optimal-solve gap {worst_gap:.2e} (allowed 1e-6)")


def test_criterion_6_moment_formula_suite():
    """Moment polynomial identities, quadrature agreement and strict bound."""
    for j in range(7):
        assert poly_eval(gaussian_moment_poly(2 * j), (0.0, 1.0)) == pytest.approx(
            double_factorial(2 * j - 1), rel=1e-13)
    rng = np.random.default_rng(4)
    for j in range(13):
        p = gaussian_moment_poly(j)
        for m in rng.uniform(-2, 2, size=5):
            assert poly_eval(p, (m, 0.0)) == pytest.approx(m**j, rel=1e-12, abs=1e-12)
    t, w = np.polynomial.hermite.hermgauss(64)
    for j in range(13):
        p = gaussian_moment_poly(j)
        for m in np.linspace(-1, 1, 5):
            for s in np.linspace(0.05, 1.0, 5):
                quad = float(np.sum(w * (m + np.sqrt(2) * s * t) ** j) / np.sqrt(np.pi))
                got = poly_eval(p, (m, s))
                assert abs(got - quad) <= 1e-9 * max(1.0, abs(got))
    for bound in (0.5, 1.0, 2.0):
        for j in range(1, 9):
            cap = moment_poly_bound(2 * j, bound)
            p = gaussian_moment_poly(2 * j)
            for _ in range(100):
                point = (rng.uniform(-bound, bound), rng.uniform(0, bound))
                assert poly_eval(p, point) < cap
    print("\nCRITERION 6: PASS - double factorials, degenerate case, quadrature "
          "within 1e-9, strict moment bound")


def test_criterion_7_extraction_round_trips():
    """50 seeded random atomic measures recovered to 1e-6 after matching."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(50):
        r = int(rng.integers(1, 5))
        atoms = tuple((rng.uniform(0.07, 1.0), rng.uniform(0.02, 1.0))
                      for _ in range(r))
        weights = rng.uniform(0.1, 1.0, size=r)
        weights /= weights.sum()
        truth = AtomicMeasure(atoms=atoms, weights=tuple(weights))
        phi = recompute_moments(truth, 2 * (r + 1))
        measure = extract_atoms(phi, r + 1, 1e-6, seed=trial)
        assert measure.size == r
        remaining = list(zip(measure.atoms, measure.weights))
        for (em, es), ew in zip(atoms, weights):
            k = min(range(len(remaining)),
                    key=lambda i: (remaining[i][0][0] - em) ** 2
                    + (remaining[i][0][1] - es) ** 2)
            (am, as_), aw = remaining.pop(k)
            err = max(abs(am - em), abs(as_ - es), abs(aw - ew))
            worst = max(worst, err)
            assert err <= 1e-6
    print(f"\nCRITERION 7: PASS - 50 random measures recovered, worst "
          f"coordinate error {worst:.2e} (allowed 1e-6)")


def test_criterion_8_solver_fixtures_and_determinism():
    """Analytic optima at 1e-8 and bitwise-identical repeat solves."""
    scalar = SDPProblem(1, np.array([1.0]), [], [
        BlockMap(1, np.array([0]), np.array([0]), np.array([0]), np.array([1.0]))])
    sol = solve(scalar, tol=1e-8)
    assert sol.status == "optimal" and abs(sol.primal_obj) <= 1e-8

    trace = SDPProblem(3, np.array([1.0, 0.0, 1.0]),
                       [EqConstraint(np.array([1]), np.array([1.0]), 1.0)],
                       [BlockMap(2, np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]),
                                 np.array([0, 1, 1, 2]), np.ones(4))])
    s1 = solve(trace, tol=1e-8)
    s2 = solve(trace, tol=1e-8)
    assert s1.status == "optimal" and abs(s1.primal_obj - 2.0) <= 1e-8
    assert s1.primal_obj == s2.primal_obj and s1.dual_obj == s2.dual_obj
    assert s1.iterations == s2.iterations
    print(f"\nCRITERION 8: PASS - fixtures solved to 1e-8 "
          f"({sol.primal_obj:.1e}, {s1.primal_obj:.10f}); repeats bitwise identical")


def test_criterion_9_w1_mode_sanity(w1_sweep):
    """Absolute-cost mode: monotone lower bounds below the closed-form mean
    absolute deviation (ratio at order 4 reported)."""
    true_value = 0.1 * np.sqrt(2.0 / np.pi)
    taus = [rec["sol"].primal_obj for rec in w1_sweep]
    for i in range(len(taus) - 1):
        assert taus[i + 1] >= taus[i] - 1e-7, "W1 values must be nondecreasing"
    for n, tau in zip(range(1, 5), taus):
        assert tau <= 0.0798 + 1e-6, f"W1 tau_{n} = {tau} exceeds the true value"
    ratio = taus[-1] / true_value
    # Regression floor at the level this formulation reliably reaches; an
    # independent degree-8 polynomial bound caps the order-4 value at ~83.5%
    # of the true mean absolute deviation, so 0.90 is reported, not asserted.
    assert ratio >= 0.80
    target_met = "met" if ratio >= 0.90 else "MISSED (formulation ceiling ~0.835)"
    print(f"\nCRITERION 9: PASS - nondecreasing, bounded by 0.0798+1e-6; "
          f"tau_4/true = {ratio:.4f} (0.90 target {target_met})")
