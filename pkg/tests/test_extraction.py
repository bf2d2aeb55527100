import numpy as np
import pytest

from gmdist.errors import ExtractionFailedError, UsageError
from gmdist.extraction import AtomicMeasure, check_flatness, extract_atoms, recompute_moments
from gmdist.gaussmoments import MeasureSpec, MomentVector, moments_of_measure
from gmdist.polyalg import basis_size, graded_basis
from gmdist.semialg import make_box

BOX = make_box(0.07, 1.0, 0.02, 1.0)

EXAMPLE_MIXING = AtomicMeasure(atoms=((0.1, 0.2), (0.5, 0.5)), weights=(0.2, 0.8))


def match_atoms(measure, expected_atoms, expected_weights, tol):
    """Greedy permutation matching of extracted atoms against references."""
    remaining = list(zip(measure.atoms, measure.weights))
    for (em, es), ew in zip(expected_atoms, expected_weights):
        hit = min(range(len(remaining)),
                  key=lambda k: (remaining[k][0][0] - em) ** 2 + (remaining[k][0][1] - es) ** 2)
        (am, as_), aw = remaining.pop(hit)
        assert abs(am - em) <= tol and abs(as_ - es) <= tol
        assert abs(aw - ew) <= tol
    assert not remaining


# -- recompute_moments ---------------------------------------------------------


def test_recompute_single_atom_degree_two():
    measure = AtomicMeasure(atoms=((2.0, 3.0),), weights=(1.0,))
    moms = recompute_moments(measure, 2)
    assert list(moms.values) == [1.0, 2.0, 3.0, 4.0, 6.0, 9.0]


def test_recompute_example_entry():
    moms = recompute_moments(EXAMPLE_MIXING, 2)
    assert moms[(1, 0)] == pytest.approx(0.42)


def test_zero_weight_atom_is_inert():
    single = AtomicMeasure(atoms=((0.3, 0.4),), weights=(1.0,))
    padded = AtomicMeasure(atoms=((0.3, 0.4), (0.9, 0.9)), weights=(1.0, 0.0))
    assert recompute_moments(padded, 4).values == pytest.approx(
        recompute_moments(single, 4).values)


# -- flatness ------------------------------------------------------------------


def test_flatness_of_exact_two_atom_moments():
    phi = recompute_moments(EXAMPLE_MIXING, 12)
    report = check_flatness(phi, 6, 1, 1e-6)
    assert report.flat and report.r == 2
    assert report.rank_low == report.rank_high == 2


def test_flatness_of_point_mass_any_order():
    for n in (1, 2, 4):
        phi = recompute_moments(AtomicMeasure(atoms=((0.3, 0.5),), weights=(1.0,)), 2 * n)
        report = check_flatness(phi, n, 1, 1e-6)
        assert report.flat and report.r == 1


def test_uniform_measure_is_full_rank_not_flat():
    # product of uniform measures on the box: all moment matrices full rank
    def uniform_moment(lo, hi, j):
        return (hi ** (j + 1) - lo ** (j + 1)) / ((j + 1) * (hi - lo))

    vals = np.array([uniform_moment(0.07, 1.0, i) * uniform_moment(0.02, 1.0, j)
                     for i, j in graded_basis(6)])
    phi = MomentVector(6, vals, nvars=2)
    report = check_flatness(phi, 3, 1, 1e-6)
    assert not report.flat
    assert report.rank_low == basis_size(2) == 6
    assert report.rank_high == basis_size(3) == 10
    assert report.r is None


def test_flatness_monotone_in_rank_threshold():
    phi = recompute_moments(EXAMPLE_MIXING, 8)
    # perturb to produce a spread of singular values
    noisy = phi.values + 1e-7 * np.sin(np.arange(len(phi.values)))
    phi_noisy = MomentVector(8, noisy, nvars=2)
    ranks = []
    for eps in (1e-12, 1e-9, 1e-6, 1e-3, 1e-1):
        ranks.append(check_flatness(phi_noisy, 4, 1, eps).rank_high)
    assert ranks == sorted(ranks, reverse=True)


def test_flatness_of_zero_matrix_reports_rank_zero_flat():
    phi = MomentVector(4, np.zeros(basis_size(4)), nvars=2)
    report = check_flatness(phi, 2, 1, 1e-6)
    assert report.flat and report.r == 0


# -- extraction ----------------------------------------------------------------


def test_extract_single_atom():
    phi = recompute_moments(AtomicMeasure(atoms=((0.3, 0.5),), weights=(1.0,)), 4)
    measure = extract_atoms(phi, 2, 1e-6)
    match_atoms(measure, [(0.3, 0.5)], [1.0], tol=1e-9)


def test_extract_reference_two_atom_instance():
    phi = recompute_moments(EXAMPLE_MIXING, 12)
    measure = extract_atoms(phi, 6, 1e-6, support=BOX)
    match_atoms(measure, [(0.1, 0.2), (0.5, 0.5)], [0.2, 0.8], tol=1e-6)
    assert measure.inside_support == (True, True)


def test_extract_three_atoms_fixed_seed():
    rng = np.random.default_rng(42)
    atoms = tuple((rng.uniform(0.07, 1.0), rng.uniform(0.02, 1.0)) for _ in range(3))
    w = rng.uniform(0.2, 1.0, size=3)
    w /= w.sum()
    truth = AtomicMeasure(atoms=atoms, weights=tuple(w))
    phi = recompute_moments(truth, 12)
    measure = extract_atoms(phi, 6, 1e-6)
    match_atoms(measure, atoms, w, tol=1e-6)


def test_extract_requires_flatness():
    # moments of a measure with full-rank matrices at this order
    rng = np.random.default_rng(3)
    atoms = tuple((rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)) for _ in range(6))
    truth = AtomicMeasure(atoms=atoms, weights=(1 / 6.0,) * 6)
    phi = recompute_moments(truth, 4)
    with pytest.raises(UsageError):
        extract_atoms(phi, 2, 1e-6)


def test_round_trip_random_measures():
    rng = np.random.default_rng(31)
    for trial in range(12):
        r = int(rng.integers(1, 5))
        atoms = tuple((rng.uniform(0.07, 1.0), rng.uniform(0.02, 1.0)) for _ in range(r))
        w = rng.uniform(0.15, 1.0, size=r)
        w /= w.sum()
        truth = AtomicMeasure(atoms=atoms, weights=tuple(w))
        n = r + 1
        phi = recompute_moments(truth, 2 * n)
        measure = extract_atoms(phi, n, 1e-6, seed=trial)
        match_atoms(measure, atoms, w, tol=1e-8)
        again = recompute_moments(measure, 2 * (n - 1))
        assert again.values == pytest.approx(
            phi.truncated(2 * (n - 1)).values,
            abs=1e-6 * (1 + np.max(np.abs(phi.values))))


def test_extracted_weights_nonnegative_and_normalized():
    rng = np.random.default_rng(77)
    for trial in range(8):
        r = int(rng.integers(1, 4))
        atoms = tuple((rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)) for _ in range(r))
        w = rng.uniform(0.1, 1.0, size=r)
        w /= w.sum()
        phi = recompute_moments(AtomicMeasure(atoms=atoms, weights=tuple(w)), 2 * (r + 1))
        measure = extract_atoms(phi, r + 1, 1e-6, seed=trial)
        assert min(measure.weights) >= 0.0
        assert sum(measure.weights) == pytest.approx(1.0, abs=1e-8)


def test_atoms_outside_support_are_flagged_not_fatal():
    outside = AtomicMeasure(atoms=((1.5, 0.5),), weights=(1.0,))  # mean beyond box
    phi = recompute_moments(outside, 4)
    measure = extract_atoms(phi, 2, 1e-6, support=BOX)
    assert measure.inside_support == (False,)


def test_measure_validation():
    with pytest.raises(UsageError):
        AtomicMeasure(atoms=(), weights=())
    with pytest.raises(UsageError):
        AtomicMeasure(atoms=((0.1, 0.1),), weights=(-0.2,))
