# test_certificates.py
import numpy as np
import pytest

from app.analysis.certificates import (
    graded_basis,
    interval_certificate,
    localizing_matrix,
    moment_matrix,
    psd_certificate,
)
from app.analysis.polynomials import BiPoly
from app.errors import DimensionError


def mixture_moments(rng, n_moments):
    """Moments on [0, 1] of a random mix of point masses and uniform pieces"""
    points = rng.uniform(0.0, 1.0, rng.integers(1, 4))
    intervals = np.sort(rng.uniform(0.0, 1.0, (rng.integers(0, 3), 2)), axis=1)
    weights = rng.dirichlet(np.ones(len(points) + len(intervals)))
    k = np.arange(n_moments)
    m = np.zeros(n_moments)
    for w, p in zip(weights, points):
        m += w * p ** k
    for w, (a, b) in zip(weights[len(points):], intervals):
        if b - a < 1e-6:
            m += w * a ** k
        else:
            m += w * (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
    return m


def test_graded_basis_order():
    assert graded_basis(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_dirac_and_uniform_are_accepted():
    dirac = [0.5 ** k for k in range(7)]
    uniform = [1.0 / (k + 1) for k in range(9)]
    assert interval_certificate(dirac, 3)
    assert interval_certificate(uniform, 4)


def test_cauchy_schwarz_violation_is_rejected():
    assert not interval_certificate([1.0, 2.0, 1.0], 1)


def test_mass_outside_the_interval_is_rejected():
    # Dirac at 1.5: moment matrix is fine, localizing matrix is not
    seq = [1.5 ** k for k in range(5)]
    assert psd_certificate(moment_matrix(seq, 2))
    assert not interval_certificate(seq, 2)


def test_random_measures_accepted_and_perturbations_rejected():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        r = int(rng.integers(1, 5))
        assert interval_certificate(mixture_moments(rng, 2 * r + 1), r)
    for _ in range(50):
        r = int(rng.integers(1, 5))
        seq = mixture_moments(rng, 2 * r + 1)
        mean = float(rng.uniform(0.3, 0.7))
        seq[0], seq[1], seq[2] = 1.0, mean, mean ** 2 - 0.05
        assert not interval_certificate(seq, r)


def test_bivariate_moment_matrix_of_product_measure():
    seq = {(i, j): 1.0 / ((i + 1) * (j + 1)) for i in range(5) for j in range(5)}
    M = moment_matrix(seq, 2)
    assert M.shape == (6, 6)
    assert M[1, 2] == pytest.approx(0.25)
    assert psd_certificate(M)
    q = BiPoly.t() * (1 - BiPoly.t())
    assert psd_certificate(localizing_matrix(seq, q, 1))


def test_short_sequences_raise():
    with pytest.raises(DimensionError):
        moment_matrix([1.0, 0.5], 1)
    with pytest.raises(DimensionError):
        moment_matrix({(0, 0): 1.0}, 1)
    with pytest.raises(DimensionError):
        psd_certificate(np.ones((2, 3)))
