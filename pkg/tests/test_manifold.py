from fractions import Fraction

import numpy as np
import pytest

from causticlab.errors import NonConstantMetric
from causticlab.manifold import (ManifoldSpec, euler_mult, metric, mu_matrix,
                                 mult_matrix, point_algebra,
                                 random_sample_points, structure_constants,
                                 verify_axioms)
from causticlab.poly import MultiPoly

ANTIDIAG = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)


def test_metric_antidiagonal_all_fixtures(a3, b3, h3):
    for spec in (a3, b3, h3):
        assert np.array_equal(metric(spec), ANTIDIAG)


def test_metric_of_bare_x2z_term():
    # F = x^2 z / 2 alone: eta_13 = eta_31 = 1, everything else 0
    spec = ManifoldSpec(
        n=3, potential=MultiPoly(3, {(2, 0, 1): 0.5}),
        euler_linear=(Fraction(1), Fraction(1), Fraction(1)),
        euler_affine=(0j, 0j, 0j), charge=Fraction(0))
    eta = metric(spec)
    expect = np.zeros((3, 3))
    expect[0, 2] = expect[2, 0] = 1.0
    assert np.array_equal(eta, expect)


def test_nonconstant_metric_raises():
    # F with a quartic through the unit direction gives non-constant eta
    spec = ManifoldSpec(
        n=3, potential=MultiPoly(3, {(2, 0, 2): 1.0}),
        euler_linear=(Fraction(1), Fraction(1), Fraction(1)),
        euler_affine=(0j, 0j, 0j), charge=Fraction(0))
    with pytest.raises(NonConstantMetric):
        metric(spec)


def test_unit_axiom_structure_constants(h3, b3):
    rng = np.random.default_rng(7)
    for spec in (h3, b3):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        c = structure_constants(spec, p)
        assert np.max(np.abs(c[:, 0, :] - np.eye(3))) < 1e-14
        # transposed slot: c^k_{j,unit} = delta as well, by commutativity
        assert np.max(np.abs(c[:, :, 0] - np.eye(3))) < 1e-14


def test_h3_caustic_tangent_multiplication_matrix(h3):
    # multiplication by the caustic tangent 3s^2 d_y + d_z restricted to
    # the frame {d_r, d_s} on y = z^3 is [[0, 175/4 s^8], [1, 9 s^4]]
    s = 1.3
    p = [0.0, s ** 3, s]
    ds = np.array([0.0, 3 * s ** 2, 1.0])
    M = mult_matrix(h3, p, ds)
    basis = np.array([[1.0, 0.0], [0.0, 3 * s ** 2], [0.0, 1.0]], dtype=complex)
    # solve basis @ A = M @ basis in least squares; residual must vanish
    A, res, *_ = np.linalg.lstsq(basis, M @ basis, rcond=None)
    assert np.max(np.abs(basis @ A - M @ basis)) < 1e-10
    expect = np.array([[0.0, 175 / 4 * s ** 8], [1.0, 9 * s ** 4]])
    assert np.max(np.abs(A - expect)) < 1e-9


def test_euler_mult_unit_column(h3):
    # E o d_x = E, so the unit column of U is E itself
    p = np.array([0.4, -0.7, 1.1], dtype=complex)
    U = euler_mult(h3, p)
    E = h3.euler_at(p)
    assert np.max(np.abs(U[:, 0] - E)) < 1e-13
    assert abs(U[1, 0] - 3 / 5 * p[1]) < 1e-14  # the 3y/5 entry


def test_identity_vector_multiplies_to_identity(a3, b3, h3):
    rng = np.random.default_rng(3)
    for spec in (a3, b3, h3):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        e = np.zeros(3)
        e[spec.unit_index] = 1.0
        assert np.max(np.abs(mult_matrix(spec, p, e) - np.eye(3))) < 1e-14


def test_mu_matrices(a3, b3, h3):
    assert np.array_equal(np.diag(mu_matrix(h3)), [-2 / 5, 0, 2 / 5])
    assert np.array_equal(np.diag(mu_matrix(b3)), [-1 / 3, 0, 1 / 3])
    assert np.array_equal(np.diag(mu_matrix(a3)), [-1 / 4, 0, 1 / 4])


def test_mu_zero_for_trivial_weights():
    spec = ManifoldSpec(
        n=2, potential=MultiPoly(2, {(2, 1): 0.5}),
        euler_linear=(Fraction(1), Fraction(1)),
        euler_affine=(0j, 0j), charge=Fraction(0))
    assert np.max(np.abs(mu_matrix(spec))) == 0.0


def test_axioms_random_points(a3, b3, h3):
    for spec in (a3, b3, h3):
        pts = random_sample_points(spec, 20, seed=11)
        report = verify_axioms(spec, pts, tol=1e-10)
        assert report.passed, report.residuals


def test_axioms_at_h3_caustic_point(h3):
    report = verify_axioms(h3, [np.array([0.0, 1.0, 1.0])], tol=1e-10)
    assert report.residuals["associativity"] < 1e-10


def test_corrupted_potential_fails_associativity(h3):
    bad = ManifoldSpec(
        n=3, potential=h3.potential + MultiPoly(3, {(0, 5, 0): 1.0}),
        euler_linear=h3.euler_linear, euler_affine=h3.euler_affine,
        charge=h3.charge, unit_index=0, name="h3-corrupt")
    pts = random_sample_points(bad, 5, seed=2)
    report = verify_axioms(bad, pts, tol=1e-10)
    assert report.residuals["associativity"] > 1e-3
    assert not report.passed


def test_U_eta_symmetric(a3, b3, h3):
    rng = np.random.default_rng(5)
    for spec in (a3, b3, h3):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        alg = point_algebra(spec, p)
        sym = alg.eta @ alg.U - alg.U.T @ alg.eta
        assert np.max(np.abs(sym)) < 1e-10


def test_mu_eta_antisymmetric(a3, b3, h3):
    for spec in (a3, b3, h3):
        alg = point_algebra(spec, np.array([0.1, 0.2, 0.3]))
        skew = alg.eta @ alg.mu + (alg.eta @ alg.mu).T
        assert np.max(np.abs(skew)) < 1e-12


def test_euler_eigenvalue_scaling(a3, b3, h3):
    # eigenvalues of U at the weight-rescaled point are lambda * eigenvalues
    rng = np.random.default_rng(13)
    lam = 1.37
    for spec in (a3, b3, h3):
        p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w = spec.weights
        q = np.array([lam ** w[i] * p[i] for i in range(3)])
        ev_p = np.linalg.eigvals(euler_mult(spec, p))
        ev_q = np.linalg.eigvals(euler_mult(spec, q))
        key = lambda v: (np.round(v.real, 8), np.round(v.imag, 8))
        a = sorted(lam * ev_p, key=key)
        b = sorted(ev_q, key=key)
        assert np.max(np.abs(np.array(a) - np.array(b))) < 1e-8
