import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab.bounds import square_neumann_eigenvalues
from chainlab.errors import DegenerateRegionError, SolverError, TruncationError
from chainlab.fem import (
    Spectrum,
    assemble,
    counting_function,
    element_data,
    rayleigh_on_region,
    solve,
    solve_mesh,
)
from chainlab.mesh import mesh_from_arrays, triangulate
from chainlab.presets import disc
from chainlab.special import j0_zero


def _one_triangle():
    return mesh_from_arrays(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))


def test_reference_element_matrices():
    K, M = assemble(_one_triangle())
    expect_K = np.array([[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]])
    expect_M = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0
    assert np.allclose(K.toarray(), expect_K, atol=1e-15)
    assert np.allclose(M.toarray(), expect_M, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_element_invariants_random_triangle(xy):
    p = np.array(xy).reshape(3, 2)
    a = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
    if abs(a) < 1e-2:
        return
    tri = np.array([[0, 1, 2]] if a > 0 else [[0, 2, 1]])
    K, M = assemble(mesh_from_arrays(p, tri))
    one = np.ones(3)
    assert abs(one @ K @ one) < 1e-10 * abs(K).max()
    assert M.sum() == pytest.approx(abs(a), rel=1e-12)
    # linear functions reproduce |grad|^2 * area
    x = p[:, 0]
    assert x @ K @ x == pytest.approx(abs(a), rel=1e-9)


def test_global_matrices(square2_mesh):
    K, M = assemble(square2_mesh)
    one = np.ones(K.shape[0])
    assert abs(one @ (K @ one)) < 1e-9
    assert M.sum() == pytest.approx(4.0, rel=1e-12)
    assert abs(K - K.T).max() == 0.0
    assert np.all(np.linalg.eigvalsh(M[:50, :50].toarray()) > 0)


def test_square_spectrum(square2_spectrum):
    spec = square2_spectrum
    assert spec.converged
    assert abs(spec.mu[0]) < 1e-8
    exact = square_neumann_eigenvalues(2.0, 40.0)[:12]
    assert np.allclose(spec.mu[:12], exact, rtol=5e-3)
    assert np.all(np.diff(spec.mu) >= 0)


def test_mass_orthonormal(square2_spectrum, square2_mesh):
    _, M = assemble(square2_mesh)
    U = square2_spectrum.coeffs
    assert np.allclose(U.T @ (M @ U), np.eye(U.shape[1]), atol=1e-8)


def test_residuals_small(square2_spectrum):
    assert square2_spectrum.residuals.max() < 1e-9


def test_seed_determinism(square2_mesh):
    a = solve_mesh(square2_mesh, count=8, seed=4)
    b = solve_mesh(square2_mesh, count=8, seed=4)
    assert np.array_equal(a.mu, b.mu) and np.array_equal(a.coeffs, b.coeffs)


def test_dirichlet_disc():
    d = disc(1.0).build(0.04)
    mesh = triangulate(d, 0.04)
    spec = solve_mesh(mesh, bc="dirichlet", count=3)
    assert spec.mu[0] == pytest.approx(j0_zero() ** 2, rel=5e-3)
    assert np.all(np.abs(spec.coeffs[mesh.boundary_nodes, 0]) == 0.0)


def test_too_many_pairs_rejected():
    mesh = triangulate(disc(1.0).build(0.5), 0.5)
    K, M = assemble(mesh)
    with pytest.raises(SolverError):
        solve(K, M, count=K.shape[0])


def test_dirichlet_without_nodes_rejected(square2_mesh):
    K, M = assemble(square2_mesh)
    with pytest.raises(SolverError):
        solve(K, M, bc="dirichlet", count=3)


def _analytic_spectrum(side, mu_max):
    mu = square_neumann_eigenvalues(side, mu_max)
    return Spectrum(mu=mu, coeffs=np.zeros((1, len(mu))), bc="neumann", residuals=np.zeros(len(mu)))


def test_counting_function_examples():
    spec = _analytic_spectrum(2.0, 80.0)
    # 0 and pi^2/4 (twice) lie below 3; pi^2/2 does not
    assert counting_function(spec, 3.0) == 3
    assert counting_function(spec, 0.0) == 0
    assert counting_function(spec, 50.0) == 22
    with pytest.raises(TruncationError):
        counting_function(spec, 1e3)


def test_counting_function_brute_force_oracle():
    # independent enumeration of pairs (m, n) with (pi/2)^2 (m^2 + n^2) < mu
    spec = _analytic_spectrum(2.0, 200.0)
    for mu in (1.0, 10.0, 37.5, 99.0, 150.0):
        brute = sum(
            1 for m in range(40) for n in range(40) if (math.pi / 2) ** 2 * (m * m + n * n) < mu
        )
        assert counting_function(spec, mu) == brute


def test_rayleigh_whole_domain(square2_mesh, square2_spectrum):
    pair = square2_spectrum[5]
    e, m, q = rayleigh_on_region(square2_mesh, pair, np.ones(len(square2_mesh.triangles), bool))
    assert m == pytest.approx(1.0, rel=1e-9)
    assert q == pytest.approx(pair.mu, rel=1e-9)


def test_rayleigh_constant_mode(square2_mesh, square2_spectrum):
    e, m, q = rayleigh_on_region(square2_mesh, square2_spectrum[0], np.arange(100))
    assert abs(e) < 1e-12 and m > 0


def test_rayleigh_clipped_nodal_domain(square2_mesh, square2_spectrum):
    # on a nodal domain the clipped quotient of an eigenfunction is its eigenvalue
    pair = square2_spectrum[1]
    data = element_data(square2_mesh)
    allt = np.ones(len(square2_mesh.triangles), bool)
    _, m_pos, q_pos = rayleigh_on_region(square2_mesh, pair, allt, data, sign=1)
    _, m_neg, q_neg = rayleigh_on_region(square2_mesh, pair, allt, data, sign=-1)
    assert m_pos + m_neg == pytest.approx(1.0, rel=1e-9)
    assert q_pos == pytest.approx(pair.mu, rel=2e-2)
    assert q_neg == pytest.approx(pair.mu, rel=2e-2)


def test_rayleigh_empty_region(square2_mesh, square2_spectrum):
    with pytest.raises(DegenerateRegionError):
        rayleigh_on_region(square2_mesh, square2_spectrum[1], np.array([], dtype=int))
