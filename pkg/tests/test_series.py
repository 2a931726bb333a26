import numpy as np
import pytest

from causticlab.caustic import caustic_frame
from causticlab.errors import ResonantResidue, SmallDivisor, ZeroResidue
from causticlab.series import (FormalReduction, block_diagonalize_formal,
                               diagonalize_residue, formal_reduction,
                               formal_solution_eval, levelt_solution,
                               reduce_to_euler_form)
from conftest import h3_curve_main


def _toy_V(v12=0.2j, v13=1.0, v23=1.0):
    V = np.zeros((3, 3), dtype=complex)
    V[0, 1], V[1, 0] = v12, -v12
    V[0, 2], V[2, 0] = v13, -v13
    V[1, 2], V[2, 1] = v23, -v23
    return V


def test_first_order_block():
    u = np.array([0.0, 0.0, 1.0], dtype=complex)
    V = _toy_V(v12=1j / 5)
    G, B = block_diagonalize_formal(u, V, 1)
    expect_B1 = np.zeros((3, 3), dtype=complex)
    expect_B1[0, 1], expect_B1[1, 0] = V[0, 1], -V[0, 1]
    assert np.max(np.abs(B[1] - expect_B1)) < 1e-15
    # off-block entries of G1 are V/(u_i - u_j); block and diagonal vanish
    assert G[1][0, 1] == 0 and G[1][1, 0] == 0
    assert np.max(np.abs(np.diag(G[1]))) == 0
    assert abs(G[1][0, 2] - V[0, 2] / (u[0] - u[2])) < 1e-15
    assert abs(G[1][2, 1] - V[2, 1] / (u[2] - u[1])) < 1e-15


def test_zero_V_trivial():
    u = np.array([0.0, 0.0, 1.0], dtype=complex)
    G, B = block_diagonalize_formal(u, np.zeros((3, 3)), 6)
    assert all(np.max(np.abs(G[k])) == 0 for k in range(1, 7))
    assert all(np.max(np.abs(B[k])) == 0 for k in range(1, 7))
    red = formal_reduction(u, _toy_V(), K=6)
    assert red.recursion_residual() < 1e-13


def test_recursion_residual_toy():
    u = np.array([0.0, 0.0, 1.0], dtype=complex)
    red = formal_reduction(u, _toy_V(v12=1j / 5), K=2)
    assert red.recursion_residual() < 1e-14


def test_small_divisor_raises():
    u = np.array([0.0, 0.0, 1e-12], dtype=complex)
    with pytest.raises(SmallDivisor):
        block_diagonalize_formal(u, _toy_V(), 2)


def test_diagonalize_residue_identity():
    rng = np.random.default_rng(1)
    for _ in range(5):
        v12 = complex(rng.standard_normal(), rng.standard_normal())
        H0, ent = diagonalize_residue(v12)
        T = np.array([[0, v12], [-v12, 0]], dtype=complex)
        d = np.linalg.solve(H0, T @ H0)
        assert np.max(np.abs(d - np.diag(ent))) < 1e-14


def test_exponent_values():
    _, ent = diagonalize_residue(-0.3j)
    assert np.max(np.abs(ent - np.array([0.3, -0.3]))) < 1e-15
    _, ent = diagonalize_residue(-1j / 6)
    assert np.max(np.abs(ent - np.array([1 / 6, -1 / 6]))) < 1e-15
    with pytest.raises(ZeroResidue):
        diagonalize_residue(0.0)


def test_euler_form_trivial_and_first_order():
    n = 3
    H0 = np.eye(n, dtype=complex)
    H0[:2, :2] = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
    Bd = np.array([0.2, -0.2, 0.0], dtype=complex)
    B1 = H0 @ np.diag(Bd) @ np.linalg.inv(H0)
    # all higher B_k zero -> all H_k zero
    Bk = [None, B1] + [np.zeros((n, n), dtype=complex)] * 5
    H = reduce_to_euler_form(Bk, H0, 4, B_diag=Bd)
    assert all(np.max(np.abs(h)) == 0 for h in H[1:])
    # generic B2 block: closed form of the k=1 step
    B2 = np.zeros((n, n), dtype=complex)
    B2[:2, :2] = np.array([[0.3, -0.1], [0.7j, 0.2]])
    B2[2, 2] = 0.5
    Bk = [None, B1, B2] + [np.zeros((n, n), dtype=complex)] * 4
    H = reduce_to_euler_form(Bk, H0, 3, B_diag=Bd)
    B2h = np.linalg.solve(H0, B2 @ H0)
    expect = -B2h / (Bd[:, None] - Bd[None, :] + 1)
    assert np.max(np.abs(H[1] - expect)) < 1e-14


def test_resonant_divisor_raises():
    n = 3
    H0 = np.eye(n, dtype=complex)
    Bd = np.array([0.5, -0.5, 0.0], dtype=complex)  # B_2 - B_1 + 1 = 0
    Bk = [None, np.diag(Bd), np.eye(n, dtype=complex)] + \
        [np.zeros((n, n), dtype=complex)] * 3
    with pytest.raises(ResonantResidue):
        reduce_to_euler_form(Bk, H0, 2, B_diag=Bd)


def _h3_system(h3, s=1.0, K=12):
    fr = caustic_frame(h3, h3_curve_main(s))
    return fr, formal_reduction(fr.u_diag, fr.V, K=K)


def test_formal_solution_trivial_exponential():
    u = np.array([0.0, 0.0, 1.0], dtype=complex)
    red = formal_reduction(u, np.zeros((3, 3)), K=4)
    # V = 0: Y_F = e^{-Uz} exactly
    z = 7.0 + 3.0j
    Y = formal_solution_eval(red, z)
    expect = np.diag(np.exp(-u * z))
    assert np.max(np.abs(Y - expect)) < 1e-14


def test_series_coefficient_identity(h3):
    _, red = _h3_system(h3)
    # coefficient of z^{-1} in G(z)H(z) is H0 H1 + G1 H0
    lhs = red.G[1] @ red.H0 + red.H0 @ red.H[1]
    z = 1e6
    num = (sum(red.G[k] * z ** -k for k in range(red.K + 1))
           @ red.H0 @ (np.eye(3) + sum(red.H[k] * z ** -k
                                       for k in range(1, red.K + 1))) - red.H0) * z
    assert np.max(np.abs(num - lhs)) < 1e-5


def test_h3_formal_residual_small(h3):
    _, red = _h3_system(h3, K=8)
    for phi in (0.3, 2.0):
        r = 40.0
        Y = red.eval(r, phi)
        dY = red.eval(r, phi, deriv=True)
        z = r * np.exp(1j * phi)
        A = red.V / z - np.diag(red.u)
        res = dY - A @ Y
        rel = max(np.linalg.norm(res[:, j]) / np.linalg.norm(Y[:, j])
                  for j in range(3))
        assert rel < 1e-8


def _residual_slope(red, radii, K, theta=0.3):
    vals = []
    for r in radii:
        Y = red.eval(r, theta, K=K)
        dY = red.eval(r, theta, K=K, deriv=True)
        z = r * np.exp(1j * theta)
        A = red.V / z - np.diag(red.u)
        res = dY - A @ Y
        vals.append(max(np.linalg.norm(res[:, j]) / np.linalg.norm(Y[:, j])
                        for j in range(red.u.shape[0])))
    return np.polyfit(np.log(radii), np.log(vals), 1)[0]


def test_residual_decay_slopes(h3):
    _, red = _h3_system(h3, K=9)
    slope = _residual_slope(red, [20.0, 40.0, 80.0], K=4)
    assert abs(slope - (-5)) < 0.5
    # K = 8 on the H3 system underflows at those radii; a small-gap system
    # keeps the K = 8 tail measurable
    u = np.array([0.0, 0.0, 0.4], dtype=complex)
    red = formal_reduction(u, _toy_V(v12=0.15j, v13=0.4, v23=0.3), K=9)
    slope = _residual_slope(red, [20.0, 40.0, 80.0], K=8)
    assert abs(slope - (-9)) < 0.5


def test_gauge_normalization_uniqueness(h3):
    _, red6 = _h3_system(h3, K=6)
    _, red10 = _h3_system(h3, K=10)
    for k in range(1, 7):
        assert np.array_equal(red6.G[k], red10.G[k])


def test_exponent_trace_zero(h3):
    _, red = _h3_system(h3)
    assert abs(np.sum(red.B_exp)) < 1e-14
    assert np.max(np.abs(np.sort(red.B_exp.real)
                         - np.array([-0.3, 0.0, 0.3]))) < 1e-12


# ---- Levelt ---------------------------------------------------------------

def test_levelt_h3(h3):
    fr, _ = _h3_system(h3)
    lv = levelt_solution(fr.V, np.diag(fr.u_diag), K_levelt=16)
    mu = np.sort(lv.mu_eigenvalues.real)
    assert np.max(np.abs(mu - np.array([-0.4, 0.0, 0.4]))) < 1e-10
    # paper split: -2/5 = -1 + 3/5
    assert sorted(lv.D.tolist()) == [-1, 0, 0]
    assert np.max(np.abs(lv.R)) == 0.0
    ev = np.linalg.eigvals(lv.monodromy)
    target = np.exp(2j * np.pi * np.array([-0.4, 0.0, 0.4]))
    from causticlab.monodromy import spectrum_distance
    assert spectrum_distance(ev, target) < 1e-10


def test_levelt_zero_residue():
    U = np.diag([0.3, -0.1, 0.7]).astype(complex)
    lv = levelt_solution(np.zeros((3, 3)), U, K_levelt=20)
    assert np.max(np.abs(lv.T0 - np.eye(3))) < 1e-14
    assert np.max(np.abs(lv.monodromy - np.eye(3))) < 1e-14
    from scipy.linalg import expm
    r = 0.3
    assert np.max(np.abs(lv.eval(r, 0.0) - expm(-U * r))) < 1e-12


def test_levelt_solves_ode(h3):
    fr, _ = _h3_system(h3)
    lv = levelt_solution(fr.V, np.diag(fr.u_diag), K_levelt=18)
    r = 0.05
    for th in (0.0, 1.3):
        h = 1e-5
        z = r * np.exp(1j * th)
        dY = (lv.eval(r, th + h) - lv.eval(r, th - h)) / (2j * h * z)
        A = fr.V / z - np.diag(fr.u_diag)
        res = dY - A @ lv.eval(r, th)
        assert np.max(np.abs(res)) < 1e-8


def test_levelt_truncation_slope(h3):
    fr, _ = _h3_system(h3)
    K = 6
    lv = levelt_solution(fr.V, np.diag(fr.u_diag), K_levelt=K)
    radii = [0.05, 0.1, 0.2]
    vals = [lv.ode_residual(r) for r in radii]
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]
    assert abs(slope - K) < 0.6


def test_levelt_resonant_toy_matches_loop():
    # residue diag(0, 1) with a lower off-diagonal forcing term is resonant
    residue = np.diag([0.0, 1.0]).astype(complex)
    U = np.array([[0.0, 0.0], [0.8, 0.0]], dtype=complex)
    lv = levelt_solution(residue, U, K_levelt=14)
    assert 1 in lv.Rk
    assert abs(lv.Rk[1][1, 0] + U[1, 0]) < 1e-14
    from causticlab.monodromy import integrate_path, Arc
    r0 = 0.05
    Y0 = lv.eval(r0, 0.0)
    Y = integrate_path(lambda z: residue / z - U,
                       [Arc(r0, 0.0, 2 * np.pi)], Y0, rtol=1e-12)
    M_loop = np.linalg.solve(Y0, Y)
    assert np.max(np.abs(M_loop - lv.monodromy)) < 1e-9
