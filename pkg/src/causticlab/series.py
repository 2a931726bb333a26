"""Formal solutions of dY/dz = (V/z - U) Y at both singularities.

At the irregular point z = infinity the system is block-diagonalized by a
formal power series gauge (one 2x2 block for the double eigenvalue of U
plus scalar blocks), reduced to an Euler system, and packaged as
Y_F = G(z) H(z) z^B exp(-Uz) with B the exponent of formal monodromy.  The
series is factorially divergent; evaluation happens at optimal truncation
with a quantified tail.

At the Fuchsian point z = 0 a convergent gauge produces the Levelt
fundamental solution Y_L = T(z) z^D z^{R+S}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import (NonDiagonalizableResidue, ResonantResidue, SmallDivisor,
                     ZeroResidue)

DOUBLE_TOL = 1e-12    # first two diagonal entries of U must agree this well
GAP_TOL = 1e-10       # any other eigenvalue gap below this is a small divisor


def _block_mask(n: int, double: bool) -> np.ndarray:
    """Entries kept in the B_k matrices: the diagonal, plus the top-left
    2x2 block when the first two eigenvalues coincide."""
    mask = np.zeros((n, n), dtype=bool)
    if double:
        mask[:2, :2] = True
    mask[np.arange(n), np.arange(n)] = True
    return mask


def _u_diagonal(U) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim == 2:
        if np.max(np.abs(U - np.diag(np.diag(U)))) > 1e-12 * max(
                1.0, float(np.max(np.abs(U)))):
            raise ValueError("U must be diagonal")
        return np.diag(U).copy()
    return U.copy()


def block_diagonalize_formal(U, V, K: int) -> Tuple[List[np.ndarray],
                                                    List[np.ndarray]]:
    """Solve the gauge recursion order by order.

    Returns (G, B) with G[0] = Id, B[0] = None and, for k >= 1,
    -[U, G_k] + (k-1) G_{k-1} + V G_{k-1} - sum_{s<k} G_{k-s} B_s = B_k.
    Off-block entries of G_k are RHS/(u_i - u_j); the block and diagonal of
    G_k are zero (the normalization that makes the G_k unique).

    Supported spectra: first two entries equal with all others simple (the
    caustic case), or all entries simple (the semisimple case), or a fully
    scalar U with V = 0.  Anything else raises SmallDivisor.
    """
    u = _u_diagonal(U)
    n = len(u)
    V = np.asarray(V, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(u))))
    if np.max(np.abs(V + V.T)) > 1e-10 * max(1.0, float(np.max(np.abs(V)))):
        raise ValueError("V must be antisymmetric")
    if np.max(np.abs(u - u[0])) <= GAP_TOL * scale:
        if float(np.max(np.abs(V))) > 0:
            raise SmallDivisor("all eigenvalues coincide with V != 0")
        z = np.zeros((n, n), dtype=complex)
        return [np.eye(n, dtype=complex)] + [z.copy() for _ in range(K)], \
            [None] + [z.copy() for _ in range(K)]
    double = abs(u[0] - u[1]) <= DOUBLE_TOL * scale
    if double:
        u = u.copy()
        u[1] = u[0]
    denom = u[:, None] - u[None, :]
    mask = _block_mask(n, double)
    off = ~mask
    small = np.abs(denom[off]) < GAP_TOL * scale
    if np.any(small):
        raise SmallDivisor(
            "an off-block eigenvalue gap is below threshold; either a third "
            "eigenvalue coalesces or the double pair is not leading")
    G: List[np.ndarray] = [np.eye(n, dtype=complex)]
    B: List[Optional[np.ndarray]] = [None]
    for k in range(1, K + 1):
        rhs = (k - 1) * G[k - 1] + V @ G[k - 1]
        for s in range(1, k):
            rhs = rhs - G[k - s] @ B[s]
        Bk = np.where(mask, rhs, 0.0)
        Gk = np.zeros((n, n), dtype=complex)
        Gk[off] = rhs[off] / denom[off]
        G.append(Gk)
        B.append(Bk)
    return G, B


def diagonalize_residue(V12: complex) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed 2x2 diagonalizer of [[0, V12], [-V12, 0]] and the resulting
    exponent entries (i V12, -i V12).

    The convention (1/sqrt2) [[1, 1], [i, -i]] puts the eigenvalue i*V12
    first.  Any caustic keeps V12 constant, so this block is constant too;
    parallel transport against the induced connection (handled by the
    sweep driver) turns it into the flat choice.
    """
    if abs(V12) < 1e-14:
        raise ZeroResidue("V^1_2 ~ 0; residue block vanishes")
    H0_block = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)
    return H0_block, np.array([1j * V12, -1j * V12], dtype=complex)


def reduce_to_euler_form(Bk: Sequence, H0: np.ndarray, K: int,
                         B_diag: Optional[np.ndarray] = None
                         ) -> List[np.ndarray]:
    """Gauge the block-diagonal Fuchsian tail onto the pure Euler system.

    Solves [B, H_k] + k H_k = -Bhat_{k+1} - sum_{l<k} Bhat_{k+1-l} H_l
    entrywise, requiring B_a - B_b + k bounded away from zero.  (Published
    statements of this recursion sometimes carry 1/k in place of k; the
    residual test of the assembled solution pins the factor k, which is
    also what non-resonance of B protects.)
    """
    n = H0.shape[0]
    H0_inv = np.linalg.inv(H0)
    if B_diag is None:
        B_full = H0_inv @ Bk[1] @ H0
        B_diag = np.diag(B_full).copy()
    Bhat = {k: H0_inv @ Bk[k] @ H0 for k in range(2, min(len(Bk), K + 2))}
    H: List[np.ndarray] = [np.eye(n, dtype=complex)]
    for k in range(1, K + 1):
        rhs = -(Bhat.get(k + 1, np.zeros((n, n), dtype=complex))).copy()
        for l in range(1, k):
            rhs = rhs - Bhat.get(k + 1 - l, np.zeros((n, n))) @ H[l]
        div = B_diag[:, None] - B_diag[None, :] + k
        if np.min(np.abs(div)) < 1e-12:
            raise ResonantResidue(
                f"divisor B_a - B_b + {k} vanished; residue is resonant")
        H.append(rhs / div)
    return H


@dataclass
class FormalReduction:
    """Truncated formal fundamental solution at z = infinity."""

    u: np.ndarray          # diagonal of U, u[0] == u[1]
    V: np.ndarray
    K: int
    G: List[np.ndarray]
    Bk: List[Optional[np.ndarray]]
    H0: np.ndarray         # n x n, 2x2 block + identity
    H: List[np.ndarray]
    B_exp: np.ndarray      # diagonal entries of the exponent of formal monodromy

    # -- evaluation ---------------------------------------------------------

    def eval(self, r: float, theta: float, K: Optional[int] = None,
             deriv: bool = False) -> np.ndarray:
        """Y_F at z = r e^{i theta}; theta is the accumulated argument that
        selects the branch of z^B.  With deriv=True returns dY_F/dz computed
        analytically (no finite differences)."""
        K = self.K if K is None else min(K, self.K)
        z = r * np.exp(1j * theta)
        zs = z ** -np.arange(K + 1)
        Gz = sum(self.G[k] * zs[k] for k in range(K + 1))
        Hker = sum(self.H[k] * zs[k] for k in range(K + 1))
        Hz = self.H0 @ Hker
        logz = np.log(r) + 1j * theta
        zB = np.exp(self.B_exp * logz)
        eU = np.exp(-self.u * z)
        if not deriv:
            return (Gz @ Hz) * zB[None, :] * eU[None, :]
        dGz = sum(-k * self.G[k] * zs[k] / z for k in range(1, K + 1))
        dHz = self.H0 @ sum(-k * self.H[k] * zs[k] / z for k in range(1, K + 1))
        core = (dGz @ Hz + Gz @ dHz
                + (Gz @ Hz) * (self.B_exp / z)[None, :]
                - (Gz @ Hz) * self.u[None, :])
        return core * zB[None, :] * eU[None, :]

    def tail_estimate(self, r: float) -> float:
        """Optimal-truncation tail bound min_k ||G_k|| / r^k."""
        return float(min(np.linalg.norm(self.G[k]) / r ** k
                         for k in range(1, self.K + 1)))

    def optimal_order(self, r: float) -> int:
        vals = [np.linalg.norm(self.G[k]) / r ** k for k in range(1, self.K + 1)]
        return int(np.argmin(vals)) + 1

    def recursion_residual(self) -> float:
        """Max residual of the defining recursion over all computed orders,
        scaled by max(1, ||G_k||) to allow for factorial growth."""
        u = self.u
        out = 0.0
        for k in range(1, self.K + 1):
            comm = u[:, None] * self.G[k] - self.G[k] * u[None, :]
            rhs = (k - 1) * self.G[k - 1] + self.V @ self.G[k - 1]
            for s in range(1, k):
                rhs = rhs - self.G[k - s] @ self.Bk[s]
            res = -comm + rhs - self.Bk[k]
            out = max(out, float(np.max(np.abs(res)))
                      / max(1.0, float(np.linalg.norm(self.G[k]))))
        return out


def formal_reduction(U, V, K: int = 10,
                     H0_block: Optional[np.ndarray] = None) -> FormalReduction:
    """Full reduction pipeline: G/B recursion, residue diagonalization,
    Euler-form H recursion.  H0_block overrides the fixed 2x2 convention
    (used by isomonodromy sweeps to supply the parallel-transported block).
    """
    u = _u_diagonal(U)
    n = len(u)
    V = np.asarray(V, dtype=complex)
    G, Bk = block_diagonalize_formal(u, V, K + 1)
    scale = max(1.0, float(np.max(np.abs(u))))
    double = abs(u[0] - u[1]) <= DOUBLE_TOL * scale
    if not double or abs(V[0, 1]) < 1e-14:
        # semisimple spectrum or a vanishing residue block: the exponent of
        # formal monodromy is zero and there is nothing to rotate
        block, exp_entries = np.eye(2, dtype=complex), np.zeros(2, dtype=complex)
    else:
        block, exp_entries = diagonalize_residue(V[0, 1])
    if H0_block is not None:
        block = np.asarray(H0_block, dtype=complex)
    H0 = np.eye(n, dtype=complex)
    H0[:2, :2] = block
    B_exp = np.zeros(n, dtype=complex)
    B_exp[:2] = exp_entries
    H = reduce_to_euler_form(Bk, H0, K, B_diag=B_exp)
    u = u.copy()
    if double:
        u[1] = u[0]
    return FormalReduction(u=u, V=V, K=K, G=G, Bk=Bk, H0=H0, H=H, B_exp=B_exp)


def formal_solution_eval(reduction: FormalReduction, z: complex) -> np.ndarray:
    """Y_F at a point using the principal branch of arg z."""
    return reduction.eval(abs(z), float(np.angle(z)))


# ---------------------------------------------------------------------------
# Levelt solution at z = 0
# ---------------------------------------------------------------------------

@dataclass
class LeveltData:
    """Levelt fundamental solution Y_L = T(z) z^D z^{R+S} at z = 0."""

    residue: np.ndarray
    U: np.ndarray
    T0: np.ndarray
    Theta: List[np.ndarray]       # T_k = T0 @ Theta_k
    D: np.ndarray                 # integer parts of the residue eigenvalues
    S: np.ndarray                 # fractional parts, 0 <= Re < 1
    R: np.ndarray                 # nilpotent resonance matrix, sum of R_k
    Rk: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def mu_eigenvalues(self) -> np.ndarray:
        return self.D + self.S

    @property
    def monodromy(self) -> np.ndarray:
        return expm(2j * np.pi * (self.R + np.diag(self.S)))

    @property
    def T(self) -> List[np.ndarray]:
        return [self.T0 @ th for th in self.Theta]

    def eval(self, r: float, theta: float,
             K: Optional[int] = None) -> np.ndarray:
        """Y_L at z = r e^{i theta} with accumulated argument theta."""
        K = len(self.Theta) - 1 if K is None else min(K, len(self.Theta) - 1)
        z = r * np.exp(1j * theta)
        Tz = self.T0 @ sum(self.Theta[k] * z ** k for k in range(K + 1))
        logz = np.log(r) + 1j * theta
        zD = np.exp(self.D * logz)
        zRS = expm((self.R + np.diag(self.S)) * logz)
        return (Tz * zD[None, :]) @ zRS

    def truncation_residual(self, r: float) -> float:
        """Size of the first dropped series term at radius r, relative."""
        k = len(self.Theta) - 1
        return float(np.linalg.norm(self.Theta[k]) * r ** k)

    def ode_residual(self, r: float, theta: float = 0.0) -> float:
        """Defect of the truncated gauge series in the transformed equation,
        evaluated analytically: T' + T (J + sum R_k z^k)/z - (A/z - U) T.
        Scales like r^{K_levelt} as r -> 0."""
        z = r * np.exp(1j * theta)
        n = self.T0.shape[0]
        K = len(self.Theta) - 1
        Tz = self.T0 @ sum(self.Theta[k] * z ** k for k in range(K + 1))
        dTz = self.T0 @ sum(k * self.Theta[k] * z ** (k - 1)
                            for k in range(1, K + 1))
        J = np.diag(self.D + self.S)
        inner = J + sum(Rm * z ** k for k, Rm in self.Rk.items()) \
            if self.Rk else J
        bracket = dTz + Tz @ inner / z - (self.residue / z - self.U) @ Tz
        return float(np.max(np.abs(bracket)))


def levelt_solution(residue, U, K_levelt: int = 12,
                    T0: Optional[np.ndarray] = None,
                    resonance_tol: float = 1e-10) -> LeveltData:
    """Recursive gauge to Levelt form for dY/dz = (residue/z - U) Y.

    T0 must diagonalize the residue; when omitted it is built from numpy
    eigenvectors ordered by (Re, Im) of the eigenvalue and scaled to unit
    max entry.  Entries of R_k appear only on resonances mu_i - mu_j = k.
    """
    residue = np.asarray(residue, dtype=complex)
    U = np.asarray(U, dtype=complex)
    n = residue.shape[0]
    if T0 is None:
        lam, vecs = np.linalg.eig(residue)
        order = np.lexsort((lam.imag, lam.real))
        vecs = vecs[:, order]
        vecs = vecs / vecs[np.argmax(np.abs(vecs), axis=0), np.arange(n)]
        T0 = vecs
    T0 = np.asarray(T0, dtype=complex)
    J = np.linalg.solve(T0, residue @ T0)
    mu = np.diag(J).copy()
    off = float(np.max(np.abs(J - np.diag(mu))))
    if off > 1e-9 * max(1.0, float(np.max(np.abs(residue)))):
        raise NonDiagonalizableResidue(
            f"T0 does not diagonalize the residue (off-diagonal {off:.2e}); "
            "Jordan-block Levelt theory is out of scope")
    d = np.array([int(np.floor(m.real + 1e-12)) for m in mu])
    s = mu - d
    Uj = np.linalg.solve(T0, U @ T0)
    Theta: List[np.ndarray] = [np.eye(n, dtype=complex)]
    Rk: Dict[int, np.ndarray] = {}
    for k in range(1, K_levelt + 1):
        rhs = Uj @ Theta[k - 1]
        for l in range(1, k):
            if k - l in Rk:
                rhs = rhs + Theta[l] @ Rk[k - l]
        den = mu[:, None] - mu[None, :] - k
        resonant = np.abs(den) < resonance_tol
        Rmat = np.where(resonant, -rhs, 0.0)
        Tk = np.where(resonant, 0.0, rhs / np.where(resonant, 1.0, den))
        Theta.append(Tk)
        if np.any(np.abs(Rmat) > 0):
            Rk[k] = Rmat
    R = sum(Rk.values()) if Rk else np.zeros((n, n), dtype=complex)
    return LeveltData(residue=residue, U=U, T0=T0, Theta=Theta,
                      D=d, S=s, R=R, Rk=Rk)
