"""Sectorial solutions, Stokes matrices, and the central connection matrix.

Anchoring policy: each canonical solution is seeded with the optimally
truncated formal solution at the mid-sector direction, where every
exponential e^{(u_i-u_j)z} has unit modulus, so the truncation tail
contaminates all solution directions equally at the ~tail level.  Paths
descend radially at that neutral angle first and only then sweep arcs at
the evaluation radius; this keeps the ratio of column scales along each leg
bounded by exp(sigma * r_eval) instead of exp(sigma * R_match), which is
what makes double precision sufficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .errors import (InconsistentOverlap, NonFiniteValue, StepUnderflow,
                     TailTooLarge)
from .series import FormalReduction, LeveltData

GAP_TOL = 1e-10
MAX_ARC_STEP = np.pi / 16


# ---------------------------------------------------------------------------
# sector geometry
# ---------------------------------------------------------------------------

def stokes_rays(u: Sequence[complex], gap_tol: float = GAP_TOL) -> List[float]:
    """Angles in [0, 2pi) where Re(z (u_i - u_j)) = 0 for some pair with
    u_i != u_j.  Each pair contributes two antipodal rays."""
    u = np.asarray(u, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(u))))
    rays = set()
    n = len(u)
    for i in range(n):
        for j in range(i + 1, n):
            d = u[i] - u[j]
            if abs(d) <= gap_tol * scale:
                continue
            for sign in (1, -1):
                ang = (sign * np.pi / 2 - np.angle(d)) % (2 * np.pi)
                rays.add(round(float(ang), 14))
    return sorted(rays)


def admissible_angle(rays: Sequence[float]) -> Tuple[float, float]:
    """Midpoint of the largest angular gap of the ray arrangement and the
    overlap half-angle eps = min(gap/4, pi/12).  Ties resolve to the
    midpoint lying in [0, pi)."""
    if not rays:
        return 0.0, np.pi / 12
    rays = sorted(r % (2 * np.pi) for r in rays)
    gaps = []
    for k, r in enumerate(rays):
        nxt = rays[(k + 1) % len(rays)]
        width = (nxt - r) % (2 * np.pi)
        if len(rays) == 1:
            width = 2 * np.pi
        gaps.append((width, (r + width / 2) % (2 * np.pi)))
    best = max(g[0] for g in gaps)
    mids = [mid for width, mid in gaps if abs(width - best) < 1e-12]
    in_range = [m for m in mids if 0.0 - 1e-12 <= m < np.pi]
    phi = min(in_range) if in_range else min(mids)
    return float(phi), float(min(best / 4, np.pi / 12))


def is_admissible(phi: float, rays: Sequence[float],
                  margin: float = 1e-6) -> bool:
    """Whether the line through angle phi stays at least ``margin`` away
    from every Stokes ray."""
    for r in rays:
        d = (phi - r) % np.pi
        if min(d, np.pi - d) < margin:
            return False
    return True


@dataclass(frozen=True)
class SectorConfig:
    """Admissible direction phi, overlap half-angle eps, and the rays."""

    phi: float
    eps: float
    rays: Tuple[float, ...]

    def overlap_angle(self, nu: int) -> float:
        """Accumulated argument of the center of S_nu ∩ S_{nu+1}."""
        return self.phi + nu * np.pi

    def mid_angle(self, nu: int) -> float:
        """Accumulated argument of the mid-sector (neutral) direction."""
        return self.phi - np.pi / 2 + nu * np.pi

    def contains(self, theta: float, nu: int, slack: float = 1e-9) -> bool:
        lo = self.phi - np.pi - self.eps + nu * np.pi
        hi = self.phi + self.eps + nu * np.pi
        return lo - slack <= theta <= hi + slack


def sector_config(u: Sequence[complex],
                  phi: Optional[float] = None) -> SectorConfig:
    rays = stokes_rays(u)
    if phi is None:
        phi, eps = admissible_angle(rays)
    else:
        _, eps = admissible_angle(rays)
        if not is_admissible(phi, rays):
            raise ValueError(f"phi={phi} is not admissible for rays {rays}")
    return SectorConfig(phi=float(phi), eps=float(eps), rays=tuple(rays))


# ---------------------------------------------------------------------------
# path integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Arc:
    """Counterclockwise (or cw) arc at constant radius; angles are
    accumulated arguments, not reduced mod 2pi."""

    radius: float
    theta0: float
    theta1: float


@dataclass(frozen=True)
class Ray:
    """Radial leg at a fixed accumulated argument."""

    r0: float
    r1: float
    theta: float


PathLeg = object  # Arc | Ray


def integrate_path(A: Callable[[complex], np.ndarray], legs: Sequence[PathLeg],
                   Y0: np.ndarray, rtol: float = 1e-10,
                   atol: Optional[float] = None) -> np.ndarray:
    """Continue the solution of dY/dz = A(z) Y along arc/ray legs.

    Error control is relative by default: the absolute floor is tied to the
    current matrix scale so that small solution columns are not drowned by
    an absolute tolerance sized for large ones.
    """
    Y = np.asarray(Y0, dtype=complex)
    shape = Y.shape
    for leg in legs:
        scale = float(np.max(np.abs(Y)))
        if not np.isfinite(scale):
            raise NonFiniteValue("non-finite state before a path leg")
        leg_atol = atol if atol is not None else max(rtol * 1e-3 * scale, 1e-290)
        if isinstance(leg, Arc):
            sweep = leg.theta1 - leg.theta0
            if abs(sweep) < 1e-15:
                continue
            nseg = max(1, int(math.ceil(abs(sweep) / MAX_ARC_STEP)))
            for k in range(nseg):
                ta = leg.theta0 + sweep * k / nseg
                tb = leg.theta0 + sweep * (k + 1) / nseg

                def rhs(t, y, ta=ta, tb=tb, r=leg.radius):
                    th = ta + t * (tb - ta)
                    z = r * np.exp(1j * th)
                    dz = 1j * z * (tb - ta)
                    return (dz * (A(z) @ y.reshape(shape))).ravel()

                Y = _solve_leg(rhs, Y, shape, rtol, leg_atol)
        elif isinstance(leg, Ray):
            if abs(leg.r1 - leg.r0) < 1e-15:
                continue

            def rhs(t, y, leg=leg):
                r = leg.r0 + t * (leg.r1 - leg.r0)
                z = r * np.exp(1j * leg.theta)
                dz = (leg.r1 - leg.r0) * np.exp(1j * leg.theta)
                return (dz * (A(z) @ y.reshape(shape))).ravel()

            Y = _solve_leg(rhs, Y, shape, rtol, leg_atol)
        else:
            raise TypeError(f"unknown path leg {leg!r}")
    return Y


def _solve_leg(rhs, Y, shape, rtol, atol):
    sol = solve_ivp(rhs, (0.0, 1.0), Y.ravel(), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=False)
    if not sol.success:
        raise StepUnderflow(f"integrator failed: {sol.message}")
    out = sol.y[:, -1].reshape(shape)
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("integration produced non-finite values")
    return out


def spectrum_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Multiset distance between two spectra: optimal matching, max metric."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("spectra have different sizes")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# ---------------------------------------------------------------------------
# canonical sectorial solutions
# ---------------------------------------------------------------------------

def choose_anchor_radius(reduction: FormalReduction,
                         tail_target: float = 1e-9,
                         reject_above: float = 1e-7,
                         grid: Optional[np.ndarray] = None) -> float:
    """Smallest radius on a log grid whose optimal-truncation tail estimate
    meets the target.  Rejects when no radius reaches ``reject_above``."""
    if grid is None:
        grid = np.geomspace(1.0, 400.0, 49)
    tails = [reduction.tail_estimate(r) for r in grid]
    for r, t in zip(grid, tails):
        if t <= tail_target:
            return float(r)
    k = int(np.argmin(tails))
    if tails[k] <= reject_above:
        return float(grid[k])
    raise TailTooLarge(
        f"best tail estimate {tails[k]:.2e} exceeds {reject_above:.0e}; "
        "raise the truncation order")


class CanonicalSolution:
    """Holomorphic solution Y_nu asymptotic to the formal solution on S_nu.

    The anchor value is the truncated formal solution at the mid-sector
    point z_nu = R e^{i(phi - pi/2 + nu pi)}; evaluation descends the
    neutral ray to the requested radius and sweeps an arc to the requested
    accumulated argument.  Evaluations are cached.  The Liouville residual
    |det Y e^{tr(U) z}| / anchor - 1 is tracked across all evaluations.
    """

    def __init__(self, reduction: FormalReduction, sector: SectorConfig,
                 nu: int, R_match: Optional[float] = None,
                 rtol: float = 1e-10, tail_target: float = 1e-9):
        self.reduction = reduction
        self.sector = sector
        self.nu = int(nu)
        self.rtol = float(rtol)
        self.R = float(R_match) if R_match is not None \
            else choose_anchor_radius(reduction, tail_target=tail_target)
        self.tail = reduction.tail_estimate(self.R)
        if R_match is not None and self.tail > 1e-7:
            raise TailTooLarge(
                f"tail estimate {self.tail:.2e} at R={self.R} exceeds 1e-7")
        self.theta_anchor = sector.mid_angle(self.nu)
        self.anchor = reduction.eval(self.R, self.theta_anchor)
        u = reduction.u
        self._A = lambda z: reduction.V / z - np.diag(u)
        self._trU = complex(np.sum(u))
        self._log_liouville_ref = self._log_liouville(
            self.anchor, self.R * np.exp(1j * self.theta_anchor))
        self.liouville_residual = 0.0
        self._cache: Dict[Tuple[float, float], np.ndarray] = {}

    def _log_liouville(self, Y, z):
        sign, logdet = np.linalg.slogdet(Y)
        return logdet + np.log(sign) + self._trU * z

    def __call__(self, r: float, theta: float) -> np.ndarray:
        return self.eval(r, theta)

    def eval(self, r: float, theta: float) -> np.ndarray:
        """Y_nu at z = r e^{i theta}; theta is the accumulated argument and
        must lie in S_nu."""
        key = (round(float(r), 12), round(float(theta), 12))
        if key in self._cache:
            return self._cache[key]
        if not self.sector.contains(theta, self.nu):
            raise ValueError(
                f"theta={theta} outside sector nu={self.nu} "
                f"(phi={self.sector.phi}, eps={self.sector.eps})")
        legs = [Ray(self.R, r, self.theta_anchor),
                Arc(r, self.theta_anchor, theta)]
        Y = integrate_path(self._A, legs, self.anchor, rtol=self.rtol)
        z = r * np.exp(1j * theta)
        lv = self._log_liouville(Y, z)
        self.liouville_residual = max(
            self.liouville_residual,
            float(abs(np.exp(lv - self._log_liouville_ref) - 1.0)))
        self._cache[key] = Y
        return Y


def dominance_pattern(u: Sequence[complex], theta: float,
                      gap_tol: float = GAP_TOL) -> np.ndarray:
    """Boolean mask of Stokes entries allowed on the overlap direction
    theta.  Entry (i, j) adds a multiple of column i to column j, which
    preserves the prescribed asymptotics of column j only when column i is
    recessive there, i.e., e^{-u_i z} is the smaller exponential:
    Re((u_i - u_j) z) > 0.  Entries between equal eigenvalues (inside the
    2x2 block) carry pure power-law factors z^{b_j-b_i} with |Re| < 1 and
    are forced onto the identity as well."""
    u = np.asarray(u, dtype=complex)
    n = len(u)
    scale = max(1.0, float(np.max(np.abs(u))))
    allowed = np.zeros((n, n), dtype=bool)
    direction = np.exp(1j * theta)
    for i in range(n):
        for j in range(n):
            if i == j:
                allowed[i, j] = True
            elif abs(u[i] - u[j]) > gap_tol * scale:
                allowed[i, j] = ((u[i] - u[j]) * direction).real > 0
    return allowed


def stokes_matrix(Y_lo: CanonicalSolution, Y_hi: CanonicalSolution,
                  overlap_points: Sequence[Tuple[float, float]],
                  rtol: Optional[float] = None,
                  pattern: Optional[np.ndarray] = None
                  ) -> Tuple[np.ndarray, float]:
    """Stokes matrix from Y_hi = Y_lo * S on the given overlap points
    (r, theta) pairs; returns the average and the max pairwise deviation.

    At anchor-scale radii the dominance-forbidden entries are unresolvable
    by construction (resolving them would need the solution beyond all orders),
    so when ``pattern`` is given both the average and the consistency
    deviation are restricted to the allowed entries.
    """
    rtol = Y_lo.rtol if rtol is None else rtol
    mats = []
    for r, th in overlap_points:
        A = Y_lo.eval(r, th)
        B = Y_hi.eval(r, th)
        mats.append(np.linalg.solve(A, B))
    S = np.mean(mats, axis=0)
    mask = np.ones_like(S, dtype=bool) if pattern is None else pattern
    dev = max(float(np.max(np.abs(np.where(mask, m - S, 0.0))))
              for m in mats) if len(mats) > 1 else 0.0
    if dev > 100 * max(rtol, 1e-12) * max(1.0, float(np.max(np.abs(S)))):
        raise InconsistentOverlap(
            f"Stokes matrix varies by {dev:.2e} across overlap points")
    return S, dev


def monodromy_at_zero(levelt: LeveltData, r0: Optional[float] = None,
                      rtol: float = 1e-10,
                      theta0: float = 0.0) -> Tuple[np.ndarray, float]:
    """Continue Y_L once counterclockwise around z = 0 and compare with
    e^{2 pi i (R+S)}.  Returns (loop matrix, max abs deviation)."""
    if r0 is None:
        r0 = 0.05
        while levelt.truncation_residual(r0) > rtol * 1e-2 and r0 > 1e-6:
            r0 /= 2
    A = lambda z: levelt.residue / z - levelt.U
    Y0 = levelt.eval(r0, theta0)
    Y = integrate_path(A, [Arc(r0, theta0, theta0 + 2 * np.pi)], Y0,
                       rtol=rtol)
    M_loop = np.linalg.solve(Y0, Y)
    resid = float(np.max(np.abs(M_loop - levelt.monodromy)))
    return M_loop, resid


def connection_matrix(Y0_handle: CanonicalSolution, levelt: LeveltData,
                      z_match_radius: Optional[float] = None,
                      rtol: float = 1e-10,
                      r_small: Optional[float] = None
                      ) -> Tuple[np.ndarray, float]:
    """Connection matrix C with Y_L = Y_0 C, matched on the admissible ray.

    The Levelt solution is summed at a small radius and continued outward;
    the canonical solution comes inward from its anchor.  The match is
    repeated at half the radius and the discrepancy reported."""
    phi = Y0_handle.sector.phi
    u = Y0_handle.reduction.u
    sigma = max(abs(u[i] - u[j]) for i in range(len(u))
                for j in range(len(u)) if abs(u[i] - u[j]) > GAP_TOL) \
        if len(u) > 1 else 1.0
    if z_match_radius is None:
        z_match_radius = min(3.0 / sigma, Y0_handle.R / 2)
    if r_small is None:
        r_small = 0.05
        while levelt.truncation_residual(r_small) > rtol * 1e-2 and r_small > 1e-6:
            r_small /= 2
    A = lambda z: levelt.residue / z - levelt.U
    cands = []
    for rm in (z_match_radius, z_match_radius / 2):
        YL = levelt.eval(r_small, phi)
        YL = integrate_path(A, [Ray(r_small, rm, phi)], YL, rtol=rtol)
        Y0 = Y0_handle.eval(rm, phi)
        cands.append(np.linalg.solve(Y0, YL))
    dev = float(np.max(np.abs(cands[0] - cands[1])))
    return cands[0], dev


def monodromy_via_loop(Y0_handle: CanonicalSolution, r_loop: float,
                       rtol: float = 1e-10) -> np.ndarray:
    """Counterclockwise continuation matrix of Y_0 around z = 0, computed
    at radius r_loop starting from the admissible direction."""
    phi = Y0_handle.sector.phi
    Y0 = Y0_handle.eval(r_loop, phi)
    A = Y0_handle._A
    Y = integrate_path(A, [Arc(r_loop, phi, phi + 2 * np.pi)], Y0, rtol=rtol)
    return np.linalg.solve(Y0, Y)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class MonodromyData:
    """Full monodromy data of one caustic ODE system.

    ``stokes`` maps nu to the dominance-projected Stokes matrix; the raw
    averaged matrices stay in ``stokes_raw``.  ``diagnostics`` carries the
    consistency residuals named in the keys."""

    B_exp: np.ndarray
    stokes: Dict[int, np.ndarray]
    stokes_raw: Dict[int, np.ndarray]
    levelt: LeveltData
    connection: np.ndarray
    monodromy_zero: np.ndarray
    sector: SectorConfig
    anchor_radius: float
    diagnostics: Dict[str, float] = field(default_factory=dict)


def compute_monodromy_data(u, V, K: int = 10,
                           phi: Optional[float] = None,
                           H0_block: Optional[np.ndarray] = None,
                           T0: Optional[np.ndarray] = None,
                           rtol: float = 1e-10,
                           K_levelt: int = 24,
                           nu_values: Tuple[int, ...] = (0, 1),
                           tail_target: float = 1e-9,
                           loop_checks: bool = True) -> MonodromyData:
    """End-to-end monodromy data for dY/dz = (V/z - U) Y.

    phi freezes the admissible angle (isomonodromy sweeps align sectors
    across samples); H0_block and T0 override the gauge conventions at
    infinity and zero (parallel transport along caustics is supplied this
    way).  Off-pattern Stokes entries are measured at a dominance-balanced
    radius, recorded, and projected away.
    """
    from .series import formal_reduction, levelt_solution

    u = np.asarray(u, dtype=complex)
    V = np.asarray(V, dtype=complex)
    n = len(u)
    red = formal_reduction(u, V, K=K, H0_block=H0_block)
    sector = sector_config(u, phi=phi)
    lv = levelt_solution(V, np.diag(u), K_levelt=K_levelt, T0=T0)

    gaps = [abs(u[i] - u[j]) for i in range(n) for j in range(i + 1, n)
            if abs(u[i] - u[j]) > GAP_TOL * max(1.0, float(np.max(np.abs(u))))]
    sigma = min(gaps) if gaps else 1.0
    diag: Dict[str, float] = {}

    handles = {nu: CanonicalSolution(red, sector, nu, rtol=rtol,
                                     tail_target=tail_target)
               for nu in range(min(nu_values), max(nu_values) + 2)}
    R = handles[0].R
    # All Stokes entries are extracted where no exponential pair dominates
    # by more than ~e^5; farther out, integration noise amplified by
    # e^{sigma R} would drown both the allowed and the forbidden slots.
    r_ext = min(5.0 / sigma, R)

    stokes: Dict[int, np.ndarray] = {}
    stokes_raw: Dict[int, np.ndarray] = {}
    offpat = 0.0
    cons = 0.0
    for nu in nu_values:
        th = sector.overlap_angle(nu)
        allowed = dominance_pattern(u, th)
        pts = [(r_ext, th), (r_ext, th - sector.eps / 2),
               (r_ext, th + sector.eps / 2), (1.4 * r_ext, th)]
        S, dev = stokes_matrix(handles[nu], handles[nu + 1], pts,
                               pattern=allowed)
        cons = max(cons, dev)
        offpat = max(offpat, float(np.max(np.abs(np.where(
            allowed, 0.0, S - np.eye(n))))))
        S_proj = np.where(allowed, S, 0.0)
        S_proj[np.arange(n), np.arange(n)] = 1.0
        stokes_raw[nu] = S
        stokes[nu] = S_proj
        diag[f"stokes_{nu}_det_err"] = float(abs(np.linalg.det(S_proj) - 1.0))
    diag["stokes_overlap_consistency"] = cons
    diag["stokes_offpattern"] = offpat

    C, c_dev = connection_matrix(handles[0], lv, rtol=rtol)
    diag["connection_match_consistency"] = c_dev

    M_tilde = lv.monodromy
    if loop_checks:
        _, m_dev = monodromy_at_zero(lv, rtol=min(rtol, 1e-11))
        diag["levelt_loop_residual"] = m_dev
        r_loop = min(2.5 / sigma, R / 2)
        M_cc = monodromy_via_loop(handles[0], r_loop, rtol=min(rtol, 1e-11))
        diag["cyclic_spectrum_residual"] = spectrum_distance(
            np.linalg.eigvals(M_cc),
            np.exp(2j * np.pi * lv.mu_eigenvalues))
        diag["cyclic_conjugation_residual"] = float(np.max(np.abs(
            C @ M_tilde @ np.linalg.inv(C) - M_cc)))
    diag["liouville_residual"] = max(h.liouville_residual
                                     for h in handles.values())
    diag["anchor_tail"] = handles[0].tail

    return MonodromyData(B_exp=red.B_exp.copy(), stokes=stokes,
                         stokes_raw=stokes_raw, levelt=lv, connection=C,
                         monodromy_zero=M_tilde, sector=sector,
                         anchor_radius=R, diagnostics=diag)
