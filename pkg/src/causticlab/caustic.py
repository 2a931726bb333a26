"""Non-semisimple points: detection, classification, and caustic frames.

At a caustic point the tangent algebra is C[e]/(e^2) + C^{n-2}: the Euler
multiplication U is still diagonalizable but has a double eigenvalue, and
the double eigenspace carries a nilpotent direction.  The orthonormal
frame (N, f_2, ..., f_n) built here diagonalizes U, makes the grading
operator antisymmetric (the matrix V), and exposes the local invariant
m = 2/(1 - 2|V^1_2|) of the two-dimensional factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import (CausticLabError, CoalescenceNotCaustic,
                     DegenerateInducedMetric, FitFailure, FrameDiscontinuity,
                     Inconclusive, MultipleNilpotents)
from .manifold import ManifoldSpec, euler_mult, point_algebra

# eigenvalue pairs closer than cluster_rel * max|u| are treated as equal
CLUSTER_REL = 1e-8


class PointClass(Enum):
    SEMISIMPLE = "Semisimple"
    SEMISIMPLE_COALESCENT = "SemisimpleCoalescent"
    CAUSTIC = "Caustic"


def _sorted_eigs(m: np.ndarray):
    lam, vec = np.linalg.eig(m)
    order = np.lexsort((lam.imag, lam.real))
    return lam[order], vec[:, order]


def bifurcation_value(spec: ManifoldSpec, point) -> complex:
    """Discriminant of the characteristic polynomial of U at the point,
    computed from eigenvalues as prod_{i<j} (u_i - u_j)^2."""
    lam = np.linalg.eigvals(euler_mult(spec, point))
    n = len(lam)
    out = 1.0 + 0j
    for i in range(n):
        for j in range(i + 1, n):
            out *= (lam[i] - lam[j]) ** 2
    return complex(out)


def _min_gap(lam: np.ndarray) -> float:
    n = len(lam)
    return min(abs(lam[i] - lam[j]) for i in range(n) for j in range(i + 1, n))


def _all_distinct(m: np.ndarray, tol: float) -> bool:
    return _min_gap(np.linalg.eigvals(m)) > tol


def _diagonalizable_on_clusters(m: np.ndarray, tol: float) -> bool:
    """Geometric multiplicity == algebraic multiplicity for every eigenvalue
    cluster, via singular values of m - lambda*Id."""
    lam = np.linalg.eigvals(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    clusters = _cluster(lam, tol * scale)
    for members in clusters:
        k = len(members)
        if k == 1:
            continue
        center = np.mean([lam[i] for i in members])
        sv = np.linalg.svd(m - center * np.eye(m.shape[0]), compute_uv=False)
        small = int(np.sum(sv < 1e-6 * scale))
        if small < k:
            return False
    return True


def _cluster(lam: np.ndarray, gap: float) -> List[List[int]]:
    """Group eigenvalue indices whose pairwise distance is below gap
    (single-linkage), deterministically ordered by (Re, Im) of centers."""
    n = len(lam)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) < gap:
                parent[find(i)] = find(j)
    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = list(groups.values())
    out.sort(key=lambda g: (np.mean([lam[i] for i in g]).real,
                            np.mean([lam[i] for i in g]).imag))
    return out


def _probe_vectors(spec: ManifoldSpec, point, seed: int) -> List[np.ndarray]:
    probes = [spec.euler_at(point)]
    probes += [np.eye(spec.n)[i].astype(complex) for i in range(spec.n)]
    rng = np.random.default_rng(seed)
    for _ in range(8):
        probes.append(rng.standard_normal(spec.n)
                      + 1j * rng.standard_normal(spec.n))
    return probes


def classify_point(spec: ManifoldSpec, point, tol: float = 1e-8,
                   seed: int = 0) -> PointClass:
    """Stratify a point: semisimple, semisimple with coalescing canonical
    coordinates, or caustic.

    U with all-distinct eigenvalues already implies semisimplicity.  On the
    bifurcation locus (U has a repeated eigenvalue) the algebra is probed
    with the Euler field, the coordinate directions, and seeded random
    vectors: a probe with all-distinct eigenvalues certifies semisimplicity
    (coalescent), a non-diagonalizable probe certifies a caustic point.
    """
    alg = point_algebra(spec, point)
    lam = np.linalg.eigvals(alg.U)
    scale = max(1.0, float(np.max(np.abs(lam))))
    gap = _min_gap(lam)
    if gap > tol * scale:
        return PointClass.SEMISIMPLE
    if gap > tol * scale / 10:
        raise Inconclusive(
            f"minimal eigenvalue gap {gap:.3e} lies in the band "
            f"[{tol * scale / 10:.1e}, {tol * scale:.1e}]; move the point or "
            "change tol")

    # Probe thresholds sit well above sqrt(eps_machine): a defective double
    # eigenvalue splits by ~1e-8 under numerical eig and must not read as
    # "distinct".
    probe_tol = max(tol, 1e-6)
    probes = _probe_vectors(spec, point, seed)
    mults = [alg.mult(v) for v in probes]
    for m in mults:
        if _all_distinct(m, probe_tol * max(1.0, float(np.max(np.abs(m))))):
            return PointClass.SEMISIMPLE_COALESCENT
    for m in mults:
        if not _diagonalizable_on_clusters(m, probe_tol):
            return PointClass.CAUSTIC
    # all probes diagonalizable with repeated spectra: try to reconstruct a
    # full idempotent basis from a generic combination
    rng = np.random.default_rng(seed + 1)
    for _ in range(4):
        v = rng.standard_normal(spec.n) + 1j * rng.standard_normal(spec.n)
        m = alg.mult(v)
        if _all_distinct(m, probe_tol * max(1.0, float(np.max(np.abs(m))))):
            return PointClass.SEMISIMPLE_COALESCENT
    return PointClass.CAUSTIC


# ---------------------------------------------------------------------------
# caustic frame
# ---------------------------------------------------------------------------

@dataclass
class CausticFrame:
    """Orthonormal frame (N, f_2, ..., f_n) at a caustic point.

    Columns of ``frame`` are the frame vectors in flat coordinates; V is
    the grading operator in this frame (antisymmetric), and m the local
    dihedral invariant.  Diagnostic residuals record how well the defining
    identities hold.
    """

    point: np.ndarray
    u2: complex                    # double eigenvalue
    simple_eigenvalues: np.ndarray  # u_3, ..., u_n sorted by (Re, Im)
    idempotents: np.ndarray        # rows pi_2, ..., pi_n
    nilpotent: np.ndarray
    normal: np.ndarray
    frame: np.ndarray              # n x n, columns N, f_2, ..., f_n
    V: np.ndarray
    m: float
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def u_diag(self) -> np.ndarray:
        """Diagonal of U in the frame: (u2, u2, u3, ..., un)."""
        return np.concatenate(([self.u2, self.u2], self.simple_eigenvalues))

    @property
    def V12(self) -> complex:
        return complex(self.V[0, 1])


def align_frame_signs(frame: np.ndarray, reference: np.ndarray,
                      min_overlap: float = 0.5) -> np.ndarray:
    """Flip column signs to maximize overlap with a reference frame.

    Raises FrameDiscontinuity when some column is nearly orthogonal to its
    reference, which no sign flip can repair.
    """
    out = frame.copy()
    for j in range(frame.shape[1]):
        a, b = out[:, j], reference[:, j]
        ip = complex(np.vdot(b, a))
        norm = np.linalg.norm(a) * np.linalg.norm(b)
        if abs(ip) < min_overlap * norm:
            raise FrameDiscontinuity(
                f"frame column {j} overlaps its reference by only "
                f"{abs(ip) / norm:.3f}")
        if ip.real < 0:
            out[:, j] = -out[:, j]
    return out


def caustic_frame(spec: ManifoldSpec, point,
                  caustic_tangent: Optional[Sequence] = None,
                  tol: float = 1e-8,
                  align_to: Optional[np.ndarray] = None) -> CausticFrame:
    """Build the caustic frame at a point with exactly one double eigenvalue.

    Simple-eigenvalue eigenvectors are rescaled to idempotents, pi_2 is
    recovered from the unit, the nilpotent is the direction of the double
    eigenspace that squares to zero (automatically isotropic), and N is
    solved from the Gram system eta(N, pi_2) = 0, eta(N, N) = 1 with
    principal square roots.
    """
    alg = point_algebra(spec, point)
    n = spec.n
    lam, vecs = _sorted_eigs(alg.U)
    scale = max(1.0, float(np.max(np.abs(lam))))
    clusters = _cluster(lam, CLUSTER_REL * scale)
    doubles = [g for g in clusters if len(g) == 2]
    if len(doubles) != 1 or len(clusters) != n - 1:
        raise CausticLabError(
            f"expected exactly one double eigenvalue, got cluster sizes "
            f"{[len(g) for g in clusters]}")
    double = doubles[0]
    u2 = complex(np.mean(lam[double]))
    simple_idx = [g[0] for g in clusters if len(g) == 1]
    simple_idx.sort(key=lambda i: (lam[i].real, lam[i].imag))

    unit = np.zeros(n, dtype=complex)
    unit[spec.unit_index] = 1.0

    idem = []
    for i in simple_idx:
        e = vecs[:, i]
        w = alg.mult(e) @ e            # e o e = lambda * e
        k = int(np.argmax(np.abs(e)))
        lam_e = w[k] / e[k]
        if abs(lam_e) < tol:
            raise CausticLabError("simple eigenvector squares to ~0; "
                                  "cannot normalize to an idempotent")
        idem.append(e / lam_e)
    pi2 = unit - np.sum(idem, axis=0) if idem else unit.copy()

    # double eigenspace: two smallest right singular directions of U - u2
    _, sv, Vh = np.linalg.svd(alg.U - u2 * np.eye(n))
    W = Vh[n - 2:].conj().T
    # candidate independent of pi2
    pi2n = pi2 / np.linalg.norm(pi2)
    best = None
    for k in range(W.shape[1]):
        w = W[:, k] - (np.vdot(pi2n, W[:, k])) * pi2n
        if best is None or np.linalg.norm(w) > np.linalg.norm(best):
            best = w
    if best is None or np.linalg.norm(best) < 1e-10:
        raise MultipleNilpotents("double eigenspace collapses onto pi_2")
    w = best / np.linalg.norm(best)
    # w = a pi2 + b eps with eps o eps = 0; then w o w = 2a w - a^2 pi2
    q = alg.mult(w) @ w
    coeffs, *_ = np.linalg.lstsq(np.stack([w, pi2], axis=1), q, rcond=None)
    a = coeffs[0] / 2
    eps = w - a * pi2
    k = int(np.argmax(np.abs(eps)))
    eps = eps / eps[k]
    nil_res = float(np.max(np.abs(alg.mult(eps) @ eps)))
    if nil_res > max(tol, 1e-6) * max(1.0, float(np.max(np.abs(eps))) ** 2):
        raise MultipleNilpotents(
            f"no nilpotent direction in the double eigenspace "
            f"(|eps o eps| = {nil_res:.2e})")

    # normal from the Gram system on span{eps, pi2}
    g_ee = alg.pairing(eps, eps)
    g_ep = alg.pairing(eps, pi2)
    g_pp = alg.pairing(pi2, pi2)
    if abs(g_ep) < tol or abs(g_pp) < tol:
        raise DegenerateInducedMetric(
            f"induced metric degenerates: eta(eps,pi2)={g_ep:.2e}, "
            f"eta(pi2,pi2)={g_pp:.2e}")
    # N = a*eps + b*pi2, eta(N,pi2)=0 => a = -b g_pp/g_ep
    quad = (g_pp / g_ep) ** 2 * g_ee - g_pp
    if abs(quad) < tol:
        raise DegenerateInducedMetric("Gram system for the normal is singular")
    b = 1 / np.sqrt(quad)
    N = -(b * g_pp / g_ep) * eps + b * pi2

    cols = [N]
    for pi in [pi2] + idem:
        norm2 = alg.pairing(pi, pi)
        if abs(norm2) < tol:
            raise DegenerateInducedMetric(
                "an idempotent has vanishing eta-square length")
        cols.append(pi / np.sqrt(norm2))
    frame = np.stack(cols, axis=1)
    if align_to is not None:
        frame = align_frame_signs(frame, align_to)
        N = frame[:, 0]

    V = frame.T @ alg.eta @ alg.mu @ frame
    Uf = np.linalg.solve(frame, alg.U @ frame)

    diag = {}
    diag["orthonormality"] = float(np.max(np.abs(
        frame.T @ alg.eta @ frame - np.eye(n))))
    diag["V_antisymmetry"] = float(np.max(np.abs(V + V.T)))
    diag["V12_imag"] = float(abs(V[0, 1].real))
    diag["U_offdiagonal"] = float(np.max(np.abs(Uf - np.diag(np.diag(Uf)))))
    diag["nilpotent_square"] = nil_res
    diag["nilpotent_isotropy"] = float(abs(g_ee))
    pis = [pi2] + idem
    idm = 0.0
    for i, pa in enumerate(pis):
        for j, pb in enumerate(pis):
            prod = alg.mult(pa) @ pb
            idm = max(idm, float(np.max(np.abs(
                prod - (pa if i == j else 0.0)))))
    diag["idempotency"] = idm
    diag["partition_of_unity"] = float(np.max(np.abs(np.sum(pis, axis=0) - unit)))
    if caustic_tangent is not None:
        T = np.stack([np.asarray(t, dtype=complex) for t in caustic_tangent],
                     axis=1)
        proj, *_ = np.linalg.lstsq(T, np.stack(pis, axis=1), rcond=None)
        diag["idempotents_tangency"] = float(
            np.max(np.abs(T @ proj - np.stack(pis, axis=1))))

    hard = {"orthonormality": 1e-7, "V_antisymmetry": 1e-8,
            "U_offdiagonal": 1e-6, "idempotency": 1e-6}
    for key, lim in hard.items():
        if diag[key] > lim:
            raise CausticLabError(
                f"caustic frame failed invariant {key}: {diag[key]:.2e}")

    vmag = abs(V[0, 1])
    if vmag >= 0.5 - 1e-12:
        raise CausticLabError(f"|V^1_2| = {vmag} >= 1/2; local model invalid")
    m = hertling_m(V, tol=tol)

    return CausticFrame(
        point=np.asarray(point, dtype=complex), u2=u2,
        simple_eigenvalues=np.array([lam[i] for i in simple_idx]),
        idempotents=np.stack(pis, axis=0), nilpotent=eps, normal=N,
        frame=frame, V=V, m=m, diagnostics=diag)


def hertling_m(V: np.ndarray, tol: float = 1e-8) -> float:
    """Local invariant m = 2/(1 - 2|V^1_2|) of the two-dimensional factor.

    |V^1_2| -> 0 corresponds to A1 x A1, i.e., a semisimple coalescence
    rather than a caustic, and is rejected.
    """
    if np.max(np.abs(V + V.T)) > max(1e-8, tol) * max(1.0, float(np.max(np.abs(V)))):
        raise CausticLabError("V is not antisymmetric")
    vmag = abs(complex(V[0, 1]))
    if vmag < tol:
        raise CoalescenceNotCaustic(
            "|V^1_2| ~ 0: the point is a semisimple coalescence (m = 2)")
    return 2.0 / (1.0 - 2.0 * vmag)


def m_from_approach(spec: ManifoldSpec, caustic_point, normal_direction,
                    t_samples: Optional[Sequence[float]] = None) -> float:
    """Independent estimate of m from eigenvalue-gap scaling off the caustic.

    Approaching the caustic transversally, the two coalescing canonical
    coordinates separate like t^{m/2}; the slope of log(gap) against log(t)
    estimates m/2.  Gaps below the eigenvalue noise floor and poor fits
    raise FitFailure.
    """
    if t_samples is None:
        t_samples = np.geomspace(1e-2, 1e-3, 5)
    t_samples = np.asarray(sorted(t_samples, reverse=True), dtype=float)
    p0 = np.asarray(caustic_point, dtype=complex)
    d = np.asarray(normal_direction, dtype=complex)
    gaps = []
    for t in t_samples:
        lam = np.linalg.eigvals(euler_mult(spec, p0 + t * d))
        pairs = sorted(
            (abs(lam[i] - lam[j]), i, j)
            for i in range(len(lam)) for j in range(i + 1, len(lam)))
        gaps.append(pairs[0][0])
    gaps = np.asarray(gaps)
    scale = max(1.0, float(np.max(np.abs(euler_mult(spec, p0)))))
    floor = 1e-11 * scale
    if np.any(gaps < floor):
        raise FitFailure(
            f"eigenvalue gap fell below the noise floor {floor:.1e}; the "
            "direction may be tangent to the caustic or t too small")
    coeff, residuals, *_ = np.polyfit(np.log(t_samples), np.log(gaps), 1,
                                      full=True)[:2]
    resid = float(residuals[0]) if len(residuals) else 0.0
    if resid > 0.1:
        raise FitFailure(f"log-log fit residual {resid:.3f} > 0.1")
    return float(2 * coeff[0])


# ---------------------------------------------------------------------------
# connection identities along the caustic
# ---------------------------------------------------------------------------

@dataclass
class IdentityReport:
    """Max residuals of the pulled-back connection identities."""

    residuals: Dict[str, float]
    v12_values: List[complex]
    tol: float

    @property
    def passed(self) -> bool:
        return all(r < self.tol for r in self.residuals.values())

    def to_dict(self) -> dict:
        return {"residuals": self.residuals, "tol": self.tol,
                "passed": self.passed,
                "v12_values": [[v.real, v.imag] for v in self.v12_values]}


def _frame_at(spec, point, align_to):
    return caustic_frame(spec, point, tol=1e-8, align_to=align_to)


def connection_matrices(spec: ManifoldSpec, frame: CausticFrame,
                        fd_step: float = 1e-4):
    """Connection matrices omega_i (i = 2..n) of the flat connection in the
    caustic frame, by central differences along the idempotent directions.

    Moving along an idempotent stays on the caustic to first order; the
    second-order transversal drift opens the double eigenvalue by
    O(h^{2 m/2}) which stays far below the clustering threshold.
    """
    F0 = frame.frame
    omegas = []
    for pi in frame.idempotents:
        Fp = _frame_at(spec, frame.point + fd_step * pi, F0).frame
        Fm = _frame_at(spec, frame.point - fd_step * pi, F0).frame
        omegas.append(np.linalg.solve(F0, (Fp - Fm) / (2 * fd_step)))
    return omegas


def connection_identities_check(spec: ManifoldSpec,
                                curve: Callable[[float], np.ndarray],
                                s_samples: Sequence[float],
                                fd_step: float = 1e-4,
                                tol: float = 1e-5) -> IdentityReport:
    """Verify the flat-connection identities along a caustic curve.

    Checks, at each sample: symmetry [E_i, w_j] = [E_j, w_i], the grading
    evolution dV/du_i = [V, w_i], the compatibility [U, w_i] = -[E_i, V],
    vanishing curvature of the 2x2-truncated connection, and constancy of
    V^1_2 in every direction.
    """
    n = spec.n
    E_mats = []
    for i in range(2, n + 1):
        E = np.zeros((n, n), dtype=complex)
        if i == 2:
            E[0, 0] = E[1, 1] = 1.0
        else:
            E[i - 1, i - 1] = 1.0
        E_mats.append(E)

    res = {k: 0.0 for k in ("frame_symmetry", "grading_evolution",
                            "euler_compatibility", "block_curvature",
                            "v12_derivative", "v12_constancy")}
    v12s: List[complex] = []
    prev = None
    for s in s_samples:
        p = np.asarray(curve(s), dtype=complex)
        fr = caustic_frame(spec, p, tol=1e-8,
                           align_to=prev.frame if prev else None)
        prev = fr
        v12s.append(fr.V12)
        F0, U0, V0 = fr.frame, np.diag(fr.u_diag), fr.V
        pis = fr.idempotents

        def omega_and_V(point, align):
            f = _frame_at(spec, point, align)
            out_w = []
            for pi in pis:
                Fp = _frame_at(spec, point + fd_step * pi, f.frame).frame
                Fm = _frame_at(spec, point - fd_step * pi, f.frame).frame
                out_w.append(np.linalg.solve(f.frame, (Fp - Fm) / (2 * fd_step)))
            return f, out_w

        _, omegas = omega_and_V(p, F0)
        dV = []
        for pi in pis:
            frp = _frame_at(spec, p + fd_step * pi, F0)
            frm = _frame_at(spec, p - fd_step * pi, F0)
            dV.append((frp.V - frm.V) / (2 * fd_step))

        for a in range(n - 1):
            wa = omegas[a]
            res["grading_evolution"] = max(
                res["grading_evolution"],
                float(np.max(np.abs(dV[a] - (V0 @ wa - wa @ V0)))))
            res["euler_compatibility"] = max(
                res["euler_compatibility"],
                float(np.max(np.abs((U0 @ wa - wa @ U0)
                                    + (E_mats[a] @ V0 - V0 @ E_mats[a])))))
            res["v12_derivative"] = max(res["v12_derivative"],
                                        float(abs(dV[a][0, 1])))
            for b in range(a + 1, n - 1):
                wb = omegas[b]
                lhs = E_mats[a] @ wb - wb @ E_mats[a]
                rhs = E_mats[b] @ wa - wa @ E_mats[b]
                res["frame_symmetry"] = max(
                    res["frame_symmetry"], float(np.max(np.abs(lhs - rhs))))

        # curvature of the truncated 2x2 connection: nested differences
        E2 = np.zeros((n, n)); E2[0, 0] = E2[1, 1] = 1.0
        for a in range(n - 1):
            for b in range(a + 1, n - 1):
                frp, w_p = omega_and_V(p + fd_step * pis[b], F0)
                frm, w_m = omega_and_V(p - fd_step * pis[b], F0)
                dwa_db = (w_p[a] - w_m[a]) / (2 * fd_step)
                frp, w_p = omega_and_V(p + fd_step * pis[a], F0)
                frm, w_m = omega_and_V(p - fd_step * pis[a], F0)
                dwb_da = (w_p[b] - w_m[b]) / (2 * fd_step)
                twa = E2 @ omegas[a] @ E2
                twb = E2 @ omegas[b] @ E2
                curv = (E2 @ dwb_da @ E2 - E2 @ dwa_db @ E2
                        - (twa @ twb - twb @ twa))
                res["block_curvature"] = max(
                    res["block_curvature"], float(np.max(np.abs(curv[:2, :2]))))

    res["v12_constancy"] = float(max(abs(v - v12s[0]) for v in v12s))
    return IdentityReport(residuals=res, v12_values=v12s, tol=tol)


def induced_metric_curvature(spec: ManifoldSpec,
                             curve: Callable[[float], np.ndarray],
                             s: float, h: float = 1e-3) -> float:
    """Gaussian curvature of the metric pulled back to a 3D caustic surface.

    The surface is parametrized by (r, s) -> curve(s) + r*e; Brioschi's
    formula is evaluated with central differences.  For a Frobenius caustic
    of a three-dimensional manifold this must vanish.
    """
    if spec.n != 3:
        raise ValueError("curvature check is specific to 3D manifolds")
    from .manifold import metric
    eta = metric(spec)
    unit = np.zeros(3); unit[spec.unit_index] = 1.0

    def g(r, sv):
        dr = unit
        ds = (curve(sv + h) - curve(sv - h)) / (2 * h)
        E = dr @ eta @ dr
        F = dr @ eta @ ds
        G = ds @ eta @ ds
        return np.array([[E, F], [F, G]], dtype=complex)

    def d(fun, var, r, sv):
        if var == 0:
            return (fun(r + h, sv) - fun(r - h, sv)) / (2 * h)
        return (fun(r, sv + h) - fun(r, sv - h)) / (2 * h)

    def dd(fun, v1, v2, r, sv):
        return d(lambda a, b: d(fun, v2, a, b), v1, r, sv)

    r0 = 0.0
    E = g(r0, s)[0, 0]; F = g(r0, s)[0, 1]; G = g(r0, s)[1, 1]
    E_u = d(lambda a, b: g(a, b)[0, 0], 0, r0, s)
    E_v = d(lambda a, b: g(a, b)[0, 0], 1, r0, s)
    F_u = d(lambda a, b: g(a, b)[0, 1], 0, r0, s)
    F_v = d(lambda a, b: g(a, b)[0, 1], 1, r0, s)
    G_u = d(lambda a, b: g(a, b)[1, 1], 0, r0, s)
    G_v = d(lambda a, b: g(a, b)[1, 1], 1, r0, s)
    E_vv = dd(lambda a, b: g(a, b)[0, 0], 1, 1, r0, s)
    G_uu = dd(lambda a, b: g(a, b)[1, 1], 0, 0, r0, s)
    F_uv = dd(lambda a, b: g(a, b)[0, 1], 0, 1, r0, s)
    M1 = np.array([
        [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
        [F_v - 0.5 * G_u, E, F],
        [0.5 * G_v, F, G]])
    M2 = np.array([
        [0.0, 0.5 * E_v, 0.5 * G_u],
        [0.5 * E_v, E, F],
        [0.5 * G_u, F, G]])
    det_g = E * G - F ** 2
    if abs(det_g) < 1e-12:
        raise DegenerateInducedMetric("induced metric is singular")
    K = (np.linalg.det(M1) - np.linalg.det(M2)) / det_g ** 2
    return float(abs(K))
