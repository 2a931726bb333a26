"""Per-point Frobenius algebra data from a polynomial potential.

The geometric input is a potential F in flat coordinates together with an
Euler field E = sum (d_i t_i + r_i) d/dt_i and a charge d.  Everything else
is derived: the flat metric from third derivatives through the unit
direction, structure constants by raising one index, the operator of
multiplication by E, and the constant grading operator
mu = (2-d)/2 - grad E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from .errors import MuNotAntisymmetric, NonConstantMetric, SingularMetric
from .poly import MultiPoly


@dataclass(frozen=True)
class ManifoldSpec:
    """Polynomial Dubrovin-Frobenius manifold in flat coordinates.

    euler_linear holds the weights d_i as exact rationals (the unit
    direction must have weight 1); euler_affine the constant part of E,
    zero for all shipped fixtures.  The charge is an explicit input, not
    inferred from the potential.
    """

    n: int
    potential: MultiPoly
    euler_linear: tuple  # tuple of Fraction, length n
    euler_affine: tuple  # tuple of complex, length n
    charge: Fraction
    unit_index: int = 0
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.potential.num_vars != self.n:
            raise ValueError("potential arity does not match dimension")
        if len(self.euler_linear) != self.n or len(self.euler_affine) != self.n:
            raise ValueError("Euler field components must have length n")
        if not 0 <= self.unit_index < self.n:
            raise ValueError("unit_index out of range")
        if Fraction(self.euler_linear[self.unit_index]) != 1:
            raise ValueError("unit direction must have Euler weight 1")

    # -- derived constant data, computed once ------------------------------

    @property
    def weights(self) -> np.ndarray:
        if "weights" not in self._cache:
            self._cache["weights"] = np.array(
                [float(w) for w in self.euler_linear])
        return self._cache["weights"]

    @property
    def third_derivatives(self) -> List[List[List[MultiPoly]]]:
        """Symmetric table F_{sij} of third partials."""
        if "thirds" not in self._cache:
            n = self.n
            firsts = [self.potential.partial(i) for i in range(n)]
            # compute one representative per sorted index triple, mirror the rest
            rep: Dict[tuple, MultiPoly] = {}
            for a in range(n):
                second = None
                for b in range(a, n):
                    second = firsts[a].partial(b)
                    for c in range(b, n):
                        rep[(a, b, c)] = second.partial(c)
            thirds = [[[rep[tuple(sorted((s, i, j)))] for j in range(n)]
                       for i in range(n)] for s in range(n)]
            self._cache["thirds"] = thirds
        return self._cache["thirds"]

    def euler_at(self, point) -> np.ndarray:
        """E evaluated at a flat-coordinate point."""
        p = np.asarray(point, dtype=complex)
        return self.weights * p + np.array(self.euler_affine, dtype=complex)


def metric(spec: ManifoldSpec) -> np.ndarray:
    """Flat metric eta_ij = F_{unit,i,j}; must be constant and symmetric."""
    if "eta" in spec._cache:
        return spec._cache["eta"].copy()
    n = spec.n
    thirds = spec.third_derivatives
    eta = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            entry = thirds[spec.unit_index][i][j]
            if not entry.is_constant():
                raise NonConstantMetric(
                    f"eta[{i},{j}] = {entry!r} is not constant; "
                    "check unit_index and the potential")
            eta[i, j] = entry.constant_value()
    if np.max(np.abs(eta - eta.T)) > 1e-12 * max(1.0, np.max(np.abs(eta))):
        raise NonConstantMetric("metric is not symmetric")
    spec._cache["eta"] = eta
    return eta.copy()


def metric_inverse(spec: ManifoldSpec) -> np.ndarray:
    if "eta_inv" not in spec._cache:
        eta = metric(spec)
        if abs(np.linalg.det(eta)) < 1e-12:
            raise SingularMetric("metric determinant ~ 0")
        spec._cache["eta_inv"] = np.linalg.inv(eta)
    return spec._cache["eta_inv"].copy()


def structure_constants(spec: ManifoldSpec, point) -> np.ndarray:
    """c^k_ij at a point: eta^{ks} F_{sij}(p), indexed [k, i, j]."""
    n = spec.n
    eta_inv = metric_inverse(spec)
    thirds = spec.third_derivatives
    flat = np.zeros((n, n, n), dtype=complex)  # F_{sij}
    for s in range(n):
        for i in range(n):
            for j in range(i, n):
                v = thirds[s][i][j].eval(point)
                flat[s, i, j] = v
                flat[s, j, i] = v
    return np.einsum("ks,sij->kij", eta_inv, flat)


def mult_matrix(spec: ManifoldSpec, point, v) -> np.ndarray:
    """Matrix of multiplication by tangent vector v: (v o)^k_j = v^i c^k_ij."""
    c = structure_constants(spec, point)
    return np.einsum("i,kij->kj", np.asarray(v, dtype=complex), c)


def euler_mult(spec: ManifoldSpec, point) -> np.ndarray:
    """Matrix U of multiplication by the Euler field at a point."""
    return mult_matrix(spec, point, spec.euler_at(point))


def mu_matrix(spec: ManifoldSpec) -> np.ndarray:
    """Grading operator mu = (2-d)/2 Id - diag(d_i), exact in rationals."""
    half = Fraction(2 - spec.charge, 2)
    entries = [half - Fraction(w) for w in spec.euler_linear]
    mu = np.diag([float(e) for e in entries]).astype(complex)
    eta = metric(spec)
    skew = eta @ mu + (eta @ mu).T
    if np.max(np.abs(skew)) > 1e-12 * max(1.0, np.max(np.abs(eta))):
        raise MuNotAntisymmetric(
            "eta*mu is not antisymmetric; charge and weights are inconsistent "
            "with the metric")
    return mu


@dataclass(frozen=True)
class PointAlgebra:
    """Cached tangent-algebra tensors at one flat-coordinate point."""

    point: np.ndarray
    eta: np.ndarray
    eta_inv: np.ndarray
    c: np.ndarray      # c^k_ij
    U: np.ndarray      # E o
    mu: np.ndarray

    def mult(self, v) -> np.ndarray:
        return np.einsum("i,kij->kj", np.asarray(v, dtype=complex), self.c)

    def pairing(self, a, b) -> complex:
        return complex(np.asarray(a) @ self.eta @ np.asarray(b))


def point_algebra(spec: ManifoldSpec, point) -> PointAlgebra:
    p = np.asarray(point, dtype=complex)
    c = structure_constants(spec, p)
    U = np.einsum("i,kij->kj", spec.euler_at(p), c)
    return PointAlgebra(point=p, eta=metric(spec), eta_inv=metric_inverse(spec),
                        c=c, U=U, mu=mu_matrix(spec))


# ---------------------------------------------------------------------------
# axiom verification
# ---------------------------------------------------------------------------

@dataclass
class AxiomReport:
    """Max residual per axiom over the sampled points."""

    residuals: Dict[str, float]
    tol: float
    notes: Dict[str, str]

    @property
    def passed(self) -> bool:
        return all(r < self.tol for r in self.residuals.values())

    def to_dict(self) -> dict:
        return {"residuals": self.residuals, "tol": self.tol,
                "passed": self.passed, "notes": self.notes}


def _scaling_lambdas():
    return (0.6, 1.4)


def verify_axioms(spec: ManifoldSpec, sample_points: Sequence, tol: float = 1e-10
                  ) -> AxiomReport:
    """Numerically check the Frobenius axioms at the given points.

    Checks commutativity and associativity of the multiplication, the unit
    axiom, compatibility eta(XoY,Z) = eta(X,YoZ), the conformal identity
    L_E eta = (2-d) eta (an algebraic constraint on the constant metric),
    and quasi-homogeneity of the structure constants under the Euler
    scaling.  Closedness of eta(e,-) holds identically for a constant
    metric and is reported as such.
    """
    n = spec.n
    eta = metric(spec)
    scale = max(1.0, float(np.max(np.abs(eta))))
    thirds = spec.third_derivatives
    res = {k: 0.0 for k in ("commutativity", "associativity", "unit",
                            "compatibility", "conformal", "quasi_homogeneity")}
    notes = {"closedness": "eta(e,-) closed identically: eta is constant"}

    # conformal identity: eta_ij != 0 forces d_i + d_j = 2 - d
    target = float(2 - spec.charge)
    w = spec.weights
    for i in range(n):
        for j in range(n):
            res["conformal"] = max(
                res["conformal"], abs(eta[i, j]) * abs(w[i] + w[j] - target) / scale)

    affine_zero = all(abs(complex(a)) < 1e-14 for a in spec.euler_affine)

    for p in sample_points:
        p = np.asarray(p, dtype=complex)
        c = structure_constants(spec, p)
        cscale = max(1.0, float(np.max(np.abs(c))))
        res["commutativity"] = max(
            res["commutativity"],
            float(np.max(np.abs(c - c.transpose(0, 2, 1)))) / cscale)
        assoc = np.einsum("mij,lmk->lijk", c, c) - np.einsum("mjk,lmi->lijk", c, c)
        res["associativity"] = max(
            res["associativity"], float(np.max(np.abs(assoc))) / cscale**2)
        unit = c[:, spec.unit_index, :] - np.eye(n)
        res["unit"] = max(res["unit"], float(np.max(np.abs(unit))))
        lowered = np.einsum("lk,kij->lij", eta, c)
        direct = np.array([[[thirds[l][i][j].eval(p) for j in range(n)]
                            for i in range(n)] for l in range(n)])
        res["compatibility"] = max(
            res["compatibility"],
            float(np.max(np.abs(lowered - direct))) / max(1.0, float(np.max(np.abs(direct)))))
        if affine_zero:
            for lam in _scaling_lambdas():
                q = np.array([lam ** w[i] * p[i] for i in range(n)])
                cq = structure_constants(spec, q)
                pred = np.empty_like(c)
                for k in range(n):
                    for i in range(n):
                        for j in range(n):
                            pred[k, i, j] = lam ** (1 + w[k] - w[i] - w[j]) * c[k, i, j]
                res["quasi_homogeneity"] = max(
                    res["quasi_homogeneity"],
                    float(np.max(np.abs(cq - pred))) / cscale)
        else:
            # affine Euler part: check the infinitesimal identity E(c) = (...) c
            h = 1e-6
            E = spec.euler_at(p)
            cp = structure_constants(spec, p + h * E)
            cm = structure_constants(spec, p - h * E)
            dc = (cp - cm) / (2 * h)
            pred = np.empty_like(c)
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        pred[k, i, j] = (1 + w[k] - w[i] - w[j]) * c[k, i, j]
            res["quasi_homogeneity"] = max(
                res["quasi_homogeneity"],
                float(np.max(np.abs(dc - pred))) / cscale)

    return AxiomReport(residuals=res, tol=tol, notes=notes)


def random_sample_points(spec: ManifoldSpec, count: int, seed: int = 0,
                         radius: float = 1.0) -> np.ndarray:
    """Seeded complex sample points for axiom verification."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(count, spec.n)) \
        + 1j * rng.uniform(-radius, radius, size=(count, spec.n))
    return pts
