"""Isomonodromy verification along parametrized caustic curves.

The monodromy data of the caustic ODE family is constant provided the
gauge conventions at both singularities are parallel along the curve:

* at z = 0 the diagonalizer of the residue is transported as
  T0(s) = frame(s)^{-1} P0 with P0 a fixed diagonalizer of the constant
  grading operator (columns of T0 are then flat sections expressed in the
  moving frame);
* at z = infinity the 2x2 block of H0 must be flat for the connection
  induced on the two-dimensional factor.  That connection is abelian,
  (a ds) * J with a = eta(N, d f_2/ds), so the transport reduces to the
  rotation exp(-theta(s) J) of a fixed block, theta(s) = int a ds.

A fixed H0 block instead of the transported one leaves the Stokes and
connection matrices varying by the conjugation diag(e^{i theta},
e^{-i theta}, 1, ...); the sweep below therefore accumulates theta with a
Simpson rule between samples.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from .caustic import (CausticFrame, PointClass, bifurcation_value,
                      caustic_frame, classify_point)
from .errors import CausticLabError
from .manifold import ManifoldSpec, metric, mu_matrix
from .monodromy import (MonodromyData, compute_monodromy_data, is_admissible,
                        sector_config, spectrum_distance, stokes_rays)
from .poly import MultiPoly

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
_H0C = np.array([[1.0, 1.0], [1j, -1j]], dtype=complex) / np.sqrt(2)

DEFAULT_THRESHOLDS = {
    "B_exp": 1e-10,
    "stokes": 1e-6,
    "connection": 1e-6,
    "monodromy_spectrum": 1e-8,
    "m": 1e-8,
}


@dataclass(frozen=True)
class CausticCurve:
    """Closed-form caustic component: coordinates and tangent frame as
    polynomials in the curve parameter."""

    spec: ManifoldSpec
    name: str
    param: Tuple[MultiPoly, ...]                # n polynomials in one variable
    tangent: Tuple[Tuple[MultiPoly, ...], ...]  # (n-1) x n polynomials
    s_range: Tuple[float, float]

    def point(self, s: float) -> np.ndarray:
        return np.array([p.eval([s]) for p in self.param], dtype=complex)

    def tangent_vectors(self, s: float) -> np.ndarray:
        return np.array([[p.eval([s]) for p in vec] for vec in self.tangent],
                        dtype=complex)


@dataclass(frozen=True)
class SimpleCurve:
    """Curve given by a plain callable."""

    spec: ManifoldSpec
    name: str
    point_fn: Callable[[float], np.ndarray]
    s_range: Tuple[float, float]

    def point(self, s: float) -> np.ndarray:
        return np.asarray(self.point_fn(s), dtype=complex)


@dataclass
class CurveSample:
    s: float
    point: np.ndarray
    frame: CausticFrame
    theta_gauge: complex    # accumulated H0-transport angle


def _gauge_rate(spec: ManifoldSpec, curve, s: float,
                align_frame: np.ndarray, h: float) -> complex:
    """a(s) = eta(N, d f_2/ds) with all frames sign-aligned."""
    eta = metric(spec)
    f0 = caustic_frame(spec, curve.point(s), align_to=align_frame)
    fp = caustic_frame(spec, curve.point(s + h), align_to=f0.frame)
    fm = caustic_frame(spec, curve.point(s - h), align_to=f0.frame)
    df2 = (fp.frame[:, 1] - fm.frame[:, 1]) / (2 * h)
    return complex(f0.frame[:, 0] @ eta @ df2)


def sample_curve(curve, n_samples: int = 5, tol: float = 1e-8,
                 classify: bool = True, fd_step: float = 1e-5
                 ) -> List[CurveSample]:
    """Sample a caustic curve with aligned frames and accumulated gauge.

    Every sample must classify as a caustic point and annihilate the
    bifurcation discriminant; violations report the offending parameter.
    The gauge angle theta(s) accumulates with Simpson's rule from the rate
    at samples and midpoints.
    """
    spec = curve.spec
    a, b = curve.s_range
    svals = np.linspace(a, b, n_samples)
    samples: List[CurveSample] = []
    prev: Optional[CurveSample] = None
    prev_rate: Optional[complex] = None
    for s in svals:
        p = curve.point(s)
        if classify:
            try:
                cls = classify_point(spec, p, tol=tol)
            except CausticLabError as exc:
                raise CausticLabError(
                    f"classification failed at s={s}: {exc}") from exc
            if cls is not PointClass.CAUSTIC:
                raise CausticLabError(
                    f"sample at s={s} classifies as {cls.value}, not Caustic")
            scale = max(1.0, float(np.max(np.abs(p))))
            if abs(bifurcation_value(spec, p)) > 1e-8 * scale ** 6:
                raise CausticLabError(
                    f"bifurcation discriminant does not vanish at s={s}")
        try:
            fr = caustic_frame(spec, p, tol=tol,
                               align_to=prev.frame.frame if prev else None)
        except CausticLabError as exc:
            raise CausticLabError(f"frame failed at s={s}: {exc}") from exc
        rate = _gauge_rate(spec, curve, s, fr.frame, fd_step)
        if prev is None:
            theta = 0.0 + 0.0j
        else:
            mid = (prev.s + s) / 2
            rate_mid = _gauge_rate(spec, curve, mid, fr.frame, fd_step)
            theta = prev.theta_gauge + (s - prev.s) / 6 * (
                prev_rate + 4 * rate_mid + rate)
        sample = CurveSample(s=float(s), point=p, frame=fr, theta_gauge=theta)
        samples.append(sample)
        prev, prev_rate = sample, rate
    return samples


def transported_h0_block(theta: complex) -> np.ndarray:
    """Flat H0 block at gauge angle theta: exp(-theta J) H0_fixed."""
    return expm(-theta * _J2) @ _H0C


def mu_diagonalizer(spec: ManifoldSpec) -> np.ndarray:
    """Fixed diagonalizer P0 of the constant grading operator, columns
    ordered by (Re, Im) of the eigenvalue and scaled to unit first
    significant entry."""
    mu = mu_matrix(spec)
    lam, vecs = np.linalg.eig(mu)
    order = np.lexsort((lam.imag, lam.real))
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        idx = int(np.argmax(np.abs(vecs[:, j]) > 1e-12))
        vecs[:, j] = vecs[:, j] / vecs[idx, j]
    return vecs


@dataclass
class ConstancyReport:
    """Maximum deviations of the monodromy data across curve samples.

    Sweeps whose frozen admissible angle stops being admissible are split
    into segments (the AdmissibilityBreak case); deviations are measured
    within segments."""

    curve_name: str
    s_values: List[float]
    segments: List[List[int]]
    phis: List[float]
    data: List[MonodromyData]
    deviations: Dict[str, float]
    thresholds: Dict[str, float]
    m_values: List[float]

    @property
    def passed(self) -> bool:
        return all(self.deviations[k] < self.thresholds[k]
                   for k in self.thresholds)

    @property
    def admissibility_break(self) -> bool:
        return len(self.segments) > 1

    def to_dict(self) -> dict:
        return {
            "curve": self.curve_name,
            "s_values": [float(s) for s in self.s_values],
            "segments": [list(map(int, seg)) for seg in self.segments],
            "phis": [float(p) for p in self.phis],
            "deviations": {k: float(v) for k, v in self.deviations.items()},
            "thresholds": {k: float(v) for k, v in self.thresholds.items()},
            "m_values": [float(m) for m in self.m_values],
            "admissibility_break": self.admissibility_break,
            "passed": self.passed,
        }


def constancy_report(samples: Sequence[CurveSample], P0: np.ndarray,
                     curve_name: str = "", K: int = 12, rtol: float = 1e-10,
                     thresholds: Optional[Dict[str, float]] = None,
                     threads: int = 1) -> ConstancyReport:
    """Monodromy data per sample and entrywise constancy deviations.

    P0 is the fixed diagonalizer of the grading operator used to transport
    the Levelt convention; the flat H0 block comes from each sample's
    accumulated gauge angle.  The admissible angle is frozen per segment.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    thresholds = dict(DEFAULT_THRESHOLDS if thresholds is None else thresholds)

    segments: List[List[int]] = []
    phis: List[float] = []
    for idx, smp in enumerate(samples):
        rays = stokes_rays(smp.frame.u_diag)
        if segments and is_admissible(phis[-1], rays, margin=1e-6):
            segments[-1].append(idx)
        else:
            segments.append([idx])
            phis.append(sector_config(smp.frame.u_diag).phi)

    def one(job):
        idx, phi = job
        smp = samples[idx]
        block = transported_h0_block(smp.theta_gauge)
        T0 = np.linalg.solve(smp.frame.frame, P0)
        md = compute_monodromy_data(
            smp.frame.u_diag, smp.frame.V, K=K, phi=phi, H0_block=block,
            T0=T0, rtol=rtol, loop_checks=(idx == 0))
        return idx, md

    jobs = [(idx, phi) for seg, phi in zip(segments, phis) for idx in seg]
    data: List[Optional[MonodromyData]] = [None] * len(samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for idx, md in ex.map(one, jobs):
                data[idx] = md
    else:
        for job in jobs:
            idx, md = one(job)
            data[idx] = md

    dev = {k: 0.0 for k in ("B_exp", "stokes", "connection",
                            "monodromy_spectrum", "m")}
    m_values = [float(s.frame.m) for s in samples]
    for seg in segments:
        ref = data[seg[0]]
        ref_spec = np.linalg.eigvals(ref.monodromy_zero)
        for idx in seg[1:]:
            md = data[idx]
            dev["B_exp"] = max(dev["B_exp"],
                               float(np.max(np.abs(md.B_exp - ref.B_exp))))
            for nu in ref.stokes:
                dev["stokes"] = max(dev["stokes"], float(np.max(np.abs(
                    md.stokes[nu] - ref.stokes[nu]))))
            dev["connection"] = max(dev["connection"], float(np.max(np.abs(
                md.connection - ref.connection))))
            dev["monodromy_spectrum"] = max(
                dev["monodromy_spectrum"],
                spectrum_distance(np.linalg.eigvals(md.monodromy_zero),
                                  ref_spec))
        dev["m"] = max(dev["m"], max(abs(m_values[i] - m_values[seg[0]])
                                     for i in seg))

    return ConstancyReport(
        curve_name=curve_name, s_values=[s.s for s in samples],
        segments=segments, phis=phis, data=list(data),
        deviations=dev, thresholds=thresholds, m_values=m_values)


def run_isocheck(curve, n_samples: int = 5, K: int = 12,
                 rtol: float = 1e-10, tol: float = 1e-8,
                 thresholds: Optional[Dict[str, float]] = None,
                 threads: int = 1) -> ConstancyReport:
    """Sample a caustic curve and verify constancy of its monodromy data."""
    samples = sample_curve(curve, n_samples=n_samples, tol=tol)
    P0 = mu_diagonalizer(curve.spec)
    return constancy_report(samples, P0, curve_name=curve.name, K=K,
                            rtol=rtol, thresholds=thresholds, threads=threads)
