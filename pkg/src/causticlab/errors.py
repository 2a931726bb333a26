"""Exception hierarchy.

Numerical guards raise rather than regularize: a small divisor or a
degenerate Gram system signals that the input left the regime the
algorithms are valid in, not noise to be smoothed over.
"""


class CausticLabError(Exception):
    """Base class for all library errors."""


# ---- manifold / algebra construction ----

class ArityMismatch(CausticLabError):
    """Polynomial operands disagree on the number of variables."""


class NonConstantMetric(CausticLabError):
    """Third-derivative metric has a non-constant entry (wrong unit index
    or malformed potential)."""


class SingularMetric(CausticLabError):
    """Metric is not invertible."""


class MuNotAntisymmetric(CausticLabError):
    """Grading operator fails eta-antisymmetry (inconsistent charge/weights)."""


# ---- caustic detection / frames ----

class Inconclusive(CausticLabError):
    """Eigenvalue gaps fall inside the [tol/10, tol] band; the point is too
    close to a stratum boundary for the requested tolerance."""


class DegenerateInducedMetric(CausticLabError):
    """The metric restricted to the caustic degenerates; no unit normal."""


class MultipleNilpotents(CausticLabError):
    """No direction in the double eigenspace squares to ~0."""


class CoalescenceNotCaustic(CausticLabError):
    """|V^1_2| ~ 0: the local model is A1 x A1, not a caustic."""


class FitFailure(CausticLabError):
    """Least-squares slope fit did not converge to a power law."""


class FrameDiscontinuity(CausticLabError):
    """Frame branch flipped between neighbouring samples despite alignment."""


# ---- formal series / Levelt ----

class SmallDivisor(CausticLabError):
    """An eigenvalue difference used as a divisor is below threshold
    (signals a third coalescing eigenvalue)."""


class ZeroResidue(CausticLabError):
    """The 2x2 residue block vanishes; nothing to diagonalize."""


class ResonantResidue(CausticLabError):
    """A divisor in the Euler-form recursion vanished."""


class NonDiagonalizableResidue(CausticLabError):
    """Residue at z=0 is not diagonalizable; Jordan chains are out of scope."""


# ---- path integration / monodromy ----

class StepUnderflow(CausticLabError):
    """Adaptive integrator could not meet the tolerance."""


class NonFiniteValue(CausticLabError):
    """Integration produced NaN/Inf."""


class TailTooLarge(CausticLabError):
    """Optimal-truncation tail estimate exceeds the requested tolerance at
    every admissible anchor radius."""


class InconsistentOverlap(CausticLabError):
    """Stokes matrix extracted at different overlap points disagrees beyond
    tolerance."""


class AdmissibilityBreak(CausticLabError):
    """No single admissible angle works across the whole sample range."""


class SpecFileError(CausticLabError):
    """Manifold spec file is malformed."""
