"""Sparse multivariate polynomials over the complex numbers.

A polynomial is a map from exponent tuples (one non-negative integer per
variable) to complex coefficients.  Terms whose coefficient magnitude drops
below 1e-300 are removed on normalization; anything larger is kept so that
genuine cancellation is the only way to lose a term.  Term iteration is in
lexicographic exponent order, which makes evaluation deterministic.

Values are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple

from .errors import ArityMismatch

Exponent = Tuple[int, ...]

# Magnitude below which a coefficient is treated as an exact zero.
_ZERO_EPS = 1e-300


class MultiPoly:
    """Sparse polynomial in ``num_vars`` complex variables."""

    __slots__ = ("num_vars", "_terms")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, complex] | None = None):
        if num_vars < 1:
            raise ValueError("num_vars must be positive")
        self.num_vars = int(num_vars)
        clean: Dict[Exponent, complex] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.num_vars:
                raise ArityMismatch(
                    f"exponent {exp} has length {len(exp)}, expected {self.num_vars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = complex(coeff)
            if abs(c) >= _ZERO_EPS:
                clean[exp] = clean.get(exp, 0.0) + c
        self._terms = {e: c for e, c in sorted(clean.items()) if abs(c) >= _ZERO_EPS}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int) -> "MultiPoly":
        return cls(num_vars, {})

    @classmethod
    def constant(cls, num_vars: int, value: complex) -> "MultiPoly":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "MultiPoly":
        if not 0 <= index < num_vars:
            raise IndexError(f"variable index {index} out of range for {num_vars} vars")
        exp = [0] * num_vars
        exp[index] = 1
        return cls(num_vars, {tuple(exp): 1.0})

    # -- accessors ---------------------------------------------------------

    @property
    def terms(self) -> Dict[Exponent, complex]:
        """Term dictionary in lexicographic exponent order (a copy)."""
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[Exponent, complex]]:
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self._terms)

    def constant_value(self) -> complex:
        return self._terms.get((0,) * self.num_vars, 0.0)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    # -- arithmetic --------------------------------------------------------

    def _check_arity(self, other: "MultiPoly") -> None:
        if self.num_vars != other.num_vars:
            raise ArityMismatch(
                f"operands have {self.num_vars} and {other.num_vars} variables")

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check_arity(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return MultiPoly(self.num_vars, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.num_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, float, complex)):
            return MultiPoly(self.num_vars,
                             {e: c * other for e, c in self._terms.items()})
        self._check_arity(other)
        out: Dict[Exponent, complex] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                out[exp] = out.get(exp, 0.0) + c1 * c2
        return MultiPoly(self.num_vars, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, MultiPoly)
                and self.num_vars == other.num_vars
                and self._terms == other._terms)

    def __hash__(self):
        return hash((self.num_vars, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"MultiPoly({self.num_vars}, 0)"
        parts = []
        for exp, c in self._terms.items():
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(exp) if e)
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # -- calculus ----------------------------------------------------------

    def partial(self, index: int) -> "MultiPoly":
        """Formal partial derivative with respect to variable ``index``."""
        if not 0 <= index < self.num_vars:
            raise IndexError(f"variable index {index} out of range")
        out: Dict[Exponent, complex] = {}
        for exp, c in self._terms.items():
            if exp[index] == 0:
                continue
            new = list(exp)
            new[index] -= 1
            out[tuple(new)] = out.get(tuple(new), 0.0) + c * exp[index]
        return MultiPoly(self.num_vars, out)

    def eval(self, point) -> complex:
        """Evaluate at a complex point (deterministic monomial order)."""
        if len(point) != self.num_vars:
            raise ArityMismatch(
                f"point has length {len(point)}, expected {self.num_vars}")
        total = 0.0 + 0.0j
        for exp, c in self._terms.items():
            term = c
            for i, e in enumerate(exp):
                if e:
                    term *= complex(point[i]) ** e
            total += term
        return total
