"""Sparse multivariate polynomials with exact differentiation.

Used for closed-form test potentials and for the coefficient functions of
point-symmetry generators, where finite-difference noise would spoil
structural checks.
"""

from __future__ import annotations

import itertools
import numpy as np


class Polynomial:
    """Polynomial in ``nvars`` variables stored as ``{exponent tuple: coefficient}``.

    Instances are treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"exponent {exps} does not have {self.nvars} entries")
            if coef != 0:
                clean[exps] = clean.get(exps, 0) + coef
        self.terms = {k: v for k, v in clean.items() if v != 0}

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, index):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def random(cls, nvars, degree, rng, variables=None, scale=1.0):
        """Dense random polynomial of total ``degree`` in the listed ``variables``."""
        variables = range(nvars) if variables is None else variables
        variables = list(variables)
        terms = {}
        for powers in itertools.product(range(degree + 1), repeat=len(variables)):
            if sum(powers) > degree:
                continue
            exps = [0] * nvars
            for v, k in zip(variables, powers):
                exps[v] = k
            terms[tuple(exps)] = float(rng.uniform(-scale, scale))
        return cls(nvars, terms)

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different variable counts")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {k: v * other for k, v in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for (ka, va), (kb, vb) in itertools.product(self.terms.items(), other.terms.items()):
            k = tuple(a + b for a, b in zip(ka, kb))
            terms[k] = terms.get(k, 0) + va * vb
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if int(n) != n or n < 0:
            raise ValueError("only non-negative integer powers")
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self.terms!r})"

    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def diff(self, var, order=1):
        """Exact partial derivative of the given order in variable ``var``."""
        terms = {}
        for exps, coef in self.terms.items():
            e = exps[var]
            if e < order:
                continue
            factor = 1
            for j in range(order):
                factor *= e - j
            new = list(exps)
            new[var] = e - order
            terms[tuple(new)] = terms.get(tuple(new), 0) + coef * factor
        return Polynomial(self.nvars, terms)

    def derivative(self, multi_index):
        """Mixed partial derivative; ``multi_index[k]`` is the order in variable ``k``."""
        out = self
        for var, order in enumerate(multi_index):
            if order:
                out = out.diff(var, order)
        return out

    def __call__(self, point):
        """Evaluate at ``point`` of shape ``(..., nvars)``."""
        point = np.asarray(point)
        if point.shape[-1] != self.nvars:
            raise ValueError(f"point must have trailing dimension {self.nvars}")
        dtype = np.result_type(point.dtype, *(np.asarray(c).dtype for c in self.terms.values()), float)
        out = np.zeros(point.shape[:-1], dtype=dtype)
        for exps, coef in self.terms.items():
            mono = coef
            for var, e in enumerate(exps):
                if e:
                    mono = mono * point[..., var] ** e
            out = out + mono
        return out
