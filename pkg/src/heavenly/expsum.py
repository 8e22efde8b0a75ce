"""Exponential-sum potentials, derivative jets and a finite-difference oracle.

Every solution family handled by this package is a finite sum

    v(x) = sum_j C_j exp(e_j . x)

over four coordinate slots. Such sums are closed under differentiation, so
all partial derivatives are available exactly. Other closed-form potentials
(polynomials, ``f(v)`` compositions) plug into the same machinery through
the :class:`JetProvider` protocol.

Slots are indexed 0..3 throughout.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol

import numpy as np

from .errors import ExpOverflow, InsufficientJetOrder
from .polynomial import Polynomial

OVERFLOW_BOUND = 700.0
MAX_JET_ORDER = 4


class FrameId(enum.Enum):
    HCMA_LEGENDRE = "HcmaLegendre"
    HEAVEN_LEGENDRE = "HeavenLegendre"
    KAHLER_ORIGINAL = "KahlerOriginal"
    HEAVEN_ORIGINAL = "HeavenOriginal"


@dataclass(frozen=True)
class CoordinateFrame:
    frame_id: FrameId
    slot_names: tuple

    def __post_init__(self):
        if len(self.slot_names) != 4:
            raise ValueError("a coordinate frame has exactly 4 slots")

    @property
    def conjugate_pairs(self):
        """Slot pairs ``(i, j)`` with slot ``j`` the complex conjugate of slot ``i``."""
        if self.frame_id in (FrameId.HCMA_LEGENDRE, FrameId.KAHLER_ORIGINAL):
            return ((0, 1), (2, 3))
        return ()

    def __str__(self):
        return self.frame_id.value


HCMA_LEGENDRE = CoordinateFrame(FrameId.HCMA_LEGENDRE, ("p", "pbar", "z2", "z2bar"))
HEAVEN_LEGENDRE = CoordinateFrame(FrameId.HEAVEN_LEGENDRE, ("t", "r", "x", "z"))
KAHLER_ORIGINAL = CoordinateFrame(FrameId.KAHLER_ORIGINAL, ("z1", "z1bar", "z2", "z2bar"))
HEAVEN_ORIGINAL = CoordinateFrame(FrameId.HEAVEN_ORIGINAL, ("x", "y", "z", "w"))

FRAMES = {f.frame_id: f for f in (HCMA_LEGENDRE, HEAVEN_LEGENDRE, KAHLER_ORIGINAL, HEAVEN_ORIGINAL)}


def conjugate_point(p, z2):
    """Point ``(p, conj p, z2, conj z2)`` on the conjugate slice; accepts arrays."""
    p = np.asarray(p, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    return np.stack(np.broadcast_arrays(p, np.conj(p), z2, np.conj(z2)), axis=-1)


def multi_indices(max_order):
    """All 4-slot multi-indices of total degree <= ``max_order``, graded lexicographic."""
    out = []
    for deg in range(max_order + 1):
        level = [m for m in itertools.product(range(deg + 1), repeat=4) if sum(m) == deg]
        out.extend(sorted(level, reverse=True))
    return out


def slots_to_index(slots):
    mi = [0, 0, 0, 0]
    for s in slots:
        mi[s] += 1
    return tuple(mi)


@dataclass(frozen=True)
class Jet:
    """Partial derivatives of a potential at a point (or a batch of points).

    ``entries`` maps a multi-index ``(m0, m1, m2, m3)`` to the derivative
    ``d^m0_0 d^m1_1 d^m2_2 d^m3_3`` of the potential. Entries are arrays
    with the batch shape of ``base_point[..., 0]``.

    ``mass`` is the scale used to normalize residuals built from this jet:
    the term mass for exponential sums, the largest entry magnitude otherwise.
    """

    frame: CoordinateFrame
    base_point: np.ndarray
    max_order: int
    entries: Mapping[tuple, np.ndarray]
    mass: np.ndarray = field(default=None)

    def __getitem__(self, multi_index):
        mi = tuple(int(m) for m in multi_index)
        if sum(mi) > self.max_order:
            raise InsufficientJetOrder(
                f"derivative {mi} needs order {sum(mi)}, jet has order {self.max_order}"
            )
        return self.entries[mi]

    def d(self, *slots):
        """Derivative along the listed slots, e.g. ``jet.d(0, 1)`` for a mixed second partial."""
        return self[slots_to_index(slots)]

    @property
    def value(self):
        return self.entries[(0, 0, 0, 0)]

    def require(self, order):
        if self.max_order < order:
            raise InsufficientJetOrder(f"need jet order {order}, got {self.max_order}")

    def shift(self, slot):
        """Jet of the ``slot`` derivative of the underlying potential, one order lower."""
        self.require(1)
        entries = {}
        for mi in multi_indices(self.max_order - 1):
            up = list(mi)
            up[slot] += 1
            entries[mi] = self.entries[tuple(up)]
        return Jet(self.frame, self.base_point, self.max_order - 1, entries, self.mass)


class JetProvider(Protocol):
    """Anything that can produce a :class:`Jet` at a point."""

    frame: CoordinateFrame

    def jet(self, point, max_order: int) -> Jet: ...


def _check_order(max_order, limit=MAX_JET_ORDER):
    if not 0 <= max_order <= limit:
        raise ValueError(f"jet order must lie in [0, {limit}], got {max_order}")


@dataclass(frozen=True)
class ExpTerm:
    amplitude: complex
    exponents: tuple

    def __post_init__(self):
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        exps = tuple(complex(e) for e in self.exponents)
        if len(exps) != 4:
            raise ValueError("an exponential term carries exactly 4 exponents")
        object.__setattr__(self, "exponents", exps)


@dataclass(frozen=True)
class ExpSumPotential:
    """Finite sum ``sum_j C_j exp(e_j . x)`` in a coordinate frame."""

    frame: CoordinateFrame
    terms: tuple = ()
    overflow_bound: float = OVERFLOW_BOUND

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def from_arrays(cls, frame, amplitudes, exponents, **kwargs):
        exponents = np.asarray(exponents, dtype=complex).reshape(-1, 4)
        terms = [ExpTerm(c, tuple(e)) for c, e in zip(np.asarray(amplitudes).ravel(), exponents)]
        return cls(frame, tuple(terms), **kwargs)

    @property
    def amplitudes(self):
        return np.array([t.amplitude for t in self.terms], dtype=complex)

    @property
    def exponents(self):
        return np.array([t.exponents for t in self.terms], dtype=complex).reshape(-1, 4)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        if other.frame != self.frame:
            raise ValueError("cannot add potentials from different frames")
        return ExpSumPotential(self.frame, self.terms + other.terms, self.overflow_bound)

    def _exp_phases(self, point):
        point = np.asarray(point, dtype=complex)
        phases = point @ self.exponents.T  # (..., n)
        if phases.size and np.max(phases.real) > self.overflow_bound:
            raise ExpOverflow(
                f"exponent real part {np.max(phases.real):.1f} exceeds bound {self.overflow_bound}"
            )
        return np.exp(phases)

    def term_mass(self, point):
        """``sum_j |C_j| exp(Re Phi_j)`` at ``point``."""
        weights = self._exp_phases(point)
        return np.abs(weights) @ np.abs(self.amplitudes)

    def evaluate(self, point):
        return self._exp_phases(point) @ self.amplitudes

    def jet(self, point, max_order):
        _check_order(max_order)
        point = np.asarray(point, dtype=complex)
        weights = self._exp_phases(point)
        amps = self.amplitudes
        exps = self.exponents
        entries = {}
        for mi in multi_indices(max_order):
            factor = amps * np.prod(exps ** np.array(mi), axis=1)
            entries[mi] = weights @ factor
        mass = np.abs(weights) @ np.abs(amps)
        return Jet(self.frame, point, max_order, entries, mass)


def zero_potential(frame):
    return ExpSumPotential(frame, ())


def evaluate(potential, point):
    """Value of an exponential sum at ``point`` (raises :class:`ExpOverflow` past the bound)."""
    return potential.evaluate(point)


def jet(potential, point, max_order):
    return potential.jet(point, max_order)


def differentiate(potential, slot):
    """Exact derivative: every amplitude is multiplied by its ``slot`` exponent."""
    if slot not in range(4):
        raise ValueError(f"slot must be 0..3, got {slot}")
    terms = tuple(ExpTerm(t.amplitude * t.exponents[slot], t.exponents) for t in potential.terms)
    return ExpSumPotential(potential.frame, terms, potential.overflow_bound)


@dataclass(frozen=True)
class ScalarFunction:
    """A C^2 scalar function with its first two derivatives."""

    name: str
    f: Callable
    df: Callable
    d2f: Callable


IDENTITY = ScalarFunction("identity", lambda s: s, lambda s: np.ones_like(s), lambda s: np.zeros_like(s))
SQUARE = ScalarFunction("square", lambda s: s * s, lambda s: 2 * s, lambda s: 2 * np.ones_like(s))
CUBE = ScalarFunction("cubic", lambda s: s**3, lambda s: 3 * s**2, lambda s: 6 * s)
EXP = ScalarFunction("exp", np.exp, np.exp, np.exp)

SCALAR_FUNCTIONS = {f.name: f for f in (IDENTITY, SQUARE, CUBE, EXP)}


def _max_entry_mass(entries):
    return np.max(np.stack([np.abs(v) for v in entries.values()]), axis=0)


@dataclass(frozen=True)
class ComposedPotential:
    """``f(v)`` for a base provider ``v``; jets up to order 2 by the chain rule."""

    base: JetProvider
    func: ScalarFunction

    @property
    def frame(self):
        return self.base.frame

    def jet(self, point, max_order):
        _check_order(max_order, limit=2)
        vj = self.base.jet(point, max_order)
        v = vj.value
        with np.errstate(over="ignore", invalid="ignore"):
            f0, f1, f2 = self.func.f(v), self.func.df(v), self.func.d2f(v)
        if not (np.all(np.isfinite(f0)) and np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise ExpOverflow(f"{self.func.name}(v) is not finite at the sample points")
        entries = {}
        for mi in multi_indices(max_order):
            deg = sum(mi)
            if deg == 0:
                entries[mi] = f0
            elif deg == 1:
                entries[mi] = f1 * vj[mi]
            else:
                k, l = [s for s in range(4) for _ in range(mi[s])]
                entries[mi] = f2 * vj.d(k) * vj.d(l) + f1 * vj[mi]
        return Jet(vj.frame, vj.base_point, max_order, entries, _max_entry_mass(entries))


def compose_scalar(potential, f):
    """Jet provider for ``f(potential)``; jets are limited to order 2."""
    return ComposedPotential(potential, f)


@dataclass(frozen=True)
class PolynomialPotential:
    """Closed-form polynomial potential over the four slots of ``frame``."""

    frame: CoordinateFrame
    poly: Polynomial

    def __post_init__(self):
        if self.poly.nvars != 4:
            raise ValueError("polynomial potentials need 4 variables")

    def evaluate(self, point):
        return self.poly(np.asarray(point, dtype=complex))

    def jet(self, point, max_order):
        _check_order(max_order)
        point = np.asarray(point, dtype=complex)
        entries = {}
        for mi in multi_indices(max_order):
            val = self.poly.derivative(mi)(point)
            entries[mi] = np.broadcast_to(val, point.shape[:-1]).astype(complex)
        return Jet(self.frame, point, max_order, entries, _max_entry_mass(entries))


# central-difference stencils (offsets in units of h, weights) for d^m/dx^m
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _central_difference(provider, point, multi_index, h):
    point = np.asarray(point, dtype=complex)
    per_slot = [_STENCILS[m] for m in multi_index]
    offsets, weights = [], []
    for combo in itertools.product(*[list(zip(*s)) for s in per_slot]):
        offsets.append([o for o, _ in combo])
        weights.append(np.prod([w for _, w in combo]))
    offsets = np.array(offsets, dtype=float) * h  # (S, 4)
    shaped = offsets.reshape((len(offsets),) + (1,) * (point.ndim - 1) + (4,))
    values = provider.jet(point + shaped, 0).value  # (S, ...)
    w = np.array(weights).reshape((-1,) + (1,) * (values.ndim - 1))
    return np.sum(w * values, axis=0) / h ** sum(multi_index)


def fd_oracle(provider, point, multi_index, step):
    """Central-difference derivative estimate with one Richardson extrapolation level.

    Only the zeroth-order jet of ``provider`` is consulted, so the estimate is
    independent of any analytic derivative code.
    """
    multi_index = tuple(int(m) for m in multi_index)
    if sum(multi_index) > MAX_JET_ORDER:
        raise ValueError("finite-difference oracle supports total order <= 4")
    if step <= 0:
        raise ValueError("step must be positive")
    if sum(multi_index) == 0:
        return provider.jet(point, 0).value
    coarse = _central_difference(provider, point, multi_index, step)
    fine = _central_difference(provider, point, multi_index, step / 2)
    return (4.0 * fine - coarse) / 3.0
