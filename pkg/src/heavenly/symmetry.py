"""Point symmetries: generators, the commutator table, characteristics and Killing conditions.

Second-heavenly generators act on ``(x, y, z, w, theta)``. Their
components are polynomials in those five variables, so brackets are exact
polynomial arithmetic and a table cell either matches identically or not.
Coefficient functions ``a, b, c, d`` are polynomials in ``z, w`` embedded
in the same five variables.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionByZero, FrameMismatch
from .expsum import FrameId
from .families import FamilyId, HCMA_FAMILIES
from .polynomial import Polynomial

NVARS = 5
VX, VY, VZ, VW, VTH = range(NVARS)
_x, _y, _z, _w, _th = (Polynomial.variable(NVARS, k) for k in range(NVARS))
S = _x * _w + _y * _z
TABLE_TOL = 1e-8
KILLING_TOL = 1e-10


class GeneratorKind(enum.Enum):
    X1 = "X1"
    X2 = "X2"
    X3 = "X3"
    X4 = "X4"
    Y = "Y"
    Z = "Z"
    G = "G"
    H = "H"

    @property
    def needs_function(self):
        return self in (GeneratorKind.Y, GeneratorKind.Z, GeneratorKind.G, GeneratorKind.H)


@dataclass(frozen=True)
class GeneratorSpec:
    """A basis generator, with its coefficient function for the families ``Y, Z, G, H``."""

    kind: GeneratorKind
    coeff: Polynomial = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        if self.kind.needs_function:
            if self.coeff is None:
                raise ValueError(f"{self.kind.value} needs a coefficient function")
            if not isinstance(self.coeff, Polynomial):
                object.__setattr__(self, "coeff", Polynomial.constant(NVARS, self.coeff))
            if self.coeff.nvars != NVARS:
                raise ValueError("coefficient functions are polynomials in (x, y, z, w, theta)")

    def __str__(self):
        return self.kind.value if self.coeff is None else f"{self.kind.value}[{self.coeff!r}]"


def zw_polynomial(terms):
    """Polynomial in ``z, w`` from ``{(i, j): coef}`` meaning ``coef z^i w^j``."""
    return Polynomial(NVARS, {(0, 0, i, j, 0): c for (i, j), c in terms.items()})


def random_coefficient(rng, degree=3, scale=1.0):
    """Dense random polynomial of total ``degree`` in ``z, w``."""
    return Polynomial.random(NVARS, degree, rng, variables=(VZ, VW), scale=scale)


def _dz(p, k=1):
    return p.diff(VZ, k)


def _dw(p, k=1):
    return p.diff(VW, k)


def wedge(a, b):
    """``a_z b_w - b_z a_w``."""
    return _dz(a) * _dw(b) - _dz(b) * _dw(a)


def hat_z(c):
    """``z c_z - c``."""
    return _z * _dz(c) - c


def hat_w(c):
    """``w c_w - c``."""
    return _w * _dw(c) - c


def generator_field(spec):
    """The five polynomial components ``(xi^x, xi^y, xi^z, xi^w, xi^theta)``."""
    k, f = spec.kind, spec.coeff
    zero, one = Polynomial(NVARS), Polynomial.constant(NVARS, 1)
    if k is GeneratorKind.X1:
        return (one, zero, zero, zero, zero)
    if k is GeneratorKind.X2:
        return (2 * _z, zero, zero, zero, -(_x * _y))
    if k is GeneratorKind.X3:
        return (zero, _y, zero, _w, _th)
    if k is GeneratorKind.X4:
        return (_x, _y, zero, zero, 3 * _th)
    if k is GeneratorKind.Y:
        return (zero, zero, zero, zero, _y * _dw(f) - _x * _dz(f))
    if k is GeneratorKind.H:
        return (zero, zero, zero, zero, f)
    fz, fw = _dz(f), _dw(f)
    fzz, fzw, fww = _dz(fz), _dz(fw), _dw(fw)
    if k is GeneratorKind.Z:
        return (fw, fz, zero, zero, 0.5 * (_x * _x * fzz + _y * _y * fww - 2 * _x * _y * fzw))
    cubic = (
        _x**3 * _dz(fzz) - 3 * _x * _x * _y * _dz(fzw)
        + 3 * _x * _y * _y * _dw(fzw) - _y**3 * _dw(fww)
    )
    return (_x * fzw - _y * fww, _x * fzz - _y * fzw, fw, -fz, cubic * (1 / 6))


def bracket_field(A, B):
    """``[A, B]^k = A^m d_m B^k - B^m d_m A^k`` for polynomial component tuples."""
    out = []
    for k in range(NVARS):
        total = Polynomial(NVARS)
        for m in range(NVARS):
            total = total + A[m] * B[k].diff(m) - B[m] * A[k].diff(m)
        out.append(total)
    return tuple(out)


def _points5(point):
    p = np.asarray(point, dtype=float)
    if p.shape[-1] == 4:
        p = np.concatenate([p, np.zeros(p.shape[:-1] + (1,))], axis=-1)
    if p.shape[-1] != NVARS:
        raise ValueError("points are (x, y, z, w) or (x, y, z, w, theta)")
    return p


def evaluate_field(components, point):
    """Numeric components of a polynomial vector field, shape ``(..., 5)``."""
    p = _points5(point)
    return np.stack([np.broadcast_to(np.asarray(c(p), dtype=float), p.shape[:-1]) for c in components], axis=-1)


def generator_components(spec, point):
    """Components ``(d_x, d_y, d_z, d_w, d_theta)`` of ``spec`` at ``point``."""
    return evaluate_field(generator_field(spec), point)


def lie_bracket(spec_a, spec_b, point):
    return evaluate_field(bracket_field(generator_field(spec_a), generator_field(spec_b)), point)


def combination_field(terms):
    """Field of ``sum coef * spec`` for ``terms = [(coef, spec), ...]``."""
    out = tuple(Polynomial(NVARS) for _ in range(NVARS))
    for coef, spec in terms:
        out = tuple(o + coef * c for o, c in zip(out, generator_field(spec)))
    return out


# Table entries: row generator (function e, f, g, h) bracketed with column
# generator (function a, b, c, d). Each cell maps the two coefficient
# functions to a list of (coefficient, kind, function).
K = GeneratorKind
_ORDER = (K.X1, K.X2, K.X3, K.X4, K.Y, K.Z, K.G, K.H)


def _cell(*entries):
    return lambda r, c: [(coef, kind, fn(r, c) if fn else None) for coef, kind, fn in entries]


_ZERO = _cell()

COMMUTATORS = {
    (K.X1, K.X1): _ZERO,
    (K.X1, K.X2): _cell((-1, K.Y, lambda r, c: _w)),
    (K.X1, K.X3): _ZERO,
    (K.X1, K.X4): _cell((1, K.X1, None)),
    (K.X1, K.Y): _cell((-1, K.H, lambda r, c: _dz(c))),
    (K.X1, K.Z): _cell((-1, K.Y, lambda r, c: _dz(c))),
    (K.X1, K.G): _cell((1, K.Z, lambda r, c: _dz(c))),
    (K.X1, K.H): _ZERO,
    (K.X2, K.X1): _cell((1, K.Y, lambda r, c: _w)),
    (K.X2, K.X2): _ZERO,
    (K.X2, K.X3): _ZERO,
    (K.X2, K.X4): _cell((1, K.X2, None)),
    (K.X2, K.Y): _cell((-2, K.H, lambda r, c: _z * _dz(c))),
    (K.X2, K.Z): _cell((-1, K.Y, lambda r, c: 2 * hat_z(c) + c)),
    (K.X2, K.G): _cell((2, K.Z, lambda r, c: hat_z(c))),
    (K.X2, K.H): _ZERO,
    (K.X3, K.X1): _ZERO,
    (K.X3, K.X2): _ZERO,
    (K.X3, K.X3): _ZERO,
    (K.X3, K.X4): _ZERO,
    (K.X3, K.Y): _cell((-1, K.H, lambda r, c: wedge(_w * _dw(c), S))),
    (K.X3, K.Z): _cell((1, K.Z, lambda r, c: hat_w(c))),
    (K.X3, K.G): _cell((1, K.G, lambda r, c: hat_w(c))),
    (K.X3, K.H): _cell((1, K.H, lambda r, c: hat_w(c))),
    (K.X4, K.X1): _cell((-1, K.X1, None)),
    (K.X4, K.X2): _cell((-1, K.X2, None)),
    (K.X4, K.X3): _ZERO,
    (K.X4, K.X4): _ZERO,
    (K.X4, K.Y): _cell((2, K.H, lambda r, c: wedge(c, S))),
    (K.X4, K.Z): _cell((-1, K.Z, lambda r, c: c)),
    (K.X4, K.G): _ZERO,
    (K.X4, K.H): _cell((-3, K.H, lambda r, c: c)),
    (K.Y, K.X1): _cell((1, K.H, lambda r, c: _dz(r))),
    (K.Y, K.X2): _cell((2, K.H, lambda r, c: _z * _dz(r))),
    (K.Y, K.X3): _cell((1, K.H, lambda r, c: wedge(_w * _dw(r), S))),
    (K.Y, K.X4): _cell((-2, K.H, lambda r, c: wedge(r, S))),
    (K.Y, K.Y): _ZERO,
    (K.Y, K.Z): _cell((1, K.H, lambda r, c: wedge(r, c))),
    (K.Y, K.G): _cell((1, K.H, lambda r, c: wedge(wedge(r, c), S))),
    (K.Y, K.H): _ZERO,
    (K.Z, K.X1): _cell((1, K.Y, lambda r, c: _dz(r))),
    (K.Z, K.X2): _cell((1, K.Y, lambda r, c: 2 * hat_z(r) + r)),
    (K.Z, K.X3): _cell((-1, K.Z, lambda r, c: hat_w(r))),
    (K.Z, K.X4): _cell((1, K.Z, lambda r, c: r)),
    (K.Z, K.Y): _cell((-1, K.H, lambda r, c: wedge(c, r))),
    (K.Z, K.Z): _cell((-1, K.H, lambda r, c: wedge(wedge(r, c), S))),
    (K.Z, K.G): _cell((1, K.Z, lambda r, c: wedge(c, r))),
    (K.Z, K.H): _ZERO,
    (K.G, K.X1): _cell((-1, K.Z, lambda r, c: _dz(r))),
    (K.G, K.X2): _cell((-2, K.Z, lambda r, c: hat_z(r))),
    (K.G, K.X3): _cell((-1, K.G, lambda r, c: hat_w(r))),
    (K.G, K.X4): _ZERO,
    (K.G, K.Y): _cell((-1, K.H, lambda r, c: wedge(wedge(c, r), S))),
    (K.G, K.Z): _cell((-1, K.Z, lambda r, c: wedge(r, c))),
    (K.G, K.G): _cell((1, K.G, lambda r, c: wedge(c, r))),
    (K.G, K.H): _cell((1, K.H, lambda r, c: wedge(c, r))),
    (K.H, K.X1): _ZERO,
    (K.H, K.X2): _ZERO,
    (K.H, K.X3): _cell((-1, K.H, lambda r, c: hat_w(r))),
    (K.H, K.X4): _cell((3, K.H, lambda r, c: r)),
    (K.H, K.Y): _ZERO,
    (K.H, K.Z): _ZERO,
    (K.H, K.G): _cell((-1, K.H, lambda r, c: wedge(r, c))),
    (K.H, K.H): _ZERO,
}

# Corrected cells: the X3/Y entries hold with the hatted function.
CORRECTED = {
    (K.X3, K.Y): _cell((-1, K.H, lambda r, c: wedge(hat_w(c), S))),
    (K.Y, K.X3): _cell((1, K.H, lambda r, c: wedge(hat_w(r), S))),
}


def table_entry(row, col, corrected=False):
    """Expected bracket ``[row, col]`` as ``[(coef, GeneratorSpec), ...]``."""
    key = (row.kind, col.kind)
    cell = CORRECTED.get(key) if corrected and key in CORRECTED else COMMUTATORS[key]
    return [(coef, GeneratorSpec(kind, fn)) for coef, kind, fn in cell(row.coeff, col.coeff)]


@dataclass
class TableCheck:
    row: GeneratorKind
    col: GeneratorKind
    max_deviation: float
    scale: float
    passed: bool

    @property
    def cell(self):
        return f"[{self.row.value}, {self.col.value}]"

    def to_dict(self):
        return {
            "cell": self.cell,
            "max_deviation": self.max_deviation,
            "scale": self.scale,
            "passed": self.passed,
        }


def table_check(spec_a, spec_b, expected, points, tol=TABLE_TOL):
    """Compare ``[A, B]`` with ``expected`` (a list of ``(coef, spec)``) at ``points``."""
    got = lie_bracket(spec_a, spec_b, points)
    want = evaluate_field(combination_field(expected), points)
    dev = float(np.max(np.abs(got - want))) if got.size else 0.0
    scale = float(max(np.max(np.abs(got)), np.max(np.abs(want)))) if got.size else 0.0
    return TableCheck(spec_a.kind, spec_b.kind, dev, scale, dev < tol * (1 + scale))


def random_spec(kind, rng, degree=3):
    kind = GeneratorKind(kind)
    return GeneratorSpec(kind, random_coefficient(rng, degree) if kind.needs_function else None)


def verify_table(rng, points=20, degree=3, corrected=False, box=1.0, tol=TABLE_TOL):
    """Check every ordered cell of the commutator table with random cubic coefficient functions."""
    results = []
    for row in _ORDER:
        for col in _ORDER:
            a, b = random_spec(row, rng, degree), random_spec(col, rng, degree)
            pts = rng.uniform(-box, box, size=(points, NVARS))
            results.append(table_check(a, b, table_entry(a, b, corrected), pts, tol))
    return results


def jacobi_residual(a, b, c, points):
    """Cyclic sum ``[a,[b,c]] + [b,[c,a]] + [c,[a,b]]`` at ``points``."""
    A, B, C = generator_field(a), generator_field(b), generator_field(c)
    total = tuple(
        p + q + r
        for p, q, r in zip(
            bracket_field(A, bracket_field(B, C)),
            bracket_field(B, bracket_field(C, A)),
            bracket_field(C, bracket_field(A, B)),
        )
    )
    return evaluate_field(total, points)


# HCMA point symmetries in (z1, z1bar, z2, z2bar) with u as fifth component.


@dataclass(frozen=True)
class HcmaGenerator:
    """``Omega`` and ``H`` are polynomials in ``(z1, z1bar, z2, z2bar)``; ``C1, C2`` real constants."""

    omega: Polynomial = field(default_factory=lambda: Polynomial(4))
    c1: float = 0.0
    c2: float = 0.0
    h: Polynomial = field(default_factory=lambda: Polynomial(4))

    @classmethod
    def translational(cls, h=None):
        """Combined translations in ``z1, z1bar`` and ``u``: ``Omega = -i z2 + i z2bar``."""
        omega = Polynomial(4, {(0, 0, 1, 0): -1j, (0, 0, 0, 1): 1j})
        return cls(omega=omega, h=Polynomial(4) if h is None else h)

    @classmethod
    def dilatational(cls):
        return cls(c1=1.0)


def hcma_components(gen, point, u=0.0):
    """Components along ``(d_1, d_1bar, d_2, d_2bar, d_u)`` at ``point``."""
    p = np.asarray(point, dtype=complex)
    om = [gen.omega.diff(k)(p) for k in range(4)]
    z1, z1b, z2, z2b = (p[..., k] for k in range(4))
    return np.stack(
        np.broadcast_arrays(
            -1j * om[2] + gen.c1 * z1,
            1j * om[3] + gen.c1 * z1b,
            1j * om[0] + 1j * gen.c2 * z2,
            -1j * om[1] - 1j * gen.c2 * z2b,
            gen.c1 * u + gen.h(p),
        ),
        axis=-1,
    )


def characteristic_hcma(gen, u_jet):
    """Symmetry characteristic ``eta = xi^u - xi^k u_k`` on a Kahler-frame jet."""
    if u_jet.frame.frame_id is not FrameId.KAHLER_ORIGINAL:
        raise FrameMismatch(f"characteristic needs a Kahler-frame jet, got {u_jet.frame}")
    u_jet.require(1)
    xi = hcma_components(gen, u_jet.base_point, u_jet.value)
    return xi[..., 4] - sum(xi[..., k] * u_jet.d(k) for k in range(4))


# Killing non-existence conditions


class Condition(enum.Enum):
    COND1 = "cond1"
    COND2 = "cond2"
    COND3 = "cond3"


@dataclass(frozen=True)
class KillingConditionInput:
    mu: tuple = ()
    beta: tuple = ()
    gamma: tuple = ()


@dataclass(frozen=True)
class KillingDeterminant:
    condition: Condition
    matrix: np.ndarray
    value: complex
    nondegenerate: bool

    def to_dict(self):
        return {
            "condition": self.condition.value,
            "determinant": [self.value.real, self.value.imag],
            "abs": abs(self.value),
            "nondegenerate": self.nondegenerate,
        }


def _nonzero(v, what, scale=1.0):
    if abs(v) <= 1e-14 * max(scale, 1e-300):
        raise DivisionByZero(f"{what} vanishes")


def condition_matrix(inp, which):
    which = Condition(which)
    if which is Condition.COND1:
        mu = np.asarray(inp.mu, dtype=float)[:4]
        rows = [[1, np.exp(-2j * m), np.exp(2j * m), np.exp(-4j * m)] for m in mu]
    else:
        rows = []
        for b, g in list(zip(inp.beta, inp.gamma))[:4]:
            b, g = complex(b), complex(g)
            _nonzero(b, "beta")
            if which is Condition.COND2:
                _nonzero(g - b, "gamma - beta", max(abs(b), abs(g)))
                first = b / (g - b)
            else:
                _nonzero(g, "gamma")
                first = b / g
            rows.append([first, 1, g / b, -(g**2) / b**2])
    m = np.array(rows, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"{which.value} needs four terms, got {len(rows)}")
    return m


def killing_determinant(inp, which, tol=KILLING_TOL):
    """Determinant of a Killing invertibility condition, with a scale-free nondegeneracy flag."""
    m = condition_matrix(inp, which)
    det = complex(np.linalg.det(m))
    scale = float(np.prod(np.linalg.norm(m, axis=1)))
    return KillingDeterminant(Condition(which), m, det, bool(abs(det) > tol * scale))


@dataclass
class ApplicabilityReport:
    family: FamilyId
    n_terms: int
    enough_terms: bool
    exponent_product: complex
    product_nonzero: bool
    determinant: KillingDeterminant = None
    direct_determinant: complex = 0j
    reasons: list = field(default_factory=list)

    @property
    def verdict(self):
        """True when the metric is guaranteed to admit no Killing vectors."""
        return not self.reasons

    def to_dict(self):
        return {
            "family": self.family.value,
            "n_terms": self.n_terms,
            "enough_terms": self.enough_terms,
            "exponent_product": [self.exponent_product.real, self.exponent_product.imag],
            "product_nonzero": self.product_nonzero,
            "determinant": None if self.determinant is None else self.determinant.to_dict(),
            "direct_determinant": [self.direct_determinant.real, self.direct_determinant.imag],
            "no_killing_vectors": self.verdict,
            "reasons": list(self.reasons),
        }


def killing_input(family, potential):
    family = FamilyId(family)
    e = potential.exponents[:4]
    if family in HCMA_FAMILIES:
        return KillingConditionInput(mu=tuple(np.angle(e[:, 0])))
    return KillingConditionInput(beta=tuple(e[:, 1]), gamma=tuple(e[:, 2]))


def theorem_applicability(family, potential, tol=KILLING_TOL):
    """Whether the no-Killing-vector theorems apply to an exponential-sum solution."""
    family = FamilyId(family)
    if potential.frame != family.frame:
        raise FrameMismatch(f"{family.value} expects {family.frame}, got {potential.frame}")
    exps = potential.exponents
    n = len(potential)
    reasons = []
    col = 0 if family in HCMA_FAMILIES else 1
    product = complex(np.prod(exps[:4, col])) if n else 0j
    scale = float(np.prod(np.abs(exps[:4]).max(axis=1))) if n else 0.0
    product_ok = n >= 4 and abs(product) > tol * max(scale, 1e-300)
    report = ApplicabilityReport(family, n, n >= 4, product, product_ok)
    if n < 4:
        reasons.append(f"n = {n} < 4: Killing vectors may exist")
    else:
        if not product_ok:
            name = "alpha" if col == 0 else "beta"
            reasons.append(f"product of the first four {name}_j vanishes")
        which = {
            FamilyId.HCMA_DILAT: Condition.COND1,
            FamilyId.HCMA_TRANS: Condition.COND1,
            FamilyId.HEAVEN_EQUAL: Condition.COND2,
            FamilyId.HEAVEN_ZERO: Condition.COND3,
        }[family]
        try:
            det = killing_determinant(killing_input(family, potential), which, tol)
        except DivisionByZero as exc:
            reasons.append(f"{which.value} undefined: {exc}")
        else:
            report.determinant = det
            if not det.nondegenerate:
                reasons.append(f"{which.value} determinant vanishes")
        report.direct_determinant = complex(np.linalg.det(exps[:4]))
    report.reasons = reasons
    return report
