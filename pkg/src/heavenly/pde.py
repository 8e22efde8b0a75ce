"""Pointwise residuals of the heavenly equations, their Legendre transforms and constraints.

Every residual is the left-hand side minus the right-hand side of its
equation, written in the sign convention of the original display. Residuals
are evaluated from :class:`~heavenly.expsum.Jet` objects and returned as an
array whose leading axis enumerates the component equations (length 1 for
a single equation); trailing axes follow the jet's batch shape.

Slot conventions (see :mod:`heavenly.expsum`):

* HCMA Legendre frame: ``P, PB, Z2, Z2B`` = ``p, pbar, z2, z2bar``
* second-heavenly Legendre frame: ``T, R, X, Z`` = ``t, r, x, z``
* Kahler frame: ``Z1, Z1B, Z2, Z2B``
* second-heavenly original frame: ``X, Y, Z, W`` = ``x, y, z, w``
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FieldEquationViolated, FrameMismatch
from .expsum import FrameId, compose_scalar
from .families import FamilyId

DEFAULT_TOL = 1e-10

# HCMA Legendre / Kahler slots
P, PB, Z2, Z2B = 0, 1, 2, 3
Z1, Z1B = 0, 1
# second-heavenly Legendre slots
LT, LR, LX, LZ = 0, 1, 2, 3
# second-heavenly original slots
X, Y, Z, W = 0, 1, 2, 3


class EquationId(enum.Enum):
    ECMA = "Ecma"
    HCMA = "Hcma"
    LEG_HCMA = "LegHcma"
    V_EQN_GENERIC = "VEqnGeneric"
    V_TRANS = "VTrans"
    CONS_TRANS = "ConsTrans"
    V_DILAT = "VDilat"
    LIN_DILAT = "LinDilat"
    HEAV2 = "Heav2"
    DEF_SYM2 = "DefSym2"
    LEG_HEAV2 = "LegHeav2"
    TR_TR1 = "TrTr1"
    TR_TR2 = "TrTr2"
    LIN1 = "Lin1"
    LIN2 = "Lin2"
    LIN3 = "Lin3"
    INV1 = "Inv1"
    INV2 = "Inv2"
    LIN4 = "Lin4"
    LIN5 = "Lin5"
    LIN6 = "Lin6"


def _ecma(u, eps=1.0, **_):
    return [u.d(Z1, Z1B) * u.d(Z2, Z2B) - u.d(Z1, Z2B) * u.d(Z2, Z1B) - eps]


def _hcma(u, **_):
    return _ecma(u, eps=-1.0)


def _leg_hcma(v, **_):
    lhs = v.d(P, PB) * v.d(Z2, Z2B) - v.d(P, Z2B) * v.d(PB, Z2)
    rhs = v.d(P, PB) ** 2 - v.d(P, P) * v.d(PB, PB)
    return [lhs - rhs]


def _v_eqn(v, phi, **_):
    """Legendre-transformed partner relations for ``psi = phi``."""
    fp, fpb, f2, f2b = phi.d(P), phi.d(PB), phi.d(Z2), phi.d(Z2B)
    vpp, vpbpb, vppb = v.d(P, P), v.d(PB, PB), v.d(P, PB)
    return [
        fp * vpbpb - 1j * f2b * vppb - fpb * (vppb - 1j * v.d(P, Z2B)),
        fpb * vpp + 1j * f2 * vppb - fp * (vppb + 1j * v.d(PB, Z2)),
        fp * fpb * (2 * vppb - v.d(Z2, Z2B))
        - (fpb**2 + 1j * fpb * f2b) * vpp
        - (fp**2 - 1j * fp * f2) * vpbpb
        + (f2 * f2b + 1j * f2b * fp - 1j * f2 * fpb) * vppb,
    ]


def _v_trans(v, hprime, hbarprime=None, **_):
    """Translational system for a general ``h``; ``hprime`` is ``h'(z2)`` at the point."""
    h = np.asarray(hprime)
    hb = np.conj(h) if hbarprime is None else np.asarray(hbarprime)
    vppb = v.d(P, PB)
    return [
        v.d(PB, PB) - (1j * hb + 1) * vppb + 1j * v.d(P, Z2B),
        v.d(P, P) + (1j * h - 1) * vppb - 1j * v.d(PB, Z2),
        2 * vppb - v.d(Z2, Z2B) - (1j * hb + 1) * v.d(P, P) + (1j * h - 1) * v.d(PB, PB)
        + (h * hb - 1j * (h - hb)) * vppb,
    ]


def _cons_trans(v, nu, **_):
    nu = complex(nu)
    nub = nu.conjugate()
    vppb = v.d(P, PB)
    return [
        v.d(PB, PB) - (1j * nub + 1) * vppb + 1j * v.d(P, Z2B),
        v.d(P, P) + (1j * nu - 1) * vppb - 1j * v.d(PB, Z2),
        (2 + abs(nu) ** 2 - 1j * (nu - nub)) * vppb
        - (1j * nub + 1) * v.d(P, P)
        + (1j * nu - 1) * v.d(PB, PB)
        - v.d(Z2, Z2B),
    ]


def _v_dilat(v, **_):
    vp, vpb, v2, v2b = v.d(P), v.d(PB), v.d(Z2), v.d(Z2B)
    vpp, vpbpb, vppb = v.d(P, P), v.d(PB, PB), v.d(P, PB)
    return [
        vp * vpbpb - 1j * v2b * vppb - vpb * (vppb - 1j * v.d(P, Z2B)),
        vpb * vpp + 1j * v2 * vppb - vp * (vppb + 1j * v.d(PB, Z2)),
        (v2 * v2b + 1j * v2b * vp - 1j * v2 * vpb + 2 * vp * vpb) * vppb
        - (vpb**2 + 1j * vpb * v2b) * vpp
        - (vp**2 - 1j * vp * v2) * vpbpb
        - vp * vpb * v.d(Z2, Z2B),
    ]


def _lin_dilat(v, a, b, **_):
    a, b = complex(a), complex(b)
    ab, bb = a.conjugate(), b.conjugate()
    vp, vpb, v2, v2b = v.d(P), v.d(PB), v.d(Z2), v.d(Z2B)
    return [
        v.d(P, PB) - (a * vp + ab * vpb),
        v.d(P, P) - ((ab + 1j * bb) * vp - 1j * ab * v2),
        v.d(PB, PB) - ((a - 1j * b) * vpb + 1j * a * v2b),
        v.d(P, Z2B) - (b * vp - 1j * ab * vpb + ab * v2b),
        v.d(PB, Z2) - (bb * vpb + 1j * a * vp + a * v2),
        v.d(Z2, Z2B) - ((a + 1j * b) * vp + b * v2 + (ab - 1j * bb) * vpb + bb * v2b),
    ]


def _heav2(th, **_):
    return [th.d(X, W) + th.d(Y, Z) + th.d(X, X) * th.d(Y, Y) - th.d(X, Y) ** 2]


def _def_sym2(th, phi, **_):
    return [
        phi.d(X, W) + phi.d(Y, Z) + th.d(Y, Y) * phi.d(X, X) + th.d(X, X) * phi.d(Y, Y)
        - 2 * th.d(X, Y) * phi.d(X, Y)
    ]


def _leg_heav2(u, **_):
    d = u.d
    return [
        d(LT, LT) * (d(LX, LX) + d(LR, LZ)) + d(LX, LT) * (d(LR, LR) - d(LX, LT))
        - d(LR, LT) * (d(LR, LX) + d(LT, LZ))
    ]


def _tr_tr1(th, **_):
    d = th.d
    return [-d(Y, W) + d(W, W) + d(Y, Y) * d(W, X) - d(X, Y) * d(W, Y)]


def _tr_tr2(th, **_):
    d = th.d
    return [d(X, W) + d(W, Z) + d(X, X) * d(W, Y) - d(X, Y) * d(W, X)]


def _inv1(th, **_):
    d = th.d
    return [d(W, W) + d(Y, Y) * d(W, X) - d(X, Y) * d(W, Y)]


def _inv2(th, **_):
    d = th.d
    return [d(W, Z) - d(X, Y) * d(W, X) + d(X, X) * d(W, Y)]


def _lin1(u, **_):
    return [u.d(LR, LT) + u.d(LR, LR) - u.d(LX, LT)]


def _lin2(u, **_):
    return [u.d(LX, LX) + u.d(LR, LZ)]


def _lin3(u, **_):
    return [u.d(LR, LX) + u.d(LX, LT) + u.d(LT, LZ)]


def _lin4(u, **_):
    return [u.d(LR, LR) - u.d(LT, LX)]


def _lin5(u, **_):
    return [u.d(LR, LX) + u.d(LT, LZ)]


def _lin6(u, **_):
    return [u.d(LR, LZ) + u.d(LX, LX)]


@dataclass(frozen=True)
class EquationSpec:
    """``degree`` is the homogeneity degree, an int or one entry per row."""

    frame: FrameId
    fn: object
    degree: object
    count: int
    needs_phi: bool = False

    def row_degrees(self):
        if isinstance(self.degree, int):
            return (self.degree,) * self.count
        return tuple(self.degree)


_HL, _KO = FrameId.HCMA_LEGENDRE, FrameId.KAHLER_ORIGINAL
_VL, _VO = FrameId.HEAVEN_LEGENDRE, FrameId.HEAVEN_ORIGINAL

EQUATIONS = {
    EquationId.ECMA: EquationSpec(_KO, _ecma, 2, 1),
    EquationId.HCMA: EquationSpec(_KO, _hcma, 2, 1),
    EquationId.LEG_HCMA: EquationSpec(_HL, _leg_hcma, 2, 1),
    EquationId.V_EQN_GENERIC: EquationSpec(_HL, _v_eqn, (2, 2, 3), 3, needs_phi=True),
    EquationId.V_TRANS: EquationSpec(_HL, _v_trans, 1, 3),
    EquationId.CONS_TRANS: EquationSpec(_HL, _cons_trans, 1, 3),
    EquationId.V_DILAT: EquationSpec(_HL, _v_dilat, (2, 2, 3), 3),
    EquationId.LIN_DILAT: EquationSpec(_HL, _lin_dilat, 1, 6),
    EquationId.HEAV2: EquationSpec(_VO, _heav2, 2, 1),
    EquationId.DEF_SYM2: EquationSpec(_VO, _def_sym2, 2, 1, needs_phi=True),
    EquationId.LEG_HEAV2: EquationSpec(_VL, _leg_heav2, 2, 1),
    EquationId.TR_TR1: EquationSpec(_VO, _tr_tr1, 2, 1),
    EquationId.TR_TR2: EquationSpec(_VO, _tr_tr2, 2, 1),
    EquationId.INV1: EquationSpec(_VO, _inv1, 2, 1),
    EquationId.INV2: EquationSpec(_VO, _inv2, 2, 1),
    EquationId.LIN1: EquationSpec(_VL, _lin1, 1, 1),
    EquationId.LIN2: EquationSpec(_VL, _lin2, 1, 1),
    EquationId.LIN3: EquationSpec(_VL, _lin3, 1, 1),
    EquationId.LIN4: EquationSpec(_VL, _lin4, 1, 1),
    EquationId.LIN5: EquationSpec(_VL, _lin5, 1, 1),
    EquationId.LIN6: EquationSpec(_VL, _lin6, 1, 1),
}


def _check_frame(jet, frame_id, what="jet"):
    if jet.frame.frame_id is not frame_id:
        raise FrameMismatch(f"{what} is in {jet.frame}, expected {frame_id.value}")


def residual(eq, jet, phi=None, **params):
    """Residual of equation ``eq`` from second-order jets.

    ``phi`` is the second jet for pair-taking equations (the symmetry
    characteristic). Parameters: ``eps`` (Ecma), ``a, b`` (LinDilat), ``nu``
    (ConsTrans), ``hprime`` and optionally ``hbarprime`` (VTrans).
    """
    eq = EquationId(eq)
    spec = EQUATIONS[eq]
    _check_frame(jet, spec.frame)
    jet.require(2)
    if spec.needs_phi:
        if phi is None:
            raise ValueError(f"{eq.value} needs a second jet")
        _check_frame(phi, spec.frame, "phi jet")
        phi.require(2 if eq is EquationId.DEF_SYM2 else 1)
        out = spec.fn(jet, phi, **params)
    else:
        out = spec.fn(jet, **params)
    return np.stack([np.asarray(r, dtype=complex) * np.ones(np.shape(jet.value)) for r in out])


def _positive(mass):
    mass = np.asarray(mass, dtype=float)
    return np.where(mass > 0, mass, 1.0)


def normalized(eq, raw, jet, phi=None):
    """Scale-free residual: ``|raw| / mass**degree`` row by row.

    Pair equations are linear in ``v`` and of the remaining degree in ``phi``;
    the linearized second heavenly equation is linear in ``phi`` with
    coefficients ``1`` and ``theta``.
    """
    eq = EquationId(eq)
    spec = EQUATIONS[eq]
    raw = np.abs(np.asarray(raw))
    mass = _positive(jet.mass)
    if spec.needs_phi and phi is None:
        raise ValueError(f"{eq.value} normalization needs the second jet")
    out = np.empty(raw.shape, dtype=float)
    for k, deg in enumerate(spec.row_degrees()):
        if eq is EquationId.DEF_SYM2:
            scale = _positive(phi.mass) * np.maximum(mass, 1.0)
        elif spec.needs_phi:
            scale = mass * _positive(phi.mass) ** (deg - 1)
        else:
            scale = mass**deg
        out[k] = raw[k] / scale
    return out


@dataclass
class ResidualReport:
    """Residuals of a set of equations over sample points.

    ``raw`` and ``normalized`` have shape ``(rows, points)``; ``rows`` lists
    ``(equation id, component index)`` for each row.
    """

    rows: list
    points: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    tol: float = DEFAULT_TOL
    checked: list = field(default=None)

    def __post_init__(self):
        if self.checked is None:
            self.checked = [True] * len(self.rows)

    @property
    def max_normalized(self):
        return float(np.max(self.normalized)) if self.normalized.size else 0.0

    @property
    def mean_normalized(self):
        return float(np.mean(self.normalized)) if self.normalized.size else 0.0

    def row_max(self, eq):
        eq = EquationId(eq)
        vals = [self.normalized[i] for i, (e, _) in enumerate(self.rows) if e is eq]
        return float(np.max(vals)) if vals and np.size(vals) else 0.0

    @property
    def passed(self):
        sel = [i for i, c in enumerate(self.checked) if c]
        if not sel or self.normalized.size == 0:
            return True
        return bool(np.max(self.normalized[sel]) < self.tol)

    def to_dict(self):
        per_row = []
        for i, (eq, k) in enumerate(self.rows):
            vals = self.normalized[i]
            per_row.append(
                {
                    "equation": eq.value,
                    "component": k,
                    "checked": self.checked[i],
                    "max_normalized": float(np.max(vals)) if vals.size else 0.0,
                    "mean_normalized": float(np.mean(vals)) if vals.size else 0.0,
                }
            )
        return {
            "tol": self.tol,
            "passed": self.passed,
            "points": int(self.points.shape[0]) if self.points.ndim > 1 else int(self.points.size > 0),
            "max_normalized": self.max_normalized,
            "mean_normalized": self.mean_normalized,
            "rows": per_row,
        }


SUITES = {
    FamilyId.HCMA_DILAT: (EquationId.LIN_DILAT, EquationId.V_DILAT, EquationId.LEG_HCMA),
    FamilyId.HCMA_TRANS: (EquationId.CONS_TRANS, EquationId.LEG_HCMA),
    FamilyId.HEAVEN_EQUAL: (EquationId.LIN1, EquationId.LIN2, EquationId.LIN3, EquationId.LEG_HEAV2),
    FamilyId.HEAVEN_ZERO: (EquationId.LIN4, EquationId.LIN5, EquationId.LIN6, EquationId.LEG_HEAV2),
}


def _params_for(eq, family, params):
    if eq is EquationId.LIN_DILAT:
        return {"a": params.a, "b": params.b}
    if eq is EquationId.CONS_TRANS:
        return {"nu": params.nu}
    return {}


def _collect(equations, jet, family, params, checked=None):
    rows, raws, norms, flags = [], [], [], []
    for eq in equations:
        raw = residual(eq, jet, **_params_for(eq, family, params))
        nrm = normalized(eq, raw, jet)
        for k in range(raw.shape[0]):
            rows.append((eq, k))
            raws.append(raw[k])
            norms.append(nrm[k])
            flags.append(True if checked is None else eq in checked)
    return rows, np.array(raws), np.array(norms), flags


def residual_suite(family, potential, points, params=None, tol=DEFAULT_TOL):
    """All residuals of a family's linear system and its nonlinear master equation.

    ``points`` has shape ``(n, 4)`` in the family's Legendre frame.
    ``params`` is needed for the HCMA families (``a, b`` or ``nu``).
    """
    family = FamilyId(family)
    if potential.frame != family.frame:
        raise FrameMismatch(f"{family.value} expects {family.frame}, got {potential.frame}")
    if family in (FamilyId.HCMA_DILAT, FamilyId.HCMA_TRANS) and params is None:
        raise ValueError(f"{family.value} residuals need the family parameters")
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    jet = potential.jet(points, 2)
    rows, raw, norm, flags = _collect(SUITES[family], jet, family, params)
    return ResidualReport(rows, points, raw, norm, tol, flags)


def functional_invariance_check(potential, params, f, points, tol=1e-9):
    """Residuals of ``f(v)`` for the dilatational systems.

    The nonlinear system must still hold (pass flag); the linear system is
    reported alongside but is generically violated and not checked.
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    composed = compose_scalar(potential, f)
    jet = composed.jet(points, 2)
    rows, raw, norm, flags = _collect(
        (EquationId.V_DILAT, EquationId.LIN_DILAT), jet, FamilyId.HCMA_DILAT, params,
        checked=(EquationId.V_DILAT,),
    )
    return ResidualReport(rows, points, raw, norm, tol, flags)


def _warn_if_not_solution(theta, tol=1e-8):
    if theta.frame.frame_id is FrameId.HEAVEN_ORIGINAL:
        res = residual(EquationId.HEAV2, theta)
    else:
        u11, u22 = theta.d(Z1, Z1B), theta.d(Z2, Z2B)
        det = u11 * u22 - theta.d(Z1, Z2B) * theta.d(Z2, Z1B)
        # any constant determinant (eps = +-1 after rescaling) solves a CMA
        res = np.asarray([np.abs(np.abs(det) - 1.0)])
    if np.max(np.abs(res)) > tol:
        warnings.warn("potential does not satisfy its field equation at the point", FieldEquationViolated)


def determining_residual(theta, phi):
    """Linearized field equation applied to ``phi`` about the solution ``theta``.

    Second-heavenly frame: the linearization of the second heavenly equation.
    Kahler frame: the box operator of the complex Monge-Ampere equation.
    """
    theta.require(2)
    phi.require(2)
    if theta.frame.frame_id is FrameId.HEAVEN_ORIGINAL:
        _check_frame(phi, FrameId.HEAVEN_ORIGINAL, "phi jet")
        _warn_if_not_solution(theta)
        return residual(EquationId.DEF_SYM2, theta, phi)[0]
    if theta.frame.frame_id is FrameId.KAHLER_ORIGINAL:
        _check_frame(phi, FrameId.KAHLER_ORIGINAL, "phi jet")
        _warn_if_not_solution(theta)
        u = theta.d
        f = phi.d
        return (
            u(Z2, Z2B) * f(Z1, Z1B) + u(Z1, Z1B) * f(Z2, Z2B)
            - u(Z2, Z1B) * f(Z1, Z2B) - u(Z1, Z2B) * f(Z2, Z1B)
        )
    raise FrameMismatch(f"no determining equation in {theta.frame}")


def recursion_residual(theta, phi, psi):
    """Residuals of the recursion relations linking partner symmetries ``phi`` and ``psi``.

    Second-heavenly frame: ``(psi_y - L_y phi, psi_x - L_x phi)``.
    Kahler frame: ``(psi_1 - L_1 phi, psi_2 - L_2 phi)``; with the arguments
    swapped this gives the inverse relations, which take the same form for
    the hyperbolic equation.
    """
    theta.require(2)
    phi.require(1)
    psi.require(1)
    for j, name in ((phi, "phi jet"), (psi, "psi jet")):
        _check_frame(j, theta.frame.frame_id, name)
    t = theta.d
    if theta.frame.frame_id is FrameId.HEAVEN_ORIGINAL:
        ly = phi.d(W) + t(Y, Y) * phi.d(X) - t(X, Y) * phi.d(Y)
        lx = -(phi.d(Z) - t(X, Y) * phi.d(X) + t(X, X) * phi.d(Y))
        return np.stack([psi.d(Y) - ly, psi.d(X) - lx])
    if theta.frame.frame_id is FrameId.KAHLER_ORIGINAL:
        l1 = 1j * (t(Z1, Z2B) * phi.d(Z1B) - t(Z1, Z1B) * phi.d(Z2B))
        l2 = 1j * (t(Z2, Z2B) * phi.d(Z1B) - t(Z2, Z1B) * phi.d(Z2B))
        return np.stack([psi.d(Z1) - l1, psi.d(Z2) - l2])
    raise FrameMismatch(f"no recursion relations in {theta.frame}")


def operator_commutator_residual(theta, test):
    """``[L_x, L_y]`` applied to a test function, via the field-equation expansion.

    Evaluates ``F_y test_x - F_x test_y`` with ``F`` the second heavenly
    residual. This is ``(L_y L_x - L_x L_y) test``; either ordering vanishes
    exactly on solutions.
    """
    _check_frame(theta, FrameId.HEAVEN_ORIGINAL)
    _check_frame(test, FrameId.HEAVEN_ORIGINAL, "test jet")
    theta.require(3)
    test.require(1)
    t = theta.d

    def dF(s):
        return (
            t(X, W, s) + t(Y, Z, s) + t(X, X, s) * t(Y, Y) + t(X, X) * t(Y, Y, s)
            - 2 * t(X, Y) * t(X, Y, s)
        )

    return dF(Y) * test.d(X) - dF(X) * test.d(Y)
