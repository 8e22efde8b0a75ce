"""The four exponential-sum solution families and their parameter laws.

HCMA families live on the Legendre slots ``(p, pbar, z2, z2bar)`` and emit
exponent vectors ``(alpha, conj alpha, beta, conj beta)`` with real
amplitudes:

* ``HCMA_DILAT``: dilatational partner symmetry. ``alpha = chi e^{i mu}``
  with ``chi = 2|a| cos(arg a + mu)``, ``beta`` from ``alpha`` via ``a, b``.
* ``HCMA_TRANS``: translational partner symmetry with ``h = nu z2``.

Second-heavenly families live on ``(t, r, x, z)`` and emit exponent vectors
``(alpha, beta, gamma, delta)`` with complex amplitudes:

* ``HEAVEN_EQUAL``: ``phi = psi = theta_w``.
* ``HEAVEN_ZERO``: ``phi = theta_w``, ``psi = 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTerm, DivisionByZero, FrameMismatch, Incompatible
from .expsum import HCMA_LEGENDRE, HEAVEN_LEGENDRE, ExpSumPotential, ExpTerm

DEGENERACY_TOL = 1e-12


class FamilyId(enum.Enum):
    HCMA_DILAT = "hcma-dilat"
    HCMA_TRANS = "hcma-trans"
    HEAVEN_EQUAL = "heaven-equal"
    HEAVEN_ZERO = "heaven-zero"

    @property
    def frame(self):
        return HCMA_LEGENDRE if self in HCMA_FAMILIES else HEAVEN_LEGENDRE


HCMA_FAMILIES = (FamilyId.HCMA_DILAT, FamilyId.HCMA_TRANS)
HEAVEN_FAMILIES = (FamilyId.HEAVEN_EQUAL, FamilyId.HEAVEN_ZERO)


def _tuple(values, kind):
    return tuple(kind(v) for v in np.atleast_1d(values))


@dataclass(frozen=True)
class HcmaDilatParams:
    """Primitive inputs of the dilatational family: ``a, b`` and per-term phases and amplitudes."""

    a: complex
    b: complex
    mu: tuple = ()
    c: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "mu", _tuple(self.mu, float))
        object.__setattr__(self, "c", _tuple(self.c, float))
        if len(self.mu) != len(self.c):
            raise ValueError("mu and c must have the same length")


@dataclass(frozen=True)
class HcmaTransParams:
    nu: complex
    alpha: tuple = ()
    c: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nu", complex(self.nu))
        object.__setattr__(self, "alpha", _tuple(self.alpha, complex))
        object.__setattr__(self, "c", _tuple(self.c, float))
        if len(self.alpha) != len(self.c):
            raise ValueError("alpha and c must have the same length")


@dataclass(frozen=True)
class HeavenParams:
    beta: tuple = ()
    gamma: tuple = ()
    c: tuple = ()

    def __post_init__(self):
        for name in ("beta", "gamma", "c"):
            object.__setattr__(self, name, _tuple(getattr(self, name), complex))
        if not len(self.beta) == len(self.gamma) == len(self.c):
            raise ValueError("beta, gamma and c must have the same length")


PARAM_TYPES = {
    FamilyId.HCMA_DILAT: HcmaDilatParams,
    FamilyId.HCMA_TRANS: HcmaTransParams,
    FamilyId.HEAVEN_EQUAL: HeavenParams,
    FamilyId.HEAVEN_ZERO: HeavenParams,
}


def _near_zero(value, scale=1.0):
    return abs(value) <= DEGENERACY_TOL * max(scale, 1e-300)


def solve_alpha_polar(a, mu):
    """Solve ``|alpha|^2 = a alpha + conj(a alpha)`` on the ray of phase ``mu``.

    ``chi = 2|a| cos(arg a + mu)`` is kept signed, so ``|alpha| = |chi|``.
    """
    a = complex(a)
    if a == 0:
        raise DivisionByZero("a must be nonzero")
    r, theta = abs(a), np.angle(a)
    chi = 2.0 * r * np.cos(theta + mu)
    if _near_zero(chi, 2.0 * r):
        raise DegenerateTerm(f"chi = 2|a|cos(arg a + mu) vanishes for mu = {mu!r}")
    return complex(chi * np.exp(1j * mu))


def beta_from_alpha_dilat(a, b, alpha):
    a, b, alpha = complex(a), complex(b), complex(alpha)
    abar = a.conjugate()
    if abar == 0:
        raise DivisionByZero("a must be nonzero")
    return 1j * (alpha**2 - (abar + 1j * b.conjugate()) * alpha) / abar


def beta_from_alpha_trans(nu, alpha):
    nu, alpha = complex(nu), complex(alpha)
    if _near_zero(alpha):
        raise DivisionByZero("alpha must be nonzero")
    return (nu + 1j - 1j * alpha / alpha.conjugate()) * alpha


def bridge_dilat_trans(a, nu):
    """Parameter ``b`` making a dilatational solution also solve the translational system.

    Requires ``conj(a) = -a``. The returned ``b = (conj(nu) - i) a`` is
    checked by comparing both ``beta`` laws on probe phases.
    """
    a, nu = complex(a), complex(nu)
    if a == 0 or abs(a.conjugate() + a) > DEGENERACY_TOL * abs(a):
        raise Incompatible(f"bridge needs conj(a) = -a, got a = {a}")
    b = (nu.conjugate() - 1j) * a
    for mu in (0.3, 1.1, 2.0):
        try:
            alpha = solve_alpha_polar(a, mu)
        except DegenerateTerm:
            continue
        lhs = beta_from_alpha_dilat(a, b, alpha)
        rhs = beta_from_alpha_trans(nu, alpha)
        if abs(lhs - rhs) > 1e-10 * (1 + abs(lhs)):
            raise Incompatible(f"beta laws disagree at mu = {mu}: {lhs} vs {rhs}")
    return b


def exponents_heaven(family, beta, gamma):
    """``(alpha, delta)`` for a second-heavenly term with given ``beta, gamma``."""
    family = FamilyId(family)
    beta, gamma = complex(beta), complex(gamma)
    if _near_zero(beta):
        raise DivisionByZero("beta must be nonzero")
    if family is FamilyId.HEAVEN_EQUAL:
        if _near_zero(gamma - beta, max(abs(beta), abs(gamma))):
            raise DivisionByZero("gamma - beta must be nonzero")
        alpha = beta**2 / (gamma - beta)
    elif family is FamilyId.HEAVEN_ZERO:
        if _near_zero(gamma):
            raise DivisionByZero("gamma must be nonzero")
        alpha = beta**2 / gamma
    else:
        raise ValueError(f"{family} is not a second-heavenly family")
    return alpha, -(gamma**2) / beta


def exponent_table(family, params):
    """``(amplitudes, exponents)`` arrays derived from primitive parameters."""
    family = FamilyId(family)
    if not isinstance(params, PARAM_TYPES[family]):
        raise TypeError(f"{family.value} expects {PARAM_TYPES[family].__name__}")
    rows = []
    if family is FamilyId.HCMA_DILAT:
        for mu in params.mu:
            alpha = solve_alpha_polar(params.a, mu)
            beta = beta_from_alpha_dilat(params.a, params.b, alpha)
            rows.append((alpha, alpha.conjugate(), beta, beta.conjugate()))
    elif family is FamilyId.HCMA_TRANS:
        for alpha in params.alpha:
            beta = beta_from_alpha_trans(params.nu, alpha)
            rows.append((alpha, alpha.conjugate(), beta, beta.conjugate()))
    else:
        for beta, gamma in zip(params.beta, params.gamma):
            alpha, delta = exponents_heaven(family, beta, gamma)
            rows.append((alpha, beta, gamma, delta))
    amps = np.array(params.c, dtype=complex)
    return amps, np.array(rows, dtype=complex).reshape(-1, 4)


def build_solution(family, params):
    """Exponential-sum solution of ``family``; identical exponent rows have their amplitudes merged."""
    family = FamilyId(family)
    amps, exps = exponent_table(family, params)
    merged = {}
    for c, e in zip(amps, exps):
        key = tuple(e)
        merged[key] = merged.get(key, 0) + c
    terms = tuple(ExpTerm(c, e) for e, c in merged.items())
    return ExpSumPotential(family.frame, terms)


@dataclass
class TermConstraint:
    index: int
    residuals: dict
    flags: dict = field(default_factory=dict)


@dataclass
class ConstraintReport:
    family: FamilyId
    terms: list
    tol: float

    @property
    def max_residual(self):
        return max((r for t in self.terms for r in t.residuals.values()), default=0.0)

    @property
    def degenerate_terms(self):
        return [t.index for t in self.terms if any(t.flags.values())]

    @property
    def valid(self):
        return self.max_residual < self.tol and not self.degenerate_terms

    def to_dict(self):
        return {
            "family": self.family.value,
            "tol": self.tol,
            "valid": self.valid,
            "max_residual": self.max_residual,
            "terms": [
                {"index": t.index, "residuals": t.residuals, "flags": t.flags} for t in self.terms
            ],
        }


def _rel(value, *parts):
    scale = sum(abs(p) for p in parts)
    return float(abs(value) / scale) if scale > 0 else float(abs(value))


def validate(family, potential, params=None, tol=1e-12):
    """Per-term residuals of the family's algebraic parameter laws.

    Residuals are normalized by the sum of magnitudes of the terms in each law.
    HCMA families need ``params`` (for ``a, b`` or ``nu``); second-heavenly
    laws are intrinsic to the exponents.
    """
    family = FamilyId(family)
    if potential.frame != family.frame:
        raise FrameMismatch(f"{family.value} lives in {family.frame}, potential in {potential.frame}")
    if family in HCMA_FAMILIES and params is None and len(potential):
        raise ValueError(f"validating {family.value} needs its parameters")
    report = []
    for j, term in enumerate(potential.terms):
        e0, e1, e2, e3 = term.exponents
        res, flags = {}, {}
        if family in HCMA_FAMILIES:
            res["conjugate_alpha"] = _rel(e1 - e0.conjugate(), e0, e1)
            res["conjugate_beta"] = _rel(e3 - e2.conjugate(), e2, e3)
            res["real_amplitude"] = _rel(term.amplitude.imag, term.amplitude)
            alpha, beta = e0, e2
            flags["alpha_zero"] = bool(_near_zero(alpha))
            if family is FamilyId.HCMA_DILAT:
                a, b = params.a, params.b
                abar, bbar = a.conjugate(), b.conjugate()
                res["alphadet"] = _rel(
                    abs(alpha) ** 2 - a * alpha - abar * alpha.conjugate(),
                    abs(alpha) ** 2, a * alpha, abar * alpha.conjugate(),
                )
                # betadet multiplied through by conj(a)
                res["betadet"] = _rel(
                    abar * beta - 1j * (alpha**2 - (abar + 1j * bbar) * alpha),
                    abar * beta, alpha**2, (abar + 1j * bbar) * alpha,
                )
            else:
                nu = params.nu
                if not flags["alpha_zero"]:
                    res["delgam"] = _rel(
                        beta - (nu + 1j - 1j * alpha / alpha.conjugate()) * alpha,
                        beta, nu * alpha, alpha, alpha**2 / alpha.conjugate(),
                    )
        else:
            alpha, beta, gamma, delta = e0, e1, e2, e3
            flags["beta_zero"] = bool(_near_zero(beta))
            if family is FamilyId.HEAVEN_EQUAL:
                res["alpha_law"] = _rel(alpha * (gamma - beta) - beta**2, alpha * gamma, alpha * beta, beta**2)
                flags["gamma_equals_beta"] = bool(_near_zero(gamma - beta, max(abs(beta), abs(gamma))))
            else:
                res["alpha_law"] = _rel(alpha * gamma - beta**2, alpha * gamma, beta**2)
                flags["gamma_zero"] = bool(_near_zero(gamma))
            res["delta_law"] = _rel(beta * delta + gamma**2, beta * delta, gamma**2)
        report.append(TermConstraint(j, res, flags))
    return ConstraintReport(family, report, tol)


def random_params(family, n, rng, bound=2.0, min_size=0.2):
    """Random admissible parameters whose derived exponents all have modulus <= ``bound``.

    Terms are rejection-sampled: each derived exponent must lie in
    ``[min_size, bound]`` in modulus (keeping clear of degenerate loci) and
    ``gamma - beta`` must not be small for the equal-symmetry family.
    """
    family = FamilyId(family)
    amps = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)

    def ok(values):
        mags = np.abs(np.asarray(values))
        return bool(np.all(mags <= bound) and np.all(mags >= min_size))

    if family is FamilyId.HCMA_DILAT:
        while True:
            a = rng.uniform(0.5, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            b = rng.uniform(0.0, 0.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            mus = []
            for _ in range(200 * n):
                mu = rng.uniform(0, np.pi)
                try:
                    alpha = solve_alpha_polar(a, mu)
                except DegenerateTerm:
                    continue
                if ok([alpha, beta_from_alpha_dilat(a, b, alpha)]):
                    mus.append(mu)
                if len(mus) == n:
                    return HcmaDilatParams(a, b, mus, amps)
    if family is FamilyId.HCMA_TRANS:
        nu = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        alphas = []
        while len(alphas) < n:
            alpha = rng.uniform(min_size, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            if ok([alpha, beta_from_alpha_trans(nu, alpha)]):
                alphas.append(alpha)
        return HcmaTransParams(nu, alphas, amps)
    betas, gammas = [], []
    while len(betas) < n:
        beta, gamma = (rng.uniform(min_size, bound) * np.exp(1j * rng.uniform(0, 2 * np.pi)) for _ in range(2))
        if family is FamilyId.HEAVEN_EQUAL and abs(gamma - beta) < min_size:
            continue
        alpha, delta = exponents_heaven(family, beta, gamma)
        if ok([alpha, beta, gamma, delta]):
            betas.append(beta)
            gammas.append(gamma)
    return HeavenParams(betas, gammas, amps * np.exp(1j * rng.uniform(0, 2 * np.pi, n)))


def random_real_heaven_params(family, n, rng, bound=2.0, min_size=0.2):
    """Real-valued second-heavenly parameters (real metric on real ``(t, r, x, z)``)."""
    family = FamilyId(family)
    betas, gammas = [], []
    while len(betas) < n:
        beta, gamma = rng.uniform(min_size, bound, 2) * rng.choice([-1.0, 1.0], 2)
        if family is FamilyId.HEAVEN_EQUAL and abs(gamma - beta) < min_size:
            continue
        alpha, delta = exponents_heaven(family, beta, gamma)
        mags = np.abs([alpha, beta, gamma, delta])
        if np.all(mags <= bound) and np.all(mags >= min_size):
            betas.append(beta)
            gammas.append(gamma)
    return HeavenParams(betas, gammas, rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n))
