"""Metrics built from potential jets, their real forms, signature and curvature.

Metric components are stored as symmetric matrices ``G`` with
``ds^2 = sum G_ab dx^a dx^b``, so a product of one-forms ``A B`` contributes
``(A B^T + B A^T) / 2``. Complex coframes are pulled back to real
coordinates through a :class:`RealChart`; curvature is computed by finite
differences of the resulting real metric field.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DegenerateMetric,
    FieldEquationViolated,
    FrameMismatch,
    IllConditioned,
    NonPositiveLeadingEntry,
    ResidualImaginaryPart,
)
from .expsum import FrameId

DEGENERACY_TOL = 1e-12
IMAG_TOL = 1e-8
SIGN_TOL = 1e-10
DEFAULT_FD_STEP = 1e-3
WELL_CONDITIONED = 1e-3


def sym(a, b):
    """Symmetric product of two (batched) one-forms as a component matrix."""
    a, b = np.asarray(a), np.asarray(b)
    return (a[..., :, None] * b[..., None, :] + b[..., :, None] * a[..., None, :]) / 2


def _basis(k, like):
    e = np.zeros(np.shape(like) + (4,), dtype=complex)
    e[..., k] = 1
    return e


def _stack(*components):
    components = np.broadcast_arrays(*[np.asarray(c, dtype=complex) for c in components])
    return np.stack(components, axis=-1)


@dataclass
class MetricSample:
    """Metric components at a point (or batch) in a frame's coordinate differentials.

    ``quantities`` holds the denominators the metric was divided by;
    ``degenerate`` flags the ones found below threshold (always ``False``
    on a returned sample, since construction rejects degenerate points).
    """

    frame: FrameId
    matrix: np.ndarray
    base_point: np.ndarray
    quantities: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)

    def __post_init__(self):
        # fused multiply-adds can leave 1-ulp asymmetries; averaging is exact-symmetric
        m = np.asarray(self.matrix)
        self.matrix = (m + np.swapaxes(m, -1, -2)) / 2


def _check_nonzero(name, value, scale):
    value = np.asarray(value)
    scale = np.where(np.asarray(scale) > 0, scale, 1.0)
    bad = np.abs(value) <= DEGENERACY_TOL * scale
    if np.any(bad):
        raise DegenerateMetric(name, complex(np.ravel(value)[np.argmax(np.ravel(bad))]))
    return False


def _require_frame(jet, frame_id):
    if jet.frame.frame_id is not frame_id:
        raise FrameMismatch(f"jet is in {jet.frame}, expected {frame_id.value}")
    jet.require(2)


def metric_kahler(u):
    """``u_{i jbar} dz^i dzbar^j`` on the coframe ``(dz1, dz1bar, dz2, dz2bar)``."""
    _require_frame(u, FrameId.KAHLER_ORIGINAL)
    d = u.d
    ref = d(0, 1)
    e = [_basis(k, ref) for k in range(4)]
    g = sym(e[0], e[1]) * d(0, 1)[..., None, None]
    g = g + sym(e[0], e[3]) * d(0, 3)[..., None, None]
    g = g + sym(e[2], e[1]) * d(2, 1)[..., None, None]
    g = g + sym(e[2], e[3]) * d(2, 3)[..., None, None]
    return MetricSample(FrameId.KAHLER_ORIGINAL, g, u.base_point)


def tetrad_metric(u, eps):
    """``l lbar + eps m mbar`` from the null tetrad of the Kahler metric."""
    _require_frame(u, FrameId.KAHLER_ORIGINAL)
    d = u.d
    u11 = d(0, 1)
    if np.any(np.real(u11) <= 0):
        raise NonPositiveLeadingEntry(f"u_11bar = {np.ravel(u11)[0]} is not positive")
    s = np.sqrt(np.real(u11))
    zero = np.zeros_like(u11)
    l = _stack(u11, zero, d(2, 1), zero) / s[..., None]
    lb = _stack(zero, u11, zero, d(0, 3)) / s[..., None]
    m = _stack(zero, zero, 1 + zero, zero) / s[..., None]
    mb = _stack(zero, zero, zero, 1 + zero) / s[..., None]
    return sym(l, lb) + eps * sym(m, mb)


def tetrad_check(u, eps, tol=1e-8):
    """Max componentwise deviation between the Kahler metric and its tetrad form."""
    eps = float(eps)
    d = u.d
    det = d(0, 1) * d(2, 3) - d(0, 3) * d(2, 1)
    scale = 1 + np.abs(d(0, 1) * d(2, 3)) + np.abs(d(0, 3) * d(2, 1))
    if np.any(np.abs(det - eps) > tol * scale):
        warnings.warn(f"jet does not satisfy the Monge-Ampere equation with eps={eps:+g}", FieldEquationViolated)
    diff = metric_kahler(u).matrix - tetrad_metric(u, eps)
    return float(np.max(np.abs(diff)))


def hcma_degeneracy(v):
    """Denominators of the Legendre-frame HCMA metric with their homogeneity degrees."""
    d = v.d
    return {
        "v_ppbar": (d(0, 1), 1),
        "legendre_det": (d(0, 0) * d(1, 1) - d(0, 1) ** 2, 2),
    }


def heaven_degeneracy(u):
    d = u.d
    return {
        "u_tt": (d(0, 0), 1),
        "delta": (d(0, 0) * d(1, 1) - d(0, 1) ** 2, 2),
    }


def metric_hcma_legendre(v):
    """Legendre-transformed ultra-hyperbolic metric on ``(dp, dpbar, dz2, dz2bar)``."""
    _require_frame(v, FrameId.HCMA_LEGENDRE)
    d = v.d
    vpp, vbb, vpb = d(0, 0), d(1, 1), d(0, 1)
    big = np.maximum.reduce([np.abs(vpp), np.abs(vbb), np.abs(vpb)])
    _check_nonzero("v_ppbar", vpb, big)
    D = vpp * vbb - vpb**2
    _check_nonzero("legendre_det", D, np.abs(vpp * vbb) + np.abs(vpb) ** 2)

    zero = np.zeros_like(vpb)
    A = _stack(vpb, zero, d(1, 2), zero)
    Ab = _stack(zero, vpb, zero, d(0, 3))
    e2, e3 = _basis(2, vpb), _basis(3, vpb)
    w = lambda c: np.asarray(c)[..., None, None]  # noqa: E731
    g = (w(vpp) * sym(A, A) + w(vbb) * sym(Ab, Ab) + w((vpp * vbb + vpb**2) / vpb) * sym(A, Ab)) / w(D)
    g = g - w(D / vpb) * sym(e2, e3)
    return MetricSample(FrameId.HCMA_LEGENDRE, g, v.base_point, {"v_ppbar": vpb, "legendre_det": D},
                        {"v_ppbar": False, "legendre_det": False})


def metric_heaven_legendre(u):
    """Legendre-transformed second-heavenly metric on ``(dt, dr, dx, dz)``."""
    _require_frame(u, FrameId.HEAVEN_LEGENDRE)
    d = u.d
    T, R, X, Z = 0, 1, 2, 3
    utt = d(T, T)
    big = np.max(np.abs(np.stack([d(i, j) for i in range(4) for j in range(i, 4)])), axis=0)
    _check_nonzero("u_tt", utt, big)
    delta = utt * d(R, R) - d(T, R) ** 2
    _check_nonzero("delta", delta, np.abs(utt * d(R, R)) + np.abs(d(T, R)) ** 2)

    B = _stack(utt, d(T, R), d(T, X), d(T, Z))
    dz, dx = _basis(Z, utt), _basis(X, utt)
    N = utt[..., None] * B + (utt * d(R, X) - d(T, R) * d(T, X))[..., None] * dz
    Rrow = _stack(d(R, T), d(R, R), d(R, X), d(R, Z))
    w = lambda c: np.asarray(c)[..., None, None]  # noqa: E731
    g = sym(N, N) / w(utt * delta)
    g = g - w((utt * d(X, X) - d(T, X) ** 2) / utt) * sym(dz, dz)
    g = g - sym(B, dx) - sym(Rrow, dz)
    return MetricSample(FrameId.HEAVEN_LEGENDRE, g, u.base_point, {"u_tt": utt, "delta": delta},
                        {"u_tt": False, "delta": False})


@dataclass(frozen=True)
class RealChart:
    """Linear map from real coordinates ``x`` to a frame's complex coordinates.

    ``jacobian[i, a]`` is ``d(complex coordinate i) / d x^a``; complex
    differentials pull back as ``dZ = J dx`` and metrics as ``J^T G J``.
    """

    name: str
    jacobian: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.det(self.jacobian)) < 1e-12:
            raise ValueError("chart Jacobian must be invertible")

    def to_frame(self, x):
        return np.asarray(x, dtype=float) @ self.jacobian.T

    def pullback(self, g):
        J = self.jacobian
        return np.einsum("ia,...ij,jb->...ab", J, g, J)


CONJUGATE_CHART = RealChart(
    "conjugate",
    np.array([[1, 1j, 0, 0], [1, -1j, 0, 0], [0, 0, 1, 1j], [0, 0, 1, -1j]], dtype=complex),
)
IDENTITY_CHART = RealChart("identity", np.eye(4, dtype=complex))

CHARTS = {
    FrameId.HCMA_LEGENDRE: CONJUGATE_CHART,
    FrameId.KAHLER_ORIGINAL: CONJUGATE_CHART,
    FrameId.HEAVEN_LEGENDRE: IDENTITY_CHART,
    FrameId.HEAVEN_ORIGINAL: IDENTITY_CHART,
}


class SignatureClass(enum.Enum):
    EUCLIDEAN = "Euclidean"
    ULTRA_HYPERBOLIC = "UltraHyperbolic"
    LORENTZIAN = "Lorentzian"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SignatureReport:
    eigenvalues: np.ndarray
    n_plus: int
    n_minus: int
    classification: SignatureClass

    @property
    def signature(self):
        return (self.n_plus, self.n_minus)

    def to_dict(self):
        return {
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "class": self.classification.value,
        }


def classify(g, tol=SIGN_TOL):
    """Eigenvalue sign counts of a real symmetric matrix."""
    eig = np.linalg.eigvalsh(g)
    rho = np.max(np.abs(eig))
    cut = tol * rho
    n_plus, n_minus = int(np.sum(eig > cut)), int(np.sum(eig < -cut))
    if rho == 0 or n_plus + n_minus < 4:
        kind = SignatureClass.DEGENERATE
    elif n_plus == 4 or n_minus == 4:
        kind = SignatureClass.EUCLIDEAN
    elif n_plus == 2:
        kind = SignatureClass.ULTRA_HYPERBOLIC
    else:
        kind = SignatureClass.LORENTZIAN
    return SignatureReport(eig, n_plus, n_minus, kind)


def _to_real(g_complex, tol=IMAG_TOL):
    re, im = g_complex.real, g_complex.imag
    rho = np.max(np.abs(np.linalg.eigvalsh(re)), axis=-1)
    worst = np.max(np.abs(im), axis=(-2, -1))
    if np.any(worst > tol * np.where(rho > 0, rho, 1.0)):
        raise ResidualImaginaryPart(f"imaginary part {np.max(worst):.3e} after realification")
    return re


def realify(sample, chart=None):
    """Real metric and signature of a single-point sample."""
    chart = CHARTS[sample.frame] if chart is None else chart
    if sample.matrix.shape != (4, 4):
        raise ValueError("realify takes a single-point sample; use MetricField for batches")
    g = _to_real(chart.pullback(sample.matrix))
    g = (g + g.T) / 2
    return g, classify(g)


BUILDERS = {
    FrameId.KAHLER_ORIGINAL: metric_kahler,
    FrameId.HCMA_LEGENDRE: metric_hcma_legendre,
    FrameId.HEAVEN_LEGENDRE: metric_heaven_legendre,
}


@dataclass(frozen=True)
class MetricField:
    """Real metric ``x -> g(x)`` of a potential, batched over leading axes of ``x``."""

    potential: object
    chart: RealChart = None
    builder: Callable = None

    def __post_init__(self):
        frame = self.potential.frame.frame_id
        if self.chart is None:
            object.__setattr__(self, "chart", CHARTS[frame])
        if self.builder is None:
            if frame not in BUILDERS:
                raise FrameMismatch(f"no metric for {self.potential.frame}")
            object.__setattr__(self, "builder", BUILDERS[frame])

    def sample(self, x):
        return self.builder(self.potential.jet(self.chart.to_frame(x), 2))

    def __call__(self, x):
        g = _to_real(self.chart.pullback(self.sample(x).matrix))
        return (g + np.swapaxes(g, -1, -2)) / 2


class ConstantMetric:
    """Metric field with the same components everywhere (flat reference)."""

    def __init__(self, g):
        self.g = np.asarray(g, dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.g, x.shape[:-1] + (4, 4)).copy()


def _raw_derivatives(metric, x, h):
    """Central-difference ``g``, ``dg[c, a, b]`` and ``ddg[c, d, a, b]`` at step ``h``."""
    x = np.asarray(x, dtype=float)
    eye = np.eye(4) * h
    pairs = [(c, d) for c in range(4) for d in range(c + 1, 4)]
    offsets = [np.zeros(4)]
    offsets += [s * eye[c] for c in range(4) for s in (1, -1)]
    offsets += [sc * eye[c] + sd * eye[d] for c, d in pairs for sc in (1, -1) for sd in (1, -1)]
    g_all = metric(x + np.array(offsets))
    g0 = g_all[0]
    gp, gm = g_all[1:9:2], g_all[2:9:2]
    dg = (gp - gm) / (2 * h)
    ddg = np.empty((4, 4, 4, 4))
    for c in range(4):
        ddg[c, c] = (gp[c] - 2 * g0 + gm[c]) / h**2
    for k, (c, d) in enumerate(pairs):
        pp, pm, mp, mm = g_all[9 + 4 * k: 13 + 4 * k]
        ddg[c, d] = ddg[d, c] = (pp - pm - mp + mm) / (4 * h * h)
    return g0, dg, ddg


def metric_derivatives(metric, x, h=DEFAULT_FD_STEP):
    """``g, dg, ddg`` with one Richardson level: ``(4 D(h/2) - D(h)) / 3``."""
    g0, d1, dd1 = _raw_derivatives(metric, x, h)
    _, d2, dd2 = _raw_derivatives(metric, x, h / 2)
    return g0, (4 * d2 - d1) / 3, (4 * dd2 - dd1) / 3


def _invert(g):
    if np.linalg.cond(g) > 1 / DEGENERACY_TOL:
        raise DegenerateMetric("metric", float(np.linalg.det(g)))
    return np.linalg.inv(g)


def _levi_civita(g, dg, ddg):
    ginv = _invert(g)
    # lowered symbols G_dbc and their derivatives along e
    low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    dlow = 0.5 * (np.einsum("ebdc->edbc", ddg) + np.einsum("ecdb->edbc", ddg) - ddg)
    gamma = np.einsum("ad,dbc->abc", ginv, low)
    dginv = -np.einsum("af,efg,gd->ead", ginv, dg, ginv)
    dgamma = np.einsum("ead,dbc->eabc", dginv, low) + np.einsum("ad,edbc->eabc", ginv, dlow)
    riemann = (
        np.einsum("cadb->abcd", dgamma)
        - np.einsum("dacb->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    ricci = np.einsum("abad->bd", riemann)
    return gamma, riemann, ricci


@dataclass
class CurvatureSample:
    point: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    riemann_norm: float
    ricci_norm: float
    riemann_error: float
    ricci_error: float
    fd_step: float

    @property
    def ricci_ratio(self):
        """Ricci norm relative to ``1 + `` Riemann norm."""
        return self.ricci_norm / (1 + self.riemann_norm)

    def to_dict(self):
        return {
            "point": [float(v) for v in self.point],
            "riemann_norm": self.riemann_norm,
            "ricci_norm": self.ricci_norm,
            "riemann_error": self.riemann_error,
            "ricci_error": self.ricci_error,
            "ricci_ratio": self.ricci_ratio,
            "fd_step": self.fd_step,
        }


def curvature(metric, x, fd_step=DEFAULT_FD_STEP, abs_floor=1e-8, rtol=1e-6, min_step=1e-5, max_step=3.2e-2):
    """Levi-Civita curvature of a real metric field at ``x`` by finite differences.

    The error estimate is the change in the Riemann and Ricci tensors when
    the step is halved. If the Ricci estimate exceeds ``rtol * (1 +
    |Riemann|)`` the step is searched downwards (truncation-limited) and then
    upwards (roundoff-limited, typical of badly conditioned metrics near a
    degenerate locus) while the estimate keeps shrinking, within
    ``[min_step, max_step]``. The reported tensors and ``fd_step`` belong to
    the coarse step of the best pair. :class:`IllConditioned` is raised when
    the Riemann error exceeds both its norm and ``abs_floor``.
    """
    x = np.asarray(x, dtype=float)
    g = metric(x)
    levels = {}

    def level(h):
        if h not in levels:
            _, dg, ddg = metric_derivatives(metric, x, h)
            levels[h] = _levi_civita(g, dg, ddg)
        return levels[h]

    def trial(h):
        coarse, fine = level(h), level(h / 2)
        rn = float(np.linalg.norm(coarse[1]))
        ce = float(np.linalg.norm(coarse[2] - fine[2]))
        return ce / (1 + rn), h

    best = trial(float(fd_step))
    for factor in (0.5, 2.0):
        current = trial(float(fd_step))
        while current[0] > rtol:
            h = current[1] * factor
            if (factor < 1 and h / 2 < min_step) or (factor > 1 and h > max_step):
                break
            try:
                nxt = trial(h)
            except DegenerateMetric:
                break
            if nxt[0] >= current[0]:
                break
            current = nxt
        best = min(best, current)
        if best[0] <= rtol:
            break

    h = best[1]
    (gamma, riem, ric), fine = level(h), level(h / 2)
    rn, cn = float(np.linalg.norm(riem)), float(np.linalg.norm(ric))
    re, ce = float(np.linalg.norm(riem - fine[1])), float(np.linalg.norm(ric - fine[2]))
    if re > max(rn, abs_floor):
        raise IllConditioned(f"Riemann error estimate {re:.3e} exceeds its norm {rn:.3e}")
    return CurvatureSample(x, gamma, riem, ric, rn, cn, re, ce, h)


def lie_derivative_metric(metric, vector_field, x, fd_step=DEFAULT_FD_STEP):
    """``(L_V g)_ab`` at ``x``; ``vector_field(x)`` returns ``V`` and ``J[c, a] = d_a V^c``."""
    x = np.asarray(x, dtype=float)
    g, dg, _ = metric_derivatives(metric, x, fd_step)
    V, J = vector_field(x)
    V, J = np.asarray(V, dtype=float), np.asarray(J, dtype=float)
    return np.einsum("c,cab->ab", V, dg) + np.einsum("cb,ca->ab", g, J) + np.einsum("ac,cb->ab", g, J)


def translation_field(direction):
    direction = np.asarray(direction, dtype=float)
    return lambda x: (direction, np.zeros((4, 4)))


def euler_field(x):
    """Dilatation ``V = x^a d_a``."""
    return np.asarray(x, dtype=float), np.eye(4)


def phase_annihilating_directions(potential, chart=None, tol=1e-10):
    """Orthonormal real directions along which every exponent phase is constant."""
    chart = CHARTS[potential.frame.frame_id] if chart is None else chart
    grads = potential.exponents @ chart.jacobian
    rows = np.vstack([grads.real, grads.imag])
    if not rows.size:
        return np.eye(4)
    _, s, vt = np.linalg.svd(rows)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return vt[rank:]


def degeneracy(jet):
    """Degeneracy quantities of the frame's metric, as ``{name: (value, degree)}``."""
    frame = jet.frame.frame_id
    if frame is FrameId.HCMA_LEGENDRE:
        return hcma_degeneracy(jet)
    if frame is FrameId.HEAVEN_LEGENDRE:
        return heaven_degeneracy(jet)
    return {}


def well_conditioned_points(potential, n, rng, box=1.0, threshold=WELL_CONDITIONED, chart=None, max_tries=100000):
    """Random real points where every degeneracy quantity exceeds ``threshold * mass**degree``."""
    chart = CHARTS[potential.frame.frame_id] if chart is None else chart
    found = []
    tries = 0
    misses = {}
    while len(found) < n:
        if tries > max_tries:
            worst = max(misses, key=misses.get) if misses else "metric"
            raise DegenerateMetric(worst)
        batch = rng.uniform(-box, box, size=(max(4 * n, 16), 4))
        tries += len(batch)
        j = potential.jet(chart.to_frame(batch), 2)
        ok = np.ones(len(batch), dtype=bool)
        for name, (value, deg) in degeneracy(j).items():
            good = np.abs(value) > threshold * j.mass**deg
            misses[name] = misses.get(name, 0) + int(np.sum(~good))
            ok &= good
        found.extend(batch[ok])
    return np.array(found[:n])
