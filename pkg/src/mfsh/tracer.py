"""Instability boundaries from eigenvalue conditions, and their continuation.

Each boundary kind is a residual F(params, aux) = 0 with one more equation
than auxiliary unknowns, so it cuts a curve out of a two-parameter plane.
Long-wave conditions are posed on the polar limit

    s(theta) = lim_{eps -> 0} sigma_max(eps cos theta, eps sin theta) / eps^2,

evaluated on a small ring with one Richardson step in eps^2.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers import InstabilityKind
from .errors import (ConfigError, CorrectorDivergence, DerivativeStencilFailure,
                     NegativeAmplitude, NoCrossing, NumericalFailure)
from .model import Model, ModelParams, mu_existence, stripe_beta
from .series import numeric_series
from .stability import all_roots

K = InstabilityKind
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class LimitOptions:
    """Numerical knobs of the boundary conditions."""
    ring_eps: float = 1e-4      # base radius of the eps-ring
    ring_ratio: float = 0.5     # second ring radius / first
    theta_step: float = 1e-3    # polar-angle difference step
    rel_step: float = 1e-2      # SVI-II stencil, relative to k_max
    cr_step: float = 1e-4       # CR stencil in k and l
    min_cr_radius: float = 0.02


DEFAULT_OPTIONS = LimitOptions()


# -- polar limit ------------------------------------------------------------

def ring_radius(params: ModelParams, base=DEFAULT_OPTIONS.ring_eps):
    """Ring radius small against every scale the near-zero eigenvalue sees.

    The next term of sigma/eps^2 is O(eps^2/beta), O(eps^2 g) and, in model 1,
    O(eps^2/(Pr c^2)); the radius is shrunk so those stay below ~1e-2.
    """
    beta = stripe_beta(params).beta
    fac = min(1.0, 10.0 * math.sqrt(beta))
    coupling = abs(params.coupling)
    fac = min(fac, 10.0 / math.sqrt(1.0 + coupling))
    if params.model is Model.ONE and params.c2 > 0:
        fac = min(fac, 10.0 * math.sqrt(params.pr * params.c2))
    return base * max(fac, 1e-6)


def polar_limit(params: ModelParams, theta, opts: LimitOptions = DEFAULT_OPTIONS):
    """(s(theta), omega/eps) for an array of angles.

    s is the Richardson-extrapolated real part of the leading eigenvalue over
    eps^2; the second output is the frequency divided by eps on the inner
    ring (finite for the O(eps) oscillatory pair of stress-free model 1).
    """
    theta = np.asarray(theta, dtype=float)
    eps = ring_radius(params, opts.ring_eps)
    r = opts.ring_ratio
    vals = []
    for e in (eps, r * eps):
        top = all_roots(params, e * np.cos(theta), e * np.sin(theta))[..., 0]
        vals.append(top.real / e ** 2)
    s = (vals[1] - r * r * vals[0]) / (1.0 - r * r)
    return s, np.abs(top.imag) / (r * eps)


def _richardson_dtheta(params, theta, opts, order=1):
    h = opts.theta_step
    pts = np.array([theta - h, theta + h, theta - h / 2, theta + h / 2, theta])
    s, _ = polar_limit(params, pts, opts)
    if order == 1:
        d1 = (s[1] - s[0]) / (2 * h)
        d2 = (s[3] - s[2]) / h
    else:
        d1 = (s[1] - 2 * s[4] + s[0]) / h ** 2
        d2 = (s[3] - 2 * s[4] + s[2]) / (h / 2) ** 2
    return (4 * d2 - d1) / 3, s[4]


def _tracked_real(params, k, l, ref):
    """Real part of the eigenvalue branch nearest ``ref`` at each (k, l)."""
    roots = all_roots(params, np.asarray(k, float), np.asarray(l, float))
    idx = np.argmin(np.abs(roots - ref), axis=-1)
    return np.take_along_axis(roots, idx[..., None], axis=-1)[..., 0].real


def _top(params, k, l):
    return all_roots(params, np.array([k]), np.array([l]))[0, 0]


def is_stress_free(params: ModelParams):
    return params.model is Model.ONE and params.c2 == 0.0


def n_aux(kind: InstabilityKind, params: ModelParams) -> int:
    if kind in (K.ECKHAUS, K.ZIGZAG, K.EXISTENCE):
        return 0
    if kind is K.SVI_I:
        return 0 if is_stress_free(params) else 1
    if kind in (K.SVI_II, K.OSV):
        return 1
    if kind is K.CROSS_ROLL:
        return 2
    raise ConfigError(f"no boundary condition is defined for {kind.name}")


def condition_residual(kind: InstabilityKind, params: ModelParams, aux=(),
                       opts: LimitOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Residual vector whose zero defines the boundary of ``kind``.

    aux: SVI-I and OSV take the polar angle theta of the most unstable
    direction, SVI-II the on-axis k_max, CR the interior (k_max, l_max).
    """
    aux = np.atleast_1d(np.asarray(aux, dtype=float))
    if len(aux) != n_aux(kind, params):
        raise ConfigError(f"{kind.name} takes {n_aux(kind, params)} auxiliary unknowns, got {len(aux)}")
    if kind is K.EXISTENCE:
        return np.array([params.mu - mu_existence(params.q)])
    if kind is K.ECKHAUS:
        return polar_limit(params, np.array([0.0]), opts)[0]
    if kind is K.ZIGZAG:
        return polar_limit(params, np.array([HALF_PI]), opts)[0]
    if kind is K.SVI_I and is_stress_free(params):
        # O(eps) real growth iff the k^2 l^2 coefficient of (k^2+l^2) det J1
        # is positive (the k^4 one vanishes identically)
        fitted, _ = numeric_series(params)
        return np.array([fitted.b])
    if kind in (K.SVI_I, K.OSV):
        ds, s = _richardson_dtheta(params, aux[0], opts)
        return np.array([s, ds])
    if kind is K.SVI_II:
        k = aux[0]
        if not k > 0:
            raise DerivativeStencilFailure("SVI-II stencil needs k_max > 0")
        h = opts.rel_step * k
        ref = _top(params, k, 0.0)
        ks = np.array([k - h, k + h, k - h / 2, k + h / 2, k, k, k])
        ls = np.array([0, 0, 0, 0, 0, h, h / 2])
        sig = _tracked_real(params, ks, ls, ref)
        d1 = (sig[1] - sig[0]) / (2 * h)
        d2 = (sig[3] - sig[2]) / h
        dk = (4 * d2 - d1) / 3 / (2 * k)
        e1 = (sig[5] - sig[4]) / h ** 2
        e2 = (sig[6] - sig[4]) / (h / 2) ** 2
        dl = (4 * e2 - e1) / 3
        return np.array([dk, dl])
    if kind is K.CROSS_ROLL:
        k, l = aux
        h = opts.cr_step
        if math.hypot(k, l) < max(opts.min_cr_radius, 4 * h):
            raise DerivativeStencilFailure("CR stencil too close to the origin")
        ref = _top(params, k, l)
        ks = np.array([k - h, k + h, k - h / 2, k + h / 2, k, k, k, k])
        ls = np.array([l, l, l, l, l - h, l + h, l - h / 2, l + h / 2])
        sig = _tracked_real(params, ks, ls, ref)
        dk = (4 * (sig[3] - sig[2]) / h - (sig[1] - sig[0]) / (2 * h)) / 3
        dl = (4 * (sig[7] - sig[6]) / h - (sig[5] - sig[4]) / (2 * h)) / 3
        return np.array([ref.real, dk, dl])
    raise ConfigError(f"no boundary condition is defined for {kind.name}")


def codim2_residual(params: ModelParams, opts: LimitOptions = DEFAULT_OPTIONS):
    """End point of the SVI on the Eckhaus curve.

    s(0) and s''(0) vanish together where the k^4 and k^2 l^2 coefficients
    of (k^2+l^2) det J do; those are fitted from the exact determinant,
    which is far less noisy than a second angular difference of s.
    """
    fitted, _ = numeric_series(params)
    return np.array([fitted.a, fitted.b])


# -- planes -------------------------------------------------------------------

@dataclass(frozen=True)
class Plane:
    """Two-parameter plane a boundary lives in.

    ``q-mu``: internal coordinates (q, mu).
    ``g-qs``: fixed mu, internal coordinates (log10 coupling, q/sqrt(mu));
    displayed as (coupling, q/sqrt(mu)).
    """
    name: str = "q-mu"
    mu: float | None = None

    def __post_init__(self):
        if self.name not in ("q-mu", "g-qs"):
            raise ConfigError(f"unknown plane {self.name!r}")
        if self.name == "g-qs" and not (self.mu and self.mu > 0):
            raise ConfigError("the g-qs plane needs a fixed mu > 0")

    def params(self, template: ModelParams, u, v) -> ModelParams:
        if self.name == "q-mu":
            return template.with_(q=float(u), mu=float(v))
        p = template.with_(mu=self.mu, q=float(v) * math.sqrt(self.mu))
        return p.with_coupling(10.0 ** float(u))

    def to_display(self, u, v):
        return (u, v) if self.name == "q-mu" else (10.0 ** u, v)

    def from_display(self, x, y):
        return (x, y) if self.name == "q-mu" else (math.log10(x), y)

    @property
    def labels(self):
        return ("q", "mu") if self.name == "q-mu" else ("g", "q_over_sqrt_mu")


# -- Newton ------------------------------------------------------------------

def _jac_rel(kind):
    # residuals built from second differences are noisier; difference them coarser
    return 1e-4 if kind is K.SVI_II else 1e-6


def _typ(x, floor=1e-12):
    return np.maximum(np.abs(x), floor)


def _jacobian(fun, x, typ, rel=1e-6):
    f0 = fun(x)
    J = np.empty((len(f0), len(x)))
    for j in range(len(x)):
        h = rel * typ[j]
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (fun(xp) - fun(xm)) / (2 * h)
    return f0, J


def newton(fun, x0, typ=None, step_tol=1e-11, res_tol=1e-9, max_iter=25, rel=1e-6):
    """Newton's method with a finite-difference Jacobian and backtracking.

    Convergence needs a relative step below ``step_tol`` and a residual below
    ``res_tol`` times the residual's sensitivity scale max_j |dF/dx_j| typ_j.
    Returns (x, residual_norm, scaled_residual).
    """
    x = np.array(x0, dtype=float)
    typ = _typ(x, 1e-8) if typ is None else np.asarray(typ, dtype=float)
    best = None
    for _ in range(max_iter):
        f, J = _jacobian(fun, x, typ, rel)
        if not np.all(np.isfinite(J)) or not np.all(np.isfinite(f)):
            raise CorrectorDivergence("non-finite residual in Newton iteration")
        dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        fn = np.max(np.abs(f))
        scale = max(np.max(np.abs(J) * typ[None, :]), 1e-300)
        lam = 1.0
        for _ in range(6):
            trial = x + lam * dx
            try:
                ft = fun(trial)
            except (NegativeAmplitude, DerivativeStencilFailure):
                ft = None
            if ft is not None and np.all(np.isfinite(ft)) and np.max(np.abs(ft)) <= max(fn, 1e-300) * 1.5:
                break
            lam *= 0.5
        else:
            # no descent left: accept if already at the noise floor
            if fn <= 10 * res_tol * scale:
                return x, fn, fn / scale
            raise CorrectorDivergence("line search failed")
        x = trial
        res = np.max(np.abs(ft))
        if np.max(np.abs(lam * dx) / typ) < step_tol and res <= res_tol * scale:
            return x, res, res / scale
        best = (res, x) if best is None or res < best[0] else best
    # stagnation from rounding noise in the residual
    if best is not None and best[0] <= 10 * res_tol * scale:
        return best[1], best[0], best[0] / scale
    res = np.max(np.abs(fun(x)))
    raise CorrectorDivergence(f"Newton did not converge (residual {res:.3g})")


# -- curves --------------------------------------------------------------------

@dataclass
class BoundaryCurve:
    kind: InstabilityKind
    plane: Plane
    template: ModelParams
    points: list = field(default_factory=list)    # internal (u, v)
    aux: list = field(default_factory=list)       # per-point auxiliary unknowns
    info: list = field(default_factory=list)      # per-point dict(k, l, theta, freq, residual)
    stop_reason: str = ""

    def display_points(self):
        return np.array([self.plane.to_display(u, v) for u, v in self.points]).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    def params_at(self, i) -> ModelParams:
        return self.plane.params(self.template, *self.points[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        a, b = self.plane.labels
        w.writerow(["kind", a, b, "k", "l", "theta", "freq"])
        for (x, y), inf in zip(self.display_points(), self.info):
            w.writerow([self.kind.value, repr(float(x)), repr(float(y)), repr(inf["k"]),
                        repr(inf["l"]), repr(inf["theta"]), repr(inf["freq"])])
        return buf.getvalue()

    def to_json(self) -> str:
        a, b = self.plane.labels
        pts = self.display_points()
        return json.dumps({
            "kind": self.kind.value, "plane": self.plane.name, "stop_reason": self.stop_reason,
            "points": [{a: float(x), b: float(y), **inf} for (x, y), inf in zip(pts, self.info)],
        }, indent=1)


def _point_info(kind, params, aux, opts):
    inf = dict(k=0.0, l=0.0, theta=0.0, freq=0.0)
    if kind in (K.SVI_I, K.OSV) and len(aux):
        th = float(aux[0])
        _, w = polar_limit(params, np.array([th]), opts)
        inf.update(k=math.cos(th), l=math.sin(th), theta=th, freq=float(w[0]))
    elif kind is K.ZIGZAG:
        inf.update(l=1.0, theta=HALF_PI)
    elif kind is K.ECKHAUS:
        inf.update(k=1.0)
    elif kind is K.SVI_II:
        inf.update(k=float(aux[0]))
    elif kind is K.CROSS_ROLL:
        top = _top(params, *aux)
        inf.update(k=float(aux[0]), l=float(aux[1]), theta=math.atan2(aux[1], aux[0]),
                   freq=float(abs(top.imag)))
    return inf


def initial_aux(kind, params: ModelParams, opts=DEFAULT_OPTIONS):
    """Starting values for the auxiliary unknowns from a coarse scan."""
    if n_aux(kind, params) == 0:
        return np.array([])
    if kind in (K.SVI_I, K.OSV):
        th = np.linspace(0.01, HALF_PI - 0.01, 400)
        s, w = polar_limit(params, th, opts)
        if kind is K.OSV:
            s = np.where(w > 1e-8, s, -np.inf)
        return np.array([th[np.argmax(s)]])
    if kind is K.SVI_II:
        ks = np.logspace(-6, math.log10(0.3), 600)
        s = all_roots(params, ks, np.zeros_like(ks))[..., 0].real
        return np.array([ks[np.argmax(s)]])
    from .growth_field import find_cr_max

    k, l, _, _ = find_cr_max(params)
    return np.array([k, l])


def solve_point(kind, template: ModelParams, plane: Plane, fixed, value, guess, aux=None,
                opts=DEFAULT_OPTIONS, res_tol=1e-9):
    """Solve the condition with one plane coordinate held fixed.

    ``fixed`` is 'u' or 'v' (internal coordinates); ``guess`` is the free
    coordinate's starting value.  Returns (u, v, aux).
    """
    def assemble(free, a):
        return (value, free) if fixed == "u" else (free, value)

    if aux is None:
        aux = initial_aux(kind, plane.params(template, *assemble(guess, ())), opts)
    aux = np.atleast_1d(np.asarray(aux, dtype=float))

    def fun(x):
        u, v = assemble(x[0], None)
        return condition_residual(kind, plane.params(template, u, v), x[1:], opts)

    x0 = np.concatenate([[guess], aux])
    x, _, _ = newton(fun, x0, res_tol=res_tol, rel=_jac_rel(kind))
    u, v = assemble(x[0], None)
    return u, v, x[1:]


def indicator(kind, params: ModelParams, opts=DEFAULT_OPTIONS):
    """Scalar that is positive where ``kind`` is unstable at ``params``."""
    if kind is K.EXISTENCE:
        return mu_existence(params.q) - params.mu
    if kind is K.ECKHAUS:
        return float(polar_limit(params, np.array([0.0]), opts)[0][0])
    if kind is K.ZIGZAG:
        return float(polar_limit(params, np.array([HALF_PI]), opts)[0][0])
    if kind is K.SVI_I and is_stress_free(params):
        return float(condition_residual(kind, params, (), opts)[0])
    if kind is K.SVI_I:
        th = np.linspace(0.0, HALF_PI, 721)
        return float(np.max(polar_limit(params, th, opts)[0]))
    if kind is K.OSV:
        th = np.linspace(0.0, HALF_PI, 721)
        s, w = polar_limit(params, th, opts)
        osc = w > 1e-8
        return float(np.max(s[osc])) if osc.any() else -1.0
    if kind is K.SVI_II:
        ks = np.logspace(-6, math.log10(0.3), 600)
        sig = all_roots(params, ks, np.zeros_like(ks))[..., 0].real
        i = int(np.argmax(sig))
        if i == 0 or i == len(ks) - 1:
            return -1.0
        return float(condition_residual(kind, params, [ks[i]], opts)[1])
    if kind is K.CROSS_ROLL:
        from .errors import NoInteriorMax
        from .growth_field import find_cr_max

        try:
            return float(find_cr_max(params)[2])
        except NoInteriorMax:
            return -1.0
    raise ConfigError(f"no indicator for {kind.name}")


def seed_on_line(kind, template: ModelParams, plane: Plane, u, v_lo, v_hi, n=60,
                 opts=DEFAULT_OPTIONS, scale="linear"):
    """First sign change of :func:`indicator` along v at fixed u, then corrected.

    Arguments are display coordinates.  Returns (u, v, aux) in internal
    coordinates, ready to pass to :func:`trace_boundary` as a seed.
    """
    from scipy.optimize import brentq

    kind = InstabilityKind.parse(kind) if not isinstance(kind, InstabilityKind) else kind
    ui, _ = plane.from_display(u, v_lo)
    grid = (np.geomspace(v_lo, v_hi, n) if scale == "log" else np.linspace(v_lo, v_hi, n))

    def ind(v):
        try:
            return indicator(kind, plane.params(template, ui, v), opts)
        except NegativeAmplitude:
            return np.nan

    vals = np.array([ind(v) for v in grid])
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b) and a != 0:
            vs = brentq(ind, grid[i], grid[i + 1], xtol=1e-14 * max(abs(grid[i]), 1e-300))
            try:
                u_, v_, a_ = solve_point(kind, template, plane, "u", ui, vs, None, opts)
            except NumericalFailure:
                continue
            if _in_range(kind, a_):
                return u_, v_, a_
    raise NoCrossing(f"no {kind.name} sign change on the line u={u!r}")


def _in_range(kind, aux):
    if kind in (K.SVI_I, K.OSV) and len(aux):
        return 1e-4 < aux[0] < HALF_PI - 1e-4
    if kind is K.SVI_II:
        return aux[0] > 0
    if kind is K.CROSS_ROLL:
        return math.hypot(*aux) > DEFAULT_OPTIONS.min_cr_radius
    return True


def trace_boundary(kind, template: ModelParams, seed, plane: Plane | None = None,
                   bounds=None, direction=1, aux=None, h0=1e-3, h_min=1e-5, h_max=1e-2,
                   max_steps=500, scale=(1.0, 1.0), tol=1e-9, opts=DEFAULT_OPTIONS,
                   seed_fixed="u", rel_cap=0.25) -> BoundaryCurve:
    """Pseudo-arclength continuation of a boundary.

    seed: display coordinates of a point near the curve; it is first corrected
    with the ``seed_fixed`` coordinate held.  bounds: (u_min, u_max, v_min,
    v_max) in display coordinates.  ``direction`` picks the sense of travel
    along increasing (+1) or decreasing (-1) first coordinate.  Step sizes are
    measured in plane units divided by ``scale``.
    """
    plane = plane or Plane()
    kind = InstabilityKind.parse(kind) if not isinstance(kind, InstabilityKind) else kind
    u0, v0 = plane.from_display(*seed)
    if bounds is not None:
        lo = plane.from_display(bounds[0], bounds[2])
        hi = plane.from_display(bounds[1], bounds[3])
        box = (lo[0], hi[0], lo[1], hi[1])
    else:
        box = (-np.inf, np.inf, -np.inf, np.inf)
    sc = np.asarray(scale, dtype=float)

    if seed_fixed == "u":
        u, v, a = solve_point(kind, template, plane, "u", u0, v0, aux, opts, tol)
    else:
        u, v, a = solve_point(kind, template, plane, "v", v0, u0, aux, opts, tol)
    curve = BoundaryCurve(kind, plane, template)

    def F(x):
        return condition_residual(kind, plane.params(template, x[0], x[1]), x[2:], opts)

    def record(x):
        p = plane.params(template, x[0], x[1])
        inf = _point_info(kind, p, x[2:], opts)
        inf["residual"] = float(np.max(np.abs(F(x))))
        curve.points.append((float(x[0]), float(x[1])))
        curve.aux.append([float(t) for t in x[2:]])
        curve.info.append(inf)

    x = np.concatenate([[u, v], a])
    record(x)

    def tangent(x, prev=None):
        typ = _typ(x, 1e-8)
        # difference steps follow the local magnitude so small mu stays above existence
        step = typ.copy()
        step[:2] = sc * 1e-2 + np.abs(x[:2])
        _, J = _jacobian(F, x, step, rel=_jac_rel(kind))
        typ[:2] = sc
        Js = J * typ[None, :]
        t = np.linalg.svd(Js)[2][-1] * typ
        t = t / np.linalg.norm(t[:2] / sc)
        if prev is not None:
            if np.dot(t[:2] / sc, prev[:2] / sc) < 0:
                t = -t
        elif t[0] * direction < 0:
            t = -t
        return t

    t = tangent(x)
    h = h0
    if rel_cap and plane.name == "q-mu":
        h = max(min(h, rel_cap * np.linalg.norm(x[:2] / sc)), h_min)
    for _ in range(max_steps):
        while True:
            pred = x + h * t
            x_prev = x

            def G(y):
                return np.concatenate([F(y), [np.dot((y[:2] - x_prev[:2]) / sc, t[:2] / sc) - h]])

            try:
                y, _, _ = newton(G, pred, typ=np.concatenate([sc * 1e-2 + np.abs(pred[:2]), _typ(pred[2:], 1e-8)]),
                                 res_tol=tol, max_iter=12, rel=_jac_rel(kind))
                ok = _in_range(kind, y[2:])
                if not ok:
                    curve.stop_reason = "auxiliary unknown left its range"
                    return curve
                # reject corrections that jumped to another branch
                if np.linalg.norm((y[:2] - x[:2]) / sc) > 3 * h:
                    raise CorrectorDivergence("corrector jumped")
                break
            except (NumericalFailure, np.linalg.LinAlgError) as exc:
                h *= 0.5
                if h < h_min:
                    if isinstance(exc, NegativeAmplitude):
                        curve.stop_reason = "reached the existence boundary"
                        return curve
                    if kind in (K.SVI_I, K.OSV) and min(x[2], HALF_PI - x[2]) < 0.1:
                        # the peak merges into an axis: tangency with the
                        # Eckhaus or zigzag curve
                        curve.stop_reason = "peak merged into an axis"
                        return curve
                    if kind is K.SVI_II and x[2] < 0.05:
                        curve.stop_reason = "k_max collapsed onto the Eckhaus point"
                        return curve
                    curve.stop_reason = "step size underflow"
                    raise CorrectorDivergence(
                        f"corrector failed at {plane.to_display(*x[:2])}", partial=curve) from exc
        if not (box[0] <= y[0] <= box[1] and box[2] <= y[1] <= box[3]):
            curve.stop_reason = "left the plane bounds"
            return curve
        x = y
        record(x)
        try:
            t = tangent(x, t)
        except NegativeAmplitude:
            curve.stop_reason = "reached the existence boundary"
            return curve
        h = min(h * 1.5, h_max)
        if rel_cap and plane.name == "q-mu":
            # approach the degenerate origin of the (q, mu) plane geometrically
            h = max(min(h, rel_cap * np.linalg.norm(x[:2] / sc)), h_min)
    curve.stop_reason = "max steps"
    return curve


# -- crossings -----------------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    point: tuple          # display coordinates
    aux: tuple = ()
    degenerate: bool = False
    polished: bool = False


def _segments_intersect(P, Q):
    hits = []
    for i in range(len(P) - 1):
        p, r = P[i], P[i + 1] - P[i]
        for j in range(len(Q) - 1):
            q, s = Q[j], Q[j + 1] - Q[j]
            den = r[0] * s[1] - r[1] * s[0]
            if den == 0:
                continue
            d = q - p
            t = (d[0] * s[1] - d[1] * s[0]) / den
            w = (d[0] * r[1] - d[1] * r[0]) / den
            if 0 <= t <= 1 and 0 <= w <= 1:
                hits.append((i, j, p + t * r))
    return hits


def _closest_approach(P, Q):
    d = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=-1)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return i, j, d[i, j]


def find_crossing(c1: BoundaryCurve, c2: BoundaryCurve, touch_tol=None, opts=DEFAULT_OPTIONS) -> Crossing:
    """Intersection of two traced curves, polished by Newton on the joint residual."""
    if c1.plane != c2.plane:
        raise ConfigError("curves live in different planes")
    P = np.asarray(c1.points, dtype=float)
    Q = np.asarray(c2.points, dtype=float)
    if len(P) < 2 or len(Q) < 2:
        raise NoCrossing("curves need at least two points each")
    if c1.kind == c2.kind and P.shape == Q.shape and np.allclose(P, Q, rtol=1e-12, atol=0):
        return Crossing(tuple(c1.plane.to_display(*P[0])), degenerate=True)
    hits = _segments_intersect(P, Q)
    if hits:
        i, j, guess = hits[0]
    else:
        i, j, dist = _closest_approach(P, Q)
        span = max(np.ptp(P, axis=0).max(), np.ptp(Q, axis=0).max())
        if dist > (touch_tol if touch_tol is not None else 0.02 * span):
            raise NoCrossing("curves do not intersect")
        guess = 0.5 * (P[i] + Q[j])
    plane, tpl = c1.plane, c1.template
    kinds = {c1.kind, c2.kind}
    if K.ECKHAUS in kinds and kinds & {K.SVI_I, K.SVI_II}:
        def fun(x):
            return codim2_residual(plane.params(tpl, x[0], x[1]), opts)
        x0 = np.array(guess)
        n1 = 0
    else:
        a1 = np.asarray(c1.aux[i], dtype=float)
        a2 = np.asarray(c2.aux[j], dtype=float)
        n1 = len(a1)

        def fun(x):
            p = plane.params(tpl, x[0], x[1])
            return np.concatenate([condition_residual(c1.kind, p, x[2:2 + n1], opts),
                                   condition_residual(c2.kind, p, x[2 + n1:], opts)])
        x0 = np.concatenate([guess, a1, a2])
        if len(fun(x0)) != len(x0):
            return Crossing(tuple(plane.to_display(*guess)))
    try:
        x, _, _ = newton(fun, x0, typ=np.concatenate([np.abs(x0[:2]) + 1e-6, _typ(x0[2:], 1e-8)]))
    except NumericalFailure:
        return Crossing(tuple(plane.to_display(*guess)))
    return Crossing(tuple(plane.to_display(x[0], x[1])), tuple(float(t) for t in x[2:]),
                    polished=True)


def trace_both(kind, template: ModelParams, seed, plane: Plane | None = None, aux=None, **kw):
    """Trace away from ``seed`` in both senses and join the halves in order.

    A half that fails keeps its partial curve; the stop reasons of both
    halves are recorded as 'backward; forward'.
    """
    halves = []
    for d in (-1, 1):
        try:
            c = trace_boundary(kind, template, seed, plane, direction=d, aux=aux, **kw)
        except CorrectorDivergence as exc:
            if exc.partial is None:
                raise
            c = exc.partial
        halves.append(c)
    back, fwd = halves
    out = BoundaryCurve(fwd.kind, fwd.plane, template)
    out.points = back.points[::-1] + fwd.points[1:]
    out.aux = back.aux[::-1] + fwd.aux[1:]
    out.info = back.info[::-1] + fwd.info[1:]
    out.stop_reason = f"{back.stop_reason}; {fwd.stop_reason}"
    return out
