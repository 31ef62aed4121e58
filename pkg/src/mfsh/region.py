"""Point-wise stability classification and stable-region maps.

A stripe is stable when sigma_max < 0 on a probe set of wavevectors: the
eps-ring around the origin (through its polar limit), the two axes, a grid
over the cross-roll window refined by one local ascent, and the unit circle
centred at (1+q, 0).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize
from skimage import measure

from .classifiers import InstabilityKind
from .errors import ConfigError, NegativeAmplitude
from .model import ModelParams, mu_existence
from .series import numeric_series
from .stability import growth
from .tracer import DEFAULT_OPTIONS, HALF_PI, Plane, is_stress_free, polar_limit

K = InstabilityKind

PROBE_WINDOW = (0.0, 1.0, 0.0, 1.0)
OSC_TOL = 1e-8


@dataclass(frozen=True)
class ProbeOptions:
    n_theta: int = 181
    axis_k: tuple = (1e-3, 1.0)
    n_axis: int = 200
    window: tuple = PROBE_WINDOW
    n_window: int = 48
    min_radius: float = 0.02
    n_circle: int = 64
    annulus_exclude: float = 0.5


DEFAULT_PROBES = ProbeOptions()


@dataclass
class Classification:
    exists: bool
    unstable: dict = field(default_factory=dict)    # kind -> bool
    sigma: dict = field(default_factory=dict)       # kind -> growth estimate

    @property
    def stable(self):
        return self.exists and not any(self.unstable.values())

    def summary(self):
        if not self.exists:
            return "stripe does not exist (mu below the existence boundary)"
        names = {K.ECKHAUS: "Eckhaus", K.ZIGZAG: "zigzag", K.SVI_I: "SVI", K.OSV: "OSV",
                 K.CROSS_ROLL: "CR", K.ANNULUS: "annulus"}
        parts = [f"{names[k]}: {'unstable' if v else 'stable'}" for k, v in self.unstable.items()]
        return ", ".join(parts)

    def binding(self):
        """Unstable kinds joined with '+', or 'stable'."""
        if not self.exists:
            return "existence"
        bad = [k.value for k, v in self.unstable.items() if v]
        return "+".join(bad) if bad else "stable"


def _interior_peaks(s):
    inner = s[1:-1]
    return np.flatnonzero((inner >= s[:-2]) & (inner >= s[2:])) + 1


def classify(params: ModelParams, probes=DEFAULT_PROBES, opts=DEFAULT_OPTIONS) -> Classification:
    if params.mu < mu_existence(params.q):
        return Classification(False)
    un, sig = {}, {}
    # long waves through the polar limit
    th = np.linspace(0.0, HALF_PI, probes.n_theta)
    s, w = polar_limit(params, th, opts)
    un[K.ECKHAUS], sig[K.ECKHAUS] = bool(s[0] > 0), float(s[0])
    un[K.ZIGZAG], sig[K.ZIGZAG] = bool(s[-1] > 0), float(s[-1])
    peaks = _interior_peaks(s)
    real = [i for i in peaks if w[i] <= OSC_TOL]
    osc = [i for i in peaks if w[i] > OSC_TOL]
    svi = max((s[i] for i in real), default=-np.inf)
    if is_stress_free(params):
        # O(eps) real growth off the axes
        svi = max(svi, numeric_series(params)[0].b)
    # Eckhaus-unstable side: the on-axis maximum turns into a saddle
    ks = np.geomspace(*probes.axis_k, probes.n_axis)
    sk, _ = growth(params, ks, np.zeros_like(ks))
    i = int(np.argmax(sk))
    if 0 < i < len(ks) - 1 and sk[i] > 0:
        h = 1e-3 * ks[i]
        up, _ = growth(params, np.array([ks[i]]), np.array([h]))
        if up[0] > sk[i]:
            svi = max(svi, float(up[0] - sk[i]) / h ** 2)
    un[K.SVI_I], sig[K.SVI_I] = bool(svi > 0), float(svi)
    osv = max((s[i] for i in osc), default=-np.inf)
    un[K.OSV], sig[K.OSV] = bool(osv > 0), float(osv)
    # short waves: off-axis local maxima of the real growth rate on a grid
    # over the window, the best one refined by one ascent.  Maxima on l = 0
    # belong to the Eckhaus lobe; complex growth off the origin is the far
    # tail of the OSV lobe.
    k0, k1, l0, l1 = probes.window
    kk, ll = np.meshgrid(np.linspace(k0, k1, probes.n_window), np.linspace(l0, l1, probes.n_window))
    sg, wg = growth(params, kk, ll)
    far = np.hypot(kk, ll) > max(probes.min_radius, 0.1)
    unstable_any = bool(np.any(sg[far] > 0))
    sr = np.where(np.abs(wg) <= OSC_TOL, sg, -np.inf)
    peak = (sr == ndimage.maximum_filter(sr, size=3, mode="nearest")) & np.isfinite(sr)
    peak &= far & (ll > l0)
    best = -np.inf
    if peak.any():
        j = np.flatnonzero(peak.ravel())[np.argmax(sr[peak])]
        x0 = np.array([kk.ravel()[j], ll.ravel()[j]])
        best = float(sr.ravel()[j])
    if best <= 0 and peak.any():
        # the ascent only matters when the grid has not already decided
        res = minimize(lambda x: -float(growth(params, np.array([x[0]]), np.array([x[1]]))[0][0]),
                       x0, method="Nelder-Mead", bounds=[(k0, k1), (l0, l1)],
                       options=dict(xatol=1e-8, fatol=1e-14))
        if math.hypot(*res.x) > probes.min_radius and res.x[1] > 1e-6:
            best = max(best, -float(res.fun))
    un[K.CROSS_ROLL], sig[K.CROSS_ROLL] = bool(best > 0), best
    if unstable_any and not any(un.values()):
        # positive growth the named probes do not account for
        un[K.CROSS_ROLL] = True
    # unit circle about (1+q, 0)
    phi = np.linspace(0.0, math.pi, probes.n_circle)
    ck, cl = 1.0 + params.q + np.cos(phi), np.sin(phi)
    keep = np.hypot(ck, cl) > probes.annulus_exclude
    sc, _ = growth(params, ck[keep], cl[keep])
    un[K.ANNULUS], sig[K.ANNULUS] = bool(np.mean(sc > 0) >= 0.5), float(np.max(sc))
    return Classification(True, un, sig)


def is_stable(params: ModelParams, probes=DEFAULT_PROBES, opts=DEFAULT_OPTIONS) -> bool:
    try:
        return classify(params, probes, opts).stable
    except NegativeAmplitude:
        return False


@dataclass
class StableRegion:
    plane: Plane
    u_axis: np.ndarray      # display coordinates
    v_axis: np.ndarray
    mask: np.ndarray        # shape (len(v_axis), len(u_axis)), True where stable
    labels: np.ndarray      # binding kinds per node
    boundaries: list = field(default_factory=list)   # (label, polyline in display coords)

    def to_csv(self):
        a, b = self.plane.labels
        lines = [f"{a},{b},stable,binding"]
        for i, v in enumerate(self.v_axis):
            for j, u in enumerate(self.u_axis):
                lines.append(f"{float(u)!r},{float(v)!r},{int(self.mask[i, j])},{self.labels[i, j]}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self):
        a, b = self.plane.labels
        return {"plane": self.plane.name, a: [float(x) for x in self.u_axis],
                b: [float(x) for x in self.v_axis],
                "stable": self.mask.astype(int).tolist(),
                "boundaries": [{"binding": lab, "points": [[float(x), float(y)] for x, y in pts]}
                               for lab, pts in self.boundaries]}


def stable_region(template: ModelParams, plane: Plane, bounds, resolution=(41, 41),
                  probes=DEFAULT_PROBES, opts=DEFAULT_OPTIONS, threads=1, log_u=None) -> StableRegion:
    """Stability mask over a display-coordinate box (u0, u1, v0, v1).

    In the g-qs plane the coupling axis is sampled logarithmically by default.
    """
    nu, nv = (resolution, resolution) if np.isscalar(resolution) else resolution
    u0, u1, v0, v1 = bounds
    log_u = (plane.name == "g-qs") if log_u is None else log_u
    if log_u and not (u0 > 0 and u1 > 0):
        raise ConfigError("logarithmic axis needs positive bounds")
    u_axis = np.geomspace(u0, u1, nu) if log_u else np.linspace(u0, u1, nu)
    v_axis = np.linspace(v0, v1, nv)

    def row(v):
        out = []
        for u in u_axis:
            p = plane.params(template, *plane.from_display(u, v))
            try:
                c = classify(p, probes, opts)
            except NegativeAmplitude:
                c = Classification(False)
            out.append((c.stable, c.binding()))
        return out

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, v_axis))
    else:
        rows = [row(v) for v in v_axis]
    mask = np.array([[s for s, _ in r] for r in rows], dtype=bool)
    labels = np.array([[b for _, b in r] for r in rows], dtype=object)
    boundaries = []
    for path in measure.find_contours(mask.astype(float), 0.5):
        pts = np.column_stack([np.interp(path[:, 1], np.arange(nu), u_axis),
                               np.interp(path[:, 0], np.arange(nv), v_axis)])
        # label each vertex by the nearest unstable node
        tags = []
        for r, c in path:
            cand = [(int(a), int(b)) for a in (math.floor(r), math.ceil(r))
                    for b in (math.floor(c), math.ceil(c)) if not mask[int(a), int(b)]]
            tags.append(labels[cand[0]] if cand else "unknown")
        start = 0
        for i in range(1, len(tags) + 1):
            if i == len(tags) or tags[i] != tags[start]:
                boundaries.append((tags[start], pts[start:i + 1] if i < len(tags) else pts[start:i]))
                start = i
    return StableRegion(plane, u_axis, v_axis, mask, labels, boundaries)


def any_stable_q(template: ModelParams, q_values, probes=DEFAULT_PROBES, opts=DEFAULT_OPTIONS):
    """True if some q of ``q_values`` gives stable stripes at the template's other parameters."""
    return any(is_stable(template.with_(q=float(q)), probes, opts) for q in q_values)
