"""Dense (k, l) growth-rate maps and their features.

Scans cover a window of the half plane l >= 0 (the spectrum is even in k and
in l).  Features are extracted from the finished field: positive components
by flood fill, zero contours by marching squares, the annulus test against
the unit circle centred at (1+q, 0), and an oscillation flag at the maximum.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize
from skimage import measure

from .errors import NoInteriorMax
from .model import ModelParams
from .stability import GrowthRateField, growth

CR_WINDOW = (0.0, 0.3, 0.0, 0.6)
OSC_TOL = 1e-8
ANNULUS_BAND = 0.15
# the unit circle passes next to the origin, where the long-wave
# instabilities live; only band points farther out than this count
ANNULUS_EXCLUDE = 0.5


def scan(params: ModelParams, window=CR_WINDOW, resolution=128, threads=1) -> GrowthRateField:
    """sigma_max and omega on a regular grid over ``window`` = (k0, k1, l0, l1)."""
    nk, nl = (resolution, resolution) if np.isscalar(resolution) else resolution
    k_axis = np.linspace(window[0], window[1], int(nk))
    l_axis = np.linspace(window[2], window[3], int(nl))
    uniq, inverse = np.unique(np.abs(l_axis), return_inverse=True)
    kk, ll = np.meshgrid(k_axis, uniq)
    if threads > 1 and len(uniq) > 1:
        chunks = np.array_split(np.arange(len(uniq)), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda rows: growth(params, kk[rows], ll[rows]), chunks))
        s = np.concatenate([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts])
    else:
        s, w = growth(params, kk, ll)
    return GrowthRateField(k_axis, l_axis, s[inverse], w[inverse])


@dataclass
class FieldFeatures:
    global_max: tuple                      # (k, l, sigma, omega)
    zero_contours: list = field(default_factory=list)
    n_positive_components: int = 0
    annulus_flag: bool = False
    oscillatory_flag: bool = False

    def to_json_dict(self):
        return {
            "global_max": [float(v) for v in self.global_max],
            "n_positive_components": int(self.n_positive_components),
            "annulus_flag": bool(self.annulus_flag),
            "oscillatory_flag": bool(self.oscillatory_flag),
            "zero_contours": [[[float(a), float(b)] for a, b in c] for c in self.zero_contours],
        }


def _index_to_coords(path, k_axis, l_axis):
    rows, cols = path[:, 0], path[:, 1]
    k = np.interp(cols, np.arange(len(k_axis)), k_axis)
    l = np.interp(rows, np.arange(len(l_axis)), l_axis)
    return np.column_stack([k, l])


def contours(fld: GrowthRateField, level=0.0):
    """Marching-squares contours of sigma at ``level``, in (k, l) coordinates."""
    paths = measure.find_contours(fld.sigma, level)
    return [_index_to_coords(p, fld.k_axis, fld.l_axis) for p in paths]


def annulus_test(fld: GrowthRateField, q, band=ANNULUS_BAND, exclude=ANNULUS_EXCLUDE,
                 n_bins=36, min_cover=0.5):
    """Positive sigma along most of the unit circle centred at (1+q, 0).

    Band points (within ``band`` of the circle, farther than ``exclude`` from
    the origin) are binned by their angle about the centre; the flag is set
    when at least ``min_cover`` of the occupied bins hold a positive value.
    A single lobe that merely touches the band does not count.
    """
    kk, ll = np.meshgrid(fld.k_axis, fld.l_axis)
    dk, dl = kk - (1.0 + q), ll
    dist = np.abs(np.hypot(dk, dl) - 1.0)
    mask = (dist <= band) & (np.hypot(kk, ll) > exclude)
    if not mask.any():
        return False
    phi = np.arctan2(np.abs(dl[mask]), dk[mask])
    bins = np.minimum((phi / np.pi * n_bins).astype(int), n_bins - 1)
    pos = fld.sigma[mask] > 0
    occupied = np.unique(bins)
    covered = np.unique(bins[pos])
    return bool(len(covered) >= min_cover * len(occupied))


def features(fld: GrowthRateField, params: ModelParams, band=ANNULUS_BAND,
             exclude=ANNULUS_EXCLUDE, osc_tol=OSC_TOL) -> FieldFeatures:
    s = fld.sigma
    i, j = np.unravel_index(np.argmax(s), s.shape)
    gmax = (float(fld.k_axis[j]), float(fld.l_axis[i]), float(s[i, j]), float(fld.omega[i, j]))
    # 8-connected flood fill of the positive set
    _, n = ndimage.label(s > 0, structure=np.ones((3, 3), dtype=int))
    return FieldFeatures(
        global_max=gmax,
        zero_contours=contours(fld, 0.0),
        n_positive_components=int(n),
        annulus_flag=annulus_test(fld, params.q, band, exclude),
        oscillatory_flag=bool(abs(gmax[3]) > osc_tol),
    )


def find_cr_max(params: ModelParams, window=CR_WINDOW, n_starts=5, min_radius=0.02,
                cell_samples=8):
    """Interior local maximum of sigma_max away from the origin.

    The window is cut into n_starts x n_starts cells; the best sample of each
    cell seeds a bounded Nelder-Mead ascent.  Ascents that end within
    ``min_radius`` of the origin or on the outer window edge are discarded.
    Returns (k, l, sigma, omega) of the highest remaining maximum.
    """
    k0, k1, l0, l1 = window
    n = n_starts * cell_samples
    ks = np.linspace(k0, k1, n)
    ls = np.linspace(l0, l1, n)
    kk, ll = np.meshgrid(ks, ls)
    s, _ = growth(params, kk, ll)
    s = np.where(np.hypot(kk, ll) > min_radius, s, -np.inf)

    def neg(x):
        return -float(growth(params, np.array([x[0]]), np.array([x[1]]))[0][0])

    bounds = [(k0, k1), (l0, l1)]
    found = []
    for a in range(n_starts):
        for b in range(n_starts):
            cell = s[a * cell_samples:(a + 1) * cell_samples, b * cell_samples:(b + 1) * cell_samples]
            if not np.isfinite(cell).any():
                continue
            ia, ib = np.unravel_index(np.argmax(cell), cell.shape)
            x0 = np.array([ks[b * cell_samples + ib], ls[a * cell_samples + ia]])
            res = minimize(neg, x0, method="Nelder-Mead", bounds=bounds,
                           options=dict(xatol=1e-10, fatol=1e-14, maxiter=4000))
            k, l = res.x
            span = max(k1 - k0, l1 - l0)
            edge = (k1 - k < 1e-6 * span) or (l1 - l < 1e-6 * span)
            if math.hypot(k, l) <= min_radius or edge:
                continue
            found.append((-res.fun, k, l))
    if not found:
        raise NoInteriorMax("no interior maximum of sigma_max away from the origin")
    sig, k, l = max(found)
    _, w = growth(params, np.array([k]), np.array([l]))
    return float(k), float(l), float(sig), float(w[0])


# -- SVG ----------------------------------------------------------------------

def to_svg(fld: GrowthRateField, width=480, height=480, n_levels=4) -> str:
    """Self-contained contour plot: zero contour black, positive levels filled red."""
    k0, k1 = float(fld.k_axis[0]), float(fld.k_axis[-1])
    l0, l1 = float(fld.l_axis[0]), float(fld.l_axis[-1])
    pad = 40
    sx = (width - 2 * pad) / max(k1 - k0, 1e-300)
    sy = (height - 2 * pad) / max(l1 - l0, 1e-300)

    def pts(c):
        return " ".join(f"{pad + (k - k0) * sx:.2f},{height - pad - (l - l0) * sy:.2f}" for k, l in c)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="white" stroke="gray"/>']
    smax = float(np.max(fld.sigma))
    if smax > 0:
        for lev in np.linspace(0, smax, n_levels + 2)[1:-1]:
            for c in contours(fld, lev):
                out.append(f'<polyline points="{pts(c)}" fill="red" fill-opacity="0.25" '
                           'stroke="red" stroke-width="1"/>')
    for c in contours(fld, 0.0):
        out.append(f'<polyline points="{pts(c)}" fill="none" stroke="black" stroke-width="2"/>')
    out.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="14">k</text>')
    out.append(f'<text x="12" y="{height / 2}" font-size="14">l</text>')
    out.append(f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{k0:g}</text>')
    out.append(f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11" '
               f'text-anchor="end">{k1:g}</text>')
    out.append(f'<text x="{pad - 4}" y="{pad + 4}" font-size="11" text-anchor="end">{l1:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
