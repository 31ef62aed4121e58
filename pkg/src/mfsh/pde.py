"""Pseudospectral integrator for both models, used as an independent oracle.

Periodic box Lx x Ly with Lx = 2 pi M / (1+q), so the stripe occupies Fourier
index M.  The stiff linear operators are integrated exactly with the
exponential time-differencing scheme ETD2 (exponential Euler on the first
step); advection, the projected cubic and the vorticity forcing are explicit.
ETD keeps every steady state of the continuous equations as an exact fixed
point of the map, which is what the stripe steadiness check needs.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import BlowUp, CommensurabilityError, ConfigError, NonlinearContamination
from .model import Model, ModelParams, stripe_beta
from .stability import build_matrix

OVERFLOW = 1e100
MAGIC = b"MFSH"


@dataclass
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float
    kx: np.ndarray = field(init=False, repr=False)
    ky: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kx = 2 * np.pi * sfft.rfftfreq(self.nx, d=self.lx / self.nx)
        ky = 2 * np.pi * sfft.fftfreq(self.ny, d=self.ly / self.ny)
        self.kx, self.ky = np.meshgrid(kx, ky)
        self.k2 = self.kx ** 2 + self.ky ** 2

    @property
    def shape(self):
        return (self.ny, self.nx)

    def index(self, k, l):
        """Fourier indices (iy, ix) of wavevector (k, l); raises if not on the lattice."""
        m = k * self.lx / (2 * np.pi)
        n = l * self.ly / (2 * np.pi)
        mi, ni = round(m), round(n)
        if abs(m - mi) > 1e-8 * max(1.0, abs(m)) or abs(n - ni) > 1e-8 * max(1.0, abs(n)):
            raise CommensurabilityError(f"wavevector ({k!r}, {l!r}) is not commensurate with the box")
        if mi < 0:
            raise CommensurabilityError("use k >= 0 (the half-spectrum stores k >= 0)")
        if mi > self.nx // 2 or abs(ni) > self.ny // 2:
            raise CommensurabilityError("wavevector beyond the grid's Nyquist limit")
        return ni % self.ny, mi


def default_points(length, alpha):
    """Smallest even grid size whose Nyquist wavenumber is at least 1.5 alpha."""
    n = int(math.ceil(3.0 * alpha * length / (2 * np.pi)))
    n += n % 2
    return max(n, 8)


def make_grid(params: ModelParams, M=32, ly=None, nx=None, ny=None) -> Grid:
    if M < 1:
        raise ConfigError("M must be a positive integer")
    lx = 2 * np.pi * M / (1.0 + params.q)
    ly = lx if ly is None else float(ly)
    nx = nx or default_points(lx, params.alpha)
    ny = ny or default_points(ly, params.alpha)
    return Grid(int(nx), int(ny), lx, ly)


@dataclass
class SpectralState:
    psi_hat: np.ndarray
    omega_hat: np.ndarray | None     # model 1 only
    grid: Grid
    t: float = 0.0

    def copy(self):
        return SpectralState(self.psi_hat.copy(), None if self.omega_hat is None else self.omega_hat.copy(),
                             self.grid, self.t)

    def psi(self):
        return sfft.irfft2(self.psi_hat, s=self.grid.shape, norm="forward")


def _phi(z):
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, elementwise and stable."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    p1 = np.where(small, 1 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120,
                  np.expm1(zs) / zs)
    p2 = np.where(small, 0.5 + z / 6 + z * z / 24 + z ** 3 / 120 + z ** 4 / 720,
                  (np.expm1(zs) - zs) / zs ** 2)
    return p1, p2


class Integrator:
    """ETD2 stepper for one parameter set and grid."""

    def __init__(self, params: ModelParams, grid: Grid, dt: float, workers=1):
        if not dt > 0:
            raise ConfigError("dt must be positive")
        self.p, self.g, self.dt, self.workers = params, grid, float(dt), workers
        k2 = grid.k2
        self.keep = k2 <= params.alpha ** 2 * (1 + 1e-12)        # P_alpha, inclusive
        self.filt = np.exp(-params.gamma ** 2 * k2)
        self.inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
        lin_psi = params.mu - (1.0 - k2) ** 2
        self.ops = [self._etd(lin_psi)]
        if params.model is Model.ONE:
            self.ops.append(self._etd(-params.pr * (k2 + params.c2)))
        self._prev = None

    def _etd(self, L):
        z = L * self.dt
        p1, p2 = _phi(z)
        return np.exp(z), self.dt * p1, self.dt * (p1 + p2), self.dt * p2

    def _ifft(self, a):
        return sfft.irfft2(a, s=self.g.shape, norm="forward", workers=self.workers)

    def _fft(self, a):
        return sfft.rfft2(a, norm="forward", workers=self.workers)

    def forcing_hat(self, psi_hat):
        """Fourier transform of [grad(lap psi) x grad psi] . z."""
        g = self.g
        lap = -g.k2 * psi_hat
        px, py = self._ifft(1j * g.kx * psi_hat), self._ifft(1j * g.ky * psi_hat)
        lx, ly = self._ifft(1j * g.kx * lap), self._ifft(1j * g.ky * lap)
        return self._fft(lx * py - ly * px), (px, py)

    def nonlinear(self, psi_hat, omega_hat):
        g, p = self.g, self.p
        cross, (px, py) = self.forcing_hat(psi_hat)
        if p.model is Model.TWO:
            omega_hat = -p.g * self.filt * cross
            n_omega = None
        else:
            n_omega = -p.g_m * self.filt * cross
        zeta = omega_hat * self.inv_k2
        ux, uy = self._ifft(1j * g.ky * zeta), self._ifft(-1j * g.kx * zeta)
        psi = self._ifft(psi_hat)
        n_psi = -self._fft(ux * px + uy * py) - self.keep * self._fft(psi ** 3)
        return n_psi, n_omega

    def step(self, state: SpectralState) -> SpectralState:
        fields = [state.psi_hat] + ([state.omega_hat] if self.p.model is Model.ONE else [])
        n_psi, n_omega = self.nonlinear(state.psi_hat, state.omega_hat)
        nl = [n_psi] + ([n_omega] if self.p.model is Model.ONE else [])
        out = []
        for u, n, (e, h1, ha, hb), i in zip(fields, nl, self.ops, range(len(fields))):
            if self._prev is None:
                out.append(e * u + h1 * n)
            else:
                out.append(e * u + ha * n - hb * self._prev[i])
        self._prev = nl
        for a in out:
            if not np.all(np.isfinite(a)) or np.max(np.abs(a)) > OVERFLOW:
                raise BlowUp(f"coefficients overflowed at t={state.t + self.dt!r}")
        return SpectralState(out[0], out[1] if len(out) > 1 else None, self.g, state.t + self.dt)


def step(state: SpectralState, params: ModelParams, dt, integrator: Integrator | None = None):
    """One time step; pass a persistent ``integrator`` to keep the multistep history."""
    integ = integrator or Integrator(params, state.grid, dt)
    return integ.step(state)


def stripe_state(params: ModelParams, grid: Grid) -> SpectralState:
    beta = stripe_beta(params).beta
    psi_hat = np.zeros((grid.ny, grid.nx // 2 + 1), dtype=complex)
    iy, ix = grid.index(1.0 + params.q, 0.0)
    # real field: the rfft half-spectrum stores only k >= 0
    psi_hat[iy, ix] = math.sqrt(beta)
    omega = np.zeros_like(psi_hat) if params.model is Model.ONE else None
    return SpectralState(psi_hat, omega, grid)


def zero_state(params: ModelParams, grid: Grid) -> SpectralState:
    psi_hat = np.zeros((grid.ny, grid.nx // 2 + 1), dtype=complex)
    return SpectralState(psi_hat, np.zeros_like(psi_hat) if params.model is Model.ONE else None, grid)


def noise_state(params: ModelParams, grid: Grid, amplitude, seed=0) -> SpectralState:
    rng = np.random.default_rng(seed)
    psi = amplitude * rng.standard_normal(grid.shape)
    st = zero_state(params, grid)
    st.psi_hat = sfft.rfft2(psi, norm="forward")
    return st


def run(state: SpectralState, params: ModelParams, dt, n_steps, workers=1, callback=None):
    integ = Integrator(params, state.grid, dt, workers)
    for i in range(n_steps):
        state = integ.step(state)
        if callback is not None:
            callback(i + 1, state)
    return state


def steadiness_residual(params: ModelParams, n_steps=1000, dt=0.1, M=4, workers=1):
    """max |psi(t) - psi(0)| / max |psi(0)| for the exact stripe over n_steps."""
    grid = make_grid(params, M=M, ly=2 * np.pi * M / (1.0 + params.q))
    s0 = stripe_state(params, grid)
    psi0 = s0.psi()
    worst = 0.0

    def cb(_, st):
        nonlocal worst
        worst = max(worst, float(np.max(np.abs(st.psi() - psi0))))

    run(s0, params, dt, n_steps, workers, cb)
    return worst / max(float(np.max(np.abs(psi0))), 1e-300)


# -- growth measurement ----------------------------------------------------------

@dataclass
class GrowthMeasurement:
    mode: tuple
    sigma_fit: float
    omega_fit: float
    fit_window: tuple
    residual: float
    times: np.ndarray = field(repr=False, default=None)
    amplitudes: np.ndarray = field(repr=False, default=None)   # columns A, B[, C] (complex)

    def to_csv(self) -> str:
        lines = ["t,abs_A,abs_B,abs_C,arg_A"]
        for t, row in zip(self.times, self.amplitudes):
            c = abs(row[2]) if len(row) > 2 else 0.0
            lines.append(f"{float(t)!r},{float(abs(row[0]))!r},{float(abs(row[1]))!r},"
                         f"{float(c)!r},{float(np.angle(row[0]))!r}")
        return "\n".join(lines) + "\n"


def leading_eigvec(params: ModelParams, k, l):
    mat = build_matrix(params, k, l)
    vals, vecs = np.linalg.eig(mat.entries)
    i = int(np.argmax(vals.real))
    v = vecs[:, i]
    return vals[i], v / np.max(np.abs(v[:2]))


def measure_growth(params: ModelParams, mode, amplitude=1e-6, t_max=200.0, dt=0.05, M=32,
                   ly=None, record_every=10, max_residual=1e-4, workers=1) -> GrowthMeasurement:
    """Seed the leading eigenvector of the four-mode perturbation and fit its growth.

    ``mode`` = (k, l) must sit on the box lattice: k a multiple of (1+q)/M and
    l a multiple of 2 pi / Ly.  ``amplitude`` is relative to the stripe
    amplitude sqrt(beta).
    """
    k, l = float(mode[0]), float(mode[1])
    if k < 0:
        k, l = -k, -l
    if ly is None:
        ly = 2 * np.pi / abs(l) if l != 0 else 2 * np.pi * M / (1.0 + params.q)
    grid = make_grid(params, M=M, ly=ly)
    K = 1.0 + params.q
    ia = grid.index(K + k, l)
    # B multiplies exp(i(-K+k, l).x); the half spectrum holds its conjugate
    # at (K-k, -l) unless k > K
    b_conj = k <= K
    ib = grid.index(K - k, -l) if b_conj else grid.index(k - K, l)
    ic = grid.index(k, l) if params.model is Model.ONE else None
    st = stripe_state(params, grid)
    rb = math.sqrt(stripe_beta(params).beta)
    _, v = leading_eigvec(params, k, l)
    a = amplitude * rb
    st.psi_hat[ia] += a * v[0]
    st.psi_hat[ib] += np.conj(a * v[1]) if b_conj else a * v[1]
    if ic is not None:
        # the matrix's vorticity amplitude C is minus the Fourier coefficient
        # of omega under U = (zeta_y, -zeta_x); eigenvalues do not care, the
        # eigenvector does
        st.omega_hat[ic] -= a * v[2]
        if ic[1] == 0:
            # the k = 0 column holds both (0, l) and its conjugate (0, -l)
            st.omega_hat[(-ic[0]) % grid.ny, 0] -= np.conj(a * v[2])
    integ = Integrator(params, grid, dt, workers)
    n = int(round(t_max / dt))
    times, rows = [0.0], [_modes(st, ia, ib, ic, b_conj)]
    for i in range(n):
        st = integ.step(st)
        if (i + 1) % record_every == 0:
            times.append(st.t)
            rows.append(_modes(st, ia, ib, ic, b_conj))
    times = np.array(times)
    rows = np.array(rows)
    r = np.hypot(np.abs(rows[:, 0]), np.abs(rows[:, 1]))
    floor = 1e-13 * rb
    ok = (r >= 10 * floor) & (r <= 1e-3 * rb)
    if ok.sum() < 3:
        raise NonlinearContamination("too few samples inside the linear-regime amplitude window")
    sigma, resid, window = _best_fit(times, np.log(r), ok)
    phase = np.unwrap(np.angle(rows[:, 0]))
    w_fit = float(np.polyfit(times[ok], phase[ok], 1)[0])
    if resid > max_residual:
        raise NonlinearContamination(f"fit residual {resid:.3g} exceeds {max_residual:.3g}")
    return GrowthMeasurement((k, l), float(sigma), abs(w_fit), window, float(resid), times, rows)


def _modes(st, ia, ib, ic, b_conj=True):
    out = [st.psi_hat[ia], np.conj(st.psi_hat[ib]) if b_conj else st.psi_hat[ib]]
    if ic is not None:
        out.append(-st.omega_hat[ic])
    return out


def _best_fit(t, y, ok):
    """Straight-line fit over the candidate window with the smallest rms residual.

    Candidates drop the first 0, 1/4 or 1/2 of the admissible samples, which
    removes any start-up transient of the multistep scheme.
    """
    idx = np.flatnonzero(ok)
    best = None
    for frac in (0.0, 0.25, 0.5):
        sel = idx[int(frac * len(idx)):]
        if len(sel) < 3:
            continue
        c = np.polyfit(t[sel], y[sel], 1)
        res = float(np.sqrt(np.mean((np.polyval(c, t[sel]) - y[sel]) ** 2)))
        if best is None or res < best[1]:
            best = (c[0], res, (float(t[sel[0]]), float(t[sel[-1]])))
    return best


# -- snapshots ------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIdddI8dd")
_PARAM_FIELDS = ("mu", "q", "g", "g_m", "pr", "c2", "gamma", "alpha")


def _num(v):
    return float("nan") if v is None else float(v)


def save_snapshot(path, state: SpectralState, params: ModelParams):
    """Binary snapshot: header then the rfft2 coefficients as little-endian float64 pairs."""
    g = state.grid
    head = _HEADER.pack(MAGIC, 1, g.nx, g.ny, g.lx, g.ly, state.t, int(params.model),
                        *(_num(getattr(params, n)) for n in _PARAM_FIELDS), 0.0)
    with open(path, "wb") as fh:
        fh.write(head)
        for a in (state.psi_hat, state.omega_hat):
            if a is not None:
                fh.write(np.ascontiguousarray(a, dtype="<c16").view("<f8").tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        data = fh.read()
    vals = _HEADER.unpack_from(data)
    magic, ver, nx, ny, lx, ly, t, model = vals[:8]
    if magic != MAGIC or ver != 1:
        raise ConfigError(f"{path} is not a snapshot file")
    kw = {n: (None if math.isnan(v) else v) for n, v in zip(_PARAM_FIELDS, vals[8:16])}
    params = ModelParams(Model(model), **kw)
    grid = Grid(nx, ny, lx, ly)
    n = ny * (nx // 2 + 1)
    arr = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).view("<c16")
    psi = arr[:n].reshape(ny, nx // 2 + 1).copy()
    omega = arr[n:2 * n].reshape(ny, nx // 2 + 1).copy() if params.model is Model.ONE else None
    return SpectralState(psi, omega, grid, t), params
