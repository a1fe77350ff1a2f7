"""Reference solutions: the closed-form massless packet and a spectral oracle.

The discretized operator is ``i s0 d/dt - i s0 s1 d/dx - m`` (see
``schemes.T_COEF`` and ``schemes.X_COEF``), equivalently ``i dPsi/dt = H Psi`` with
``H = i s1 d/dx + m s0``. On plane waves ``exp(i p x)`` this gives
``H(p) = -p s1 + m s0`` and equal-component massless packets translate
rigidly towards negative x at unit speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IDENTITY2, SIGMA0, SIGMA1


@dataclass(frozen=True)
class GaussianPacket:
    a: float = 8.0
    b: float = 4.0
    center: float = 0.5

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"packet width parameter must be positive, got {self.a}")


def _profile(packet: GaussianPacket, s):
    return np.exp(1j * np.pi * packet.b * s - (packet.a * s) ** 2)


def gaussian_initial(packet: GaussianPacket, x) -> np.ndarray:
    """Initial spinor, shape ``x.shape + (2,)``; both components identical."""
    psi = _profile(packet, np.asarray(x, dtype=float) - packet.center)
    return np.stack([psi, psi], axis=-1)


def _abcd(packet: GaussianPacket, s, t):
    a2, bpi = packet.a**2, packet.b * np.pi
    e1 = np.exp(-a2 * (t**2 - 2 * s * t) - 1j * bpi * t)
    e2 = np.exp(-a2 * (t**2 + 2 * s * t) + 1j * bpi * t)
    return e1, e2


def massless_exact(packet: GaussianPacket, x, t) -> np.ndarray:
    """Closed-form massless solution [[A, B], [C, D]] @ Psi0(x)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = x - packet.center
    e1, e2 = _abcd(packet, s, t)
    A = D = 0.5 * (e1 + e2)
    B = C = 0.5 * (e2 - e1)
    p0 = _profile(packet, s)
    return np.stack([A * p0 + B * p0, C * p0 + D * p0], axis=-1)


def massless_exact_grad(packet: GaussianPacket, x, t):
    """(d/dx, d/dt) of ``massless_exact``, each shaped like its output."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a2, bpi = packet.a**2, packet.b * np.pi
    s = x - packet.center
    e1, e2 = _abcd(packet, s, t)
    p0 = _profile(packet, s)
    dp0 = (1j * bpi - 2 * a2 * s) * p0
    de1_dx, de2_dx = 2 * a2 * t * e1, -2 * a2 * t * e2
    de1_dt = (-2 * a2 * t + 2 * a2 * s - 1j * bpi) * e1
    de2_dt = (-2 * a2 * t - 2 * a2 * s + 1j * bpi) * e2
    A, B = 0.5 * (e1 + e2), 0.5 * (e2 - e1)
    dA_dx, dB_dx = 0.5 * (de1_dx + de2_dx), 0.5 * (de2_dx - de1_dx)
    dA_dt, dB_dt = 0.5 * (de1_dt + de2_dt), 0.5 * (de2_dt - de1_dt)
    # D = A and C = B; both initial components are p0
    ddx = (dA_dx + dB_dx) * p0 + (A + B) * dp0
    ddt = (dA_dt + dB_dt) * p0
    return np.stack([ddx, ddx], axis=-1), np.stack([ddt, ddt], axis=-1)


def hamiltonian(p, mass):
    """Momentum-space H(p) = -p s1 + m s0, shape ``p.shape + (2, 2)``."""
    p = np.asarray(p, dtype=float)[..., None, None]
    return -p * SIGMA1 + mass * SIGMA0


def momentum_propagator(p, mass: float, t) -> np.ndarray:
    """exp(-i t H(p)) in closed form, using H(p)^2 = (p^2 + m^2) I."""
    p = np.asarray(p, dtype=float)
    t = np.asarray(t, dtype=float)
    p, t = np.broadcast_arrays(p, t)
    omega = np.sqrt(p**2 + mass**2)
    cos = np.cos(omega * t)[..., None, None]
    # sin(w t) / w, with the w -> 0 limit t
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(omega > 0, np.sin(omega * t) / np.where(omega > 0, omega, 1), t)
    return cos * IDENTITY2 - 1j * sinc[..., None, None] * hamiltonian(p, mass)


class UnsupportedGridError(ValueError):
    pass


def _check_uniform(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise UnsupportedGridError("need a 1-D grid with at least two samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-10, atol=0) or dx[0] <= 0:
        raise UnsupportedGridError("spectral oracle requires a uniform increasing grid")
    return x, float(dx[0])


def fourier_oracle(initial, x, mass: float, t: float) -> np.ndarray:
    """Evolve samples ``initial`` (N, 2) on the periodic uniform grid ``x`` to time t."""
    x, dx = _check_uniform(x)
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != (x.size, 2):
        raise ValueError(f"initial samples must have shape ({x.size}, 2)")
    k = 2 * np.pi * np.fft.fftfreq(x.size, d=dx)
    spec = np.fft.fft(psi, axis=0)
    U = momentum_propagator(k, mass, t)
    return np.fft.ifft(np.einsum("kab,kb->ka", U, spec), axis=0)


class FourierSolution:
    """Spectral solution evaluated at arbitrary space-time points.

    The packet is sampled on a periodic window and evolved mode by mode; the
    inverse transform is summed directly so points need not share a time.
    """

    def __init__(self, packet: GaussianPacket, mass: float, window, n_samples: int = 1024):
        lo, hi = window
        self.packet = packet
        self.mass = float(mass)
        self.x = lo + (hi - lo) * np.arange(n_samples) / n_samples
        self.x_start = lo
        k = 2 * np.pi * np.fft.fftfreq(n_samples, d=(hi - lo) / n_samples)
        spec = np.fft.fft(gaussian_initial(packet, self.x), axis=0) / n_samples
        # modes below roundoff of the peak are dropped from pointwise sums
        amp = np.abs(spec).max(axis=1)
        keep = amp > 1e-16 * amp.max()
        self.k = k[keep]
        self.spec = spec[keep]

    @classmethod
    def padded(cls, packet, mass, x_lo, x_hi, n_samples=1024):
        """Window padded to twice the physical width to keep wrap-around away."""
        w = x_hi - x_lo
        return cls(packet, mass, (x_lo - w / 2, x_hi + w / 2), n_samples)

    def grid_solution(self, t: float) -> np.ndarray:
        """Samples on ``self.x`` at time t via the FFT route."""
        return fourier_oracle(gaussian_initial(self.packet, self.x), self.x, self.mass, t)

    def evaluate(self, x, t, chunk: int = 512):
        """Return (psi, dpsi/dx, dpsi/dt) at points (x, t), each ``x.shape + (2,)``."""
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        shape = x.shape
        xf, tf = x.ravel(), t.ravel()
        out = np.empty((3, xf.size, 2), dtype=complex)
        k = self.k
        H = hamiltonian(k, self.mass)
        omega = np.sqrt(k**2 + self.mass**2)
        safe = np.where(omega > 0, omega, 1.0)
        for lo in range(0, xf.size, chunk):
            xs, ts = xf[lo : lo + chunk, None], tf[lo : lo + chunk, None]
            phase = np.exp(1j * k[None, :] * (xs - self.x_start))
            c = np.cos(omega * ts)
            sn = np.where(omega > 0, np.sin(omega * ts) / safe, ts)
            # U = c I - i sn H, applied to every mode's spectral spinor
            Hs = np.einsum("kab,kb->ka", H, self.spec)
            modes = c[..., None] * self.spec[None] - 1j * sn[..., None] * Hs[None]
            psi = np.einsum("pk,pka->pa", phase, modes)
            dpx = np.einsum("pk,pka->pa", phase * (1j * k[None, :]), modes)
            dmodes = -1j * np.einsum("kab,pkb->pka", H, modes)
            dpt = np.einsum("pk,pka->pa", phase, dmodes)
            out[0, lo : lo + chunk] = psi
            out[1, lo : lo + chunk] = dpx
            out[2, lo : lo + chunk] = dpt
        return tuple(o.reshape(shape + (2,)) for o in out)


def exact_solution(packet: GaussianPacket, mass: float, x_window=None):
    """Callable (x, t) -> (psi, dpsi/dx, dpsi/dt) for the given mass.

    Mass zero uses the closed form; otherwise a padded spectral solution on
    ``x_window``.
    """
    if mass == 0:

        def evaluate(x, t):
            dx, dt = massless_exact_grad(packet, x, t)
            return massless_exact(packet, x, t), dx, dt

        return evaluate
    if x_window is None:
        raise ValueError("massive reference solution needs an x window")
    fs = FourierSolution.padded(packet, mass, *x_window)
    return fs.evaluate
