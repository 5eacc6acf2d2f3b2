"""Spectral synthesis of time-coherent turbulent velocity fields.

A random Fourier mode table is built once per seed: each mode in the band
[kappa_min, kappa_max] gets amplitude ||kappa||^slope and an independent
uniform phase per component. Time evolution rotates each phase at rate
dt_turb * ||kappa||, so consecutive steps give smoothly drifting fields.
Fields are rescaled to a target RMS (population std) and passed through a
smooth tanh magnitude limiter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lattice import VelocityField
from .rng import CounterRng

SMALL_MAGNITUDE = 1e-9
ZERO_RMS_GUARD = 1e-14


@dataclass(frozen=True)
class TurbulenceSpec:
    """Parameters of the spectral generator on an N x N grid.

    kappa_min/kappa_max default to 2*pi/N and min(1024 * 2*pi/N, pi*N);
    pi*N is the axis Nyquist limit, so small grids keep the whole spectrum.
    """

    size: int
    slope: float = -2.0
    kappa_min: float | None = None
    kappa_max: float | None = None
    dt_turb: float = 1e-4
    cap: float = 1e-3
    sharpness: float = 1.0

    def __post_init__(self):
        if self.size < 2:
            raise ValidationError(f"grid size must be >= 2, got {self.size}")
        if self.kappa_min is None:
            object.__setattr__(self, "kappa_min", 2.0 * np.pi / self.size)
        if self.kappa_max is None:
            object.__setattr__(
                self, "kappa_max",
                min(1024.0 * 2.0 * np.pi / self.size, np.pi * self.size))
        if not 0.0 < self.kappa_min < self.kappa_max:
            raise ValidationError(
                f"need 0 < kappa_min < kappa_max, got "
                f"[{self.kappa_min}, {self.kappa_max}]")
        if self.cap <= 0.0:
            raise ValidationError(f"cap must be positive, got {self.cap}")
        if self.dt_turb < 0.0:
            raise ValidationError(
                f"dt_turb must be >= 0, got {self.dt_turb}")


def tanh_limiter(x: np.ndarray, min_val: float, max_val: float,
                 sharpness: float = 1.0) -> np.ndarray:
    """Smooth clamp of x into (min_val, max_val), identity-like near mid."""
    if not min_val < max_val:
        raise ValidationError(
            f"need min_val < max_val, got [{min_val}, {max_val}]")
    mid = (max_val + min_val) / 2.0
    half = (max_val - min_val) / 2.0
    return mid + half * np.tanh(sharpness * (np.asarray(x) - mid) / half)


def limit_velocity(vx: np.ndarray, vy: np.ndarray, min_val: float,
                   max_val: float, sharpness: float = 1.0) -> VelocityField:
    """Rescale (vx, vy) so the speed passes through tanh_limiter.

    Direction is preserved; nodes slower than 1e-9 are scaled by 1e-9
    instead, which keeps them effectively at rest.
    """
    mag = np.sqrt(vx * vx + vy * vy)
    limited = tanh_limiter(mag, min_val, max_val, sharpness)
    factor = np.full_like(mag, SMALL_MAGNITUDE)
    np.divide(limited, mag, out=factor, where=mag >= SMALL_MAGNITUDE)
    return VelocityField(vx * factor, vy * factor)


class TurbulenceGenerator:
    """Stateful mode table; `generate(step, rms)` is pure in (seed, step).

    Phase tables come from two counter-based substreams of `seed` (stream 0
    for the x component, stream 1 for y), so the same seed always produces
    the same flow regardless of call order.
    """

    def __init__(self, spec: TurbulenceSpec, seed: int):
        self.spec = spec
        self.seed = seed
        n = spec.size
        k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
        kxx, kyy = np.meshgrid(k1, k1, indexing="ij")
        k = np.sqrt(kxx * kxx + kyy * kyy)
        amp = np.zeros_like(k)
        nonzero = k != 0.0
        amp[nonzero] = k[nonzero] ** spec.slope
        amp[(k < spec.kappa_min) | (k > spec.kappa_max)] = 0.0
        self.amplitude = amp
        self.omega = spec.dt_turb * k
        shape = (n, n)
        self.phase_u = 2.0 * np.pi * CounterRng(seed, 0).uniforms(n * n).reshape(shape)
        self.phase_v = 2.0 * np.pi * CounterRng(seed, 1).uniforms(n * n).reshape(shape)

    def synthesize(self, step: int) -> tuple[np.ndarray, np.ndarray]:
        """Raw (unscaled, unlimited) field at integer time `step`."""
        ang_u = self.phase_u + self.omega * float(step)
        ang_v = self.phase_v + self.omega * float(step)
        u = np.fft.ifft2(self.amplitude * np.exp(1j * ang_u)).real
        v = np.fft.ifft2(self.amplitude * np.exp(1j * ang_v)).real
        return u, v

    def generate(self, step: int, target_rms: float) -> VelocityField:
        """Velocity field at `step`, rescaled to target_rms and capped.

        target_rms below 1e-14 short-circuits to the exact zero field.
        """
        if target_rms < 0.0:
            raise ValidationError(
                f"target_rms must be >= 0, got {target_rms}")
        n = self.spec.size
        if target_rms < ZERO_RMS_GUARD:
            zero = np.zeros((n, n))
            return VelocityField(zero, zero.copy())
        u, v = self.synthesize(step)
        su, sv = u.std(), v.std()  # population std, ddof=0
        if su == 0.0 or sv == 0.0:
            raise ValidationError("spectral band produced a constant field")
        u *= target_rms / su
        v *= target_rms / sv
        return limit_velocity(u, v, -self.spec.cap, self.spec.cap,
                              self.spec.sharpness)
