"""Reverse-chain sampling.

The sampler walks k = K..1: perturb the current state with Gaussian noise,
ask a predictor for the correction toward snapshot k-1, apply it. With the
training convention delta = u_{k-1} - u_hat, a perfect predictor telescopes
the walk back to the clean field regardless of the noise.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Protocol

import numpy as np

from .corruption import CorruptionChain
from .errors import (
    PredictorTimeoutError,
    ShapeMismatchError,
    ValidationError,
)
from .rng import CounterRng
from . import io


class Predictor(Protocol):
    def predict(self, u_hat: np.ndarray, k: int) -> np.ndarray: ...


class OraclePredictor:
    """Reads the forward chain and returns the exact correction."""

    def __init__(self, chain: CorruptionChain):
        self.chain = chain

    def predict(self, u_hat: np.ndarray, k: int) -> np.ndarray:
        return self.chain.snapshots[k - 1] - u_hat


class ZeroPredictor:
    """Predicts no correction; the walk stays at the noised prior."""

    def predict(self, u_hat: np.ndarray, k: int) -> np.ndarray:
        return np.zeros_like(u_hat)


class ExternPredictor:
    """Delegates each step to an external process via tensor files.

    For step k the sampler writes `step_<k>_input.adet` into `directory`
    and polls for `step_<k>_delta.adet`. The partner should write its
    answer atomically (temp file + rename); half-written answers are
    retried until `timeout` seconds elapse.
    """

    def __init__(self, directory: str | Path, timeout: float = 30.0,
                 poll_interval: float = 0.01):
        self.directory = Path(directory)
        self.timeout = timeout
        self.poll_interval = poll_interval
        self.directory.mkdir(parents=True, exist_ok=True)

    def predict(self, u_hat: np.ndarray, k: int) -> np.ndarray:
        io.write_tensor(self.directory / f"step_{k}_input.adet",
                        np.asarray(u_hat, dtype=np.float64))
        answer = self.directory / f"step_{k}_delta.adet"
        deadline = time.monotonic() + self.timeout
        while True:
            if answer.exists():
                try:
                    return io.read_tensor(answer)
                except Exception:
                    pass  # partner may still be writing
            if time.monotonic() >= deadline:
                raise PredictorTimeoutError(
                    f"no answer for step {k} within {self.timeout}s "
                    f"in {self.directory}")
            time.sleep(self.poll_interval)


def _checked_delta(delta: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != shape:
        raise ShapeMismatchError(
            f"predictor returned shape {delta.shape}, expected {shape}")
    return delta


def sample(prior: np.ndarray, predictor: Predictor, steps: int,
           sigma_sample: float, rng: CounterRng,
           record: bool = False) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Run the reverse walk from the prior down to k = 1.

    One noise field is drawn per step even when sigma_sample is 0 (the
    perturbation is then exactly zero), keeping rng positions comparable
    across sigma settings. With record=True, also returns the trajectory
    [steps + 1, ...] from prior to result. Arithmetic is float64.
    """
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    if sigma_sample < 0.0:
        raise ValidationError(
            f"sigma_sample must be >= 0, got {sigma_sample}")
    u = np.array(prior, dtype=np.float64, copy=True)
    trajectory = [u.copy()] if record else None
    for k in range(steps, 0, -1):
        u_hat = u + sigma_sample * rng.normal_field(u.shape)
        u = u_hat + _checked_delta(predictor.predict(u_hat, k), u.shape)
        if record:
            trajectory.append(u.copy())
    if record:
        return u, np.stack(trajectory)
    return u


def slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Spherical interpolation between two same-shape fields.

    Falls back to linear blending when the angle between the flattened
    vectors is below 1e-7. t = 0 and t = 1 return a and b exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape {a.shape} != {b.shape}")
    af, bf = a.ravel(), b.ravel()
    # fixed-shape reductions keep the result thread-count independent
    na = np.sqrt(np.sum(af * af))
    nb = np.sqrt(np.sum(bf * bf))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("slerp endpoints must be nonzero")
    cos_omega = np.clip(np.sum(af * bf) / (na * nb), -1.0, 1.0)
    omega = np.arccos(cos_omega)
    if omega < 1e-7:
        return (1.0 - t) * a + t * b
    s = np.sin(omega)
    return (np.sin((1.0 - t) * omega) / s) * a + (np.sin(t * omega) / s) * b


def interpolate_priors(chain_a: CorruptionChain, chain_b: CorruptionChain,
                       lam: float) -> np.ndarray:
    """Linear blend of the two fully corrupted priors."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must be in [0, 1], got {lam}")
    pa, pb = chain_a.prior, chain_b.prior
    if pa.shape != pb.shape:
        raise ShapeMismatchError(f"shape {pa.shape} != {pb.shape}")
    return (1.0 - lam) * pa + lam * pb


def interpolate_sample(chain_a: CorruptionChain, chain_b: CorruptionChain,
                       predictor: Predictor, lambdas, sigma_sample: float,
                       seed_a: int, seed_b: int) -> np.ndarray:
    """Reverse walks from blended priors with angle-blended noise.

    Each lambda starts from the linear blend of the priors and, at every
    step, perturbs with sigma * slerp(z_a, z_b, lambda) where z_a and z_b
    are the draws the two seeds would make on their own. lambda = 0 and 1
    reproduce the plain per-seed walks bit for bit.
    """
    if chain_a.chain_length != chain_b.chain_length:
        raise ValidationError(
            f"chain lengths differ: {chain_a.chain_length} != "
            f"{chain_b.chain_length}")
    steps = chain_a.chain_length
    if steps < 1:
        raise ValidationError("chains must have at least one step")
    outputs = []
    for lam in lambdas:
        u = interpolate_priors(chain_a, chain_b, float(lam)).astype(
            np.float64)
        rng_a = CounterRng(seed_a, 0)
        rng_b = CounterRng(seed_b, 0)
        for k in range(steps, 0, -1):
            z_a = rng_a.normal_field(u.shape)
            z_b = rng_b.normal_field(u.shape)
            u_hat = u + sigma_sample * slerp(z_a, z_b, float(lam))
            u = u_hat + _checked_delta(predictor.predict(u_hat, k), u.shape)
        outputs.append(u)
    return np.stack(outputs)
