"""Forward corruption chains and training-pair construction.

A chain runs the lattice solver through a DiffusionSchedule and stores the
K + 1 macroscopic snapshots (clean field first, fully corrupted prior
last). Channels evolve independently but share the velocity field, which is
generated once per step. Training noise is never folded back into the
chain; it is added on the fly when a pair is requested.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    NonFiniteFieldError,
    ShapeMismatchError,
    ValidationError,
)
from .lattice import (
    VelocityField,
    init_from_image,
    macro_update,
    solver_step,
)
from .rng import CounterRng, derive_seed
from .schedule import DiffusionSchedule
from .turbulence import TurbulenceGenerator, TurbulenceSpec
from . import io

SIGMA_TRAIN_DEFAULT = 0.01
TRAIN_SAMPLE_RATIO = 1.25


@dataclass(frozen=True)
class NoiseParams:
    """Gaussian noise scales: sigma_train for pairs, sigma_sample for the
    reverse walk (defaults to sigma_train / 1.25)."""

    sigma_train: float = SIGMA_TRAIN_DEFAULT
    sigma_sample: float | None = None

    def __post_init__(self):
        if self.sigma_train < 0.0:
            raise ValidationError(
                f"sigma_train must be >= 0, got {self.sigma_train}")
        if self.sigma_sample is None:
            object.__setattr__(self, "sigma_sample",
                               self.sigma_train / TRAIN_SAMPLE_RATIO)
        if self.sigma_sample < 0.0:
            raise ValidationError(
                f"sigma_sample must be >= 0, got {self.sigma_sample}")


@dataclass
class CorruptionChain:
    """Snapshots [K+1, C, H, W] plus the recipe that produced them.

    `schedule` may be None for chains rehydrated from a tensor file; the
    snapshots alone are enough for sampling.
    """

    snapshots: np.ndarray
    schedule: DiffusionSchedule | None = None
    seed: int = 0
    turbulence: TurbulenceSpec | None = None

    @property
    def chain_length(self) -> int:
        return self.snapshots.shape[0] - 1

    @property
    def clean(self) -> np.ndarray:
        return self.snapshots[0]

    @property
    def prior(self) -> np.ndarray:
        return self.snapshots[-1]


class _SharedFlow:
    """Velocity provider that caches the last generated step, so channels
    stepping in lockstep reuse one synthesis per step."""

    def __init__(self, gen: TurbulenceGenerator, rms: np.ndarray):
        self._gen = gen
        self._rms = rms
        self._step = -1
        self._field: VelocityField | None = None

    def __call__(self, step: int) -> VelocityField:
        if step != self._step:
            self._field = self._gen.generate(step, float(self._rms[step]))
            self._step = step
        return self._field


def _as_stack(u0: np.ndarray) -> np.ndarray:
    u0 = np.asarray(u0)
    if u0.ndim == 2:
        u0 = u0[None]
    if u0.ndim != 3:
        raise ShapeMismatchError(
            f"expected [C, H, W] or [H, W], got {u0.shape}")
    if not np.all(np.isfinite(u0)):
        raise NonFiniteFieldError("initial field contains NaN or Inf")
    return u0


def forward_chain(u0: np.ndarray, schedule: DiffusionSchedule, seed: int,
                  turbulence: TurbulenceSpec | None = None,
                  dtype=np.float64) -> CorruptionChain:
    """Run the schedule on u0 and collect every snapshot.

    Snapshot 0 is u0 itself, bit for bit. With Pe > 0 the grid must be
    square (the spectral generator is N x N); `turbulence` defaults to the
    grid-sized spec with the schedule's velocity cap.
    """
    u0 = _as_stack(u0)
    channels, height, width = u0.shape
    taus, rms, boundaries = schedule.per_step()
    total = schedule.lattice_steps
    k_chain = schedule.chain_length

    if schedule.peclet > 0.0 and total > 0:
        if height != width:
            raise ValidationError(
                f"Pe > 0 needs a square grid, got {height}x{width}")
        if turbulence is None:
            turbulence = TurbulenceSpec(size=height, cap=schedule.cap)
        elif turbulence.size != height:
            raise ShapeMismatchError(
                f"turbulence size {turbulence.size} != grid {height}")
        provider = _SharedFlow(TurbulenceGenerator(turbulence, seed), rms)
    else:
        zero = np.zeros((height, width))
        still = VelocityField(zero, zero)
        provider = lambda step: still  # noqa: E731

    snaps = np.empty((k_chain + 1,) + u0.shape, dtype=np.dtype(dtype))
    snaps[0] = u0
    states = [init_from_image(u0[c], dtype=dtype) for c in range(channels)]

    b = 1
    while b <= k_chain and boundaries[b] == 0:
        snaps[b] = snaps[0]
        b += 1
    for g in range(total):
        for state in states:
            solver_step(state, provider, float(taus[g]), g)
        if b <= k_chain and boundaries[b] == g + 1:
            current = np.stack([macro_update(s) for s in states])
            while b <= k_chain and boundaries[b] == g + 1:
                snaps[b] = current
                b += 1
    assert b == k_chain + 1
    return CorruptionChain(snaps, schedule, seed, turbulence)


def add_training_noise(u: np.ndarray, sigma: float,
                       rng: CounterRng) -> np.ndarray:
    """u + sigma * z with z drawn from rng.

    The draw happens even for sigma = 0 (the result is then exactly u), so
    stream positions stay aligned across sigma settings.
    """
    if sigma < 0.0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    u = np.asarray(u)
    return u + sigma * rng.normal_field(u.shape)


def make_training_pair(chain: CorruptionChain, k: int, noise: NoiseParams,
                       rng: CounterRng) -> tuple[np.ndarray, np.ndarray]:
    """Noised input and regression target for chain position k in [1, K].

    Returns (u_hat, delta) with u_hat = snapshot_k + sigma_train * z and
    delta = snapshot_{k-1} - u_hat, the correction a predictor should
    output so that u_hat + delta recovers the less-corrupted snapshot.
    """
    if not 1 <= k <= chain.chain_length:
        raise IndexError(
            f"k must be in [1, {chain.chain_length}], got {k}")
    u_hat = add_training_noise(chain.snapshots[k], noise.sigma_train, rng)
    return u_hat, chain.snapshots[k - 1] - u_hat


def regression_loss(delta_pred: np.ndarray,
                    delta_target: np.ndarray) -> float:
    """Sum of squared residuals between prediction and target."""
    delta_pred = np.asarray(delta_pred)
    delta_target = np.asarray(delta_target)
    if delta_pred.shape != delta_target.shape:
        raise ShapeMismatchError(
            f"shape {delta_pred.shape} != {delta_target.shape}")
    diff = (delta_pred - delta_target).ravel()
    # np.sum, not BLAS dot: result must not depend on thread count
    return float(np.sum(diff * diff))


def precompute_dataset(input_dir: str | Path, out_dir: str | Path,
                       schedule: DiffusionSchedule, seed: int,
                       turbulence: TurbulenceSpec | None = None,
                       dtype=np.float64, workers: int = 1,
                       manifest_extra: dict | None = None) -> dict:
    """Corrupt every PGM/PPM image in input_dir into per-image chain files.

    Image i (sorted by name) uses the derived seed (seed, i), so any subset
    can be regenerated independently. The first readable image fixes the
    expected [C, H, W]; unreadable or mismatched files are recorded as
    errors and the batch continues. Returns a report dict with `written`,
    `errors` and the manifest path.
    """
    input_dir = Path(input_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(p.name for p in input_dir.iterdir()
                   if p.suffix.lower() in (".pgm", ".ppm"))
    if not names:
        raise ValidationError(f"no .pgm/.ppm images in {input_dir}")

    errors: dict[str, str] = {}
    loaded: list[tuple[int, str, np.ndarray]] = []
    ref_shape: tuple[int, ...] | None = None
    for index, name in enumerate(names):
        try:
            stack, _ = io.read_image(input_dir / name)
        except Exception as exc:  # per-file failure, batch continues
            errors[name] = str(exc)
            continue
        if ref_shape is None:
            ref_shape = stack.shape
        elif stack.shape != ref_shape:
            errors[name] = (
                f"shape {stack.shape} does not match {ref_shape}")
            continue
        loaded.append((index, name, stack))
    if ref_shape is None:
        raise ValidationError(f"no readable images in {input_dir}")

    def run(item):
        index, name, stack = item
        chain = forward_chain(stack, schedule, derive_seed(seed, index),
                              turbulence=turbulence, dtype=dtype)
        return name, chain.snapshots

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, loaded))
    else:
        results = [run(item) for item in loaded]

    written = []
    manifest: dict[str, object] = {"command": "chain"}
    manifest.update(manifest_extra or {})
    manifest.update({
        "steps": schedule.chain_length,
        "pe": repr(schedule.peclet),
        "tau_max": repr(schedule.tau_max),
        "cap": repr(schedule.cap),
        "seed": seed,
        "precision": "f32" if np.dtype(dtype) == np.float32 else "f64",
        "levels": ",".join(repr(v) for v in schedule.levels),
    })
    if turbulence is not None:
        manifest["slope"] = repr(turbulence.slope)
        manifest["dt_turb"] = repr(turbulence.dt_turb)
    for name, snaps in results:
        out_name = Path(name).stem + "_chain.adet"
        io.write_tensor(out_dir / out_name, snaps)
        written.append(out_name)
        manifest[f"output.{out_name}"] = io.file_sha256(out_dir / out_name)
    for name, message in errors.items():
        manifest[f"error.{name}"] = message.replace("\n", " ")
    manifest_path = out_dir / "manifest.txt"
    io.write_config(manifest_path, manifest)
    return {"written": written, "errors": errors,
            "manifest": str(manifest_path)}
