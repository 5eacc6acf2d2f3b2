"""Counter-based pseudo-random numbers.

Output i of a stream is a pure function of (seed, stream, i): the generator
mixes the counter through splitmix64, so any block of draws can be reproduced
from its position alone, independent of batch sizes used to consume earlier
draws. All integer arithmetic is uint64 with wraparound.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; wraparound is intended
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def derive_seed(seed: int, *indices: int) -> int:
    """Fold indices into a seed, splitmix-style. Stable across runs."""
    s = _U64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for ix in indices:
            s = _mix(s + _U64((ix + 1) & 0xFFFFFFFFFFFFFFFF) * _GOLDEN)
    return int(s)


class CounterRng:
    """Deterministic stream of uniforms/normals addressed by position.

    `seed` selects the family, `stream` an independent substream. The
    position advances by the number of raw 64-bit words consumed; it can be
    saved and restored to replay or skip.
    """

    def __init__(self, seed: int, stream: int = 0, position: int = 0):
        self._base = _U64(derive_seed(seed, stream))
        self.seed = seed
        self.stream = stream
        self.position = position

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        with np.errstate(over="ignore"):
            return _mix(self._base + (idx + _U64(1)) * _GOLDEN)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1), 53-bit resolution."""
        return (self._raw(n) >> _U64(11)) * 2.0**-53

    def _uniforms_open(self, n: int) -> np.ndarray:
        # uniform on (0, 1]; safe as a log() argument
        return ((self._raw(n) >> _U64(11)) + 1) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller.

        Consumes 2*ceil(n/2) words: the first half feed the radius, the
        second half the angle.
        """
        m = (n + 1) // 2
        u1 = self._uniforms_open(m)
        u2 = self.uniforms(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]

    def normal_field(self, shape: tuple[int, ...]) -> np.ndarray:
        n = int(np.prod(shape))
        return self.normals(n).reshape(shape)
