"""I.i.d. Rayleigh channel realizations and reproducible random streams."""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import NetworkConfig

__all__ = [
    "ChannelRealization",
    "crandn",
    "stream_rng",
    "draw_channels",
]

# Stream labels for per-trial substreams. Each label owns an independent
# random stream so that adding draws to one phase never shifts another.
STREAM_CHANNEL = 0
STREAM_IA_INIT = 1
STREAM_REVERSE_TRAINING = 2
STREAM_FEEDBACK = 3
STREAM_FEEDFORWARD = 4


def stream_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for substream ``key`` of ``master_seed``.

    The stream depends only on ``(master_seed, key)``, never on the order
    in which trials are executed, so parallel runs replay exactly.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Draw i.i.d. CN(0, 1) samples."""
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """One coherence block of forward and reverse channels.

    Attributes
    ----------
    H : ndarray, shape (K, K, Nr, Nt)
        ``H[i, k]`` is the forward channel from source ``k`` to sink ``i``.
    G : ndarray, shape (K, K, Nt, Nr)
        ``G[k, i]`` is the reverse channel from sink ``k`` to source ``i``.
    seed_provenance : tuple
        ``(entropy, spawn_key)`` of the generator that produced the draw,
        or ``None`` when it could not be determined.
    """

    H: np.ndarray
    G: np.ndarray
    seed_provenance: tuple | None = None

    @property
    def K(self) -> int:
        return self.H.shape[0]


def _provenance(rng: np.random.Generator):
    seq = getattr(rng.bit_generator, "seed_seq", None)
    if seq is None:
        return None
    return (seq.entropy, tuple(seq.spawn_key))


def draw_channels(config: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw all K^2 forward and K^2 reverse matrices with CN(0, 1) entries."""
    K, Nt, Nr = config.K, config.Nt, config.Nr
    H = crandn(rng, K, K, Nr, Nt)
    G = crandn(rng, K, K, Nt, Nr)
    H.setflags(write=False)
    G.setflags(write=False)
    return ChannelRealization(H=H, G=G, seed_provenance=_provenance(rng))
