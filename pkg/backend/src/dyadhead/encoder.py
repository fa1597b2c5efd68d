"""Frozen feature encoders producing per-frame hidden-layer stacks.

The bundled filterbank encoder needs no downloaded weights: layer 0 is a
log band-energy spectrogram at a 20 ms hop, and deeper layers apply
fixed, seed-derived tanh projections. It stands in for a pretrained
speech encoder wherever network access or model downloads are
unavailable; anything exposing `hidden_layers` with the same shape
contract can be dropped in.
"""

from __future__ import annotations

import numpy as np

STEP_MS = 20


def n_output_frames(n_samples: int, sample_rate: int, step_ms: int = STEP_MS) -> int:
    duration_ms = round(n_samples / sample_rate * 1000)
    return int(np.ceil(duration_ms / step_ms))


class FilterbankEncoder:
    """Deterministic multi-layer encoder at a native 20 ms frame rate.

    hidden_layers() returns a list of (T, dim) float32 arrays, one per
    hidden layer, where T = ceil(duration / 20 ms). All parameters are
    frozen; construction with the same config is bit-reproducible.
    """

    def __init__(self, n_bands: int = 48, n_layers: int = 4, dim: int = 48,
                 weight_seed: int = 31337):
        self.n_bands = n_bands
        self.n_layers = n_layers
        self.dim = dim
        self.step_ms = STEP_MS
        rng = np.random.default_rng(weight_seed)
        self._projections = []
        d_in = n_bands
        for _ in range(n_layers - 1):
            w = rng.normal(0, 1 / np.sqrt(d_in), size=(d_in, dim)).astype(np.float32)
            self._projections.append(w)
            d_in = dim

    def parameter_fingerprint(self) -> bytes:
        """Byte digest of all frozen weights; used to assert the encoder
        never trains."""
        import hashlib

        h = hashlib.sha256()
        for w in self._projections:
            h.update(w.tobytes())
        return h.digest()

    def _band_energies(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        hop = round(sample_rate * self.step_ms / 1000)
        win = 2 * hop
        n_frames = n_output_frames(len(samples), sample_rate, self.step_ms)
        # center frames: pad half a window on each side
        padded = np.pad(samples.astype(np.float64), (win // 2, win))
        frames = np.stack(
            [padded[k * hop:k * hop + win] for k in range(n_frames)]
        )
        frames = frames * np.hanning(win)
        spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
        n_bins = spec.shape[1]
        edges = np.linspace(0, n_bins, self.n_bands + 1).astype(int)
        bands = np.stack(
            [spec[:, edges[b]:max(edges[b] + 1, edges[b + 1])].mean(axis=1)
             for b in range(self.n_bands)],
            axis=1,
        )
        return np.log(bands + 1e-10).astype(np.float32)

    def hidden_layers(self, samples: np.ndarray, sample_rate: int) -> list[np.ndarray]:
        h = self._band_energies(samples, sample_rate)
        h = (h - h.mean(axis=0)) / (h.std(axis=0) + 1e-5)
        layers = [h.astype(np.float32)]
        for w in self._projections:
            h = np.tanh(h @ w)
            layers.append(h.astype(np.float32))
        return layers


def resample_features(feats: np.ndarray, from_step_ms: float,
                      to_step_ms: float, n_out: int) -> np.ndarray:
    """Linear interpolation in feature space onto a different frame grid.

    For encoders whose native hop is not 20 ms; frame centers are
    aligned before interpolating.
    """
    n_in = feats.shape[0]
    t_in = (np.arange(n_in) + 0.5) * from_step_ms
    t_out = (np.arange(n_out) + 0.5) * to_step_ms
    out = np.empty((n_out, feats.shape[1]), dtype=feats.dtype)
    for j in range(feats.shape[1]):
        out[:, j] = np.interp(t_out, t_in, feats[:, j])
    return out
