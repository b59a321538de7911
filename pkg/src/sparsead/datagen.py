"""Deterministic synthetic data.

Every generator draws from ``numpy.random.Generator(PCG64(seed))`` (NumPy's
PCG64, XSL-RR 128/64 output), so fixtures depend only on the parameters and
the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sparsead.dictionary import Dictionary
from sparsead.features import DEPTH, PATCH_H, PATCH_W, VideoTensor


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class RecoveryInstance:
    D: Dictionary
    x_star: np.ndarray
    y: np.ndarray
    sigma: float
    seed: int

    @property
    def support(self):
        return np.flatnonzero(self.x_star)


def gaussian_dictionary(rng, p, m):
    A = rng.standard_normal((p, m))
    return A / np.linalg.norm(A, axis=0)


def gen_recovery(p, m, k, sigma=0.0, trials=1, seed=0, shared_dictionary=False):
    """Sparse recovery problems ``y = D x* + sigma * noise``.

    ``D`` has unit-norm Gaussian columns; ``x*`` has ``k`` non-zeros with
    random signs and magnitudes uniform in [0.5, 1.5]. With
    ``shared_dictionary`` every trial uses the same ``D``.
    """
    if not (0 <= k < p < m):
        raise ValueError(f"need 0 <= k < p < m, got k={k}, p={p}, m={m}")
    if sigma < 0 or trials < 1:
        raise ValueError("sigma must be >= 0 and trials >= 1")
    rng = rng_for(seed)
    shared = Dictionary(gaussian_dictionary(rng, p, m)) if shared_dictionary else None
    out = []
    for _ in range(trials):
        D = shared if shared is not None else Dictionary(gaussian_dictionary(rng, p, m))
        x = np.zeros(m)
        idx = rng.choice(m, size=k, replace=False)
        x[idx] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.5, 1.5, size=k)
        y = D.atoms @ x
        if sigma > 0:
            y = y + sigma * rng.standard_normal(p)
        out.append(RecoveryInstance(D, x, y, float(sigma), seed))
    return out


@dataclass
class SyntheticScene:
    video: VideoTensor
    pixel_masks: np.ndarray
    frame_labels: dict[int, bool]
    seed: int
    events: list = field(default_factory=list)


def _background(rng, T, H, W):
    t = np.arange(T)[:, None, None]
    y = np.arange(H)[None, :, None]
    x = np.arange(W)[None, None, :]
    phase = rng.uniform(0, 2 * np.pi, size=2)
    bg = (0.5
          + 0.12 * np.sin(2 * np.pi * (x - 0.3 * t) / 37.0 + phase[0]) * np.cos(2 * np.pi * (y + 0.2 * t) / 29.0)
          + 0.05 * np.sin(2 * np.pi * (x + y) / 53.0 + 0.02 * t + phase[1]))
    return bg + 0.01 * rng.standard_normal((T, H, W))


def gen_scene(frames, height, width, anomaly_rate, seed=0, event_length=10, radius=5, speed=1.0,
              contrast=0.05):
    """Toy surveillance clip with planted anomalies.

    The background is a slowly drifting low-frequency texture plus faint
    noise. An anomaly is a bright disc crossing the frame at ``speed``
    pixels per frame for ``event_length`` frames, ``contrast`` brighter than
    the background. Events start on multiples
    of ``event_length`` (itself a multiple of the cube depth) so whole cubes
    see them; the number of events is ``round(anomaly_rate * frames /
    event_length)``. Masks mark the disc pixels.
    """
    if frames < DEPTH or height < PATCH_H or width < PATCH_W:
        raise ValueError(f"scene {frames}x{height}x{width} smaller than one {DEPTH}x{PATCH_H}x{PATCH_W} cube")
    if not 0.0 <= anomaly_rate <= 1.0:
        raise ValueError("anomaly_rate must be in [0, 1]")
    if event_length < DEPTH or event_length % DEPTH:
        raise ValueError(f"event_length must be a positive multiple of {DEPTH}")
    travel = speed * (event_length - 1)
    if 2 * radius + travel + 2 > max(height, width) or 2 * radius + 2 > min(height, width):
        raise ValueError("scene too small for the anomaly trajectory")

    rng = rng_for(seed)
    video = _background(rng, frames, height, width)
    masks = np.zeros((frames, height, width), dtype=bool)

    slots = frames // event_length
    n_events = min(slots, int(round(anomaly_rate * frames / event_length)))
    starts = np.sort(rng.choice(slots, size=n_events, replace=False)) * event_length if n_events else []
    yy, xx = np.mgrid[0:height, 0:width]
    events = []
    for t0 in starts:
        horizontal = width - 2 * radius - 2 >= travel and (height - 2 * radius - 2 < travel or rng.random() < 0.5)
        sign = rng.choice([-1.0, 1.0])
        if horizontal:
            cy = rng.uniform(radius + 1, height - radius - 1)
            lo, hi = radius + 1, width - radius - 1 - travel
            cx0 = rng.uniform(lo, hi) if hi > lo else lo
            if sign < 0:
                cx0 += travel
            vel = (0.0, sign * speed)
            c0 = (cy, cx0)
        else:
            cx = rng.uniform(radius + 1, width - radius - 1)
            lo, hi = radius + 1, height - radius - 1 - travel
            cy0 = rng.uniform(lo, hi) if hi > lo else lo
            if sign < 0:
                cy0 += travel
            vel = (sign * speed, 0.0)
            c0 = (cy0, cx)
        for i in range(event_length):
            t = int(t0) + i
            cy, cx = c0[0] + vel[0] * i, c0[1] + vel[1] * i
            disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
            video[t][disc] += contrast
            masks[t] |= disc
        events.append({"start": int(t0), "length": event_length, "origin": c0, "velocity": vel})

    video = np.clip(video, 0.0, 1.0).astype(np.float32)
    labels = {f: bool(masks[f].any()) for f in range(frames)}
    return SyntheticScene(VideoTensor(video), masks, labels, seed, events)
