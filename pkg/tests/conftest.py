import numpy as np
import pytest


def unit_gaussian(rng, p, m):
    A = rng.standard_normal((p, m))
    return A / np.linalg.norm(A, axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pixel_clip(seed, T=10, H=30, W=46, depth=5):
    """Scores and masks on a 2 x 2 patch grid with tied scores.

    Returns ``(ScoreSet, GroundTruth, oracle_features)`` where the last item
    lists ``(score, frames, rect)`` for the brute-force evaluator.
    """
    from sparsead.detect import aggregate_frames
    from sparsead.evaluate import GroundTruth
    from sparsead.features import extract_cubes

    rng = np.random.default_rng(seed)
    prov = [c.provenance for c in extract_cubes(np.zeros((T, H, W)), depth=depth)]
    scores = np.round(rng.random(len(prov)), 1)
    masks = np.zeros((T, H, W), dtype=bool)
    abnormal = rng.random(T) < 0.5
    abnormal[0], abnormal[-1] = True, False
    for f in np.flatnonzero(abnormal):
        h, w = rng.integers(2, 12), rng.integers(2, 20)
        y, x = rng.integers(0, H - h), rng.integers(0, W - w)
        masks[f, y:y + h, x:x + w] = True
    ss = aggregate_frames(scores, prov)
    feats = [(float(s), set(p.frames()), p.pixel_rect) for s, p in zip(scores, prov)]
    return ss, GroundTruth.from_masks(masks), feats


def overlap_clip(covered, total=100):
    """Frame 0 is abnormal with ``total`` truth pixels, ``covered`` of which
    fall inside the only feature footprint that touches them; frame 1 is
    normal. Footprints are 23 x 15 and the frame is 30 wide, so pixels in
    columns 23..29 are never covered by any feature.
    """
    from sparsead.detect import aggregate_frames
    from sparsead.evaluate import GroundTruth
    from sparsead.features import Provenance

    H, W = 30, 30
    masks = np.zeros((2, H, W), dtype=bool)
    inside = [(y, x) for y in range(15) for x in range(23)][:covered]
    outside = [(y, x) for y in range(H) for x in range(23, W)][:total - covered]
    for y, x in inside + outside:
        masks[0, y, x] = True
    prov = [Provenance(0, 1, 0, 0, (0, 0, 23, 15)), Provenance(0, 1, 1, 0, (0, 15, 23, 15)),
            Provenance(1, 1, 0, 0, (0, 0, 23, 15)), Provenance(1, 1, 1, 0, (0, 15, 23, 15))]
    scores = np.array([0.9, 0.2, 0.5, 0.1])
    ss = aggregate_frames(scores, prov)
    feats = [(float(s), set(p.frames()), p.pixel_rect) for s, p in zip(scores, prov)]
    return ss, GroundTruth.from_masks(masks), feats


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # keep the call-phase report so fixtures can see how the test ended
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
