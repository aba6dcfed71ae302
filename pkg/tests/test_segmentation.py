import numpy as np
import pytest

from evfuse import segmentation as seg


def grow(img, threshold=3.0, connectivity=4):
    return seg.region_grow(np.asarray(img, dtype=np.uint8), seg.GrowConfig(threshold, connectivity, 1))


# ---------------------------------------------------------------- region_grow

def test_uniform_frame_single_region():
    lmap = grow(np.full((20, 30), 77))
    assert lmap.n_regions == 1
    assert np.all(lmap.labels == 1)
    assert lmap.region_size(1) == 600


def test_step_edge_two_regions():
    img = np.zeros((10, 20), dtype=np.uint8)
    img[:, 10:] = 200
    lmap = grow(img, threshold=3.0)
    assert lmap.n_regions == 2
    assert np.all(lmap.labels[:, :10] == 1)
    assert np.all(lmap.labels[:, 10:] == 2)


def test_ramp_chained_growth_single_region():
    # adjacent differences of 1 chain into one region even though the
    # endpoints differ by far more than the threshold
    ramp = np.tile(np.arange(5, dtype=np.uint8), (1, 1))
    lmap = grow(ramp, threshold=3.0)
    assert lmap.n_regions == 1


def test_full_width_ramp_single_region():
    img = np.tile((np.arange(240) % 256).astype(np.uint8), (180, 1))
    lmap = grow(img, threshold=3.0)
    assert lmap.n_regions == 1


def test_partition_every_pixel_labeled(rng):
    img = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    lmap = grow(img)
    assert np.all(lmap.labels >= 1)
    assert lmap.sizes[1:].sum() == img.size
    assert lmap.sizes[0] == 0


def test_determinism_byte_identical(rng):
    img = rng.integers(0, 256, size=(48, 64), dtype=np.uint8)
    cfg = seg.GrowConfig(5.0, 4, 1)
    a = seg.region_grow(img, cfg)
    b = seg.region_grow(img.copy(), cfg)
    assert a.labels.tobytes() == b.labels.tobytes()


def test_path_property(rng):
    """Within a region, every pixel is reachable through <=threshold steps."""
    img = (rng.integers(0, 16, size=(24, 24)) * 16).astype(np.uint8)
    thr = 16.0
    lmap = grow(img, threshold=thr)
    from collections import deque

    h, w = img.shape
    for region_id in list(lmap.region_ids())[:20]:
        mask = lmap.region_mask(region_id)
        ys, xs = np.nonzero(mask)
        seen = np.zeros_like(mask)
        seen[ys[0], xs[0]] = True
        q = deque([(int(ys[0]), int(xs[0]))])
        while q:
            y, x = q.popleft()
            for dy, dx in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                y2, x2 = y + dy, x + dx
                if 0 <= y2 < h and 0 <= x2 < w and mask[y2, x2] and not seen[y2, x2]:
                    if abs(int(img[y2, x2]) - int(img[y, x])) <= thr:
                        seen[y2, x2] = True
                        q.append((y2, x2))
        assert seen[mask].all(), f"region {region_id} not path-connected under threshold"


def test_grow_config_validation():
    with pytest.raises(ValueError):
        seg.GrowConfig(threshold=-1.0)
    with pytest.raises(ValueError):
        seg.GrowConfig(connectivity=6)
    with pytest.raises(ValueError):
        seg.GrowConfig(min_region_size=0)


# ---------------------------------------------------------------- pruning

def test_prune_keeps_large_regions_compacted():
    img = np.zeros((10, 20), dtype=np.uint8)
    img[:, 10:] = 200
    lmap = grow(img)
    pruned = seg.prune_small_regions(lmap, 50)
    assert pruned.n_regions == 2
    np.testing.assert_array_equal(pruned.labels, lmap.labels)


def test_prune_small_region_to_invalid():
    img = np.zeros((10, 20), dtype=np.uint8)
    img[0, :5] = 200  # 5-pixel region
    lmap = grow(img)
    pruned = seg.prune_small_regions(lmap, 100)
    assert pruned.n_regions == 1
    assert np.all(pruned.labels[0, :5] == 0)
    assert pruned.sizes[0] == 5


def test_prune_checkerboard_fully_invalid():
    img = (np.indices((8, 8)).sum(axis=0) % 2 * 200).astype(np.uint8)
    lmap = grow(img, threshold=3.0)
    assert lmap.n_regions == 64
    pruned = seg.prune_small_regions(lmap, 2)
    assert pruned.n_regions == 0
    assert np.all(pruned.labels == 0)


def test_prune_preserves_surviving_pixel_identity(rng):
    img = rng.integers(0, 8, size=(32, 32), dtype=np.uint8) * 32
    lmap = grow(img)
    pruned = seg.prune_small_regions(lmap, 10)
    # survivors keep their co-membership: same old id <-> same new id
    for region_id in pruned.region_ids():
        old = lmap.labels[pruned.labels == region_id]
        assert len(np.unique(old)) == 1


# ---------------------------------------------------------------- boundary sets

def test_boundary_full_image_region():
    lmap = grow(np.full((12, 16), 9))
    sets = seg.region_boundary_sets(lmap, 1, ring_width=3)
    border = np.zeros((12, 16), dtype=bool)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    np.testing.assert_array_equal(sets.contour, border)
    np.testing.assert_array_equal(sets.interior, ~border)
    assert sets.contour_len + sets.interior.sum() == 12 * 16


def test_boundary_line_region_all_contour():
    img = np.zeros((9, 9), dtype=np.uint8)
    img[4, :] = 200
    lmap = grow(img)
    line_id = int(lmap.labels[4, 0])
    sets = seg.region_boundary_sets(lmap, line_id)
    assert sets.contour_len == 9
    assert sets.interior.sum() == 0


def test_boundary_10x10_square_counts():
    img = np.zeros((30, 30), dtype=np.uint8)
    img[10:20, 10:20] = 200
    lmap = grow(img)
    square_id = int(lmap.labels[15, 15])
    sets = seg.region_boundary_sets(lmap, square_id, ring_width=3)
    assert sets.contour_len == 36
    assert sets.interior.sum() == 64
    # ring: 16x16 dilation minus the 4x4 eroded core
    assert sets.ring.sum() == 16 * 16 - 4 * 4
    ys, xs = np.nonzero(sets.ring)
    assert ys.min() == 7 and ys.max() == 22 and xs.min() == 7 and xs.max() == 22


def test_boundary_counts_partition_every_region(rng):
    img = (rng.integers(0, 6, size=(40, 40)) * 40).astype(np.uint8)
    lmap = grow(img)
    for region_id in lmap.region_ids():
        sets = seg.region_boundary_sets(lmap, region_id)
        assert sets.contour_len + int(sets.interior.sum()) == lmap.region_size(region_id)
        assert not (sets.contour & sets.interior).any()


def test_boundary_unknown_region():
    lmap = grow(np.full((5, 5), 1))
    with pytest.raises(KeyError):
        seg.region_boundary_sets(lmap, 99)


def test_eight_connectivity_merges_diagonals():
    img = (np.indices((8, 8)).sum(axis=0) % 2 * 200).astype(np.uint8)
    lmap8 = grow(img, connectivity=8)
    assert lmap8.n_regions == 2
