import numpy as np
import pytest

from fittsground.geom import BoundingBox, Point, PatchGrid, Region, patch_region, overlap_area, intersects, iou, \
    bbox_center, iou_matrix, overlap_mask, centers_inside, element_mask


class TestBoundingBox:

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            BoundingBox(10, 0, 10, 5)
        with pytest.raises(ValueError):
            BoundingBox(0, 5, 10, 1)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, float('nan'), 5)

    def test_from_list(self):
        b = BoundingBox.from_list([1, 2, 3, 4])
        assert b.to_list() == [1., 2., 3., 4.]
        with pytest.raises(ValueError):
            BoundingBox.from_list([1, 2, 3])

    def test_contains_is_boundary_inclusive(self):
        b = BoundingBox(0, 0, 10, 10)
        assert b.contains(Point(0, 0))
        assert b.contains(Point(10, 5))
        assert not b.contains(Point(10.001, 5))

    def test_check_inside(self):
        BoundingBox(0, 0, 64, 64).check_inside(64, 64)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 65, 64).check_inside(64, 64)


class TestPatchGrid:

    def test_first_patch(self):
        assert patch_region(PatchGrid(64, 64, 16), 0) == Region(0, 16, 0, 16)

    def test_row_major(self):
        assert patch_region(PatchGrid(64, 64, 16), 5) == Region(16, 32, 16, 32)

    def test_clipped_edge_patch(self):
        grid = PatchGrid(70, 70, 16)
        assert grid.shape == (5, 5)
        assert patch_region(grid, 4) == Region(64, 70, 0, 16)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            patch_region(PatchGrid(64, 64, 16), 16)
        with pytest.raises(IndexError):
            patch_region(PatchGrid(64, 64, 16), -1)

    def test_every_pixel_in_exactly_one_patch(self):
        grid = PatchGrid(70, 70, 16)
        R = grid.regions
        ys, xs = np.mgrid[0:70, 0:70] + 0.5
        inside = (R[:, 0, None] <= xs.ravel()) & (xs.ravel() < R[:, 1, None]) & \
                 (R[:, 2, None] <= ys.ravel()) & (ys.ravel() < R[:, 3, None])
        assert np.all(inside.sum(axis=0) == 1)

    @pytest.mark.parametrize('w, h, s', [(64, 64, 16), (70, 53, 16), (256, 192, 14), (10, 10, 3.5)])
    def test_tiling(self, w, h, s):
        grid = PatchGrid(w, h, s)
        areas = [grid.region(i).area for i in range(grid.size)]
        assert np.isclose(sum(areas), w * h)
        for i in range(grid.size):
            for j in range(i + 1, grid.size):
                assert overlap_area(grid.region(i), grid.region(j)) == 0

    def test_patch_of(self):
        grid = PatchGrid(64, 64, 16)
        assert grid.patch_of(Point(0, 0)) == 0
        assert grid.patch_of(Point(17, 17)) == 5
        assert grid.patch_of(Point(64, 64)) == 15

    def test_centers(self):
        grid = PatchGrid(70, 16, 16)
        np.testing.assert_allclose(grid.centers, [[8, 8], [24, 8], [40, 8], [56, 8], [67, 8]])


class TestOverlap:

    def test_containment(self):
        assert intersects(Region(0, 16, 0, 16), BoundingBox(4, 4, 12, 12))

    def test_shared_edge(self):
        assert not intersects(Region(0, 16, 0, 16), BoundingBox(16, 0, 32, 16))

    def test_sliver(self):
        r, b = Region(0, 16, 0, 16), BoundingBox(15.5, 15.5, 20, 20)
        assert overlap_area(r, b) == pytest.approx(0.25)
        assert intersects(r, b)

    def test_overlap_mask(self):
        grid = PatchGrid(64, 64, 16)
        b = BoundingBox(10, 10, 30, 20)
        expected = [intersects(grid.region(i), b) for i in range(grid.size)]
        np.testing.assert_array_equal(overlap_mask(grid, b), expected)

    def test_element_mask(self):
        grid = PatchGrid(64, 64, 16)
        b = BoundingBox(10, 4, 40, 20)
        mask = element_mask(grid, b)
        assert list(np.flatnonzero(mask)) == [1, 2]
        assert np.all(overlap_mask(grid, b)[mask])
        np.testing.assert_array_equal(centers_inside(grid, [b.to_list(), [0, 0, 64, 64]])[0], mask)

    def test_small_element_falls_back_to_its_centre(self):
        grid = PatchGrid(64, 64, 16)
        b = BoundingBox(17, 17, 20, 20)
        assert not centers_inside(grid, b).any()
        assert list(np.flatnonzero(element_mask(grid, b))) == [grid.patch_of(b.center)]

    def test_every_box_hits_a_patch(self):
        rng = np.random.default_rng(3)
        grid = PatchGrid(70, 53, 16)
        for _ in range(200):
            x1, y1 = rng.uniform(0, 60), rng.uniform(0, 45)
            b = BoundingBox(x1, y1, x1 + rng.uniform(0.01, 70 - x1), y1 + rng.uniform(0.01, 53 - y1))
            assert overlap_mask(grid, b).any()


class TestIoU:

    def test_identical(self):
        b = BoundingBox(3, 4, 20, 30)
        assert iou(b, b) == pytest.approx(1.)

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(20, 20, 30, 30)) == 0.

    def test_offset_squares(self):
        a, b = BoundingBox(0, 0, 10, 10), BoundingBox(5, 5, 15, 15)
        assert iou(a, b) == pytest.approx(25 / 175)

    def test_rasterized(self):
        # 0.01 px raster of the two offset squares
        step = 0.01
        xs = np.arange(0, 15, step) + step / 2
        in_a = xs < 10
        in_b = xs > 5
        inter = np.outer(in_a & in_b, in_a & in_b).sum()
        union = np.outer(in_a, in_a).sum() + np.outer(in_b, in_b).sum() - inter
        assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 5, 15, 15)) == pytest.approx(inter / union, abs=1e-3)

    def test_symmetry_and_matrix(self):
        rng = np.random.default_rng(0)
        boxes = []
        for _ in range(12):
            x1, y1 = rng.uniform(0, 50, size=2)
            w, h = rng.uniform(1, 30, size=2)
            boxes.append(BoundingBox(x1, y1, x1 + w, y1 + h))
        M = iou_matrix(boxes, boxes)
        for i, a in enumerate(boxes):
            for j, b in enumerate(boxes):
                assert iou(a, b) == pytest.approx(iou(b, a))
                assert M[i, j] == pytest.approx(iou(a, b))
                assert 0 <= M[i, j] <= 1 + 1e-12


class TestCenter:

    def test_values(self):
        assert bbox_center(BoundingBox(0, 0, 10, 10)) == Point(5, 5)
        assert bbox_center(BoundingBox(10, 10, 30, 20)) == Point(20, 15)

    def test_inside(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x1, y1 = rng.uniform(-100, 100, size=2)
            b = BoundingBox(x1, y1, x1 + rng.uniform(1e-6, 50), y1 + rng.uniform(1e-6, 50))
            assert b.contains(bbox_center(b))
