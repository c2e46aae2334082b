import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udet.data import (
    AugmentConfig,
    DatasetSpec,
    augment,
    decode_ppm,
    generate_dataset,
    hsv_jitter,
    load_annotations,
    load_image,
    parse_annotations,
    read_manifest,
    save_annotations,
    save_image,
)
from udet.data.augment import affine, scale_hsv
from udet.data.generate import render_example, shape_mask
from udet.detect import GroundTruthBox
from udet.errors import ConfigurationError, ParseError, UnsupportedFormatError


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# --- PPM ---


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
    save_image(pixels / 255.0, tmp_path / "a.ppm")
    back = load_image(tmp_path / "a.ppm")
    assert back.shape == (5, 7, 3)
    np.testing.assert_array_equal(np.rint(back * 255).astype(np.uint8), pixels)
    save_image(back, tmp_path / "b.ppm")
    assert (tmp_path / "a.ppm").read_bytes() == (tmp_path / "b.ppm").read_bytes()


def test_ppm_minimal_header():
    payload = bytes(range(12))
    img = decode_ppm(b"P6 2 2 255\n" + payload)
    assert img.shape == (2, 2, 3)
    assert img[1, 1, 2] == pytest.approx(11 / 255)


def test_ppm_comments_in_header():
    img = decode_ppm(b"P6\n# made by hand\n1 1\n255\n" + b"\x00\x80\xff")
    np.testing.assert_allclose(img[0, 0], [0, 128 / 255, 1])


def test_ppm_maxval_unsupported():
    with pytest.raises(UnsupportedFormatError):
        decode_ppm(b"P6 1 1 65535\n" + bytes(6))


@pytest.mark.parametrize(
    "data, offset",
    [
        (b"P3 1 1 255\n000", "byte 0"),
        (b"P6 2 2 255\n" + bytes(11), "byte 22"),
        (b"P6 2 x 255\n" + bytes(12), "byte 5"),
        (b"P6 2", "byte 4"),
    ],
)
def test_ppm_errors_name_offset(data, offset):
    with pytest.raises(ParseError, match=offset):
        decode_ppm(data)


# --- annotations ---


def test_annotation_examples():
    assert parse_annotations("") == []
    (box,) = parse_annotations("0 0.5 0.5 0.4 0.4")
    assert box == GroundTruthBox(0, 0.5, 0.5, 0.4, 0.4)
    with pytest.raises(ParseError, match="a.txt:1:"):
        parse_annotations("1 0.5", "a.txt")
    with pytest.raises(ParseError, match=":2:"):
        parse_annotations("0 0.5 0.5 0.4 0.4\n0 1.5 0.5 0.4 0.4\n")


box_st = st.builds(
    GroundTruthBox,
    st.integers(0, 19),
    st.floats(0, 1),
    st.floats(0, 1),
    st.floats(1e-6, 1, exclude_min=True),
    st.floats(1e-6, 1),
)


@settings(deadline=None)
@given(st.lists(box_st, max_size=10))
def test_annotation_round_trip(tmp_path_factory, boxes):
    path = tmp_path_factory.mktemp("ann") / "a.txt"
    save_annotations(boxes, path)
    back = load_annotations(path)
    assert len(back) == len(boxes)
    for a, b in zip(boxes, back):
        assert a.class_id == b.class_id
        assert (b.cx, b.cy, b.w, b.h) == tuple(float(f"{v:.9g}") for v in (a.cx, a.cy, a.w, a.h))
    save_annotations(back, path)
    assert load_annotations(path) == back


# --- generation ---


def test_circle_geometry():
    mask = shape_mask("circle", (0.5, 0.5, 0.4, 0.4), 100)
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    assert rows.max() - rows.min() + 1 == pytest.approx(40, abs=1)
    assert cols.max() - cols.min() + 1 == pytest.approx(40, abs=1)


def test_generated_circle_annotation(tmp_path):
    spec = DatasetSpec(image_size=100, classes=("circle",), objects=(1, 1), object_size=(0.4, 0.4), count=3, seed=2)
    manifest = generate_dataset(spec, tmp_path)
    for _, ann in read_manifest(manifest):
        (box,) = load_annotations(ann)
        assert (box.w, box.h) == (pytest.approx(0.4), pytest.approx(0.4))


def test_generation_count_zero(tmp_path):
    manifest = generate_dataset(DatasetSpec(count=0), tmp_path)
    assert manifest.read_text() == ""
    assert read_manifest(manifest) == []


def test_generation_deterministic(tmp_path):
    spec = DatasetSpec(count=6, seed=3)
    generate_dataset(spec, tmp_path / "a")
    generate_dataset(spec, tmp_path / "b")
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
    generate_dataset(DatasetSpec(count=6, seed=4), tmp_path / "c")
    assert tree_bytes(tmp_path / "a") != tree_bytes(tmp_path / "c")


def test_manifest_lines(tmp_path):
    manifest = generate_dataset(DatasetSpec(count=10, seed=1), tmp_path)
    lines = manifest.read_text().splitlines()
    assert len(lines) == 10
    for img, ann in read_manifest(manifest):
        assert img.exists() and ann.exists()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_boxes_tightly_contain_rendered_shapes(seed):
    n = 64
    spec = DatasetSpec(image_size=n, objects=(1, 3))
    image, boxes = render_example(spec, np.random.default_rng(seed))
    pixels = np.rint(image * 255).astype(int)
    flat = pixels.reshape(-1, 3)
    colors, counts = np.unique(flat, axis=0, return_counts=True)
    background = colors[np.argmax(counts)]
    fg = np.any(pixels != background, axis=-1)
    ys, xs = np.nonzero(fg)
    tol = 1.0 / n
    inside_any = np.zeros(len(xs), dtype=bool)
    for b in boxes:
        x0, y0, x1, y1 = b.corners
        # pixel i covers [i/n, (i+1)/n]; containment within one pixel
        lo_x, hi_x, lo_y, hi_y = xs / n, (xs + 1) / n, ys / n, (ys + 1) / n
        inside = (lo_x >= x0 - tol) & (hi_x <= x1 + tol) & (lo_y >= y0 - tol) & (hi_y <= y1 + tol)
        inside_any |= inside
        # tightness: a triangle apex narrower than a pixel can leave its first row
        # up to ~1.5 px short of the geometric top, hence two pixels here
        assert abs(lo_x[inside].min() - x0) <= 2 * tol and abs(hi_x[inside].max() - x1) <= 2 * tol
        assert abs(lo_y[inside].min() - y0) <= 2 * tol and abs(hi_y[inside].max() - y1) <= 2 * tol
    assert inside_any.all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_collision_free_boxes(seed):
    spec = DatasetSpec(objects=(3, 3), grid=4)
    _, boxes = render_example(spec, np.random.default_rng(seed))
    cells = {(min(int(b.cy * 4), 3), min(int(b.cx * 4), 3)) for b in boxes}
    assert len(cells) == len(boxes)
    for b in boxes:
        x0, y0, x1, y1 = b.corners
        assert 0 <= x0 and x1 <= 1 and 0 <= y0 and y1 <= 1


def test_invalid_spec():
    with pytest.raises(ConfigurationError):
        DatasetSpec(classes=("hexagon",))
    with pytest.raises(ConfigurationError):
        DatasetSpec(object_size=(0.5, 1.5))
    with pytest.raises(ConfigurationError):
        DatasetSpec(objects=(3, 1))


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        generate_dataset(DatasetSpec(count=1), blocker / "out")


# --- augmentation ---


def test_affine_identity():
    rng = np.random.default_rng(0)
    image = rng.uniform(size=(16, 16, 3))
    boxes = [GroundTruthBox(1, 0.3, 0.6, 0.2, 0.4)]
    out, moved = affine(image, boxes, 1.0, 0.0, 0.0)
    np.testing.assert_array_equal(out, image)
    assert len(moved) == 1
    np.testing.assert_allclose(moved[0].corners, boxes[0].corners, atol=1e-12)
    assert moved[0].class_id == 1


def test_affine_translation_drops_box():
    box = GroundTruthBox(0, 0.6, 0.5, 0.2, 0.2)
    assert affine(np.zeros((8, 8, 3)), [box], 1.0, 0.5, 0.0)[1] == []
    (kept,) = affine(np.zeros((8, 8, 3)), [box], 1.0, 0.3, 0.0)[1]
    assert kept.corners == pytest.approx((0.8, 0.4, 1.0, 0.6))


def test_affine_scale_extent():
    (box,) = affine(np.zeros((8, 8, 3)), [GroundTruthBox(0, 0.5, 0.5, 0.5, 0.5)], 1.2, 0.0, 0.0)[1]
    assert box.w == pytest.approx(0.6) and box.h == pytest.approx(0.6)


def test_affine_translation_moves_pixels():
    image = np.zeros((10, 10, 3))
    image[2, 3] = 1.0
    out, _ = affine(image, [], 1.0, 0.2, 0.1)
    assert out[3, 5, 0] == 1.0
    assert out[0, 0, 0] == 0.5  # uncovered area is filled


@settings(max_examples=60, deadline=None)
@given(st.lists(box_st, max_size=6), st.integers(0, 10**6))
def test_augmented_boxes_valid(boxes, seed):
    image = np.full((8, 8, 3), 0.3)
    rng = np.random.default_rng(seed)
    _, out = augment(image, boxes, rng, AugmentConfig())
    assert len(out) <= len(boxes)
    for b in out:
        x0, y0, x1, y1 = b.corners
        assert -1e-12 <= x0 <= x1 <= 1 + 1e-12 and -1e-12 <= y0 <= y1 <= 1 + 1e-12


def test_augment_reproducible():
    image = np.random.default_rng(1).uniform(size=(16, 16, 3))
    boxes = [GroundTruthBox(0, 0.5, 0.5, 0.3, 0.3)]
    a = augment(image, boxes, np.random.default_rng(5))
    b = augment(image, boxes, np.random.default_rng(5))
    assert a[0].tobytes() == b[0].tobytes() and a[1] == b[1]


def test_augment_disabled_is_identity():
    image = np.random.default_rng(1).uniform(size=(4, 4, 3))
    out, boxes = augment(image, [], np.random.default_rng(0), AugmentConfig(enabled=False))
    assert out is image and boxes == []


def test_hsv_identity_factor():
    image = np.random.default_rng(2).uniform(size=(20, 20, 3))
    np.testing.assert_allclose(scale_hsv(image, 1.0, 1.0), image, atol=1e-6)
    np.testing.assert_allclose(hsv_jitter(image, np.random.default_rng(0), 1.0), image, atol=1e-6)


@given(st.floats(0, 1), st.floats(1 / 1.5, 1.5))
def test_hsv_gray_fixed_under_saturation(v, sat):
    pixel = np.full((1, 1, 3), v)
    np.testing.assert_allclose(scale_hsv(pixel, sat, 1.0), pixel, atol=1e-12)


def test_hsv_value_clamp():
    pixel = np.array([[[0.8, 0.4, 0.2]]])
    out = scale_hsv(pixel, 1.0, 1.5)
    assert out.max() == pytest.approx(1.0)
    # hue and saturation kept: channel ratios unchanged
    np.testing.assert_allclose(out[0, 0] / out.max(), pixel[0, 0] / 0.8, atol=1e-12)


def test_hsv_jitter_factor_range():
    rng = np.random.default_rng(0)
    pixel = np.array([[[0.2, 0.3, 0.4]]])
    for _ in range(200):
        v = hsv_jitter(pixel, rng, 1.5).max()
        assert 0.4 / 1.5 - 1e-12 <= v <= 0.4 * 1.5 + 1e-12
    with pytest.raises(ValueError):
        hsv_jitter(pixel, rng, 0.9)
