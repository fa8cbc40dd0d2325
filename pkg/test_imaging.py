#!/usr/bin/env python3
"""
Image Grid Test Suite
Tests PNG/PGM/PPM reading and writing, decoding errors, pixel coordinates,
rendering over shifted periods and the synthetic image generators.
"""
import math
import os
import sys
import tempfile
import unittest

import numpy as np
import png

# Import the modules to test
try:
    from FourierLattice import build_gaussian_mapping, build_integer_lattice
    from FourierNetwork import NetworkSpec, init_network, set_output_weights
    from FourierTrainer import TrainConfig, image_dataset, train
    from ImageGrid import (
        CorruptImageError,
        ImageGrid,
        UnsupportedImageFormatError,
        band_limited_image,
        load_image,
        natural_image,
        pixel_coordinates,
        render,
        render_raw,
        render_tiled,
        resolve_images,
        save_image,
    )
except ImportError as e:
    print(f"Error importing modules: {e}")
    sys.exit(1)


class ImageFileTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_bytes(self, name, payload):
        with open(self.path(name), "wb") as f:
            f.write(payload)
        return self.path(name)


class TestRoundTrip(ImageFileTestCase):
    """Test lossless 8-bit round trips."""

    def setUp(self):
        super().setUp()
        rng = np.random.default_rng(0)
        self.gray = rng.integers(0, 256, size=(7, 5, 1), dtype=np.uint8)
        self.color = rng.integers(0, 256, size=(4, 6, 3), dtype=np.uint8)

    def test_png(self):
        for name, pixels in [("gray.png", self.gray), ("color.png", self.color)]:
            with self.subTest(name=name):
                save_image(ImageGrid.from_uint8(pixels), self.path(name))
                loaded = load_image(self.path(name))
                np.testing.assert_array_equal(loaded.to_uint8(), pixels)

    def test_netpbm(self):
        for name, pixels in [("gray.pgm", self.gray), ("color.ppm", self.color)]:
            with self.subTest(name=name):
                save_image(ImageGrid.from_uint8(pixels), self.path(name))
                loaded = load_image(self.path(name))
                self.assertEqual(loaded.channels, pixels.shape[2])
                np.testing.assert_array_equal(loaded.to_uint8(), pixels)

    def test_value_scaling(self):
        save_image(ImageGrid.from_uint8(np.array([[0, 255]], dtype=np.uint8)), self.path("s.pgm"))
        np.testing.assert_array_equal(load_image(self.path("s.pgm")).data[0, :, 0], [0.0, 1.0])

    def test_pgm_with_comment(self):
        path = self.write_bytes("c.pgm", b"P5\n# made by hand\n2 1\n255\n\x00\xff")
        np.testing.assert_array_equal(load_image(path).to_uint8()[0, :, 0], [0, 255])

    def test_png_alpha_dropped(self):
        rows = [[10, 20, 30, 255, 40, 50, 60, 0]]
        with open(self.path("rgba.png"), "wb") as f:
            png.Writer(width=2, height=1, greyscale=False, alpha=True, bitdepth=8).write(f, rows)
        loaded = load_image(self.path("rgba.png"))
        self.assertEqual(loaded.channels, 3)
        np.testing.assert_array_equal(loaded.to_uint8()[0], [[10, 20, 30], [40, 50, 60]])


class TestDecodingErrors(ImageFileTestCase):
    """Test unsupported and corrupt inputs."""

    def test_sixteen_bit_png(self):
        with open(self.path("deep.png"), "wb") as f:
            png.Writer(width=2, height=2, greyscale=True, bitdepth=16).write(f, [[0, 65535], [1, 2]])
        with self.assertRaises(UnsupportedImageFormatError):
            load_image(self.path("deep.png"))

    def test_sixteen_bit_pgm(self):
        path = self.write_bytes("deep.pgm", b"P5\n1 1\n65535\n\x00\x01")
        with self.assertRaises(UnsupportedImageFormatError):
            load_image(path)

    def test_ascii_netpbm(self):
        path = self.write_bytes("ascii.pgm", b"P2\n1 1\n255\n7\n")
        with self.assertRaises(UnsupportedImageFormatError):
            load_image(path)

    def test_unknown_format(self):
        path = self.write_bytes("noise.bin", b"GIF89a....")
        with self.assertRaises(UnsupportedImageFormatError):
            load_image(path)

    def test_short_raster(self):
        path = self.write_bytes("short.pgm", b"P5\n4 4\n255\n\x00\x01\x02")
        with self.assertRaises(CorruptImageError):
            load_image(path)

    def test_truncated_png(self):
        path = self.write_bytes("cut.png", b"\x89PNG\r\n\x1a\n\x00\x00")
        with self.assertRaises(CorruptImageError):
            load_image(path)

    def test_error_codes(self):
        self.assertEqual(UnsupportedImageFormatError.code, 3)
        self.assertEqual(CorruptImageError.code, 4)

    def test_unsupported_output_extension(self):
        with self.assertRaises(UnsupportedImageFormatError):
            save_image(ImageGrid(np.zeros((2, 2))), self.path("out.gif"))


class TestImageGrid(unittest.TestCase):
    """Test the pixel container."""

    def test_validation(self):
        with self.assertRaises(ValueError):
            ImageGrid(np.full((2, 2), 1.5))
        with self.assertRaises(ValueError):
            ImageGrid(np.zeros((2, 2, 2)))

    def test_gray_gets_channel_axis(self):
        image = ImageGrid(np.zeros((3, 4)))
        self.assertEqual((image.height, image.width, image.channels), (3, 4, 1))


class TestCoordinates(unittest.TestCase):
    """Pixel (i, j) sits at (j / w, i / h)."""

    def test_small_grid(self):
        coords = pixel_coordinates(2, 3)
        expected = [[0, 0], [1 / 3, 0], [2 / 3, 0], [0, 0.5], [1 / 3, 0.5], [2 / 3, 0.5]]
        np.testing.assert_allclose(coords, expected)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            pixel_coordinates(0, 3)


class TestRendering(unittest.TestCase):
    """Test rendering over one or several periods."""

    def setUp(self):
        B = build_integer_lattice(2, 3)
        self.params = init_network(NetworkSpec(out_dim=3, depth=2, width=8, mapping=B), seed=0)

    def test_shapes(self):
        self.assertEqual(render(self.params, 8, 6).data.shape, (8, 6, 3))
        self.assertEqual(render_tiled(self.params, 8, 6, 3).data.shape, (24, 18, 3))

    def test_integer_offsets_repeat(self):
        base = render_raw(self.params, 8, 8)
        np.testing.assert_allclose(render_raw(self.params, 8, 8, 1, 0), base, atol=1e-9)
        np.testing.assert_allclose(render_raw(self.params, 8, 8, -2, 3), base, atol=1e-9)

    def test_tiles_repeat(self):
        tiled = render_tiled(self.params, 5, 5, 2).data
        np.testing.assert_allclose(tiled[:5, :5], tiled[5:, 5:], atol=1e-9)
        np.testing.assert_allclose(tiled[:5, 5:], tiled[5:, :5], atol=1e-9)

    def test_gaussian_mapping_does_not_repeat(self):
        B = build_gaussian_mapping(2, 64, 10.0, seed=0)
        params = init_network(NetworkSpec.mapped_perceptron(B), seed=0)
        difference = render_raw(params, 8, 8, 1, 0) - render_raw(params, 8, 8)
        self.assertGreater(np.abs(difference).max(), 1e-3)

    def test_clipped(self):
        data = render(self.params, 8, 8).data
        self.assertGreaterEqual(data.min(), 0.0)
        self.assertLessEqual(data.max(), 1.0)

    def test_psnr_uses_unclamped_output(self):
        B = build_integer_lattice(2, 1)
        params = init_network(NetworkSpec.mapped_perceptron(B), seed=0)
        params = set_output_weights(params, np.zeros((1, 2 * B.m)), np.array([1.5]))
        dataset = image_dataset(ImageGrid(np.ones((4, 4))))
        run = train(params, dataset, TrainConfig(iterations=1, learning_rate=0.0))
        # every output is 0.5 above the target until it is clamped
        self.assertAlmostEqual(run.history[0].train_psnr, -10.0 * math.log10(0.25))
        np.testing.assert_array_equal(render(params, 4, 4).data, np.ones((4, 4, 1)))


class TestSyntheticImages(unittest.TestCase):
    """Test the generated test images."""

    def test_band_limited_values(self):
        image = band_limited_image(4, 4, [((1, 0), 0.25, "cos")])
        # x = j / 4: cos(0), cos(pi/2), cos(pi), cos(3 pi/2)
        np.testing.assert_allclose(image.data[0, :, 0], [0.75, 0.5, 0.25, 0.5], atol=1e-15)

    def test_band_limited_range_checked(self):
        with self.assertRaises(ValueError):
            band_limited_image(4, 4, [((1, 0), 0.6, "cos")])

    def test_natural_image(self):
        a = natural_image(32, 32, seed=1)
        b = natural_image(32, 32, seed=1)
        c = natural_image(32, 32, seed=2)
        np.testing.assert_array_equal(a.data, b.data)
        self.assertFalse(np.array_equal(a.data, c.data))
        self.assertEqual(a.channels, 3)
        self.assertGreaterEqual(a.data.min(), 0.05 - 1e-12)
        self.assertLessEqual(a.data.max(), 0.95 + 1e-12)

    def test_resolve_images(self):
        self.assertEqual(len(resolve_images([], "natural", size=16, count=3)), 3)
        images = resolve_images([], "band_limited", size=16, count=2)
        self.assertEqual(images[0].channels, 1)
        with self.assertRaises(ValueError):
            resolve_images([], None)


if __name__ == '__main__':
    unittest.main()
