#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace jscc {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;  // row-major, one byte per pixel
};

// Lays out a grid of equally sized square tiles: one grid row per inner
// vector, separated by single-pixel gutters. Tile values are clamped to
// [0, 1] and quantized to bytes. Every row must hold the same number of
// tiles and every tile must have side*side values.
GrayImage compose_grid(const std::vector<std::vector<std::vector<double>>>& tile_rows,
                       std::size_t side);

// Binary (P5) portable graymap, maxval 255.
void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

}  // namespace jscc
