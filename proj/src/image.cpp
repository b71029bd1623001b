#include "jscc/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace jscc {

namespace {

unsigned char quantize(double v) {
  double c = std::min(1.0, std::max(0.0, v));
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

GrayImage compose_grid(const std::vector<std::vector<std::vector<double>>>& tile_rows,
                       std::size_t side) {
  if (tile_rows.empty() || tile_rows[0].empty()) {
    throw std::runtime_error("grid needs at least one tile");
  }
  std::size_t cols = tile_rows[0].size();
  for (const auto& row : tile_rows) {
    if (row.size() != cols) throw std::runtime_error("grid rows must hold equally many tiles");
    for (const auto& tile : row) {
      if (tile.size() != side * side) {
        throw std::runtime_error("grid tile has " + std::to_string(tile.size()) +
                                 " values, expected " + std::to_string(side * side));
      }
    }
  }

  std::size_t rows = tile_rows.size();
  GrayImage image;
  image.width = cols * side + (cols - 1);
  image.height = rows * side + (rows - 1);
  image.pixels.assign(image.width * image.height, 255);  // gutters stay white

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t top = r * (side + 1);
      std::size_t left = c * (side + 1);
      const std::vector<double>& tile = tile_rows[r][c];
      for (std::size_t i = 0; i < side; ++i) {
        for (std::size_t j = 0; j < side; ++j) {
          image.pixels[(top + i) * image.width + (left + j)] = quantize(tile[i * side + j]);
        }
      }
    }
  }
  return image;
}

void write_pgm(const std::string& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw std::runtime_error("image pixel buffer does not match its dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image file: " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error("short write on image file: " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error(path + ": not a binary graymap");
  std::size_t width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  if (!in || maxval != 255) throw std::runtime_error(path + ": unsupported graymap header");
  in.get();  // single whitespace byte before the payload

  GrayImage image;
  image.width = width;
  image.height = height;
  image.pixels.resize(width * height);
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw std::runtime_error(path + ": pixel payload truncated");
  }
  return image;
}

}  // namespace jscc
