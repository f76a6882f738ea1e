#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dimo/geometry.hpp"

namespace dimo {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Packed 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  explicit Image(Size size, Rgb fill = {255, 255, 255});

  Size size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }
  bool empty() const { return pixels_.empty(); }
  Region bounds() const { return Region::of(size_); }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb color);
  /// Writes only when (x, y) is on the canvas.
  void blend(int x, int y, Rgb color);

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  /// Copy of `region`; the region must lie inside the image.
  Image crop(const Region& region) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Size size_;
  std::vector<std::uint8_t> pixels_;
};

/// Lossless PNG, fixed encoder settings so equal images give equal bytes.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> data);
Image decode_jpeg(std::span<const std::uint8_t> data);
/// Sniffs the container (PNG or JPEG) from the magic bytes.
Image decode_image(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

Image load_image(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

/// Reads only the header of a PNG or JPEG file. Returns nullopt when the
/// file is missing, truncated or not a recognized image.
std::optional<Size> probe_image_size(const std::filesystem::path& path);

}  // namespace dimo
