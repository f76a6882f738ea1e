#include "dimo/image.hpp"

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <jpeglib.h>
#include <png.h>

namespace dimo {

namespace {

constexpr std::array<std::uint8_t, 8> kPngMagic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(std::span<const std::uint8_t> data) {
  return data.size() >= kPngMagic.size() &&
         std::equal(kPngMagic.begin(), kPngMagic.end(), data.begin());
}

bool is_jpeg(std::span<const std::uint8_t> data) {
  return data.size() >= 3 && data[0] == 0xFF && data[1] == 0xD8 && data[2] == 0xFF;
}

struct JpegErrorManager {
  jpeg_error_mgr base{};
  std::jmp_buf jump{};
  char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_quiet(j_common_ptr) {}

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Decodes into `out` when `header_only` is false. libjpeg reports errors via
// longjmp, so no objects with destructors may live across the setjmp frame.
bool run_jpeg(std::span<const std::uint8_t> data, bool header_only, Size& size,
              std::vector<std::uint8_t>* out, std::string& error) {
  jpeg_decompress_struct info{};
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.output_message = jpeg_quiet;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    error = err.message;
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&info, TRUE);
  size = {static_cast<int>(info.image_width), static_cast<int>(info.image_height)};
  if (!header_only) {
    info.out_color_space = JCS_RGB;
    jpeg_start_decompress(&info);
    const std::size_t stride = static_cast<std::size_t>(info.output_width) * 3;
    out->resize(stride * info.output_height);
    while (info.output_scanline < info.output_height) {
      JSAMPROW row = out->data() + stride * info.output_scanline;
      jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
  }
  jpeg_destroy_decompress(&info);
  return true;
}

}  // namespace

Image::Image(Size size, Rgb fill) : size_(size) {
  if (size.width < 1 || size.height < 1) {
    throw ImageError(fmt::format("invalid image size {}x{}", size.width, size.height));
  }
  pixels_.resize(static_cast<std::size_t>(size.width) * size.height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * size_.width + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Image::set(int x, int y, Rgb color) {
  const auto i = (static_cast<std::size_t>(y) * size_.width + x) * 3;
  pixels_[i] = color.r;
  pixels_[i + 1] = color.g;
  pixels_[i + 2] = color.b;
}

void Image::blend(int x, int y, Rgb color) {
  if (x >= 0 && y >= 0 && x < size_.width && y < size_.height) set(x, y, color);
}

Image Image::crop(const Region& region) const {
  if (!bounds().contains(region) || region.width() < 1 || region.height() < 1) {
    throw ImageError(fmt::format("crop {} outside image {}x{}", to_string(region), size_.width,
                                 size_.height));
  }
  Image out;
  out.size_ = region.size;
  out.pixels_.resize(static_cast<std::size_t>(region.width()) * region.height() * 3);
  const std::size_t row_bytes = static_cast<std::size_t>(region.width()) * 3;
  for (int row = 0; row < region.height(); ++row) {
    const auto src = (static_cast<std::size_t>(region.y + row) * size_.width + region.x) * 3;
    std::memcpy(out.pixels_.data() + row * row_bytes, pixels_.data() + src, row_bytes);
  }
  return out;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

}  // namespace

// A single fixed "up" filter instead of adaptive filtering: flat UI colors
// compress as well and encoding is several times faster. Output bytes depend
// only on the pixels.
std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw ImageError("cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageError("png encode failed: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("png encode failed: out of memory");
  }
  // Declared before setjmp so longjmp cannot skip its destructor.
  std::vector<std::uint8_t> out;
  const auto stride = static_cast<std::size_t>(image.width()) * 3;
  auto* base = const_cast<std::uint8_t*>(image.bytes().data());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("png encode failed");
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_UP);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, base + static_cast<std::size_t>(y) * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::span<const std::uint8_t> data) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, data.data(), data.size())) {
    throw ImageError(fmt::format("png decode failed: {}", desc.message));
  }
  desc.format = PNG_FORMAT_RGB;
  Image image(Size{static_cast<int>(desc.width), static_cast<int>(desc.height)});
  if (!png_image_finish_read(&desc, nullptr, image.bytes().data(), 0, nullptr)) {
    png_image_free(&desc);
    throw ImageError(fmt::format("png decode failed: {}", desc.message));
  }
  return image;
}

Image decode_jpeg(std::span<const std::uint8_t> data) {
  Size size;
  std::vector<std::uint8_t> rgb;
  std::string error;
  if (!run_jpeg(data, false, size, &rgb, error)) {
    throw ImageError("jpeg decode failed: " + error);
  }
  Image image(size);
  std::copy(rgb.begin(), rgb.end(), image.bytes().begin());
  return image;
}

Image decode_image(std::span<const std::uint8_t> data) {
  if (is_png(data)) return decode_png(data);
  if (is_jpeg(data)) return decode_jpeg(data);
  throw ImageError("unrecognized image format");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw ImageError("short write to " + path.string());
}

Image load_image(const std::filesystem::path& path) {
  const auto data = read_file(path);
  try {
    return decode_image(data);
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

void save_png(const Image& image, const std::filesystem::path& path) {
  write_file(path, encode_png(image));
}

std::optional<Size> probe_image_size(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  std::vector<std::uint8_t> data;
  try {
    data = read_file(path);
  } catch (const ImageError&) {
    return std::nullopt;
  }
  if (is_png(data)) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&desc, data.data(), data.size())) return std::nullopt;
    Size size{static_cast<int>(desc.width), static_cast<int>(desc.height)};
    png_image_free(&desc);
    return size;
  }
  if (is_jpeg(data)) {
    Size size;
    std::string error;
    if (!run_jpeg(data, true, size, nullptr, error)) return std::nullopt;
    return size;
  }
  return std::nullopt;
}

}  // namespace dimo
