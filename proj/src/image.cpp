#include "repgap/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

#include "repgap/error.hpp"

namespace repgap {

Image::Image(int height, int width, int channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 1) {
    throw ValidationError("Image: invalid dimensions " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   static_cast<std::size_t>(channels),
               fill);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw IoError("cannot open " + path.string());
  }
  return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what != nullptr) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void check_png_signature(std::FILE* f, const std::filesystem::path& path) {
  png_byte header[8];
  if (std::fread(header, 1, 8, f) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
}

}  // namespace

ImageSize probe_png_size(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  check_png_signature(f.get(), path);
  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what,
                                           png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string() + ": " + what);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  ImageSize size{static_cast<int>(png_get_image_height(png, info)),
                 static_cast<int>(png_get_image_width(png, info))};
  png_destroy_read_struct(&png, &info, nullptr);
  return size;
}

Image read_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  check_png_signature(f.get(), path);
  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what,
                                           png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string() + ": " + what);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int height = static_cast<int>(png_get_image_height(png, info));
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int channels = static_cast<int>(png_get_channels(png, info));
  image = Image(height, width, channels);
  rows.resize(static_cast<std::size_t>(height));
  auto* base = image.data().data();
  for (int r = 0; r < height; ++r) {
    rows[static_cast<std::size_t>(r)] =
        base + static_cast<std::size_t>(r) * static_cast<std::size_t>(width * channels);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ValidationError("write_png: unsupported channel count " +
                          std::to_string(image.channels()));
  }
  if (image.height() < 1 || image.width() < 1) {
    throw ValidationError("write_png: empty image for " + path.string());
  }
  auto f = open_file(path, "wb");
  std::string what;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &what,
                                            png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot write PNG " + path.string() + ": " + what);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8,
               image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto* base = const_cast<std::uint8_t*>(image.data().data());
  const auto stride = static_cast<std::size_t>(image.width() * image.channels());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = base + r * stride;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<double> luma(const Image& image) {
  const auto pixels = static_cast<std::size_t>(image.height()) *
                      static_cast<std::size_t>(image.width());
  std::vector<double> out(pixels);
  const auto data = image.data();
  const auto ch = static_cast<std::size_t>(image.channels());
  for (std::size_t i = 0; i < pixels; ++i) {
    if (ch >= 3) {
      out[i] = 0.299 * data[i * ch] + 0.587 * data[i * ch + 1] + 0.114 * data[i * ch + 2];
    } else {
      out[i] = data[i * ch];
    }
  }
  return out;
}

}  // namespace repgap
