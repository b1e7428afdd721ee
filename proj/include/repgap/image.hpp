#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace repgap {

struct ImageSize {
  int height = 0;
  int width = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Interleaved 8-bit image, row-major, `channels` samples per pixel.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, std::uint8_t fill = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  ImageSize size() const noexcept { return {height_, width_}; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int row, int col, int channel = 0) {
    return data_[index(row, col, channel)];
  }
  std::uint8_t at(int row, int col, int channel = 0) const {
    return data_[index(row, col, channel)];
  }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const noexcept {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(channel);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Reads an 8-bit PNG. Palette images are expanded, 16-bit samples reduced
/// and alpha stripped, so the result has 1 (gray) or 3 (RGB) channels.
Image read_png(const std::filesystem::path& path);

/// Reads only the IHDR dimensions.
ImageSize probe_png_size(const std::filesystem::path& path);

/// Writes 1- or 3-channel images. Output bytes depend only on pixel content.
void write_png(const Image& image, const std::filesystem::path& path);

/// ITU-R BT.601 luma in [0, 255]; single-channel input is passed through.
std::vector<double> luma(const Image& image);

}  // namespace repgap
