#pragma once

#include <cstdint>
#include <filesystem>

namespace repgap::synthetic {

/// Layout of the generated inspection corpus: striped textured tiles on the
/// left (foreground), dark independent noise on the right (background), and
/// painted defects that are noisy copies of the local texture.
struct FixtureOptions {
  int images_per_class = 15;
  int defects_per_image = 2;
  int height = 96;
  int width = 128;
  int foreground_width = 88;
  std::uint64_t seed = 7;
};

/// Writes images, masks and `manifest.json` under `dir`. The three classes
/// use polygon ("scratch"), mask ("spot") and bbox ("stain") annotations.
/// Returns the manifest path.
std::filesystem::path write_fixture(const std::filesystem::path& dir, const FixtureOptions& options = {});

}  // namespace repgap::synthetic
