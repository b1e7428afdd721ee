#include "repgap/featstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "repgap/error.hpp"

namespace repgap::featstore {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::numeric_limits<float>::is_iec559, "FGAP requires IEEE-754 float32");

std::string to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::defect:
      return "defect";
    case SampleKind::normal_fg:
      return "normal_fg";
    case SampleKind::background:
      return "background";
  }
  return "defect";
}

SampleKind sample_kind_from_string(const std::string& text) {
  if (text == "defect") return SampleKind::defect;
  if (text == "normal_fg") return SampleKind::normal_fg;
  if (text == "background") return SampleKind::background;
  throw ValidationError("unknown sample kind \"" + text + "\"");
}

void FeatureMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw ValidationError("feature matrix must have n >= 1 and p >= 1");
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw ValidationError("non-finite value at row " + std::to_string(r) + ", column " +
                              std::to_string(c));
      }
    }
  }
  if (sample_ids.size() != n()) {
    throw ValidationError("sample_ids has " + std::to_string(sample_ids.size()) +
                          " entries for n = " + std::to_string(n()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) throw ValidationError("duplicate sample id \"" + id + "\"");
  }
}

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".meta.json"); }

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

json meta_to_json(const FeatureMatrix& m) {
  return {{"backbone_name", m.meta.backbone_name},
          {"pretrain_dataset", m.meta.pretrain_dataset},
          {"dataset", m.meta.dataset},
          {"object_type", m.meta.object_type},
          {"anomaly_class", m.meta.anomaly_class},
          {"kind", to_string(m.meta.kind)},
          {"layer_tag", m.meta.layer_tag},
          {"sample_ids", m.sample_ids}};
}

}  // namespace

void write_features(const FeatureMatrix& matrix, const fs::path& path) {
  matrix.validate();
  const auto n = matrix.values.rows();
  const auto p = matrix.values.cols();
  if (n > std::numeric_limits<std::uint32_t>::max() || p > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("feature matrix too large for FGAP");
  }
  std::string bytes;
  bytes.reserve(kHeaderBytes + static_cast<std::size_t>(n * p) * 4);
  bytes.append(kMagic, 8);
  put_u32(bytes, static_cast<std::uint32_t>(n));
  put_u32(bytes, static_cast<std::uint32_t>(p));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) put_u32(bytes, std::bit_cast<std::uint32_t>(matrix.values(r, c)));
  }
  atomic_write(sidecar_path(path), meta_to_json(matrix).dump(2) + "\n");
  atomic_write(path, bytes);
}

FeatureMatrix read_features(const fs::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw ValidationError(path.string() + ": not an FGAP file");
  }
  if (bytes.size() < kHeaderBytes) {
    throw ValidationError(path.string() + ": expected " + std::to_string(kHeaderBytes) +
                          " header bytes, found " + std::to_string(bytes.size()));
  }
  const std::uint32_t n = get_u32(bytes.data() + 8);
  const std::uint32_t p = get_u32(bytes.data() + 12);
  const std::uint64_t expected = kHeaderBytes + std::uint64_t{n} * std::uint64_t{p} * 4;
  if (bytes.size() != expected) {
    throw ValidationError(path.string() + ": expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()));
  }

  FeatureMatrix m;
  m.values.resize(n, p);
  const char* cursor = bytes.data() + kHeaderBytes;
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t c = 0; c < p; ++c, cursor += 4) {
      m.values(r, c) = std::bit_cast<float>(get_u32(cursor));
    }
  }

  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    std::ifstream sin(side);
    try {
      const json j = json::parse(sin);
      m.meta.backbone_name = j.at("backbone_name").get<std::string>();
      m.meta.pretrain_dataset = j.at("pretrain_dataset").get<std::string>();
      m.meta.dataset = j.at("dataset").get<std::string>();
      m.meta.object_type = j.at("object_type").get<std::string>();
      m.meta.anomaly_class = j.at("anomaly_class").get<std::string>();
      m.meta.kind = sample_kind_from_string(j.at("kind").get<std::string>());
      m.meta.layer_tag = j.at("layer_tag").get<std::string>();
      m.sample_ids = j.at("sample_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ValidationError(side.string() + ": malformed sidecar: " + e.what());
    }
  } else {
    const std::string msg = "missing sidecar " + side.string() + "; metadata left empty";
    if (warnings != nullptr) {
      warnings->push_back(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
    m.sample_ids.reserve(n);
    for (std::uint32_t r = 0; r < n; ++r) m.sample_ids.push_back(std::to_string(r));
  }
  m.validate();
  return m;
}

PairedFeatures pair_matrices(const FeatureMatrix& defect, const FeatureMatrix& normal) {
  if (defect.p() != normal.p()) {
    throw ValidationError("feature dimension mismatch: defect p = " + std::to_string(defect.p()) +
                          ", normal p = " + std::to_string(normal.p()));
  }
  if (defect.n() != normal.n()) {
    throw ValidationError("sample count mismatch: defect n = " + std::to_string(defect.n()) +
                          ", normal n = " + std::to_string(normal.n()));
  }
  std::unordered_map<std::string, Eigen::Index> normal_rows;
  for (std::size_t i = 0; i < normal.sample_ids.size(); ++i) {
    normal_rows.emplace(normal.sample_ids[i], static_cast<Eigen::Index>(i));
  }
  PairedFeatures out;
  out.defect = defect.as_double();
  out.normal.resize(out.defect.rows(), out.defect.cols());
  out.ids = defect.sample_ids;
  out.defect_meta = defect.meta;
  out.normal_meta = normal.meta;
  for (std::size_t k = 0; k < defect.sample_ids.size(); ++k) {
    const auto it = normal_rows.find(defect.sample_ids[k]);
    if (it == normal_rows.end()) {
      throw ValidationError("sample id misalignment: \"" + defect.sample_ids[k] +
                            "\" has no normal counterpart");
    }
    out.normal.row(static_cast<Eigen::Index>(k)) = normal.values.row(it->second).cast<double>();
  }
  return out;
}

}  // namespace repgap::featstore
