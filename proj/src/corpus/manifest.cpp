#include <algorithm>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "repgap/corpus.hpp"
#include "repgap/error.hpp"

namespace repgap::corpus {

using nlohmann::json;

std::string RegionAnnotation::kind() const {
  if (std::holds_alternative<BBox>(geometry)) return "bbox";
  if (std::holds_alternative<Polygon>(geometry)) return "polygon";
  return "mask_path";
}

std::string ImageRecord::image_id() const {
  std::filesystem::path p(image_path);
  std::string id = (p.parent_path() / p.stem()).generic_string();
  std::replace(id.begin(), id.end(), '/', '-');
  std::replace(id.begin(), id.end(), '_', '-');
  std::replace(id.begin(), id.end(), ' ', '-');
  return id;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&key](const char* a) { return key == a; });
    if (!known) throw ValidationError(where + ": unknown field \"" + key + "\"");
  }
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": field \"" + key + "\" has wrong type");
  }
}

BBox parse_bbox(const json& j, const std::string& where) {
  reject_unknown(j, {"x", "y", "width", "height"}, where);
  BBox box{required<int>(j, "y", where), required<int>(j, "x", where),
           required<int>(j, "height", where), required<int>(j, "width", where)};
  if (box.width < 1 || box.height < 1) {
    throw ValidationError(where + ": degenerate bbox (width " + std::to_string(box.width) +
                          ", height " + std::to_string(box.height) + ")");
  }
  return box;
}

RegionAnnotation parse_region(const json& j, const std::string& where, bool needs_class) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const auto kind = required<std::string>(j, "kind", where);
  RegionAnnotation region;
  if (kind == "bbox") {
    reject_unknown(j, {"kind", "bbox", "anomaly_class"}, where);
    if (!j.contains("bbox")) throw ValidationError(where + ": missing field \"bbox\"");
    region.geometry = parse_bbox(j.at("bbox"), where + ".bbox");
  } else if (kind == "polygon") {
    reject_unknown(j, {"kind", "points", "anomaly_class"}, where);
    const auto points = required<std::vector<std::array<double, 2>>>(j, "points", where);
    Polygon poly;
    for (const auto& p : points) poly.push_back({p[0], p[1]});
    try {
      validate_polygon(poly);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    region.geometry = std::move(poly);
  } else if (kind == "mask_path") {
    reject_unknown(j, {"kind", "path", "anomaly_class"}, where);
    region.geometry = MaskRef{required<std::string>(j, "path", where)};
  } else {
    throw ValidationError(where + ": unknown region kind \"" + kind + "\"");
  }
  if (j.contains("anomaly_class")) {
    region.anomaly_class = required<std::string>(j, "anomaly_class", where);
  } else if (needs_class) {
    throw ValidationError(where + ": defect region without anomaly_class");
  }
  return region;
}

json region_to_json(const RegionAnnotation& region) {
  json j;
  j["kind"] = region.kind();
  if (const auto* box = std::get_if<BBox>(&region.geometry)) {
    j["bbox"] = {{"x", box->left}, {"y", box->top}, {"width", box->width}, {"height", box->height}};
  } else if (const auto* poly = std::get_if<Polygon>(&region.geometry)) {
    json pts = json::array();
    for (const auto& p : *poly) pts.push_back({p.x, p.y});
    j["points"] = std::move(pts);
  } else {
    j["path"] = std::get<MaskRef>(region.geometry).path;
  }
  if (region.anomaly_class) j["anomaly_class"] = *region.anomaly_class;
  return j;
}

}  // namespace

AnnotationManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  const std::string top = "manifest";
  reject_unknown(doc, {"schema_version", "dataset_name", "root", "classes", "records"}, top);

  AnnotationManifest manifest;
  manifest.schema_version = required<std::string>(doc, "schema_version", top);
  if (manifest.schema_version != kManifestSchemaVersion) {
    throw ValidationError("manifest: unsupported schema_version \"" + manifest.schema_version +
                          "\"");
  }
  manifest.dataset_name = required<std::string>(doc, "dataset_name", top);
  manifest.classes = required<std::vector<std::string>>(doc, "classes", top);
  const std::filesystem::path base = path.parent_path();
  manifest.root = doc.contains("root") ? base / required<std::string>(doc, "root", top) : base;
  manifest.root = manifest.root.lexically_normal();
  if (manifest.root.empty()) manifest.root = ".";

  const std::set<std::string> classes(manifest.classes.begin(), manifest.classes.end());
  if (!doc.contains("records") || !doc.at("records").is_array()) {
    throw ValidationError("manifest: \"records\" must be an array");
  }
  std::set<std::string> seen_ids;
  std::size_t index = 0;
  for (const auto& rj : doc.at("records")) {
    const std::string where = "record[" + std::to_string(index++) + "]";
    reject_unknown(rj, {"image_path", "object_type", "defect_regions", "foreground_region"}, where);
    ImageRecord record;
    record.image_path = required<std::string>(rj, "image_path", where);
    record.object_type = required<std::string>(rj, "object_type", where);
    const std::string rwhere = where + " (" + record.image_path + ")";
    if (rj.contains("defect_regions")) {
      if (!rj.at("defect_regions").is_array()) {
        throw ValidationError(rwhere + ": defect_regions must be an array");
      }
      std::size_t k = 0;
      for (const auto& reg : rj.at("defect_regions")) {
        auto region =
            parse_region(reg, rwhere + ".defect_regions[" + std::to_string(k++) + "]", true);
        if (!classes.contains(*region.anomaly_class)) {
          throw ValidationError(rwhere + ": anomaly_class \"" + *region.anomaly_class +
                                "\" is not in the declared class list");
        }
        record.defect_regions.push_back(std::move(region));
      }
    }
    if (rj.contains("foreground_region")) {
      record.foreground_region =
          parse_region(rj.at("foreground_region"), rwhere + ".foreground_region", false);
    }
    if (!seen_ids.insert(record.image_id()).second) {
      throw ValidationError(rwhere + ": duplicate image id \"" + record.image_id() + "\"");
    }
    const auto image_path = manifest.root / record.image_path;
    if (!std::filesystem::exists(image_path)) {
      throw IoError(rwhere + ": image not found: " + image_path.string());
    }
    for (const auto& region : record.defect_regions) {
      if (const auto* ref = std::get_if<MaskRef>(&region.geometry)) {
        if (!std::filesystem::exists(manifest.root / ref->path)) {
          throw IoError(rwhere + ": mask not found: " + (manifest.root / ref->path).string());
        }
      }
    }
    manifest.records.push_back(std::move(record));
  }
  return manifest;
}

void save_manifest(const AnnotationManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["schema_version"] = manifest.schema_version;
  doc["dataset_name"] = manifest.dataset_name;
  const auto base = std::filesystem::absolute(path).parent_path();
  std::string root = std::filesystem::absolute(manifest.root).lexically_normal()
                         .lexically_relative(base.lexically_normal())
                         .generic_string();
  while (root.size() > 1 && root.back() == '/') root.pop_back();
  doc["root"] = root.empty() ? "." : root;
  doc["classes"] = manifest.classes;
  json records = json::array();
  for (const auto& record : manifest.records) {
    json rj;
    rj["image_path"] = record.image_path;
    rj["object_type"] = record.object_type;
    json regions = json::array();
    for (const auto& region : record.defect_regions) regions.push_back(region_to_json(region));
    rj["defect_regions"] = std::move(regions);
    if (record.foreground_region) rj["foreground_region"] = region_to_json(*record.foreground_region);
    records.push_back(std::move(rj));
  }
  doc["records"] = std::move(records);
  std::error_code ec;
  if (!base.empty()) std::filesystem::create_directories(base, ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace repgap::corpus
