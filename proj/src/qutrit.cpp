#include "upbkit/qutrit.hpp"

#include <fstream>
#include <stdexcept>

namespace upbkit::qutrit {

Upb load_upb(const json_io::json& doc, const search::SearchConfig& config) {
  Upb upb = upb_from_json(doc);
  const auto report = validate(upb, config);
  if (!report.orthonormal) throw std::invalid_argument("UPB members are not orthonormal");
  if (!report.unextendible) throw std::invalid_argument("UPB complement contains a product vector");
  return upb;
}

Upb load_upb(const json_io::json& doc) {
  if (!doc.is_object() || !doc.contains("dims")) return load_upb(doc, search::SearchConfig{});
  Dims dims;
  for (const auto& d : doc.at("dims"))
    if (d.is_number_integer()) dims.push_back(d.get<int>());
  return load_upb(doc, search::SearchConfig::for_dims(dims));
}

Upb load_upb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open UPB file: " + path);
  json_io::json doc;
  try {
    doc = json_io::json::parse(in);
  } catch (const json_io::json::parse_error& e) {
    throw std::invalid_argument("malformed UPB file " + path + ": " + e.what());
  }
  return load_upb(doc);
}

std::string data_path(const std::string& name) { return std::string(UPBKIT_DATA_DIR) + "/" + name; }

Upb tiles() { return upbkit::load_upb_file(data_path("tiles.json")); }

Upb pyramid() { return upbkit::load_upb_file(data_path("pyramid.json")); }

std::vector<search::ProductVectorHit> span_product_vectors(const Upb& upb, const search::SearchConfig& config) {
  return search::find_product_vectors(upb.span(), search::Partition::each_party(upb.parties()), config);
}

std::vector<search::ProductVectorHit> extra_product_vectors(const Upb& upb, const search::SearchConfig& config) {
  std::vector<search::ProductVectorHit> out;
  for (auto& hit : span_product_vectors(upb, config)) {
    bool member = false;
    for (const auto& m : upb.members())
      if (search::same_product_vector(hit.factors, m.factors(), config.dedup)) member = true;
    if (!member) out.push_back(std::move(hit));
  }
  return out;
}

}  // namespace upbkit::qutrit
