#pragma once

// Two-qutrit UPBs shipped as data files, and the product vectors in their spans.

#include <string>
#include <vector>

#include "upbkit/json_io.hpp"
#include "upbkit/search.hpp"
#include "upbkit/upb.hpp"

namespace upbkit::qutrit {

/// Parses a UPB document and validates it: orthonormal within 1e-10 and no
/// product vector in the complement at `config` resolution. Throws
/// std::invalid_argument on a malformed or invalid document.
Upb load_upb(const json_io::json& doc, const search::SearchConfig& config);
Upb load_upb(const json_io::json& doc);
Upb load_upb_file(const std::string& path);

/// Path of a bundled data file.
std::string data_path(const std::string& name);

Upb tiles();
Upb pyramid();

/// Every product vector (across the two parties) found in the span of the members.
std::vector<search::ProductVectorHit> span_product_vectors(const Upb& upb, const search::SearchConfig& config);

/// span_product_vectors minus the hits matching a member up to phase.
std::vector<search::ProductVectorHit> extra_product_vectors(const Upb& upb, const search::SearchConfig& config);

}  // namespace upbkit::qutrit
