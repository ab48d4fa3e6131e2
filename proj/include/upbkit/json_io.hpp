#pragma once

// Shared wire format: a complex scalar is a two-element array [re, im]; a
// vector is a list of scalars; a matrix is a row-major list of rows.

#include <json.hpp>

#include "upbkit/linalg.hpp"

namespace upbkit::json_io {

using nlohmann::json;

json to_json(cplx z);
json to_json(const Vector& v);
json matrix_to_json(const Matrix& m);
json to_json(const RealVector& v);

cplx complex_from_json(const json& j);
Vector vector_from_json(const json& j);
Matrix matrix_from_json(const json& j);

}  // namespace upbkit::json_io
