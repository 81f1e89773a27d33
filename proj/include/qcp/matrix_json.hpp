#pragma once

// JSON debug format for dense matrices:
//   {"rows": R, "cols": C, "data": [[re, im], ...]}   (row-major)
// Doubles are written with enough digits to round-trip exactly.

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "qcp/common.hpp"

namespace qcp {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// Writes a list of matrices as {"format": "qcp-matrices", "version": 1, "matrices": [...]}.
void write_matrix_list(const std::filesystem::path& path, const std::vector<Matrix>& mats,
                       const nlohmann::json& meta = nlohmann::json::object());
/// Reads a file produced by write_matrix_list. `meta_out`, if non-null, receives the metadata.
std::vector<Matrix> read_matrix_list(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr);

}  // namespace qcp
