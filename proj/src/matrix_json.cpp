#include "qcp/matrix_json.hpp"

#include <fstream>
#include <stdexcept>

namespace qcp {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw DimensionError("matrix_from_json: data length does not match shape");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index jj = 0; jj < cols; ++jj, ++k) {
      m(i, jj) = Complex(data[k].at(0).get<double>(), data[k].at(1).get<double>());
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) { return matrix_to_json(Matrix(v)); }

Vector vector_from_json(const nlohmann::json& j) {
  Matrix m = matrix_from_json(j);
  if (m.cols() != 1) throw DimensionError("vector_from_json: expected a single column");
  return m.col(0);
}

void write_matrix_list(const std::filesystem::path& path, const std::vector<Matrix>& mats,
                       const nlohmann::json& meta) {
  nlohmann::json doc = {{"format", "qcp-matrices"}, {"version", 1}, {"meta", meta}};
  nlohmann::json list = nlohmann::json::array();
  for (const Matrix& m : mats) list.push_back(matrix_to_json(m));
  doc["matrices"] = std::move(list);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << doc.dump();
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Matrix> read_matrix_list(const std::filesystem::path& path, nlohmann::json* meta_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.value("format", "") != "qcp-matrices" || doc.value("version", 0) != 1) {
    throw std::runtime_error(path.string() + ": not a qcp matrix list");
  }
  if (meta_out != nullptr) *meta_out = doc.value("meta", nlohmann::json::object());
  std::vector<Matrix> mats;
  for (const auto& j : doc.at("matrices")) mats.push_back(matrix_from_json(j));
  return mats;
}

}  // namespace qcp
