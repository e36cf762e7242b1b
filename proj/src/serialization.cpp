#include "lqrm/serialization.hpp"

#include <fstream>

namespace lqrm {

namespace {

[[noreturn]] void fail(const std::string& field_path, const std::string& what) {
  throw std::invalid_argument(field_path + ": " + what);
}

}  // namespace

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto& data = j["data"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& field_path) {
  if (!j.is_object()) fail(field_path, "expected a matrix object {rows, cols, data}");
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    fail(field_path, "matrix object needs rows, cols, data");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) fail(field_path, "rows/cols must be nonnegative");
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    fail(field_path + ".data", "expected " + std::to_string(rows * cols) + " numbers");
  Matrix m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data.at(idx++).get<double>();
  return m;
}

nlohmann::json system_to_json(const MultiplicativeNoiseSystem& sys) {
  nlohmann::json j;
  j["A"] = matrix_to_json(sys.A());
  j["B"] = matrix_to_json(sys.B());
  auto& state = j["state_noise"] = nlohmann::json::array();
  for (const auto& t : sys.state_noise())
    state.push_back({{"variance", t.variance}, {"direction", matrix_to_json(t.direction)}});
  auto& input = j["input_noise"] = nlohmann::json::array();
  for (const auto& t : sys.input_noise())
    input.push_back({{"variance", t.variance}, {"direction", matrix_to_json(t.direction)}});
  return j;
}

MultiplicativeNoiseSystem system_from_json(const nlohmann::json& j,
                                           const std::string& field_path) {
  if (!j.is_object()) fail(field_path, "expected a system object");
  if (!j.contains("A") || !j.contains("B")) fail(field_path, "system needs A and B");
  Matrix A = matrix_from_json(j.at("A"), field_path + ".A");
  Matrix B = matrix_from_json(j.at("B"), field_path + ".B");
  auto parse_terms = [&](const char* key) {
    std::vector<NoiseTerm> terms;
    if (!j.contains(key)) return terms;
    const auto& arr = j.at(key);
    if (!arr.is_array()) fail(field_path + "." + key, "expected an array");
    int idx = 0;
    for (const auto& item : arr) {
      const std::string path = field_path + "." + key + "[" + std::to_string(idx++) + "]";
      if (!item.contains("variance") || !item.contains("direction"))
        fail(path, "noise term needs variance and direction");
      terms.push_back({item.at("variance").get<double>(),
                       matrix_from_json(item.at("direction"), path + ".direction")});
    }
    return terms;
  };
  try {
    return MultiplicativeNoiseSystem(std::move(A), std::move(B), parse_terms("state_noise"),
                                     parse_terms("input_noise"));
  } catch (const std::invalid_argument& e) {
    fail(field_path, e.what());
  }
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace lqrm
