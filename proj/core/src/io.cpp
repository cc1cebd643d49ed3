#include "rk/io.hpp"
#include "rk/history.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rk {

namespace {

std::string next_data_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '%' || line[pos] == '#') continue;
    return line;
  }
  return {};
}

} // namespace

SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);

  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("not a Matrix Market file: " + path);
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate")
    throw std::runtime_error("unsupported Matrix Market layout: " + path);
  if (field != "real" && field != "integer" && field != "pattern")
    throw std::runtime_error("unsupported Matrix Market field: " + field);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw std::runtime_error("unsupported Matrix Market symmetry: " + symmetry);

  std::istringstream sizes(next_data_line(is));
  long rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
    throw std::runtime_error("bad Matrix Market size line: " + path);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (long e = 0; e < nnz; ++e) {
    std::istringstream ls(next_data_line(is));
    long i = 0, j = 0;
    double v = 1.0;
    if (!(ls >> i >> j) || i < 1 || i > rows || j < 1 || j > cols)
      throw std::runtime_error("bad Matrix Market entry: " + path);
    if (field != "pattern" && !(ls >> v))
      throw std::runtime_error("bad Matrix Market value: " + path);
    trips.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (symmetric && i != j)
      trips.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
  }
  SparseMatrix A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

Vector load_vector(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '%' || line[pos] == '#') continue;
    vals.push_back(std::stod(line));
  }
  Vector v(static_cast<Index>(vals.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return v;
}

void save_vector(const std::string& path, const Vector& v) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (Index i = 0; i < v.size(); ++i) os << format_double(v[i]) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

} // namespace rk
