#include "rk/history.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace rk {

const char* const kHistoryCsvHeader =
    "k,lambda,projected_objective,sketched_residual,true_residual,rel_error,"
    "wall_ms,rule,tau_or_w,flags";

std::string format_double(double v) {
  char buf[40];
  // Shortest representation that round-trips; locale-independent '.' decimal.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string field(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

} // namespace

void IterationHistory::write_csv(std::ostream& os) const {
  os << kHistoryCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << ',' << field(r.lambda) << ',' << field(r.projected_objective)
       << ',' << field(r.sketched_residual) << ',' << field(r.true_residual)
       << ',' << field(r.rel_error) << ',' << field(r.wall_ms) << ',' << r.rule
       << ',' << r.tau_or_w << ',' << r.flags << '\n';
  }
}

void IterationHistory::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

} // namespace rk
