#pragma once

#include "rk/linop.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace rk {

/// One per-iteration record; NaN marks "not recorded" and serializes to an
/// empty CSV field.
struct IterationRecord {
  Index k = 0;
  double lambda = 0.0;
  double projected_objective = std::numeric_limits<double>::quiet_NaN();
  double sketched_residual = std::numeric_limits<double>::quiet_NaN();
  double true_residual = std::numeric_limits<double>::quiet_NaN();
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;  // 0 unless timing was requested: keeps CSV runs byte-identical
  std::string rule;      // empty for un-regularized solves
  std::string tau_or_w;
  std::string flags;     // comma-joined: undershoot, overshoot, flat, singular
};

struct IterationHistory {
  std::vector<IterationRecord> rows;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
};

/// Fixed column order shared by all CSV outputs.
extern const char* const kHistoryCsvHeader;

/// Shortest round-trippable decimal form of a double ("%.17g" fallback).
std::string format_double(double v);

} // namespace rk
