#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace acm {

struct GradCheckRow {
  std::string name;
  double worst = 0;  // worst relative error (absolute difference for the analytic row)
  double bound = 0;
  bool ok() const { return worst < bound; }
};

/// Finite-difference checks of every tape primitive, every model family at
/// toy size (N = 10, F = 5, C = 3) and the closed-form one-layer gradient.
std::vector<GradCheckRow> gradcheck_suite(std::uint64_t seed);

}  // namespace acm
