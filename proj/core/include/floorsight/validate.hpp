#pragma once

#include <string>
#include <vector>

#include "floorsight/types.hpp"

namespace floorsight {

enum class ViolationCode {
  Overlap,    // two intervals of one participant intersect
  OutOfSpan,  // interval extends outside [0, T]
  Empty,      // t1 <= t0
  BadOrder,   // floor ordinals are not the gapless sequence 1..K
};

const char* violation_code_name(ViolationCode code);

struct Violation {
  ViolationCode code;
  AffiliationInterval interval;  // the offending interval (first of the pair for Overlap)
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Checks AffiliationInterval invariants over [0, T]: non-empty intervals,
// per-participant non-overlap, containment in the session span, and gapless
// FloorId ordinals 1..K. Violations are data, not errors.
ValidationReport validate_label_set(const std::vector<AffiliationInterval>& labels,
                                    double session_span);

}  // namespace floorsight
