#include "floorsight/validate.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace floorsight {

const char* violation_code_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::Overlap: return "OVERLAP";
    case ViolationCode::OutOfSpan: return "OUT_OF_SPAN";
    case ViolationCode::Empty: return "EMPTY";
    case ViolationCode::BadOrder: return "BAD_ORDER";
  }
  return "UNKNOWN";
}

namespace {

std::string interval_str(const AffiliationInterval& iv) {
  std::ostringstream os;
  os << iv.participant << " floor " << iv.floor.ordinal << " [" << iv.t0 << "," << iv.t1 << "]";
  return os.str();
}

}  // namespace

ValidationReport validate_label_set(const std::vector<AffiliationInterval>& labels,
                                    double session_span) {
  ValidationReport report;

  std::map<ParticipantId, std::vector<AffiliationInterval>> by_participant;
  for (const auto& iv : labels) {
    if (iv.t1 < iv.t0) {
      report.violations.push_back({ViolationCode::BadOrder, iv, "t1 < t0: " + interval_str(iv)});
    } else if (iv.t1 == iv.t0) {
      report.violations.push_back({ViolationCode::Empty, iv, "zero length: " + interval_str(iv)});
    }
    if (std::min(iv.t0, iv.t1) < 0.0 || std::max(iv.t0, iv.t1) > session_span) {
      report.violations.push_back(
          {ViolationCode::OutOfSpan, iv,
           "outside [0," + std::to_string(session_span) + "]: " + interval_str(iv)});
    }
    by_participant[iv.participant].push_back(iv);
  }

  // Per-participant overlap, one violation per intersecting pair. Sorting by
  // t0 lets the inner scan stop at the first non-reaching start, so the cost
  // is O(n log n) plus one step per actual violation.
  for (auto& [participant, ivs] : by_participant) {
    std::stable_sort(ivs.begin(), ivs.end(),
                     [](const auto& a, const auto& b) { return a.t0 < b.t0; });
    for (size_t i = 0; i < ivs.size(); ++i) {
      for (size_t j = i + 1; j < ivs.size() && ivs[j].t0 < ivs[i].t1; ++j) {
        double lo = std::max(ivs[i].t0, ivs[j].t0);
        double hi = std::min(ivs[i].t1, ivs[j].t1);
        if (hi > lo) {
          std::ostringstream os;
          os << participant << " intervals intersect over [" << lo << "," << hi << "]";
          report.violations.push_back({ViolationCode::Overlap, ivs[i], os.str()});
        }
      }
    }
  }

  return report;
}

}  // namespace floorsight
