#pragma once

#include <string>
#include <vector>

namespace mrpred {

enum class CurveKind { ExactPE, CV, UE, IC, SigmaHat2, EstimationError, EpsExact, EpsUpper };

std::string to_string(CurveKind kind);

// Values of one loss/estimate over a contiguous resolution range
// [first_r, first_r + values.size()).
struct ErrorCurve {
  CurveKind kind = CurveKind::ExactPE;
  int first_r = 0;
  std::vector<double> values;
  int n = 0;

  int last_r() const { return first_r + static_cast<int>(values.size()) - 1; }
  bool contains(int r) const { return r >= first_r && r <= last_r(); }
  // Throws DomainError outside the stored range.
  double at(int r) const;
};

}  // namespace mrpred
