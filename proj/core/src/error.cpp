#include "dmdkit/error.hpp"

namespace dmdkit {

std::string_view warning_name(WarningKind kind) noexcept {
  switch (kind) {
    case WarningKind::RankDeficiency: return "RankDeficiencyWarning";
    case WarningKind::IllConditionedBasis: return "IllConditionedBasisWarning";
    case WarningKind::Stall: return "StallWarning";
    case WarningKind::SingularEigenvalue: return "SingularEigenvalueWarning";
    case WarningKind::SelectionClamped: return "SelectionClampedWarning";
  }
  return "Warning";
}

}  // namespace dmdkit
