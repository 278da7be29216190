#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smb/core.hpp"

namespace smb {

struct GroupGradCheck {
  std::string name;
  std::size_t coords_checked = 0;
  double rel_error = 0.0;  // ||fd - analytic|| / max(||fd||, ||analytic||) over checked coords
};

struct GradCheckReport {
  std::vector<GroupGradCheck> groups;
  double max_rel_error = 0.0;
};

/// Central differences with step rel_step * max(1, |x_i|). At most
/// max_coords_per_group coordinates per group are probed (0 = all), picked
/// with a seeded draw.
GradCheckReport check_gradient(const StochasticOracle& oracle, const ParamGroups& x, const Batch& batch,
                               double rel_step = 1e-6, std::size_t max_coords_per_group = 0,
                               std::uint64_t seed = 0);

}  // namespace smb
