#include "smb/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smb {

GradCheckReport check_gradient(const StochasticOracle& oracle, const ParamGroups& x, const Batch& batch,
                               double rel_step, std::size_t max_coords_per_group, std::uint64_t seed) {
  const EvalResult analytic = oracle.eval(x, batch);
  if (!analytic.grads.same_shape(x)) throw Error(ErrorKind::kShapeMismatch, "gradient shape differs from x");

  GradCheckReport report;
  ParamGroups probe = x;
  for (std::size_t p = 0; p < x.size(); ++p) {
    const std::size_t n = x.groups[p].size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords_per_group > 0 && n > max_coords_per_group) {
      const Batch pick = sample_batch(seed, RngStream::kData, 100 + p, n, max_coords_per_group);
      coords = pick.indices;
    }

    double diff_sq = 0.0, fd_sq = 0.0, an_sq = 0.0;
    for (std::size_t i : coords) {
      const double xi = x.groups[p][i];
      const double h = rel_step * std::max(1.0, std::abs(xi));
      probe.groups[p][i] = xi + h;
      const double f_plus = oracle.eval(probe, batch).loss;
      probe.groups[p][i] = xi - h;
      const double f_minus = oracle.eval(probe, batch).loss;
      probe.groups[p][i] = xi;
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double an = analytic.grads.groups[p][i];
      diff_sq += (fd - an) * (fd - an);
      fd_sq += fd * fd;
      an_sq += an * an;
    }
    GroupGradCheck g;
    g.name = x.names[p];
    g.coords_checked = coords.size();
    const double denom = std::max(std::sqrt(std::max(fd_sq, an_sq)), 1e-300);
    g.rel_error = diff_sq == 0.0 ? 0.0 : std::sqrt(diff_sq) / denom;
    report.max_rel_error = std::max(report.max_rel_error, g.rel_error);
    report.groups.push_back(std::move(g));
  }
  return report;
}

}  // namespace smb
