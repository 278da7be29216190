#include <iomanip>
#include <ostream>

#include "smb/bench.hpp"
#include "../problems/seeded_rng.hpp"

namespace smb {

int cmd_gradcheck(const RunConfig& cfg, std::ostream& os, GradCheckReport* out) {
  const ProblemInstance problem = build_problem(cfg);
  ParamGroups x = problem.x0;
  // Move off the (possibly all-zero) starting point.
  detail::SeededRng rng(cfg.seed, RngStream::kInit, 7);
  for (auto& g : x.groups) {
    for (double& v : g) v += 0.1 * rng.normal();
  }
  const std::size_t n = problem.oracle->dataset_size();
  const Batch batch = sample_batch(cfg.seed, RngStream::kPrimary, 0, n, std::min<std::size_t>(n, 32));
  const GradCheckReport report = check_gradient(*problem.oracle, x, batch, 1e-6, 200, cfg.seed);

  os << "gradcheck " << cfg.problem << " (" << problem.description << ")\n";
  for (const auto& g : report.groups) {
    os << "  " << std::left << std::setw(6) << g.name << " coords=" << g.coords_checked << " rel_error=" << std::scientific
       << std::setprecision(3) << g.rel_error << std::defaultfloat << '\n';
  }
  const bool ok = report.max_rel_error < kGradcheckTolerance;
  os << (ok ? "PASS" : "FAIL") << " max_rel_error=" << std::scientific << std::setprecision(3) << report.max_rel_error
     << " tol=" << kGradcheckTolerance << std::defaultfloat << '\n';
  if (out) *out = report;
  return ok ? kExitOk : kExitVerification;
}

}  // namespace smb
