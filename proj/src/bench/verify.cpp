#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "smb/bench.hpp"
#include "smb/jacobi.hpp"
#include "../problems/seeded_rng.hpp"

namespace smb {

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Tracker {
  PropertyResult r;
  Tracker(std::string name, double tol) {
    r.name = std::move(name);
    r.tolerance = tol;
  }
  void record(double err) {
    ++r.cases;
    if (std::isnan(err)) err = INFINITY;
    r.max_error = std::max(r.max_error, err);
    if (!(err <= r.tolerance)) r.passed = false;
  }
};

}  // namespace

RandomStepCase random_step_case(std::uint64_t seed, std::uint64_t index, std::size_t min_dim, std::size_t max_dim) {
  detail::SeededRng rng(seed, RngStream::kData, 1000 + index);
  RandomStepCase c;
  const std::size_t dim = min_dim + rng.below(max_dim - min_dim + 1);
  const double g_scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
  const double y_scale = g_scale * std::pow(10.0, rng.uniform(-2.0, 1.0));
  c.g.resize(dim);
  c.g_t.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) c.g[i] = g_scale * rng.normal();
  for (std::size_t i = 0; i < dim; ++i) c.g_t[i] = c.g[i] + y_scale * rng.normal();
  c.alpha = std::pow(10.0, rng.uniform(-3.0, 1.0));
  c.eta = rng.uniform(0.1, 0.95);
  return c;
}

bool VerifyReport::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

const PropertyResult& VerifyReport::get(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::kPrecondition, "no property named " + name);
}

VerifyReport run_verification(const VerifyOptions& opts) {
  if (opts.trials < 1) throw Error(ErrorKind::kConfig, "trials: must be >= 1");
  if (opts.min_dim < 2 || opts.max_dim < opts.min_dim) throw Error(ErrorKind::kConfig, "dims: need 2 <= min <= max");
  const auto dense_h = opts.dense_h ? opts.dense_h
                                    : std::function<DenseScalingMatrix(const GroupStepInputs&)>(
                                          [](const GroupStepInputs& in) { return build_dense_H(in); });

  Tracker equivalence("oracle_equivalence", 1e-9);
  Tracker independent_apply("scaling_apply_equivalence", 1e-9);
  Tracker identities("coefficient_identities", 1e-10);
  Tracker inverse("inverse_identity", 1e-9);
  Tracker lam_min("spectrum_min", 1e-8);
  Tracker lam_max("spectrum_max", 1e-8);
  Tracker multiplicity("spectrum_multiplicity", 1e-8);
  Tracker eigvecs("spectrum_eigenvectors", 1e-8);
  Tracker h_bounds("scaling_matrix_bounds", 1e-10);
  Tracker step_bound("step_bound", 1e-10);
  Tracker interpolation("model_interpolation", 0.0);

  for (std::size_t t = 0; t < opts.trials; ++t) {
    const RandomStepCase c = random_step_case(opts.seed, t, opts.min_dim, opts.max_dim);
    const GroupStepInputs in = c.inputs();
    const auto n = static_cast<Eigen::Index>(c.g.size());
    const Eigen::Map<const Eigen::VectorXd> g(c.g.data(), n);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(c.g_t.data(), n) - g;
    const double g_norm = g.norm();
    const double y_norm = y.norm();

    const ModelStepResult step = model_step(in);
    const Eigen::Map<const Eigen::VectorXd> s(step.step.data(), n);
    const DenseScalingMatrix h = dense_h(in);
    const Eigen::VectorXd s_dense = -c.alpha * h * g;
    equivalence.record((s - s_dense).norm() / s_dense.norm());

    const ModelStepResult applied = apply_scaling(in, c.g);
    independent_apply.record((Eigen::Map<const Eigen::VectorXd>(applied.step.data(), n) - s_dense).norm() /
                             s_dense.norm());

    const ModelStepCoefficients& k = *step.coefficients;
    identities.record(std::max(rel_diff(k.theta, c.alpha * c.alpha * k.gamma), rel_diff(2.0 * k.delta, c.alpha * k.sigma)));

    const DenseScalingMatrix b = build_dense_B(in);
    inverse.record((h * b - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());

    const SymmetricEigen eb = jacobi_eigen(b);
    const double expected_min = 1.0 / c.eta;
    const double expected_max = 2.0 * y_norm / g_norm + 1.0 / c.eta;
    lam_min.record(rel_diff(eb.values[0], expected_min));
    lam_max.record(rel_diff(eb.values[n - 1], expected_max));
    if (n >= 3) {
      const double middle = k.sigma / (g_norm * g_norm);
      double err = 0.0;
      for (Eigen::Index i = 1; i + 1 < n; ++i) err = std::max(err, rel_diff(eb.values[i], middle));
      multiplicity.record(err);
    }
    const Eigen::VectorXd v_plus = y_norm * g + g_norm * y;
    const Eigen::VectorXd v_minus = y_norm * g - g_norm * y;
    // (g y' + y g') v_plus = (g'y + ||g|| ||y||) v_plus, so v_plus pairs with
    // the smallest eigenvalue and v_minus with the largest.
    eigvecs.record((b * v_plus - expected_min * v_plus).norm() / (expected_min * v_plus.norm()));
    eigvecs.record((b * v_minus - expected_max * v_minus).norm() / (expected_max * v_minus.norm()));

    // Smallest L with ||y|| <= L alpha ||g||, taking alpha_max = alpha.
    const double lipschitz = y_norm / (c.alpha * g_norm);
    const double lower = 1.0 / (1.0 / c.eta + 2.0 * lipschitz * c.alpha);
    const SymmetricEigen eh = jacobi_eigen(0.5 * (h + h.transpose()));
    h_bounds.record(std::max({0.0, (lower - eh.values[0]) / lower, eh.values[n - 1] - 1.0}));

    step_bound.record(std::max(0.0, s.norm() - c.eta * c.alpha * g_norm));

    ParamVector zero(c.g.size(), 0.0);
    ParamVector trial(c.g.size());
    for (std::size_t i = 0; i < c.g.size(); ++i) trial[i] = -c.alpha * c.g[i];
    const double f = 1.0 + static_cast<double>(t % 7);
    const double f_t = f - 0.25;
    interpolation.record(std::max(std::abs(evaluate_quadratic_model(in, f, f_t, zero) - f),
                                  std::abs(evaluate_quadratic_model(in, f, f_t, trial) - f_t)));
  }

  VerifyReport report;
  for (Tracker* tr : {&equivalence, &independent_apply, &identities, &inverse, &lam_min, &lam_max, &multiplicity,
                      &eigvecs, &h_bounds, &step_bound, &interpolation}) {
    report.properties.push_back(tr->r);
  }
  return report;
}

void print_verify_report(std::ostream& os, const VerifyReport& report) {
  for (const PropertyResult& p : report.properties) {
    os << (p.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << p.name << " cases=" << p.cases
       << " max_error=" << std::scientific << std::setprecision(3) << p.max_error << " tol=" << p.tolerance
       << std::defaultfloat << '\n';
  }
}

int cmd_verify(const VerifyOptions& opts, std::ostream& os) {
  if (opts.trials < 1) {
    os << "usage error: --trials must be >= 1\n";
    return kExitConfig;
  }
  const VerifyReport report = run_verification(opts);
  print_verify_report(os, report);
  return report.all_passed() ? kExitOk : kExitVerification;
}

}  // namespace smb
