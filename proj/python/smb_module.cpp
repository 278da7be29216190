#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "smb/bench.hpp"
#include "smb/model_step.hpp"
#include "smb/optimizer.hpp"
#include "smb/schedule.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using Vec = std::vector<double>;

Eigen::VectorXd to_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

smb::GroupStepInputs inputs(const Vec& g, const Vec& g_t, double alpha, double eta) {
  if (g.size() != g_t.size()) throw py::value_error("g and g_t must have the same length");
  return {g, g_t, alpha, eta, 0.0};
}

// Keyword arguments use the config-file keys with '_' for '-'.
smb::RunConfig config_from(const py::kwargs& kw) {
  smb::RunConfig cfg;
  for (const auto& [k, v] : kw) {
    std::string key = py::str(k);
    for (auto& c : key) c = c == '_' ? '-' : c;
    std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "1" : "0") : std::string(py::str(v));
    smb::set_field(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

py::dict record_dict(const smb::RunRecord& r) {
  py::dict d("epoch"_a = r.epoch, "iter"_a = r.iter, "train_loss"_a = r.train_loss, "alpha"_a = r.alpha,
             "model_step_fraction"_a = r.model_step_fraction, "oracle_evals"_a = r.oracle_evals,
             "wall_time_s"_a = r.wall_time_s, "diverged"_a = r.diverged);
  d["test_accuracy"] = r.test_accuracy ? py::cast(*r.test_accuracy) : py::none();
  return d;
}

py::list records_list(const std::vector<smb::RunRecord>& recs) {
  py::list out;
  for (const auto& r : recs) out.append(record_dict(r));
  return out;
}

smb::RngStream parse_stream(const std::string& s) {
  if (s == "primary") return smb::RngStream::kPrimary;
  if (s == "independent") return smb::RngStream::kIndependent;
  if (s == "init") return smb::RngStream::kInit;
  if (s == "data") return smb::RngStream::kData;
  throw py::value_error("unknown stream '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(smb, m) {
  m.doc() = "Stochastic model-building optimizers: model steps, schedules and the experiment harness";

  py::register_exception<smb::Error>(m, "SmbError", PyExc_RuntimeError);

  m.def(
      "sample_batch",
      [](std::uint64_t seed, std::uint64_t counter, std::size_t n, std::size_t batch, const std::string& stream) {
        return smb::sample_batch(seed, parse_stream(stream), counter, n, batch).indices;
      },
      "seed"_a, "counter"_a, "dataset_size"_a, "m"_a, "stream"_a = "primary",
      "Sorted, distinct indices; a pure function of (seed, stream, counter).");

  m.def(
      "compute_coefficients",
      [](const Vec& g, const Vec& g_t, double alpha, double eta) -> py::object {
        auto c = smb::compute_coefficients(inputs(g, g_t, alpha, eta));
        if (!c) return py::none();
        return py::dict("delta"_a = c->delta, "theta"_a = c->theta, "sigma"_a = c->sigma, "beta"_a = c->beta,
                        "gamma"_a = c->gamma, "c_g"_a = c->c_g, "c_y"_a = c->c_y, "c_s"_a = c->c_s);
      },
      "g"_a, "g_t"_a, "alpha"_a, "eta"_a = 0.8, "None when the gradient is numerically zero.");

  m.def(
      "model_step",
      [](const Vec& g, const Vec& g_t, double alpha, double eta) {
        auto r = smb::model_step(inputs(g, g_t, alpha, eta));
        return py::make_tuple(to_eigen(r.step), r.degenerate);
      },
      "g"_a, "g_t"_a, "alpha"_a, "eta"_a = 0.8, "Returns (step, degenerate).");

  m.def(
      "apply_scaling",
      [](const Vec& g, const Vec& g_t, const Vec& v, double alpha, double eta) {
        if (v.size() != g.size()) throw py::value_error("v must match g in length");
        return to_eigen(smb::apply_scaling(inputs(g, g_t, alpha, eta), v).step);
      },
      "g"_a, "g_t"_a, "v"_a, "alpha"_a, "eta"_a = 0.8, "-alpha * H(g, g_t - g) * v without forming H.");

  m.def(
      "dense_H",
      [](const Vec& g, const Vec& g_t, double alpha, double eta, std::size_t cap) {
        return smb::build_dense_H(inputs(g, g_t, alpha, eta), cap);
      },
      "g"_a, "g_t"_a, "alpha"_a, "eta"_a = 0.8, "cap"_a = smb::kDenseDimensionCap);
  m.def(
      "dense_B",
      [](const Vec& g, const Vec& g_t, double alpha, double eta, std::size_t cap) {
        return smb::build_dense_B(inputs(g, g_t, alpha, eta), cap);
      },
      "g"_a, "g_t"_a, "alpha"_a, "eta"_a = 0.8, "cap"_a = smb::kDenseDimensionCap);
  m.def(
      "eigen_extremes",
      [](const Eigen::MatrixXd& b) {
        auto e = smb::eigen_extremes(b);
        return py::make_tuple(e.lambda_min, e.lambda_max);
      },
      "B"_a);

  m.def("armijo_holds", &smb::armijo_holds, "f"_a, "f_t"_a, "alpha"_a, "grad_sq_norm"_a, "c"_a = 0.1);

  m.def(
      "stepsize_at",
      [](const std::string& kind, double alpha0, std::int64_t k, double phi) {
        smb::ScheduleDescriptor d{smb::parse_schedule_kind(kind)};
        d.phi = phi;
        return smb::stepsize_at(d, alpha0, k);
      },
      "kind"_a, "alpha0"_a, "k"_a, "phi"_a = 0.75);
  m.def(
      "auto_schedule_update",
      [](double alpha, std::int64_t model_steps, std::int64_t total, double alpha_max) {
        smb::ScheduleDescriptor d{smb::ScheduleKind::kAutoSchedule};
        d.alpha_max = alpha_max;
        return smb::auto_schedule_update(alpha, model_steps, total, d);
      },
      "alpha"_a, "model_steps"_a, "total_steps"_a, "alpha_max"_a);
  m.def("alpha_max_lower_bound", &smb::alpha_max_lower_bound, "L"_a, "eta"_a);
  m.def(
      "theorem1_stepsize_cap",
      [](double L, double eta, double alpha_max) { return smb::theorem1_stepsize_cap({L, 0.0, eta, alpha_max}); },
      "L"_a, "eta"_a, "alpha_max"_a);
  m.def(
      "theorem1_pmf",
      [](const Vec& alphas, double L, double eta, double alpha_max) {
        return smb::theorem1_pmf(alphas, {L, 0.0, eta, alpha_max});
      },
      "alphas"_a, "L"_a, "eta"_a, "alpha_max"_a);

  m.def(
      "default_config",
      [] {
        py::dict d;
        for (const auto& [k, v] : smb::RunConfig{}.serialize()) d[py::str(k)] = v;
        return d;
      },
      "Config keys and their defaults as strings.");

  m.def(
      "run",
      [](const py::kwargs& kw) {
        const smb::RunConfig cfg = config_from(kw);
        smb::RunResult r;
        {
          py::gil_scoped_release release;
          r = smb::run_on(smb::build_problem(cfg), cfg);
        }
        return py::dict("records"_a = records_list(r.records), "diverged"_a = r.diverged);
      },
      "Single run; keywords are config keys, e.g. problem='quadratic', optimizer='smb', alpha=0.1.");

  m.def(
      "run_csv",
      [](const py::kwargs& kw) {
        smb::RunConfig cfg = config_from(kw);
        cfg.out.clear();
        std::ostringstream os;
        int code;
        {
          py::gil_scoped_release release;
          code = smb::cmd_run(cfg, os).exit_code;
        }
        return py::make_tuple(os.str(), code);
      },
      "Metrics CSV text and exit code of the `run` command.");

  m.def(
      "sweep",
      [](const std::vector<double>& grid, const std::vector<std::string>& variants, std::size_t jobs,
         const py::kwargs& kw) {
        const smb::RunConfig cfg = config_from(kw);
        std::vector<smb::Variant> vs;
        for (const auto& v : variants) vs.push_back(smb::parse_variant(v));
        smb::SweepResult res;
        {
          py::gil_scoped_release release;
          res = smb::run_sweep(cfg, grid, vs, jobs);
        }
        py::list out;
        for (const auto& c : res.cells) {
          py::dict d("variant"_a = smb::to_string(c.variant), "alpha"_a = c.alpha, "final_loss"_a = c.final_loss,
                     "diverged"_a = c.diverged, "error"_a = c.error, "records"_a = records_list(c.records));
          d["final_accuracy"] = c.final_accuracy ? py::cast(*c.final_accuracy) : py::none();
          out.append(d);
        }
        return out;
      },
      "grid"_a = smb::kPaperAlphaGrid, "variants"_a = std::vector<std::string>{"sgd", "adam", "smb"},
      "jobs"_a = 0);

  m.def(
      "verify",
      [](std::uint64_t seed, std::size_t trials, std::size_t min_dim, std::size_t max_dim) {
        if (trials == 0) throw py::value_error("trials must be positive");
        smb::VerifyOptions opts;
        opts.seed = seed;
        opts.trials = trials;
        opts.min_dim = min_dim;
        opts.max_dim = max_dim;
        const auto rep = smb::run_verification(opts);
        py::dict out;
        for (const auto& p : rep.properties) {
          out[py::str(p.name)] = py::dict("passed"_a = p.passed, "max_error"_a = p.max_error,
                                          "tolerance"_a = p.tolerance, "cases"_a = p.cases);
        }
        return out;
      },
      "seed"_a = 1, "trials"_a = 1000, "min_dim"_a = 2, "max_dim"_a = 10);

  m.def(
      "gradcheck",
      [](const py::kwargs& kw) {
        const smb::RunConfig cfg = config_from(kw);
        std::ostringstream os;
        smb::GradCheckReport rep;
        const int code = smb::cmd_gradcheck(cfg, os, &rep);
        py::dict groups;
        for (const auto& g : rep.groups) groups[py::str(g.name)] = g.rel_error;
        return py::dict("passed"_a = code == smb::kExitOk, "max_rel_error"_a = rep.max_rel_error, "groups"_a = groups);
      });
}
