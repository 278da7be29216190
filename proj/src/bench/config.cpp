#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "smb/bench.hpp"

#ifndef SMB_DEFAULT_DATA_DIR
#define SMB_DEFAULT_DATA_DIR "data"
#endif

namespace smb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error(ErrorKind::kConfig, key + ": '" + value + "' is not a number");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kConfig, key + ": '" + value + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  OptimizerConfig& opt = cfg.optimizer;
  if (key == "problem") {
    cfg.problem = value;
  } else if (key == "optimizer") {
    opt.variant = parse_variant(value);
  } else if (key == "alpha") {
    opt.alpha0 = to_double(key, value);
  } else if (key == "alpha-max") {
    opt.alpha_max = to_double(key, value);
  } else if (key == "eta") {
    opt.eta = to_double(key, value);
  } else if (key == "c") {
    opt.c = to_double(key, value);
  } else if (key == "batch-size") {
    opt.batch_size = to_uint(key, value);
  } else if (key == "schedule") {
    opt.schedule.kind = parse_schedule_kind(value);
  } else if (key == "phi") {
    opt.schedule.phi = to_double(key, value);
  } else if (key == "shrink") {
    opt.schedule.shrink_factor = to_double(key, value);
  } else if (key == "trigger") {
    opt.schedule.trigger_fraction = to_double(key, value);
  } else if (key == "epochs") {
    cfg.epochs = static_cast<int>(to_uint(key, value));
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "data") {
    cfg.data = value;
  } else if (key == "width") {
    cfg.width = to_uint(key, value);
  } else if (key == "subset") {
    cfg.subset = to_uint(key, value);
  } else if (key == "test-fraction") {
    cfg.test_fraction = to_double(key, value);
  } else if (key == "l2") {
    cfg.l2 = to_double(key, value);
  } else if (key == "dim") {
    cfg.dim = to_uint(key, value);
  } else if (key == "mu") {
    cfg.mu = to_double(key, value);
  } else if (key == "lipschitz") {
    cfg.lipschitz = to_double(key, value);
  } else if (key == "samples") {
    cfg.samples = to_uint(key, value);
  } else if (key == "noise") {
    cfg.noise = to_double(key, value);
  } else if (key == "groups") {
    cfg.groups = to_uint(key, value);
  } else if (key == "logistic-samples") {
    cfg.logistic_samples = to_uint(key, value);
  } else if (key == "logistic-dim") {
    cfg.logistic_dim = to_uint(key, value);
  } else {
    throw Error(ErrorKind::kConfig, key + ": unknown configuration key");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::serialize() const {
  const OptimizerConfig& o = optimizer;
  return {
      {"problem", problem},
      {"optimizer", to_string(o.variant)},
      {"alpha", format_double(o.alpha0)},
      {"alpha-max", format_double(o.effective_alpha_max())},
      {"eta", format_double(o.eta)},
      {"c", format_double(o.c)},
      {"batch-size", std::to_string(o.batch_size)},
      {"schedule", to_string(o.schedule.kind)},
      {"phi", format_double(o.schedule.phi)},
      {"shrink", format_double(o.schedule.shrink_factor)},
      {"trigger", format_double(o.schedule.trigger_fraction)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"data", data},
      {"width", std::to_string(width)},
      {"subset", std::to_string(subset)},
      {"test-fraction", format_double(test_fraction)},
      {"l2", format_double(l2)},
      {"dim", std::to_string(dim)},
      {"mu", format_double(mu)},
      {"lipschitz", format_double(lipschitz)},
      {"samples", std::to_string(samples)},
      {"noise", format_double(noise)},
      {"groups", std::to_string(groups)},
      {"logistic-samples", std::to_string(logistic_samples)},
      {"logistic-dim", std::to_string(logistic_dim)},
  };
}

void RunConfig::validate() const {
  if (problem != "quadratic" && problem != "logistic" && problem != "mlp") {
    throw Error(ErrorKind::kConfig, "problem: unknown problem '" + problem + "' (quadratic|logistic|mlp)");
  }
  if (epochs < 1) throw Error(ErrorKind::kConfig, "epochs: must be >= 1");
  if (width < 1) throw Error(ErrorKind::kConfig, "width: must be >= 1");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw Error(ErrorKind::kConfig, "test-fraction: must lie in [0, 1)");
  if (l2 < 0.0) throw Error(ErrorKind::kConfig, "l2: must be >= 0");
  if (problem == "quadratic") {
    if (dim < 1) throw Error(ErrorKind::kConfig, "dim: must be >= 1");
    if (!(mu > 0.0) || !(lipschitz >= mu)) throw Error(ErrorKind::kConfig, "lipschitz: need 0 < mu <= lipschitz");
    if (samples < 1) throw Error(ErrorKind::kConfig, "samples: must be >= 1");
    if (noise < 0.0) throw Error(ErrorKind::kConfig, "noise: must be >= 0");
    if (groups < 1 || groups > dim) throw Error(ErrorKind::kConfig, "groups: must lie in [1, dim]");
  }
  optimizer.validate();
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  for (const auto& [k, v] : parse_key_values(text)) set_field(base, k, v);
  return base;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("SMB_DATA_DIR")) return env;
  return SMB_DEFAULT_DATA_DIR;
}

namespace {

namespace fs = std::filesystem;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// A directory holding IDX pairs, an IDX image file, a CSV file (label column
// "label") or a libsvm file.
Dataset load_any(const std::string& path) {
  if (fs::is_directory(path)) {
    const std::pair<const char*, const char*> candidates[] = {
        {"mnist10k-images-idx3-ubyte.gz", "mnist10k-labels-idx1-ubyte.gz"},
        {"train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"},
        {"train-images-idx3-ubyte", "train-labels-idx1-ubyte"},
        {"train-images.idx3-ubyte", "train-labels.idx1-ubyte"},
    };
    for (const auto& [img, lbl] : candidates) {
      const fs::path i = fs::path(path) / img;
      const fs::path l = fs::path(path) / lbl;
      if (fs::exists(i) && fs::exists(l)) return load_idx(i.string(), l.string());
    }
    throw Error(ErrorKind::kConfig, "data: no IDX image/label pair found in '" + path + "'");
  }
  if (!fs::exists(path)) throw Error(ErrorKind::kConfig, "data: '" + path + "' does not exist");
  if (const auto pos = path.find("images-idx3"); pos != std::string::npos) {
    std::string labels = path;
    labels.replace(pos, 11, "labels-idx1");
    return load_idx(path, labels);
  }
  if (const auto pos = path.find("images.idx3"); pos != std::string::npos) {
    std::string labels = path;
    labels.replace(pos, 11, "labels.idx1");
    return load_idx(path, labels);
  }
  if (ends_with(path, ".csv")) {
    Dataset ds = load_csv(path, "label");
    return ds;
  }
  return load_libsvm(path);
}

}  // namespace

ProblemInstance build_problem(const RunConfig& cfg) {
  cfg.validate();
  ProblemInstance inst;
  if (cfg.problem == "quadratic") {
    auto q = std::make_shared<QuadraticProblem>(QuadraticProblem::with_spectrum(
        cfg.dim, cfg.mu, cfg.lipschitz, cfg.samples, cfg.noise, cfg.seed, cfg.groups));
    inst.x0 = q->initial_point(cfg.seed);
    inst.lipschitz = q->lipschitz();
    inst.description = "quadratic dim=" + std::to_string(cfg.dim);
    inst.oracle = std::move(q);
    return inst;
  }

  Dataset ds;
  bool needs_standardize = false;
  if (cfg.data.empty() && cfg.problem == "logistic") {
    ds = make_synthetic_logistic(cfg.logistic_samples, cfg.logistic_dim, cfg.seed);
    inst.description = "synthetic logistic";
  } else {
    const std::string path = cfg.data.empty() ? default_data_dir() : cfg.data;
    ds = load_any(path);
    needs_standardize = ds.normalization == "none";
    inst.description = path;
  }
  take_subset(ds, cfg.subset);
  split_train_test(ds, cfg.test_fraction, cfg.seed);
  if (needs_standardize) standardize(ds);
  auto data = std::make_shared<const Dataset>(std::move(ds));
  inst.data = data;

  if (cfg.problem == "logistic") {
    auto p = std::make_shared<LogisticProblem>(data, data->train, cfg.l2);
    inst.x0 = p->initial_point();
    inst.classifier = p.get();
    inst.oracle = std::move(p);
  } else {
    auto p = std::make_shared<MlpProblem>(data, data->train, cfg.width);
    inst.x0 = p->initial_point(cfg.seed);
    inst.classifier = p.get();
    inst.oracle = std::move(p);
  }
  return inst;
}

}  // namespace smb
