#include "smb/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace smb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidBatchSize: return "invalid batch size";
    case ErrorKind::kNumericalOverflow: return "numerical overflow";
    case ErrorKind::kDegenerateGradient: return "degenerate gradient";
    case ErrorKind::kContractViolation: return "contract violation";
    case ErrorKind::kOracleTooLarge: return "oracle too large";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kPrecondition: return "precondition violated";
  }
  return "error";
}

std::size_t ParamGroups::total_dim() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

ParamGroups ParamGroups::zeros_like() const {
  ParamGroups out;
  out.names = names;
  out.groups.reserve(groups.size());
  for (const auto& g : groups) out.groups.emplace_back(g.size(), 0.0);
  return out;
}

bool ParamGroups::same_shape(const ParamGroups& other) const {
  if (groups.size() != other.groups.size()) return false;
  for (std::size_t p = 0; p < groups.size(); ++p) {
    if (groups[p].size() != other.groups[p].size()) return false;
  }
  return true;
}

bool ParamGroups::all_finite() const {
  for (const auto& g : groups) {
    for (double v : g) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double ParamGroups::squared_norm() const {
  double s = 0.0;
  for (const auto& g : groups) s += dot(g, g);
  return s;
}

void ParamGroups::axpy(double scale, const ParamGroups& other) {
  if (!same_shape(other)) throw Error(ErrorKind::kShapeMismatch, "axpy operands differ in shape");
  for (std::size_t p = 0; p < groups.size(); ++p) {
    auto& dst = groups[p];
    const auto& src = other.groups[p];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

ParamGroups make_param_groups(std::vector<std::string> names, std::vector<ParamVector> groups) {
  if (names.empty() || names.size() != groups.size()) {
    throw Error(ErrorKind::kShapeMismatch, "need one name per group and at least one group");
  }
  return ParamGroups{std::move(names), std::move(groups)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Batch full_batch(std::size_t dataset_size) {
  Batch b;
  b.indices.resize(dataset_size);
  std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
  return b;
}

EvalResult evaluate(const StochasticOracle& oracle, const ParamGroups& x, const Batch& batch) {
  EvalResult r = oracle.eval(x, batch);
  if (!std::isfinite(r.loss)) throw Error(ErrorKind::kNumericalOverflow, "loss is not finite");
  for (std::size_t p = 0; p < r.grads.size(); ++p) {
    for (double v : r.grads.groups[p]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kNumericalOverflow, "gradient of group '" + r.grads.names[p] + "' is not finite");
      }
    }
  }
  return r;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Lemire's nearly-divisionless bounded draw; std::uniform_int_distribution is
// implementation-defined and would break cross-platform golden batches.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t range) {
  unsigned __int128 m = static_cast<unsigned __int128>(gen()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(gen()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

Batch sample_batch(std::uint64_t seed, RngStream stream, std::uint64_t counter,
                   std::size_t dataset_size, std::size_t m) {
  if (m < 1 || m > dataset_size) {
    throw Error(ErrorKind::kInvalidBatchSize, "batch size " + std::to_string(m) +
                                                  " outside [1, " + std::to_string(dataset_size) + "]");
  }
  Batch b;
  b.seed_tag = mix_key(seed, static_cast<std::uint64_t>(stream), counter);
  std::mt19937_64 gen(b.seed_tag);

  // Partial Fisher-Yates: the first m slots end up a uniform m-subset.
  std::vector<std::size_t> pool(dataset_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + bounded(gen, dataset_size - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  b.indices = std::move(pool);
  return b;
}

Batch sample_batch(RngState& state, RngStream stream, std::size_t dataset_size, std::size_t m) {
  Batch b = sample_batch(state.seed, stream, state.counter, dataset_size, m);
  ++state.counter;
  return b;
}

}  // namespace smb
