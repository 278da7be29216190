#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smb/error.hpp"

namespace smb {

/// Coordinates of one parameter group.
using ParamVector = std::vector<double>;

/// Ordered partition of the model parameters into named groups. Group
/// boundaries are fixed for the lifetime of a run.
struct ParamGroups {
  std::vector<std::string> names;
  std::vector<ParamVector> groups;

  std::size_t size() const { return groups.size(); }
  std::size_t total_dim() const;

  ParamGroups zeros_like() const;
  bool same_shape(const ParamGroups& other) const;
  bool all_finite() const;

  /// Squared norm over all groups concatenated.
  double squared_norm() const;
  /// this += scale * other (shapes must match).
  void axpy(double scale, const ParamGroups& other);
};

ParamGroups make_param_groups(std::vector<std::string> names, std::vector<ParamVector> groups);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

struct Batch {
  std::vector<std::size_t> indices;  // sorted ascending
  std::uint64_t seed_tag = 0;
};

struct EvalResult {
  double loss = 0.0;
  ParamGroups grads;
};

/// f(x, xi) and its gradient, averaged over the samples of a batch.
/// Implementations must be read-only after construction.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual std::size_t dataset_size() const = 0;
  virtual EvalResult eval(const ParamGroups& x, const Batch& batch) const = 0;
};

/// Batch covering every sample of the oracle's dataset.
Batch full_batch(std::size_t dataset_size);

/// Calls the oracle and rejects non-finite losses or gradients.
EvalResult evaluate(const StochasticOracle& oracle, const ParamGroups& x, const Batch& batch);

// ---------------------------------------------------------------------------
// Counter-based sampling.
//
// Every draw is a pure function of (seed, stream, counter): the generator for
// one batch is keyed by mixing the three values, so distinct streams never
// share state and any batch can be regenerated independently.

enum class RngStream : std::uint64_t {
  kPrimary = 0,      // xi_k
  kIndependent = 1,  // xi'_k for the independent-batch variant
  kInit = 2,         // parameter initialisation
  kData = 3,         // synthetic data and splits
};

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;
};

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Draws m distinct indices from [0, dataset_size) uniformly, sorted ascending.
/// Identical (seed, stream, counter) inputs give identical batches.
Batch sample_batch(std::uint64_t seed, RngStream stream, std::uint64_t counter,
                   std::size_t dataset_size, std::size_t m);

/// Draws a batch from `state` and advances its counter by one.
Batch sample_batch(RngState& state, RngStream stream, std::size_t dataset_size, std::size_t m);

}  // namespace smb
