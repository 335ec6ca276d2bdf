#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <initializer_list>

namespace bexp {

/// Philox-4x64 counter-based generator, 10 rounds. A block is a pure function
/// of (counter, key), so independent streams are cheap: give each logical
/// stream its own key and walk the counter.
struct Philox4x64 {
  static std::array<std::uint64_t, 4> block(
      const std::array<std::uint64_t, 4>& counter,
      const std::array<std::uint64_t, 2>& key);
};

/// Deterministically derives a child seed from a parent seed and a tag.
/// Used to split one master seed into per-role / per-replication streams.
std::uint64_t seed_combine(std::uint64_t parent, std::uint64_t tag);

/// seed_combine folded over several tags.
std::uint64_t seed_combine(std::uint64_t parent,
                           std::initializer_list<std::uint64_t> tags);

/// A single random stream identified by (seed, stream). Draws are consumed
/// sequentially; the underlying counter never wraps at realistic volumes.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{seed, stream} {}

  std::uint64_t next_u64();

  /// Uniform draw strictly inside (0, 1).
  double uniform();

  /// Standard normal via the inverse CDF; one uniform per draw.
  double normal();

  /// Gamma(shape, scale) by Marsaglia-Tsang squeeze.
  double gamma(double shape, double scale);

  double beta(double a, double b);

  bool bernoulli(double p) { return uniform() < p; }

  /// Gumbel(location, scale) via inversion.
  double gumbel(double location, double scale);

  double lognormal(double log_mean, double log_sd);

  /// Index drawn from the distribution given by `probs` (need not be
  /// normalized beyond summing to ~1; the last arm absorbs roundoff).
  Eigen::Index categorical(const Eigen::ArrayXd& probs);

  Eigen::ArrayXd normals(Eigen::Index k);

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buffer_{};
  int buffered_ = 0;
};

}  // namespace bexp
