#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bexp {

/// Fixed matrix of standard-normal deviates backing one sample-average
/// approximation. Rows are samples, columns are arms.
struct NormalDraws {
  enum class Source { qmc, pseudo };

  Eigen::ArrayXXd z;
  Source source = Source::qmc;
  std::uint64_t seed = 0;

  Eigen::Index num_samples() const { return z.rows(); }
  Eigen::Index num_arms() const { return z.cols(); }
};

/// Sobol sequence in up to 256 dimensions with Owen-style scrambling
/// (Matousek linear matrix scramble plus a random digital shift). The
/// all-zeros first point is skipped and outputs are centered inside their
/// dyadic cells, so every coordinate lies strictly inside (0, 1).
class SobolSequence {
 public:
  /// `seed` keys the scrambling; identical seeds give identical sequences.
  /// `scramble = false` exposes the plain sequence (tests, diagnostics).
  SobolSequence(int dim, std::uint64_t seed, bool scramble = true);

  /// Points with index 1..n of the scrambled sequence, one per row.
  Eigen::ArrayXXd points(std::int64_t n);

  static constexpr int max_dimension();

 private:
  int dim_;
  std::vector<std::vector<std::uint32_t>> directions_;  // [dim][bit]
  std::vector<std::uint32_t> shift_;
};

/// N x K standard-normal deviates from the scrambled Sobol sequence mapped
/// through the inverse normal CDF. Deterministic per (n, k, seed).
NormalDraws sobol_standard_normals(std::int64_t n, int k, std::uint64_t seed);

/// Plain Monte Carlo fallback with the same interface.
NormalDraws pseudo_standard_normals(std::int64_t n, int k, std::uint64_t seed);

}  // namespace bexp
