#include "bexp/sobol.hpp"

#include "bexp/normal.hpp"
#include "bexp/rng.hpp"
#include "bexp/sobol_directions.hpp"

#include <bit>
#include <stdexcept>
#include <vector>

namespace bexp {

namespace {

constexpr int kBits = 32;

// Applies the lower-triangular GF(2) matrix given by its columns to x.
// Column c carries the image of input bit c (bits counted from the MSB).
inline std::uint32_t apply_gf2(const std::vector<std::uint32_t>& columns,
                               std::uint32_t x) {
  std::uint32_t y = 0;
  while (x != 0) {
    const int lead = std::countl_zero(x);
    y ^= columns[lead];
    x &= ~(0x80000000u >> lead);
  }
  return y;
}

}  // namespace

constexpr int SobolSequence::max_dimension() { return detail::kSobolMaxDim; }

SobolSequence::SobolSequence(int dim, std::uint64_t seed, bool scramble)
    : dim_(dim) {
  if (dim < 1 || dim > detail::kSobolMaxDim)
    throw std::invalid_argument("SobolSequence: dimension must be in [1, " +
                                std::to_string(detail::kSobolMaxDim) + "]");

  directions_.assign(dim_, std::vector<std::uint32_t>(kBits));
  shift_.assign(dim_, 0);

  for (int j = 0; j < dim_; ++j) {
    std::vector<std::uint32_t>& v = directions_[j];
    if (j == 0) {
      // First dimension is the van der Corput sequence in base 2.
      for (int k = 0; k < kBits; ++k) v[k] = 0x80000000u >> k;
    } else {
      const detail::SobolDirectionRow& row = detail::kSobolDirections[j - 1];
      const int s = static_cast<int>(row.degree);
      for (int k = 0; k < s && k < kBits; ++k)
        v[k] = row.m[k] << (kBits - 1 - k);
      for (int k = s; k < kBits; ++k) {
        std::uint32_t vk = v[k - s] ^ (v[k - s] >> s);
        // Interior coefficient bits of the primitive polynomial.
        for (int i = 1; i < s; ++i)
          if ((row.poly >> (s - i)) & 1u) vk ^= v[k - i];
        v[k] = vk;
      }
    }

    if (!scramble) continue;

    // Matousek scramble: random nonsingular lower-triangular matrix per
    // dimension, plus a digital shift. Keyed by (seed, dimension).
    RngStream rng(seed, static_cast<std::uint64_t>(j) + 1);
    std::vector<std::uint32_t> columns(kBits);
    for (int c = 0; c < kBits; ++c) {
      const std::uint32_t diag = 0x80000000u >> c;
      const std::uint32_t below =
          (c + 1 < kBits)
              ? static_cast<std::uint32_t>(rng.next_u64()) & (diag - 1u)
              : 0u;
      columns[c] = diag | below;
    }
    for (int k = 0; k < kBits; ++k) v[k] = apply_gf2(columns, v[k]);
    shift_[j] = static_cast<std::uint32_t>(rng.next_u64());
  }
}

Eigen::ArrayXXd SobolSequence::points(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("SobolSequence: need n >= 1");
  if (n >= (std::int64_t{1} << 31) - 1)
    throw std::invalid_argument("SobolSequence: point count exceeds generator capacity");

  Eigen::ArrayXXd out(n, dim_);
  std::vector<std::uint32_t> state(dim_, 0);
  // Gray-code stepping; point index 0 (all zeros pre-shift) is skipped.
  for (std::int64_t i = 1; i <= n; ++i) {
    const int bit = std::countr_zero(static_cast<std::uint64_t>(i));
    for (int j = 0; j < dim_; ++j) {
      state[j] ^= directions_[j][bit];
      const std::uint32_t x = state[j] ^ shift_[j];
      out(i - 1, j) = (static_cast<double>(x) + 0.5) * 0x1.0p-32;
    }
  }
  return out;
}

NormalDraws sobol_standard_normals(std::int64_t n, int k, std::uint64_t seed) {
  if (n < 1 || k < 1)
    throw std::invalid_argument("sobol_standard_normals: need n, k >= 1");
  SobolSequence seq(k, seed);
  Eigen::ArrayXXd u = seq.points(n);
  NormalDraws draws;
  draws.z = u.unaryExpr([](double p) { return inv_normal_cdf(p); });
  draws.source = NormalDraws::Source::qmc;
  draws.seed = seed;
  return draws;
}

NormalDraws pseudo_standard_normals(std::int64_t n, int k, std::uint64_t seed) {
  if (n < 1 || k < 1)
    throw std::invalid_argument("pseudo_standard_normals: need n, k >= 1");
  NormalDraws draws;
  draws.z.resize(n, k);
  RngStream rng(seed, 0);
  for (std::int64_t i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) draws.z(i, j) = rng.normal();
  draws.source = NormalDraws::Source::pseudo;
  draws.seed = seed;
  return draws;
}

}  // namespace bexp
