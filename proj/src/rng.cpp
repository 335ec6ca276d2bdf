#include "bexp/rng.hpp"

#include "bexp/normal.hpp"

#include <cmath>
#include <stdexcept>

namespace bexp {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 prod =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(prod >> 64);
  lo = static_cast<std::uint64_t>(prod);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64::block(
    const std::array<std::uint64_t, 4>& counter,
    const std::array<std::uint64_t, 2>& key) {
  std::array<std::uint64_t, 4> c = counter;
  std::array<std::uint64_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::uint64_t seed_combine(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(splitmix64(parent) ^ splitmix64(tag + 0xA5A5A5A5A5A5A5A5ULL));
}

std::uint64_t seed_combine(std::uint64_t parent,
                           std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = parent;
  for (std::uint64_t t : tags) s = seed_combine(s, t);
  return s;
}

std::uint64_t RngStream::next_u64() {
  if (buffered_ == 0) {
    buffer_ = Philox4x64::block(counter_, key_);
    buffered_ = 4;
    if (++counter_[0] == 0)
      if (++counter_[1] == 0)
        if (++counter_[2] == 0) ++counter_[3];
  }
  return buffer_[4 - buffered_--];
}

double RngStream::uniform() {
  // 53 significand bits, offset by half an ulp so 0 and 1 are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return inv_normal_cdf(uniform()); }

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    const double boost = std::pow(uniform(), 1.0 / shape);
    return gamma(shape + 1.0, scale) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return d * v * scale;
  }
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double RngStream::gumbel(double location, double scale) {
  return location - scale * std::log(-std::log(uniform()));
}

double RngStream::lognormal(double log_mean, double log_sd) {
  return std::exp(log_mean + log_sd * normal());
}

Eigen::Index RngStream::categorical(const Eigen::ArrayXd& probs) {
  const double u = uniform();
  double cum = 0.0;
  const Eigen::Index k = probs.size();
  for (Eigen::Index a = 0; a + 1 < k; ++a) {
    cum += probs[a];
    if (u < cum) return a;
  }
  return k - 1;
}

Eigen::ArrayXd RngStream::normals(Eigen::Index k) {
  Eigen::ArrayXd out(k);
  for (Eigen::Index i = 0; i < k; ++i) out[i] = normal();
  return out;
}

}  // namespace bexp
