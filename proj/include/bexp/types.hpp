#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bexp {

using Eigen::ArrayXd;
using Eigen::Index;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const ArrayXd& v, const std::string& what) {
  if (!v.isFinite().all())
    throw std::invalid_argument(what + " contains non-finite entries");
}

}  // namespace detail

/// Gaussian posterior over the scaled average reward of each arm.
/// `mu` and `sigma2` are per-arm mean and (strictly positive) variance.
struct BeliefState {
  ArrayXd mu;
  ArrayXd sigma2;

  Index num_arms() const { return mu.size(); }

  void validate() const {
    detail::require(mu.size() >= 1, "BeliefState: need at least one arm");
    detail::require(mu.size() == sigma2.size(),
                    "BeliefState: mu/sigma2 dimension mismatch");
    detail::require_finite(mu, "BeliefState.mu");
    detail::require_finite(sigma2, "BeliefState.sigma2");
    detail::require((sigma2 > 0.0).all(),
                    "BeliefState: sigma2 must be strictly positive");
  }
};

/// Sampling probabilities over arms; entries are nonnegative and sum to one.
struct Allocation {
  ArrayXd p;

  Index num_arms() const { return p.size(); }

  void validate() const {
    detail::require(p.size() >= 1, "Allocation: need at least one arm");
    detail::require_finite(p, "Allocation.p");
    detail::require((p >= 0.0).all(), "Allocation: negative probability");
    detail::require(std::abs(p.sum() - 1.0) <= 1e-12,
                    "Allocation: probabilities must sum to 1");
  }

  static Allocation uniform(Index k) {
    detail::require(k >= 1, "Allocation: need at least one arm");
    return Allocation{ArrayXd::Constant(k, 1.0 / static_cast<double>(k))};
  }
};

/// Measurement side of the experiment: per-unit reward variances s^2 as
/// believed by the experimenter, epoch-length constants b_t, and the batch
/// scaling n (each epoch t draws b_t * n units).
struct MeasurementModel {
  ArrayXd s2;
  ArrayXd batch_fracs;
  std::int64_t n = 1;

  Index num_arms() const { return s2.size(); }
  Index horizon() const { return batch_fracs.size(); }

  double total_budget() const { return batch_fracs.sum(); }

  /// Residual budget from epoch t (inclusive) to the end.
  double residual_budget(Index t) const {
    detail::require(t >= 0 && t < horizon(), "residual_budget: epoch out of range");
    return batch_fracs.tail(horizon() - t).sum();
  }

  void validate() const {
    detail::require(s2.size() >= 1, "MeasurementModel: need at least one arm");
    detail::require_finite(s2, "MeasurementModel.s2");
    detail::require((s2 > 0.0).all(), "MeasurementModel: s2 must be positive");
    detail::require(batch_fracs.size() >= 1, "MeasurementModel: empty schedule");
    detail::require_finite(batch_fracs, "MeasurementModel.batch_fracs");
    detail::require((batch_fracs > 0.0).all(),
                    "MeasurementModel: batch fractions must be positive");
    detail::require(n >= 1, "MeasurementModel: batch scaling must be >= 1");
  }
};

/// One epoch of aggregate observations, one entry per arm. Arms that received
/// no samples carry exactly zero.
struct ObservationVector {
  ArrayXd y;

  void validate() const { detail::require_finite(y, "ObservationVector.y"); }
};

}  // namespace bexp
