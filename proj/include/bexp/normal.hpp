#pragma once

namespace bexp {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF, accurate in both tails.
double normal_cdf(double x);

/// Inverse standard normal CDF for p in (0, 1).
/// Acklam's rational approximation polished with two Halley steps, giving
/// results accurate to close to machine precision.
double inv_normal_cdf(double p);

}  // namespace bexp
