#pragma once

#include "bexp/types.hpp"

namespace bexp {

/// Conjugate Gaussian update after observing aggregate rewards `y` for one
/// epoch of length b_t under allocation `alloc`:
///   1/sigma'^2 = 1/sigma^2 + b_t * pi / s^2
///   mu'        = sigma'^2 * (mu / sigma^2 + b_t * y / s^2)
/// Arms with zero allocation are returned bitwise unchanged.
BeliefState posterior_update(const BeliefState& state, const Allocation& alloc,
                             const ObservationVector& y, double b_t,
                             const ArrayXd& s2);

/// Random-walk form of the same transition driven by standard normals `z`:
/// the variance shrinks deterministically and the mean moves by the square
/// root of the variance decrement times z. Equal in distribution to drawing
/// an observation and applying posterior_update.
BeliefState sample_transition(const BeliefState& state, const Allocation& alloc,
                              const ArrayXd& z, double b_t, const ArrayXd& s2);

/// One epoch of the limit experiment with true scaled means `h`:
///   y_a = pi_a h_a + sqrt(pi_a s_a^2 / b_t) z_a,
/// exactly zero wherever pi_a = 0.
ObservationVector sample_limit_observation(const ArrayXd& h,
                                           const Allocation& alloc,
                                           const ArrayXd& z, double b_t,
                                           const ArrayXd& s2);

/// Posterior standard deviation of the terminal mean when allocation `rho` is
/// held for a residual budget of b_bar:
///   sqrt(sigma^4 rho b_bar / (s^2 + sigma^2 rho b_bar)).
/// Zero where rho b_bar = 0 and increasing to sigma as rho b_bar -> inf.
ArrayXd terminal_std(const BeliefState& state, const Allocation& rho,
                     double b_bar, const ArrayXd& s2);

/// sigma_t^2 - sigma_{t+1}^2 for one epoch, in closed form:
///   sigma^4 b_t pi / (s^2 + sigma^2 b_t pi).
ArrayXd variance_decrement(const ArrayXd& sigma2, const Allocation& alloc,
                           double b_t, const ArrayXd& s2);

/// Arm with the highest posterior mean; ties go to the lowest index.
Index select_arm(const BeliefState& state);

}  // namespace bexp
