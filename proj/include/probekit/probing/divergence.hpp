#pragma once

#include <span>

#include "probekit/core/types.hpp"

namespace probekit::probing {

// KL(p || q) in nats with 0 * ln(0 / q) := 0. q must be positive wherever p is.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Jensen-Shannon divergence in nats, in [0, ln 2]. Throws ValidationError on
// a dimension mismatch.
double js_divergence(std::span<const double> p, std::span<const double> q);
double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

}  // namespace probekit::probing
