#include "probekit/probing/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "probekit/core/error.hpp"

namespace probekit::probing {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("kl_divergence: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("js_divergence: dimension mismatch (" + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  }
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double jsd = 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
  // Rounding can push the sum a few ulps outside the closed interval.
  return std::clamp(jsd, 0.0, std::numbers::ln2);
}

double js_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  return js_divergence(std::span<const double>(p.values()), std::span<const double>(q.values()));
}

}  // namespace probekit::probing
