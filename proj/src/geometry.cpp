#include "warploss/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace warploss {

ProxyPair::ProxyPair(Vec ground_truth, Vec opposite)
    : p_c(std::move(ground_truth)), p_cprime(std::move(opposite)) {
  if (p_c.empty()) throw std::invalid_argument("ProxyPair: dimension must be >= 1");
  check_same_dim(p_c, p_cprime, "ProxyPair");
  if (!all_finite(p_c) || !all_finite(p_cprime))
    throw std::invalid_argument("ProxyPair: proxies must be finite");
  if (distance(p_c, p_cprime) <= 0.0)
    throw std::invalid_argument("ProxyPair: proxies must be distinct");
}

double ProxyPair::separation() const { return distance(p_c, p_cprime); }

double distance(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

LineParam line_through(const ProxyPair& pair) {
  const double d = pair.separation();
  Vec dir = sub(pair.p_c, pair.p_cprime);
  for (double& v : dir) v /= d;
  return LineParam{pair.p_c, std::move(dir)};
}

std::pair<Vec, Vec> disk_extreme_points(const ProxyPair& pair, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("disk_extreme_points: r must be positive");
  const LineParam line = line_through(pair);
  const double d = pair.separation();
  // p_cprime sits at t = -d; the sphere meets the line at t = -d +- r.
  return {line.point_at(r - d), line.point_at(-(d + r))};
}

double point_line_distance(const Vec& e, const LineParam& line) {
  check_same_dim(e, line.origin, "point_line_distance");
  Vec rel = sub(e, line.origin);
  const double along = dot(rel, line.direction);
  axpy(-along, line.direction, rel);
  return norm(rel);
}

}  // namespace warploss
