#ifndef WARPLOSS_GEOMETRY_HPP_
#define WARPLOSS_GEOMETRY_HPP_

#include <utility>

#include "warploss/vec.hpp"

namespace warploss {

// A pair of class proxies: p_c is the ground-truth proxy, p_cprime the
// opposite-class proxy. They must be distinct points of equal dimension.
struct ProxyPair {
  Vec p_c;
  Vec p_cprime;

  ProxyPair(Vec ground_truth, Vec opposite);

  // Separation d = ||p_c - p_cprime||, always > 0.
  double separation() const;
};

// Parametric form of the infinite line through both proxies. The parameter t
// measures signed distance from p_c and is positive on the side away from
// p_cprime, so the warp's point of attraction alpha is directly a t value.
struct LineParam {
  Vec origin;     // = p_c
  Vec direction;  // unit vector, points from p_cprime through p_c and beyond

  Vec point_at(double t) const {
    Vec p = origin;
    axpy(t, direction, p);
    return p;
  }
};

double distance(const Vec& a, const Vec& b);

LineParam line_through(const ProxyPair& pair);

// The two intersections of the radius-r sphere around p_cprime with the
// proxy line: first the one nearer p_c (e_*), then the farther one (e^*).
std::pair<Vec, Vec> disk_extreme_points(const ProxyPair& pair, double r);

// Perpendicular distance from a point to the infinite line.
double point_line_distance(const Vec& e, const LineParam& line);

}  // namespace warploss

#endif  // WARPLOSS_GEOMETRY_HPP_
