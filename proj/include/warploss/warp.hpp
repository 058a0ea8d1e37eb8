#ifndef WARPLOSS_WARP_HPP_
#define WARPLOSS_WARP_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace warploss {

// A warp function f: [0,inf) -> [0,inf), monotone non-decreasing, applied to
// a distance before it enters the softmax exponent.
//
// The piecewise-linear member is the workhorse: slope k1 < 1 below the point
// of attraction alpha (boosting outward force), slope k2 > 1 above it
// (boosting inward force), plus an offset delta that cancels the distance
// handicap introduced by k1:
//
//   f(t) = k1*t + delta                      for t <= alpha
//   f(t) = k1*alpha + delta + k2*(t - alpha) for t >  alpha
class WarpSpec {
 public:
  enum class Kind { kIdentity, kPower, kScale, kPiecewiseLinear };

  static WarpSpec identity();
  static WarpSpec power(double exponent);
  static WarpSpec scale(double factor);
  static WarpSpec piecewise_linear(double alpha, double k1, double k2, double delta);

  double value(double t) const;
  double deriv(double t) const;

  Kind kind() const { return kind_; }
  double exponent() const { return a_; }
  double factor() const { return a_; }
  double alpha() const { return a_; }
  double k1() const { return b_; }
  double k2() const { return c_; }
  double delta() const { return d_; }

  // Round-trippable text form in the warp-pair grammar ("t", "t^2",
  // "0.5*t", "pwl(3,0.65,1.5,1.05)").
  std::string str() const;

  bool operator==(const WarpSpec& o) const = default;

 private:
  WarpSpec(Kind kind, double a, double b, double c, double d)
      : kind_(kind), a_(a), b_(b), c_(c), d_(d) {}

  Kind kind_;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, d_ = 0.0;
};

struct WarpPair {
  WarpSpec f1;  // applied to the ground-truth distance t_1
  WarpSpec f2;  // applied to each negative-class distance t_2
};

// delta that makes f1(alpha) = alpha when margin_k = 1; larger margin_k
// scales the offset into a conventional margin.
double default_delta(double alpha, double k1, double margin_k = 1.0);

struct WarpParseError : std::runtime_error {
  WarpParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " at position " + std::to_string(position)), pos(position) {}
  std::size_t pos;
};

// Parses "f1 - f2" where each side is one of: "t", "t^P", "C*t",
// "pwl(ALPHA,K1,K2,DELTA)". Whitespace-insensitive.
WarpPair parse_warp_pair(const std::string& expr);

}  // namespace warploss

#endif  // WARPLOSS_WARP_HPP_
