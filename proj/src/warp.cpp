#include "warploss/warp.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace warploss {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("WarpSpec: ") + name + " must be finite");
}

void check_nonnegative_t(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("warp: t must be non-negative");
}

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

WarpSpec WarpSpec::identity() { return WarpSpec(Kind::kIdentity, 0, 0, 0, 0); }

WarpSpec WarpSpec::power(double exponent) {
  require_finite(exponent, "exponent");
  if (!(exponent > 0.0)) throw std::invalid_argument("WarpSpec: power exponent must be > 0");
  return WarpSpec(Kind::kPower, exponent, 0, 0, 0);
}

WarpSpec WarpSpec::scale(double factor) {
  require_finite(factor, "factor");
  if (!(factor > 0.0)) throw std::invalid_argument("WarpSpec: scale factor must be > 0");
  return WarpSpec(Kind::kScale, factor, 0, 0, 0);
}

WarpSpec WarpSpec::piecewise_linear(double alpha, double k1, double k2, double delta) {
  require_finite(alpha, "alpha");
  require_finite(k1, "k1");
  require_finite(k2, "k2");
  require_finite(delta, "delta");
  if (!(alpha > 0.0)) throw std::invalid_argument("WarpSpec: alpha must be > 0");
  if (!(k1 > 0.0 && k1 < 1.0)) throw std::invalid_argument("WarpSpec: k1 must be in (0,1)");
  if (!(k2 > 1.0)) throw std::invalid_argument("WarpSpec: k2 must be > 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("WarpSpec: delta must be >= 0");
  return WarpSpec(Kind::kPiecewiseLinear, alpha, k1, k2, delta);
}

double WarpSpec::value(double t) const {
  check_nonnegative_t(t);
  switch (kind_) {
    case Kind::kIdentity:
      return t;
    case Kind::kPower:
      return std::pow(t, a_);
    case Kind::kScale:
      return a_ * t;
    case Kind::kPiecewiseLinear:
      if (t <= a_) return b_ * t + d_;
      return b_ * a_ + d_ + c_ * (t - a_);
  }
  return t;
}

double WarpSpec::deriv(double t) const {
  check_nonnegative_t(t);
  switch (kind_) {
    case Kind::kIdentity:
      return 1.0;
    case Kind::kPower: {
      // p < 1 has an unbounded derivative at 0; clamp so sqrt-style warps
      // keep gradients finite.
      const double tc = (a_ < 1.0) ? std::max(t, 1e-12) : t;
      return a_ * std::pow(tc, a_ - 1.0);
    }
    case Kind::kScale:
      return a_;
    case Kind::kPiecewiseLinear:
      // Left derivative at the kink: points arriving from inside should not
      // overshoot the point of attraction.
      return (t <= a_) ? b_ : c_;
  }
  return 1.0;
}

std::string WarpSpec::str() const {
  switch (kind_) {
    case Kind::kIdentity:
      return "t";
    case Kind::kPower:
      return "t^" + num_str(a_);
    case Kind::kScale:
      return num_str(a_) + "*t";
    case Kind::kPiecewiseLinear:
      return "pwl(" + num_str(a_) + "," + num_str(b_) + "," + num_str(c_) + "," + num_str(d_) + ")";
  }
  return "t";
}

double default_delta(double alpha, double k1, double margin_k) {
  if (!(alpha > 0.0)) throw std::invalid_argument("default_delta: alpha must be > 0");
  if (!(k1 > 0.0 && k1 < 1.0)) throw std::invalid_argument("default_delta: k1 must be in (0,1)");
  if (!(margin_k >= 1.0)) throw std::invalid_argument("default_delta: margin_k must be >= 1");
  return margin_k * (1.0 - k1) * alpha;
}

namespace {

// Recursive-descent parser over the original string so error positions refer
// to the user's text, whitespace included.
class WarpParser {
 public:
  explicit WarpParser(const std::string& s) : s_(s), i_(0) {}

  WarpPair parse() {
    WarpSpec f1 = parse_side();
    skip_ws();
    expect('-');
    WarpSpec f2 = parse_side();
    skip_ws();
    if (i_ != s_.size()) throw WarpParseError("unexpected trailing input", i_);
    return WarpPair{f1, f2};
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  void expect(char c) {
    if (i_ >= s_.size() || s_[i_] != c)
      throw WarpParseError(std::string("expected '") + c + "'", i_);
    ++i_;
  }

  bool peek_is(char c) { return i_ < s_.size() && s_[i_] == c; }

  double parse_number() {
    skip_ws();
    const std::size_t start = i_;
    while (i_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == 'e' ||
            s_[i_] == 'E' || ((s_[i_] == '+' || s_[i_] == '-') && i_ > start &&
                              (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E'))))
      ++i_;
    if (i_ == start) throw WarpParseError("expected a number", i_);
    const std::string tok = s_.substr(start, i_ - start);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v))
      throw WarpParseError("malformed number '" + tok + "'", start);
    return v;
  }

  WarpSpec parse_side() {
    skip_ws();
    if (i_ >= s_.size()) throw WarpParseError("expected a warp term", i_);
    const std::size_t start = i_;
    if (s_.compare(i_, 3, "pwl") == 0) {
      i_ += 3;
      skip_ws();
      expect('(');
      const double alpha = parse_number();
      skip_ws();
      expect(',');
      const double k1 = parse_number();
      skip_ws();
      expect(',');
      const double k2 = parse_number();
      skip_ws();
      expect(',');
      const double delta = parse_number();
      skip_ws();
      expect(')');
      try {
        return WarpSpec::piecewise_linear(alpha, k1, k2, delta);
      } catch (const std::invalid_argument& e) {
        throw WarpParseError(e.what(), start);
      }
    }
    if (s_[i_] == 't') {
      ++i_;
      const std::size_t after_t = i_;
      skip_ws();
      if (peek_is('^')) {
        ++i_;
        const double p = parse_number();
        try {
          return WarpSpec::power(p);
        } catch (const std::invalid_argument& e) {
          throw WarpParseError(e.what(), start);
        }
      }
      i_ = after_t;
      return WarpSpec::identity();
    }
    // Must be "C*t".
    const double c = parse_number();
    skip_ws();
    expect('*');
    skip_ws();
    if (i_ >= s_.size() || s_[i_] != 't') throw WarpParseError("expected 't'", i_);
    ++i_;
    try {
      return WarpSpec::scale(c);
    } catch (const std::invalid_argument& e) {
      throw WarpParseError(e.what(), start);
    }
  }

  const std::string& s_;
  std::size_t i_;
};

}  // namespace

WarpPair parse_warp_pair(const std::string& expr) { return WarpParser(expr).parse(); }

}  // namespace warploss
