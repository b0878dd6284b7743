#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace ee {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// max-shifted log(sum(exp(v))) over finite and -inf entries
inline double log_sum_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0;
  for (double x : v)
    if (x != kNegInf) s += std::exp(x - m);
  return m + std::log(s);
}

// streaming variant for accumulation without materializing a vector
class LogSum {
 public:
  void add(double x) {
    if (x == kNegInf) return;
    if (x > m_) {
      s_ = s_ * std::exp(m_ - x) + 1.0;
      m_ = x;
    } else {
      s_ += std::exp(x - m_);
    }
  }
  double value() const { return m_ == kNegInf ? kNegInf : m_ + std::log(s_); }
  bool empty() const { return m_ == kNegInf; }

 private:
  double m_ = kNegInf;
  double s_ = 0;
};

}  // namespace ee
