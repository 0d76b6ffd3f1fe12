#include "vdamp/dense_output.hpp"

#include <algorithm>
#include <string>

#include "vdamp/error.hpp"

namespace vdamp {

void DenseOutput::push(double t0, double h, std::span<const double> coeffs) {
  t0_.push_back(t0);
  h_.push_back(h);
  coef_.insert(coef_.end(), coeffs.begin(), coeffs.begin() + 5 * dim_);
}

void DenseOutput::set_final(double t, std::span<const double> y) {
  final_t_ = t;
  final_y_.assign(y.begin(), y.begin() + dim_);
}

void DenseOutput::reserve(std::size_t n) {
  t0_.reserve(n);
  h_.reserve(n);
  coef_.reserve(5 * dim_ * n);
}

void DenseOutput::append(const DenseOutput& other) {
  if (other.dim_ != dim_) throw DomainError("dense output dimension mismatch");
  t0_.insert(t0_.end(), other.t0_.begin(), other.t0_.end());
  h_.insert(h_.end(), other.h_.begin(), other.h_.end());
  coef_.insert(coef_.end(), other.coef_.begin(), other.coef_.end());
  if (!other.final_y_.empty()) {
    final_t_ = other.final_t_;
    final_y_ = other.final_y_;
  }
}

std::size_t DenseOutput::locate(double t) const {
  const auto it = std::upper_bound(t0_.begin(), t0_.end(), t);
  if (it == t0_.begin()) return 0;
  return static_cast<std::size_t>(it - t0_.begin()) - 1;
}

double DenseOutput::eval_in_segment(std::size_t k, double theta, std::size_t i) const noexcept {
  const double* r = coef_.data() + 5 * dim_ * k;
  const double r1 = r[i], r2 = r[dim_ + i], r3 = r[2 * dim_ + i], r4 = r[3 * dim_ + i],
               r5 = r[4 * dim_ + i];
  const double th1 = 1.0 - theta;
  return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
}

double DenseOutput::eval_component(double t, std::size_t i) const {
  if (!(t >= t_begin() && t <= t_end()))
    throw DomainError("dense output requested at t = " + std::to_string(t) + " outside [" +
                      std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  if (t == final_t_) return final_y_[i];
  const std::size_t k = locate(t);
  if (t == t0_[k]) return coef_[5 * dim_ * k + i];
  return eval_in_segment(k, (t - t0_[k]) / h_[k], i);
}

void DenseOutput::eval(double t, std::span<double> y) const {
  if (!(t >= t_begin() && t <= t_end()))
    throw DomainError("dense output requested at t = " + std::to_string(t) + " outside [" +
                      std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  if (t == final_t_) {
    std::copy(final_y_.begin(), final_y_.end(), y.begin());
    return;
  }
  const std::size_t k = locate(t);
  const double theta = (t - t0_[k]) / h_[k];
  for (std::size_t i = 0; i < dim_; ++i)
    y[i] = (t == t0_[k]) ? coef_[5 * dim_ * k + i] : eval_in_segment(k, theta, i);
}

}  // namespace vdamp
