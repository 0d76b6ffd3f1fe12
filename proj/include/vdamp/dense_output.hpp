#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vdamp {

/// Piecewise quartic continuous extension of a Dormand-Prince solution.
///
/// Segment k covers [t0_k, t0_k + h_k] and stores five coefficient rows
/// r1..r5 (each `dim` wide) evaluated as
///   y(t0 + theta h) = r1 + theta (r2 + (1-theta) (r3 + theta (r4 + (1-theta) r5))).
/// Evaluation at a segment start returns r1 exactly, and the final state is
/// stored separately so the last sample is also reproduced bit for bit.
class DenseOutput {
 public:
  DenseOutput() = default;
  explicit DenseOutput(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t segments() const noexcept { return t0_.size(); }
  bool empty() const noexcept { return t0_.empty(); }
  double t_begin() const noexcept { return t0_.empty() ? final_t_ : t0_.front(); }
  double t_end() const noexcept { return final_t_; }

  double segment_start(std::size_t k) const noexcept { return t0_[k]; }
  double segment_length(std::size_t k) const noexcept { return h_[k]; }

  void push(double t0, double h, std::span<const double> coeffs);
  void set_final(double t, std::span<const double> y);
  void reserve(std::size_t n);
  /// Appends all segments of `other` (same dimension, starting where this ends).
  void append(const DenseOutput& other);

  /// Index of the segment containing t (clamped to the valid range).
  std::size_t locate(double t) const;

  /// Full state at t. Throws DomainError when t is outside [t_begin, t_end].
  void eval(double t, std::span<double> y) const;
  double eval_component(double t, std::size_t i) const;
  double eval_in_segment(std::size_t k, double theta, std::size_t i) const noexcept;

 private:
  std::size_t dim_ = 0;
  std::vector<double> t0_;
  std::vector<double> h_;
  std::vector<double> coef_;
  std::vector<double> final_y_;
  double final_t_ = 0.0;
};

}  // namespace vdamp
