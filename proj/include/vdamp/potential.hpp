#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vdamp {

using Vec = std::vector<double>;

enum class PotentialKind {
  Quadratic,     // |x|^2 / 2
  PPower,        // |x|^p / p, p > 1
  SignedPower,   // 1D, gradient sign(x)|x|^q with q = 1 + 2/beta
  DoubleWell,    // 1D, (x^2 - 1)^2 / 4
  FlatBottom,    // ((|x| - 1)_+)^2, argmin is the closed unit ball
  Polynomial1D,  // sum_k coeffs[k] x^k
  Zero,
  Custom,
};

const char* to_string(PotentialKind kind) noexcept;

/// Potential G : R^n -> R with locally Lipschitz gradient g = grad G.
///
/// Built-ins dispatch on the kind tag so the integrator's inner loop does not
/// go through std::function. Immutable after construction.
class Potential {
 public:
  using EnergyFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  static Potential quadratic(std::size_t dim = 1);
  static Potential p_power(double p, std::size_t dim = 1);
  static Potential signed_power(double beta);
  static Potential double_well();
  static Potential flat_bottom(std::size_t dim = 1);
  /// Ascending coefficients of G, i.e. G(x) = coeffs[0] + coeffs[1] x + ...
  static Potential polynomial(std::vector<double> coeffs);
  static Potential zero(std::size_t dim = 1);
  static Potential custom(std::size_t dim, EnergyFn energy, GradFn gradient, bool coercive,
                          std::optional<double> min_value, std::string name = "custom");

  /// -G. Not coercive, no known minimum.
  Potential negated() const;

  std::size_t dim() const noexcept { return dim_; }
  PotentialKind kind() const noexcept { return kind_; }
  bool is_negated() const noexcept { return sign_ < 0.0; }
  bool coercive() const noexcept { return coercive_; }
  std::optional<double> min_value() const noexcept { return min_value_; }
  /// p for PPower, beta for SignedPower, 0 otherwise.
  double parameter() const noexcept { return param_; }
  /// Exponent q of the SignedPower gradient.
  double signed_exponent() const noexcept { return 1.0 + 2.0 / param_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const std::string& name() const noexcept { return name_; }

  double energy(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  Vec gradient(std::span<const double> x) const;

  /// Scalar fast paths for 1D potentials.
  double energy1(double x) const;
  double gradient1(double x) const;

 private:
  Potential() = default;
  void check_dim(std::size_t n) const;

  struct CustomFns {
    EnergyFn energy;
    GradFn gradient;
  };

  PotentialKind kind_ = PotentialKind::Zero;
  std::size_t dim_ = 1;
  double param_ = 0.0;
  double sign_ = 1.0;
  bool coercive_ = false;
  std::optional<double> min_value_;
  std::vector<double> coeffs_;   // G coefficients
  std::vector<double> dcoeffs_;  // g coefficients
  std::string name_;
  std::shared_ptr<const CustomFns> custom_;
};

double eval(const Potential& pot, std::span<const double> x);
Vec grad(const Potential& pot, std::span<const double> x);

enum class CriticalKind { LocalMin, LocalMax, Saddle, Degenerate };

const char* to_string(CriticalKind kind) noexcept;

struct CriticalPoint {
  Vec location;
  double value = 0.0;
  CriticalKind kind = CriticalKind::Degenerate;
  /// Strong convexity (concavity) modulus delta = |G''(x*)| / 2 when the
  /// critical point is non-degenerate, else 0.
  double modulus = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// All critical points of a 1D potential in `box` (one interval), by a
/// uniform sign scan over 10^4 cells followed by bisection to 1e-10.
/// Roots where g touches zero without changing sign are reported as
/// Degenerate. Throws UnsupportedError for potentials whose critical set is
/// not finite (FlatBottom, Zero) and for multi-dimensional custom potentials.
std::vector<CriticalPoint> critical_points(const Potential& pot, std::span<const Interval> box);

enum class CertificateValidity { Analytic, Sampled };

struct ConvexityCertificate {
  double theta = 0.0;
  Vec anchor;
  CertificateValidity validity = CertificateValidity::Sampled;
  std::size_t probes = 0;
  std::size_t violations = 0;
  /// Smallest value of theta <g(x), x - z> - (G(x) - G(z)) over the probes.
  double worst_slack = 0.0;
};

/// Checks G(x) - G(z) <= theta <g(x), x - z> at `probes` low-discrepancy
/// points of the ball of `radius` around z. Throws DomainError when
/// |g(z)| > 1e-8 or theta < 0.
ConvexityCertificate check_base_inequality(const Potential& pot, double theta,
                                           std::span<const double> z, std::size_t probes,
                                           double radius, std::uint64_t seed = 0);

struct WindowCheck {
  bool pass = false;
  double worst_slack = 0.0;
};

/// Tests G(y) >= G(x) + (y - x) G'(x) + delta (y - x)^2 on a 200 x 200 grid of
/// the open window (center - eps, center + eps). 1D only.
WindowCheck check_strong_convexity_window(const Potential& pot, double center, double eps,
                                          double delta);

/// Level-set brackets (X1, X2) of a local maximum x*:
/// X1 = sup{x <= x* : G(x) > G(x*)}, X2 = inf{x >= x* : G(x) > G(x*)}.
std::pair<double, double> plateau_interval(const Potential& pot, const CriticalPoint& local_max,
                                           Interval box);

}  // namespace vdamp
