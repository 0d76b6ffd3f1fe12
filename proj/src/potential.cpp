#include "vdamp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vdamp/error.hpp"
#include "vdamp/rng.hpp"

namespace vdamp {

namespace {

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Bisection down to adjacent doubles; f(lo) and f(hi) have opposite signs.
template <class F>
double bisect(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= tol) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

const char* to_string(PotentialKind kind) noexcept {
  switch (kind) {
    case PotentialKind::Quadratic: return "quadratic";
    case PotentialKind::PPower: return "ppower";
    case PotentialKind::SignedPower: return "signedpower";
    case PotentialKind::DoubleWell: return "doublewell";
    case PotentialKind::FlatBottom: return "flatbottom";
    case PotentialKind::Polynomial1D: return "polynomial";
    case PotentialKind::Zero: return "zero";
    case PotentialKind::Custom: return "custom";
  }
  return "unknown";
}

const char* to_string(CriticalKind kind) noexcept {
  switch (kind) {
    case CriticalKind::LocalMin: return "min";
    case CriticalKind::LocalMax: return "max";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

Potential Potential::quadratic(std::size_t dim) {
  if (dim == 0) throw DomainError("dimension must be >= 1");
  Potential p;
  p.kind_ = PotentialKind::Quadratic;
  p.dim_ = dim;
  p.coercive_ = true;
  p.min_value_ = 0.0;
  p.name_ = "quadratic";
  return p;
}

Potential Potential::p_power(double power, std::size_t dim) {
  if (!(power > 1.0)) throw DomainError("p-power potential needs p > 1");
  if (dim == 0) throw DomainError("dimension must be >= 1");
  Potential p;
  p.kind_ = PotentialKind::PPower;
  p.dim_ = dim;
  p.param_ = power;
  p.coercive_ = true;
  p.min_value_ = 0.0;
  p.name_ = "ppower";
  return p;
}

Potential Potential::signed_power(double beta) {
  if (!(beta > 0.0)) throw DomainError("signed power needs beta > 0");
  Potential p;
  p.kind_ = PotentialKind::SignedPower;
  p.param_ = beta;
  p.coercive_ = true;
  p.min_value_ = 0.0;
  p.name_ = "signedpower";
  return p;
}

Potential Potential::double_well() {
  Potential p;
  p.kind_ = PotentialKind::DoubleWell;
  p.coercive_ = true;
  p.min_value_ = 0.0;
  p.name_ = "doublewell";
  return p;
}

Potential Potential::flat_bottom(std::size_t dim) {
  if (dim == 0) throw DomainError("dimension must be >= 1");
  Potential p;
  p.kind_ = PotentialKind::FlatBottom;
  p.dim_ = dim;
  p.coercive_ = true;
  p.min_value_ = 0.0;
  p.name_ = "flatbottom";
  return p;
}

Potential Potential::polynomial(std::vector<double> coeffs) {
  while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
  if (coeffs.empty()) coeffs.push_back(0.0);
  Potential p;
  p.kind_ = PotentialKind::Polynomial1D;
  p.coeffs_ = coeffs;
  for (std::size_t k = 1; k < coeffs.size(); ++k)
    p.dcoeffs_.push_back(static_cast<double>(k) * coeffs[k]);
  if (p.dcoeffs_.empty()) p.dcoeffs_.push_back(0.0);
  const std::size_t degree = coeffs.size() - 1;
  p.coercive_ = degree >= 2 && degree % 2 == 0 && coeffs.back() > 0.0;
  p.name_ = "polynomial";
  if (p.coercive_) {
    // Cauchy bound on the roots of g.
    const double lead = p.dcoeffs_.back();
    double bound = 0.0;
    for (std::size_t k = 0; k + 1 < p.dcoeffs_.size(); ++k)
      bound = std::max(bound, std::abs(p.dcoeffs_[k] / lead));
    bound += 1.0;
    const Interval box{-bound * 1.01, bound * 1.01};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cp : critical_points(p, std::span<const Interval>(&box, 1)))
      best = std::min(best, cp.value);
    if (std::isfinite(best)) p.min_value_ = best;
  }
  return p;
}

Potential Potential::zero(std::size_t dim) {
  if (dim == 0) throw DomainError("dimension must be >= 1");
  Potential p;
  p.kind_ = PotentialKind::Zero;
  p.dim_ = dim;
  p.min_value_ = 0.0;
  p.name_ = "zero";
  return p;
}

Potential Potential::custom(std::size_t dim, EnergyFn energy, GradFn gradient, bool coercive,
                            std::optional<double> min_value, std::string name) {
  if (dim == 0) throw DomainError("dimension must be >= 1");
  if (!energy || !gradient) throw DomainError("custom potential needs energy and gradient");
  Potential p;
  p.kind_ = PotentialKind::Custom;
  p.dim_ = dim;
  p.coercive_ = coercive;
  p.min_value_ = min_value;
  p.name_ = std::move(name);
  p.custom_ = std::make_shared<const CustomFns>(CustomFns{std::move(energy), std::move(gradient)});
  return p;
}

Potential Potential::negated() const {
  Potential p = *this;
  p.sign_ = -sign_;
  p.coercive_ = false;
  p.min_value_.reset();
  p.name_ = "-" + name_;
  return p;
}

void Potential::check_dim(std::size_t n) const {
  if (n != dim_)
    throw DomainError("dimension mismatch: potential has " + std::to_string(dim_) +
                      " components, got " + std::to_string(n));
}

double Potential::energy1(double x) const {
  double e = 0.0;
  switch (kind_) {
    case PotentialKind::Quadratic: e = 0.5 * x * x; break;
    case PotentialKind::PPower: e = std::pow(std::abs(x), param_) / param_; break;
    case PotentialKind::SignedPower: {
      const double q = signed_exponent();
      e = std::pow(std::abs(x), q + 1.0) / (q + 1.0);
      break;
    }
    case PotentialKind::DoubleWell: {
      const double u = x * x - 1.0;
      e = 0.25 * u * u;
      break;
    }
    case PotentialKind::FlatBottom: {
      const double r = std::abs(x) - 1.0;
      e = r > 0.0 ? r * r : 0.0;
      break;
    }
    case PotentialKind::Polynomial1D: e = horner(coeffs_, x); break;
    case PotentialKind::Zero: e = 0.0; break;
    case PotentialKind::Custom: e = custom_->energy(std::span<const double>(&x, 1)); break;
  }
  return sign_ * e;
}

double Potential::gradient1(double x) const {
  double g = 0.0;
  switch (kind_) {
    case PotentialKind::Quadratic: g = x; break;
    case PotentialKind::PPower: {
      const double r = std::abs(x);
      g = r == 0.0 ? 0.0 : std::pow(r, param_ - 1.0) * (x > 0.0 ? 1.0 : -1.0);
      break;
    }
    case PotentialKind::SignedPower: {
      const double r = std::abs(x);
      g = r == 0.0 ? 0.0 : std::pow(r, signed_exponent()) * (x > 0.0 ? 1.0 : -1.0);
      break;
    }
    case PotentialKind::DoubleWell: g = x * (x * x - 1.0); break;
    case PotentialKind::FlatBottom: {
      const double r = std::abs(x) - 1.0;
      g = r > 0.0 ? 2.0 * r * (x > 0.0 ? 1.0 : -1.0) : 0.0;
      break;
    }
    case PotentialKind::Polynomial1D: g = horner(dcoeffs_, x); break;
    case PotentialKind::Zero: g = 0.0; break;
    case PotentialKind::Custom: {
      double out = 0.0;
      custom_->gradient(std::span<const double>(&x, 1), std::span<double>(&out, 1));
      g = out;
      break;
    }
  }
  return sign_ * g;
}

double Potential::energy(std::span<const double> x) const {
  check_dim(x.size());
  if (dim_ == 1) return energy1(x[0]);
  double e = 0.0;
  switch (kind_) {
    case PotentialKind::Quadratic: {
      const double r = norm(x);
      e = 0.5 * r * r;
      break;
    }
    case PotentialKind::PPower: e = std::pow(norm(x), param_) / param_; break;
    case PotentialKind::FlatBottom: {
      const double r = norm(x) - 1.0;
      e = r > 0.0 ? r * r : 0.0;
      break;
    }
    case PotentialKind::Zero: e = 0.0; break;
    case PotentialKind::Custom: e = custom_->energy(x); break;
    default: throw DomainError("potential kind is one-dimensional");
  }
  return sign_ * e;
}

void Potential::gradient(std::span<const double> x, std::span<double> out) const {
  check_dim(x.size());
  if (out.size() != dim_) throw DomainError("gradient output has wrong dimension");
  if (dim_ == 1) {
    out[0] = gradient1(x[0]);
    return;
  }
  switch (kind_) {
    case PotentialKind::Quadratic:
      for (std::size_t i = 0; i < dim_; ++i) out[i] = x[i];
      break;
    case PotentialKind::PPower: {
      const double r = norm(x);
      const double f = r == 0.0 ? 0.0 : std::pow(r, param_ - 2.0);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = f * x[i];
      break;
    }
    case PotentialKind::FlatBottom: {
      const double r = norm(x);
      const double f = r > 1.0 ? 2.0 * (r - 1.0) / r : 0.0;
      for (std::size_t i = 0; i < dim_; ++i) out[i] = f * x[i];
      break;
    }
    case PotentialKind::Zero: std::fill(out.begin(), out.end(), 0.0); break;
    case PotentialKind::Custom: custom_->gradient(x, out); break;
    default: throw DomainError("potential kind is one-dimensional");
  }
  if (sign_ < 0.0)
    for (double& v : out) v = -v;
}

Vec Potential::gradient(std::span<const double> x) const {
  Vec out(dim_);
  gradient(x, out);
  return out;
}

double eval(const Potential& pot, std::span<const double> x) { return pot.energy(x); }

Vec grad(const Potential& pot, std::span<const double> x) { return pot.gradient(x); }

std::vector<CriticalPoint> critical_points(const Potential& pot, std::span<const Interval> box) {
  const PotentialKind kind = pot.kind();
  if (kind == PotentialKind::FlatBottom || kind == PotentialKind::Zero)
    throw UnsupportedError(std::string("critical set of ") + to_string(kind) +
                           " is not a finite set of points");
  if (box.size() != pot.dim()) throw DomainError("search box has wrong dimension");
  for (const auto& iv : box)
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw DomainError("search box bounds must be finite with lo < hi");

  if (pot.dim() > 1) {
    if (kind == PotentialKind::Quadratic || kind == PotentialKind::PPower) {
      for (const auto& iv : box)
        if (iv.lo > 0.0 || iv.hi < 0.0) return {};
      CriticalPoint cp;
      cp.location.assign(pot.dim(), 0.0);
      cp.value = 0.0;
      const bool neg = pot.is_negated();
      cp.kind = neg ? CriticalKind::LocalMax : CriticalKind::LocalMin;
      cp.modulus = (kind == PotentialKind::Quadratic || pot.parameter() == 2.0) ? 0.5 : 0.0;
      if (cp.modulus == 0.0) cp.kind = CriticalKind::Degenerate;
      return {cp};
    }
    throw UnsupportedError("critical point search is only available in one dimension");
  }

  const double lo = box[0].lo;
  const double hi = box[0].hi;
  constexpr int kCells = 10000;
  const double cell = (hi - lo) / kCells;
  const auto g = [&pot](double x) { return pot.gradient1(x); };

  std::vector<double> xs(kCells + 1), gs(kCells + 1);
  for (int k = 0; k <= kCells; ++k) {
    xs[k] = (k == kCells) ? hi : lo + k * cell;
    gs[k] = g(xs[k]);
  }

  std::vector<double> roots;
  for (int k = 0; k <= kCells; ++k) {
    if (gs[k] == 0.0) {
      roots.push_back(xs[k]);
      continue;
    }
    if (k < kCells && gs[k + 1] != 0.0 && sgn(gs[k]) != sgn(gs[k + 1])) {
      roots.push_back(bisect(g, xs[k], xs[k + 1], 0.0));
      continue;
    }
    // Touching root: local minimum of |g| without a sign change.
    if (k > 0 && k < kCells && sgn(gs[k - 1]) == sgn(gs[k]) && sgn(gs[k]) == sgn(gs[k + 1]) &&
        std::abs(gs[k]) <= std::abs(gs[k - 1]) && std::abs(gs[k]) <= std::abs(gs[k + 1])) {
      double a = xs[k - 1], b = xs[k + 1];
      const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        const double c = b - phi * (b - a);
        const double d = a + phi * (b - a);
        if (std::abs(g(c)) < std::abs(g(d))) b = d;
        else a = c;
      }
      const double x = 0.5 * (a + b);
      if (std::abs(g(x)) <= 1e-12) roots.push_back(x);
    }
  }

  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              roots.end());

  std::vector<CriticalPoint> out;
  for (double r : roots) {
    const double h = std::max(1e-6, 1e-6 * std::abs(r));
    const int left = sgn(g(r - std::min(h, 0.5 * cell)));
    const int right = sgn(g(r + std::min(h, 0.5 * cell)));
    CriticalPoint cp;
    cp.location = {r};
    cp.value = pot.energy1(r);
    if (left < 0 && right > 0) cp.kind = CriticalKind::LocalMin;
    else if (left > 0 && right < 0) cp.kind = CriticalKind::LocalMax;
    else cp.kind = CriticalKind::Degenerate;
    const double hd = 1e-5 * std::max(1.0, std::abs(r));
    const double curvature = (g(r + hd) - g(r - hd)) / (2.0 * hd);
    if (cp.kind != CriticalKind::Degenerate && std::abs(curvature) > 1e-8)
      cp.modulus = 0.5 * std::abs(curvature);
    out.push_back(std::move(cp));
  }
  return out;
}

ConvexityCertificate check_base_inequality(const Potential& pot, double theta,
                                           std::span<const double> z, std::size_t probes,
                                           double radius, std::uint64_t seed) {
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  if (probes == 0) throw DomainError("need at least one probe");
  if (!(radius > 0.0)) throw DomainError("probe radius must be > 0");
  const std::size_t n = pot.dim();
  const Vec gz = pot.gradient(z);
  if (norm(gz) > 1e-8) throw DomainError("anchor z is not a critical point (|g(z)| > 1e-8)");

  ConvexityCertificate cert;
  cert.theta = theta;
  cert.anchor.assign(z.begin(), z.end());
  cert.probes = probes;
  cert.worst_slack = std::numeric_limits<double>::infinity();

  const double gz_val = pot.energy(z);
  HaltonSequence halton(n, seed);
  Vec x(n), g(n), u(n);
  std::size_t done = 0;
  while (done < probes) {
    halton.next(u);
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = 2.0 * u[i] - 1.0;
      r2 += u[i] * u[i];
    }
    if (r2 > 1.0) continue;
    for (std::size_t i = 0; i < n; ++i) x[i] = z[i] + radius * u[i];
    const double gx_val = pot.energy(x);
    pot.gradient(x, g);
    double inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) inner += g[i] * (x[i] - z[i]);
    const double slack = theta * inner - (gx_val - gz_val);
    cert.worst_slack = std::min(cert.worst_slack, slack);
    if (slack < -1e-9 * (1.0 + std::abs(gx_val))) ++cert.violations;
    ++done;
  }

  const bool at_origin = std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });
  if (!pot.is_negated()) {
    switch (pot.kind()) {
      case PotentialKind::Quadratic:
        if (at_origin && theta >= 0.5) cert.validity = CertificateValidity::Analytic;
        break;
      case PotentialKind::PPower:
        if (at_origin && theta >= 1.0 / pot.parameter()) cert.validity = CertificateValidity::Analytic;
        break;
      case PotentialKind::Zero: cert.validity = CertificateValidity::Analytic; break;
      default: break;
    }
  }
  return cert;
}

WindowCheck check_strong_convexity_window(const Potential& pot, double center, double eps,
                                          double delta) {
  if (pot.dim() != 1) throw DomainError("strong convexity window check is 1D only");
  if (!(eps > 0.0) || !(delta > 0.0)) throw DomainError("eps and delta must be > 0");
  constexpr int kGrid = 200;
  std::vector<double> xs(kGrid), gs(kGrid), gv(kGrid);
  double scale = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = center - eps + (i + 0.5) * (2.0 * eps / kGrid);
    gs[i] = pot.energy1(xs[i]);
    gv[i] = pot.gradient1(xs[i]);
    scale = std::max(scale, std::abs(gs[i]));
  }
  WindowCheck out;
  out.worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double d = xs[j] - xs[i];
      const double slack = gs[j] - gs[i] - d * gv[i] - delta * d * d;
      out.worst_slack = std::min(out.worst_slack, slack);
    }
  }
  out.pass = out.worst_slack >= -1e-12 * (1.0 + scale);
  return out;
}

std::pair<double, double> plateau_interval(const Potential& pot, const CriticalPoint& local_max,
                                           Interval box) {
  if (pot.dim() != 1) throw DomainError("plateau interval is 1D only");
  if (!pot.coercive()) throw DomainError("plateau interval needs a coercive potential");
  if (local_max.kind != CriticalKind::LocalMax) throw DomainError("critical point is not a local max");
  const double xs = local_max.location.at(0);
  if (!(box.lo < xs && xs < box.hi)) throw DomainError("local max lies outside the search box");
  const double level = pot.energy1(xs);
  const auto above = [&](double x) { return pot.energy1(x) - level; };

  constexpr int kSteps = 10000;
  const auto find_side = [&](double end) {
    const double step = (end - xs) / kSteps;
    double prev = xs;
    for (int k = 1; k <= kSteps; ++k) {
      const double x = (k == kSteps) ? end : xs + k * step;
      if (above(x) > 0.0) {
        // prev has G <= level (or is x* itself).
        double a = prev, b = x;
        for (int it = 0; it < 200 && std::abs(b - a) > 1e-12; ++it) {
          const double m = 0.5 * (a + b);
          if (above(m) > 0.0) b = m;
          else a = m;
        }
        return 0.5 * (a + b);
      }
      prev = x;
    }
    throw DomainError("no level crossing of G(x*) inside the search box");
  };
  return {find_side(box.lo), find_side(box.hi)};
}

}  // namespace vdamp
