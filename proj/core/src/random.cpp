#include "rwre/random.hpp"

#include <cmath>

#include "rwre/error.hpp"

namespace rwre {

namespace {

// Lanczos approximation, g = 7, n = 9 coefficients.
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double lanczos_lgamma(double x) {
  if (x < 0.5) {
    // Reflection formula.
    return std::log(kPi / std::sin(kPi * x)) - lanczos_lgamma(1.0 - x);
  }
  x -= 1.0;
  double a = kLanczos[0];
  double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i);
  return 0.5 * std::log(2.0 * kPi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

namespace {

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - lanczos_lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lanczos_lgamma(a)) * h;
}

}  // namespace

double reg_lower_gamma(double a, double x) {
  require(a > 0.0 && x >= 0.0, Errc::BadParameter, "reg_lower_gamma needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_icdf(double a, double u) {
  require(a > 0.0, Errc::BadParameter, "gamma_icdf needs a > 0");
  require(u > 0.0 && u < 1.0, Errc::BadParameter, "gamma_icdf needs u in (0,1)");

  // Wilson-Hilferty start, clamped away from zero.
  double z = 0.0;
  {
    // Acklam-style rational approximation for the normal quantile.
    // Accuracy ~1e-9; only used as a Newton starting point.
    static const double a_[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b_[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c_[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d_[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (u < plow) {
      double q = std::sqrt(-2.0 * std::log(u));
      z = (((((c_[0] * q + c_[1]) * q + c_[2]) * q + c_[3]) * q + c_[4]) * q + c_[5]) /
          ((((d_[0] * q + d_[1]) * q + d_[2]) * q + d_[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
      double q = u - 0.5;
      double r = q * q;
      z = (((((a_[0] * r + a_[1]) * r + a_[2]) * r + a_[3]) * r + a_[4]) * r + a_[5]) * q /
          (((((b_[0] * r + b_[1]) * r + b_[2]) * r + b_[3]) * r + b_[4]) * r + 1.0);
    } else {
      double q = std::sqrt(-2.0 * std::log(1.0 - u));
      z = -(((((c_[0] * q + c_[1]) * q + c_[2]) * q + c_[3]) * q + c_[4]) * q + c_[5]) /
          ((((d_[0] * q + d_[1]) * q + d_[2]) * q + d_[3]) * q + 1.0);
    }
  }
  double wh = a * std::pow(1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a)), 3.0);
  double x = wh > 1e-290 ? wh : 1e-290;

  // Newton on P(a,x) - u with a bisection bracket as safety net.
  double lo = 0.0, hi = -1.0;  // hi < 0 means "not yet bracketed above"
  const double lg = lanczos_lgamma(a);
  for (int it = 0; it < 64; ++it) {
    double p = reg_lower_gamma(a, x);
    if (p > u) {
      hi = x;
    } else {
      lo = x;
    }
    double pdf = std::exp((a - 1.0) * std::log(x) - x - lg);
    double dx = pdf > 0.0 ? (p - u) / pdf : 0.0;
    double next = x - dx;
    bool ok = pdf > 0.0 && std::isfinite(next) && next > lo && (hi < 0.0 || next < hi);
    if (!ok) next = (hi < 0.0) ? x * 2.0 : 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::fabs(x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double gamma_draw(double alpha, HashStream& stream) {
  require(alpha > 0.0, Errc::BadParameter, "gamma shape must be positive");
  double k = std::floor(alpha);
  if (k == alpha && k <= 256.0) {
    // Integer shape: sum of unit exponentials with fixed consumption.
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(k); ++i) s += -std::log(stream.next_u01());
    return s;
  }
  return gamma_icdf(alpha, stream.next_u01());
}

void dirichlet_draw(std::span<const double> alpha, HashStream& stream,
                    std::span<double> out) {
  require(alpha.size() == out.size(), Errc::BadParameter, "dirichlet size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma_draw(alpha[i], stream);
    total += out[i];
  }
  require(total > 0.0, Errc::BadParameter, "dirichlet draw degenerate");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= total;
}

}  // namespace rwre
