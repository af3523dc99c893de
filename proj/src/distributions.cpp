#include "shillsim/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "shillsim/errors.hpp"

namespace shillsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// Beyond this many standard deviations erfc() is close to underflow and the
// asymptotic tail series takes over.
constexpr double kTailSwitch = 37.0;

double upper_tail(double z) { return 0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0); }

}  // namespace

double normal_cdf(double z) { return upper_tail(-z); }

double log_normal_upper_tail(double z) {
  if (z == kInf) return -kInf;
  if (z < kTailSwitch) return std::log(upper_tail(z));
  // Q(z) ~ phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
  const double inv2 = 1.0 / (z * z);
  const double series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
  return -0.5 * z * z - std::log(z) - kLogSqrt2Pi + std::log(series);
}

double log_normal_interval_mass(double a, double b) {
  if (!(a < b)) throw InvalidArgument("log_normal_interval_mass: require a < b");
  if (a >= 0.0) {
    const double la = log_normal_upper_tail(a);
    const double lb = log_normal_upper_tail(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) return log_normal_interval_mass(-b, -a);
  return std::log1p(-(upper_tail(-a) + upper_tail(b)));
}

double normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) throw InvalidArgument("normal_quantile: p outside [0, 1]");
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }

  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

// ---------------------------------------------------------------------------

Uniform::Uniform(double low, double high) : low_(low), high_(high) {
  if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
    throw InvalidArgument("Uniform: invalid range [" + std::to_string(low) + ", " + std::to_string(high) + ")");
  }
  log_width_ = std::log(high - low);
}

double Uniform::sample(Rng& rng) const {
  const double x = low_ + (high_ - low_) * rng.uniform01();
  return x < high_ ? x : std::nextafter(high_, low_);
}

double Uniform::log_pdf(double x) const { return (x >= low_ && x <= high_) ? -log_width_ : -kInf; }

double Uniform::cdf(double x) const { return std::clamp((x - low_) / (high_ - low_), 0.0, 1.0); }

Bernoulli::Bernoulli(double p) : p_(p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) throw InvalidArgument("Bernoulli: p outside [0, 1]");
}

int Bernoulli::sample(Rng& rng) const { return rng.uniform01() < p_ ? 1 : 0; }

double Bernoulli::log_pmf(int x) const {
  if (x == 1) return std::log(p_);
  if (x == 0) return std::log1p(-p_);
  return -kInf;
}

// ---------------------------------------------------------------------------

TruncatedNormal::TruncatedNormal(const TruncatedNormalParams& params) : params_(params) {
  const auto& [mean, std, low, high] = params;
  if (!std::isfinite(mean) || !std::isfinite(std) || !(std > 0.0) || !std::isfinite(low) || !std::isfinite(high) ||
      !(low < high)) {
    throw InvalidArgument("TruncatedNormal: invalid parameters");
  }
  alpha_ = (low - mean) / std;
  beta_ = (high - mean) / std;
  log_mass_ = log_normal_interval_mass(alpha_, beta_);
  log_norm_ = std::log(std) + kLogSqrt2Pi + log_mass_;
}

double TruncatedNormal::log_pdf(double x) const {
  if (std::isnan(x) || x < params_.low || x > params_.high) return -kInf;
  const double z = (x - params_.mean) / params_.std;
  return -0.5 * z * z - log_norm_;
}

double TruncatedNormal::pdf(double x) const { return std::exp(log_pdf(x)); }

double TruncatedNormal::cdf(double x) const {
  if (x <= params_.low) return 0.0;
  if (x >= params_.high) return 1.0;
  const double z = (x - params_.mean) / params_.std;
  if (alpha_ >= 0.0) {
    const double la = log_normal_upper_tail(alpha_);
    return std::expm1(log_normal_upper_tail(z) - la) / std::expm1(log_normal_upper_tail(beta_) - la);
  }
  if (beta_ <= 0.0) {
    // Phi(t) = Q(-t); normalize by the largest term Q(-b).
    const double lb = log_normal_upper_tail(-beta_);
    const double ea = std::exp(log_normal_upper_tail(-alpha_) - lb);
    return (std::exp(log_normal_upper_tail(-z) - lb) - ea) / (1.0 - ea);
  }
  return (normal_cdf(z) - normal_cdf(alpha_)) / std::exp(log_mass_);
}

double TruncatedNormal::sample(Rng& rng) const {
  const double u = rng.uniform01();
  double z;
  if (alpha_ >= 0.0) {
    if (alpha_ >= kTailSwitch) return sample_far_tail(rng);
    const double qa = upper_tail(alpha_);
    const double qb = upper_tail(beta_);
    z = -normal_quantile(qb + u * (qa - qb));
  } else if (beta_ <= 0.0) {
    if (-beta_ >= kTailSwitch) return sample_far_tail(rng);
    const double pa = upper_tail(-alpha_);
    const double pb = upper_tail(-beta_);
    z = normal_quantile(pa + u * (pb - pa));
  } else {
    const double pa = normal_cdf(alpha_);
    const double pb = normal_cdf(beta_);
    z = normal_quantile(pa + u * (pb - pa));
  }
  // Rounding guard only; the quantile already lies in [alpha, beta] in exact arithmetic.
  z = std::clamp(z, alpha_, beta_);
  return std::clamp(params_.mean + params_.std * z, params_.low, params_.high);
}

// Robert (1995) exponential-proposal rejection for windows entirely in a
// far tail. Consumes a variable number of draws.
double TruncatedNormal::sample_far_tail(Rng& rng) const {
  const bool upper = alpha_ >= 0.0;
  const double a = upper ? alpha_ : -beta_;
  const double b = upper ? beta_ : -alpha_;
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log1p(-rng.uniform01()) / rate;
    if (z > b) continue;
    const double d = z - rate;
    if (rng.uniform01() < std::exp(-0.5 * d * d)) {
      const double x = params_.mean + params_.std * (upper ? z : -z);
      return std::clamp(x, params_.low, params_.high);
    }
  }
}

// ---------------------------------------------------------------------------

Categorical::Categorical(std::span<const double> weights) : weights_(weights) {
  if (weights.empty()) throw InvalidArgument("Categorical: empty weights");
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("Categorical: weights must be finite and non-negative");
    total_ += w;
  }
}

std::size_t Categorical::sample(Rng& rng) const {
  if (total_ == 0.0) return static_cast<std::size_t>(rng.below(weights_.size()));
  const double target = rng.uniform01() * total_;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (weights_[j] == 0.0) continue;
    cumulative += weights_[j];
    last_positive = j;
    if (target < cumulative) return j;
  }
  return last_positive;
}

double Categorical::log_pmf(std::size_t index) const {
  if (index >= weights_.size()) return -kInf;
  if (total_ == 0.0) return -std::log(static_cast<double>(weights_.size()));
  if (weights_[index] == 0.0) return -kInf;
  return std::log(weights_[index]) - std::log(total_);
}

// ---------------------------------------------------------------------------

double sample(const Distribution& dist, Rng& rng) {
  return std::visit([&rng](const auto& d) { return static_cast<double>(d.sample(rng)); }, dist);
}

double log_density(const Distribution& dist, double value) {
  return std::visit(
      [value](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Bernoulli>) {
          return value == 0.0 ? d.log_pmf(0) : value == 1.0 ? d.log_pmf(1) : -kInf;
        } else if constexpr (std::is_same_v<D, Categorical>) {
          if (!(value >= 0.0) || value != std::floor(value)) return -kInf;
          return d.log_pmf(static_cast<std::size_t>(value));
        } else {
          return d.log_pdf(value);
        }
      },
      dist);
}

}  // namespace shillsim
