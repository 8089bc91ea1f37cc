#include "chainmetric/means.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "chainmetric/errors.hpp"

namespace chainmetric {
namespace {

// log(s / t) without cancellation when s and t are close.
double log_ratio(double s, double t) {
  const double r = s / t;
  if (r > 0.5 && r < 2.0) return std::log1p((s - t) / t);
  return std::log(s) - std::log(t);
}

double log_mean_value(double s, double t) {
  if (s <= 0.0 || t <= 0.0) return 0.0;
  if (s == t) return s;
  if (s < t) std::swap(s, t);  // bitwise symmetric
  const double m = 0.5 * (s + t);
  const double u = (s - t) / (s + t);
  if (std::abs(u) < 1e-3) {
    // m u / artanh(u) expanded in u^2
    const double u2 = u * u;
    return m * (1.0 - u2 * (1.0 / 3.0 + u2 * (4.0 / 45.0 + u2 * (44.0 / 945.0))));
  }
  return (s - t) / log_ratio(s, t);
}

double log_mean_d1(double s, double t) {
  if (t <= 0.0) return s > 0.0 ? 0.0 : 0.5;
  if (s <= 0.0) return INFINITY;
  if (s == t) return 0.5;
  const double L = log_ratio(s, t);
  if (std::abs(L) < 0.1) {
    // (L - 1 + e^-L) / L^2 = sum_k (-L)^k / (k + 2)!
    double term = 0.5;
    double sum = 0.5;
    for (int k = 1; k <= 10; ++k) {
      term *= -L / (k + 2);
      sum += term;
    }
    return sum;
  }
  return (L - 1.0 + t / s) / (L * L);
}

AxiomCheck make_check(const char* axiom, bool declared) {
  AxiomCheck c;
  c.axiom = axiom;
  c.declared = declared;
  return c;
}

std::string format_number(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

}  // namespace

MeanFunction::MeanFunction(std::string name, Fn2 value, Fn2 d1, MeanProperties properties,
                           std::optional<EntropyFunction> entropy)
    : name_(std::move(name)),
      value_(std::move(value)),
      d1_(std::move(d1)),
      properties_(properties),
      entropy_(std::move(entropy)) {}

double MeanFunction::d1(double s, double t) const {
  if (d1_) return d1_(s, t);
  const double h = 1e-6 * std::max(std::abs(s), 1e-8);
  if (s - h < 0.0) return (value_(s + h, t) - value_(s, t)) / h;
  return (value_(s + h, t) - value_(s - h, t)) / (2.0 * h);
}

MeanFunction logarithmic_mean() {
  MeanProperties props{true, true, true, true, true};
  EntropyFunction ent{
      [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; },
      [](double x) { return 1.0 + std::log(x); },
      [](double x) { return 1.0 / x; },
  };
  return MeanFunction("log", log_mean_value, log_mean_d1, props, ent);
}

MeanFunction power_mean(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidAlpha, "power mean exponent must be positive, got " + format_number(alpha), alpha);
  }
  MeanProperties props;
  props.zero_at_boundary = true;
  props.monotone = true;
  props.doubling = true;
  props.homogeneous = (2.0 * alpha == 1.0);
  props.concave = alpha <= 0.5;
  std::optional<EntropyFunction> ent;
  if (alpha == 1.0) {
    ent = EntropyFunction{
        [](double x) { return -std::log(x); },
        [](double x) { return -1.0 / x; },
        [](double x) { return 1.0 / (x * x); },
    };
  }
  auto value = [alpha](double s, double t) {
    if (s <= 0.0 || t <= 0.0) return 0.0;
    if (s < t) std::swap(s, t);
    return std::pow(s, alpha) * std::pow(t, alpha);
  };
  auto d1 = [alpha](double s, double t) {
    if (t <= 0.0) return 0.0;
    if (s <= 0.0) return alpha < 1.0 ? INFINITY : (alpha == 1.0 ? t : 0.0);
    return alpha * std::pow(s, alpha - 1.0) * std::pow(t, alpha);
  };
  const std::string name = alpha == 0.5 ? "geometric" : "power:" + format_number(alpha);
  return MeanFunction(name, value, d1, props, ent);
}

MeanFunction geometric_mean() { return power_mean(0.5); }

MeanFunction parse_mean(const std::string& spec) {
  if (spec == "log" || spec == "logarithmic") return logarithmic_mean();
  if (spec == "geometric") return geometric_mean();
  const std::string prefix = "power:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string text = spec.substr(prefix.size());
    double alpha = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), alpha);
    if (ec == std::errc() && end == text.data() + text.size() && !text.empty()) return power_mean(alpha);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown mean '" + spec + "' (expected log, geometric or power:<alpha>)");
}

ImproperResult c_theta(const MeanFunction& mean, const TailOptions& options) {
  auto h = [&mean](double u) { return 1.0 / std::sqrt(mean(u, 2.0 - u)); };
  return integrate_gap(h, 1.0, 0.0, options);
}

bool AxiomReport::all_declared_hold() const {
  for (const auto& c : checks) {
    if (c.declared && !c.passed) return false;
  }
  return true;
}

const AxiomCheck* AxiomReport::find(const std::string& axiom) const {
  for (const auto& c : checks) {
    if (c.axiom == axiom) return &c;
  }
  return nullptr;
}

AxiomReport check_axioms(const MeanFunction& mean, int samples, std::uint64_t seed, double box) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&]() {
    // alternate uniform and log-uniform draws on (0, box]
    if (unit(rng) < 0.5) return box * (1.0 - unit(rng));
    return box * std::pow(1e-6, unit(rng));
  };
  const MeanProperties& p = mean.properties();
  AxiomCheck symmetry = make_check("symmetry", true);
  AxiomCheck positivity = make_check("positivity", true);
  AxiomCheck zero = make_check("zero_at_boundary", p.zero_at_boundary);
  AxiomCheck monotone = make_check("monotone", p.monotone);
  AxiomCheck doubling = make_check("doubling", p.doubling);
  AxiomCheck homogeneous = make_check("homogeneous", p.homogeneous);
  AxiomCheck concave = make_check("concave", p.concave);
  AxiomCheck quotient = make_check("difference_quotient", mean.entropy_function().has_value());
  AxiomCheck derivative = make_check("d1", true);

  auto fail = [](AxiomCheck& c, std::vector<double> witness, const std::string& detail) {
    if (!c.passed) return;
    c.passed = false;
    c.witness = std::move(witness);
    c.detail = detail;
  };

  AxiomReport report;
  report.box = box;
  for (int i = 0; i < samples; ++i) {
    const double s = draw();
    const double t = draw();
    const double th = mean(s, t);
    const double scale = std::max(std::abs(th), 1e-300);

    if (std::abs(th - mean(t, s)) > 1e-12 * scale) fail(symmetry, {s, t}, "theta(s,t) != theta(t,s)");
    if (!(th > 0.0)) fail(positivity, {s, t}, "theta(s,t) <= 0");

    const double t0 = i == 0 ? 1.0 : t;
    if (mean(0.0, t0) != 0.0) fail(zero, {0.0, t0}, "theta(0,t) != 0");

    const double r = s * unit(rng);
    if (mean(r, t) > th * (1.0 + 1e-12)) fail(monotone, {r, s, t}, "theta(r,t) > theta(s,t) with r <= s");

    if (2.0 * s <= box && 2.0 * t <= box) {
      const double ratio = mean(2.0 * s, 2.0 * t) / (2.0 * th);
      if (!std::isfinite(ratio)) fail(doubling, {s, t}, "doubling ratio not finite");
      report.doubling_constant = std::max(report.doubling_constant, ratio);
    }

    const double lambda = i == 0 ? 2.0 : 0.1 + 4.0 * unit(rng);
    if (std::abs(mean(lambda * s, lambda * t) - lambda * th) > 1e-10 * lambda * scale) {
      fail(homogeneous, {s, t, lambda}, "theta(l s, l t) != l theta(s, t)");
    }

    const double s2 = draw();
    const double t2 = draw();
    const double mid = mean(0.5 * (s + s2), 0.5 * (t + t2));
    const double avg = 0.5 * (th + mean(s2, t2));
    if (mid < avg - 1e-10 * std::max(avg, 1e-300)) fail(concave, {s, t, s2, t2}, "midpoint concavity fails");

    if (quotient.declared && std::abs(s - t) > 1e-3 * std::max(s, t)) {
      const auto& k = mean.entropy_function()->df;
      const double lhs = th * (k(s) - k(t));
      if (std::abs(lhs - (s - t)) > 1e-10 * std::abs(s - t)) {
        fail(quotient, {s, t}, "theta(s,t)(k(s)-k(t)) != s-t");
      }
    }

    const double h = 1e-5 * s;
    const double fd = (mean(s + h, t) - mean(s - h, t)) / (2.0 * h);
    const double an = mean.d1(s, t);
    if (std::abs(fd - an) > 1e-6 * std::max(std::abs(an), 1e-12 * scale / s)) {
      fail(derivative, {s, t}, "d1 disagrees with central differences");
    }
  }
  {
    std::ostringstream msg;
    msg << "C_d estimate " << report.doubling_constant << " on [0," << box << "]^2";
    doubling.detail = doubling.passed ? msg.str() : doubling.detail;
  }
  report.checks = {symmetry, positivity, zero, monotone, doubling, homogeneous, concave, quotient, derivative};
  return report;
}

}  // namespace chainmetric
