#include "handseg/identify.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "handseg/error.hpp"

namespace handseg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAMin = 1e-4;
constexpr double kAMax = 5.0;

double marginal(double v, const MaxwellParams& p, bool renormalize, double hi) {
  const double density = maxwell_pdf(v, p);
  if (!renormalize) return density;
  const double mass = maxwell_cdf(hi, p) - maxwell_cdf(0.0, p);
  return mass > 0 ? density / mass : 0.0;
}

void check(const MaxwellParams& p) {
  if (!(p.a > 0.0)) throw ParamError("Maxwell scale a must be > 0");
}

}  // namespace

double maxwell_pdf(double v, const MaxwellParams& p) {
  check(p);
  const double u = v - p.d;
  if (u <= 0.0) return 0.0;
  const double a2 = p.a * p.a;
  return std::sqrt(2.0 / kPi) * (u * u) / (a2 * p.a) * std::exp(-(u * u) / (2.0 * a2));
}

double maxwell_cdf(double v, const MaxwellParams& p) {
  check(p);
  const double u = v - p.d;
  if (u <= 0.0) return 0.0;
  const double z = u / p.a;
  return std::erf(z / std::numbers::sqrt2) -
         std::sqrt(2.0 / kPi) * z * std::exp(-z * z / 2.0);
}

double sample_maxwell(std::mt19937_64& rng, const MaxwellParams& p) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng), y = n(rng), z = n(rng);
  return p.d + p.a * std::sqrt(x * x + y * y + z * z);
}

void LRModel::validate() const {
  check(left_x);
  check(left_theta);
  check(right_x);
  check(right_theta);
}

const char* to_string(HandLabel l) {
  return l == HandLabel::kLeft ? "left" : "right";
}

Likelihoods likelihoods(const EllipseFeatures& f, const LRModel& model) {
  const bool rn = model.renormalize;
  return {marginal(f.x, model.left_x, rn, 1.0) *
              marginal(f.theta, model.left_theta, rn, kPi),
          marginal(1.0 - f.x, model.right_x, rn, 1.0) *
              marginal(kPi - f.theta, model.right_theta, rn, kPi)};
}

double likelihood_ratio(const EllipseFeatures& f, const LRModel& model) {
  const Likelihoods p = likelihoods(f, model);
  if (p.right == 0.0)
    return p.left == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return p.left / p.right;
}

HandLabel label_without_competition(const EllipseFeatures& f,
                                    const LRModel& model) {
  const double r = likelihood_ratio(f, model);
  if (r > 1.0) return HandLabel::kLeft;
  if (r < 1.0) return HandLabel::kRight;
  return f.x < 0.5 ? HandLabel::kLeft : HandLabel::kRight;
}

std::vector<Assignment> assign_ids(std::span<const EllipseFeatures> segments,
                                   const LRModel& model) {
  std::vector<Assignment> out;
  if (segments.empty()) return out;
  std::vector<double> ratio(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    ratio[i] = likelihood_ratio(segments[i], model);

  if (segments.size() == 1) {
    out.push_back({0, label_without_competition(segments[0], model), ratio[0]});
    return out;
  }

  std::size_t best_left = 0;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (ratio[i] > ratio[best_left] ||
        (ratio[i] == ratio[best_left] && segments[i].x < segments[best_left].x))
      best_left = i;
  }
  std::size_t best_right = best_left == 0 ? 1 : 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i == best_left || i == best_right) continue;
    if (ratio[i] < ratio[best_right] ||
        (ratio[i] == ratio[best_right] && segments[i].x > segments[best_right].x))
      best_right = i;
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i == best_left) out.push_back({i, HandLabel::kLeft, ratio[i]});
    if (i == best_right) out.push_back({i, HandLabel::kRight, ratio[i]});
  }
  return out;
}

MaxwellParams fit_maxwell(std::span<const double> values, double d_lo) {
  if (values.empty()) throw DataError("insufficient data");
  const double vmin = *std::min_element(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double d_hi = vmin - 1e-9 * (1.0 + std::abs(vmin));
  if (!(d_hi > d_lo)) throw DataError("data below the displacement search range");

  // With d fixed the ML scale is a^2 = sum u^2 / 3n, which leaves a 1-D
  // profile likelihood in d (constant terms dropped).
  const auto scale_for = [&](double d) {
    double s = 0.0;
    for (double v : values) s += (v - d) * (v - d);
    return std::clamp(std::sqrt(s / (3.0 * n)), kAMin, kAMax);
  };
  const auto neg_loglik = [&](double d) {
    const double a = scale_for(d);
    double ll = 0.0;
    for (double v : values) {
      const double u = v - d;
      ll += 2.0 * std::log(u) - (u * u) / (2.0 * a * a);
    }
    ll -= 3.0 * n * std::log(a);
    return -ll;
  };

  constexpr int kGrid = 400;
  const double h = (d_hi - d_lo) / kGrid;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double v = neg_loglik(d_lo + i * h);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = d_lo + std::max(0, best - 1) * h;
  const double hi = std::min(d_hi, d_lo + (best + 1) * h);
  const auto r = boost::math::tools::brent_find_minima(neg_loglik, lo, hi, 50);
  const double d = r.second <= best_val ? r.first : d_lo + best * h;
  return {d, scale_for(d)};
}

LRModel fit_model(std::span<const LabeledFeatures> samples,
                  const FitOptions& options) {
  std::vector<double> lx, lt, rx, rt;
  for (const LabeledFeatures& s : samples) {
    if (s.label == HandLabel::kLeft) {
      lx.push_back(s.features.x);
      lt.push_back(s.features.theta);
    } else {
      rx.push_back(1.0 - s.features.x);
      rt.push_back(kPi - s.features.theta);
    }
  }
  if (lx.size() < options.min_per_class || rx.size() < options.min_per_class)
    throw DataError("insufficient data");
  LRModel m;
  m.left_x = fit_maxwell(lx, -1.0);
  m.left_theta = fit_maxwell(lt, -kPi);
  m.right_x = fit_maxwell(rx, -1.0);
  m.right_theta = fit_maxwell(rt, -kPi);
  return m;
}

std::string lr_model_to_json(const LRModel& model) {
  const auto pair = [](const MaxwellParams& p) {
    return nlohmann::ordered_json{{"d", p.d}, {"a", p.a}};
  };
  nlohmann::ordered_json j;
  j["format"] = "handseg-lr-model";
  j["version"] = kLRModelFormatVersion;
  j["left"] = {{"x", pair(model.left_x)}, {"theta", pair(model.left_theta)}};
  j["right"] = {{"x", pair(model.right_x)}, {"theta", pair(model.right_theta)}};
  j["renormalize"] = model.renormalize;
  return j.dump(2) + "\n";
}

LRModel lr_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "handseg-lr-model")
      throw DataError("not an L/R model file");
    const int version = j.at("version").get<int>();
    if (version != kLRModelFormatVersion)
      throw DataError("unsupported L/R model version " + std::to_string(version));
    const auto pair = [](const nlohmann::json& p) {
      return MaxwellParams{p.at("d").get<double>(), p.at("a").get<double>()};
    };
    LRModel m;
    m.left_x = pair(j.at("left").at("x"));
    m.left_theta = pair(j.at("left").at("theta"));
    m.right_x = pair(j.at("right").at("x"));
    m.right_theta = pair(j.at("right").at("theta"));
    m.renormalize = j.value("renormalize", false);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed L/R model: ") + e.what());
  } catch (const ParamError& e) {
    throw DataError(std::string("invalid L/R model: ") + e.what());
  }
}

void save_lr_model(const LRModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string());
  out << lr_model_to_json(model);
}

LRModel load_lr_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return lr_model_from_json(ss.str());
}

}  // namespace handseg
