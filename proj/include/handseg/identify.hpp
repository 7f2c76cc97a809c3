#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "handseg/geometry.hpp"

namespace handseg {

/// Shifted Maxwell density parameters: displacement d and scale a > 0.
struct MaxwellParams {
  double d = 0.0;
  double a = 1.0;
  friend bool operator==(const MaxwellParams&, const MaxwellParams&) = default;
};

/// sqrt(2/pi) (v-d)^2 / a^3 exp(-(v-d)^2 / (2a^2)) for v >= d, else 0.
double maxwell_pdf(double v, const MaxwellParams& p);
double maxwell_cdf(double v, const MaxwellParams& p);
/// d + a * |N(0, I_3)|, an exact Maxwell draw.
double sample_maxwell(std::mt19937_64& rng, const MaxwellParams& p);

/// Left/right hand model over (x, theta). The right hand is evaluated on the
/// mirrored features (1 - x, pi - theta).
struct LRModel {
  MaxwellParams left_x{-0.05, 0.24};
  MaxwellParams left_theta{-0.63, 0.94};
  MaxwellParams right_x{-0.08, 0.21};
  MaxwellParams right_theta{-0.91, 1.10};
  /// Divide each marginal by its mass on [0, 1] / [0, pi].
  bool renormalize = false;

  void validate() const;
  friend bool operator==(const LRModel&, const LRModel&) = default;
};

enum class HandLabel : std::uint8_t { kLeft = 1, kRight = 2 };

const char* to_string(HandLabel l);

struct Likelihoods {
  double left = 0.0;
  double right = 0.0;
};

Likelihoods likelihoods(const EllipseFeatures& f, const LRModel& model);

/// p_left / p_right; +inf when only p_right vanishes, 1 when both do.
double likelihood_ratio(const EllipseFeatures& f, const LRModel& model);

struct Assignment {
  std::size_t index = 0;  // position in the input
  HandLabel label = HandLabel::kLeft;
  double ratio = 1.0;
};

/// Competitive labelling: at most one left and one right survive. With a
/// single segment the ratio decides on its own (ties: x < 0.5 is left).
/// With two or more, the highest ratio is left and the lowest of the rest
/// is right (ties: smaller x is left); others are discarded. Output is in
/// input order.
std::vector<Assignment> assign_ids(std::span<const EllipseFeatures> segments,
                                   const LRModel& model);

/// Per-segment decision without competition (ratio vs 1 only).
HandLabel label_without_competition(const EllipseFeatures& f,
                                    const LRModel& model);

struct LabeledFeatures {
  EllipseFeatures features;
  HandLabel label = HandLabel::kLeft;
};

struct FitOptions {
  std::size_t min_per_class = 30;
};

/// Maximum-likelihood shifted Maxwell over 1-D data, d searched in
/// [d_lo, min(values)), a in [1e-4, 5].
MaxwellParams fit_maxwell(std::span<const double> values, double d_lo);

/// Fits all four marginals; throws DataError("insufficient data") when a
/// class has fewer than `min_per_class` samples.
LRModel fit_model(std::span<const LabeledFeatures> samples,
                  const FitOptions& options = {});

inline constexpr int kLRModelFormatVersion = 1;
void save_lr_model(const LRModel& model, const std::filesystem::path& path);
LRModel load_lr_model(const std::filesystem::path& path);
std::string lr_model_to_json(const LRModel& model);
LRModel lr_model_from_json(const std::string& text);

}  // namespace handseg
