#pragma once

#include <cstdint>
#include <limits>
#include <filesystem>
#include <memory>
#include <string>

#include "invuq/distributions.hpp"
#include "invuq/inference.hpp"
#include "invuq/models.hpp"

namespace invuq {

struct ProblemInfo {
  Vector exact_solution;
  Vector exact_data;
  std::string noise;  // e.g. "Gaussian(0, 0.01^2 I)"
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Forward model, observed data and the truth used to generate it.
struct TestProblemBundle {
  std::shared_ptr<const ForwardModel> model;
  Vector y_obs;
  ProblemInfo info;
};

/// sinc(5(t - 1/2)) on an equispaced grid of [0, 1].
Vector sinc_phantom(Index n);
/// 1 on the middle third, 0 elsewhere.
Vector square_phantom(Index n);
/// Three rectangles and a disc on zero background, N x N, column-stacked.
Vector shapes_phantom(Index N);

struct Deconvolution1DOptions {
  Index n = 128;
  std::string phantom = "sinc";
  double psf_std = 3.0;
  double noise_std = 0.01;
  std::uint64_t seed = 0;
};
TestProblemBundle deconvolution_1d(const Deconvolution1DOptions& opts = {});

struct Deconvolution2DOptions {
  Index N = 128;
  std::string phantom = "shapes";
  double psf_std = 3.0;
  double noise_precision = 7.716e4;
  std::uint64_t seed = 0;
};
TestProblemBundle deconvolution_2d(const Deconvolution2DOptions& opts = {});

struct GravityProblem {
  TestProblemBundle bundle;
  JointDistribution joint;
  Posterior posterior() const;
};
/// Buried sphere, truth (z, rho, r) = (1500, 800, 1000); `informative` narrows
/// the density-contrast prior std to 30.
GravityProblem gravity_problem(std::uint64_t seed = 0, bool informative = false, Index m = 100);

struct EightSchools {
  JointDistribution joint;
  Assignment data;
  Vector sigma;
  Posterior posterior() const;
};
/// Centered hierarchy u, t, x' with x = u + t x' and y ~ Gaussian(x, diag(sigma^2)).
EightSchools eight_schools();

enum class PriorKind { gaussian, gmrf, lmrf, cmrf };
PriorKind prior_kind_from_string(const std::string& s);
std::string to_string(PriorKind k);

struct LinearProblemSpec {
  PriorKind prior = PriorKind::gmrf;
  /// GMRF precision, LMRF/CMRF scale, or Gaussian std. NaN picks 50, 0.01, 0.01 or 1.
  double prior_parameter = std::numeric_limits<double>::quiet_NaN();
  /// Gamma(1, 1e-4) on the prior precision-type parameter d.
  bool prior_hyper = false;
  /// Gamma(1, 1e-4) on the noise precision s.
  bool noise_hyper = false;
};

/// Joint over x, y (and s, d when requested) on a linear bundle.
JointDistribution linear_joint(const TestProblemBundle& b, const LinearProblemSpec& spec);
Posterior linear_posterior(const TestProblemBundle& b, const LinearProblemSpec& spec);

/// Writes data.csv, info.json and, for moderate sizes, model.csv into `dir`.
void export_bundle(const TestProblemBundle& b, const std::filesystem::path& dir);

}  // namespace invuq
