#include <cmath>
#include <numbers>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "invuq/errors.hpp"
#include "invuq/testproblems.hpp"

using namespace invuq;

namespace {

double sample_std(const Vector& v) { return std::sqrt((v.array() - v.mean()).square().sum() / (v.size() - 1.0)); }

// Anisotropic total variation of a column-stacked N x N image.
double total_variation(const Vector& x, Index N) {
  double tv = 0.0;
  for (Index c = 0; c < N; ++c)
    for (Index r = 0; r < N; ++r) {
      if (r + 1 < N) tv += std::abs(x[c * N + r + 1] - x[c * N + r]);
      if (c + 1 < N) tv += std::abs(x[(c + 1) * N + r] - x[c * N + r]);
    }
  return tv;
}

}  // namespace

TEST(Phantoms, Sinc) {
  const Vector x = sinc_phantom(129);
  EXPECT_DOUBLE_EQ(x[64], 1.0);
  // sinc(5 (t - 1/2)) = sin(pi u) / (pi u) at t = 0.
  const double u = -2.5;
  EXPECT_NEAR(x[0], std::sin(std::numbers::pi * u) / (std::numbers::pi * u), 1e-14);
}

TEST(Phantoms, Square) {
  const Vector x = square_phantom(12);
  EXPECT_EQ(x.sum(), 4.0);
  EXPECT_EQ(x[3], 0.0);
  EXPECT_EQ(x[4], 1.0);
  EXPECT_EQ(x[7], 1.0);
  EXPECT_EQ(x[8], 0.0);
}

TEST(Phantoms, ShapesPiecewiseConstant) {
  const Vector x = shapes_phantom(64);
  EXPECT_EQ(x.size(), 64 * 64);
  EXPECT_EQ(x.minCoeff(), 0.0);
  EXPECT_EQ(x.maxCoeff(), 1.0);
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    EXPECT_TRUE(v == 0.0 || v == 0.6 || v == 0.8 || v == 0.9 || v == 1.0) << v;
  }
}

TEST(Deconvolution1D, Defaults) {
  const auto b = deconvolution_1d();
  EXPECT_EQ(b.model->domain_geometry().describe(), "Continuous1D(128,)");
  EXPECT_TRUE(b.info.exact_data.isApprox(b.model->forward(b.info.exact_solution)));
  EXPECT_NEAR(sample_std(b.y_obs - b.info.exact_data), 0.01, 0.2 * 0.01);
  EXPECT_DOUBLE_EQ(b.info.noise_std, 0.01);
}

TEST(Deconvolution1D, NoiseFreeAndReproducible) {
  const auto b = deconvolution_1d({.noise_std = 0.0});
  EXPECT_EQ(b.y_obs, b.info.exact_data);
  EXPECT_EQ(deconvolution_1d({.seed = 9}).y_obs, deconvolution_1d({.seed = 9}).y_obs);
  EXPECT_NE(deconvolution_1d({.seed = 9}).y_obs, deconvolution_1d({.seed = 10}).y_obs);
}

TEST(Deconvolution1D, Errors) {
  EXPECT_THROW(deconvolution_1d({.phantom = "cookie"}), InvalidArgument);
  EXPECT_THROW(deconvolution_1d({.n = 2}), InvalidArgument);
  EXPECT_THROW(deconvolution_1d({.psf_std = 0.0}), InvalidArgument);
}

TEST(Deconvolution2D, Defaults) {
  const auto b = deconvolution_2d({.N = 32});
  EXPECT_EQ(b.model->domain_geometry().describe(), "Image2D(32, 32)");
  EXPECT_EQ(b.model->domain_dim(), 32 * 32);
  EXPECT_NEAR(b.info.noise_std, 1.0 / std::sqrt(7.716e4), 1e-15);
  EXPECT_NEAR(sample_std(b.y_obs - b.info.exact_data), b.info.noise_std, 0.2 * b.info.noise_std);
  EXPECT_LT(total_variation(b.info.exact_data, 32), total_variation(b.info.exact_solution, 32));
}

TEST(Gravity, PriorAndData) {
  const GravityProblem g = gravity_problem(3);
  const auto& x = g.joint.component("x");
  EXPECT_TRUE(x.mean_vector().isApprox(Vector{{1550.0, 850.0, 950.0}}));
  EXPECT_TRUE(x.variances().isApprox(Vector{{500.0 * 500.0, 300.0 * 300.0, 300.0 * 300.0}}));
  EXPECT_TRUE(g.bundle.info.exact_solution.isApprox(Vector{{1500.0, 800.0, 1000.0}}));
  EXPECT_NEAR(gravity_problem(3, false, 101).bundle.info.exact_data.maxCoeff(), 9.94e-5, 0.01e-5);
  EXPECT_NEAR(sample_std(g.bundle.y_obs - g.bundle.info.exact_data), 1e-6, 0.2e-6);
  const GravityProblem inf = gravity_problem(3, true);
  EXPECT_NEAR(inf.joint.component("x").variances()[1], 900.0, 1e-12);
  EXPECT_EQ(g.posterior().targets(), std::vector<std::string>{"x"});
}

TEST(EightSchools, DataAndTargets) {
  const EightSchools es = eight_schools();
  EXPECT_EQ(es.data.at("y")[0], 28.0);
  EXPECT_EQ(es.sigma[0], 15.0);
  EXPECT_EQ(es.posterior().targets(), (std::vector<std::string>{"u", "t", "x_prime"}));
}

TEST(EightSchools, JointLogpdfByHand) {
  const EightSchools es = eight_schools();
  const Vector xp = Vector::LinSpaced(8, -1.0, 1.0);
  const double u = 3.0, t = 7.0;
  double expect = -0.5 * u * u / 100.0 - 0.5 * std::log(2.0 * std::numbers::pi * 100.0);
  expect += -std::log(t) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::pow(std::log(t) - 5.0, 2);
  expect += -0.5 * xp.squaredNorm() - 4.0 * std::log(2.0 * std::numbers::pi);
  for (Index i = 0; i < 8; ++i) {
    const double x = u + t * xp[i], s = es.sigma[i];
    expect += -0.5 * std::pow(es.data.at("y")[i] - x, 2) / (s * s) - 0.5 * std::log(2.0 * std::numbers::pi * s * s);
  }
  Assignment a{{"u", scalar_vector(u)}, {"t", scalar_vector(t)}, {"x_prime", xp}, {"y", es.data.at("y")}};
  EXPECT_NEAR(es.joint.logpdf(a), expect, 1e-10);
}

TEST(PriorKind, StringRoundTrip) {
  for (auto k : {PriorKind::gaussian, PriorKind::gmrf, PriorKind::lmrf, PriorKind::cmrf})
    EXPECT_EQ(prior_kind_from_string(to_string(k)), k);
  EXPECT_THROW(prior_kind_from_string("tv"), InvalidArgument);
}

TEST(LinearJoint, Components) {
  const auto b = deconvolution_1d({.n = 16});
  EXPECT_EQ(linear_joint(b, {}).variable_names(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(linear_joint(b, {.prior = PriorKind::lmrf, .prior_hyper = true, .noise_hyper = true}).variable_names(),
            (std::vector<std::string>{"x", "d", "y", "s"}));
  EXPECT_DOUBLE_EQ(linear_joint(b, {}).component("x").mrf_parameter(), 50.0);
  EXPECT_THROW(linear_joint(b, {.prior = PriorKind::cmrf, .prior_hyper = true}), InvalidArgument);
  EXPECT_THROW(linear_joint(b, {.prior_parameter = -1.0}), InvalidArgument);
}

TEST(ExportBundle, WritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "invuq_export_bundle";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto b = deconvolution_1d({.n = 16, .seed = 4});
  export_bundle(b, dir);
  for (const char* f : {"data.csv", "exact_solution.csv", "exact_data.csv", "model.csv", "info.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "info.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("seed"), 4);
  std::filesystem::remove_all(dir);
}
