#include "invuq/testproblems.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "invuq/errors.hpp"

namespace invuq {

namespace {

Vector gaussian_noise(Index n, double std, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Vector e(n);
  for (Index i = 0; i < n; ++i) e[i] = std * normal(rng);
  return e;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Vector sinc_phantom(Index n) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    const double u = 5.0 * (t - 0.5);
    x[i] = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
  }
  return x;
}

Vector square_phantom(Index n) {
  Vector x = Vector::Zero(n);
  for (Index i = n / 3; i < n - n / 3; ++i) x[i] = 1.0;
  return x;
}

Vector shapes_phantom(Index N) {
  struct Rect {
    double r0, r1, c0, c1, value;
  };
  // Fractions of the image side; rows then columns.
  const Rect rects[] = {
      {0.10, 0.35, 0.15, 0.45, 0.6},
      {0.55, 0.90, 0.10, 0.30, 0.8},
      {0.60, 0.85, 0.55, 0.85, 1.0},
  };
  const double disc_r = 0.30, disc_c = 0.70, disc_radius = 0.15, disc_value = 0.9;
  Vector x = Vector::Zero(N * N);
  for (Index c = 0; c < N; ++c) {
    for (Index r = 0; r < N; ++r) {
      const double fr = (static_cast<double>(r) + 0.5) / static_cast<double>(N);
      const double fc = (static_cast<double>(c) + 0.5) / static_cast<double>(N);
      double v = 0.0;
      for (const auto& q : rects)
        if (fr >= q.r0 && fr < q.r1 && fc >= q.c0 && fc < q.c1) v = q.value;
      if (std::hypot(fr - disc_r, fc - disc_c) < disc_radius) v = disc_value;
      x[c * N + r] = v;
    }
  }
  return x;
}

TestProblemBundle deconvolution_1d(const Deconvolution1DOptions& o) {
  if (o.n < 4) throw InvalidArgument("deconvolution_1d needs n >= 4");
  if (!(o.noise_std >= 0.0)) throw InvalidArgument("noise_std must be non-negative");
  Vector truth;
  if (o.phantom == "sinc")
    truth = sinc_phantom(o.n);
  else if (o.phantom == "square")
    truth = square_phantom(o.n);
  else
    throw InvalidArgument("unknown phantom '" + o.phantom + "'; options: sinc, square");
  TestProblemBundle b;
  b.model = std::make_shared<const ForwardModel>(convolution_model_1d(o.n, o.psf_std));
  b.info.exact_solution = truth;
  b.info.exact_data = b.model->forward(truth);
  b.info.noise_std = o.noise_std;
  b.info.noise = "Gaussian(0, " + format_double(o.noise_std) + "^2 I)";
  b.info.seed = o.seed;
  b.y_obs = b.info.exact_data;
  if (o.noise_std > 0.0) b.y_obs += gaussian_noise(o.n, o.noise_std, o.seed);
  return b;
}

TestProblemBundle deconvolution_2d(const Deconvolution2DOptions& o) {
  if (o.N < 4) throw InvalidArgument("deconvolution_2d needs N >= 4");
  if (!(o.noise_precision > 0.0)) throw InvalidArgument("noise precision must be positive");
  if (o.phantom != "shapes") throw InvalidArgument("unknown phantom '" + o.phantom + "'; options: shapes");
  TestProblemBundle b;
  b.model = std::make_shared<const ForwardModel>(convolution_model_2d(o.N, o.psf_std));
  b.info.exact_solution = shapes_phantom(o.N);
  b.info.exact_data = b.model->forward(b.info.exact_solution);
  b.info.noise_std = 1.0 / std::sqrt(o.noise_precision);
  b.info.noise = "Gaussian(0, (" + format_double(o.noise_precision) + ")^-1 I)";
  b.info.seed = o.seed;
  b.y_obs = b.info.exact_data + gaussian_noise(o.N * o.N, b.info.noise_std, o.seed);
  return b;
}

Posterior GravityProblem::posterior() const { return joint.condition({{"y", bundle.y_obs}}); }

GravityProblem gravity_problem(std::uint64_t seed, bool informative, Index m) {
  auto model = std::make_shared<const ForwardModel>(gravity_model(m));
  TestProblemBundle b;
  b.model = model;
  b.info.exact_solution = Vector{{1500.0, 800.0, 1000.0}};
  b.info.exact_data = model->forward(b.info.exact_solution);
  b.info.noise_std = 1e-6;
  b.info.noise = "Gaussian(0, (1e-6)^2 I)";
  b.info.seed = seed;
  b.y_obs = b.info.exact_data + gaussian_noise(m, 1e-6, seed);

  const Vector mean{{1550.0, 850.0, 950.0}};
  const double rho_std = informative ? 30.0 : 300.0;
  const Vector variances{{500.0 * 500.0, rho_std * rho_std, 300.0 * 300.0}};
  auto x = Distribution::gaussian("x", mean, variances, CovTag::cov, model->domain_geometry());
  auto y = Distribution::gaussian("y", Param::model(model, "x"), 1e-12, CovTag::cov, model->range_geometry());
  return GravityProblem{std::move(b), JointDistribution({y, x})};
}

Posterior EightSchools::posterior() const { return joint.condition(data); }

EightSchools eight_schools() {
  const Vector y_obs{{28.0, 8.0, -3.0, 7.0, -1.0, 1.0, 18.0, 12.0}};
  const Vector sigma{{15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0}};
  auto u = Distribution::gaussian("u", 0.0, 100.0);
  auto t = Distribution::lognormal("t", 5.0, 1.0);
  auto xp = Distribution::gaussian("x_prime", Vector(Vector::Zero(8)), 1.0);
  DeterministicNode x{
      "x",
      {"u", "t", "x_prime"},
      [](const Assignment& a) { return Vector(a.at("u")[0] + a.at("t")[0] * a.at("x_prime").array()); },
      [](const Assignment& a, const Vector& g) {
        return Assignment{{"u", scalar_vector(g.sum())},
                          {"t", scalar_vector(g.dot(a.at("x_prime")))},
                          {"x_prime", a.at("t")[0] * g}};
      }};
  auto y = Distribution::gaussian("y", Param::variable("x"), Vector(sigma.array().square()));
  return EightSchools{JointDistribution({y, u, t, xp}, {x}), Assignment{{"y", y_obs}}, sigma};
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "gaussian") return PriorKind::gaussian;
  if (s == "gmrf") return PriorKind::gmrf;
  if (s == "lmrf") return PriorKind::lmrf;
  if (s == "cmrf") return PriorKind::cmrf;
  throw InvalidArgument("unknown prior '" + s + "'; options: gaussian, gmrf, lmrf, cmrf");
}

std::string to_string(PriorKind k) {
  switch (k) {
    case PriorKind::gaussian: return "gaussian";
    case PriorKind::gmrf: return "gmrf";
    case PriorKind::lmrf: return "lmrf";
    case PriorKind::cmrf: return "cmrf";
  }
  return "?";
}

JointDistribution linear_joint(const TestProblemBundle& b, const LinearProblemSpec& spec) {
  if (!b.model->is_linear()) throw InvalidArgument("linear_joint needs a linear forward model");
  const Geometry& g = b.model->domain_geometry();
  const Vector zero = Vector::Zero(b.model->domain_dim());
  double p = spec.prior_parameter;
  if (std::isnan(p)) {
    switch (spec.prior) {
      case PriorKind::gmrf: p = 50.0; break;
      case PriorKind::lmrf:
      case PriorKind::cmrf: p = 0.01; break;
      case PriorKind::gaussian: p = 1.0; break;
    }
  }
  if (!(p > 0.0)) throw InvalidArgument("prior parameter must be positive");

  std::vector<Distribution> comps;
  switch (spec.prior) {
    case PriorKind::gaussian:
      comps.push_back(spec.prior_hyper
                          ? Distribution::gaussian("x", zero, Param::variable("d"), CovTag::prec, g)
                          : Distribution::gaussian("x", zero, p * p, CovTag::cov, g));
      break;
    case PriorKind::gmrf:
      comps.push_back(Distribution::gmrf("x", zero, spec.prior_hyper ? Param::variable("d") : Param(p), g));
      break;
    case PriorKind::lmrf:
      comps.push_back(Distribution::lmrf("x", zero, spec.prior_hyper ? Param::reciprocal("d") : Param(p), g));
      break;
    case PriorKind::cmrf:
      if (spec.prior_hyper) throw InvalidArgument("CMRF prior does not support a scale hyperprior");
      comps.push_back(Distribution::cmrf("x", zero, p, g));
      break;
  }
  if (spec.prior_hyper) comps.push_back(Distribution::gamma("d", 1.0, 1e-4));
  const double noise_var = b.info.noise_std * b.info.noise_std;
  if (!spec.noise_hyper && !(noise_var > 0.0)) throw InvalidArgument("noise-free bundle needs a noise hyperprior");
  comps.push_back(spec.noise_hyper
                      ? Distribution::gaussian("y", Param::model(b.model, "x"), Param::variable("s"), CovTag::prec,
                                               b.model->range_geometry())
                      : Distribution::gaussian("y", Param::model(b.model, "x"), noise_var, CovTag::cov,
                                               b.model->range_geometry()));
  if (spec.noise_hyper) comps.push_back(Distribution::gamma("s", 1.0, 1e-4));
  return JointDistribution(std::move(comps));
}

Posterior linear_posterior(const TestProblemBundle& b, const LinearProblemSpec& spec) {
  return linear_joint(b, spec).condition({{"y", b.y_obs}});
}

void export_bundle(const TestProblemBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_csv_matrix(dir / "data.csv", b.y_obs);
  write_csv_matrix(dir / "exact_solution.csv", b.info.exact_solution);
  write_csv_matrix(dir / "exact_data.csv", b.info.exact_data);
  const bool dense = b.model->is_linear() && b.model->domain_dim() * b.model->range_dim() <= 1000000;
  if (dense) {
    Matrix A(b.model->range_dim(), b.model->domain_dim());
    Vector e = Vector::Zero(b.model->domain_dim());
    for (Index j = 0; j < A.cols(); ++j) {
      e[j] = 1.0;
      A.col(j) = b.model->forward(e);
      e[j] = 0.0;
    }
    write_csv_matrix(dir / "model.csv", A);
  }
  nlohmann::json info{{"noise", b.info.noise},
                      {"noise_std", b.info.noise_std},
                      {"seed", b.info.seed},
                      {"domain_geometry", b.model->domain_geometry().to_json()},
                      {"range_geometry", b.model->range_geometry().to_json()},
                      {"model_file", dense ? nlohmann::json("model.csv") : nlohmann::json(nullptr)}};
  std::ofstream out(dir / "info.json");
  if (!out) throw Error("cannot write " + (dir / "info.json").string());
  out << info.dump(2) << '\n';
}

}  // namespace invuq
