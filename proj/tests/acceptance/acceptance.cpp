// Acceptance checks; one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "invuq/cli.hpp"
#include "invuq/samplers.hpp"
#include "invuq/testproblems.hpp"

using namespace invuq;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string f(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

Matrix sample_covariance(const Matrix& draws) {
  const Matrix c = draws.rowwise() - draws.colwise().mean();
  return c.transpose() * c / static_cast<double>(draws.rows() - 1);
}

double correlation(const Matrix& draws, Index i, Index j) {
  const Matrix C = sample_covariance(draws);
  return C(i, j) / std::sqrt(C(i, i) * C(j, j));
}

Matrix dense_of(const ForwardModel& m) {
  Matrix A(m.range_dim(), m.domain_dim());
  Vector e = Vector::Zero(m.domain_dim());
  for (Index j = 0; j < A.cols(); ++j) {
    e[j] = 1.0;
    A.col(j) = m.forward(e);
    e[j] = 0.0;
  }
  return A;
}

std::string plan_string(const SamplingPlan& p) { return p.describe(); }

// Central differences of a scalar function.
Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x, double rel_step = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (fn(a) - fn(b)) / (2.0 * h);
  }
  return g;
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// ---------------------------------------------------------------- criteria

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto b = deconvolution_1d({.n = 32, .phantom = "sinc", .noise_std = 0.01, .seed = 11});
  const Posterior post = linear_posterior(b, {.prior = PriorKind::gmrf, .prior_parameter = 50.0});
  const Matrix A = dense_of(*b.model);
  const Matrix L = gmrf_precision(32, 1.0, 1).to_dense();
  const Matrix Qpost = A.transpose() * A / 1e-4 + 50.0 * L;
  const Eigen::LLT<Matrix> llt(Qpost);
  const Vector mu = llt.solve(A.transpose() * b.y_obs / 1e-4);
  const Matrix Sigma = llt.solve(Matrix::Identity(32, 32));

  const SamplingPlan plan = select_sampler(post);
  o.require(plan.entries.size() == 1 && plan.entries[0].kind == SamplerKind::LinearRTO, "plan LinearRTO");
  RunOptions ro;
  ro.N = 5000;
  ro.seed = 2;
  SamplerConfig cfg = default_config(SamplerKind::LinearRTO);
  cfg.cgls_tol = 1e-8;
  ro.configs["x"] = cfg;
  const auto r = sample_posterior(post, plan, ro);
  const Matrix& X = r.samples.at("x").draws();
  const Vector mean = X.colwise().mean().transpose();
  double worst = 0.0;
  for (Index i = 0; i < 32; ++i) worst = std::max(worst, std::abs(mean[i] - mu[i]) / std::sqrt(Sigma(i, i) / 5000.0));
  const double cov_err = (sample_covariance(X) - Sigma).norm() / Sigma.norm();
  o.require(worst < 3.0, "max mean error " + f(worst, 3) + " SE < 3");
  o.require(cov_err < 0.15, "cov rel Frobenius " + f(cov_err, 3) + " < 0.15");
  const double t = seconds_since(t0);
  o.require(t < 60.0, "runtime " + f(t, 3) + " s < 60");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  int inside = 0;
  bool plan_ok = true;
  for (int seed = 0; seed < 20; ++seed) {
    const auto b = deconvolution_1d({.n = 128, .noise_std = 0.01, .seed = static_cast<std::uint64_t>(seed)});
    const Posterior post = linear_posterior(b, {.prior = PriorKind::gmrf, .noise_hyper = true});
    const SamplingPlan plan = select_sampler(post);
    plan_ok = plan_ok && plan_string(plan) == "x: LinearRTO\ns: Conjugate\n";
    RunOptions ro;
    ro.N = 1000;
    ro.Nb = 200;
    ro.seed = static_cast<std::uint64_t>(1000 + seed);
    const auto r = sample_posterior(post, plan, ro);
    const Vector s = r.samples.at("s").chain(0);
    const double lo = quantile(s, 0.005), hi = quantile(s, 0.995);
    if (lo <= 1e4 && 1e4 <= hi) ++inside;
  }
  o.require(plan_ok, "plan Gibbs{x: LinearRTO, s: Conjugate}");
  o.require(inside >= 18, std::to_string(inside) + "/20 CIs contain s=1e4");
  const double t = seconds_since(t0);
  o.require(t < 300.0, "runtime " + f(t, 3) + " s < 300");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  const Index N = 64;
  const double s_true = 7.716e4;
  // Edge pixels differ from a 4-neighbour; flat pixels match every pixel within distance 2.
  const Vector phantom = shapes_phantom(N);
  auto at = [&](Index r, Index c) { return phantom[c * N + r]; };
  std::vector<Index> edge, flat;
  for (Index c = 0; c < N; ++c)
    for (Index r = 0; r < N; ++r) {
      bool is_edge = false, is_flat = true;
      for (Index dc = -2; dc <= 2; ++dc)
        for (Index dr = -2; dr <= 2; ++dr) {
          const Index rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= N || cc < 0 || cc >= N) continue;
          if (at(rr, cc) != at(r, c)) {
            is_flat = false;
            if (std::abs(dr) + std::abs(dc) == 1) is_edge = true;
          }
        }
      if (is_edge) edge.push_back(c * N + r);
      if (is_flat) flat.push_back(c * N + r);
    }

  int completed = 0, inside = 0, edge_wins = 0;
  bool plan_ok = true;
  double edge_sum = 0.0, flat_sum = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto b = deconvolution_2d({.N = N, .noise_precision = s_true, .seed = static_cast<std::uint64_t>(seed)});
    const Posterior post =
        linear_posterior(b, {.prior = PriorKind::lmrf, .prior_hyper = true, .noise_hyper = true});
    const SamplingPlan plan = select_sampler(post);
    plan_ok = plan_ok && plan_string(plan) == "x: UGLA\nd: ConjugateApprox\ns: Conjugate\n";
    RunOptions ro;
    ro.N = 300;
    ro.Nb = 100;
    ro.seed = static_cast<std::uint64_t>(2000 + seed);
    const auto r = sample_posterior(post, plan, ro);
    ++completed;
    const Vector s = r.samples.at("s").chain(0);
    if (quantile(s, 0.005) <= s_true && s_true <= quantile(s, 0.995)) ++inside;
    const Vector sd = r.samples.at("x").std();
    double e = 0.0, fl = 0.0;
    for (Index i : edge) e += sd[i];
    for (Index i : flat) fl += sd[i];
    e /= static_cast<double>(edge.size());
    fl /= static_cast<double>(flat.size());
    edge_sum += e;
    flat_sum += fl;
    if (e > fl) ++edge_wins;
  }
  o.require(plan_ok, "plan Gibbs{x: UGLA, d: ConjugateApprox, s: Conjugate}");
  o.require(completed == 20, "(a) " + std::to_string(completed) + "/20 completed");
  o.require(inside >= 16, "(b) " + std::to_string(inside) + "/20 CIs contain s");
  o.require(edge_wins == 20, "(c) edge std " + f(edge_sum / 20.0, 3) + " > flat std " + f(flat_sum / 20.0, 3) +
                                 " in " + std::to_string(edge_wins) + "/20");
  const double t = seconds_since(t0);
  o.require(t < 900.0, "runtime " + f(t, 3) + " s < 900");
  return o;
}

struct GravityRuns {
  Matrix nuts, mh;
  long nuts_evals = 0, mh_evals = 0;
};

GravityRuns gravity_runs() {
  static GravityRuns cached;
  static bool done = false;
  if (done) return cached;
  const auto g = gravity_problem(5);
  const Posterior post = g.posterior();
  const SamplingPlan plan = select_sampler(post);
  if (plan_string(plan) != "x: NUTS\n") throw std::runtime_error("gravity plan is not NUTS");
  RunOptions ro;
  ro.N = 2000;
  ro.Nb = 500;
  ro.seed = 3;
  const auto rn = sample_posterior(post, plan, ro);
  cached.nuts = rn.samples.at("x").draws();
  cached.nuts_evals = rn.evaluations;

  // MH with the same number of log-density evaluations, 20% of them burn-in.
  SamplingPlan mh;
  mh.entries = {{{"x"}, SamplerKind::MH}};
  RunOptions rm;
  rm.Nb = rn.evaluations / 5;
  rm.N = rn.evaluations - rm.Nb;
  rm.seed = 3;
  const auto r2 = sample_posterior(post, mh, rm);
  cached.mh = r2.samples.at("x").draws();
  cached.mh_evals = r2.evaluations;
  done = true;
  return cached;
}

Outcome criterion4() {
  Outcome o;
  const auto t0 = Clock::now();
  const GravityRuns g = gravity_runs();
  const double rho_r = correlation(g.nuts, 1, 2), z_rho = correlation(g.nuts, 0, 1), z_r = correlation(g.nuts, 0, 2);
  o.require(rho_r < -0.9, "NUTS corr(rho,r) " + f(rho_r, 3) + " < -0.9");
  o.require(std::abs(z_rho) < 0.2, "|corr(z,rho)| " + f(std::abs(z_rho), 3) + " < 0.2");
  o.require(std::abs(z_r) < 0.2, "|corr(z,r)| " + f(std::abs(z_r), 3) + " < 0.2");
  const double mh_rho_r = correlation(g.mh, 1, 2);
  o.require(mh_rho_r < -0.9, "MH corr(rho,r) " + f(mh_rho_r, 3) + " < -0.9 at " + std::to_string(g.mh_evals) +
                                 " vs " + std::to_string(g.nuts_evals) + " evaluations");
  const double t = seconds_since(t0);
  o.require(t < 300.0, "runtime " + f(t, 3) + " s < 300");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const GravityRuns g = gravity_runs();
  const double nuts_rate = ess(Vector(g.nuts.col(1))) / static_cast<double>(g.nuts_evals);
  const double mh_rate = ess(Vector(g.mh.col(1))) / static_cast<double>(g.mh_evals);
  o.require(nuts_rate >= 10.0 * mh_rate, "ESS(rho)/eval NUTS " + f(nuts_rate, 3) + " vs MH " + f(mh_rate, 3) +
                                             " (ratio " + f(nuts_rate / mh_rate, 3) + " >= 10)");

  const auto gi = gravity_problem(5, true);
  const Posterior post = gi.posterior();
  RunOptions ro;
  ro.N = 2000;
  ro.Nb = 500;
  ro.seed = 4;
  const auto r = sample_posterior(post, select_sampler(post), ro);
  const Vector m = r.samples.at("x").mean();
  o.require(std::abs(m[1] - 800.0) <= 60.0, "informative mean rho " + f(m[1], 5) + " in 800+-60");
  o.require(std::abs(m[2] - 1000.0) <= 150.0, "mean r " + f(m[2], 5) + " in 1000+-150");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto es = eight_schools();
  const Posterior post = es.posterior();
  const SamplingPlan plan = select_sampler(post);
  o.require(plan.entries.size() == 1 && plan.entries[0].kind == SamplerKind::NUTS, "joint NUTS plan");
  double u_sum = 0.0, t_sum = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    RunOptions ro;
    ro.N = 1000;
    ro.Nb = 500;
    ro.seed = static_cast<std::uint64_t>(300 + seed);
    SamplerConfig cfg = default_config(SamplerKind::NUTS);
    cfg.target_accept = 0.8;
    ro.configs[plan.entries[0].variables.front()] = cfg;
    const auto r = sample_posterior(post, plan, ro);
    u_sum += r.samples.at("u").mean()[0];
    t_sum += r.samples.at("t").mean()[0];
  }
  o.require(u_sum / 10.0 >= 3.0 && u_sum / 10.0 <= 9.0, "pooled mean(u) " + f(u_sum / 10.0) + " in [3, 9]");
  o.require(t_sum / 10.0 >= 8.0 && t_sum / 10.0 <= 20.0, "pooled mean(t) " + f(t_sum / 10.0) + " in [8, 20]");
  const double t = seconds_since(t0);
  o.require(t < 120.0, "runtime " + f(t, 3) + " s < 120");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const FunctionTarget normal(1, [](const Vector& x) { return -0.5 * x.squaredNorm(); },
                              [](const Vector& x) { return Vector(-x); });
  SamplerConfig cfg;
  cfg.step = 0.1;
  cfg.adapt = false;
  Rng rng(77);
  const Chain ula = ula_sample(normal, cfg, Vector::Zero(1), 1000000, 1000, rng);
  const Vector xu = ula.draws.col(0);
  const double var_ula = (xu.array() - xu.mean()).square().sum() / static_cast<double>(xu.size() - 1);
  const double target = 1.0 / (1.0 - 0.05);
  o.require(std::abs(var_ula / target - 1.0) < 0.05, "ULA variance " + f(var_ula, 5) + " vs " + f(target, 6));

  Rng rng2(78);
  const Chain mala = mala_sample(normal, cfg, Vector::Zero(1), 1000000, 1000, rng2);
  const Vector xm = mala.draws.col(0);
  const double var_mala = (xm.array() - xm.mean()).square().sum() / static_cast<double>(xm.size() - 1);
  // Standard error of the variance estimate from the autocorrelation of x^2.
  const Vector sq = (xm.array() - xm.mean()).square().matrix();
  const double sq_var = (sq.array() - sq.mean()).square().sum() / static_cast<double>(sq.size() - 1);
  const double se = std::sqrt(sq_var * iact(sq) / static_cast<double>(sq.size()));
  o.require(std::abs(var_mala - 1.0) < 3.0 * se,
            "MALA variance " + f(var_mala, 5) + " within 3 SE (" + f(3.0 * se, 3) + ") of 1");
  return o;
}

Outcome criterion8() {
  Outcome o;
  Rng rng(808);
  std::normal_distribution<double> normal;
  const Index n = 100000;
  for (double rho : {0.3, 0.5, 0.9}) {
    Vector x(n);
    x[0] = normal(rng) / std::sqrt(1.0 - rho * rho);
    for (Index i = 1; i < n; ++i) x[i] = rho * x[i - 1] + normal(rng);
    const double tau = iact(x), truth = (1.0 + rho) / (1.0 - rho);
    o.require(std::abs(tau / truth - 1.0) < 0.15, "rho " + f(rho, 2) + " iact " + f(tau, 4) + " vs " + f(truth, 4));
  }
  Vector iid(n);
  for (Index i = 0; i < n; ++i) iid[i] = normal(rng);
  const double ratio = ess(iid) / static_cast<double>(n);
  o.require(ratio >= 0.85 && ratio <= 1.15, "iid ess/N " + f(ratio, 4));

  const Index m = 10000;
  Vector a(m), b(m);
  for (Index i = 0; i < m; ++i) {
    a[i] = normal(rng);
    b[i] = 10.0 + normal(rng);
  }
  const double r_off = rhat({a, b});
  o.require(r_off > 3.0, "offset R-hat " + f(r_off, 4) + " > 3");
  std::vector<Vector> same(4, Vector(m));
  for (auto& c : same)
    for (Index i = 0; i < m; ++i) c[i] = normal(rng);
  const double r_same = rhat(same);
  o.require(r_same < 1.02, "same-distribution R-hat " + f(r_same, 5) + " < 1.02");
  return o;
}

// Total variation between kernel draws and a grid-normalized density, binned.
double tv_against_grid(const std::function<double(double)>& log_density, const std::vector<double>& draws) {
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  // Fine grid spanning the draws generously; the density is integrated per bin.
  const double lo = std::max(0.0, sorted.front() * 0.5), hi = sorted.back() * 1.5;
  const int bins = 100, sub = 200;
  const double width = (hi - lo) / bins;
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(bins * sub));
  for (int k = 0; k < bins * sub; ++k) logs.push_back(log_density(lo + (k + 0.5) * width / sub));
  const double mx = *std::max_element(logs.begin(), logs.end());
  std::vector<double> mass(bins, 0.0);
  double total = 0.0;
  for (int k = 0; k < bins * sub; ++k) {
    const double w = std::exp(logs[static_cast<std::size_t>(k)] - mx);
    mass[static_cast<std::size_t>(k / sub)] += w;
    total += w;
  }
  std::vector<double> hist(bins, 0.0);
  for (double d : draws) {
    const int k = std::clamp(static_cast<int>((d - lo) / width), 0, bins - 1);
    hist[static_cast<std::size_t>(k)] += 1.0;
  }
  double tv = 0.0;
  for (int k = 0; k < bins; ++k)
    tv += std::abs(hist[static_cast<std::size_t>(k)] / static_cast<double>(draws.size()) -
                   mass[static_cast<std::size_t>(k)] / total);
  return 0.5 * tv;
}

Outcome criterion9() {
  Outcome o;
  const int n_draws = 100000;
  {
    // Noise precision s of y ~ Gaussian(x, s^-1 I) with x fixed.
    const Index m = 40;
    Rng rng(9);
    std::normal_distribution<double> normal;
    Vector x(m), y(m);
    for (Index i = 0; i < m; ++i) {
      x[i] = normal(rng);
      y[i] = x[i] + 0.5 * normal(rng);
    }
    const auto xs = Distribution::gaussian("x", Vector(Vector::Zero(m)), 1.0);
    const auto ss = Distribution::gamma("s", 1.0, 1e-4);
    const auto ys = Distribution::gaussian("y", Param::variable("x"), Param::variable("s"), CovTag::prec,
                                             Geometry::continuous_1d(m));
    const Posterior post = JointDistribution({ys, xs, ss}).condition({{"y", y}});
    auto k = make_kernel(default_config(SamplerKind::Conjugate), post, {"s"});
    k->set_context({{"x", x}});
    k->reset(scalar_vector(1.0));
    std::vector<double> draws;
    for (int i = 0; i < n_draws; ++i) {
      k->step(rng, false);
      draws.push_back(k->state()[0]);
    }
    auto log_density = [&](double s) {
      return post.logpdf({{"x", x}, {"s", scalar_vector(s)}});
    };
    const double tv = tv_against_grid(log_density, draws);
    o.require(tv < 0.05, "Gaussian precision TV " + f(tv, 3) + " < 0.05");
  }
  {
    // Inverse scale d of an LMRF prior with x fixed.
    const Index n = 64;
    Rng rng(10);
    std::normal_distribution<double> normal;
    Vector x(n);
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) x[i] = (acc += 0.05 * normal(rng));
    const auto g = Geometry::continuous_1d(n);
    const auto xs = Distribution::lmrf("x", Vector(Vector::Zero(n)), Param::reciprocal("d"), g);
    const auto ds = Distribution::gamma("d", 1.0, 1e-4);
    const auto ys = Distribution::gaussian("y", Param::variable("x"), 1.0, CovTag::cov, g);
    const Posterior post = JointDistribution({ys, xs, ds}).condition({{"y", x}});
    auto k = make_kernel(default_config(SamplerKind::ConjugateApprox), post, {"d"});
    k->set_context({{"x", x}});
    k->reset(scalar_vector(1.0));
    std::vector<double> draws;
    for (int i = 0; i < n_draws; ++i) {
      k->step(rng, false);
      draws.push_back(k->state()[0]);
    }
    auto log_density = [&](double d) {
      return post.logpdf({{"x", x}, {"d", scalar_vector(d)}});
    };
    const double tv = tv_against_grid(log_density, draws);
    o.require(tv < 0.05, "LMRF inverse scale TV " + f(tv, 3) + " < 0.05");
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  Rng rng(1010);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto randn = [&](Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };
  double worst_grav = 0.0, worst_cmrf = 0.0, worst_gmrf = 0.0, worst_gauss = 0.0, worst_es = 0.0;
  const ForwardModel grav = gravity_model(100);
  const auto cmrf = Distribution::cmrf("x", Vector(Vector::Zero(20)), 0.1, Geometry::continuous_1d(20));
  const auto gmrf = Distribution::gmrf("x", Vector(Vector::Zero(20)), 7.0, Geometry::continuous_1d(20));
  const auto gmrf2 = Distribution::gmrf("x", Vector(Vector::Zero(25)), 3.0, Geometry::image_2d(5, 5));
  const auto cmrf2 = Distribution::cmrf("x", Vector(Vector::Zero(25)), 0.2, Geometry::image_2d(5, 5));
  const Vector diag_var = (randn(20).array().abs() + 0.5).matrix();
  const auto gauss = Distribution::gaussian("x", randn(20), diag_var);
  const auto es = eight_schools();
  const Posterior es_post = es.posterior();

  for (int trial = 0; trial < 20; ++trial) {
    // Gravity: Jacobian columns against central differences of each output.
    const Vector p{{1000.0 + 1000.0 * unif(rng), 500.0 + 600.0 * unif(rng), 600.0 + 800.0 * unif(rng)}};
    const Matrix J = grav.jacobian(p);
    Matrix Jfd(J.rows(), 3);
    for (Index i = 0; i < 3; ++i) {
      const double h = 1e-5 * p[i];
      Vector a = p, b = p;
      a[i] += h;
      b[i] -= h;
      Jfd.col(i) = (grav.forward(a) - grav.forward(b)) / (2.0 * h);
    }
    worst_grav = std::max(worst_grav, (J - Jfd).norm() / J.norm());

    const Vector x = randn(20) * 0.3;
    worst_cmrf = std::max(worst_cmrf, rel_err(cmrf.gradient(x), fd_gradient([&](const Vector& v) {
                                                return cmrf.logpdf(v);
                                              }, x)));
    const Vector x2 = randn(25) * 0.3;
    worst_cmrf = std::max(worst_cmrf, rel_err(cmrf2.gradient(x2), fd_gradient([&](const Vector& v) {
                                                 return cmrf2.logpdf(v);
                                               }, x2)));
    worst_gmrf = std::max(worst_gmrf, rel_err(gmrf.gradient(x), fd_gradient([&](const Vector& v) {
                                                return gmrf.logpdf(v);
                                              }, x)));
    worst_gmrf = std::max(worst_gmrf, rel_err(gmrf2.gradient(x2), fd_gradient([&](const Vector& v) {
                                                 return gmrf2.logpdf(v);
                                               }, x2)));
    worst_gauss = std::max(worst_gauss, rel_err(gauss.gradient(x), fd_gradient([&](const Vector& v) {
                                                  return gauss.logpdf(v);
                                                }, x)));

    // Eight Schools joint posterior gradient over (u, t, x').
    Assignment a{{"u", scalar_vector(5.0 * normal(rng))},
                 {"t", scalar_vector(std::exp(1.0 + normal(rng)))},
                 {"x_prime", randn(8)}};
    for (const std::string v : {"u", "t", "x_prime"}) {
      const Vector g = es_post.gradient(v, a);
      const Vector gfd = fd_gradient(
          [&](const Vector& val) {
            Assignment b = a;
            b[v] = val;
            return es_post.logpdf(b);
          },
          a.at(v));
      worst_es = std::max(worst_es, rel_err(g, gfd));
    }
  }
  o.require(worst_grav < 1e-5, "gravity Jacobian " + f(worst_grav, 2));
  o.require(worst_cmrf < 1e-5, "CMRF " + f(worst_cmrf, 2));
  o.require(worst_gmrf < 1e-5, "GMRF " + f(worst_gmrf, 2));
  o.require(worst_gauss < 1e-5, "Gaussian " + f(worst_gauss, 2));
  o.require(worst_es < 1e-5, "Eight Schools " + f(worst_es, 2));

  double worst_ls = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix A(50, 20);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
    const Vector b = randn(50);
    const Vector ref = A.colPivHouseholderQr().solve(b);
    const auto r = cgls_solve(MatrixOperator::dense(A), b, 1000, 1e-14);
    worst_ls = std::max(worst_ls, (r.x - ref).norm() / ref.norm());
  }
  o.require(worst_ls < 1e-8, "CGLS vs dense LS " + f(worst_ls, 2));

  bool exact = true;
  for (Index n : {1, 2, 5, 17, 64}) {
    const Matrix D = difference_matrix(n).to_dense();
    exact = exact && (D.transpose() * D == gmrf_precision(n, 1.0, 1).to_dense());
  }
  o.require(exact, "D^T D = L exact");

  double worst_adj = 0.0;
  const ForwardModel b1 = convolution_model_1d(50, 2.5);
  const ForwardModel b2 = convolution_model_2d(12, 1.5);
  const auto d2 = mrf_difference_operator(36, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x1 = randn(50), y1 = randn(50);
    worst_adj = std::max(worst_adj, std::abs(b1.forward(x1).dot(y1) - x1.dot(b1.adjoint(y1))) /
                                        (b1.forward(x1).norm() * y1.norm()));
    const Vector x2 = randn(144), y2 = randn(144);
    worst_adj = std::max(worst_adj, std::abs(b2.forward(x2).dot(y2) - x2.dot(b2.adjoint(y2))) /
                                        (b2.forward(x2).norm() * y2.norm()));
    const Vector x3 = randn(36), y3 = randn(d2->rows());
    worst_adj = std::max(worst_adj, std::abs(d2->apply(x3).dot(y3) - x3.dot(d2->apply_transpose(y3))) /
                                        (d2->apply(x3).norm() * y3.norm()));
  }
  o.require(worst_adj < 1e-10, "adjoint identity " + f(worst_adj, 2));
  return o;
}

Outcome criterion11() {
  Outcome o;
  const auto b = deconvolution_1d({.n = 128, .phantom = "square", .noise_std = 0.01, .seed = 21});
  struct Result {
    double err, width;
    std::string plan;
  };
  auto run = [&](PriorKind kind) {
    const Posterior post = linear_posterior(b, {.prior = kind});
    const SamplingPlan plan = select_sampler(post);
    RunOptions ro;
    ro.N = 1000;
    ro.Nb = 500;
    ro.seed = 22;
    const auto r = sample_posterior(post, plan, ro);
    const Samples& x = r.samples.at("x");
    const auto [lo, hi] = x.credibility_interval(95.0);
    return Result{(x.mean() - b.info.exact_solution).norm(), (hi - lo).mean(), plan.describe()};
  };
  const Result g = run(PriorKind::gmrf), l = run(PriorKind::lmrf), c = run(PriorKind::cmrf);
  o.require(g.plan == "x: LinearRTO\n" && l.plan == "x: UGLA\n" && c.plan == "x: NUTS\n",
            "plans LinearRTO/UGLA/NUTS");
  o.require(l.err < g.err, "l2 error LMRF " + f(l.err) + " < GMRF " + f(g.err));
  o.require(c.err < g.err, "CMRF " + f(c.err) + " < GMRF");
  o.require(l.width < g.width, "mean CI width LMRF " + f(l.width) + " < GMRF " + f(g.width));
  return o;
}

bool parses_as_csv(const fs::path& p) {
  try {
    read_csv_matrix(p);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

bool parses_as_json(const fs::path& p) {
  std::ifstream in(p);
  try {
    (void)nlohmann::json::parse(in);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

nlohmann::json without_timing(const fs::path& summary) {
  std::ifstream in(summary);
  nlohmann::json j = nlohmann::json::parse(in);
  j.erase("timing");
  return j;
}

Outcome criterion12() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "invuq_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(root / name) << text;
    return root / name;
  };
  std::ostringstream sink;
  auto run = [&](const fs::path& cfg, const fs::path& out) {
    cli::Overrides ov;
    ov.out = out;
    return cli::run(cfg, ov, sink, sink);
  };

  const std::vector<std::pair<std::string, std::string>> configs{
      {"hier", R"({"spec_version": 1, "run_id": "hier",
        "problem": {"builtin": "deconvolution_1d", "n": 64, "noise_hyper": true},
        "N": 300, "Nb": 50, "chains": 2, "seed": 5,
        "outputs": {"statistics": ["mean", "std", "ci", "trace", "violin"]}})"},
      {"es", R"({"spec_version": 1, "run_id": "es", "problem": {"builtin": "eight_schools"},
        "N": 200, "Nb": 100, "chains": 2, "seed": 6, "outputs": {"statistics": ["ci"]}})"},
      {"grav", R"({"spec_version": 1, "run_id": "grav", "problem": {"builtin": "gravity"},
        "sampler": [{"variables": ["x"], "kind": "MH", "scale": 5.0}],
        "N": 500, "Nb": 100, "seed": 7, "outputs": {"statistics": ["trace"]}})"}};
  bool reproducible = true, all_parse = true;
  int files = 0;
  for (const auto& [name, text] : configs) {
    const fs::path cfg = write(name + ".json", text);
    const int c1 = run(cfg, root / (name + "_a"));
    const int c2 = run(cfg, root / (name + "_b"));
    if (c1 != 0 || c2 != 0) {
      o.require(false, name + " run exit codes " + std::to_string(c1) + "," + std::to_string(c2));
      continue;
    }
    reproducible = reproducible && without_timing(root / (name + "_a") / "summary.json") ==
                                       without_timing(root / (name + "_b") / "summary.json");
    std::ostringstream s;
    if (cli::summarize(root / (name + "_a"), s, s) != 0) all_parse = false;
    for (const auto& e : fs::recursive_directory_iterator(root / (name + "_a"))) {
      if (!e.is_regular_file()) continue;
      ++files;
      const auto ext = e.path().extension();
      if (ext == ".csv")
        all_parse = all_parse && parses_as_csv(e.path());
      else if (ext == ".json")
        all_parse = all_parse && parses_as_json(e.path());
      else
        all_parse = false;
    }
  }
  o.require(reproducible, "summary JSON reproduced bit-exactly");
  o.require(all_parse && files > 0, std::to_string(files) + " exported files parse");

  // Fault injection against the exit-code contract.
  struct Case {
    std::string name;
    int expected;
    std::function<int()> action;
  };
  const fs::path good = root / "hier.json";
  std::vector<Case> cases{
      {"malformed JSON", 2, [&] { return run(write("bad1.json", "{\"spec_version\": 1,\n \"N\": }"), root / "f1"); }},
      {"N=0", 2,
       [&] {
         return run(write("bad2.json", R"({"spec_version": 1, "problem": {"builtin": "eight_schools"}, "N": 0})"),
                    root / "f2");
       }},
      {"unknown builtin", 2,
       [&] { return run(write("bad3.json", R"({"spec_version": 1, "problem": {"builtin": "nope"}})"), root / "f3"); }},
      {"missing config", 2, [&] { return run(root / "does_not_exist.json", root / "f4"); }},
      {"capability", 3,
       [&] {
         return run(write("bad5.json", R"({"spec_version": 1, "problem": {"builtin": "deconvolution_1d", "n": 16},
           "sampler": [{"variables": ["x"], "kind": "UGLA"}], "N": 10})"),
                    root / "f5");
       }},
      {"unwritable output", 1,
       [&] {
         std::ofstream(root / "blocker") << "x";
         return run(good, root / "blocker" / "sub");
       }},
      {"summarize missing dir", 2, [&] { return cli::summarize(root / "nowhere", sink, sink); }},
      {"diag unknown variable", 2, [&] { return cli::diag(root / "hier_a", "zzz", sink, sink); }},
      {"corrupt raw export", 2,
       [&] {
         fs::copy(root / "hier_a", root / "corrupt", fs::copy_options::recursive);
         std::ofstream(root / "corrupt" / "hier-c0.s.raw.csv") << "1,2\n3\n";
         return cli::summarize(root / "corrupt", sink, sink);
       }},
  };
  int ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const int code = c.action();
    if (code == c.expected)
      ++ok;
    else
      bad += " " + c.name + "=" + std::to_string(code);
  }
  o.require(ok == static_cast<int>(cases.size()),
            "exit codes " + std::to_string(ok) + "/" + std::to_string(cases.size()) + bad);
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"linear-Gaussian exactness", criterion1},
      {"hierarchical precision recovery", criterion2},
      {"2D hierarchical pipeline", criterion3},
      {"gravity correlations", criterion4},
      {"gravity sampler efficiency", criterion5},
      {"Eight Schools", criterion6},
      {"ULA/MALA bias", criterion7},
      {"diagnostics", criterion8},
      {"conjugate steps", criterion9},
      {"numerical identities", criterion10},
      {"edge-preserving priors", criterion11},
      {"determinism and CLI contract", criterion12},
  };
  for (std::size_t i = 0; i < criteria.size(); ++i)
    if (want(static_cast<int>(i) + 1)) report(static_cast<int>(i) + 1, criteria[i].first, criteria[i].second);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
