#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "invuq/cli.hpp"
#include "invuq/samplers.hpp"
#include "invuq/testproblems.hpp"

namespace py = pybind11;
using namespace invuq;

namespace {

py::dict bundle_dict(const TestProblemBundle& b) {
  py::dict d;
  d["y_obs"] = b.y_obs;
  d["exact_solution"] = b.info.exact_solution;
  d["exact_data"] = b.info.exact_data;
  d["noise"] = b.info.noise;
  d["noise_std"] = b.info.noise_std;
  d["seed"] = b.info.seed;
  return d;
}

py::dict result_dict(const Posterior& post, const SamplingPlan& plan, const ChainResult& r) {
  py::dict d;
  py::dict samples;
  for (const auto& [name, s] : r.samples.entries()) samples[py::str(name)] = s.draws();
  d["samples"] = samples;
  d["plan"] = plan.describe();
  d["acceptance"] = r.acceptance;
  d["evaluations"] = r.evaluations;
  d["divergences"] = r.divergences;
  d["targets"] = post.targets();
  return d;
}

py::dict sample_with_plan(const Posterior& post, Index N, Index Nb, std::uint64_t seed) {
  const SamplingPlan plan = select_sampler(post);
  RunOptions o;
  o.N = N;
  o.Nb = Nb;
  o.seed = seed;
  ChainResult r;
  {
    py::gil_scoped_release release;
    r = sample_posterior(post, plan, o);
  }
  return result_dict(post, plan, r);
}

SamplerConfig make_config(SamplerKind kind, double scale, double step, double target_accept, bool adapt,
                          std::optional<double> step_size) {
  SamplerConfig c = default_config(kind);
  c.scale = scale;
  c.step = step;
  c.target_accept = target_accept;
  c.adapt = adapt;
  c.step_size = step_size;
  return c;
}

py::dict chain_dict(const Chain& c) {
  py::dict d;
  d["draws"] = c.draws;
  d["acceptance"] = c.acceptance;
  d["evaluations"] = c.evaluations;
  d["divergences"] = c.divergences;
  d["trace"] = c.trace;
  return d;
}

}  // namespace

PYBIND11_MODULE(_invuq, m) {
  m.doc() = "Bayesian inverse problems: priors, samplers and diagnostics";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_TypeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("gmrf_precision", [](Index n, double d, int dims) { return gmrf_precision(n, d, dims).to_dense(); },
        py::arg("n"), py::arg("d"), py::arg("dims") = 1);
  m.def("difference_matrix", [](Index n) { return difference_matrix(n).to_dense(); }, py::arg("n"));
  m.def(
      "cgls",
      [](const Matrix& A, const Vector& b, int max_iter, double tol) {
        const auto op = MatrixOperator::dense(A);
        const CglsResult r = cgls_solve(op, b, max_iter, tol);
        return py::make_tuple(r.x, r.iterations, r.converged);
      },
      py::arg("A"), py::arg("b"), py::arg("max_iter") = 1000, py::arg("tol") = 1e-6);

  m.def("gaussian_kernel", &gaussian_kernel, py::arg("psf_std"));
  m.def(
      "gravity_forward", [](const Vector& x, Index m) { return gravity_model(m).forward(x); }, py::arg("x"),
      py::arg("m") = 100);
  m.def(
      "gravity_jacobian", [](const Vector& x, Index m) { return gravity_model(m).jacobian(x); }, py::arg("x"),
      py::arg("m") = 100);

  m.def(
      "deconvolution_1d",
      [](Index n, const std::string& phantom, double psf_std, double noise_std, std::uint64_t seed) {
        return bundle_dict(deconvolution_1d({n, phantom, psf_std, noise_std, seed}));
      },
      py::arg("n") = 128, py::arg("phantom") = "sinc", py::arg("psf_std") = 3.0, py::arg("noise_std") = 0.01,
      py::arg("seed") = 0);
  m.def(
      "deconvolution_2d",
      [](Index N, double psf_std, double noise_precision, std::uint64_t seed) {
        return bundle_dict(deconvolution_2d({N, "shapes", psf_std, noise_precision, seed}));
      },
      py::arg("N") = 128, py::arg("psf_std") = 3.0, py::arg("noise_precision") = 7.716e4, py::arg("seed") = 0);

  m.def(
      "sample_deconvolution_1d",
      [](const std::string& prior, bool noise_hyper, bool prior_hyper, Index n, const std::string& phantom, Index N,
         Index Nb, std::uint64_t seed) {
        const auto b = deconvolution_1d({.n = n, .phantom = phantom, .seed = seed});
        LinearProblemSpec spec;
        spec.prior = prior_kind_from_string(prior);
        spec.noise_hyper = noise_hyper;
        spec.prior_hyper = prior_hyper;
        const Posterior post = linear_posterior(b, spec);
        py::dict d = sample_with_plan(post, N, Nb, seed);
        d["problem"] = bundle_dict(b);
        return d;
      },
      py::arg("prior") = "gmrf", py::arg("noise_hyper") = false, py::arg("prior_hyper") = false,
      py::arg("n") = 128, py::arg("phantom") = "sinc", py::arg("N") = 1000, py::arg("Nb") = 100,
      py::arg("seed") = 0);
  m.def(
      "sample_gravity",
      [](bool informative, Index N, Index Nb, std::uint64_t seed) {
        const auto g = gravity_problem(seed, informative);
        const Posterior post = g.posterior();
        return sample_with_plan(post, N, Nb, seed);
      },
      py::arg("informative") = false, py::arg("N") = 1000, py::arg("Nb") = 500, py::arg("seed") = 0);
  m.def(
      "sample_eight_schools",
      [](Index N, Index Nb, std::uint64_t seed) {
        const auto e = eight_schools();
        const Posterior post = e.posterior();
        return sample_with_plan(post, N, Nb, seed);
      },
      py::arg("N") = 1000, py::arg("Nb") = 500, py::arg("seed") = 0);

  auto sampler = [&m](const char* name, SamplerKind kind) {
    m.def(
        name,
        [kind](std::function<double(const Vector&)> logpdf, std::optional<std::function<Vector(const Vector&)>> grad,
               const Vector& x0, Index N, Index Nb, std::uint64_t seed, double scale, double step,
               double target_accept, bool adapt, std::optional<double> step_size) {
          FunctionTarget t(x0.size(), std::move(logpdf), grad ? *grad : FunctionTarget::GradientFn{});
          Rng rng(seed);
          const SamplerConfig cfg = make_config(kind, scale, step, target_accept, adapt, step_size);
          auto k = make_kernel(cfg, std::shared_ptr<const Target>(std::shared_ptr<const Target>{}, &t));
          return chain_dict(run_kernel(*k, x0, N, Nb, rng, cfg.adapt));
        },
        py::arg("logpdf"), py::arg("gradient") = py::none(), py::arg("x0"), py::arg("N") = 1000,
        py::arg("Nb") = 0, py::arg("seed") = 0, py::arg("scale") = 1.0, py::arg("step") = 0.1,
        py::arg("target_accept") = 0.8, py::arg("adapt") = true, py::arg("step_size") = py::none());
  };
  sampler("mh", SamplerKind::MH);
  sampler("cwmh", SamplerKind::CWMH);
  sampler("ula", SamplerKind::ULA);
  sampler("mala", SamplerKind::MALA);
  sampler("nuts", SamplerKind::NUTS);

  m.def("autocorrelation", &autocorrelation, py::arg("chain"), py::arg("max_lag"));
  m.def("iact", py::overload_cast<const Vector&>(&iact), py::arg("chain"));
  m.def("ess", py::overload_cast<const Vector&>(&ess), py::arg("chain"));
  m.def("rhat", &rhat, py::arg("chains"));
  m.def("quantile", &quantile, py::arg("values"), py::arg("q"));

  m.def(
      "cli_run",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::string> out,
         std::optional<int> chains) {
        cli::Overrides o;
        o.seed = seed;
        if (out) o.out = *out;
        o.chains = chains;
        std::ostringstream so, se;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(config, o, so, se);
        }
        return py::make_tuple(code, so.str(), se.str());
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(), py::arg("chains") = py::none());
}
