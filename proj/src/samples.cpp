#include "invuq/samples.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "invuq/errors.hpp"
#include "invuq/linalg.hpp"

namespace invuq {

Samples::Samples(Matrix draws, Geometry geometry, Provenance provenance)
    : draws_(std::move(draws)), geometry_(std::move(geometry)), provenance_(std::move(provenance)) {
  if (geometry_.par_dim() != draws_.cols())
    throw DimensionError("Samples: draws columns vs geometry", geometry_.par_dim(), draws_.cols());
}

Vector Samples::mean() const {
  if (size() == 0) throw InvalidArgument("mean of empty Samples");
  return draws_.colwise().mean().transpose();
}

Vector Samples::std() const {
  if (size() < 2) throw InvalidArgument("std needs at least 2 draws");
  const Vector mu = mean();
  Vector out(dim());
  for (Index j = 0; j < dim(); ++j)
    out[j] = std::sqrt((draws_.col(j).array() - mu[j]).square().sum() / static_cast<double>(size() - 1));
  return out;
}

std::pair<Vector, Vector> Samples::credibility_interval(double level) const {
  if (!(level > 0.0 && level < 100.0)) throw InvalidArgument("credibility level must lie in (0, 100)");
  if (size() < 2) throw InvalidArgument("credibility interval needs at least 2 draws");
  const double tail = (1.0 - level / 100.0) / 2.0;
  Vector lo(dim()), hi(dim());
  for (Index j = 0; j < dim(); ++j) {
    const Vector q = quantiles(draws_.col(j), {tail, 1.0 - tail});
    lo[j] = q[0];
    hi[j] = q[1];
  }
  return {lo, hi};
}

Vector Samples::iact() const {
  Vector out(dim());
  for (Index j = 0; j < dim(); ++j) out[j] = invuq::iact(draws_.col(j));
  return out;
}

Vector Samples::ess() const {
  return (static_cast<double>(size()) / iact().array()).matrix();
}

Samples Samples::thin(Index k) const {
  if (k < 1) throw InvalidArgument("thin: k must be at least 1");
  const Index n = (size() + k - 1) / k;
  Matrix out(n, dim());
  for (Index i = 0; i < n; ++i) out.row(i) = draws_.row(i * k);
  return Samples(std::move(out), geometry_, provenance_);
}

Samples Samples::burn(Index k) const {
  if (k < 0 || k >= size()) throw InvalidArgument("burn: k must lie in [0, N)");
  return Samples(draws_.bottomRows(size() - k), geometry_, provenance_);
}

void SampleSet::add(const std::string& name, Samples s) {
  if (contains(name)) throw InvalidArgument("duplicate variable '" + name + "' in SampleSet");
  entries_.emplace_back(name, std::move(s));
}

bool SampleSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const Samples& SampleSet::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw InvalidArgument("no samples for variable '" + name + "'");
}

std::vector<std::string> SampleSet::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

double quantile(const Vector& values, double q) { return quantiles(values, {q})[0]; }

Vector quantiles(const Vector& values, const std::vector<double>& qs) {
  if (values.size() == 0) throw InvalidArgument("quantile of empty vector");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  Vector out(static_cast<Index>(qs.size()));
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (!(qs[i] >= 0.0 && qs[i] <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
    const double pos = static_cast<double>(v.size() - 1) * qs[i];
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out[static_cast<Index>(i)] = v[lo] + frac * (v[hi] - v[lo]);
  }
  return out;
}

namespace {

// Biased autocovariance for all lags via zero-padded FFT.
Vector autocovariance(const Vector& chain) {
  const Index n = chain.size();
  Index m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  const double mu = chain.mean();
  for (Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = chain[i] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& c : spec) c = std::norm(c);
  std::vector<double> back;
  fft.inv(back, spec);
  Vector out(n);
  for (Index k = 0; k < n; ++k) out[k] = back[static_cast<std::size_t>(k)] / static_cast<double>(n);
  return out;
}

}  // namespace

Vector autocorrelation(const Vector& chain, Index max_lag) {
  if (chain.size() < 2) throw InvalidArgument("autocorrelation needs at least 2 draws");
  const Vector acov = autocovariance(chain);
  if (!(acov[0] > 0.0)) throw InvalidArgument("autocorrelation undefined for a zero-variance chain");
  const Index lags = std::min(max_lag + 1, chain.size());
  return acov.head(lags) / acov[0];
}

double iact(const Vector& chain) {
  const Index n = chain.size();
  if (n < 10) throw InvalidArgument("iact needs at least 10 draws");
  const Vector acov = autocovariance(chain);
  if (!(acov[0] > 0.0)) throw InvalidArgument("iact undefined for a zero-variance chain");
  const Vector rho = acov / acov[0];
  double sum = 0.0;  // sum of pair sums Gamma_k = rho(2k) + rho(2k+1)
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho[2 * k] + rho[2 * k + 1];
    if (pair <= 0.0) break;
    sum += pair;
  }
  // tau = 1 + 2 sum_{l>=1} rho(l) = -1 + 2 sum_k Gamma_k
  const double tau = -1.0 + 2.0 * sum;
  return std::max(tau, 1.0 / static_cast<double>(n));
}

double ess(const Vector& chain) { return static_cast<double>(chain.size()) / iact(chain); }

double rhat(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw InvalidArgument("rhat needs at least 2 chains");
  const Index n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw InvalidArgument("rhat: chains have unequal lengths");
  if (n < 4) throw InvalidArgument("rhat: chains must have at least 4 draws");
  const Index half = n / 2;
  std::vector<Vector> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.head(half));
    parts.emplace_back(c.segment(n - half, half));
  }
  const auto m = static_cast<double>(parts.size());
  const auto len = static_cast<double>(half);
  Vector means(static_cast<Index>(parts.size()));
  double w = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    means[static_cast<Index>(i)] = parts[i].mean();
    w += (parts[i].array() - means[static_cast<Index>(i)]).square().sum() / (len - 1.0);
  }
  w /= m;
  const double b = len * (means.array() - means.mean()).square().sum() / (m - 1.0);
  const double v = (len - 1.0) / len * w + b / len;
  if (!(w > 0.0)) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(v / w);
}

ViolinData violin(const Vector& chain, Index points) {
  if (chain.size() < 2) throw InvalidArgument("violin needs at least 2 draws");
  ViolinData out;
  out.percentiles = {1, 5, 25, 50, 75, 95, 99};
  std::vector<double> qs;
  for (double p : out.percentiles) qs.push_back(p / 100.0);
  out.quantiles = quantiles(chain, qs);
  const auto n = static_cast<double>(chain.size());
  const double sd = std::sqrt((chain.array() - chain.mean()).square().sum() / (n - 1.0));
  const Vector iqr_q = quantiles(chain, {0.25, 0.75});
  const double iqr = iqr_q[1] - iqr_q[0];
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  out.bandwidth = spread > 0.0 ? 0.9 * spread * std::pow(n, -0.2) : 0.0;
  const double lo = chain.minCoeff() - 3.0 * out.bandwidth;
  const double hi = chain.maxCoeff() + 3.0 * out.bandwidth;
  out.grid = Vector::LinSpaced(points, lo, hi);
  out.density = Vector::Zero(points);
  if (out.bandwidth > 0.0) {
    const double norm = 1.0 / (n * out.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (Index g = 0; g < points; ++g) {
      const double u0 = out.grid[g];
      out.density[g] = norm * ((chain.array() - u0) / out.bandwidth).square().unaryExpr([](double u) {
        return std::exp(-0.5 * u);
      }).sum();
    }
  }
  return out;
}

namespace {

void write_sidecar(const std::filesystem::path& path, const Samples& s, const std::string& statistic,
                   const std::string& variable, const nlohmann::json& extra) {
  nlohmann::json j = extra;
  j["statistic"] = statistic;
  j["variable"] = variable;
  j["geometry"] = s.geometry().to_json();
  j["provenance"] = {{"seed", s.provenance().seed},
                     {"sampler", s.provenance().sampler},
                     {"chain", s.provenance().chain}};
  j["draws"] = s.size();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> export_statistic(const Samples& s, const std::string& statistic,
                                                    const std::filesystem::path& dir,
                                                    const std::string& run_id,
                                                    const std::string& variable, double ci_level) {
  const std::string stem = run_id + "." + variable + "." + statistic;
  const auto csv = dir / (stem + ".csv");
  const auto sidecar = dir / (stem + ".json");
  nlohmann::json extra = nlohmann::json::object();
  if (statistic == "mean") {
    write_csv_matrix(csv, s.mean());
    extra["columns"] = {"mean"};
  } else if (statistic == "std") {
    write_csv_matrix(csv, s.std());
    extra["columns"] = {"std"};
  } else if (statistic == "ci") {
    const auto [lo, hi] = s.credibility_interval(ci_level);
    Matrix m(s.dim(), 3);
    m.col(0) = lo;
    m.col(1) = s.mean();
    m.col(2) = hi;
    write_csv_matrix(csv, m);
    extra["columns"] = {"lower", "mean", "upper"};
    extra["level"] = ci_level;
  } else if (statistic == "trace") {
    Matrix m(s.size(), s.dim() + 1);
    m.col(0) = Vector::LinSpaced(s.size(), 0.0, static_cast<double>(s.size() - 1));
    m.rightCols(s.dim()) = s.draws();
    write_csv_matrix(csv, m);
    std::vector<std::string> cols{"index"};
    for (Index i = 0; i < s.dim(); ++i) cols.push_back(s.geometry().coordinate_label(variable, i));
    extra["columns"] = cols;
  } else if (statistic == "violin") {
    // One row per coordinate: 7 quantiles, 128 grid points, 128 densities.
    const Index points = 128;
    Matrix m(s.dim(), 7 + 2 * points);
    for (Index j = 0; j < s.dim(); ++j) {
      const ViolinData v = violin(s.chain(j), points);
      m.row(j).head(7) = v.quantiles.transpose();
      m.row(j).segment(7, points) = v.grid.transpose();
      m.row(j).tail(points) = v.density.transpose();
    }
    write_csv_matrix(csv, m);
    extra["percentiles"] = {1, 5, 25, 50, 75, 95, 99};
    extra["grid_points"] = points;
    extra["layout"] = "7 quantiles, grid, density";
  } else if (statistic == "raw") {
    write_csv_matrix(csv, s.draws());
  } else {
    throw InvalidArgument("unknown statistic '" + statistic +
                          "' (expected mean, std, ci, trace, violin or raw)");
  }
  write_sidecar(sidecar, s, statistic, variable, extra);
  return {csv, sidecar};
}

Samples import_raw(const std::filesystem::path& dir, const std::string& run_id,
                   const std::string& variable) {
  const std::string stem = run_id + "." + variable + ".raw";
  const auto csv = dir / (stem + ".csv");
  const auto sidecar = dir / (stem + ".json");
  std::ifstream in(sidecar);
  if (!in) throw Error("missing sidecar " + sidecar.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  Geometry g = Geometry::from_json(j.at("geometry"));
  Provenance p;
  p.seed = j.at("provenance").at("seed").get<std::uint64_t>();
  p.sampler = j.at("provenance").at("sampler").get<std::string>();
  p.chain = j.at("provenance").at("chain").get<Index>();
  Matrix draws = read_csv_matrix(csv);
  if (draws.rows() == 0) draws.resize(0, g.par_dim());
  return Samples(std::move(draws), std::move(g), std::move(p));
}

}  // namespace invuq
