#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "invuq/geometry.hpp"
#include "invuq/types.hpp"

namespace invuq {

struct Provenance {
  std::uint64_t seed = 0;
  std::string sampler;
  Index chain = 0;
};

/// N x dim matrix of draws (one row per draw) with the geometry of the variable.
class Samples {
 public:
  Samples() = default;
  Samples(Matrix draws, Geometry geometry, Provenance provenance = {});

  Index size() const { return draws_.rows(); }
  Index dim() const { return draws_.cols(); }
  const Matrix& draws() const { return draws_; }
  const Geometry& geometry() const { return geometry_; }
  const Provenance& provenance() const { return provenance_; }

  Vector mean() const;
  Vector std() const;  // divisor N - 1
  /// Equal-tailed interval at `level` percent.
  std::pair<Vector, Vector> credibility_interval(double level = 95.0) const;
  Vector iact() const;
  Vector ess() const;

  Samples thin(Index k) const;
  Samples burn(Index k) const;
  /// Single coordinate as a one-dimensional chain.
  Vector chain(Index coordinate) const { return draws_.col(coordinate); }

 private:
  Matrix draws_;
  Geometry geometry_;
  Provenance provenance_;
};

/// Named Samples in insertion order.
class SampleSet {
 public:
  void add(const std::string& name, Samples s);
  bool contains(const std::string& name) const;
  const Samples& at(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Samples>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Samples>> entries_;
};

/// Quantile with linear interpolation between order statistics at position (N-1)q.
double quantile(const Vector& values, double q);
Vector quantiles(const Vector& values, const std::vector<double>& qs);

/// Normalized autocorrelation (biased estimator) for lags 0..max_lag.
Vector autocorrelation(const Vector& chain, Index max_lag);

/// Integrated autocorrelation time with Geyer's initial positive sequence,
/// clamped below at 1/N.
double iact(const Vector& chain);
double ess(const Vector& chain);

/// Split R-hat over chains of equal length.
double rhat(const std::vector<Vector>& chains);

struct ViolinData {
  std::vector<double> percentiles;  // 1, 5, 25, 50, 75, 95, 99
  Vector quantiles;
  Vector grid;
  Vector density;
  double bandwidth = 0.0;
};

/// Quantile summary plus Gaussian KDE (Silverman bandwidth) on `points` grid points.
ViolinData violin(const Vector& chain, Index points = 128);

/// Writes `<run_id>.<variable>.<statistic>.csv` plus a `.json` sidecar into
/// `dir`; statistic is one of mean, std, ci, trace, violin, raw.
std::vector<std::filesystem::path> export_statistic(const Samples& s, const std::string& statistic,
                                                    const std::filesystem::path& dir,
                                                    const std::string& run_id,
                                                    const std::string& variable,
                                                    double ci_level = 95.0);

/// Reads back a raw export.
Samples import_raw(const std::filesystem::path& dir, const std::string& run_id,
                   const std::string& variable);

}  // namespace invuq
