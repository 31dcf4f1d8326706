#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace invuq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Values of named variables. Scalars are stored as length-1 vectors.
using Assignment = std::map<std::string, Vector>;

using Rng = std::mt19937_64;

inline Vector scalar_vector(double v) { return Vector::Constant(1, v); }

// splitmix64 finalizer; used to derive independent per-chain streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace invuq
