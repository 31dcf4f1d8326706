#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "invuq/types.hpp"

namespace invuq {

class Geometry;

struct Continuous1D {
  Index n = 0;
  double lo = 0.0;
  double hi = 1.0;
};

struct Continuous2D {
  Index nx = 0;
  Index ny = 0;
};

// Pixel images, stored column-stacked.
struct Image2D {
  Index rows = 0;
  Index cols = 0;
};

struct Discrete {
  std::vector<std::string> labels;
};

// Inner geometry viewed through a pointwise map (e.g. log-parameters).
struct Mapped {
  std::shared_ptr<const Geometry> inner;
  std::function<Vector(const Vector&)> map;
};

// Plot coordinates: grid values, index pairs, or labels depending on the variant.
struct Coordinates {
  std::vector<double> grid;
  std::vector<std::pair<Index, Index>> pixels;
  std::vector<std::string> labels;

  std::size_t size() const { return grid.size() + pixels.size() + labels.size(); }
};

class Geometry {
 public:
  using Variant = std::variant<Continuous1D, Continuous2D, Image2D, Discrete, Mapped>;

  Geometry() : Geometry(Continuous1D{0}) {}
  Geometry(Variant v);

  static Geometry continuous_1d(Index n, double lo = 0.0, double hi = 1.0);
  static Geometry continuous_2d(Index nx, Index ny);
  static Geometry image_2d(Index rows, Index cols);
  static Geometry discrete(std::vector<std::string> labels);
  static Geometry mapped(Geometry inner, std::function<Vector(const Vector&)> map);

  Index par_dim() const;
  Coordinates plot_coordinates() const;

  // Name of the coordinate at flat index i (label, or "name[i]").
  std::string coordinate_label(const std::string& name, Index i) const;

  std::string describe() const;  // "Continuous1D(128,)"
  std::string variant_name() const;
  nlohmann::json to_json() const;
  static Geometry from_json(const nlohmann::json& j);

  const Variant& variant() const { return v_; }
  // Unwraps Mapped layers.
  const Geometry& base() const;

 private:
  Variant v_;
};

}  // namespace invuq
