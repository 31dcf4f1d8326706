#include "invuq/geometry.hpp"

#include <set>

#include "invuq/errors.hpp"

namespace invuq {

Geometry::Geometry(Variant v) : v_(std::move(v)) {
  if (const auto* d = std::get_if<Discrete>(&v_)) {
    std::set<std::string> seen;
    for (const auto& l : d->labels)
      if (!seen.insert(l).second) throw InvalidArgument("Discrete geometry: duplicate label '" + l + "'");
  }
  if (const auto* m = std::get_if<Mapped>(&v_)) {
    if (!m->inner) throw InvalidArgument("Mapped geometry needs an inner geometry");
  }
}

Geometry Geometry::continuous_1d(Index n, double lo, double hi) {
  if (n < 0) throw InvalidArgument("Continuous1D: negative size");
  if (!(hi > lo) && n > 1) throw InvalidArgument("Continuous1D: interval must have hi > lo");
  return Geometry(Continuous1D{n, lo, hi});
}

Geometry Geometry::continuous_2d(Index nx, Index ny) { return Geometry(Continuous2D{nx, ny}); }

Geometry Geometry::image_2d(Index rows, Index cols) { return Geometry(Image2D{rows, cols}); }

Geometry Geometry::discrete(std::vector<std::string> labels) {
  return Geometry(Discrete{std::move(labels)});
}

Geometry Geometry::mapped(Geometry inner, std::function<Vector(const Vector&)> map) {
  return Geometry(Mapped{std::make_shared<const Geometry>(std::move(inner)), std::move(map)});
}

Index Geometry::par_dim() const {
  struct {
    Index operator()(const Continuous1D& g) const { return g.n; }
    Index operator()(const Continuous2D& g) const { return g.nx * g.ny; }
    Index operator()(const Image2D& g) const { return g.rows * g.cols; }
    Index operator()(const Discrete& g) const { return static_cast<Index>(g.labels.size()); }
    Index operator()(const Mapped& g) const { return g.inner->par_dim(); }
  } visitor;
  return std::visit(visitor, v_);
}

const Geometry& Geometry::base() const {
  if (const auto* m = std::get_if<Mapped>(&v_)) return m->inner->base();
  return *this;
}

Coordinates Geometry::plot_coordinates() const {
  Coordinates c;
  const Geometry& g = base();
  if (const auto* v = std::get_if<Continuous1D>(&g.v_)) {
    for (Index i = 0; i < v->n; ++i)
      c.grid.push_back(v->n == 1 ? v->lo : v->lo + (v->hi - v->lo) * static_cast<double>(i) / static_cast<double>(v->n - 1));
  } else if (const auto* v = std::get_if<Image2D>(&g.v_)) {
    for (Index col = 0; col < v->cols; ++col)
      for (Index r = 0; r < v->rows; ++r) c.pixels.emplace_back(r, col);
  } else if (const auto* v = std::get_if<Continuous2D>(&g.v_)) {
    for (Index col = 0; col < v->ny; ++col)
      for (Index r = 0; r < v->nx; ++r) c.pixels.emplace_back(r, col);
  } else if (const auto* v = std::get_if<Discrete>(&g.v_)) {
    c.labels = v->labels;
  }
  return c;
}

std::string Geometry::coordinate_label(const std::string& name, Index i) const {
  if (const auto* d = std::get_if<Discrete>(&base().v_)) return d->labels.at(static_cast<std::size_t>(i));
  return name + "[" + std::to_string(i) + "]";
}

std::string Geometry::variant_name() const {
  struct {
    std::string operator()(const Continuous1D&) const { return "Continuous1D"; }
    std::string operator()(const Continuous2D&) const { return "Continuous2D"; }
    std::string operator()(const Image2D&) const { return "Image2D"; }
    std::string operator()(const Discrete&) const { return "Discrete"; }
    std::string operator()(const Mapped&) const { return "Mapped"; }
  } visitor;
  return std::visit(visitor, v_);
}

std::string Geometry::describe() const {
  if (const auto* v = std::get_if<Continuous1D>(&v_)) return "Continuous1D(" + std::to_string(v->n) + ",)";
  if (const auto* v = std::get_if<Continuous2D>(&v_))
    return "Continuous2D(" + std::to_string(v->nx) + ", " + std::to_string(v->ny) + ")";
  if (const auto* v = std::get_if<Image2D>(&v_))
    return "Image2D(" + std::to_string(v->rows) + ", " + std::to_string(v->cols) + ")";
  if (const auto* v = std::get_if<Discrete>(&v_)) {
    std::string s = "Discrete([";
    for (std::size_t i = 0; i < v->labels.size(); ++i) s += (i ? ", '" : "'") + v->labels[i] + "'";
    return s + "])";
  }
  return "Mapped(" + std::get<Mapped>(v_).inner->describe() + ")";
}

nlohmann::json Geometry::to_json() const {
  nlohmann::json j;
  j["variant"] = variant_name();
  j["par_dim"] = par_dim();
  if (const auto* v = std::get_if<Continuous1D>(&v_)) {
    j["shape"] = {v->n};
    j["interval"] = {v->lo, v->hi};
  } else if (const auto* v = std::get_if<Continuous2D>(&v_)) {
    j["shape"] = {v->nx, v->ny};
  } else if (const auto* v = std::get_if<Image2D>(&v_)) {
    j["shape"] = {v->rows, v->cols};
  } else if (const auto* v = std::get_if<Discrete>(&v_)) {
    j["shape"] = {static_cast<Index>(v->labels.size())};
    j["labels"] = v->labels;
  } else {
    j["inner"] = std::get<Mapped>(v_).inner->to_json();
  }
  return j;
}

Geometry Geometry::from_json(const nlohmann::json& j) {
  const std::string v = j.at("variant").get<std::string>();
  if (v == "Continuous1D") {
    double lo = 0.0, hi = 1.0;
    if (j.contains("interval")) {
      lo = j["interval"][0].get<double>();
      hi = j["interval"][1].get<double>();
    }
    return continuous_1d(j.at("shape")[0].get<Index>(), lo, hi);
  }
  if (v == "Continuous2D") return continuous_2d(j.at("shape")[0].get<Index>(), j.at("shape")[1].get<Index>());
  if (v == "Image2D") return image_2d(j.at("shape")[0].get<Index>(), j.at("shape")[1].get<Index>());
  if (v == "Discrete") return discrete(j.at("labels").get<std::vector<std::string>>());
  if (v == "Mapped") {
    // The map itself is not serializable; restore as identity over the inner geometry.
    return mapped(from_json(j.at("inner")), [](const Vector& x) { return x; });
  }
  throw InvalidArgument("unknown geometry variant '" + v + "'");
}

}  // namespace invuq
