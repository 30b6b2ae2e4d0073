#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rwr/dataset.hpp"
#include "rwr/distance.hpp"
#include "rwr/error.hpp"

namespace rwr {

enum class RegressorKind { KNN, MLP, Constant, TableLookup };

inline std::string_view to_string(RegressorKind k) {
  switch (k) {
    case RegressorKind::KNN: return "knn";
    case RegressorKind::MLP: return "mlp";
    case RegressorKind::Constant: return "constant";
    case RegressorKind::TableLookup: return "table";
  }
  return "unknown";
}

/// Indices of the `k` training rows closest to `x`, nearest first. Distance
/// ties are broken by ascending row index.
inline std::vector<std::size_t> nearest_neighbors(const Dataset& train, std::span<const double> x, std::size_t k) {
  const std::size_t n = train.size();
  k = std::min(k, n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(train.row(i), x);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto closer = [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
  order.resize(k);
  return order;
}

struct KnnModel {
  std::size_t k = 1;
  Dataset train;

  double predict(std::span<const double> x) const {
    const auto nn = nearest_neighbors(train, x, k);
    double s = 0.0;
    for (std::size_t i : nn) s += train.target(i);
    return s / static_cast<double>(nn.size());
  }

  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

/// One hidden ReLU layer followed by a linear output unit.
struct MlpModel {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x input_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  std::size_t parameter_count() const { return hidden * input_dim + 2 * hidden + 1; }

  std::vector<double> hidden_activations(std::span<const double> x) const {
    std::vector<double> a(hidden);
    for (std::size_t h = 0; h < hidden; ++h) {
      double z = b1[h];
      const double* row = w1.data() + h * input_dim;
      for (std::size_t j = 0; j < input_dim; ++j) z += row[j] * x[j];
      a[h] = z > 0.0 ? z : 0.0;
    }
    return a;
  }

  double predict(std::span<const double> x) const {
    double out = b2;
    for (std::size_t h = 0; h < hidden; ++h) {
      double z = b1[h];
      const double* row = w1.data() + h * input_dim;
      for (std::size_t j = 0; j < input_dim; ++j) z += row[j] * x[j];
      if (z > 0.0) out += w2[h] * z;
    }
    return out;
  }

  /// Flat parameter vector in the order w1, b1, w2, b2.
  std::vector<double> flatten() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    p.insert(p.end(), w1.begin(), w1.end());
    p.insert(p.end(), b1.begin(), b1.end());
    p.insert(p.end(), w2.begin(), w2.end());
    p.push_back(b2);
    return p;
  }

  void unflatten(std::span<const double> p) {
    require(p.size() == parameter_count(), ErrorKind::InvalidArgument, "parameter vector has wrong length");
    auto it = p.begin();
    std::copy(it, it + static_cast<std::ptrdiff_t>(w1.size()), w1.begin());
    it += static_cast<std::ptrdiff_t>(w1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(b1.size()), b1.begin());
    it += static_cast<std::ptrdiff_t>(b1.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(w2.size()), w2.begin());
    it += static_cast<std::ptrdiff_t>(w2.size());
    b2 = *it;
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct ConstantModel {
  double value = 0.0;
  double predict(std::span<const double>) const { return value; }
  friend bool operator==(const ConstantModel&, const ConstantModel&) = default;
};

/// Explicit point -> value map. Queries off the table resolve to the
/// nearest stored point so predictions stay finite everywhere.
struct TableModel {
  std::size_t dim = 1;
  std::vector<double> points;
  std::vector<double> values;

  double predict(std::span<const double> x) const { return values[nearest_row(points, dim, x)]; }
  friend bool operator==(const TableModel&, const TableModel&) = default;
};

/// A fitted regressor f: X -> Y. Immutable once built.
class RegressorModel {
 public:
  using Payload = std::variant<KnnModel, MlpModel, ConstantModel, TableModel>;

  RegressorModel() : payload_(ConstantModel{}) {}
  explicit RegressorModel(Payload payload) : payload_(std::move(payload)) {}

  static RegressorModel constant(double value) { return RegressorModel(ConstantModel{value}); }

  static RegressorModel table(std::size_t dim, std::vector<double> points, std::vector<double> values) {
    require(dim >= 1 && !values.empty() && points.size() == values.size() * dim, ErrorKind::InvalidArgument,
            "table regressor buffers disagree in size");
    return RegressorModel(TableModel{dim, std::move(points), std::move(values)});
  }

  RegressorKind kind() const noexcept { return static_cast<RegressorKind>(payload_.index()); }

  double predict(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, payload_);
  }

  std::vector<double> predict_all(const Dataset& data) const {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(data.row(i));
    return out;
  }

  const Payload& payload() const noexcept { return payload_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&payload_);
  }

  friend bool operator==(const RegressorModel&, const RegressorModel&) = default;

 private:
  Payload payload_;
};

}  // namespace rwr
