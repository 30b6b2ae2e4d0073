#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "rwr/calibrator.hpp"
#include "rwr/distance.hpp"
#include "rwr/error.hpp"

namespace rwr {

enum class RejectorKind { Induced, Conformal, Constant, TableLookup };

inline std::string_view to_string(RejectorKind k) {
  switch (k) {
    case RejectorKind::Induced: return "induced";
    case RejectorKind::Conformal: return "conformal";
    case RejectorKind::Constant: return "constant";
    case RejectorKind::TableLookup: return "table";
  }
  return "unknown";
}

/// Binary rejector r: X -> {0, 1}; 1 accepts (machine predicts), 0 defers.
///
/// Induced and Conformal rejectors accept exactly when the calibrator score
/// is <= threshold (ties accept). A Conformal threshold may be +inf, which
/// accepts everything.
class RejectorModel {
 public:
  static RejectorModel constant(int decision) {
    RejectorModel r;
    r.kind_ = RejectorKind::Constant;
    r.constant_ = decision != 0 ? 1 : 0;
    return r;
  }

  static RejectorModel induced(std::shared_ptr<const CalibratorModel> calibrator, double threshold) {
    require(static_cast<bool>(calibrator), ErrorKind::InvalidArgument, "induced rejector needs a calibrator");
    RejectorModel r;
    r.kind_ = RejectorKind::Induced;
    r.calibrator_ = std::move(calibrator);
    r.threshold_ = threshold;
    return r;
  }

  static RejectorModel conformal(std::shared_ptr<const CalibratorModel> calibrator, double threshold) {
    RejectorModel r = induced(std::move(calibrator), threshold);
    r.kind_ = RejectorKind::Conformal;
    return r;
  }

  static RejectorModel table(std::size_t dim, std::vector<double> points, std::vector<int> decisions) {
    require(dim >= 1 && !decisions.empty() && points.size() == decisions.size() * dim, ErrorKind::InvalidArgument,
            "table rejector buffers disagree in size");
    RejectorModel r;
    r.kind_ = RejectorKind::TableLookup;
    r.dim_ = dim;
    r.points_ = std::move(points);
    for (int& d : decisions) d = d != 0 ? 1 : 0;
    r.decisions_ = std::move(decisions);
    return r;
  }

  RejectorKind kind() const noexcept { return kind_; }
  double threshold() const noexcept { return threshold_; }
  const std::shared_ptr<const CalibratorModel>& calibrator() const noexcept { return calibrator_; }
  int constant_decision() const noexcept { return constant_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<int>& decisions() const noexcept { return decisions_; }

  int accept(std::span<const double> x) const {
    switch (kind_) {
      case RejectorKind::Constant: return constant_;
      case RejectorKind::TableLookup: return decisions_[nearest_row(points_, dim_, x)];
      case RejectorKind::Induced:
      case RejectorKind::Conformal: return calibrator_->estimate(x) <= threshold_ ? 1 : 0;
    }
    return 0;
  }

  friend bool operator==(const RejectorModel& a, const RejectorModel& b) {
    const bool same_cal = a.calibrator_ == b.calibrator_ ||
                          (a.calibrator_ && b.calibrator_ && *a.calibrator_ == *b.calibrator_);
    return a.kind_ == b.kind_ && same_cal && a.threshold_ == b.threshold_ && a.constant_ == b.constant_ &&
           a.dim_ == b.dim_ && a.points_ == b.points_ && a.decisions_ == b.decisions_;
  }

 private:
  RejectorModel() = default;

  RejectorKind kind_ = RejectorKind::Constant;
  std::shared_ptr<const CalibratorModel> calibrator_;
  double threshold_ = 0.0;
  int constant_ = 1;
  std::size_t dim_ = 1;
  std::vector<double> points_;
  std::vector<int> decisions_;
};

}  // namespace rwr
