#pragma once

// Self-describing JSON documents ("kind" tag + payload) for every model type.

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwr/calibrator.hpp"
#include "rwr/dataset.hpp"
#include "rwr/error.hpp"
#include "rwr/losses.hpp"
#include "rwr/regressor.hpp"
#include "rwr/rejection.hpp"
#include "rwr/rejector.hpp"
#include "rwr/task.hpp"

namespace rwr::json {

using nlohmann::json;

/// Doubles with +/-inf encoded as strings; JSON has no infinity.
inline json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double to_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::ParseError, "bad number string '" + s + "'");
  }
  return j.get<double>();
}

inline json rows(std::span<const double> buf, std::size_t d) {
  json out = json::array();
  for (std::size_t i = 0; d > 0 && i < buf.size() / d; ++i)
    out.push_back(std::vector<double>(buf.begin() + static_cast<std::ptrdiff_t>(i * d),
                                      buf.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
  return out;
}

inline std::vector<double> flatten_rows(const json& j, std::size_t d) {
  std::vector<double> out;
  for (const auto& row : j) {
    const auto r = row.get<std::vector<double>>();
    require(r.size() == d, ErrorKind::ParseError, "row has wrong width");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

inline json to_json(const Dataset& d) {
  return {{"n", d.size()},
          {"d", d.dim()},
          {"features", rows(d.features(), d.dim())},
          {"targets", d.targets()},
          {"feature_names", d.feature_names()}};
}

inline Dataset dataset_from_json(const json& j) {
  const auto n = j.at("n").get<std::size_t>();
  const auto d = j.at("d").get<std::size_t>();
  return Dataset(n, d, flatten_rows(j.at("features"), d), j.at("targets").get<std::vector<double>>(),
                 j.value("feature_names", std::vector<std::string>{}));
}

inline json to_json(const ScalingParams& p) {
  std::vector<int> degenerate(p.degenerate.begin(), p.degenerate.end());
  return {{"feature_mean", p.feature_mean}, {"feature_scale", p.feature_scale}, {"degenerate", degenerate},
          {"target_mean", p.target_mean},   {"target_scale", p.target_scale},   {"scale_targets", p.scale_targets}};
}

inline ScalingParams scaling_from_json(const json& j) {
  ScalingParams p;
  p.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  p.feature_scale = j.at("feature_scale").get<std::vector<double>>();
  for (int v : j.at("degenerate").get<std::vector<int>>()) p.degenerate.push_back(v != 0);
  p.target_mean = j.at("target_mean").get<double>();
  p.target_scale = j.at("target_scale").get<double>();
  p.scale_targets = j.at("scale_targets").get<bool>();
  return p;
}

inline json to_json(const RegressorModel& f) {
  json j;
  j["kind"] = std::string(to_string(f.kind()));
  if (const auto* m = f.as<KnnModel>()) {
    j["k"] = m->k;
    j["train"] = to_json(m->train);
  } else if (const auto* m = f.as<MlpModel>()) {
    j["layers"] = json::array({{{"name", "hidden"}, {"shape", {m->hidden, m->input_dim}}, {"activation", "relu"}},
                               {{"name", "output"}, {"shape", {1, m->hidden}}, {"activation", "linear"}}});
    j["w1"] = rows(m->w1, m->input_dim);
    j["b1"] = m->b1;
    j["w2"] = json::array({m->w2});
    j["b2"] = json::array({m->b2});
  } else if (const auto* m = f.as<ConstantModel>()) {
    j["value"] = m->value;
  } else if (const auto* m = f.as<TableModel>()) {
    j["dim"] = m->dim;
    j["points"] = rows(m->points, m->dim);
    j["values"] = m->values;
  }
  return j;
}

inline RegressorModel regressor_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "knn") return RegressorModel(KnnModel{j.at("k").get<std::size_t>(), dataset_from_json(j.at("train"))});
  if (kind == "mlp") {
    MlpModel m;
    const auto shape = j.at("layers").at(0).at("shape").get<std::vector<std::size_t>>();
    m.hidden = shape.at(0);
    m.input_dim = shape.at(1);
    m.w1 = flatten_rows(j.at("w1"), m.input_dim);
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").at(0).get<std::vector<double>>();
    m.b2 = j.at("b2").at(0).get<double>();
    require(m.w1.size() == m.hidden * m.input_dim && m.b1.size() == m.hidden && m.w2.size() == m.hidden,
            ErrorKind::ParseError, "MLP weights disagree with the layer shapes");
    return RegressorModel(std::move(m));
  }
  if (kind == "constant") return RegressorModel::constant(j.at("value").get<double>());
  if (kind == "table") {
    const auto d = j.at("dim").get<std::size_t>();
    return RegressorModel::table(d, flatten_rows(j.at("points"), d), j.at("values").get<std::vector<double>>());
  }
  throw Error(ErrorKind::ParseError, "unknown regressor kind '" + kind + "'");
}

inline json to_json(const SyntheticTask& t) {
  json j{{"name", t.name()}, {"noise", t.noise() == NoiseFamily::TwoPoint ? "two-point" : "gaussian"}};
  if (t.is_discrete()) {
    j["support"] = "discrete";
    j["dim"] = t.dim();
    j["points"] = rows(t.support_points(), t.dim());
    std::vector<double> w, mu, v;
    for (const auto& n : t.nodes()) {
      w.push_back(n.weight);
      mu.push_back(n.mean);
      v.push_back(n.var);
    }
    j["weights"] = w;
    j["means"] = mu;
    j["vars"] = v;
  } else {
    const auto& p = t.provenance();
    j["support"] = "continuous-1d";
    j["base"] = p.base;
    j["x_shift"] = p.x_shift;
    j["x_scale"] = p.x_scale;
    j["y_shift"] = p.y_shift;
    j["y_scale"] = p.y_scale;
  }
  return j;
}

inline SyntheticTask task_from_json(const json& j) {
  const auto noise = j.at("noise").get<std::string>() == "two-point" ? NoiseFamily::TwoPoint : NoiseFamily::Gaussian;
  if (j.at("support").get<std::string>() == "discrete") {
    const auto d = j.at("dim").get<std::size_t>();
    return SyntheticTask::discrete(j.at("name").get<std::string>(), d, flatten_rows(j.at("points"), d),
                                   j.at("weights").get<std::vector<double>>(),
                                   j.at("means").get<std::vector<double>>(), j.at("vars").get<std::vector<double>>(),
                                   noise);
  }
  auto base = tasks::by_name(j.at("base").get<std::string>());
  ScalingParams s;
  s.feature_mean = {j.at("x_shift").get<double>()};
  s.feature_scale = {j.at("x_scale").get<double>()};
  s.degenerate = {false};
  s.target_mean = j.at("y_shift").get<double>();
  s.target_scale = j.at("y_scale").get<double>();
  s.scale_targets = true;
  return base.transformed(s);
}

inline json to_json(const CalibratorModel& cal) {
  json j;
  j["kind"] = std::string(to_string(cal.kind()));
  if (const auto* k = cal.as<KernelSmoother>()) {
    j["family"] = "gaussian-rbf";
    j["sigma"] = k->kernel.length_scale_sigma;
    j["bandwidth_grid"] = k->kernel.bandwidth_grid;
    j["points"] = rows(k->points.features(), k->points.dim());
    j["losses"] = k->points.targets();
  } else if (const auto* l = cal.as<LinearOnFeatures>()) {
    j["coef"] = l->coef;
    j["intercept"] = l->intercept;
    j["embedding"] = l->embedding ? to_json(*l->embedding) : json(nullptr);
  } else if (const auto* o = cal.as<OracleRisk>()) {
    j["task"] = to_json(*o->task);
    j["regressor"] = to_json(*o->regressor);
  } else if (const auto* t = cal.as<TableCalibrator>()) {
    j["dim"] = t->dim;
    j["points"] = rows(t->points, t->dim);
    j["values"] = t->values;
  }
  return j;
}

inline CalibratorModel calibrator_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "kernel") {
    KernelSpec spec;
    spec.length_scale_sigma = j.at("sigma").get<double>();
    spec.bandwidth_grid = j.at("bandwidth_grid").get<std::vector<double>>();
    const auto pts = j.at("points");
    const std::size_t d = pts.empty() ? 1 : pts.at(0).size();
    auto losses = j.at("losses").get<std::vector<double>>();
    const std::size_t n = losses.size();
    return CalibratorModel(KernelSmoother{Dataset(n, d, flatten_rows(pts, d), std::move(losses)), spec});
  }
  if (kind == "loss-linear") {
    LinearOnFeatures l;
    l.coef = j.at("coef").get<std::vector<double>>();
    l.intercept = j.at("intercept").get<double>();
    if (!j.at("embedding").is_null())
      l.embedding = std::make_shared<const RegressorModel>(regressor_from_json(j.at("embedding")));
    return CalibratorModel(std::move(l));
  }
  if (kind == "oracle")
    return CalibratorModel::oracle(std::make_shared<const SyntheticTask>(task_from_json(j.at("task"))),
                                   std::make_shared<const RegressorModel>(regressor_from_json(j.at("regressor"))));
  if (kind == "table") {
    const auto d = j.at("dim").get<std::size_t>();
    return CalibratorModel::table(d, flatten_rows(j.at("points"), d), j.at("values").get<std::vector<double>>());
  }
  throw Error(ErrorKind::ParseError, "unknown calibrator kind '" + kind + "'");
}

inline json to_json(const RejectorModel& r) {
  json j;
  j["kind"] = std::string(to_string(r.kind()));
  switch (r.kind()) {
    case RejectorKind::Constant: j["decision"] = r.constant_decision(); break;
    case RejectorKind::TableLookup:
      j["dim"] = r.dim();
      j["points"] = rows(r.points(), r.dim());
      j["decisions"] = r.decisions();
      break;
    case RejectorKind::Induced:
    case RejectorKind::Conformal:
      j["threshold"] = number(r.threshold());
      j["calibrator"] = to_json(*r.calibrator());
      break;
  }
  return j;
}

inline RejectorModel rejector_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return RejectorModel::constant(j.at("decision").get<int>());
  if (kind == "table") {
    const auto d = j.at("dim").get<std::size_t>();
    return RejectorModel::table(d, flatten_rows(j.at("points"), d), j.at("decisions").get<std::vector<int>>());
  }
  if (kind == "induced" || kind == "conformal") {
    auto cal = std::make_shared<const CalibratorModel>(calibrator_from_json(j.at("calibrator")));
    const double thr = to_number(j.at("threshold"));
    return kind == "induced" ? RejectorModel::induced(std::move(cal), thr)
                             : RejectorModel::conformal(std::move(cal), thr);
  }
  throw Error(ErrorKind::ParseError, "unknown rejector kind '" + kind + "'");
}

inline json to_json(const LossReport& r) {
  return {{"rwr_loss", r.rwr_loss},
          {"machine_loss", r.machine_loss},
          {"rejection_rate", r.rejection_rate},
          {"n_evaluated", r.n_evaluated},
          {"all_deferred", r.all_deferred}};
}

inline LossReport loss_report_from_json(const json& j) {
  LossReport r;
  r.rwr_loss = j.at("rwr_loss").get<double>();
  r.machine_loss = j.at("machine_loss").get<double>();
  r.rejection_rate = j.at("rejection_rate").get<double>();
  r.n_evaluated = j.at("n_evaluated").get<std::size_t>();
  r.all_deferred = j.at("all_deferred").get<bool>();
  return r;
}

inline json to_json(const ConformalThreshold& t) {
  return {{"c_hat", number(t.c_hat)},
          {"m", t.m},
          {"gamma", t.gamma},
          {"order_statistic_index", t.order_statistic_index}};
}

inline ConformalThreshold conformal_from_json(const json& j) {
  ConformalThreshold t;
  t.c_hat = to_number(j.at("c_hat"));
  t.m = j.at("m").get<std::size_t>();
  t.gamma = j.at("gamma").get<double>();
  t.order_statistic_index = j.at("order_statistic_index").get<std::size_t>();
  return t;
}

}  // namespace rwr::json
