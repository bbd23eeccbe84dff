#include "mpcc/evaluate.hpp"

#include <cstdio>

#include "mpcc/error.hpp"
#include "mpcc/synth.hpp"

namespace mpcc {

double EvalTable::average() const {
  for (const auto& r : rows) {
    if (r.category == "Avg") return r.value;
  }
  throw UsageError("evaluation table has no Avg row");
}

std::string EvalTable::to_csv() const {
  std::string out = "category,metric,value,scale\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%g\n", r.category.c_str(), metrics::variant_name(metric), r.value,
                  metrics::report_scale(metric));
    out += buf;
  }
  return out;
}

EvalTable evaluate_predictions(const Dataset& data, const std::vector<PointCloud>& predictions,
                               metrics::Metric metric) {
  if (predictions.size() != data.size()) throw UsageError("evaluate: one prediction per sample is required");
  EvalTable table;
  table.metric = metric;
  const double scale = metrics::report_scale(metric);
  // Every known category gets a slot so missing ones can be reported.
  std::vector<std::string> cats;
  for (auto c : synth::kAllCategories) cats.emplace_back(synth::category_name(c));
  std::vector<double> sums(cats.size(), 0.0);
  std::vector<std::size_t> counts(cats.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.get(i);
    const PointCloud* ref = nullptr;
    if (metric == metrics::Metric::cd) {
      if (!s.gt) throw UsageError("CD evaluation needs ground truth; sample " + s.category + "/" + s.id + " has none");
      ref = &*s.gt;
    } else {
      ref = &s.partial;
    }
    const double v = metrics::evaluate_metric(metric, predictions[i], *ref).value;
    table.sample_values.push_back(v);
    std::size_t c = 0;
    while (c < cats.size() && cats[c] != s.category) ++c;
    if (c == cats.size()) {
      cats.push_back(s.category);
      sums.push_back(0.0);
      counts.push_back(0);
    }
    sums[c] += v;
    ++counts[c];
  }
  double avg = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    if (counts[c] == 0) {
      table.warnings.push_back("category " + cats[c] + " is empty; omitted");
      continue;
    }
    const double mean = sums[c] / static_cast<double>(counts[c]) * scale;
    table.rows.push_back({cats[c], mean});
    avg += mean;
    ++used;
  }
  if (used == 0) throw UsageError("evaluate: dataset is empty");
  table.rows.push_back({"Avg", avg / static_cast<double>(used)});
  return table;
}

std::vector<PointCloud> predict_all(const Model& model, const Dataset& data) {
  autograd::NoGradGuard no_grad;
  std::vector<PointCloud> out;
  out.reserve(data.size());
  const std::size_t batch = model.config().batch;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    std::vector<const PointCloud*> partials;
    for (std::size_t i = start; i < end; ++i) partials.push_back(&data.samples()[i].partial);
    auto res = model.forward_infer(partials);
    for (auto& c : res.completed) out.push_back(std::move(c));
  }
  return out;
}

EvalTable evaluate(const Model& model, const Dataset& data, metrics::Metric metric) {
  return evaluate_predictions(data, predict_all(model, data), metric);
}

}  // namespace mpcc
