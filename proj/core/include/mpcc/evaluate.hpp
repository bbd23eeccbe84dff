#pragma once

#include <string>
#include <vector>

#include "mpcc/dataset.hpp"
#include "mpcc/metrics.hpp"
#include "mpcc/model.hpp"

namespace mpcc {

struct EvalRow {
  std::string category;  // "Avg" for the summary row
  double value = 0.0;    // scaled by report_scale(metric)
};

struct EvalTable {
  metrics::Metric metric = metrics::Metric::cd;
  std::vector<EvalRow> rows;          // non-empty categories, then Avg
  std::vector<double> sample_values;  // unscaled, dataset order
  std::vector<std::string> warnings;

  double average() const;
  /// `category,metric,value,scale`
  std::string to_csv() const;
};

/// Scores precomputed predictions (one per dataset sample). CD compares with
/// the ground truth; UCD/UHD compare with the partial input. Rows follow the
/// synthetic category order, then any other categories in dataset order;
/// categories without samples are omitted with a warning. The Avg row is the
/// unweighted mean of the category rows.
EvalTable evaluate_predictions(const Dataset& data, const std::vector<PointCloud>& predictions,
                               metrics::Metric metric);

/// Runs inference in config-sized batches and scores the outputs.
EvalTable evaluate(const Model& model, const Dataset& data, metrics::Metric metric);

std::vector<PointCloud> predict_all(const Model& model, const Dataset& data);

}  // namespace mpcc
