#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mpcc/alignment.hpp"
#include "mpcc/dataset.hpp"
#include "mpcc/model.hpp"

namespace mpcc {

inline constexpr double kDivergenceThreshold = 1e6;

struct LossRow {
  std::size_t step = 0;
  align::LossBreakdown loss;
};

struct TrainOptions {
  /// Where checkpoints, loss.csv and the resolved config go; empty = nowhere.
  std::filesystem::path out_dir;
  /// Evaluate the alignment branch even when it carries no weight.
  bool force_alignment_branch = false;
  std::function<void(const LossRow&)> on_step;
};

struct TrainResult {
  std::vector<LossRow> rows;
  std::size_t steps = 0;
  std::size_t epochs = 0;
};

/// Paired source/target training on L_total with AdamW. Deterministic for a
/// fixed config seed.
TrainResult train_loop(Model& model, const Dataset& source, const Dataset& target,
                       const TrainOptions& opts = {});

/// `step,loss_cd,l_sp,l_ch,total` with round-trip precision.
std::string loss_csv(const std::vector<LossRow>& rows);

}  // namespace mpcc
