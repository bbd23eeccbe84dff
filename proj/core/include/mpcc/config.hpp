#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace mpcc {

struct ModelConfig {
  // Geometry and scanning.
  std::size_t n_points = 2048;
  std::size_t G = 64;
  std::size_t K = 32;
  int bits = 10;

  // Encoder.
  std::size_t D = 128;
  std::size_t n_blocks = 4;
  std::size_t n_state = 16;
  std::size_t expand = 2;

  // Alignment.
  std::size_t S = 4;
  double lambda = 0.1;
  double beta = 0.1;
  bool use_cdps = true;
  bool use_cdsa = true;
  bool use_cdca = true;
  bool modulate_forward = true;  // feed modulated source features to the decoder
  bool tap_every_block = false;  // alignment after every block instead of once
  bool pair_by_category = false; // draw the target batch from the source batch's categories

  // Decoder.
  std::size_t coarse_points = 256;
  std::size_t fold_rows = 2;
  std::size_t fold_cols = 4;
  std::size_t hidden = 256;
  std::size_t fold_hidden = 64;

  // Optimization.
  double lr = 1e-3;
  double weight_decay = 5e-2;
  std::size_t batch = 8;
  std::size_t epochs = 10;
  std::size_t ckpt_every = 1;
  std::size_t max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 0;

  std::size_t fold_points() const { return fold_rows * fold_cols; }
  std::size_t n_points_out() const { return coarse_points * fold_points(); }
  std::size_t d_inner() const { return expand * D; }
  std::size_t dt_rank() const { return (D + 15) / 16; }

  /// True when training must never read the target split.
  bool alignment_disabled() const { return lambda == 0.0 && beta == 0.0 && !modulate_forward; }

  /// Throws ConfigError naming the violated invariant.
  void validate() const;

  /// Applies one `key = value` assignment; unknown keys are an error.
  void set(const std::string& key, const std::string& value);

  std::string to_string() const;
  static ModelConfig parse(const std::string& text);
  static ModelConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace mpcc
