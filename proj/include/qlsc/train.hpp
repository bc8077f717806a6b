// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qlsc/data.hpp"
#include "qlsc/qa_model.hpp"
#include "qlsc/rng.hpp"
#include "qlsc/tensor.hpp"

namespace qlsc {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 4;
  std::size_t epochs = 5;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;

  /// "desk" (the defaults above) or "paper-plm" (learning rate 3e-5, the
  /// setting used when fine-tuning large pretrained encoders).
  static TrainConfig preset(const std::string& name);
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of every tensor in `params` from its
/// accumulated gradient. The state is sized on first use; afterwards a
/// mismatch with `params` throws ContractError.
void adam_step(std::span<Tensor> params, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> epoch_losses;  // mean span loss per example
  Rng::State rng_state{};
};

/// Mini-batch training. Batches come from a per-epoch shuffle drawn from
/// `rng`; each batch's loss is the mean span loss of its examples and yields
/// one Adam step. `on_epoch` (optional) sees (epoch, mean_loss) as each epoch
/// ends. Throws NumericError on a non-finite loss.
TrainResult train(QAModel& model, std::span<const QAExample> corpus,
                  const TrainConfig& cfg, Rng& rng,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

/// "epoch,mean_loss" with six decimals; epochs count from 1.
std::string loss_csv(std::span<const double> epoch_losses);

// ---- checkpoints ----------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  QAModel model;
  TrainConfig train;
  Rng::State rng_state{};
};

std::string checkpoint_json(const QAModel& model, const TrainConfig& cfg,
                            const Rng::State& rng_state);
void save_checkpoint(const QAModel& model, const TrainConfig& cfg,
                     const Rng::State& rng_state,
                     const std::filesystem::path& path);
Checkpoint parse_checkpoint(const std::string& text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qlsc
