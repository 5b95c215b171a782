#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "stack_order/bank.hpp"
#include "stack_order/corpus.hpp"
#include "stack_order/edge_classifier.hpp"
#include "stack_order/graph.hpp"
#include "stack_order/metrics.hpp"
#include "stack_order/optim.hpp"
#include "stack_order/order_solver.hpp"
#include "stack_order/rgcn.hpp"

namespace stack_order {

struct TrainConfig {
  std::uint32_t epochs = 10;
  std::uint32_t batch_docs = 8;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::uint32_t d_in = 64;
  std::uint32_t d_h = 64;
  GraphConfig ablation;
  double log_eps = 1e-7;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Applies `key = value` lines (# comments allowed). Keys: epochs, batch,
/// lr, seed, dim_in, dim_hidden, use_csk, use_global, merge_csk, log_eps.
void apply_config_text(TrainConfig& config, std::string_view text, std::string_view source = "<config>");
std::string config_to_text(const TrainConfig& config);

struct Checkpoint {
  TrainConfig config;
  ModelParameters params;
  AdamState optimizer;
  std::uint32_t epoch = 0;
  double val_tau = 0.0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::string_view kCheckpointMagic = "STCK";
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes, std::string context = "checkpoint");
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct EpochLog {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_tau = 0.0;

  std::string to_json() const;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called after every optimizer step with (epoch, batch index, batch loss).
  std::function<void(std::uint32_t, std::size_t, double)> on_batch;
};

ModelShape model_shape(const TrainConfig& config, const BankDims& dims);

/// Forward pass and mean gold-forward BCE for one document (n >= 2).
double document_loss(const Document& doc, const BankRecord& record, const ModelParameters& params,
                     double log_eps = 1e-7);

struct LossAndGradients {
  double loss = 0.0;
  std::size_t edges = 0;
  std::vector<Tensor> grads;  // aligned with params.list()
};
LossAndGradients document_loss_and_gradients(const Document& doc, const BankRecord& record,
                                             const ModelParameters& params, double log_eps = 1e-7);

/// Trains with Adam, one step per batch of documents, and returns the
/// checkpoint with the best validation tau (earliest epoch on ties).
TrainResult train(const Corpus& corpus, const EmbeddingBank& bank, const TrainConfig& config,
                  const TrainHooks& hooks = {});

struct Prediction {
  Permutation order;
  PairwiseMatrix matrix;
};

Prediction predict(const Document& doc, const EmbeddingBank& bank, const Checkpoint& ckpt);
Prediction predict(const Document& doc, const BankRecord& record, const ModelParameters& params);

MetricsReport evaluate(const Corpus& corpus, const EmbeddingBank& bank, const Checkpoint& ckpt, Split split);
MetricsReport evaluate(const std::vector<const Document*>& docs, const EmbeddingBank& bank,
                       const ModelParameters& params, std::string split_name);

/// Throws unless the checkpoint was trained on banks of these widths.
void check_compatible(const Checkpoint& ckpt, const BankDims& dims);

}  // namespace stack_order
