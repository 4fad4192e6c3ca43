#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ultra/kgdata.hpp"
#include "ultra/model.hpp"

namespace ultra {

enum class OptimizerKind { kAdam, kAdagrad };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct TrainConfig {
  std::size_t batch_size = 500;
  std::size_t neg_samples = 50;
  double learning_rate = 5e-3;
  std::size_t epochs = 100;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  bool grad_check = false;     // finite-difference spot check on the first batch
  bool deterministic = false;  // pins a single worker
  std::size_t threads = 1;
  bool learn_margin = false;   // delta is a hyperparameter unless set

  void validate() const;
  std::size_t workers() const { return deterministic ? 1 : threads; }
};

inline constexpr double kProbClamp = 1e-12;

// k corruptions of `positive`, each replacing head or tail (fair coin) with a
// uniformly drawn entity.
std::vector<Triple> sample_negatives(const Triple& positive, std::size_t k,
                                     std::size_t num_entities, std::mt19937_64& rng);

// -(1/N) sum_i [log p_i + sum_j log(1 - p~_ij)] with p = sigmoid(score)
// clamped to [1e-12, 1 - 1e-12]. `negatives` may be in any grouping.
double bce_loss(const Model& m, const std::vector<Triple>& positives,
                const std::vector<Triple>& negatives);

// Same loss; accumulates dL/dparams into grad (which must be shaped like
// m.params). Work is split into `workers` contiguous chunks whose gradients
// are summed in chunk order.
double loss_and_gradients(const Model& m, const std::vector<Triple>& positives,
                          const std::vector<Triple>& negatives, Params& grad,
                          std::size_t workers = 1);

Params gradients(const Model& m, const std::vector<Triple>& positives,
                 const std::vector<Triple>& negatives);

// Throws kNumeric naming the first parameter block with a non-finite entry.
void check_finite(const Params& p, const char* what);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, const Params& shape);
  void step(Params& params, const Params& grad);

 private:
  OptimizerKind kind_;
  double lr_;
  std::size_t t_ = 0;
  Params m1_, m2_;
};

struct FitResult {
  std::vector<double> loss_trace;  // mean loss per epoch
  double grad_check_error = 0.0;   // max relative error when grad_check is set
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, const Model& m)>;

// Mini-batch training over store.train. On a non-finite loss the model is
// restored to its state at the start of the failing epoch and kNumeric is
// thrown.
FitResult fit(Model& m, const TripleStore& store, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

}  // namespace ultra
