#include "ultra/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "ultra/error.hpp"

namespace ultra {

namespace {

double sigmoid(double s) {
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

// Loss and gradient contributions of a contiguous slice of positives and
// their negatives (k per positive, laid out contiguously).
double slice_loss(const Model& m, const std::vector<Triple>& positives,
                  const std::vector<Triple>& negatives, std::size_t begin,
                  std::size_t end, double inv_n, Params* grad) {
  const std::size_t k = positives.empty() ? 0 : negatives.size() / positives.size();
  double total = 0.0;
  auto term = [&](const Triple& t, bool positive) {
    const double s = score(m, t.head, t.rel, t.tail);
    const double p = sigmoid(s);
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const bool clamped = pc != p;
    total += positive ? -std::log(pc) : -std::log(1.0 - pc);
    if (grad != nullptr && !clamped) {
      // d(-log p)/ds = -(1 - p); d(-log(1 - p))/ds = p
      const double w = (positive ? -(1.0 - p) : p) * inv_n;
      score_backward(m, t.head, t.rel, t.tail, w, *grad);
    }
  };
  for (std::size_t i = begin; i < end; ++i) {
    term(positives[i], true);
    for (std::size_t j = 0; j < k; ++j) term(negatives[i * k + j], false);
  }
  // Leftover negatives when the grouping is uneven go with the last slice.
  if (end == positives.size()) {
    for (std::size_t j = positives.size() * k; j < negatives.size(); ++j) term(negatives[j], false);
  }
  return total * inv_n;
}

void add_into(Params& dst, const Params& src) {
  auto d = dst.blocks();
  auto s = src.blocks();
  for (std::size_t b = 0; b < Params::kBlockCount; ++b)
    for (std::size_t i = 0; i < d[b]->size(); ++i) (*d[b])[i] += (*s[b])[i];
}

}  // namespace

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  throw Error(ErrorCode::kConfig, "unknown optimizer '" + name + "' (expected adam or adagrad)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "adagrad";
}

void TrainConfig::validate() const {
  if (neg_samples < 1) throw Error(ErrorCode::kConfig, "negative sample count must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kConfig, "learning rate must be positive");
  }
  if (threads < 1) throw Error(ErrorCode::kConfig, "threads must be >= 1");
}

std::vector<Triple> sample_negatives(const Triple& positive, std::size_t k,
                                     std::size_t num_entities, std::mt19937_64& rng) {
  std::vector<Triple> out;
  out.reserve(k);
  std::bernoulli_distribution corrupt_head(0.5);
  std::uniform_int_distribution<std::size_t> entity(0, num_entities - 1);
  for (std::size_t j = 0; j < k; ++j) {
    Triple t = positive;
    if (corrupt_head(rng)) {
      t.head = entity(rng);
    } else {
      t.tail = entity(rng);
    }
    out.push_back(t);
  }
  return out;
}

double bce_loss(const Model& m, const std::vector<Triple>& positives,
                const std::vector<Triple>& negatives) {
  if (positives.empty()) throw Error(ErrorCode::kEmptySplit, "bce_loss: no positives");
  return slice_loss(m, positives, negatives, 0, positives.size(),
                    1.0 / static_cast<double>(positives.size()), nullptr);
}

double loss_and_gradients(const Model& m, const std::vector<Triple>& positives,
                          const std::vector<Triple>& negatives, Params& grad,
                          std::size_t workers) {
  if (positives.empty()) throw Error(ErrorCode::kEmptySplit, "loss_and_gradients: no positives");
  const double inv_n = 1.0 / static_cast<double>(positives.size());
  workers = std::clamp<std::size_t>(workers, 1, positives.size());
  if (workers == 1) return slice_loss(m, positives, negatives, 0, positives.size(), inv_n, &grad);

  std::vector<Params> partial(workers, grad.zeros_like());
  std::vector<double> losses(workers, 0.0);
  std::vector<std::thread> pool;
  const std::size_t chunk = (positives.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(positives.size(), w * chunk);
    const std::size_t end = std::min(positives.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      losses[w] = slice_loss(m, positives, negatives, begin, end, inv_n, &partial[w]);
    });
  }
  for (auto& t : pool) t.join();
  double loss = 0.0;
  for (std::size_t w = 0; w < workers; ++w) {
    add_into(grad, partial[w]);
    loss += losses[w];
  }
  return loss;
}

Params gradients(const Model& m, const std::vector<Triple>& positives,
                 const std::vector<Triple>& negatives) {
  Params g = m.params.zeros_like();
  loss_and_gradients(m, positives, negatives, g);
  return g;
}

void check_finite(const Params& p, const char* what) {
  const auto blocks = p.blocks();
  for (std::size_t b = 0; b < Params::kBlockCount; ++b) {
    for (std::size_t i = 0; i < blocks[b]->size(); ++i) {
      if (!std::isfinite((*blocks[b])[i])) {
        throw Error(ErrorCode::kNumeric, std::string("non-finite ") + what + " in block '" +
                                             Params::block_name(b) + "' at index " +
                                             std::to_string(i));
      }
    }
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, const Params& shape)
    : kind_(kind), lr_(learning_rate), m1_(shape.zeros_like()), m2_(shape.zeros_like()) {}

void Optimizer::step(Params& params, const Params& grad) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  auto p = params.blocks();
  auto g = grad.blocks();
  auto m1 = m1_.blocks();
  auto m2 = m2_.blocks();
  for (std::size_t b = 0; b < Params::kBlockCount; ++b) {
    Vec& pv = *p[b];
    const Vec& gv = *g[b];
    Vec& a = *m1[b];
    Vec& v = *m2[b];
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (kind_ == OptimizerKind::kAdam) {
        a[i] = kBeta1 * a[i] + (1.0 - kBeta1) * gv[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gv[i] * gv[i];
        pv[i] -= lr_ * (a[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      } else {
        v[i] += gv[i] * gv[i];
        pv[i] -= lr_ * gv[i] / (std::sqrt(v[i]) + 1e-10);
      }
    }
  }
}

namespace {

// Central differences of the batch loss on a few random coordinates.
double spot_check(Model& m, const std::vector<Triple>& pos,
                  const std::vector<Triple>& neg, const Params& grad,
                  std::mt19937_64& rng) {
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  auto blocks = m.params.blocks();
  const auto gblocks = grad.blocks();
  for (std::size_t b = 0; b < Params::kBlockCount; ++b) {
    Vec& v = *blocks[b];
    if (v.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t i = pick(rng);
      const double g = (*gblocks[b])[i];
      if (g == 0.0) continue;
      const double saved = v[i];
      v[i] = saved + kStep;
      const double up = bce_loss(m, pos, neg);
      v[i] = saved - kStep;
      const double down = bce_loss(m, pos, neg);
      v[i] = saved;
      const double fd = (up - down) / (2.0 * kStep);
      worst = std::max(worst, std::abs(fd - g) / std::max(std::abs(fd), 1e-6));
    }
  }
  return worst;
}

}  // namespace

FitResult fit(Model& m, const TripleStore& store, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (store.train.empty()) throw Error(ErrorCode::kEmptySplit, "fit: training split is empty");
  if (store.entities.size() != m.num_entities || store.relations.size() != m.num_relations) {
    throw Error(ErrorCode::kConfigMismatch, "fit: model and store dictionaries differ in size");
  }

  FitResult result;
  std::mt19937_64 rng(cfg.seed);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, m.params);
  std::vector<std::size_t> order(store.train.size());
  std::iota(order.begin(), order.end(), 0);
  Params grad = m.params.zeros_like();
  std::vector<Triple> pos, neg;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Params last_good = m.params;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      pos.clear();
      neg.clear();
      for (std::size_t i = start; i < end; ++i) {
        const Triple& t = store.train[order[i]];
        pos.push_back(t);
        auto n = sample_negatives(t, cfg.neg_samples, m.num_entities, rng);
        neg.insert(neg.end(), n.begin(), n.end());
      }
      grad.fill(0.0);
      const double loss = loss_and_gradients(m, pos, neg, grad, cfg.workers());
      if (!std::isfinite(loss)) {
        m.params = last_good;
        throw Error(ErrorCode::kNumeric, "fit: loss diverged in epoch " + std::to_string(epoch + 1) +
                                             "; model restored to the last good state");
      }
      try {
        check_finite(grad, "gradient");
      } catch (const Error&) {
        m.params = last_good;
        throw;
      }
      if (cfg.grad_check && epoch == 0 && start == 0) {
        result.grad_check_error = spot_check(m, pos, neg, grad, rng);
      }
      if (!cfg.learn_margin) grad.delta[0] = 0.0;
      opt.step(m.params, grad);
      if (m.geometry == Geometry::kUltra) {
        for (std::size_t e = 0; e < m.num_entities; ++e) apply_time_guard(m.entity(e), m.sig);
      }
      epoch_loss += loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(order.size());
    try {
      check_finite(m.params, "parameter");
    } catch (const Error&) {
      m.params = last_good;
      throw;
    }
    result.loss_trace.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss, m);
  }
  return result;
}

}  // namespace ultra
