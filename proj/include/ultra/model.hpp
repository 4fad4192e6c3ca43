#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ultra/geometry.hpp"
#include "ultra/operators.hpp"

namespace ultra {

// kEuclidean is the comparison baseline: raw R^d entities, Givens operators
// without the hyperbolic rotation, squared Euclidean distance.
enum class Geometry { kUltra, kEuclidean };

Geometry parse_geometry(const std::string& name);
std::string to_string(Geometry g);

// All trainable parameters, in checkpoint order. Gradients and optimizer
// moments share this layout.
struct Params {
  Vec entities;  // N_e rows of d: space part then time part
  Vec biases;    // N_e
  Vec theta;     // N_r rows of d/2
  Vec phi;       // N_r rows of d/2
  Vec mu;        // N_r rows of q
  Vec delta;     // 1

  static constexpr std::size_t kBlockCount = 6;
  std::array<Vec*, kBlockCount> blocks() {
    return {&entities, &biases, &theta, &phi, &mu, &delta};
  }
  std::array<const Vec*, kBlockCount> blocks() const {
    return {&entities, &biases, &theta, &phi, &mu, &delta};
  }
  static const char* block_name(std::size_t i);

  Params zeros_like() const;
  std::size_t size() const;
  void fill(double v);
};

struct Model {
  Signature sig;
  Geometry geometry = Geometry::kUltra;
  OperatorKind op = OperatorKind::kRotRef;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  Params params;

  std::span<const double> entity(std::size_t e) const;
  std::span<double> entity(std::size_t e);
  RelationRef relation(std::size_t r) const;
  double delta() const { return params.delta[0]; }

  void check_entity(std::size_t e) const;
  void check_relation(std::size_t r) const;
};

struct InitOptions {
  Geometry geometry = Geometry::kUltra;
  OperatorKind op = OperatorKind::kRotRef;
};

Model init_model(const Signature& sig, std::size_t num_entities,
                 std::size_t num_relations, double delta, std::uint64_t seed,
                 InitOptions options = {});

// Bitwise comparison of configuration and every parameter.
bool bitwise_equal(const Model& a, const Model& b);

// Entity coordinates as they enter the distance: phi(e) on the manifold, or
// the raw vector for the Euclidean baseline.
void embed_entity(const Model& m, std::size_t e, std::span<double> out);
Vec embed_all(const Model& m);

// Image of an embedded head under relation r.
void transform_head(const Model& m, std::size_t r, std::span<const double> head,
                    std::span<double> out);

double distance(const Model& m, std::span<const double> a, std::span<const double> b);

// s(h, r, t) = -d(f_r(e_h), e_t)^2 + b_h + b_t + delta
double score(const Model& m, std::size_t h, std::size_t r, std::size_t t);

// Accumulates weight * ds/dparams into grad and returns s(h, r, t).
double score_backward(const Model& m, std::size_t h, std::size_t r, std::size_t t,
                      double weight, Params& grad);

// Scores of (h, r, e) for every entity e, given embed_all(m).
void score_all_tails(const Model& m, const Vec& embedded, std::size_t h,
                     std::size_t r, std::span<double> out);

// Dictionaries stored alongside the parameters so a checkpoint is
// self-describing.
struct CheckpointMeta {
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::size_t base_relation_count = 0;
  bool augmented = false;
};

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: "UKGE", u32 version, u64 header length, JSON header, then the
// parameter blocks as little-endian float64 in Params order.
void save_checkpoint(const Model& m, const CheckpointMeta& meta, const std::string& path);
std::string serialize_checkpoint(const Model& m, const CheckpointMeta& meta);

Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<Signature>& expected = std::nullopt);
Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::optional<Signature>& expected = std::nullopt);

}  // namespace ultra
