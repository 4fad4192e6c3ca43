#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

namespace ultra {

struct Triple {
  std::size_t head = 0;
  std::size_t rel = 0;
  std::size_t tail = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

// Hex FNV-1a digest of names joined by newlines.
std::string names_digest(const std::vector<std::string>& names);

// Dense bidirectional name <-> id mapping. Ids are assigned in insertion order.
class Dictionary {
 public:
  std::size_t add(const std::string& name);
  std::size_t id(const std::string& name) const;  // throws kLookup
  bool contains(const std::string& name) const;
  const std::string& name(std::size_t id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::string digest() const { return names_digest(names_); }

  // Up to `limit` dictionary names closest to `query` by edit distance.
  std::vector<std::string> nearest(const std::string& query, std::size_t limit = 3) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

enum class Split { kTrain, kValid, kTest };

Split parse_split(const std::string& name);

struct TripleStore {
  Dictionary entities;
  Dictionary relations;  // base relations first, then their inverses
  std::size_t base_relation_count = 0;
  std::vector<Triple> train, valid, test;
  bool augmented = false;
  // Entities that never occur in a training triple. Kept, but reported.
  std::vector<std::size_t> unseen_in_train;

  const std::vector<Triple>& split(Split s) const;
  std::size_t inverse_of(std::size_t rel) const;
};

inline const std::string kInverseSuffix = "^-1";

struct NamedStream {
  std::string label;  // used in error messages
  std::istream* in = nullptr;
};

// Rows are head<TAB>relation<TAB>tail. Dictionaries cover train, valid and
// test in that order of first appearance. valid/test may be null.
TripleStore parse_triples(NamedStream train, NamedStream valid, NamedStream test);

// valid_path / test_path may be empty.
TripleStore load_triples(const std::string& train_path,
                         const std::string& valid_path,
                         const std::string& test_path);

// Adds r^-1 for every relation and (t, r^-1, h) for every triple in every
// split. A second call throws kState and leaves the store untouched.
void augment_inverse(TripleStore& store);

// Fraction of ordered reachable pairs (u, v) in the relation's directed graph
// for which v does not reach u. Edges come from all splits.
double krackhardt_score(const TripleStore& store, std::size_t rel);
double krackhardt_score(std::size_t node_count,
                        const std::vector<std::pair<std::size_t, std::size_t>>& edges);

struct SyntheticSpec {
  std::size_t levels = 3;
  std::size_t branching = 3;
  std::size_t cycle_size = 0;  // 0: ring over all leaves
  std::uint64_t seed = 0;
};

// Balanced tree under "isa" (child isa parent) plus a ring under "next" over
// leaves, split 80/10/10. Held-out triples never strip an entity of its last
// training edge.
TripleStore make_synthetic(const SyntheticSpec& spec);

struct RelationStats {
  std::string name;
  std::size_t count = 0;
  double khs = 0.0;
};

std::vector<RelationStats> relation_stats(const TripleStore& store);

}  // namespace ultra
