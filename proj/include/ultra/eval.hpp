#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "ultra/kgdata.hpp"
#include "ultra/model.hpp"

namespace ultra {

// Known tails per (head, relation), used to filter competing true triples.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(const TripleStore& store, const std::vector<Split>& splits);

  void add(const Triple& t);
  bool contains(std::size_t head, std::size_t rel, std::size_t tail) const;
  const std::vector<std::size_t>* tails(std::size_t head, std::size_t rel) const;

 private:
  static std::uint64_t key(std::size_t head, std::size_t rel) {
    return (static_cast<std::uint64_t>(head) << 32) ^ static_cast<std::uint64_t>(rel);
  }
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> tails_;
};

// 1 + number of candidates e != t, not filtered, with score(e) >= score(t).
// Ties count against the true entity.
std::size_t rank_from_scores(std::span<const double> scores, std::size_t true_tail,
                             const std::vector<std::size_t>* filtered);

std::size_t filtered_rank(const Model& m, const Vec& embedded, const FilterIndex& filter,
                          const Triple& t);
// Filters with train, valid and test.
std::size_t filtered_rank(const Model& m, const TripleStore& store, const Triple& t);

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
  std::size_t count = 0;
};

struct RelationMetrics {
  std::size_t rel = 0;
  Metrics metrics;
};

struct EvalReport {
  Metrics total;
  std::vector<RelationMetrics> per_relation;  // sorted by relation id
  std::vector<std::size_t> ranks;             // in split order
};

Metrics metrics_from_ranks(const std::vector<std::size_t>& ranks);
EvalReport report_from_ranks(const std::vector<std::size_t>& ranks,
                             const std::vector<std::size_t>& relations);

struct EvalOptions {
  std::vector<Split> filter = {Split::kTrain, Split::kValid, Split::kTest};
  std::size_t threads = 1;
};

// Tail prediction over every triple of the split. On an augmented store the
// split already holds the inverse triples, which covers head prediction.
EvalReport evaluate(const Model& m, const TripleStore& store, Split split,
                    const EvalOptions& options = {});

// One row per relation plus a TOTAL row.
void write_report_csv(std::ostream& out, const EvalReport& report,
                      const Dictionary& relations);
void print_report(std::ostream& out, const EvalReport& report,
                  const Dictionary& relations, bool per_relation);

}  // namespace ultra
