#include "ultra/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <thread>

#include "ultra/error.hpp"

namespace ultra {

FilterIndex::FilterIndex(const TripleStore& store, const std::vector<Split>& splits) {
  for (Split s : splits)
    for (const Triple& t : store.split(s)) add(t);
}

void FilterIndex::add(const Triple& t) {
  auto& v = tails_[key(t.head, t.rel)];
  if (std::find(v.begin(), v.end(), t.tail) == v.end()) v.push_back(t.tail);
}

bool FilterIndex::contains(std::size_t head, std::size_t rel, std::size_t tail) const {
  const auto* v = tails(head, rel);
  return v != nullptr && std::find(v->begin(), v->end(), tail) != v->end();
}

const std::vector<std::size_t>* FilterIndex::tails(std::size_t head, std::size_t rel) const {
  auto it = tails_.find(key(head, rel));
  return it == tails_.end() ? nullptr : &it->second;
}

std::size_t rank_from_scores(std::span<const double> scores, std::size_t true_tail,
                             const std::vector<std::size_t>* filtered) {
  const double target = scores[true_tail];
  if (std::isnan(target)) return scores.size();
  std::size_t better = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e != true_tail && !(scores[e] < target)) ++better;
  }
  if (filtered != nullptr) {
    for (std::size_t e : *filtered) {
      if (e != true_tail && !(scores[e] < target)) --better;
    }
  }
  return better + 1;
}

std::size_t filtered_rank(const Model& m, const Vec& embedded, const FilterIndex& filter,
                          const Triple& t) {
  m.check_entity(t.head);
  m.check_entity(t.tail);
  m.check_relation(t.rel);
  Vec scores(m.num_entities);
  score_all_tails(m, embedded, t.head, t.rel, scores);
  return rank_from_scores(scores, t.tail, filter.tails(t.head, t.rel));
}

std::size_t filtered_rank(const Model& m, const TripleStore& store, const Triple& t) {
  const FilterIndex filter(store, {Split::kTrain, Split::kValid, Split::kTest});
  return filtered_rank(m, embed_all(m), filter, t);
}

Metrics metrics_from_ranks(const std::vector<std::size_t>& ranks) {
  Metrics out;
  out.count = ranks.size();
  if (ranks.empty()) return out;
  for (std::size_t r : ranks) {
    out.mrr += 1.0 / static_cast<double>(r);
    out.hits1 += r <= 1 ? 1.0 : 0.0;
    out.hits3 += r <= 3 ? 1.0 : 0.0;
    out.hits10 += r <= 10 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  out.mrr /= n;
  out.hits1 /= n;
  out.hits3 /= n;
  out.hits10 /= n;
  return out;
}

EvalReport report_from_ranks(const std::vector<std::size_t>& ranks,
                             const std::vector<std::size_t>& relations) {
  EvalReport report;
  report.ranks = ranks;
  report.total = metrics_from_ranks(ranks);
  std::map<std::size_t, std::vector<std::size_t>> by_rel;
  for (std::size_t i = 0; i < ranks.size(); ++i) by_rel[relations[i]].push_back(ranks[i]);
  for (const auto& [rel, rs] : by_rel) report.per_relation.push_back({rel, metrics_from_ranks(rs)});
  return report;
}

EvalReport evaluate(const Model& m, const TripleStore& store, Split split,
                    const EvalOptions& options) {
  const auto& triples = store.split(split);
  if (triples.empty()) throw Error(ErrorCode::kEmptySplit, "evaluate: split is empty");
  const FilterIndex filter(store, options.filter);
  const Vec embedded = embed_all(m);

  std::vector<std::size_t> ranks(triples.size()), rels(triples.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    Vec scores(m.num_entities);
    for (std::size_t i = begin; i < end; ++i) {
      const Triple& t = triples[i];
      m.check_entity(t.head);
      m.check_entity(t.tail);
      m.check_relation(t.rel);
      score_all_tails(m, embedded, t.head, t.rel, scores);
      ranks[i] = rank_from_scores(scores, t.tail, filter.tails(t.head, t.rel));
      rels[i] = t.rel;
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, triples.size());
  if (workers == 1) {
    work(0, triples.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (triples.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(triples.size(), w * chunk);
      pool.emplace_back(work, begin, std::min(triples.size(), begin + chunk));
    }
    for (auto& t : pool) t.join();
  }
  return report_from_ranks(ranks, rels);
}

void write_report_csv(std::ostream& out, const EvalReport& report,
                      const Dictionary& relations) {
  out << "relation,count,mrr,hits@1,hits@3,hits@10\n";
  out << std::setprecision(10);
  auto row = [&out](const std::string& name, const Metrics& mt) {
    out << name << ',' << mt.count << ',' << mt.mrr << ',' << mt.hits1 << ','
        << mt.hits3 << ',' << mt.hits10 << '\n';
  };
  for (const auto& r : report.per_relation) row(relations.name(r.rel), r.metrics);
  row("TOTAL", report.total);
}

void print_report(std::ostream& out, const EvalReport& report,
                  const Dictionary& relations, bool per_relation) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(4);
  auto row = [&out](const std::string& name, const Metrics& mt) {
    out << std::left << std::setw(32) << name << std::right << std::setw(8) << mt.count
        << std::setw(9) << mt.mrr << std::setw(9) << mt.hits1 << std::setw(9) << mt.hits3
        << std::setw(9) << mt.hits10 << '\n';
  };
  out << std::left << std::setw(32) << "relation" << std::right << std::setw(8) << "count"
      << std::setw(9) << "MRR" << std::setw(9) << "H@1" << std::setw(9) << "H@3"
      << std::setw(9) << "H@10" << '\n';
  if (per_relation) {
    for (const auto& r : report.per_relation) row(relations.name(r.rel), r.metrics);
  }
  row("TOTAL", report.total);
  out.flags(flags);
}

}  // namespace ultra
