#include "ultra/kgdata.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

#include "ultra/error.hpp"

namespace ultra {

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  std::size_t h = t.head;
  h = h * 1000003u ^ t.rel;
  h = h * 1000003u ^ t.tail;
  return h;
}

std::size_t Dictionary::add(const std::string& name) {
  auto [it, inserted] = ids_.emplace(name, names_.size());
  if (inserted) names_.push_back(name);
  return it->second;
}

std::size_t Dictionary::id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw Error(ErrorCode::kLookup, "unknown name '" + name + "'");
  return it->second;
}

bool Dictionary::contains(const std::string& name) const { return ids_.count(name) != 0; }

const std::string& Dictionary::name(std::size_t id) const {
  if (id >= names_.size()) {
    throw Error(ErrorCode::kLookup, "id " + std::to_string(id) + " out of range");
  }
  return names_[id];
}

std::string names_digest(const std::vector<std::string>& names) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& n : names) {
    for (unsigned char c : n) mix(c);
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct RawTriple {
  std::string head, rel, tail;
};

std::vector<RawTriple> read_rows(const NamedStream& src) {
  std::vector<RawTriple> rows;
  if (src.in == nullptr) return rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(*src.in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParse, src.label + ":" + std::to_string(line_no) +
                                         ": expected 3 tab-separated fields, got " +
                                         std::to_string(fields.size()));
    }
    rows.push_back({fields[0], fields[1], fields[2]});
  }
  return rows;
}

std::vector<Triple> intern(const std::vector<RawTriple>& rows, TripleStore& store) {
  std::vector<Triple> out;
  std::unordered_set<Triple, TripleHash> seen;
  for (const auto& r : rows) {
    Triple t{store.entities.add(r.head), store.relations.add(r.rel),
             store.entities.add(r.tail)};
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

void find_unseen(TripleStore& store) {
  std::vector<bool> seen(store.entities.size(), false);
  for (const auto& t : store.train) seen[t.head] = seen[t.tail] = true;
  store.unseen_in_train.clear();
  for (std::size_t e = 0; e < seen.size(); ++e)
    if (!seen[e]) store.unseen_in_train.push_back(e);
}

}  // namespace

std::vector<std::string> Dictionary::nearest(const std::string& query,
                                             std::size_t limit) const {
  std::vector<std::pair<std::size_t, std::size_t>> scored;
  scored.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i)
    scored.emplace_back(edit_distance(query, names_[i]), i);
  const std::size_t n = std::min(limit, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + n, scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(names_[scored[i].second]);
  return out;
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kConfig, "unknown split '" + name + "'");
}

const std::vector<Triple>& TripleStore::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kValid: return valid;
    case Split::kTest: return test;
  }
  return train;
}

std::size_t TripleStore::inverse_of(std::size_t rel) const {
  if (!augmented) throw Error(ErrorCode::kState, "store is not augmented");
  return rel < base_relation_count ? rel + base_relation_count
                                   : rel - base_relation_count;
}

TripleStore parse_triples(NamedStream train, NamedStream valid, NamedStream test) {
  const auto train_rows = read_rows(train);
  const auto valid_rows = read_rows(valid);
  const auto test_rows = read_rows(test);
  if (train_rows.empty()) {
    throw Error(ErrorCode::kEmptySplit, train.label + ": training split is empty");
  }
  TripleStore store;
  store.train = intern(train_rows, store);
  store.valid = intern(valid_rows, store);
  store.test = intern(test_rows, store);
  store.base_relation_count = store.relations.size();
  find_unseen(store);
  return store;
}

TripleStore load_triples(const std::string& train_path,
                         const std::string& valid_path,
                         const std::string& test_path) {
  auto open = [](const std::string& path, std::ifstream& f) -> NamedStream {
    if (path.empty()) return {path, nullptr};
    f.open(path);
    if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
    return {path, &f};
  };
  std::ifstream ftrain, fvalid, ftest;
  auto a = open(train_path, ftrain);
  auto b = open(valid_path, fvalid);
  auto c = open(test_path, ftest);
  return parse_triples(a, b, c);
}

void augment_inverse(TripleStore& store) {
  if (store.augmented) throw Error(ErrorCode::kState, "store is already augmented");
  const std::size_t base = store.relations.size();
  for (std::size_t r = 0; r < base; ++r) {
    store.relations.add(store.relations.name(r) + kInverseSuffix);
  }
  if (store.relations.size() != 2 * base) {
    throw Error(ErrorCode::kState, "inverse relation names collide with base relations");
  }
  auto extend = [base](std::vector<Triple>& split) {
    const std::size_t n = split.size();
    split.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Triple t = split[i];
      split.push_back({t.tail, t.rel + base, t.head});
    }
  };
  extend(store.train);
  extend(store.valid);
  extend(store.test);
  store.base_relation_count = base;
  store.augmented = true;
}

double krackhardt_score(std::size_t node_count,
                        const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (edges.empty()) throw Error(ErrorCode::kUndefinedMetric, "krackhardt score of an empty graph");
  std::vector<std::vector<std::size_t>> adj(node_count);
  for (auto [u, v] : edges) adj[u].push_back(v);

  // reach[u] holds every v != u reachable from u.
  std::vector<std::vector<bool>> reach(node_count, std::vector<bool>(node_count, false));
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < node_count; ++s) {
    if (adj[s].empty()) continue;
    auto& seen = reach[s];
    queue.assign(1, s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (std::size_t v : adj[queue[head]]) {
        if (!seen[v]) {
          seen[v] = true;
          queue.push_back(v);
        }
      }
    }
    seen[s] = false;
  }
  std::size_t reachable = 0, one_way = 0;
  for (std::size_t u = 0; u < node_count; ++u)
    for (std::size_t v = 0; v < node_count; ++v) {
      if (!reach[u][v]) continue;
      ++reachable;
      if (!reach[v][u]) ++one_way;
    }
  if (reachable == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "krackhardt score: no reachable pairs");
  }
  return static_cast<double>(one_way) / static_cast<double>(reachable);
}

double krackhardt_score(const TripleStore& store, std::size_t rel) {
  if (rel >= store.relations.size()) {
    throw Error(ErrorCode::kLookup, "relation id " + std::to_string(rel) + " out of range");
  }
  // Compact the relation's node set so the reachability table stays small.
  std::unordered_map<std::size_t, std::size_t> local;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto node = [&local](std::size_t e) {
    return local.emplace(e, local.size()).first->second;
  };
  for (const auto* split : {&store.train, &store.valid, &store.test})
    for (const auto& t : *split)
      if (t.rel == rel) {
        const std::size_t u = node(t.head);
        const std::size_t v = node(t.tail);
        edges.emplace_back(u, v);
      }
  if (edges.empty()) {
    throw Error(ErrorCode::kUndefinedMetric,
                "relation '" + store.relations.name(rel) + "' has no edges");
  }
  return krackhardt_score(local.size(), edges);
}

TripleStore make_synthetic(const SyntheticSpec& spec) {
  if (spec.levels < 2) throw Error(ErrorCode::kConfig, "synthetic tree needs at least 2 levels");
  if (spec.branching < 1) throw Error(ErrorCode::kConfig, "synthetic tree needs branching >= 1");

  TripleStore store;
  const std::size_t isa = store.relations.add("isa");
  const std::size_t next = store.relations.add("next");

  std::vector<Triple> edges;
  std::vector<std::size_t> level{store.entities.add("n0")};
  for (std::size_t depth = 1; depth < spec.levels; ++depth) {
    std::vector<std::size_t> children;
    for (std::size_t parent : level)
      for (std::size_t b = 0; b < spec.branching; ++b) {
        const std::size_t child =
            store.entities.add("n" + std::to_string(store.entities.size()));
        edges.push_back({child, isa, parent});
        children.push_back(child);
      }
    level = std::move(children);
  }
  const std::size_t ring = spec.cycle_size == 0 ? level.size() : spec.cycle_size;
  if (ring > level.size()) throw Error(ErrorCode::kConfig, "cycle larger than the leaf count");
  if (ring >= 2) {
    for (std::size_t i = 0; i < ring; ++i) edges.push_back({level[i], next, level[(i + 1) % ring]});
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  const auto quota = [&](double frac) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * edges.size())));
  };
  const std::size_t n_test = quota(0.1), n_valid = quota(0.1);

  std::vector<std::size_t> degree(store.entities.size(), 0);
  for (const auto& e : edges) ++degree[e.head], ++degree[e.tail];
  std::vector<int> assigned(edges.size(), 0);  // 0 train, 1 valid, 2 test
  std::size_t taken_test = 0, taken_valid = 0;
  for (std::size_t idx : order) {
    const Triple& e = edges[idx];
    if (degree[e.head] < 2 || degree[e.tail] < 2 || e.head == e.tail) continue;
    if (taken_test < n_test) {
      assigned[idx] = 2;
      ++taken_test;
    } else if (taken_valid < n_valid) {
      assigned[idx] = 1;
      ++taken_valid;
    } else {
      break;
    }
    --degree[e.head];
    --degree[e.tail];
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    (assigned[i] == 0 ? store.train : assigned[i] == 1 ? store.valid : store.test)
        .push_back(edges[i]);
  }
  store.base_relation_count = store.relations.size();
  find_unseen(store);
  return store;
}

std::vector<RelationStats> relation_stats(const TripleStore& store) {
  std::vector<RelationStats> out;
  const std::size_t n = store.augmented ? store.base_relation_count : store.relations.size();
  for (std::size_t r = 0; r < n; ++r) {
    RelationStats s;
    s.name = store.relations.name(r);
    for (const auto* split : {&store.train, &store.valid, &store.test})
      for (const auto& t : *split)
        if (t.rel == r) ++s.count;
    s.khs = std::numeric_limits<double>::quiet_NaN();
    try {
      s.khs = krackhardt_score(store, r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedMetric) throw;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace ultra
