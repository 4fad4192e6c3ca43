// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails; the WN18RR run only reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "test_support.hpp"
#include "ultra/cli.hpp"
#include "ultra/eval.hpp"
#include "ultra/geometry.hpp"
#include "ultra/kgdata.hpp"
#include "ultra/model.hpp"
#include "ultra/operators.hpp"
#include "ultra/training.hpp"

using namespace ultra;
using testing_support::max_abs_diff;
using testing_support::random_free;
using testing_support::relative_error;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::vector<Signature> kOperatorSignatures = {
    {2, 2, 1.0}, {6, 2, 1.0}, {28, 4, 1.0}, {60, 4, 1.0}};

RelationParams random_relation(const Signature& sig, std::mt19937_64& rng, double boost = 2.0) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> mu(-boost, boost);
  RelationParams r = RelationParams::identity(sig);
  for (auto& v : r.theta) v = angle(rng);
  for (auto& v : r.phi) v = angle(rng);
  for (auto& v : r.mu) v = mu(rng);
  return r;
}

Outcome j_orthogonality() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (const Signature& sig : kOperatorSignatures) {
    for (int i = 0; i < 1000; ++i) {
      const RelationParams r = random_relation(sig, rng);
      worst = std::max(worst, j_orth_defect(as_dense(r, sig), sig));
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << "max defect " << worst << " over 4000 relations, " << secs << " s";
  return {worst <= 1e-9 && secs < 10.0, d.str()};
}

Outcome diffeomorphism() {
  std::mt19937_64 rng(2);
  double worst_defect = 0.0, worst_trip = 0.0;
  for (const Signature& sig : kOperatorSignatures) {
    for (int i = 0; i < 10000; ++i) {
      const double scale = std::pow(10.0, -2.0 + 3.0 * (i % 4) / 3.0);
      const Vec x = phi(random_free(sig, rng, scale), sig);
      worst_defect = std::max(worst_defect, manifold_defect(x, sig));
      worst_trip = std::max(worst_trip, max_abs_diff(psi_inv(psi(x, sig), sig), x));
    }
  }
  std::ostringstream d;
  d << "max defect " << worst_defect << ", max round-trip error " << worst_trip;
  return {worst_defect <= 1e-9 && worst_trip <= 1e-10, d.str()};
}

Outcome distance_axioms() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> tiny(0.0, 1e-9);
  bool identity = true, symmetric = true, nonneg = true, indiscernible = true;
  double min_arg = 2.0;
  std::size_t near_pairs = 0;
  for (const Signature& sig : {Signature{2, 2, 1.0}, Signature{6, 2, 0.5}, Signature{28, 4, 2.0}}) {
    for (int i = 0; i < 10000; ++i) {
      const Vec zx = random_free(sig, rng);
      Vec zy = random_free(sig, rng);
      if (i % 10 == 0) {
        zy = zx;  // a close pair exercises the indiscernibles check
        for (double& v : zy) v += tiny(rng);
      }
      const Vec x = phi(zx, sig), y = phi(zy, sig);
      identity &= dist_manhattan(x, x, sig) == 0.0;
      const double dxy = dist_manhattan(x, y, sig);
      symmetric &= dxy == dist_manhattan(y, x, sig);
      nonneg &= dxy >= 0.0;
      min_arg = std::min({min_arg, hyper_leg_argument(x, y, sig), hyper_leg_argument(y, x, sig)});
      if (dxy < 1e-7) {
        ++near_pairs;
        indiscernible &= max_abs_diff(x, y) < 1e-5;
      }
    }
  }
  std::ostringstream d;
  d << "identity " << identity << ", symmetry " << symmetric << ", nonnegative " << nonneg
    << ", min leg argument " << std::setprecision(17) << min_arg << ", indiscernibles "
    << indiscernible << " on " << near_pairs << " close pairs";
  return {identity && symmetric && nonneg && indiscernible && min_arg >= 1.0 - 1e-12 &&
              near_pairs > 0,
          d.str()};
}

Outcome hyperbolic_reduction() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (const Signature& sig : {Signature{1, 1, 1.0}, Signature{3, 1, 0.5}, Signature{10, 1, 2.0}}) {
    for (int i = 0; i < 10000; ++i) {
      Vec zx = random_free(sig, rng), zy = random_free(sig, rng);
      zx[sig.p] = std::abs(zx[sig.p]) + 1e-3;
      zy[sig.p] = std::abs(zy[sig.p]) + 1e-3;
      const Vec x = phi(zx, sig), y = phi(zy, sig);
      double inner = -x[sig.p] * y[sig.p];
      for (std::size_t k = 0; k < sig.p; ++k) inner += x[k] * y[k];
      const double lorentz = sig.alpha * std::acosh(std::max(1.0, -inner / (sig.alpha * sig.alpha)));
      // Skip pairs so close that acosh itself has no relative accuracy left.
      if (lorentz < 1e-4) continue;
      worst = std::max(worst, std::abs(dist_manhattan(x, y, sig) - lorentz) / lorentz);
    }
  }
  std::ostringstream d;
  d << "max relative error " << worst;
  return {worst <= 1e-8, d.str()};
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  Model m = init_model(Signature{2, 2, 1.0}, 5, 2, 2.0, 5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.4);
  for (double& v : m.params.entities) v += n(rng);
  for (double& v : m.params.biases) v = n(rng);
  for (double& v : m.params.mu) v = n(rng);
  const std::vector<Triple> pos{{0, 0, 1}, {1, 1, 2}, {3, 0, 4}, {2, 1, 0}};
  std::vector<Triple> neg;
  for (const Triple& t : pos) {
    auto k = sample_negatives(t, 3, 5, rng);
    neg.insert(neg.end(), k.begin(), k.end());
  }
  const Params grad = gradients(m, pos, neg);

  const double h = 1e-5;
  auto numeric = [&](Vec& block, std::size_t i) {
    const double keep = block[i];
    block[i] = keep + h;
    const double up = bce_loss(m, pos, neg);
    block[i] = keep - h;
    const double down = bce_loss(m, pos, neg);
    block[i] = keep;
    return (up - down) / (2 * h);
  };
  // Families: entity space, entity time, biases, rotations, reflections, boosts, margin.
  std::vector<std::pair<std::string, double>> errors;
  Vec as, ns, at, nt;
  for (std::size_t i = 0; i < m.params.entities.size(); ++i) {
    const bool space = i % 4 < 2;
    (space ? as : at).push_back(grad.entities[i]);
    (space ? ns : nt).push_back(numeric(m.params.entities, i));
  }
  errors.emplace_back("entity-space", relative_error(as, ns));
  errors.emplace_back("entity-time", relative_error(at, nt));
  for (std::size_t b = 1; b < Params::kBlockCount; ++b) {
    Vec& block = *m.params.blocks()[b];
    Vec num(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) num[i] = numeric(block, i);
    errors.emplace_back(Params::block_name(b), relative_error(*grad.blocks()[b], num));
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  bool ok = secs < 5.0;
  for (const auto& [name, err] : errors) {
    d << name << ' ' << err << ", ";
    ok &= err <= 1e-4;
  }
  d << secs << " s";
  return {ok, d.str()};
}

Outcome relational_patterns() {
  std::mt19937_64 rng(6);
  const Signature sig{6, 2, 1.0};
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> off_axis(0.2, 2.9);
  double symmetry = 0.0, reflection = 0.0, inversion = 0.0, composition = 0.0, anti_fix = 0.0;
  double anti_move = 1e300;
  for (int i = 0; i < 1000; ++i) {
    const Vec x = phi(random_free(sig, rng), sig);

    RelationParams sym = RelationParams::identity(sig);
    for (auto& a : sym.phi) a = coin(rng) ? 0.0 : -std::numbers::pi;
    symmetry = std::max(symmetry, max_abs_diff(relation_apply(sym, relation_apply(sym, x, sig), sig), x));

    RelationParams ref = random_relation(sig, rng);
    std::fill(ref.theta.begin(), ref.theta.end(), 0.0);
    std::fill(ref.mu.begin(), ref.mu.end(), 0.0);
    reflection = std::max(reflection, max_abs_diff(relation_apply(ref, relation_apply(ref, x, sig), sig), x));

    RelationParams anti = RelationParams::identity(sig);
    for (auto& a : anti.phi) a = -off_axis(rng);
    const Vec fx = relation_apply(anti, x, sig);
    anti_fix = std::max(anti_fix, max_abs_diff(relation_apply(anti, fx, sig), x));
    Vec diff(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = fx[k] - x[k];
    double nd = 0.0;
    for (double v : diff) nd += v * v;
    anti_move = std::min(anti_move, std::sqrt(nd));

    // Inversion and composition hold for the rotation-only operator: an
    // angle-zero reflection is diag(1, -1), not the identity.
    RelationParams r1 = random_relation(sig, rng), r2 = r1, r3 = random_relation(sig, rng);
    for (auto* r : {&r1, &r2, &r3}) std::fill(r->mu.begin(), r->mu.end(), 0.0);
    for (std::size_t k = 0; k < r1.theta.size(); ++k) r2.theta[k] = -r1.theta[k];
    const auto rot = OperatorKind::kRot;
    inversion = std::max(inversion,
                         max_abs_diff(relation_apply(r2, relation_apply(r1, x, sig, rot), sig, rot), x));
    RelationParams sum = r1;
    for (std::size_t k = 0; k < sum.theta.size(); ++k)
      sum.theta[k] = std::remainder(r2.theta[k] + r3.theta[k], 2 * std::numbers::pi);
    composition = std::max(
        composition, max_abs_diff(relation_apply(sum, x, sig, rot),
                                  relation_apply(r2, relation_apply(r3, x, sig, rot), sig, rot)));
  }
  std::ostringstream d;
  d << "symmetry " << symmetry << ", reflection involution " << reflection << ", inversion "
    << inversion << ", composition " << composition << ", anti-symmetry fix " << anti_fix
    << " min move " << anti_move;
  return {symmetry <= 1e-9 && reflection <= 1e-9 && inversion <= 1e-9 && composition <= 1e-9 &&
              anti_fix <= 1e-9 && anti_move > 1e-3,
          d.str()};
}

double log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

Outcome complexity() {
  std::vector<double> log_d, log_ops, log_ns;
  bool count_ok = true;
  std::ostringstream d;
  d << std::setprecision(4);
  for (std::size_t dim : {8u, 32u, 128u, 512u}) {
    const Signature sig{dim - 4, 4, 1.0};
    count_ok &= relation_param_count(sig) == dim + 4;
    std::mt19937_64 rng(dim);
    const RelationParams r = random_relation(sig, rng);
    const Vec x = phi(random_free(sig, rng), sig);
    Vec out(dim);
    OpCount ops;
    relation_apply(r, x, sig, out, OperatorKind::kRotRef, &ops);
    log_d.push_back(std::log(static_cast<double>(dim)));
    log_ops.push_back(std::log(static_cast<double>(ops.mul + ops.transcendental)));

    const int reps = static_cast<int>(400000 / dim);
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) relation_apply(r, x, sig, out, OperatorKind::kRotRef);
    const double ns = 1e9 * seconds_since(start) / reps;
    log_ns.push_back(std::log(ns));
    d << "d=" << dim << " " << ns << " ns; ";
  }
  const double slope = log_slope(log_d, log_ops);
  d << "wall-time exponent " << log_slope(log_d, log_ns) << " (informational), operation-count exponent "
    << slope << ", parameter count d+q " << count_ok;
  return {std::abs(slope - 1.0) <= 0.15 && count_ok, d.str()};
}

// Desk-scale run settings, picked by mean valid+test MRR over synthetic seeds
// 1..8 so the gated seed-0 split never influenced the choice.
struct DeskRun {
  std::size_t epochs = 200;
  std::size_t batch = 4;
  std::size_t neg = 5;
  double lr = 0.05;
  double alpha = 2.0;
  double margin = 0.0;
  std::uint64_t seed = 0;
};

double desk_mrr(Geometry geometry, const DeskRun& run, double* seconds = nullptr) {
  TripleStore store = make_synthetic({3, 3, 0, run.seed});
  augment_inverse(store);
  Model m = init_model(Signature{6, 2, run.alpha}, store.entities.size(), store.relations.size(),
                       run.margin, run.seed, {geometry, OperatorKind::kRotRef});
  TrainConfig cfg;
  cfg.epochs = run.epochs;
  cfg.batch_size = run.batch;
  cfg.neg_samples = run.neg;
  cfg.learning_rate = run.lr;
  cfg.seed = run.seed;
  cfg.deterministic = true;
  const auto start = Clock::now();
  fit(m, store, cfg);
  const double mrr = evaluate(m, store, Split::kTest).total.mrr;
  if (seconds) *seconds = seconds_since(start);
  return mrr;
}

Outcome desk_learning() {
  const DeskRun run;
  double secs = 0.0;
  const double ultra = desk_mrr(Geometry::kUltra, run, &secs);
  const double euclid = desk_mrr(Geometry::kEuclidean, run);
  // Context only: the same settings on other synthetic splits.
  double other_ultra = 0.0, other_euclid = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    DeskRun r = run;
    r.seed = seed;
    other_ultra += desk_mrr(Geometry::kUltra, r) / 8.0;
    other_euclid += desk_mrr(Geometry::kEuclidean, r) / 8.0;
  }
  std::ostringstream d;
  d << std::setprecision(4) << "seed " << run.seed << " test MRR " << ultra
    << " vs Euclidean rotation baseline " << euclid << ", " << secs
    << " s; seeds 1-8 mean test MRR " << other_ultra << " vs " << other_euclid;
  return {ultra >= 0.6 && ultra >= euclid && secs < 120.0, d.str()};
}

Outcome eval_correctness() {
  std::mt19937_64 rng(9);
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t n = 2; n <= 20; ++n) {
    TripleStore s;
    for (std::size_t e = 0; e < n; ++e) s.entities.add("e" + std::to_string(e));
    s.relations.add("r0");
    s.relations.add("r1");
    std::uniform_int_distribution<std::size_t> ent(0, n - 1), rel(0, 1), split(0, 9);
    for (std::size_t i = 0; i < 4 * n; ++i) {
      const Triple t{ent(rng), rel(rng), ent(rng)};
      const auto w = split(rng);
      (w < 7 ? s.train : w < 8 ? s.valid : s.test).push_back(t);
    }
    Model m = init_model(Signature{2, 2, 1.0}, n, 2, 1.0, n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : m.params.entities) v += g(rng);
    if (n % 2 == 0) {
      // Rounded coordinates with the rotation-only operator at zero angles: exact ties.
      for (double& v : m.params.entities) v = std::round(v);
      std::fill(m.params.theta.begin(), m.params.theta.end(), 0.0);
      std::fill(m.params.mu.begin(), m.params.mu.end(), 0.0);
      m.op = OperatorKind::kRot;
    }
    for (const auto* part : {&s.train, &s.valid, &s.test})
      for (const Triple& t : *part) {
        std::vector<std::pair<double, bool>> rows;
        for (std::size_t e = 0; e < n; ++e) {
          bool known = false;
          for (const auto* p2 : {&s.train, &s.valid, &s.test})
            for (const Triple& k : *p2)
              known |= e != t.tail && k.head == t.head && k.rel == t.rel && k.tail == e;
          if (!known) rows.emplace_back(score(m, t.head, t.rel, e), e == t.tail);
        }
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
          return a.first != b.first ? a.first > b.first : (!a.second && b.second);
        });
        std::size_t oracle = 0;
        for (std::size_t i = 0; i < rows.size(); ++i)
          if (rows[i].second) oracle = i + 1;
        ++checked;
        if (filtered_rank(m, s, t) != oracle) ++mismatches;
      }
  }
  const double fixture = metrics_from_ranks({1, 2, 4}).mrr;
  std::ostringstream d;
  d << std::setprecision(12) << checked << " triples, " << mismatches
    << " oracle mismatches, fixture MRR " << fixture;
  return {mismatches == 0 && std::abs(fixture - 0.5833333333333333) <= 1e-10, d.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ukge_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const TripleStore s = make_synthetic({4, 3, 0, 3});
  {
    std::ofstream f(dir / "train.tsv");
    for (const Triple& t : s.train)
      f << s.entities.name(t.head) << '\t' << s.relations.name(t.rel) << '\t'
        << s.entities.name(t.tail) << '\n';
  }
  std::ostringstream sink;
  auto train = [&](const std::string& name) {
    return run_cli({"train", "--train", (dir / "train.tsv").string(), "--dim", "8",
                    "--time-dims", "2", "--epochs", "10", "--batch", "16", "--neg", "8",
                    "--seed", "42", "--deterministic", "--threads", "4", "--out",
                    (dir / name).string()},
                   sink, sink);
  };
  const int a = train("a.ukge"), b = train("b.ukge");
  const bool same_model = slurp(dir / "a.ukge") == slurp(dir / "b.ukge");
  const bool same_trace = slurp(dir / "a.ukge.loss.csv") == slurp(dir / "b.ukge.loss.csv");
  const std::size_t bytes = slurp(dir / "a.ukge").size();
  fs::remove_all(dir);
  std::ostringstream d;
  d << "exit codes " << a << "/" << b << ", checkpoints identical " << same_model << " ("
    << bytes << " bytes), traces identical " << same_trace;
  return {a == 0 && b == 0 && same_model && same_trace && bytes > 0, d.str()};
}

// Not gating: reported only when WN18RR_DIR points at train.txt/valid.txt/test.txt.
Outcome wn18rr(bool& ran) {
  const char* dir = std::getenv("WN18RR_DIR");
  if (dir == nullptr) return {false, "WN18RR_DIR not set"};
  ran = true;
  const std::filesystem::path root(dir);
  TripleStore store = load_triples((root / "train.txt").string(), (root / "valid.txt").string(),
                                   (root / "test.txt").string());
  augment_inverse(store);
  Model m = init_model(Signature{28, 4, 1.0}, store.entities.size(), store.relations.size(), 6.0, 0);
  TrainConfig cfg;
  cfg.epochs = std::getenv("WN18RR_EPOCHS") ? std::stoul(std::getenv("WN18RR_EPOCHS")) : 100;
  cfg.batch_size = 500;
  cfg.neg_samples = 50;
  cfg.learning_rate = 5e-3;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  fit(m, store, cfg);
  EvalOptions opts;
  opts.threads = cfg.threads;
  const double mrr = evaluate(m, store, Split::kTest, opts).total.mrr;
  std::ostringstream d;
  d << "test MRR " << mrr << " after " << cfg.epochs << " epochs (reference band >= 0.40)";
  return {mrr >= 0.40, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "J-orthogonality of relation operators", j_orthogonality},
      {2, "diffeomorphism lands on the manifold", diffeomorphism},
      {3, "distance axioms", distance_axioms},
      {4, "q=1 hyperbolic reduction", hyperbolic_reduction},
      {5, "gradient oracle", gradient_oracle},
      {6, "relational patterns", relational_patterns},
      {7, "linear complexity", complexity},
      {8, "desk-scale learning", desk_learning},
      {9, "evaluation correctness", eval_correctness},
      {10, "determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << o.detail
              << std::endl;
  }
  bool ran = false;
  Outcome wn;
  try {
    wn = wn18rr(ran);
  } catch (const std::exception& e) {
    ran = true;
    wn = {false, std::string("exception: ") + e.what()};
  }
  std::cout << (ran ? (wn.pass ? "PASS" : "FAIL") : "SKIP") << "  [11] WN18RR extended run (not gating): "
            << wn.detail << std::endl;
  std::cout << (failures == 0 ? "all gating criteria passed" : "gating criteria failed: ")
            << (failures == 0 ? "" : std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
