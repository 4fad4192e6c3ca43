#include "ultra/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "ultra/eval.hpp"
#include "ultra/kgdata.hpp"
#include "ultra/model.hpp"
#include "ultra/run_config.hpp"
#include "ultra/training.hpp"

namespace ultra {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLookup: return kExitLookup;
    case ErrorCode::kNumeric: return kExitNumeric;
    default: return kExitInput;
  }
}

namespace {

CheckpointMeta meta_from(const TripleStore& store) {
  return {store.entities.names(), store.relations.names(), store.base_relation_count,
          store.augmented};
}

Dictionary dictionary_from(const std::vector<std::string>& names) {
  Dictionary d;
  for (const auto& n : names) d.add(n);
  return d;
}

std::size_t lookup(const Dictionary& dict, const std::string& name, const char* what) {
  if (dict.contains(name)) return dict.id(name);
  std::string msg = std::string("unknown ") + what + " '" + name + "'";
  const auto near = dict.nearest(name);
  if (!near.empty()) {
    msg += "; nearest matches:";
    for (const auto& n : near) msg += " '" + n + "'";
  }
  throw Error(ErrorCode::kLookup, msg);
}

void write_trace(const std::string& path, const std::vector<double>& trace) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  f << "epoch,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) f << (i + 1) << ',' << trace[i] << '\n';
}

int cmd_stats(const std::string& train, const std::string& valid, const std::string& test,
              const std::string& csv_path, std::ostream& out) {
  const TripleStore store = load_triples(train, valid, test);
  const auto stats = relation_stats(store);
  const std::size_t triples = store.train.size() + store.valid.size() + store.test.size();
  out << "entities:  " << store.entities.size() << '\n'
      << "relations: " << store.relations.size() << '\n'
      << "triples:   " << triples << " (train " << store.train.size() << ", valid "
      << store.valid.size() << ", test " << store.test.size() << ")\n"
      << "entities unseen in train: " << store.unseen_in_train.size() << '\n'
      << "global curvature xi_G: external (not computed)\n\n";

  std::ostringstream csv;
  csv << "relation,count,khs\n" << std::setprecision(10);
  for (const auto& s : stats) csv << s.name << ',' << s.count << ',' << s.khs << '\n';

  out << std::left << std::setw(32) << "relation" << std::right << std::setw(10) << "count"
      << std::setw(10) << "Khs" << '\n';
  for (const auto& s : stats) {
    out << std::left << std::setw(32) << s.name << std::right << std::setw(10) << s.count
        << std::setw(10) << std::fixed << std::setprecision(4) << s.khs << '\n';
  }
  out << std::defaultfloat;
  if (csv_path.empty()) {
    out << '\n' << csv.str();
  } else {
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write '" + csv_path + "'");
    f << csv.str();
  }
  return kExitOk;
}

int cmd_train(const KeyValues& flags, const std::string& config_path, std::ostream& out) {
  const KeyValues file = config_path.empty() ? KeyValues{} : load_key_values(config_path);
  const RunConfig cfg = RunConfig::resolve(file, flags);
  if (cfg.train.empty()) throw Error(ErrorCode::kConfig, "--train is required");

  TripleStore store = load_triples(cfg.train, cfg.valid, cfg.test);
  augment_inverse(store);
  const CheckpointMeta meta = meta_from(store);
  Model m = init_model(cfg.signature(), store.entities.size(), store.relations.size(),
                       cfg.margin, cfg.seed, {cfg.geometry, cfg.op});
  out << "entities " << store.entities.size() << ", relations " << store.relations.size()
      << ", train triples " << store.train.size() << ", signature (" << m.sig.p << ','
      << m.sig.q << ")\n";

  const TrainConfig tc = cfg.train_config();
  std::vector<double> trace;
  auto on_epoch = [&](std::size_t epoch, double loss, const Model& model) {
    trace.push_back(loss);
    out << "epoch " << epoch << " loss " << std::setprecision(6) << loss;
    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && !store.valid.empty()) {
      EvalOptions opts;
      opts.threads = tc.workers();
      const auto report = evaluate(model, store, Split::kValid, opts);
      out << " valid_mrr " << report.total.mrr;
    }
    out << '\n';
  };
  try {
    const FitResult result = fit(m, store, tc, on_epoch);
    if (tc.grad_check) out << "gradient spot check max rel err " << result.grad_check_error << '\n';
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNumeric) {
      save_checkpoint(m, meta, cfg.out);
      write_trace(cfg.trace_path(), trace);
      out << "wrote last good checkpoint to " << cfg.out << '\n';
    }
    throw;
  }
  save_checkpoint(m, meta, cfg.out);
  write_trace(cfg.trace_path(), trace);
  out << "wrote " << cfg.out << " and " << cfg.trace_path() << '\n';
  return kExitOk;
}

std::vector<Split> parse_filter(const std::string& spec) {
  std::vector<Split> splits;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) splits.push_back(parse_split(item));
  }
  return splits;
}

int cmd_eval(const std::string& model_path, const std::string& train, const std::string& valid,
             const std::string& test, const std::string& split, const std::string& filter,
             bool per_relation, const std::string& csv_path, std::size_t threads,
             std::ostream& out) {
  const Checkpoint ck = load_checkpoint(model_path);
  TripleStore store = load_triples(train, valid, test);
  if (ck.meta.augmented) augment_inverse(store);
  if (store.entities.digest() != names_digest(ck.meta.entity_names) ||
      store.relations.digest() != names_digest(ck.meta.relation_names)) {
    throw Error(ErrorCode::kDigestMismatch,
                "the triple files do not reproduce the checkpoint's dictionaries; pass the same "
                "--train/--valid/--test files used for training");
  }
  EvalOptions opts;
  opts.filter = parse_filter(filter);
  opts.threads = std::max<std::size_t>(1, threads);
  const EvalReport report = evaluate(ck.model, store, parse_split(split), opts);
  print_report(out, report, store.relations, per_relation);
  if (!csv_path.empty()) {
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write '" + csv_path + "'");
    write_report_csv(f, report, store.relations);
  } else if (per_relation) {
    out << '\n';
    write_report_csv(out, report, store.relations);
  }
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& head, const std::string& rel,
                std::size_t topk, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(model_path);
  const Dictionary entities = dictionary_from(ck.meta.entity_names);
  const Dictionary relations = dictionary_from(ck.meta.relation_names);
  const std::size_t h = lookup(entities, head, "entity");
  const std::size_t r = lookup(relations, rel, "relation");

  const Model& m = ck.model;
  Vec scores(m.num_entities);
  score_all_tails(m, embed_all(m), h, r, scores);
  std::vector<std::size_t> order(m.num_entities);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t k = std::min(topk, order.size());
  out << std::setprecision(8);
  for (std::size_t i = 0; i < k; ++i) {
    out << (i + 1) << '\t' << entities.name(order[i]) << '\t' << scores[order[i]] << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrahyperbolic knowledge graph embeddings", "ukge"};
  app.require_subcommand(1);

  std::string train, valid, test, csv_path, model_path, config_path;

  auto* stats = app.add_subcommand("stats", "Dataset and per-relation hierarchy statistics");
  stats->add_option("--train", train, "Training triples (TSV)")->required();
  stats->add_option("--valid", valid, "Validation triples (TSV)");
  stats->add_option("--test", test, "Test triples (TSV)");
  stats->add_option("--csv", csv_path, "Write the per-relation CSV here");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  std::map<std::string, std::string> train_values;
  std::map<std::string, CLI::Option*> train_opts;
  std::map<std::string, bool> train_flags;
  train_cmd->add_option("--config", config_path, "key=value configuration file");
  static const std::map<std::string, std::string> help = {
      {"train", "Training triples (TSV)"},
      {"valid", "Validation triples, used for valid_mrr"},
      {"test", "Test triples, only read to build dictionaries"},
      {"out", "Checkpoint path"},
      {"trace", "Loss trace CSV (default <out>.loss.csv)"},
      {"dim", "Total dimension d = p + q"},
      {"time_dims", "Time dimensions q (even, q <= p)"},
      {"alpha", "Radius parameter alpha > 0"},
      {"margin", "Global margin delta"},
      {"geometry", "ultra or euclidean"},
      {"operator", "rotref, rot or ref"},
      {"lr", "Learning rate"},
      {"batch", "Positives per batch"},
      {"neg", "Negatives per positive"},
      {"epochs", "Training epochs"},
      {"optimizer", "adam or adagrad"},
      {"seed", "Random seed"},
      {"threads", "Gradient worker threads"},
      {"deterministic", "Single worker, reproducible bytes"},
      {"learn_margin", "Train delta as a parameter"},
      {"grad_check", "Finite-difference check on the first batch"},
      {"eval_every", "Epochs between validation MRR reports"},
  };
  for (const auto& key : RunConfig::keys()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (key == "deterministic" || key == "learn_margin" || key == "grad_check") {
      train_opts[key] = train_cmd->add_flag(flag, train_flags[key], help.at(key));
    } else {
      train_opts[key] = train_cmd->add_option(flag, train_values[key], help.at(key));
    }
  }

  auto* eval_cmd = app.add_subcommand("eval", "Filtered link-prediction evaluation");
  std::string split = "test", filter = "train,valid,test";
  bool per_relation = false;
  std::size_t threads = 1;
  eval_cmd->add_option("--model", model_path, "Checkpoint")->required();
  eval_cmd->add_option("--train", train, "Training triples used for the model")->required();
  eval_cmd->add_option("--valid", valid, "Validation triples");
  eval_cmd->add_option("--test", test, "Test triples");
  eval_cmd->add_option("--split", split, "Split to rank: train, valid or test");
  eval_cmd->add_option("--filter", filter, "Splits whose triples are filtered");
  eval_cmd->add_flag("--per-relation", per_relation, "Report per relation");
  eval_cmd->add_option("--csv", csv_path, "Write the report CSV here");
  eval_cmd->add_option("--threads", threads, "Worker threads");

  auto* predict = app.add_subcommand("predict", "Top-K tails for a (head, relation) query");
  std::string head, rel;
  std::size_t topk = 10;
  predict->add_option("--model", model_path, "Checkpoint")->required();
  predict->add_option("--head", head, "Head entity name")->required();
  predict->add_option("--rel", rel, "Relation name")->required();
  predict->add_option("--topk", topk, "Number of tails to print");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "error: " << e.what() << '\n' << sub->help();
    return kExitInput;
  }

  try {
    if (stats->parsed()) return cmd_stats(train, valid, test, csv_path, out);
    if (train_cmd->parsed()) {
      KeyValues flags;
      for (const auto& [key, opt] : train_opts) {
        if (opt->count() == 0) continue;
        flags[key] = train_flags.count(key) ? "true" : train_values[key];
      }
      return cmd_train(flags, config_path, out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(model_path, train, valid, test, split, filter, per_relation, csv_path,
                      threads, out);
    }
    if (predict->parsed()) return cmd_predict(model_path, head, rel, topk, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace ultra
