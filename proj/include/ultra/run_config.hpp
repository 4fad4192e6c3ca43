#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "ultra/geometry.hpp"
#include "ultra/model.hpp"
#include "ultra/training.hpp"

namespace ultra {

using KeyValues = std::map<std::string, std::string>;

// Merged view of defaults, a key=value config file, and command-line flags.
// Precedence is flag > file > default.
struct RunConfig {
  std::string train, valid, test;
  std::string out = "model.ukge";
  std::string trace;  // empty: <out>.loss.csv

  std::size_t dim = 32;
  std::size_t time_dims = 4;
  double alpha = 1.0;
  double margin = 6.0;
  Geometry geometry = Geometry::kUltra;
  OperatorKind op = OperatorKind::kRotRef;

  double lr = 5e-3;
  std::size_t batch = 500;
  std::size_t neg = 50;
  std::size_t epochs = 100;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool deterministic = false;
  bool learn_margin = false;
  bool grad_check = false;
  std::size_t eval_every = 50;

  static const std::vector<std::string>& keys();

  // Keys accept '-' or '_' interchangeably. Unknown keys and malformed values
  // throw kConfig; the merged result is validated.
  static RunConfig resolve(const KeyValues& file, const KeyValues& flags);

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  void validate() const;

  Signature signature() const;
  TrainConfig train_config() const;
  std::string trace_path() const { return trace.empty() ? out + ".loss.csv" : trace; }
};

std::string normalize_key(std::string key);

// "key=value" per line; blank lines and '#' comments are skipped.
KeyValues parse_key_values(std::istream& in, const std::string& label);
KeyValues load_key_values(const std::string& path);

}  // namespace ultra
