#include "ultra/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ultra/error.hpp"

namespace ultra {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kConfig, "invalid value '" + value + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorCode::kConfig, "invalid boolean '" + value + "' for key '" + key + "'");
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "train",  "valid",     "test",      "out",        "trace",      "dim",
      "time_dims", "alpha",  "margin",    "geometry",   "operator",   "lr",
      "batch",  "neg",       "epochs",    "optimizer",  "seed",       "threads",
      "deterministic", "learn_margin", "grad_check", "eval_every"};
  return k;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalize_key(raw_key);
  const std::string value = trim(raw_value);
  if (key == "train") train = value;
  else if (key == "valid") valid = value;
  else if (key == "test") test = value;
  else if (key == "out") out = value;
  else if (key == "trace") trace = value;
  else if (key == "dim") dim = parse_number<std::size_t>(key, value);
  else if (key == "time_dims") time_dims = parse_number<std::size_t>(key, value);
  else if (key == "alpha") alpha = parse_number<double>(key, value);
  else if (key == "margin") margin = parse_number<double>(key, value);
  else if (key == "geometry") geometry = parse_geometry(value);
  else if (key == "operator") op = parse_operator_kind(value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "batch") batch = parse_number<std::size_t>(key, value);
  else if (key == "neg") neg = parse_number<std::size_t>(key, value);
  else if (key == "epochs") epochs = parse_number<std::size_t>(key, value);
  else if (key == "optimizer") optimizer = parse_optimizer_kind(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") threads = parse_number<std::size_t>(key, value);
  else if (key == "deterministic") deterministic = parse_bool(key, value);
  else if (key == "learn_margin") learn_margin = parse_bool(key, value);
  else if (key == "grad_check") grad_check = parse_bool(key, value);
  else if (key == "eval_every") eval_every = parse_number<std::size_t>(key, value);
  else throw Error(ErrorCode::kConfig, "unknown configuration key '" + raw_key + "'");
}

std::string RunConfig::get(const std::string& raw_key) const {
  const std::string key = normalize_key(raw_key);
  if (key == "train") return train;
  if (key == "valid") return valid;
  if (key == "test") return test;
  if (key == "out") return out;
  if (key == "trace") return trace;
  if (key == "dim") return std::to_string(dim);
  if (key == "time_dims") return std::to_string(time_dims);
  if (key == "alpha") return format_double(alpha);
  if (key == "margin") return format_double(margin);
  if (key == "geometry") return to_string(geometry);
  if (key == "operator") return to_string(op);
  if (key == "lr") return format_double(lr);
  if (key == "batch") return std::to_string(batch);
  if (key == "neg") return std::to_string(neg);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "optimizer") return to_string(optimizer);
  if (key == "seed") return std::to_string(seed);
  if (key == "threads") return std::to_string(threads);
  if (key == "deterministic") return deterministic ? "true" : "false";
  if (key == "learn_margin") return learn_margin ? "true" : "false";
  if (key == "grad_check") return grad_check ? "true" : "false";
  if (key == "eval_every") return std::to_string(eval_every);
  throw Error(ErrorCode::kConfig, "unknown configuration key '" + raw_key + "'");
}

void RunConfig::validate() const {
  if (time_dims < 1) throw Error(ErrorCode::kConfig, "time-dims must be >= 1");
  if (time_dims >= dim) throw Error(ErrorCode::kConfig, "time-dims must be smaller than dim");
  signature().validate_for_operators();
  train_config().validate();
}

Signature RunConfig::signature() const {
  return Signature{dim - time_dims, time_dims, alpha};
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.batch_size = batch;
  c.neg_samples = neg;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.optimizer = optimizer;
  c.seed = seed;
  c.grad_check = grad_check;
  c.deterministic = deterministic;
  c.threads = threads;
  c.learn_margin = learn_margin;
  return c;
}

RunConfig RunConfig::resolve(const KeyValues& file, const KeyValues& flags) {
  RunConfig cfg;
  for (const auto& [k, v] : file) cfg.set(k, v);
  for (const auto& [k, v] : flags) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

KeyValues parse_key_values(std::istream& in, const std::string& label) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, label + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[normalize_key(trim(t.substr(0, eq)))] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  return parse_key_values(f, path);
}

}  // namespace ultra
