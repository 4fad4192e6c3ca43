#include "ultra/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ultra/error.hpp"
#include "ultra/kgdata.hpp"

namespace ultra {

Geometry parse_geometry(const std::string& name) {
  if (name == "ultra") return Geometry::kUltra;
  if (name == "euclidean") return Geometry::kEuclidean;
  throw Error(ErrorCode::kConfig, "unknown geometry '" + name + "' (expected ultra or euclidean)");
}

std::string to_string(Geometry g) {
  return g == Geometry::kUltra ? "ultra" : "euclidean";
}

const char* Params::block_name(std::size_t i) {
  static constexpr std::array<const char*, kBlockCount> names = {
      "entities", "biases", "theta", "phi", "mu", "delta"};
  return names.at(i);
}

Params Params::zeros_like() const {
  Params z;
  auto dst = z.blocks();
  auto src = blocks();
  for (std::size_t i = 0; i < kBlockCount; ++i) dst[i]->assign(src[i]->size(), 0.0);
  return z;
}

std::size_t Params::size() const {
  std::size_t n = 0;
  for (const Vec* b : blocks()) n += b->size();
  return n;
}

void Params::fill(double v) {
  for (Vec* b : blocks()) std::fill(b->begin(), b->end(), v);
}

std::span<const double> Model::entity(std::size_t e) const {
  return std::span<const double>(params.entities).subspan(e * sig.dim(), sig.dim());
}

std::span<double> Model::entity(std::size_t e) {
  return std::span<double>(params.entities).subspan(e * sig.dim(), sig.dim());
}

RelationRef Model::relation(std::size_t r) const {
  const std::size_t half = sig.dim() / 2;
  return RelationRef(std::span<const double>(params.theta).subspan(r * half, half),
                     std::span<const double>(params.phi).subspan(r * half, half),
                     std::span<const double>(params.mu).subspan(r * sig.q, sig.q));
}

void Model::check_entity(std::size_t e) const {
  if (e >= num_entities) {
    throw Error(ErrorCode::kLookup, "entity id " + std::to_string(e) + " out of range");
  }
}

void Model::check_relation(std::size_t r) const {
  if (r >= num_relations) {
    throw Error(ErrorCode::kLookup, "relation id " + std::to_string(r) + " out of range");
  }
}

Model init_model(const Signature& sig, std::size_t num_entities,
                 std::size_t num_relations, double delta, std::uint64_t seed,
                 InitOptions options) {
  sig.validate_for_operators();
  Model m;
  m.sig = sig;
  m.geometry = options.geometry;
  m.op = options.op;
  m.num_entities = num_entities;
  m.num_relations = num_relations;

  const std::size_t d = sig.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> small(0.0, 0.01);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);

  m.params.entities.resize(num_entities * d);
  for (std::size_t e = 0; e < num_entities; ++e) {
    auto row = m.entity(e);
    for (double& v : row) v = small(rng);
    row[sig.p] += 1.0;
  }
  m.params.biases.assign(num_entities, 0.0);
  m.params.theta.resize(num_relations * d / 2);
  m.params.phi.resize(num_relations * d / 2);
  m.params.mu.resize(num_relations * sig.q);
  for (double& v : m.params.theta) v = angle(rng);
  for (double& v : m.params.phi) v = angle(rng);
  for (double& v : m.params.mu) v = small(rng);
  m.params.delta.assign(1, delta);
  return m;
}

bool bitwise_equal(const Model& a, const Model& b) {
  if (!(a.sig == b.sig) || a.geometry != b.geometry || a.op != b.op ||
      a.num_entities != b.num_entities || a.num_relations != b.num_relations) {
    return false;
  }
  const auto ba = a.params.blocks();
  const auto bb = b.params.blocks();
  for (std::size_t i = 0; i < Params::kBlockCount; ++i) {
    if (ba[i]->size() != bb[i]->size()) return false;
    if (!ba[i]->empty() &&
        std::memcmp(ba[i]->data(), bb[i]->data(), ba[i]->size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

void embed_entity(const Model& m, std::size_t e, std::span<double> out) {
  if (m.geometry == Geometry::kUltra) {
    phi_into(m.entity(e), m.sig, out);
  } else {
    const auto row = m.entity(e);
    std::copy(row.begin(), row.end(), out.begin());
  }
}

Vec embed_all(const Model& m) {
  const std::size_t d = m.sig.dim();
  Vec out(m.num_entities * d);
  for (std::size_t e = 0; e < m.num_entities; ++e) {
    embed_entity(m, e, std::span<double>(out).subspan(e * d, d));
  }
  return out;
}

void transform_head(const Model& m, std::size_t r, std::span<const double> head,
                    std::span<double> out) {
  if (m.geometry == Geometry::kUltra) {
    relation_apply(m.relation(r), head, m.sig, out, m.op);
  } else {
    euclidean_relation_apply(m.relation(r), head, out, m.op);
  }
}

double distance(const Model& m, std::span<const double> a, std::span<const double> b) {
  if (m.geometry == Geometry::kUltra) return dist_manhattan(a, b, m.sig);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double score(const Model& m, std::size_t h, std::size_t r, std::size_t t) {
  m.check_entity(h);
  m.check_entity(t);
  m.check_relation(r);
  const std::size_t d = m.sig.dim();
  Vec xh(d), xt(d), y(d);
  embed_entity(m, h, xh);
  embed_entity(m, t, xt);
  transform_head(m, r, xh, y);
  const double dist = distance(m, y, xt);
  return -dist * dist + m.params.biases[h] + m.params.biases[t] + m.delta();
}

double score_backward(const Model& m, std::size_t h, std::size_t r, std::size_t t,
                      double weight, Params& grad) {
  m.check_entity(h);
  m.check_entity(t);
  m.check_relation(r);
  const std::size_t d = m.sig.dim(), half = d / 2;
  Vec xh(d), xt(d), y(d), gy(d, 0.0), gt(d, 0.0);
  embed_entity(m, h, xh);
  embed_entity(m, t, xt);
  transform_head(m, r, xh, y);

  RelationGradRef rel_grad{
      std::span<double>(grad.theta).subspan(r * half, half),
      std::span<double>(grad.phi).subspan(r * half, half),
      std::span<double>(grad.mu).subspan(r * m.sig.q, m.sig.q)};
  auto grad_row = [&](std::size_t e) {
    return std::span<double>(grad.entities).subspan(e * d, d);
  };

  double dist_sq = 0.0;
  if (m.geometry == Geometry::kUltra) {
    const double dist = dist_manhattan_backward(y, xt, m.sig, 1.0, gy, gt);
    dist_sq = dist * dist;
    // ds/dD = -2D
    const double k = -2.0 * dist * weight;
    for (std::size_t i = 0; i < d; ++i) {
      gy[i] *= k;
      gt[i] *= k;
    }
    relation_backward(m.relation(r), xh, m.sig, m.op, gy, rel_grad);
    phi_backward(m.entity(h), m.sig, gy, grad_row(h));
    phi_backward(m.entity(t), m.sig, gt, grad_row(t));
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = y[i] - xt[i];
      dist_sq += diff * diff;
      gy[i] = -2.0 * diff * weight;
      gt[i] = 2.0 * diff * weight;
    }
    euclidean_relation_backward(m.relation(r), xh, m.op, gy, rel_grad);
    auto gh_row = grad_row(h);
    for (std::size_t i = 0; i < d; ++i) gh_row[i] += gy[i];
    auto gt_row = grad_row(t);
    for (std::size_t i = 0; i < d; ++i) gt_row[i] += gt[i];
  }

  grad.biases[h] += weight;
  grad.biases[t] += weight;
  grad.delta[0] += weight;
  return -dist_sq + m.params.biases[h] + m.params.biases[t] + m.delta();
}

void score_all_tails(const Model& m, const Vec& embedded, std::size_t h,
                     std::size_t r, std::span<double> out) {
  m.check_entity(h);
  m.check_relation(r);
  const std::size_t d = m.sig.dim();
  const std::span<const double> all(embedded);
  Vec y(d);
  transform_head(m, r, all.subspan(h * d, d), y);
  const double base = m.params.biases[h] + m.delta();
  for (std::size_t e = 0; e < m.num_entities; ++e) {
    const double dist = distance(m, y, all.subspan(e * d, d));
    out[e] = -dist * dist + base + m.params.biases[e];
  }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

constexpr char kMagic[4] = {'U', 'K', 'G', 'E'};

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

template <class T>
T get_le(const std::string& in, std::size_t offset) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Model& m, const CheckpointMeta& meta) {
  nlohmann::ordered_json header;
  header["signature"] = {{"p", m.sig.p}, {"q", m.sig.q}, {"alpha", m.sig.alpha}};
  header["geometry"] = to_string(m.geometry);
  header["operator"] = to_string(m.op);
  header["num_entities"] = m.num_entities;
  header["num_relations"] = m.num_relations;
  header["base_relation_count"] = meta.base_relation_count;
  header["augmented"] = meta.augmented;
  header["entity_digest"] = names_digest(meta.entity_names);
  header["relation_digest"] = names_digest(meta.relation_names);
  header["entity_names"] = meta.entity_names;
  header["relation_names"] = meta.relation_names;
  nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
  for (const Vec* b : m.params.blocks()) sizes.push_back(b->size());
  header["block_sizes"] = sizes;
  const std::string text = header.dump();

  std::string out(kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + m.params.size() * 8);
  for (const Vec* b : m.params.blocks())
    for (double v : *b) put_le<double>(out, v);
  return out;
}

void save_checkpoint(const Model& m, const CheckpointMeta& meta, const std::string& path) {
  const std::string bytes = serialize_checkpoint(m, meta);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::optional<Signature>& expected) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "checkpoint: bad magic");
  }
  if (bytes.size() < 16) throw Error(ErrorCode::kTruncated, "checkpoint: truncated header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint: version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) throw Error(ErrorCode::kTruncated, "checkpoint: truncated header");

  Checkpoint ck;
  Model& m = ck.model;
  std::vector<std::size_t> sizes;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
    m.sig.p = header.at("signature").at("p").get<std::size_t>();
    m.sig.q = header.at("signature").at("q").get<std::size_t>();
    m.sig.alpha = header.at("signature").at("alpha").get<double>();
    m.geometry = parse_geometry(header.at("geometry").get<std::string>());
    m.op = parse_operator_kind(header.at("operator").get<std::string>());
    m.num_entities = header.at("num_entities").get<std::size_t>();
    m.num_relations = header.at("num_relations").get<std::size_t>();
    ck.meta.base_relation_count = header.at("base_relation_count").get<std::size_t>();
    ck.meta.augmented = header.at("augmented").get<bool>();
    ck.meta.entity_names = header.at("entity_names").get<std::vector<std::string>>();
    ck.meta.relation_names = header.at("relation_names").get<std::vector<std::string>>();
    sizes = header.at("block_sizes").get<std::vector<std::size_t>>();
    if (header.at("entity_digest").get<std::string>() != names_digest(ck.meta.entity_names) ||
        header.at("relation_digest").get<std::string>() != names_digest(ck.meta.relation_names)) {
      throw Error(ErrorCode::kCorruptHeader, "checkpoint: dictionary digest does not match names");
    }
    m.sig.validate_for_operators();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("checkpoint: bad header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptHeader) throw;
    throw Error(ErrorCode::kCorruptHeader, std::string("checkpoint: bad header: ") + e.what());
  }

  const std::size_t d = m.sig.dim();
  const std::array<std::size_t, Params::kBlockCount> want = {
      m.num_entities * d, m.num_entities, m.num_relations * d / 2,
      m.num_relations * d / 2, m.num_relations * m.sig.q, 1};
  if (sizes.size() != Params::kBlockCount ||
      !std::equal(sizes.begin(), sizes.end(), want.begin())) {
    throw Error(ErrorCode::kCorruptHeader, "checkpoint: block sizes inconsistent with counts");
  }
  if (!ck.meta.entity_names.empty() && ck.meta.entity_names.size() != m.num_entities) {
    throw Error(ErrorCode::kCorruptHeader, "checkpoint: entity dictionary size mismatch");
  }
  if (!ck.meta.relation_names.empty() && ck.meta.relation_names.size() != m.num_relations) {
    throw Error(ErrorCode::kCorruptHeader, "checkpoint: relation dictionary size mismatch");
  }
  if (expected && !(*expected == m.sig)) {
    throw Error(ErrorCode::kConfigMismatch,
                "checkpoint signature (p=" + std::to_string(m.sig.p) +
                    ", q=" + std::to_string(m.sig.q) +
                    ") does not match the requested configuration");
  }

  std::size_t total = 0;
  for (std::size_t s : want) total += s;
  const std::size_t payload_at = 16 + header_len;
  if (bytes.size() - payload_at < total * 8) {
    throw Error(ErrorCode::kTruncated, "checkpoint: payload truncated");
  }
  if (bytes.size() - payload_at > total * 8) {
    throw Error(ErrorCode::kCorruptHeader, "checkpoint: trailing bytes after payload");
  }
  std::size_t offset = payload_at;
  auto blocks = m.params.blocks();
  for (std::size_t i = 0; i < Params::kBlockCount; ++i) {
    blocks[i]->resize(want[i]);
    for (double& v : *blocks[i]) {
      v = get_le<double>(bytes, offset);
      offset += 8;
    }
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<Signature>& expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str(), expected);
}

}  // namespace ultra
