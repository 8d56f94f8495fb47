#include "bmdsr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <set>

#include "bmdsr/common.hpp"

namespace bmdsr {

namespace {

constexpr char kMagic[8] = {'B', 'M', 'D', 'S', 'R', 'C', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian f32");

}  // namespace

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["scale"] = cfg.scale;
  j["variant"] = variant_name(cfg.variant);
  j["channel_multiplier"] = cfg.channel_multiplier;
  j["extractor"] = cfg.extractor;
  j["seed"] = cfg.seed;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.scale = j.at("scale").get<int>();
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    cfg.channel_multiplier = j.at("channel_multiplier").get<double>();
    cfg.extractor = j.at("extractor").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["config"] = config_to_json(cp.config);
  header["state"] = cp.state;
  auto index = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;  // in f32 elements
  for (const auto& [name, t] : cp.tensors) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["offset"] = offset;
    e["numel"] = t.numel();
    index.push_back(std::move(e));
    offset += std::uint64_t(t.numel());
  }
  header["tensors"] = std::move(index);

  const std::string hs = header.dump();
  std::string out;
  out.reserve(16 + hs.size() + offset * 4);
  out.append(kMagic, 8);
  std::uint64_t hlen = hs.size();
  out.append(reinterpret_cast<const char*>(&hlen), 8);
  out += hs;
  for (const auto& [name, t] : cp.tensors)
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * 4);
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, 8) != 0)
    throw DataError(path + ": not a checkpoint file (bad magic)");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, raw.data() + 8, 8);
  if (16 + hlen > raw.size()) throw DataError(path + ": truncated checkpoint header");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(raw.substr(16, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }

  Checkpoint cp;
  try {
    if (header.at("format_version").get<int>() != 1)
      throw DataError(path + ": unsupported checkpoint version");
    cp.config = config_from_json(header.at("config"));
    cp.state = header.at("state");
    const char* payload = raw.data() + 16 + hlen;
    const std::uint64_t payload_elems = (raw.size() - 16 - hlen) / 4;
    for (const auto& e : header.at("tensors")) {
      const auto name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<std::vector<int>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto numel = e.at("numel").get<std::uint64_t>();
      Tensor t(shape);
      if (std::uint64_t(t.numel()) != numel || offset + numel > payload_elems)
        throw DataError(path + ": corrupt tensor index entry for " + name);
      std::memcpy(t.data.data(), payload + offset * 4, numel * 4);
      cp.tensors.emplace_back(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }
  return cp;
}

Checkpoint checkpoint_of_model(const Model& m, nlohmann::ordered_json state) {
  Checkpoint cp;
  cp.config = m.cfg;
  cp.state = std::move(state);
  for (const auto& [name, var] : m.params.items()) cp.tensors.emplace_back(name, var->val);
  return cp;
}

void load_model_params(Model& m, const Checkpoint& cp) {
  std::set<std::string> known;
  for (const auto& [name, var] : m.params.items()) {
    known.insert(name);
    const Tensor* t = cp.find(name);
    if (!t) throw DataError("checkpoint missing parameter: " + name);
    if (!t->same_shape(var->val))
      throw DataError("checkpoint shape mismatch for " + name + ": " + t->shape_str() +
                      " vs model " + var->val.shape_str());
    var->val = *t;
  }
  for (const auto& [name, t] : cp.tensors)
    if (name.rfind("opt.", 0) != 0 && !known.count(name))
      throw DataError("checkpoint has unknown parameter: " + name);
}

Model model_from_checkpoint(const Checkpoint& cp) {
  Model m = Model::create(cp.config);
  load_model_params(m, cp);
  return m;
}

}  // namespace bmdsr
