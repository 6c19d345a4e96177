#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cseal/model.hpp"
#include "json.hpp"

namespace cseal::model {
namespace {

using json = nlohmann::json;

constexpr std::array<char, 8> kMagic = {'C', 'S', 'E', 'A', 'L', 'C', 'K', 'P'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw std::runtime_error("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

struct Group {
  const char* name;
  ParameterSet ModelState::*member;
};

constexpr std::array<Group, 3> kGroups = {{
    {"params", &ModelState::params},
    {"ema_params", &ModelState::ema_params},
    {"init_snapshot", &ModelState::init_snapshot},
}};

}  // namespace

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  json header;
  header["format"] = "cseal-checkpoint";
  header["spec"] = {
      {"input_dim", state.spec.input_dim},
      {"hidden_dims", state.spec.hidden_dims},
      {"num_classes", state.spec.num_classes},
      {"dropout_rate", state.spec.dropout_rate},
  };
  header["seed"] = state.rng_seed;
  json tensors = json::array();
  for (const Group& g : kGroups) {
    const ParameterSet& set = state.*g.member;
    for (std::size_t i = 0; i < set.size(); ++i) {
      tensors.push_back({{"group", g.name}, {"name", set.name(i)}, {"shape", set[i].shape()}});
    }
  }
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Group& g : kGroups) {
    for (const Tensor& t : (state.*g.member).tensors()) {
      for (const double v : t.values()) write_le<double>(out, v);
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto length = read_le<std::uint64_t>(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw std::runtime_error("checkpoint: truncated header");
  }
  const json header = json::parse(text);

  ModelState state;
  const json& spec = header.at("spec");
  state.spec.input_dim = spec.at("input_dim").get<std::size_t>();
  state.spec.hidden_dims = spec.at("hidden_dims").get<std::vector<std::size_t>>();
  state.spec.num_classes = spec.at("num_classes").get<std::size_t>();
  state.spec.dropout_rate = spec.at("dropout_rate").get<double>();
  state.spec.validate();
  state.rng_seed = header.at("seed").get<std::uint64_t>();

  for (const json& entry : header.at("tensors")) {
    const std::string group = entry.at("group").get<std::string>();
    const auto it = std::find_if(kGroups.begin(), kGroups.end(),
                                 [&](const Group& g) { return group == g.name; });
    if (it == kGroups.end()) throw std::runtime_error("checkpoint: unknown group " + group);
    Shape shape = entry.at("shape").get<Shape>();
    Tensor t(shape);
    for (double& v : t.values()) v = read_le<double>(in);
    (state.*(it->member)).add(entry.at("name").get<std::string>(), std::move(t));
  }
  if (!state.params.congruent(state.ema_params) || !state.params.congruent(state.init_snapshot)) {
    throw std::runtime_error("checkpoint: parameter groups are not shape-congruent");
  }
  return state;
}

}  // namespace cseal::model
