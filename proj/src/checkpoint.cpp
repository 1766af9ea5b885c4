#include "typei/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "typei/error.hpp"

namespace typei {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'Y', 'P', 'E', 'I', 'C', 'K', 'P'};

std::uint64_t fnv1a(const char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buffer, std::size_t end, const std::filesystem::path& path)
      : buf_(buffer), end_(end), path_(path) {}

  template <class T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const char* take(std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint " + path_.string() + " is truncated");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  const std::filesystem::path& path_;
};

std::vector<NamedArray> collect(const std::vector<std::pair<std::string, const Matrix*>>& params) {
  std::vector<NamedArray> arrays;
  for (const auto& [name, m] : params) arrays.push_back({name, *m});
  return arrays;
}

std::vector<std::pair<std::string, const Matrix*>> vae_parameters(const VaeModel& model) {
  std::vector<std::pair<std::string, const Matrix*>> out;
  const auto add = [&out](const nn::Sequential& net, const std::string& prefix) {
    const auto names = net.parameter_names();
    const auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(prefix + names[i], params[i]);
  };
  add(model.encoder(), "encoder.");
  add(model.decoder(), "decoder.");
  return out;
}

void assign(std::vector<std::pair<std::string, Matrix*>> targets, const std::vector<NamedArray>& arrays,
            const std::filesystem::path& path) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& a : arrays) {
    if (!by_name.emplace(a.name, &a.value).second) {
      throw CheckpointError("checkpoint " + path.string() + " repeats array '" + a.name + "'");
    }
  }
  if (by_name.size() != targets.size()) {
    throw CheckpointError("checkpoint " + path.string() + " holds " + std::to_string(by_name.size()) +
                          " arrays, model expects " + std::to_string(targets.size()));
  }
  for (auto& [name, target] : targets) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError("checkpoint " + path.string() + " lacks array '" + name + "'");
    if (it->second->rows() != target->rows() || it->second->cols() != target->cols()) {
      throw CheckpointError("checkpoint " + path.string() + " array '" + name + "' has the wrong shape");
    }
    *target = *it->second;
  }
}

std::vector<std::pair<std::string, Matrix*>> mutable_vae_parameters(VaeModel& model) {
  std::vector<std::pair<std::string, Matrix*>> out;
  const auto add = [&out](nn::Sequential& net, const std::string& prefix) {
    const auto names = net.parameter_names();
    const auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(prefix + names[i], params[i]);
  };
  add(model.encoder(), "encoder.");
  add(model.decoder(), "decoder.");
  return out;
}

ModelKind kind_of(const CheckpointContents& contents, const std::filesystem::path& path) {
  const auto kind = contents.header.value("kind", std::string{});
  if (kind == "vae") return ModelKind::vae;
  if (kind == "style_generator") return ModelKind::style_generator;
  throw CheckpointError("checkpoint " + path.string() + " has unknown model kind '" + kind + "'");
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::vae ? "vae" : "style_generator";
}

nlohmann::json to_json(const VaeConfig& c) {
  return {{"input_shape", {c.input_shape.channels, c.input_shape.height, c.input_shape.width}},
          {"latent_dim", c.latent_dim},
          {"conv_channels", c.conv_channels},
          {"hidden_units", c.hidden_units}};
}

VaeConfig vae_config_from_json(const nlohmann::json& j) {
  VaeConfig c;
  const auto shape = j.at("input_shape").get<std::vector<std::size_t>>();
  if (shape.size() != 3) throw CheckpointError("VAE input_shape must have three entries");
  c.input_shape = {shape[0], shape[1], shape[2]};
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.conv_channels = j.at("conv_channels").get<std::size_t>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  return c;
}

nlohmann::json to_json(const StyleGeneratorConfig& c) {
  return {{"latent_dim", c.latent_dim},         {"style_dim", c.style_dim},
          {"mapping_layers", c.mapping_layers}, {"mapping_hidden", c.mapping_hidden},
          {"channels", c.channels},             {"output_channels", c.output_channels},
          {"resolution", c.resolution},         {"style_gain", c.style_gain}};
}

StyleGeneratorConfig style_config_from_json(const nlohmann::json& j) {
  StyleGeneratorConfig c;
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.style_dim = j.at("style_dim").get<std::size_t>();
  c.mapping_layers = j.at("mapping_layers").get<std::size_t>();
  c.mapping_hidden = j.at("mapping_hidden").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.output_channels = j.at("output_channels").get<std::size_t>();
  c.resolution = j.at("resolution").get<std::size_t>();
  c.style_gain = j.at("style_gain").get<double>();
  return c;
}

void write_checkpoint_file(const std::filesystem::path& path, const nlohmann::json& header,
                           const std::vector<NamedArray>& arrays) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string text = header.dump();
  put<std::uint64_t>(out, text.size());
  out += text;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(a.value.cols()));
    out.append(reinterpret_cast<const char*>(a.value.data()),
               static_cast<std::size_t>(a.value.size()) * sizeof(double));
  }
  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError("cannot open " + path.string() + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw CheckpointError("failed writing checkpoint " + path.string());
}

CheckpointContents read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) ||
      std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  std::uint32_t version;
  std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint " + path.string() + " has format version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
  }
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw CheckpointError("checkpoint " + path.string() + " is truncated");
  }
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t digest;
  std::memcpy(&digest, buf.data() + body, sizeof(digest));

  Reader in(buf, body, path);
  in.take(sizeof(kMagic) + sizeof(std::uint32_t));
  CheckpointContents contents;
  const auto header_len = in.get<std::uint64_t>();
  const char* header = in.take(header_len);
  contents.header = nlohmann::json::parse(header, header + header_len, nullptr, false);
  if (contents.header.is_discarded()) throw CheckpointError("checkpoint " + path.string() + " has a corrupt header");
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = in.get<std::uint32_t>();
    a.name.assign(in.take(name_len), name_len);
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (cols != 0 && rows > in.remaining() / sizeof(double) / cols) {
      throw CheckpointError("checkpoint " + path.string() + " is truncated");
    }
    a.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t bytes = rows * cols * sizeof(double);
    std::memcpy(a.value.data(), in.take(bytes), bytes);
    contents.arrays.push_back(std::move(a));
  }
  if (in.remaining() != 0 || digest != fnv1a(buf.data(), body)) {
    throw CheckpointError("checkpoint " + path.string() + " is corrupt (digest mismatch)");
  }
  return contents;
}

void save_checkpoint(const VaeModel& model, const std::filesystem::path& path) {
  write_checkpoint_file(path, {{"kind", "vae"}, {"config", to_json(model.config())}},
                        collect(vae_parameters(model)));
}

void save_checkpoint(const StyleGenerator& generator, const std::filesystem::path& path) {
  write_checkpoint_file(path, {{"kind", "style_generator"}, {"config", to_json(generator.config())}},
                        collect(generator.named_parameters()));
}

Model load_checkpoint(const std::filesystem::path& path) {
  const CheckpointContents contents = read_checkpoint_file(path);
  try {
    if (kind_of(contents, path) == ModelKind::vae) {
      VaeModel model(vae_config_from_json(contents.header.at("config")), 0);
      assign(mutable_vae_parameters(model), contents.arrays, path);
      return model;
    }
    StyleGenerator gen(style_config_from_json(contents.header.at("config")), 0);
    assign(gen.named_parameters(), contents.arrays, path);
    return gen;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " header is incomplete: " + e.what());
  } catch (const InvalidInput& e) {
    throw CheckpointError("checkpoint " + path.string() + " describes an invalid model: " + e.what());
  }
}

VaeModel load_vae(const std::filesystem::path& path) {
  auto model = load_checkpoint(path);
  if (auto* vae = std::get_if<VaeModel>(&model)) return std::move(*vae);
  throw CheckpointError("checkpoint " + path.string() + " holds a style generator, not a VAE");
}

StyleGenerator load_style_generator(const std::filesystem::path& path) {
  auto model = load_checkpoint(path);
  if (auto* gen = std::get_if<StyleGenerator>(&model)) return std::move(*gen);
  throw CheckpointError("checkpoint " + path.string() + " holds a VAE, not a style generator");
}

ModelKind checkpoint_kind(const std::filesystem::path& path) {
  return kind_of(read_checkpoint_file(path), path);
}

}  // namespace typei
