#include "typei/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <zlib.h>

#include "typei/error.hpp"
#include "typei/image_io.hpp"

namespace typei {
namespace {

namespace fs = std::filesystem;

std::string read_gz_or_plain(const fs::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");  // reads plain files transparently
  if (!file) throw IngestionError("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(file, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(file);
  if (failed) throw IngestionError("corrupt compressed stream in " + path.string());
  return out;
}

std::uint32_t big_endian_u32(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

std::optional<fs::path> find_idx(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".gz", ""}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::vector<Image> load_image_directory(const DatasetProfile& profile, Split split) {
  const fs::path index = profile.source_path / "index.txt";
  std::ifstream in(index);
  if (!in) throw IngestionError("cannot read index file " + index.string());
  const std::string wanted = to_string(split);
  std::vector<Image> images;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string tag, rel;
    if (!(fields >> tag)) continue;
    if (!(fields >> rel) || (tag != "train" && tag != "test")) {
      throw IngestionError(index.string() + ":" + std::to_string(line_no) +
                           ": expected '<train|test> <relative path>'");
    }
    if (tag != wanted) continue;
    const fs::path file = profile.source_path / rel;
    Image img;
    try {
      img = read_png(file);
    } catch (const Error& e) {
      throw IngestionError(std::string("cannot decode ") + file.string() + ": " + e.what());
    }
    if (img.shape() != profile.image_shape) {
      throw IngestionError(file.string() + " has shape " + img.shape().str() + ", profile " +
                           profile.name + " expects " + profile.image_shape.str());
    }
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

DatasetProfile DatasetProfile::mnist(fs::path source) {
  return {"mnist", {1, 28, 28}, Norm::l2, std::move(source), 0, 0};
}

DatasetProfile DatasetProfile::svhn(fs::path source) {
  return {"svhn", {3, 32, 32}, Norm::l1, std::move(source), 0, 0};
}

DatasetProfile DatasetProfile::celeba(fs::path source) {
  return {"celeba", {3, 64, 64}, Norm::l1, std::move(source), 0, 0};
}

DatasetProfile DatasetProfile::by_name(const std::string& name, const fs::path& data_root) {
  if (name == "mnist") return mnist(data_root / "mnist");
  if (name == "svhn") return svhn(data_root / "svhn");
  if (name == "celeba") return celeba(data_root / "celeba");
  throw ConfigError("unknown dataset profile '" + name + "'");
}

std::vector<Image> read_idx_images(const fs::path& path) {
  const std::string bytes = read_gz_or_plain(path);
  if (bytes.size() < 16 || big_endian_u32(bytes, 0) != 0x00000803) {
    throw IngestionError(path.string() + " is not an IDX image archive");
  }
  const std::size_t count = big_endian_u32(bytes, 4);
  const std::size_t rows = big_endian_u32(bytes, 8);
  const std::size_t cols = big_endian_u32(bytes, 12);
  if (bytes.size() != 16 + count * rows * cols) {
    throw IngestionError(path.string() + " is truncated or has trailing bytes");
  }
  std::vector<Image> images;
  images.reserve(count);
  const ImageShape shape{1, rows, cols};
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> px(rows * cols);
    const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + 16 + i * rows * cols);
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = src[k] / 255.0;
    images.emplace_back(shape, std::move(px));
  }
  return images;
}

std::vector<Image> load_dataset(const DatasetProfile& profile, Split split,
                                std::optional<std::uint64_t> shuffle_seed) {
  if (!fs::exists(profile.source_path)) {
    throw IngestionError("dataset path " + profile.source_path.string() + " does not exist");
  }
  if (!fs::is_directory(profile.source_path)) {
    throw IngestionError("dataset path " + profile.source_path.string() + " is not a directory");
  }
  std::vector<Image> images;
  const std::string stem = split == Split::train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
  if (const auto idx = find_idx(profile.source_path, stem)) {
    images = read_idx_images(*idx);
    for (const auto& img : images) {
      if (img.shape() != profile.image_shape) {
        throw IngestionError(idx->string() + " holds " + img.shape().str() + " images, profile " +
                             profile.name + " expects " + profile.image_shape.str());
      }
    }
  } else if (fs::exists(profile.source_path / "index.txt")) {
    images = load_image_directory(profile, split);
  } else {
    throw IngestionError("no recognized dataset layout in " + profile.source_path.string() +
                         " (expected " + stem + "[.gz] or index.txt)");
  }
  if (images.empty()) {
    throw IngestionError("dataset " + profile.name + " has no " + to_string(split) + " images in " +
                         profile.source_path.string());
  }
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(images.begin(), images.end(), rng);
  }
  const std::size_t cap = split == Split::train ? profile.max_train : profile.max_test;
  if (cap > 0 && images.size() > cap) images.resize(cap);
  return images;
}

std::vector<Image> select_samples(std::span<const Image> images, std::size_t n, std::uint64_t seed) {
  if (n > images.size()) {
    throw InvalidInput("requested " + std::to_string(n) + " samples from " +
                       std::to_string(images.size()) + " images");
  }
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Image> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(images[order[i]]);
  return out;
}

}  // namespace typei
