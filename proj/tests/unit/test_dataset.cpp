#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "typei/dataset.hpp"
#include "typei/error.hpp"
#include "typei/image_io.hpp"

using namespace typei;
using namespace typei::test;
namespace fs = std::filesystem;

namespace {

void write_idx(const fs::path& path, std::size_t count, std::size_t rows, std::size_t cols) {
  std::string bytes;
  const auto be32 = [&bytes](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<char>((v >> s) & 0xff));
  };
  be32(0x00000803);
  be32(static_cast<std::uint32_t>(count));
  be32(static_cast<std::uint32_t>(rows));
  be32(static_cast<std::uint32_t>(cols));
  for (std::size_t i = 0; i < count * rows * cols; ++i) bytes.push_back(static_cast<char>((i * 7) % 256));
  std::ofstream(path, std::ios::binary) << bytes;
}

fs::path mnist_like(const std::string& name, std::size_t train, std::size_t test) {
  const auto dir = scratch_dir(name);
  write_idx(dir / "train-images-idx3-ubyte", train, 28, 28);
  write_idx(dir / "t10k-images-idx3-ubyte", test, 28, 28);
  return dir;
}

}  // namespace

TEST(Dataset, ProfilesCarryNormRule) {
  EXPECT_EQ(DatasetProfile::mnist("x").default_norm, Norm::l2);
  EXPECT_EQ(DatasetProfile::svhn("x").default_norm, Norm::l1);
  EXPECT_EQ(DatasetProfile::celeba("x").default_norm, Norm::l1);
  EXPECT_EQ(DatasetProfile::by_name("svhn", "root").source_path, fs::path("root") / "svhn");
  EXPECT_THROW(DatasetProfile::by_name("cifar", "root"), ConfigError);
}

TEST(Dataset, PackedArchiveLoadsNormalizedImages) {
  const auto dir = mnist_like("ds-idx", 5, 3);
  const auto train = load_dataset(DatasetProfile::mnist(dir), Split::train);
  const auto test = load_dataset(DatasetProfile::mnist(dir), Split::test);
  ASSERT_EQ(train.size(), 5u);
  ASSERT_EQ(test.size(), 3u);
  EXPECT_EQ(train[0].shape(), (ImageShape{1, 28, 28}));
  for (const auto& img : train) EXPECT_TRUE(img.in_unit_range());
  EXPECT_DOUBLE_EQ(train[0].pixels()[1], 7.0 / 255.0);
}

TEST(Dataset, ShippedMnistArchivesLoad) {
  const fs::path dir = fs::path(TYPEI_SOURCE_DIR) / "data" / "mnist";
  if (!fs::exists(dir)) GTEST_SKIP() << "no bundled MNIST";
  const auto test = load_dataset(DatasetProfile::mnist(dir), Split::test);
  EXPECT_EQ(test.size(), 1000u);
  EXPECT_TRUE(test.front().in_unit_range());
}

TEST(Dataset, LoadingTwiceIsIdentical) {
  const auto dir = mnist_like("ds-twice", 20, 4);
  EXPECT_EQ(load_dataset(DatasetProfile::mnist(dir), Split::train),
            load_dataset(DatasetProfile::mnist(dir), Split::train));
}

TEST(Dataset, SeededShuffleIsDeterministic) {
  const auto dir = mnist_like("ds-shuffle", 30, 4);
  const auto p = DatasetProfile::mnist(dir);
  const auto a = load_dataset(p, Split::train, 5), b = load_dataset(p, Split::train, 5);
  const auto plain = load_dataset(p, Split::train);
  ASSERT_GE(a.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_NE(a, plain);
  EXPECT_EQ(select_samples(plain, 6, 3), select_samples(plain, 6, 3));
}

TEST(Dataset, MaxTrainCapsTheSplit) {
  const auto dir = mnist_like("ds-cap", 12, 4);
  auto p = DatasetProfile::mnist(dir);
  p.max_train = 5;
  EXPECT_EQ(load_dataset(p, Split::train).size(), 5u);
}

TEST(Dataset, PngDirectoryWithIndex) {
  const auto dir = scratch_dir("ds-png");
  std::mt19937_64 rng(3);
  std::ofstream index(dir / "index.txt");
  index << "# split path\n";
  for (int i = 0; i < 4; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    write_png(dir / name, random_image({3, 32, 32}, rng));
    index << (i < 3 ? "train " : "test ") << name << "\n";
  }
  index.close();
  const auto p = DatasetProfile::svhn(dir);
  const auto train = load_dataset(p, Split::train);
  ASSERT_EQ(train.size(), 3u);
  EXPECT_EQ(train[0].shape(), (ImageShape{3, 32, 32}));
  EXPECT_EQ(load_dataset(p, Split::test).size(), 1u);
}

TEST(Dataset, IngestionErrorsNameTheFile) {
  const auto empty = scratch_dir("ds-empty");
  EXPECT_THROW(load_dataset(DatasetProfile::mnist(empty), Split::train), IngestionError);
  EXPECT_THROW(load_dataset(DatasetProfile::mnist(empty / "missing"), Split::train), IngestionError);

  const auto dir = scratch_dir("ds-corrupt");
  std::ofstream(dir / "train-images-idx3-ubyte") << "garbage";
  try {
    load_dataset(DatasetProfile::mnist(dir), Split::train);
    FAIL() << "expected an ingestion error";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("train-images-idx3-ubyte"), std::string::npos);
  }

  const auto shapes = scratch_dir("ds-shape");
  std::mt19937_64 rng(4);
  write_png(shapes / "a.png", random_image({3, 16, 16}, rng));
  std::ofstream(shapes / "index.txt") << "train a.png\n";
  try {
    load_dataset(DatasetProfile::svhn(shapes), Split::train);
    FAIL() << "expected an ingestion error";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("a.png"), std::string::npos);
  }
}
