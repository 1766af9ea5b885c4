#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "support.hpp"
#include "typei/checkpoint.hpp"
#include "typei/error.hpp"

using namespace typei;
using namespace typei::test;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST(Checkpoint, VaeRoundTripIsExact) {
  const auto dir = scratch_dir("ckpt-vae");
  const auto vae = tiny_vae(17);
  save_checkpoint(vae, dir / "m.ckpt");
  EXPECT_EQ(checkpoint_kind(dir / "m.ckpt"), ModelKind::vae);
  const auto loaded = load_vae(dir / "m.ckpt");
  EXPECT_EQ(loaded.config(), vae.config());
  std::mt19937_64 rng(1);
  const Image x = random_image(vae.input_shape(), rng);
  EXPECT_EQ(loaded.reconstruct(x), vae.reconstruct(x));
  EXPECT_TRUE(std::holds_alternative<VaeModel>(load_checkpoint(dir / "m.ckpt")));
}

TEST(Checkpoint, StyleGeneratorRoundTripIsExact) {
  const auto dir = scratch_dir("ckpt-style");
  const auto gen = tiny_generator(23);
  save_checkpoint(gen, dir / "g.ckpt");
  EXPECT_EQ(checkpoint_kind(dir / "g.ckpt"), ModelKind::style_generator);
  const auto loaded = load_style_generator(dir / "g.ckpt");
  std::mt19937_64 rng(2);
  const auto z = random_latent(gen.config().latent_dim, rng);
  EXPECT_EQ(loaded.generate(z), gen.generate(z));
}

TEST(Checkpoint, SavingTwiceIsByteIdentical) {
  const auto dir = scratch_dir("ckpt-bytes");
  save_checkpoint(tiny_vae(5), dir / "a.ckpt");
  save_checkpoint(tiny_vae(5), dir / "b.ckpt");
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
}

TEST(Checkpoint, WrongKindIsRejected) {
  const auto dir = scratch_dir("ckpt-kind");
  save_checkpoint(tiny_vae(), dir / "m.ckpt");
  EXPECT_THROW(load_style_generator(dir / "m.ckpt"), CheckpointError);
}

TEST(Checkpoint, TruncationIsDetected) {
  const auto dir = scratch_dir("ckpt-trunc");
  save_checkpoint(tiny_vae(), dir / "m.ckpt");
  const auto bytes = slurp(dir / "m.ckpt");
  for (std::size_t keep : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    spit(dir / "cut.ckpt", bytes.substr(0, keep));
    EXPECT_THROW(load_vae(dir / "cut.ckpt"), CheckpointError) << "kept " << keep << " bytes";
  }
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto dir = scratch_dir("ckpt-flip");
  save_checkpoint(tiny_vae(), dir / "m.ckpt");
  auto bytes = slurp(dir / "m.ckpt");
  bytes[bytes.size() - 100] ^= 0x01;  // inside the last parameter array
  spit(dir / "bad.ckpt", bytes);
  EXPECT_THROW(load_vae(dir / "bad.ckpt"), CheckpointError);
}

TEST(Checkpoint, VersionMismatchHasItsOwnError) {
  const auto dir = scratch_dir("ckpt-version");
  save_checkpoint(tiny_vae(), dir / "m.ckpt");
  auto bytes = slurp(dir / "m.ckpt");
  bytes[8] = 99;  // first byte of the little-endian version after the 8-byte magic
  spit(dir / "v.ckpt", bytes);
  EXPECT_THROW(load_vae(dir / "v.ckpt"), CheckpointVersionError);
}

TEST(Checkpoint, MissingFileIsAnError) {
  EXPECT_THROW(load_vae("/nonexistent/typei.ckpt"), CheckpointError);
}
