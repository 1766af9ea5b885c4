#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typei/attack_types.hpp"
#include "typei/tensor.hpp"

namespace typei {

enum class Split { train, test };

std::string to_string(Split split);

// Where a dataset lives and how its images look. default_norm is l2 for the
// MNIST profile and l1 for the SVHN / CelebA profiles.
//
// Two on-disk layouts are recognized under source_path:
//  * packed MNIST archives: {train,t10k}-images-idx3-ubyte[.gz]
//  * a directory of PNG files with an `index.txt` listing one
//    "<train|test> <relative path>" entry per line ('#' starts a comment)
struct DatasetProfile {
  std::string name;
  ImageShape image_shape;
  Norm default_norm = Norm::l2;
  std::filesystem::path source_path;
  std::size_t max_train = 0;  // 0 keeps every image of the split
  std::size_t max_test = 0;

  static DatasetProfile mnist(std::filesystem::path source);
  static DatasetProfile svhn(std::filesystem::path source);
  static DatasetProfile celeba(std::filesystem::path source);
  // name in {mnist, svhn, celeba}; source defaults to <data_root>/<name>.
  static DatasetProfile by_name(const std::string& name, const std::filesystem::path& data_root);
};

// Images of one split normalized to [0, 1], in file order, or shuffled
// deterministically when a seed is given.
std::vector<Image> load_dataset(const DatasetProfile& profile, Split split,
                                std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// First n images of a seeded permutation.
std::vector<Image> select_samples(std::span<const Image> images, std::size_t n, std::uint64_t seed);

// Reads a packed IDX image archive (optionally gzip-compressed).
std::vector<Image> read_idx_images(const std::filesystem::path& path);

}  // namespace typei
