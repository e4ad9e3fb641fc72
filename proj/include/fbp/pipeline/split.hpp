#pragma once

#include <cstdint>
#include <vector>

namespace fbp::pipeline {

// Record indices into a DatasetIndex.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

// Shuffle, then the first n_train indices train and the rest test.
Split split_train_test(std::size_t n_records, std::size_t n_train, std::uint64_t seed);

// Shuffle, then k contiguous folds; the first n % k folds get one extra
// record. Fold i is the test set of split i.
std::vector<Split> kfold(std::size_t n_records, std::size_t k, std::uint64_t seed);

}  // namespace fbp::pipeline
