#include "fbp/pipeline/split.hpp"

#include <numeric>
#include <string>

#include "fbp/error.hpp"
#include "fbp/rng.hpp"

namespace fbp::pipeline {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.next_below(i)]);
  return v;
}

Split split_train_test(std::size_t n_records, std::size_t n_train, std::uint64_t seed) {
  if (n_train == 0 || n_train >= n_records)
    throw ArgumentError("split: n_train must satisfy 0 < n_train < " + std::to_string(n_records));
  const auto order = shuffled_indices(n_records, seed);
  return {{order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)},
          {order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end()}};
}

std::vector<Split> kfold(std::size_t n_records, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("kfold: k must be >= 2");
  if (k > n_records) throw ArgumentError("kfold: k=" + std::to_string(k) + " exceeds " + std::to_string(n_records) + " records");
  const auto order = shuffled_indices(n_records, seed);
  std::vector<std::size_t> bounds{0};
  for (std::size_t f = 0; f < k; ++f) bounds.push_back(bounds.back() + n_records / k + (f < n_records % k ? 1 : 0));

  std::vector<Split> folds(k);
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t i = 0; i < n_records; ++i)
      (i >= bounds[f] && i < bounds[f + 1] ? folds[f].test : folds[f].train).push_back(order[i]);
  return folds;
}

}  // namespace fbp::pipeline
