#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fbp::pipeline {

struct Record {
  std::filesystem::path path;  // resolved against the index file's directory
  double score = 0.0;          // ground-truth beauty score in [1, 5]
};

struct DatasetIndex {
  std::vector<Record> records;
  std::string provenance = "scut-fbp";  // or "synthetic"

  std::size_t size() const { return records.size(); }
};

// CSV with header `path,score`. Relative paths are resolved against the CSV
// directory. Rejects scores outside [1,5] and duplicate paths, naming the row.
DatasetIndex load_index(const std::filesystem::path& csv_path);

// Writes `path,score`; paths are written relative to the CSV directory when
// they live beneath it.
void write_index(const DatasetIndex& idx, const std::filesystem::path& csv_path);

}  // namespace fbp::pipeline
