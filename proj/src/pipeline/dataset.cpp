#include "fbp/pipeline/dataset.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "fbp/error.hpp"

namespace fbp::pipeline {

namespace {

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::string format_score(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

DatasetIndex load_index(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open index " + csv_path.string());
  const auto dir = csv_path.parent_path();

  DatasetIndex idx;
  std::set<std::string> seen;
  std::string line;
  std::size_t row = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (line != "path,score")
        throw ValidationError(csv_path.string() + ": row " + std::to_string(row) + ": expected header 'path,score'");
      header = false;
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ValidationError(csv_path.string() + ": row " + std::to_string(row) + ": expected 'path,score'");
    const std::string path = trim(line.substr(0, comma));
    const std::string score_text = trim(line.substr(comma + 1));
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (path.empty() || ec != std::errc{} || ptr != score_text.data() + score_text.size())
      throw ValidationError(csv_path.string() + ": row " + std::to_string(row) + ": cannot parse '" + line + "'");
    if (!(score >= 1.0 && score <= 5.0))
      throw ValidationError(csv_path.string() + ": row " + std::to_string(row) + ": score " + score_text +
                            " outside [1,5]");
    if (!seen.insert(path).second)
      throw ValidationError(csv_path.string() + ": row " + std::to_string(row) + ": duplicate path '" + path + "'");
    std::filesystem::path p(path);
    idx.records.push_back({p.is_absolute() ? p : dir / p, score});
  }
  if (header) throw ValidationError(csv_path.string() + ": missing header 'path,score'");
  return idx;
}

void write_index(const DatasetIndex& idx, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write index " + csv_path.string());
  const auto dir = csv_path.parent_path();
  out << "path,score\n";
  for (const auto& r : idx.records) {
    auto rel = r.path.lexically_relative(dir.empty() ? "." : dir);
    const bool inside = !rel.empty() && rel.native().rfind("..", 0) != 0;
    out << (inside ? rel.generic_string() : r.path.generic_string()) << "," << format_score(r.score) << "\n";
  }
  if (!out) throw IoError("write failed for " + csv_path.string());
}

}  // namespace fbp::pipeline
