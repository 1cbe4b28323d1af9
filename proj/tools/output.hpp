#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace macroreal::cli {

/// 17 significant digits, '.' decimal point, "inf"/"nan" spelled out; locale independent.
std::string format_double(double value);

std::string sha256_hex(const std::string& bytes);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& cell(double value);
  Csv& cell(const std::string& value);
  Csv& cell(long long value);
  void end_row();
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t filled_ = 0;
  std::string text_;
};

/// Outputs are staged in memory and only reach the directory once every one
/// of them has been produced. Each file is written to a temporary name and
/// renamed into place; a failure part way removes what was already moved.
class OutputSet {
 public:
  void add(const std::string& name, std::string content);
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  void commit(const std::filesystem::path& directory) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

class StageTimer {
 public:
  StageTimer();
  void mark(const std::string& stage);
  double total() const;
  const std::vector<std::pair<std::string, double>>& stages() const { return stages_; }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_, last_;
  std::vector<std::pair<std::string, double>> stages_;
};

}  // namespace macroreal::cli
