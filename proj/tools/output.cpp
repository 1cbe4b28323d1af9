#include "output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "macroreal/types.hpp"

namespace macroreal::cli {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += "\n";
}

Csv& Csv::cell(const std::string& value) {
  if (filled_ == columns_) throw std::logic_error("CSV row overflow");
  text_ += (filled_++ ? "," : "") + value;
  return *this;
}

Csv& Csv::cell(double value) { return cell(format_double(value)); }
Csv& Csv::cell(long long value) { return cell(std::to_string(value)); }

void Csv::end_row() {
  if (filled_ != columns_) throw std::logic_error("CSV row underflow");
  text_ += "\n";
  filled_ = 0;
}

void OutputSet::add(const std::string& name, std::string content) {
  files_.emplace_back(name, std::move(content));
}

void OutputSet::commit(const std::filesystem::path& directory) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) fail(ErrorKind::regime, "cannot create output directory " + directory.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto rollback = [&] {
    for (const auto& p : written) fs::remove(p, ec);
  };
  for (const auto& [name, content] : files_) {
    const fs::path target = directory / name;
    const fs::path temp = directory / ("." + name + ".partial");
    {
      std::ofstream out(temp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.close();
      if (!out) {
        fs::remove(temp, ec);
        rollback();
        fail(ErrorKind::regime, "cannot write " + target.string());
      }
    }
    fs::rename(temp, target, ec);
    if (ec) {
      fs::remove(temp, ec);
      rollback();
      fail(ErrorKind::regime, "cannot move " + target.string() + " into place");
    }
    written.push_back(target);
  }
}

StageTimer::StageTimer() : start_(Clock::now()), last_(start_) {}

void StageTimer::mark(const std::string& stage) {
  const auto now = Clock::now();
  stages_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
  last_ = now;
}

double StageTimer::total() const {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

}  // namespace macroreal::cli
