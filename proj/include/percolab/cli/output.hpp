#pragma once

// CSV tables, atomic file writes, SHA-256 digests and the result manifest.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "percolab/errors.hpp"

namespace percolab::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

// 12 significant digits, locale independent.
inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { row(header); }

  class Row {
   public:
    Row& operator<<(const std::string& s) { return add(csv_field(s)); }
    Row& operator<<(const char* s) { return add(csv_field(s)); }
    Row& operator<<(double x) { return add(format_real(x)); }
    Row& operator<<(std::uint64_t x) { return add(std::to_string(x)); }
    Row& operator<<(unsigned x) { return add(std::to_string(x)); }
    Row& operator<<(int x) { return add(std::to_string(x)); }
    Row& operator<<(bool x) { return add(x ? "true" : "false"); }
    ~Row() noexcept(false) {
      if (n_ != table_.columns_ && std::uncaught_exceptions() == 0) throw Error("csv row has " + std::to_string(n_) + " fields, expected " +
                                             std::to_string(table_.columns_));
      table_.text_ += '\n';
      ++table_.rows_;
    }

   private:
    friend class CsvTable;
    explicit Row(CsvTable& t) : table_(t) {}
    Row& add(const std::string& field) {
      if (n_++ > 0) table_.text_ += ',';
      table_.text_ += field;
      return *this;
    }
    CsvTable& table_;
    std::size_t n_ = 0;
  };

  Row add_row() { return Row(*this); }
  const std::string& text() const noexcept { return text_; }
  std::size_t rows() const noexcept { return rows_ - 1; }

 private:
  void row(const std::vector<std::string>& fields) {
    auto r = add_row();
    for (const auto& f : fields) r << f;
  }
  std::size_t columns_;
  std::string text_;
  std::size_t rows_ = 0;
};

// Write to a temporary sibling, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// nlohmann::json objects are std::map backed, so keys serialize sorted.
struct Manifest {
  nlohmann::json body = nlohmann::json::object();

  void add_output(const std::string& file, const CsvTable& table) {
    body["outputs"].push_back({{"file", file}, {"sha256", sha256_hex(table.text())}, {"rows", table.rows()}});
  }
  std::string dump() const { return body.dump(2) + "\n"; }
};

}  // namespace percolab::cli
