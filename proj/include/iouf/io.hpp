#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace iouf {

// Flat "key = value" configuration.  '#' starts a comment, "[section]" lines
// prefix the following keys with "section.".  Insertion order is kept so the
// echo in output headers is stable.
class FlatConfig {
 public:
  static FlatConfig parse(const std::string& text);
  static FlatConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> order_;
};

// Shortest round-trip decimal form, independent of locale.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  // "# key = value" comment lines, then the header row and the body.
  std::string render(const std::vector<std::pair<std::string, std::string>>& header) const;
  std::string body() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(const std::string& cell);

std::string sha256_hex(const std::string& data);

// Output directory plus the manifest of everything written to it.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);
  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::ordered_json& j);
  // manifest.json: name, bytes, sha256 for every file written so far.
  void write_manifest();
  const std::filesystem::path& path() const { return dir_; }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;  // name, hash
  std::vector<std::size_t> sizes_;
};

}  // namespace iouf
