#include "iouf/io.hpp"

#include "iouf/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace iouf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

FlatConfig FlatConfig::parse(const std::string& text) {
  FlatConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.has(key)) throw ConfigError("duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void FlatConfig::set(const std::string& key, const std::string& value) {
  if (values_.count(key)) {
    for (auto& kv : order_)
      if (kv.first == key) kv.second = value;
  } else {
    order_.emplace_back(key, value);
  }
  values_[key] = value;
}

const std::string& FlatConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
  rows_.push_back(cells);
}

std::string CsvTable::body() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += "\r\n";
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string CsvTable::render(const std::vector<std::pair<std::string, std::string>>& header) const {
  std::string out;
  for (const auto& [k, v] : header) out += "# " + k + " = " + v + "\r\n";
  return out + body();
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_))
    throw ConfigError("cannot create output directory " + dir_.string());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  std::ofstream f(dir_ / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
  f << content;
  if (!f) throw ConfigError("write failed for " + (dir_ / name).string());
  files_.emplace_back(name, sha256_hex(content));
  sizes_.push_back(content.size());
}

void OutputDir::write_json(const std::string& name, const nlohmann::ordered_json& j) {
  write(name, j.dump(2) + "\n");
}

void OutputDir::write_manifest() {
  nlohmann::ordered_json m;
  m["files"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < files_.size(); ++i)
    m["files"].push_back({{"name", files_[i].first}, {"bytes", sizes_[i]}, {"sha256", files_[i].second}});
  std::ofstream f(dir_ / "manifest.json", std::ios::binary);
  f << m.dump(2) << "\n";
  if (!f) throw ConfigError("cannot write manifest");
}

}  // namespace iouf
