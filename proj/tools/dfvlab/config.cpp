#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dfv/numcore/error.hpp"

namespace dfv::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
           c == '-';
  });
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

Config Config::parse(std::istream& in, std::string origin) {
  Config c;
  c.origin_ = std::move(origin);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string at = c.origin_ + ":" + std::to_string(line);
    if (eq == std::string::npos) fail(ErrorKind::Config, at + ": expected key=value, got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!valid_key(key)) fail(ErrorKind::Config, at + ": malformed key '" + key + "'");
    if (c.entries_.count(key)) {
      fail(ErrorKind::Config, at + ": key '" + key + "' already set on line " + std::to_string(c.entries_[key].line));
    }
    c.entries_[key] = {value, line};
    c.order_.push_back(key);
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  Config c = parse(in, path.string());
  c.base_ = path.parent_path();
  return c;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

void Config::set(const std::string& key, std::string value) {
  if (!valid_key(key)) fail(ErrorKind::Config, "malformed override key '" + key + "'");
  auto [it, fresh] = entries_.try_emplace(key);
  if (fresh) order_.push_back(key);
  it->second = {std::move(value), 0};
}

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

const Config::Entry& Config::need(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) fail(ErrorKind::Config, origin_ + ": missing required key '" + key + "'");
  return *e;
}

std::string Config::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return origin_;
  return origin_ + ":" + std::to_string(it->second.line);
}

void Config::error(const std::string& key, const std::string& what) const {
  fail(ErrorKind::Config, where(key) + ": key '" + key + "': " + what);
}

std::string Config::str(const std::string& key) const { return need(key).value; }

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_number(need(key).value, v)) error(key, "expected a number, got '" + need(key).value + "'");
  return v;
}

double Config::real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

std::int64_t Config::integer(const std::string& key) const {
  std::int64_t v = 0;
  if (!parse_number(need(key).value, v)) error(key, "expected an integer, got '" + need(key).value + "'");
  return v;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Config::u64(const std::string& key) const {
  std::uint64_t v = 0;
  if (!parse_number(need(key).value, v)) error(key, "expected a non-negative integer, got '" + need(key).value + "'");
  return v;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? u64(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = need(key).value;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  error(key, "expected true or false, got '" + v + "'");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : split_commas(need(key).value)) {
    double v = 0.0;
    if (!parse_number(w, v)) error(key, "expected a comma-separated list of numbers");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Config::indices(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& w : split_commas(need(key).value)) {
    std::size_t v = 0;
    if (!parse_number(w, v)) error(key, "expected a comma-separated list of non-negative integers");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::words(const std::string& key) const {
  std::vector<std::string> out = split_commas(need(key).value);
  for (const auto& w : out) {
    if (w.empty()) error(key, "empty list item");
  }
  return out;
}

std::filesystem::path Config::path(const std::string& key) const {
  std::filesystem::path p = need(key).value;
  if (p.empty()) error(key, "empty path");
  if (p.is_relative() && !base_.empty()) p = base_ / p;
  return p;
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : order_) {
    used_.insert(k);
    out.emplace_back(k, entries_.at(k).value);
  }
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& k : order_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::uint64_t Config::hash() const {
  std::string canon;
  for (const auto& [k, e] : entries_) canon += k + "=" + e.value + "\n";
  return fnv1a(canon);
}

}  // namespace dfv::cli
