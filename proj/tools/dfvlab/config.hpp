#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dfv::cli {

/// Flat `dotted.key = value` configuration. `#` starts a comment, blank lines
/// are ignored, keys may appear once. Every lookup error names the source
/// line and key and throws Error(Config).
class Config {
 public:
  static Config parse(std::istream& in, std::string origin);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);  // command-line overrides

  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t u64(const std::string& key) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> reals(const std::string& key) const;          // comma list
  std::vector<std::size_t> indices(const std::string& key) const;   // comma list
  std::vector<std::string> words(const std::string& key) const;     // comma list

  /// Relative paths resolve against the config file's directory.
  std::filesystem::path path(const std::string& key) const;

  /// Entries in file order, overrides last.
  std::vector<std::pair<std::string, std::string>> entries() const;

  /// Keys never looked up, for "unused key" warnings.
  std::vector<std::string> unused() const;

  /// FNV-1a of the sorted key=value lines.
  std::uint64_t hash() const;

  const std::string& origin() const noexcept { return origin_; }
  std::string where(const std::string& key) const;  // "file:line" or "file"

  [[noreturn]] void error(const std::string& key, const std::string& what) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;  // 0 for overrides
  };
  const Entry& need(const std::string& key) const;
  const Entry* find(const std::string& key) const;

  std::string origin_;
  std::filesystem::path base_;
  std::vector<std::string> order_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull);
inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace dfv::cli
