#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gaitclone {

/// Minimal INI document: ordered [section] blocks of key = value lines.
/// Lines starting with '#' or ';' are comments. Section and key order is
/// preserved so serialization is canonical (important for config hashing).
class Ini {
 public:
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key,
           std::int64_t value);
  void set_u64(const std::string& section, const std::string& key,
               std::uint64_t value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const;
  std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;

  std::string serialize() const;
  static Ini parse(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static Ini load(const std::filesystem::path& path);

  const std::vector<std::string>& sections() const { return order_; }
  std::vector<std::string> keys(const std::string& section) const;

 private:
  struct Section {
    std::vector<std::pair<std::string, std::string>> entries;
  };
  Section& section(const std::string& name);
  const Section* find(const std::string& name) const;

  std::vector<std::string> order_;
  std::map<std::string, Section> sections_;
};

/// FNV-1a 64-bit hash of a string, hex-encoded. Used to stamp outputs with
/// the configuration they came from.
std::string fnv1a_hex(const std::string& text);

}  // namespace gaitclone
