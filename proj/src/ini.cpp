#include "gaitclone/ini.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gaitclone {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Ini::Section& Ini::section(const std::string& name) {
  auto it = sections_.find(name);
  if (it == sections_.end()) {
    order_.push_back(name);
    it = sections_.emplace(name, Section{}).first;
  }
  return it->second;
}

const Ini::Section* Ini::find(const std::string& name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

void Ini::set(const std::string& sec, const std::string& key,
              const std::string& value) {
  auto& s = section(sec);
  for (auto& [k, v] : s.entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  s.entries.emplace_back(key, value);
}

void Ini::set(const std::string& sec, const std::string& key, double value) {
  set(sec, key, format_double(value));
}

void Ini::set(const std::string& sec, const std::string& key,
              std::int64_t value) {
  set(sec, key, std::to_string(value));
}

void Ini::set_u64(const std::string& sec, const std::string& key,
                  std::uint64_t value) {
  set(sec, key, std::to_string(value));
}

bool Ini::has(const std::string& sec, const std::string& key) const {
  const Section* s = find(sec);
  if (!s) return false;
  for (const auto& [k, v] : s->entries) {
    if (k == key) return true;
  }
  return false;
}

std::string Ini::get(const std::string& sec, const std::string& key) const {
  const Section* s = find(sec);
  if (s) {
    for (const auto& [k, v] : s->entries) {
      if (k == key) return v;
    }
  }
  throw std::runtime_error("missing config key [" + sec + "] " + key);
}

std::string Ini::get_or(const std::string& sec, const std::string& key,
                        const std::string& fallback) const {
  return has(sec, key) ? get(sec, key) : fallback;
}

double Ini::get_double(const std::string& sec, const std::string& key) const {
  const std::string v = get(sec, key);
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(begin, &end);
  // Underflow to a subnormal is fine (nearest representable value); only
  // overflow or trailing garbage is an error.
  const bool overflow = errno == ERANGE && (d == HUGE_VAL || d == -HUGE_VAL);
  if (end == begin || *end != '\0' || overflow) {
    throw std::runtime_error("config key [" + sec + "] " + key +
                             " is not a number: " + v);
  }
  return d;
}

double Ini::get_double_or(const std::string& sec, const std::string& key,
                          double fallback) const {
  return has(sec, key) ? get_double(sec, key) : fallback;
}

std::int64_t Ini::get_int(const std::string& sec, const std::string& key) const {
  const std::string v = get(sec, key);
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::runtime_error("config key [" + sec + "] " + key +
                             " is not an integer: " + v);
  }
  return out;
}

std::int64_t Ini::get_int_or(const std::string& sec, const std::string& key,
                             std::int64_t fallback) const {
  return has(sec, key) ? get_int(sec, key) : fallback;
}

std::uint64_t Ini::get_u64_or(const std::string& sec, const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(sec, key)) return fallback;
  const std::string v = get(sec, key);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::runtime_error("config key [" + sec + "] " + key +
                             " is not an unsigned integer: " + v);
  }
  return out;
}

std::vector<std::string> Ini::keys(const std::string& section) const {
  std::vector<std::string> out;
  if (const Section* s = find(section))
    for (const auto& [k, v] : s->entries) out.push_back(k);
  return out;
}

std::string Ini::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& name : order_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << name << "]\n";
    for (const auto& [k, v] : sections_.at(name).entries) {
      out << k << " = " << v << "\n";
    }
  }
  return out.str();
}

Ini Ini::parse(const std::string& text) {
  Ini ini;
  std::istringstream in(text);
  std::string line;
  std::string current = "";
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        throw std::runtime_error("malformed section header at line " +
                                 std::to_string(lineno));
      }
      current = trim(s.substr(1, s.size() - 2));
      ini.section(current);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("expected key = value at line " +
                               std::to_string(lineno));
    }
    if (current.empty()) {
      throw std::runtime_error("key before any [section] at line " +
                               std::to_string(lineno));
    }
    ini.set(current, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return ini;
}

void Ini::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize();
}

Ini Ini::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gaitclone
