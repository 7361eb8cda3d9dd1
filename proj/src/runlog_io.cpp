#include "gaitclone/runlog_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gaitclone/ini.hpp"

namespace gaitclone {

const char* const kRunLogHeader =
    "t, th_d_pk, th_a_pk, th_d_pa, th_a_pa, dth_d_pk, dth_a_pk, dth_d_pa, "
    "dth_a_pa, e_pk, e_pa, de_pk, de_pa, s, tau_pk, tau_pa";

namespace {

constexpr int kColumns = 16;

double TickRecord::* const kFields[kColumns] = {
    &TickRecord::t,        &TickRecord::th_d_pk,  &TickRecord::th_a_pk,
    &TickRecord::th_d_pa,  &TickRecord::th_a_pa,  &TickRecord::dth_d_pk,
    &TickRecord::dth_a_pk, &TickRecord::dth_d_pa, &TickRecord::dth_a_pa,
    &TickRecord::e_pk,     &TickRecord::e_pa,     &TickRecord::de_pk,
    &TickRecord::de_pa,    &TickRecord::s,        &TickRecord::tau_pk,
    &TickRecord::tau_pa};

double parse_field(const std::string& cell, const std::filesystem::path& path,
                   int line) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  const bool overflow = errno == ERANGE && (v == HUGE_VAL || v == -HUGE_VAL);
  if (end == begin || (end && *end != '\0') || overflow) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) +
                             ": bad numeric field '" + cell + "'");
  }
  return v;
}

}  // namespace

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p += ".meta.ini";
  return p;
}

void save_runlog(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << kRunLogHeader << "\n";
  char buf[32];
  for (const TickRecord& r : log.ticks) {
    for (int c = 0; c < kColumns; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", r.*kFields[c]);
      if (c) out << ", ";
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
  out.close();

  Ini meta;
  meta.set("run", "controller", log.meta.controller_id);
  meta.set("run", "slope", log.meta.slope_preset);
  meta.set_u64("run", "seed", log.meta.seed);
  meta.set("run", "config_hash", log.meta.config_hash);
  meta.set("run", "ticks", static_cast<std::int64_t>(log.ticks.size()));
  meta.save(meta_path_for(path));
}

RunLog load_runlog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run log: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty run log: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRunLogHeader)
    throw std::runtime_error("unrecognized run log header in " + path.string());

  RunLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    TickRecord rec{};
    std::istringstream row(line);
    std::string cell;
    int c = 0;
    while (std::getline(row, cell, ',')) {
      if (c >= kColumns)
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": too many columns");
      rec.*kFields[c] = parse_field(cell, path, lineno);
      ++c;
    }
    if (c != kColumns)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(kColumns) +
                               " columns, got " + std::to_string(c));
    log.ticks.push_back(rec);
  }

  const std::filesystem::path mp = meta_path_for(path);
  if (std::filesystem::exists(mp)) {
    Ini meta = Ini::load(mp);
    log.meta.controller_id = meta.get_or("run", "controller", "unknown");
    log.meta.slope_preset = meta.get_or("run", "slope", "flat");
    log.meta.seed = meta.get_u64_or("run", "seed", 0);
    log.meta.config_hash = meta.get_or("run", "config_hash", "");
  }
  return log;
}

}  // namespace gaitclone
