#pragma once

#include <filesystem>

#include "gaitclone/control.hpp"

namespace gaitclone {

/// Column order of the on-disk run log. The header line is part of the file
/// format; readers reject anything else.
extern const char* const kRunLogHeader;

/// Writes `log` as CSV plus a `<path>.meta.ini` sidecar. Floats are printed
/// with %.17g so a read-back is value-exact.
void save_runlog(const RunLog& log, const std::filesystem::path& path);

RunLog load_runlog(const std::filesystem::path& path);

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

}  // namespace gaitclone
