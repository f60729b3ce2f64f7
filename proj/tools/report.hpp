#pragma once

#include <optional>
#include <ostream>
#include <string>

namespace exorder::cli {

// Summarizes MANIFEST and the artifacts in `dir`. With `golden`, decay.csv rows must match the
// golden directory within 1e-9 absolute. Returns the process exit code.
int report_directory(const std::string& dir, const std::optional<std::string>& golden, std::ostream& out);

}  // namespace exorder::cli
