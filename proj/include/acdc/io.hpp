#pragma once

#include "acdc/common.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace acdc::io {

/// Numeric CSV, one observation per row. Blank lines are skipped; every row
/// must have the same number of fields.
[[nodiscard]] DataMatrix parse_matrix_csv(const std::string &text, bool header);
[[nodiscard]] DataMatrix read_matrix_csv(const std::filesystem::path &path, bool header);

/// Shortest round-trip representation; integral values print without a decimal point.
[[nodiscard]] std::string format_number(double v);
[[nodiscard]] std::string format_matrix_csv(const DataMatrix &x,
                                            const std::vector<std::string> &header = {});

[[nodiscard]] std::string read_text(const std::filesystem::path &path);

/// Writes every file to a temporary sibling first and renames them only after
/// all writes succeeded, so a failure leaves none of the targets behind.
void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>> &files);

} // namespace acdc::io
