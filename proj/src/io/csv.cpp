#include "acdc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace acdc::io {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line, std::size_t column) {
  field = trim(field);
  if (!field.empty() && field.front() == '+')
    field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  require(ec == std::errc() && ptr == field.data() + field.size() && !field.empty(),
          ErrorCode::Parse,
          "line " + std::to_string(line) + ", column " + std::to_string(column) +
              ": not a number: '" + std::string(field) + "'");
  require(std::isfinite(v), ErrorCode::Parse,
          "line " + std::to_string(line) + ", column " + std::to_string(column) +
              ": non-finite value");
  return v;
}

} // namespace

DataMatrix parse_matrix_csv(const std::string &text, bool header) {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool skipped_header = !header;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::size_t n = 0, start = 0;
    const std::string_view sv(line);
    while (true) {
      const std::size_t comma = sv.find(',', start);
      values.push_back(parse_field(sv.substr(start, comma - start), line_no, n + 1));
      ++n;
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (rows == 0)
      cols = n;
    require(n == cols, ErrorCode::Parse,
            "line " + std::to_string(line_no) + " has " + std::to_string(n) + " fields, expected " +
                std::to_string(cols));
    ++rows;
  }
  require(rows > 0, ErrorCode::EmptyInput, "no data rows");
  DataMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
  return x;
}

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataMatrix read_matrix_csv(const fs::path &path, bool header) {
  try {
    return parse_matrix_csv(read_text(path), header);
  } catch (const Error &e) {
    rethrow_with_context(e, path.string());
  }
}

std::string format_number(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15) {
    const auto r = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    return {buf, r.ptr};
  }
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string format_matrix_csv(const DataMatrix &x, const std::vector<std::string> &header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i)
    out += (i ? "," : "") + header[i];
  if (!header.empty())
    out += '\n';
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (c)
        out += ',';
      out += format_number(x(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_files_atomically(const std::vector<std::pair<fs::path, std::string>> &files) {
  std::vector<fs::path> temps;
  const auto cleanup = [&] {
    std::error_code ec;
    for (const auto &t : temps)
      fs::remove(t, ec);
  };
  for (const auto &[path, content] : files) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(dir)) {
      cleanup();
      throw Error(ErrorCode::Io, "output directory does not exist: " + dir.string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    fs::rename(temps[i], files[i].first, ec);
    if (ec) {
      cleanup();
      throw Error(ErrorCode::Io, "cannot rename into " + files[i].first.string() + ": " + ec.message());
    }
  }
}

} // namespace acdc::io
