#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace anisonet {

/// 17-significant-digit decimal (printf %.17g), lossless for doubles.
std::string fmt_real(double v);

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place, so readers never
/// observe a partially written artifact.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

/// Whitespace-tokenizing reader for the line-oriented ASCII formats. Blank
/// lines are skipped. Errors carry the format name and line number.
class LineReader {
public:
  LineReader(std::istream& in, std::string format);

  std::vector<std::string> tokens();
  void expect_end();

  double to_double(const std::string& s) const;
  int to_int(const std::string& s) const;
  std::size_t to_count(const std::string& s) const;

  [[noreturn]] void fail(std::string_view what) const;

private:
  std::istream& in_;
  std::string format_;
  std::size_t line_no_ = 0;
};

/// Multi-component nodal field (`nfield 1 <n_nodes> <n_components>`), stored
/// row-major: values[node * components + c].
struct NodalField {
  std::size_t components = 1;
  std::vector<double> values;

  std::size_t num_nodes() const { return components ? values.size() / components : 0; }
  double operator()(std::size_t node, std::size_t c) const { return values[node * components + c]; }
};

NodalField parse_nfield(std::istream& in);
NodalField read_nfield(const std::filesystem::path& path);
void write_nfield(const std::filesystem::path& path, const NodalField& field);

} // namespace anisonet
