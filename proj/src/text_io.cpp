#include "text_io.hpp"

#include "error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace anisonet {

std::string fmt_real(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

LineReader::LineReader(std::istream& in, std::string format) : in_(in), format_(std::move(format)) {}

std::vector<std::string> LineReader::tokens() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    if (!out.empty()) return out;
  }
  fail("unexpected end of file");
}

void LineReader::expect_end() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") != std::string::npos) fail("trailing content");
  }
}

double LineReader::to_double(const std::string& s) const {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad real '" + s + "'");
  if (!std::isfinite(v)) fail("non-finite value '" + s + "'");
  return v;
}

int LineReader::to_int(const std::string& s) const {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
  return v;
}

std::size_t LineReader::to_count(const std::string& s) const {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad count '" + s + "'");
  return v;
}

void LineReader::fail(std::string_view what) const {
  throw ParseError(format_ + " line " + std::to_string(line_no_) + ": " + std::string(what));
}

NodalField parse_nfield(std::istream& in) {
  LineReader reader(in, "nfield");
  auto header = reader.tokens();
  if (header.size() != 4 || header[0] != "nfield" || header[1] != "1")
    reader.fail("expected header 'nfield 1 <n_nodes> <n_components>'");
  const std::size_t n = reader.to_count(header[2]);
  NodalField field;
  field.components = reader.to_count(header[3]);
  if (field.components == 0) reader.fail("component count must be positive");
  field.values.reserve(n * field.components);
  for (std::size_t i = 0; i < n; ++i) {
    auto tok = reader.tokens();
    if (tok.size() != field.components) reader.fail("wrong component count");
    for (const auto& t : tok) field.values.push_back(reader.to_double(t));
  }
  reader.expect_end();
  return field;
}

NodalField read_nfield(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field file " + path.string());
  try {
    return parse_nfield(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_nfield(const std::filesystem::path& path, const NodalField& field) {
  std::ostringstream out;
  const std::size_t n = field.num_nodes();
  out << "nfield 1 " << n << ' ' << field.components << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < field.components; ++c) {
      if (c) out << ' ';
      out << fmt_real(field(i, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

} // namespace anisonet
