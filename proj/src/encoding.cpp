#include "encoding.hpp"

#include "error.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace anisonet {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 doubled(double angle) { return {std::cos(2.0 * angle), std::sin(2.0 * angle)}; }

double half_angle(const Vec2& v) {
  const double n = v.norm();
  if (!(n >= 1e-12) || !std::isfinite(n)) throw NumericError("direction vector has (near) zero magnitude");
  return 0.5 * std::atan2(v.y() / n, v.x() / n);
}

double fold_half_turn(double a) {
  if (a < 0.0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

} // namespace

std::array<double, AnisoEncoding::kWidth> AnisoEncoding::row() const {
  return {spacing[0], spacing[1], spacing[2], v[0].x(), v[0].y(), v[1].x(), v[1].y(), v[2].x(), v[2].y()};
}

AnisoEncoding AnisoEncoding::from_row(const double* r) {
  AnisoEncoding e;
  e.spacing = {r[0], r[1], r[2]};
  e.v = {Vec2(r[3], r[4]), Vec2(r[5], r[6]), Vec2(r[7], r[8])};
  return e;
}

Vec3 direction_from_angles(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

std::pair<Vec3, Vec3> reference_basis(const Vec3& e1) {
  int k = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(e1[a]) < std::abs(e1[k])) k = a;
  const Vec3 axis = Vec3::Unit(k);
  const Vec3 u = (axis - axis.dot(e1) * e1).normalized();
  return {u, e1.cross(u)};
}

FrameAngles frame_angles(const MetricFrame& frame) {
  Vec3 e1 = frame.axes[0];
  FrameAngles a;
  const double rxy = std::hypot(e1.x(), e1.y());
  if (rxy < 1e-14) {
    e1 = Vec3::UnitZ();
    a.azimuth = 0.0;
    a.elevation = kPi / 2;
  } else {
    a.azimuth = std::atan2(e1.y(), e1.x());
    a.elevation = std::atan2(e1.z(), rxy);
    if (a.azimuth < 0.0 || a.azimuth >= kPi) {
      a.azimuth = fold_half_turn(a.azimuth);
      a.elevation = -a.elevation;
      e1 = -e1;
    }
  }
  const auto [u, w] = reference_basis(e1);
  const Vec3& e2 = frame.axes[1];
  a.in_plane = fold_half_turn(std::atan2(e2.dot(w), e2.dot(u)));
  return a;
}

AnisoEncoding encode_metric(const Metric& m) {
  const MetricFrame f = decompose_metric(m);
  const FrameAngles a = frame_angles(f);
  AnisoEncoding enc;
  enc.spacing = f.spacing;
  enc.v = {doubled(a.azimuth), doubled(a.elevation), doubled(a.in_plane)};
  return enc;
}

MetricFrame decode_frame(const AnisoEncoding& enc) {
  for (double d : enc.spacing)
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("encoded spacing must be positive and finite");
  const double azimuth = fold_half_turn(half_angle(enc.v[0]));
  const double elevation = half_angle(enc.v[1]);
  const double in_plane = half_angle(enc.v[2]);

  MetricFrame f;
  f.axes[0] = direction_from_angles(azimuth, elevation);
  const auto [u, w] = reference_basis(f.axes[0]);
  f.axes[1] = std::cos(in_plane) * u + std::sin(in_plane) * w;
  f.axes[2] = f.axes[0].cross(f.axes[1]);
  f.spacing = enc.spacing;
  std::sort(f.spacing.begin(), f.spacing.end());
  return f;
}

Metric decode_encoding(const AnisoEncoding& enc) { return metric_from_frame(decode_frame(enc)); }

EncodingTable encode_field(const MetricField& field) {
  EncodingTable out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    try {
      out.push_back(encode_metric(field[i]));
    } catch (const NumericError& e) {
      throw NumericError("node " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

MetricField decode_field(const EncodingTable& table) {
  MetricField out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    try {
      out.push_back(decode_encoding(table[i]));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("node " + std::to_string(i) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("node " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

EncodingTable read_aenc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open encoding table " + path.string());
  LineReader reader(in, path.string());
  auto header = reader.tokens();
  if (header.size() != 3 || header[0] != "aenc" || header[1] != "1")
    reader.fail("expected header 'aenc 1 <n_nodes>'");
  const std::size_t n = reader.to_count(header[2]);
  EncodingTable table;
  table.reserve(n);
  std::array<double, AnisoEncoding::kWidth> row{};
  for (std::size_t i = 0; i < n; ++i) {
    auto tok = reader.tokens();
    if (tok.size() != AnisoEncoding::kWidth) reader.fail("expected 9 values per node");
    for (int k = 0; k < AnisoEncoding::kWidth; ++k) row[k] = reader.to_double(tok[k]);
    table.push_back(AnisoEncoding::from_row(row.data()));
  }
  reader.expect_end();
  return table;
}

void write_aenc(const std::filesystem::path& path, const EncodingTable& table) {
  std::ostringstream out;
  out << "aenc 1 " << table.size() << '\n';
  for (const AnisoEncoding& e : table) {
    const auto r = e.row();
    for (int k = 0; k < AnisoEncoding::kWidth; ++k) out << (k ? " " : "") << fmt_real(r[k]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

} // namespace anisonet
