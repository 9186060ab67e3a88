#pragma once

#include "metric.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace anisonet {

using Vec2 = Eigen::Vector2d;

/// Network-facing representation of a metric: three spacings and three
/// doubled-angle unit vectors v_i = (cos 2a_i, sin 2a_i), where a1/a2 are the
/// azimuth/elevation of the first direction and a3 the angle of the second
/// direction in the plane orthogonal to the first.
struct AnisoEncoding {
  std::array<double, 3> spacing{};
  std::array<Vec2, 3> v{Vec2(1, 0), Vec2(1, 0), Vec2(1, 0)};

  static constexpr int kWidth = 9;
  /// d1 d2 d3 v1x v1y v2x v2y v3x v3y
  std::array<double, kWidth> row() const;
  static AnisoEncoding from_row(const double* row);
};

using EncodingTable = std::vector<AnisoEncoding>;

struct FrameAngles {
  double azimuth = 0.0;   // [0, pi)
  double elevation = 0.0; // [-pi/2, pi/2]
  double in_plane = 0.0;  // [0, pi)
};

/// Unit vector with the given azimuth and elevation.
Vec3 direction_from_angles(double azimuth, double elevation);

/// Orthonormal pair (u, w) spanning the plane orthogonal to e1: u is the
/// projection of the global axis with the smallest |component| in e1 (ties
/// go to the lower axis), w = e1 x u.
std::pair<Vec3, Vec3> reference_basis(const Vec3& e1);

/// Angles of a canonical frame after folding e1 into the half-space with
/// azimuth in [0, pi); a vertical e1 is taken as +z.
FrameAngles frame_angles(const MetricFrame& frame);

AnisoEncoding encode_metric(const Metric& m);

/// Frame described by an encoding; the vectors are normalized first and the
/// spacings sorted ascending. Throws NumericError for a vector shorter than
/// 1e-12 and InvalidArgument for a non-positive spacing.
MetricFrame decode_frame(const AnisoEncoding& enc);
Metric decode_encoding(const AnisoEncoding& enc);

/// Per-node encode; errors name the failing node.
EncodingTable encode_field(const MetricField& field);
MetricField decode_field(const EncodingTable& table);

EncodingTable read_aenc(const std::filesystem::path& path);
void write_aenc(const std::filesystem::path& path, const EncodingTable& table);

} // namespace anisonet
