#include "evaluation.hpp"

#include "error.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace anisonet {

MaeResult mae(const Eigen::MatrixXd& y, const Eigen::MatrixXd& h) {
  if (y.rows() != h.rows() || y.cols() != h.cols()) throw InvalidArgument("target and prediction shapes differ");
  if (y.size() == 0) throw InvalidArgument("no data to compare");
  const Eigen::MatrixXd err = (y - h).cwiseAbs();
  MaeResult r;
  r.per_output = err.rowwise().mean();
  r.per_case = err.colwise().mean().transpose();
  r.mean = err.mean();
  r.max_over_cases = r.per_case.maxCoeff();
  return r;
}

std::vector<std::optional<double>> r_squared(const Eigen::MatrixXd& y, const Eigen::MatrixXd& h) {
  if (y.rows() != h.rows() || y.cols() != h.cols()) throw InvalidArgument("target and prediction shapes differ");
  if (y.cols() < 2) throw InvalidArgument("R^2 needs at least two cases");
  std::vector<std::optional<double>> out(y.rows());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    // A constant row is undefined even when round-off in the mean leaves a tiny SS_tot.
    if (y.row(i).maxCoeff() == y.row(i).minCoeff()) continue;
    const double mean = y.row(i).mean();
    const double ss_tot = (y.row(i).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) continue;
    out[i] = 1.0 - (y.row(i) - h.row(i)).squaredNorm() / ss_tot;
  }
  return out;
}

std::array<double, 3> project_spacing(const Metric& predicted, const MetricFrame& target) {
  if (!(smallest_eigenvalue(predicted.matrix()) > 0.0))
    throw NumericError("predicted metric is not positive definite");
  return {spacing_along(predicted, target.axes[0]), spacing_along(predicted, target.axes[1]),
          spacing_along(predicted, target.axes[2])};
}

std::array<double, RatioHistogram::kBins + 1> RatioHistogram::edges() {
  std::array<double, kBins + 1> e{};
  e[0] = 0.0;
  for (int k = -5; k <= 4; ++k) e[k + 6] = std::exp2((2.0 * k + 1.0) / 2.0);
  e[kBins] = std::numeric_limits<double>::infinity();
  return e;
}

int ratio_bin(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw InvalidArgument("spacing ratio must be positive and finite");
  static const auto e = RatioHistogram::edges();
  // upper_bound gives the first edge strictly greater, so left edges are inclusive.
  return int(std::upper_bound(e.begin(), e.end(), ratio) - e.begin()) - 1;
}

std::array<double, RatioHistogram::kBins> bin_fractions(const std::vector<double>& ratios) {
  if (ratios.empty()) throw InvalidArgument("no ratios in case");
  std::array<double, RatioHistogram::kBins> f{};
  for (double r : ratios) f[ratio_bin(r)] += 1.0;
  for (double& x : f) x /= double(ratios.size());
  return f;
}

RatioHistogram ratio_histogram(const std::vector<std::vector<double>>& ratios_per_case) {
  if (ratios_per_case.empty()) throw InvalidArgument("no cases to histogram");
  RatioHistogram h;
  h.cases = ratios_per_case.size();
  h.min.fill(std::numeric_limits<double>::infinity());
  h.max.fill(-std::numeric_limits<double>::infinity());
  std::vector<std::array<double, RatioHistogram::kBins>> fr;
  const double lo = std::sqrt(0.5), hi = std::sqrt(2.0);
  for (const auto& ratios : ratios_per_case) {
    fr.push_back(bin_fractions(ratios));
    std::size_t ok = 0;
    for (double r : ratios) ok += (r >= lo && r <= hi);
    h.acceptable_fraction += double(ok) / double(ratios.size());
  }
  h.acceptable_fraction /= double(h.cases);
  for (int b = 0; b < RatioHistogram::kBins; ++b) {
    double sum = 0.0;
    for (const auto& f : fr) {
      sum += f[b];
      h.min[b] = std::min(h.min[b], f[b]);
      h.max[b] = std::max(h.max[b], f[b]);
    }
    h.mean[b] = sum / double(h.cases);
    double var = 0.0;
    for (const auto& f : fr) var += (f[b] - h.mean[b]) * (f[b] - h.mean[b]);
    h.std[b] = std::sqrt(var / double(h.cases));
  }
  return h;
}

std::string RatioHistogram::to_csv() const {
  const auto e = edges();
  std::ostringstream out;
  out << "left_edge,right_edge,mean,min,max,std\n";
  for (int b = 0; b < kBins; ++b)
    out << fmt_real(e[b]) << ',' << (std::isinf(e[b + 1]) ? std::string("inf") : fmt_real(e[b + 1])) << ','
        << fmt_real(mean[b]) << ',' << fmt_real(min[b]) << ',' << fmt_real(max[b]) << ',' << fmt_real(std[b]) << '\n';
  return out.str();
}

Eigen::MatrixXd encoding_matrix(const std::vector<EncodingTable>& cases) {
  if (cases.empty()) return {};
  const std::size_t n = cases.front().size();
  Eigen::MatrixXd m(Eigen::Index(n) * AnisoEncoding::kWidth, Eigen::Index(cases.size()));
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c].size() != n) throw InvalidArgument("cases have different node counts");
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = cases[c][i].row();
      for (int k = 0; k < AnisoEncoding::kWidth; ++k) m(Eigen::Index(i) * AnisoEncoding::kWidth + k, c) = r[k];
    }
  }
  return m;
}

std::vector<EncodingTable> encoding_tables(const Eigen::MatrixXd& m) {
  if (m.rows() % AnisoEncoding::kWidth) throw InvalidArgument("row count is not a multiple of 9");
  const Eigen::Index n = m.rows() / AnisoEncoding::kWidth;
  std::vector<EncodingTable> out(m.cols());
  double row[AnisoEncoding::kWidth];
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    out[c].reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < AnisoEncoding::kWidth; ++k) row[k] = m(i * AnisoEncoding::kWidth + k, c);
      out[c].push_back(AnisoEncoding::from_row(row));
    }
  }
  return out;
}

namespace {

constexpr const char* kGroupNames[4] = {"spacing", "v1", "v2", "v3"};
constexpr int kGroupBegin[4] = {0, 3, 5, 7};
constexpr int kGroupWidth[4] = {3, 2, 2, 2};

Eigen::MatrixXd group_rows(const Eigen::MatrixXd& m, int g) {
  const Eigen::Index n = m.rows() / AnisoEncoding::kWidth;
  Eigen::MatrixXd out(n * kGroupWidth[g], m.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.middleRows(i * kGroupWidth[g], kGroupWidth[g]) =
        m.middleRows(i * AnisoEncoding::kWidth + kGroupBegin[g], kGroupWidth[g]);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  if (v.size() % 2) return v[h];
  return 0.5 * (v[h] + *std::max_element(v.begin(), v.begin() + h));
}

} // namespace

EvalReport evaluate_cases(const std::vector<EncodingTable>& predicted, const std::vector<EncodingTable>& target,
                          const std::vector<std::string>& case_ids) {
  if (predicted.size() != target.size() || predicted.size() != case_ids.size())
    throw InvalidArgument("prediction, target and case lists differ in length");
  if (predicted.empty()) throw InvalidArgument("no cases to evaluate");
  EvalReport rep;
  rep.case_ids = case_ids;

  const Eigen::MatrixXd yp = encoding_matrix(predicted);
  const Eigen::MatrixXd yt = encoding_matrix(target);
  if (yp.rows() != yt.rows()) throw InvalidArgument("prediction and target node counts differ");
  rep.output_mae = mae(yt, yp).per_output;
  if (yt.cols() >= 2) rep.output_r2 = r_squared(yt, yp);
  for (int g = 0; g < 4; ++g) {
    const Eigen::MatrixXd a = group_rows(yt, g), b = group_rows(yp, g);
    const MaeResult m = mae(a, b);
    GroupError ge{kGroupNames[g], m.mean, m.max_over_cases, 0.0, 0};
    if (a.cols() >= 2) {
      std::vector<double> defined;
      for (const auto& r : r_squared(a, b)) {
        if (r) defined.push_back(*r);
        else ++ge.undefined_r2;
      }
      ge.median_r2 = median(defined);
    } else {
      ge.undefined_r2 = std::size_t(a.rows());
      ge.median_r2 = std::numeric_limits<double>::quiet_NaN();
    }
    rep.groups.push_back(ge);
  }

  std::array<std::vector<std::vector<double>>, 3> ratios;
  for (std::size_t c = 0; c < predicted.size(); ++c) {
    for (auto& r : ratios) r.emplace_back();
    for (std::size_t i = 0; i < predicted[c].size(); ++i) {
      const MetricFrame tf = decode_frame(target[c][i]);
      const auto s = project_spacing(decode_encoding(predicted[c][i]), tf);
      for (int k = 0; k < 3; ++k) ratios[k].back().push_back(s[k] / tf.spacing[k]);
    }
  }
  for (int k = 0; k < 3; ++k) rep.histograms[k] = ratio_histogram(ratios[k]);
  return rep;
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  out << "cases " << case_ids.size() << '\n';
  out << "output groups (MAE on spacings and on circle-vector components):\n";
  for (const GroupError& g : groups) {
    out << "  " << g.name << " mae " << fmt_real(g.mae) << " max_case_mae " << fmt_real(g.max_case_mae) << " median_r2 ";
    out << (std::isnan(g.median_r2) ? std::string("undefined") : fmt_real(g.median_r2));
    out << " undefined_r2_outputs " << g.undefined_r2 << '\n';
  }
  out << "spacing ratio predicted/target along target directions:\n";
  for (int k = 0; k < 3; ++k)
    out << "  e" << k + 1 << " acceptable_fraction " << fmt_real(histograms[k].acceptable_fraction) << '\n';
  return out.str();
}

void EvalReport::write(const std::filesystem::path& dir) const {
  write_text_file(dir / "report.txt", summary());
  for (int k = 0; k < 3; ++k)
    write_text_file(dir / ("histogram_e" + std::to_string(k + 1) + ".csv"), histograms[k].to_csv());
  std::ostringstream out;
  out << "output,mae,r2\n";
  for (Eigen::Index i = 0; i < output_mae.size(); ++i) {
    out << i << ',' << fmt_real(output_mae[i]) << ',';
    if (std::size_t(i) < output_r2.size() && output_r2[i]) out << fmt_real(*output_r2[i]);
    else out << "undefined";
    out << '\n';
  }
  write_text_file(dir / "outputs.csv", out.str());
}

} // namespace anisonet
