#pragma once

#include "encoding.hpp"
#include "metric.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anisonet {

// Targets and predictions: one row per output, one column per case.

struct MaeResult {
  Eigen::VectorXd per_output; // mean over cases
  Eigen::VectorXd per_case;   // mean over outputs
  double mean = 0.0;
  double max_over_cases = 0.0;
};

MaeResult mae(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& predictions);

/// 1 - SS_res / SS_tot per output over the cases; empty where the target has
/// zero variance.
std::vector<std::optional<double>> r_squared(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& predictions);

/// Spacing the predicted metric requests along each target axis.
/// Throws NumericError when `predicted` is not positive definite.
std::array<double, 3> project_spacing(const Metric& predicted, const MetricFrame& target);

/// Ratio bins between 10 edges 2^((2k+1)/2), k = -5..4: nine interior bins
/// centred on the powers of two from 1/16 to 16 plus an open tail on each
/// side. Bins are closed on the left. Bin 0 is the lower tail.
struct RatioHistogram {
  static constexpr int kBins = 11;
  static std::array<double, kBins + 1> edges(); // edges()[0] = 0, edges()[11] = inf

  std::array<double, kBins> mean{};
  std::array<double, kBins> min{};
  std::array<double, kBins> max{};
  std::array<double, kBins> std{}; // population standard deviation across cases
  double acceptable_fraction = 0.0; // mean share of ratios within [2^-1/2, 2^1/2]
  std::size_t cases = 0;

  std::string to_csv() const;
};

int ratio_bin(double ratio);

/// Per-case bin fractions; throws InvalidArgument for a non-positive ratio.
std::array<double, RatioHistogram::kBins> bin_fractions(const std::vector<double>& ratios);

/// Histogram over cases, each given as its list of per-node ratios.
RatioHistogram ratio_histogram(const std::vector<std::vector<double>>& ratios_per_case);

struct GroupError {
  std::string name;
  double mae = 0.0;
  double max_case_mae = 0.0;
  double median_r2 = 0.0; // over outputs with a defined value
  std::size_t undefined_r2 = 0;
};

struct EvalReport {
  std::vector<std::string> case_ids;
  std::vector<GroupError> groups; // spacing, v1, v2, v3
  Eigen::VectorXd output_mae;
  std::vector<std::optional<double>> output_r2;
  std::array<RatioHistogram, 3> histograms;

  std::string summary() const;
  /// report.txt, histogram_e{1,2,3}.csv and outputs.csv.
  void write(const std::filesystem::path& dir) const;
};

/// Encoded tables for one case per entry, all on the same background mesh.
EvalReport evaluate_cases(const std::vector<EncodingTable>& predicted, const std::vector<EncodingTable>& target,
                          const std::vector<std::string>& case_ids);

/// Encodings of several cases stacked as a (9 * n_nodes) x n_cases matrix,
/// row node * 9 + k.
Eigen::MatrixXd encoding_matrix(const std::vector<EncodingTable>& cases);
std::vector<EncodingTable> encoding_tables(const Eigen::MatrixXd& matrix);

} // namespace anisonet
