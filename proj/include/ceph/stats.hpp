#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ceph/model.hpp"

namespace ceph::stats {

struct ErrorRow {
    std::string image_id;
    std::string patient_id;
    std::string source;
    LandmarkName landmark{};
    double error = 0.0;
    bool visible = true;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    std::string unit = "mm";
    std::size_t missing_predictions = 0;  // visible ground truth without a prediction
};

// Radial errors for every visible ground-truth landmark that has a visible
// prediction. Errors are in mm via the record spacing.
ErrorTable compute_errors(const Manifest& ground_truth, const LandmarkSets& predictions);

// CSV: image_id,landmark,error_mm,visible
ErrorTable read_error_csv(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::builtin());
std::string write_error_csv(const ErrorTable& table);

enum class Grouping { All, PerLandmark, PerSource };

double mre(const ErrorTable& table);
std::map<std::string, double> mre(const ErrorTable& table, Grouping grouping);
// Fraction of visible errors <= threshold.
double sdr(const ErrorTable& table, double threshold);
std::map<std::string, double> sdr(const ErrorTable& table, double threshold, Grouping grouping);
std::vector<double> visible_errors(const ErrorTable& table);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile bootstrap of the mean. Resample b draws from its own stream
// keyed by (seed, b).
Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed);

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    double mean_difference = 0.0;  // mean(b - a)
    std::size_t n = 0;
    double df = 0.0;
    std::size_t resamples = 0;
    std::optional<std::uint64_t> seed;
    std::string sidedness = "two-sided";
};

// Differences are taken as b - a throughout.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

// Sign-flip test on per-patient differences with statistic |mean(b - a)|.
// Enumerates all 2^n patterns when that is no more than `permutations`;
// otherwise p = (1 + #{stat >= observed}) / (permutations + 1).
TestResult permutation_test(std::span<const double> a, std::span<const double> b, std::size_t permutations,
                            std::uint64_t seed);

// Zero differences dropped, ties get average ranks. Exact null distribution
// for n <= 25, otherwise normal approximation with continuity and tie
// correction. Statistic is W+ (sum of ranks of positive differences).
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// Rows: rater 1 (ground truth), columns: rater 2.
using Confusion = std::vector<std::vector<std::size_t>>;
double cohens_kappa(const Confusion& confusion);

// Two-way random effects, absolute agreement, single measure, two raters.
// All-identical input returns 1.0.
double icc_a1(std::span<const double> rater1, std::span<const double> rater2);
// Consistency variant, for comparison against icc_a1.
double icc_c1(std::span<const double> rater1, std::span<const double> rater2);

struct BiasMae {
    double bias = 0.0;
    double sd = 0.0;
    double mae = 0.0;
    double median_ae = 0.0;
};

BiasMae bias_mae(std::span<const double> pred, std::span<const double> gt);

double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);
double percentile(std::vector<double> values, double q);  // linear interpolation, q in [0,1]

double student_t_two_sided_p(double t, double df);
double normal_two_sided_p(double z);

}  // namespace ceph::stats
