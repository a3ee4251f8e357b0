#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bladerag/extraction.hpp"

namespace bladerag {

// ---------------------------------------------------------------------------
// Beta-distribution machinery behind the exact confidence intervals.
// ---------------------------------------------------------------------------

/// I_x(a, b), evaluated with the standard continued fraction (modified Lentz)
/// and the symmetry switch at x > (a+1)/(a+b+2).
double regularized_incomplete_beta(double x, double a, double b);

/// p-quantile of Beta(a, b): bisection on the regularized incomplete beta,
/// tolerance 1e-10 in p, at most 200 iterations.
double beta_quantile(double p, double a, double b);

// ---------------------------------------------------------------------------
// Mechanism groups
// ---------------------------------------------------------------------------

enum class MechanismGroup { Healthy, Surface, Environmental, Structural };

std::string to_string(MechanismGroup g);
MechanismGroup mechanism_group_from_string(const std::string& s);

/// Collapses a set of taxonomy terms into its mechanism group. Empty means
/// Healthy; mixed damage resolves by precedence Structural > Environmental >
/// Surface.
MechanismGroup group_of(const std::vector<std::string>& damage_types);

struct GroundTruthRecord {
    std::string image;
    std::vector<std::string> labels;
    MechanismGroup group = MechanismGroup::Healthy;

    bool operator==(const GroundTruthRecord&) const = default;
};

/// Parses a JSON-lines manifest: {"image": ..., "labels": [...], "group": ...}
/// per line. A present group must agree with the labels under group_of.
std::vector<GroundTruthRecord> load_ground_truth(const std::string& path);

// ---------------------------------------------------------------------------
// Binary metrics
// ---------------------------------------------------------------------------

struct BinaryCounts {
    int tp = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;

    int total() const { return tp + fp + tn + fn; }
    bool operator==(const BinaryCounts&) const = default;
};

/// Positive = any damage. Throws ConfigError when the id sets differ or are
/// empty.
BinaryCounts binary_counts(const std::vector<std::pair<std::string, bool>>& predictions,
                           const std::vector<std::pair<std::string, bool>>& truths);

/// accuracy, precision, recall, f1. Precision/recall are absent (nullopt)
/// when their denominators vanish; they are never reported as 0 in that case.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const Metrics&) const = default;
};

Metrics metrics(const BinaryCounts& counts);

// ---------------------------------------------------------------------------
// Clopper-Pearson exact intervals
// ---------------------------------------------------------------------------

struct BinomialObservation {
    int successes = 0; // x
    int trials = 0;    // n
    double level = 0.95;

    void validate() const;
};

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 1.0;

    bool contains(double p) const { return lower <= p && p <= upper; }
    bool operator==(const ConfidenceInterval&) const = default;
};

/// Exact binomial interval via Beta quantiles:
///   x = 0:      [0, BetaQ(1 - a/2; 1, n)]
///   x = n:      [BetaQ(a/2; x, 1), 1]
///   otherwise:  [BetaQ(a/2; x, n - x + 1), BetaQ(1 - a/2; x + 1, n - x)]
/// with a = 1 - level.
ConfidenceInterval clopper_pearson(const BinomialObservation& obs);
ConfidenceInterval clopper_pearson(int successes, int trials, double level = 0.95);

// ---------------------------------------------------------------------------
// Batch summary
// ---------------------------------------------------------------------------

struct LatencyStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    /// Seconds in 5-second buckets: [0,5), [5,10), ... [30,inf).
    std::array<int, 7> histogram{};

    bool operator==(const LatencyStats&) const = default;
};

/// One evaluated image: the parsed report joined with its ground truth.
struct EvaluatedItem {
    std::string image;
    InspectionReport report;
    GroundTruthRecord truth;
};

/// Everything the evaluation produces for a batch. Confidence intervals come
/// in two conventions: "natural" intervals use each metric's own counts
/// (f1 is not a binomial proportion, so it has none); "scaled" intervals use
/// x = round(metric * N), n = N for every metric and are approximate for
/// anything but accuracy.
struct EvaluationSummary {
    int attempted = 0;
    int completed = 0;
    std::array<std::array<int, 4>, 4> confusion{}; // rows truth, cols prediction
    BinaryCounts counts;
    Metrics scores;
    std::optional<ConfidenceInterval> accuracy_ci;
    std::optional<ConfidenceInterval> precision_ci;
    std::optional<ConfidenceInterval> recall_ci;
    std::optional<ConfidenceInterval> accuracy_ci_scaled;
    std::optional<ConfidenceInterval> precision_ci_scaled;
    std::optional<ConfidenceInterval> recall_ci_scaled;
    std::optional<ConfidenceInterval> f1_ci_scaled;
    std::array<int, 6> severity_histogram{}; // severities 0..5
    LatencyStats latency;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// The mechanism group a report predicts: Healthy unless damage was
/// detected; a detected-but-typeless report counts as Surface so the matrix
/// stays consistent with the binary counts.
MechanismGroup predicted_group(const InspectionReport& report);

/// Aggregates completed items into the summary. `attempted` covers items
/// that failed before producing a report.
EvaluationSummary summarize(const std::vector<EvaluatedItem>& items, int attempted);

} // namespace bladerag
