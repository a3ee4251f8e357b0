#include "bladerag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

using nlohmann::json;

namespace bladerag {

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta, modified Lentz algorithm.
double beta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    constexpr int max_terms = 500;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_terms; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

const std::unordered_map<std::string, MechanismGroup>& group_map() {
    static const std::unordered_map<std::string, MechanismGroup> map = {
        {"Corrosion", MechanismGroup::Surface},
        {"Erosion", MechanismGroup::Surface},
        {"Surface Peeling", MechanismGroup::Surface},
        {"Rust", MechanismGroup::Surface},
        {"Wear", MechanismGroup::Surface},
        {"Dent", MechanismGroup::Surface},
        {"Ice", MechanismGroup::Environmental},
        {"Snow", MechanismGroup::Environmental},
        {"Lightning Strike/Burning", MechanismGroup::Environmental},
        {"Lightning Receptors", MechanismGroup::Environmental},
        {"Fracture", MechanismGroup::Structural},
        {"Crack", MechanismGroup::Structural},
        {"Delamination", MechanismGroup::Structural},
        {"Missing Teeth of Vortex generators", MechanismGroup::Structural},
    };
    return map;
}

std::optional<ConfidenceInterval> scaled_ci(std::optional<double> metric, int n,
                                            double level) {
    if (!metric || n <= 0) return std::nullopt;
    int x = static_cast<int>(std::lround(*metric * n));
    return clopper_pearson(x, n, level);
}

std::string format_ci(const std::optional<ConfidenceInterval>& ci) {
    if (!ci) return "n/a";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << "[" << ci->lower << ", " << ci->upper
       << "]";
    return ss.str();
}

std::string format_metric(const std::optional<double>& value) {
    if (!value) return "n/a";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << *value;
    return ss.str();
}

json ci_json(const std::optional<ConfidenceInterval>& ci) {
    if (!ci) return nullptr;
    return json::array({ci->lower, ci->upper});
}

} // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (a <= 0.0 || b <= 0.0)
        throw ConfigError("regularized_incomplete_beta: shape parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(x, a, b) / a;
    }
    return 1.0 - std::exp(b * std::log(1.0 - x) + a * std::log(x) - log_beta(b, a)) *
                     beta_continued_fraction(1.0 - x, b, a) / b;
}

double beta_quantile(double p, double a, double b) {
    if (p < 0.0 || p > 1.0) throw ConfigError("beta_quantile: p must lie in [0, 1]");
    if (a <= 0.0 || b <= 0.0)
        throw ConfigError("beta_quantile: shape parameters must be positive");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    double lo = 0.0;
    double hi = 1.0;
    double mid = 0.5;
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        double value = regularized_incomplete_beta(mid, a, b);
        if (std::fabs(value - p) <= 1e-10) return mid;
        if (value < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

std::string to_string(MechanismGroup g) {
    switch (g) {
        case MechanismGroup::Healthy: return "Healthy";
        case MechanismGroup::Surface: return "Surface";
        case MechanismGroup::Environmental: return "Environmental";
        case MechanismGroup::Structural: return "Structural";
    }
    throw ConfigError("unknown mechanism group");
}

MechanismGroup mechanism_group_from_string(const std::string& s) {
    if (s == "Healthy") return MechanismGroup::Healthy;
    if (s == "Surface") return MechanismGroup::Surface;
    if (s == "Environmental") return MechanismGroup::Environmental;
    if (s == "Structural") return MechanismGroup::Structural;
    throw ConfigError("unknown mechanism group: " + s);
}

MechanismGroup group_of(const std::vector<std::string>& damage_types) {
    if (damage_types.empty()) return MechanismGroup::Healthy;
    bool surface = false;
    bool environmental = false;
    for (const auto& type : damage_types) {
        auto it = group_map().find(type);
        if (it == group_map().end())
            throw ConfigError("damage type outside the taxonomy: " + type);
        switch (it->second) {
            case MechanismGroup::Structural: return MechanismGroup::Structural;
            case MechanismGroup::Environmental: environmental = true; break;
            case MechanismGroup::Surface: surface = true; break;
            case MechanismGroup::Healthy: break;
        }
    }
    if (environmental) return MechanismGroup::Environmental;
    if (surface) return MechanismGroup::Surface;
    return MechanismGroup::Healthy;
}

std::vector<GroundTruthRecord> load_ground_truth(const std::string& path) {
    std::vector<GroundTruthRecord> records;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        ++line_no;
        std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        json j;
        try {
            j = json::parse(trimmed);
        } catch (const json::exception& e) {
            throw ConfigError("ground-truth manifest line " + std::to_string(line_no) +
                              " is not JSON: " + e.what());
        }
        GroundTruthRecord rec;
        rec.image = j.at("image").get<std::string>();
        rec.labels = j.value("labels", std::vector<std::string>{});
        MechanismGroup derived = group_of(rec.labels);
        if (j.contains("group")) {
            rec.group = mechanism_group_from_string(j["group"].get<std::string>());
            if (rec.group != derived)
                throw ConfigError("ground-truth group for " + rec.image +
                                  " disagrees with its labels (" + to_string(rec.group) +
                                  " vs " + to_string(derived) + ")");
        } else {
            rec.group = derived;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

BinaryCounts binary_counts(const std::vector<std::pair<std::string, bool>>& predictions,
                           const std::vector<std::pair<std::string, bool>>& truths) {
    if (predictions.empty() || truths.empty())
        throw ConfigError("binary_counts: empty prediction or truth set");
    if (predictions.size() != truths.size())
        throw ConfigError("binary_counts: prediction and truth sets differ in size");

    std::map<std::string, bool> truth_by_id;
    for (const auto& [id, positive] : truths) truth_by_id[id] = positive;

    BinaryCounts counts;
    for (const auto& [id, predicted] : predictions) {
        auto it = truth_by_id.find(id);
        if (it == truth_by_id.end())
            throw ConfigError("binary_counts: no ground truth for id " + id);
        bool actual = it->second;
        if (predicted && actual) ++counts.tp;
        else if (predicted && !actual) ++counts.fp;
        else if (!predicted && !actual) ++counts.tn;
        else ++counts.fn;
    }
    return counts;
}

Metrics metrics(const BinaryCounts& counts) {
    int n = counts.total();
    if (n <= 0) throw ConfigError("metrics: no samples");
    Metrics m;
    m.accuracy = static_cast<double>(counts.tp + counts.tn) / n;
    if (counts.tp + counts.fp > 0)
        m.precision = static_cast<double>(counts.tp) / (counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0)
        m.recall = static_cast<double>(counts.tp) / (counts.tp + counts.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

void BinomialObservation::validate() const {
    if (trials <= 0) throw ConfigError("clopper_pearson: trials must be positive");
    if (successes < 0 || successes > trials)
        throw ConfigError("clopper_pearson: successes must lie in [0, trials]");
    if (level <= 0.0 || level >= 1.0)
        throw ConfigError("clopper_pearson: confidence level must lie in (0, 1)");
}

ConfidenceInterval clopper_pearson(const BinomialObservation& obs) {
    obs.validate();
    double alpha = 1.0 - obs.level;
    double x = obs.successes;
    double n = obs.trials;
    if (obs.successes == 0) {
        return {0.0, beta_quantile(1.0 - alpha / 2.0, 1.0, n)};
    }
    if (obs.successes == obs.trials) {
        return {beta_quantile(alpha / 2.0, x, 1.0), 1.0};
    }
    return {beta_quantile(alpha / 2.0, x, n - x + 1.0),
            beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x)};
}

ConfidenceInterval clopper_pearson(int successes, int trials, double level) {
    return clopper_pearson(BinomialObservation{successes, trials, level});
}

MechanismGroup predicted_group(const InspectionReport& report) {
    if (!report.damage_detected) return MechanismGroup::Healthy;
    if (report.damage_types.empty()) return MechanismGroup::Surface;
    return group_of(report.damage_types);
}

EvaluationSummary summarize(const std::vector<EvaluatedItem>& items, int attempted) {
    if (items.empty()) throw ConfigError("summarize: no completed items");
    EvaluationSummary s;
    s.attempted = attempted;
    s.completed = static_cast<int>(items.size());

    std::vector<std::pair<std::string, bool>> predictions;
    std::vector<std::pair<std::string, bool>> truths;
    double latency_sum = 0.0;
    s.latency.min = items.front().report.latency_seconds;
    s.latency.max = items.front().report.latency_seconds;

    for (const auto& item : items) {
        MechanismGroup truth = item.truth.group;
        MechanismGroup predicted = predicted_group(item.report);
        s.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)]++;
        predictions.emplace_back(item.image, item.report.damage_detected);
        truths.emplace_back(item.image, truth != MechanismGroup::Healthy);

        int severity = std::clamp(item.report.severity, 0, 5);
        s.severity_histogram[static_cast<std::size_t>(severity)]++;

        double latency = item.report.latency_seconds;
        latency_sum += latency;
        s.latency.min = std::min(s.latency.min, latency);
        s.latency.max = std::max(s.latency.max, latency);
        auto bucket = static_cast<std::size_t>(
            std::min(6.0, std::max(0.0, std::floor(latency / 5.0))));
        s.latency.histogram[bucket]++;
    }
    s.latency.mean = latency_sum / static_cast<double>(items.size());

    s.counts = binary_counts(predictions, truths);
    s.scores = metrics(s.counts);

    int n = s.counts.total();
    s.accuracy_ci = clopper_pearson(s.counts.tp + s.counts.tn, n);
    if (s.counts.tp + s.counts.fp > 0)
        s.precision_ci = clopper_pearson(s.counts.tp, s.counts.tp + s.counts.fp);
    if (s.counts.tp + s.counts.fn > 0)
        s.recall_ci = clopper_pearson(s.counts.tp, s.counts.tp + s.counts.fn);

    s.accuracy_ci_scaled = scaled_ci(s.scores.accuracy, n, 0.95);
    s.precision_ci_scaled = scaled_ci(s.scores.precision, n, 0.95);
    s.recall_ci_scaled = scaled_ci(s.scores.recall, n, 0.95);
    s.f1_ci_scaled = scaled_ci(s.scores.f1, n, 0.95);
    return s;
}

json EvaluationSummary::to_json() const {
    json confusion_rows = json::array();
    for (const auto& row : confusion) confusion_rows.push_back(row);

    json severity = json::object();
    for (std::size_t i = 0; i < severity_histogram.size(); ++i)
        severity[std::to_string(i)] = severity_histogram[i];

    return json{
        {"attempted", attempted},
        {"completed", completed},
        {"confusion_matrix",
         json{{"labels", {"Healthy", "Surface", "Environmental", "Structural"}},
              {"rows_are", "truth"},
              {"rows", confusion_rows}}},
        {"binary_counts",
         json{{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}}},
        {"metrics",
         json{{"accuracy",
               json{{"value", scores.accuracy},
                    {"ci95", ci_json(accuracy_ci)},
                    {"ci95_scaled", ci_json(accuracy_ci_scaled)}}},
              {"precision",
               json{{"value", scores.precision ? json(*scores.precision) : json(nullptr)},
                    {"ci95", ci_json(precision_ci)},
                    {"ci95_scaled", ci_json(precision_ci_scaled)}}},
              {"recall",
               json{{"value", scores.recall ? json(*scores.recall) : json(nullptr)},
                    {"ci95", ci_json(recall_ci)},
                    {"ci95_scaled", ci_json(recall_ci_scaled)}}},
              {"f1",
               json{{"value", scores.f1 ? json(*scores.f1) : json(nullptr)},
                    {"ci95", nullptr},
                    {"ci95_scaled", ci_json(f1_ci_scaled)},
                    {"ci95_scaled_note", "approximate: f1 is not a binomial proportion"}}}}},
        {"severity_histogram", severity},
        {"latency",
         json{{"mean_seconds", latency.mean},
              {"min_seconds", latency.min},
              {"max_seconds", latency.max},
              {"histogram_5s_buckets", latency.histogram}}},
    };
}

std::string EvaluationSummary::to_table() const {
    static const char* labels[4] = {"Healthy", "Surface", "Environmental", "Structural"};
    std::ostringstream out;
    out << "samples: " << completed << " completed / " << attempted << " attempted\n\n";

    out << "confusion matrix (rows = truth, cols = predicted)\n";
    out << std::left << std::setw(15) << "";
    for (const char* label : labels) out << std::right << std::setw(15) << label;
    out << "\n";
    for (std::size_t r = 0; r < 4; ++r) {
        out << std::left << std::setw(15) << labels[r];
        for (std::size_t c = 0; c < 4; ++c) out << std::right << std::setw(15) << confusion[r][c];
        out << "\n";
    }

    out << "\nbinary counts: TP=" << counts.tp << " FP=" << counts.fp
        << " TN=" << counts.tn << " FN=" << counts.fn << "\n\n";

    out << std::left << std::setw(11) << "metric" << std::setw(9) << "value"
        << std::setw(22) << "natural 95% CI" << std::setw(22) << "scaled 95% CI" << "\n";
    auto row = [&](const char* name, std::optional<double> value,
                   const std::optional<ConfidenceInterval>& natural,
                   const std::optional<ConfidenceInterval>& scaled) {
        out << std::left << std::setw(11) << name << std::setw(9) << format_metric(value)
            << std::setw(22) << format_ci(natural) << std::setw(22) << format_ci(scaled)
            << "\n";
    };
    row("accuracy", scores.accuracy, accuracy_ci, accuracy_ci_scaled);
    row("precision", scores.precision, precision_ci, precision_ci_scaled);
    row("recall", scores.recall, recall_ci, recall_ci_scaled);
    row("f1", scores.f1, std::nullopt, f1_ci_scaled);

    out << "\nseverity histogram (0 = healthy):";
    for (std::size_t i = 0; i < severity_histogram.size(); ++i)
        out << " " << i << ":" << severity_histogram[i];
    out << "\n";

    out << std::fixed << std::setprecision(3);
    out << "latency seconds: mean " << latency.mean << ", min " << latency.min
        << ", max " << latency.max << "\n";
    return out.str();
}

} // namespace bladerag
