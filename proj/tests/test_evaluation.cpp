#include <doctest.h>

#include <cmath>
#include <random>

#include "bladerag/errors.hpp"
#include "bladerag/evaluation.hpp"
#include "bladerag/text_utils.hpp"
#include "support/fixtures.hpp"

using namespace bladerag;

TEST_CASE("regularized incomplete beta basics") {
    // I_x(1,1) is the identity.
    for (double x : {0.0, 0.1, 0.5, 0.9, 1.0})
        CHECK(regularized_incomplete_beta(x, 1.0, 1.0) == doctest::Approx(x).epsilon(1e-12));
    // Symmetry: I_x(a,b) = 1 - I_{1-x}(b,a).
    for (double x : {0.05, 0.3, 0.7}) {
        CHECK(regularized_incomplete_beta(x, 2.5, 7.0) ==
              doctest::Approx(1.0 - regularized_incomplete_beta(1.0 - x, 7.0, 2.5))
                  .epsilon(1e-12));
    }
    // I_x(1,2) = 1 - (1-x)^2.
    CHECK(regularized_incomplete_beta(0.25, 1.0, 2.0) ==
          doctest::Approx(1.0 - 0.75 * 0.75).epsilon(1e-12));
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 0.0, 1.0), ConfigError);
}

TEST_CASE("beta quantile inverts the incomplete beta to 1e-9") {
    const double ps[] = {0.001, 0.025, 0.1, 0.5, 0.9, 0.975, 0.999};
    const std::pair<double, double> shapes[] = {
        {1.0, 1.0}, {1.0, 30.0}, {30.0, 1.0}, {28.0, 3.0}, {29.0, 2.0},
        {27.0, 4.0}, {2.0, 5.0}, {0.5, 0.5}, {10.0, 10.0}};
    for (auto [a, b] : shapes) {
        for (double p : ps) {
            CAPTURE(a);
            CAPTURE(b);
            CAPTURE(p);
            double q = beta_quantile(p, a, b);
            CHECK(std::fabs(regularized_incomplete_beta(q, a, b) - p) <= 1e-9);
        }
    }
    // Closed forms: Beta(a, 1) quantile is p^(1/a); Beta(1, b) is 1-(1-p)^(1/b).
    CHECK(beta_quantile(0.025, 30.0, 1.0) ==
          doctest::Approx(std::pow(0.025, 1.0 / 30.0)).epsilon(1e-9));
    CHECK(beta_quantile(0.975, 1.0, 30.0) ==
          doctest::Approx(1.0 - std::pow(0.025, 1.0 / 30.0)).epsilon(1e-9));
    CHECK(beta_quantile(0.0, 2.0, 3.0) == 0.0);
    CHECK(beta_quantile(1.0, 2.0, 3.0) == 1.0);
}

TEST_CASE("clopper_pearson reproduces the reference intervals") {
    // 30/30 at 95%: lower bound is 0.025^(1/30) = 0.8843.
    auto ci = clopper_pearson(30, 30);
    CHECK(std::fabs(ci.lower - 0.8843) <= 0.0005);
    CHECK(ci.upper == 1.0);

    // 28/30 at 95%.
    ci = clopper_pearson(28, 30);
    CHECK(std::fabs(ci.lower - 0.779) <= 0.001);
    CHECK(std::fabs(ci.upper - 0.992) <= 0.001);

    // 27/30 at 95%.
    ci = clopper_pearson(27, 30);
    CHECK(std::fabs(ci.lower - 0.735) <= 0.001);
    CHECK(std::fabs(ci.upper - 0.979) <= 0.001);

    // 0/1 at 95%: Beta(1,1) is uniform, so the upper bound is 0.975.
    ci = clopper_pearson(0, 1);
    CHECK(ci.lower == 0.0);
    CHECK(ci.upper == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("clopper_pearson interval properties") {
    for (int n : {1, 5, 30}) {
        for (int x = 0; x <= n; ++x) {
            CAPTURE(n);
            CAPTURE(x);
            auto ci = clopper_pearson(x, n);
            CHECK(ci.lower <= ci.upper);
            CHECK(ci.contains(double(x) / n));
            CHECK((ci.lower == 0.0) == (x == 0));
            CHECK((ci.upper == 1.0) == (x == n));
            // Raising the confidence level widens the interval.
            auto wider = clopper_pearson(x, n, 0.99);
            CHECK(wider.lower <= ci.lower + 1e-12);
            CHECK(wider.upper >= ci.upper - 1e-12);
        }
    }
    CHECK_THROWS_AS(clopper_pearson(5, 0), ConfigError);
    CHECK_THROWS_AS(clopper_pearson(-1, 10), ConfigError);
    CHECK_THROWS_AS(clopper_pearson(11, 10), ConfigError);
    CHECK_THROWS_AS(clopper_pearson(BinomialObservation{1, 10, 1.5}), ConfigError);
}

TEST_CASE("interval coverage stays above nominal (small Monte-Carlo)") {
    // Exact intervals are conservative; spot-check one p here, the
    // acceptance suite sweeps the full grid.
    std::vector<ConfidenceInterval> by_x;
    for (int x = 0; x <= 30; ++x) by_x.push_back(clopper_pearson(x, 30));
    std::mt19937_64 rng(11);
    std::binomial_distribution<int> binom(30, 0.5);
    int covered = 0;
    const int draws = 2000;
    for (int i = 0; i < draws; ++i)
        if (by_x[static_cast<std::size_t>(binom(rng))].contains(0.5)) ++covered;
    CHECK(double(covered) / draws >= 0.95);
}

TEST_CASE("group_of collapses damage sets with structural precedence") {
    CHECK(group_of({}) == MechanismGroup::Healthy);
    CHECK(group_of({"Ice"}) == MechanismGroup::Environmental);
    CHECK(group_of({"Corrosion", "Rust", "Crack"}) == MechanismGroup::Structural);
    CHECK(group_of({"Erosion", "Snow"}) == MechanismGroup::Environmental);
    CHECK(group_of({"Wear"}) == MechanismGroup::Surface);
    CHECK_THROWS_AS(group_of({"Bird Strike"}), ConfigError);

    // The documented group memberships.
    for (const char* t : {"Corrosion", "Erosion", "Surface Peeling", "Rust", "Wear",
                          "Dent"})
        CHECK(group_of({t}) == MechanismGroup::Surface);
    for (const char* t :
         {"Ice", "Snow", "Lightning Strike/Burning", "Lightning Receptors"})
        CHECK(group_of({t}) == MechanismGroup::Environmental);
    for (const char* t : {"Fracture", "Crack", "Delamination",
                          "Missing Teeth of Vortex generators"})
        CHECK(group_of({t}) == MechanismGroup::Structural);
}

namespace {

// n aligned prediction/truth pairs with the requested confusion counts.
std::pair<std::vector<std::pair<std::string, bool>>,
          std::vector<std::pair<std::string, bool>>>
make_pairs(int tp, int fp, int tn, int fn) {
    std::vector<std::pair<std::string, bool>> predictions;
    std::vector<std::pair<std::string, bool>> truths;
    int id = 0;
    auto add = [&](bool predicted, bool actual, int count) {
        for (int i = 0; i < count; ++i) {
            std::string name = "s" + std::to_string(id++);
            predictions.emplace_back(name, predicted);
            truths.emplace_back(name, actual);
        }
    };
    add(true, true, tp);
    add(true, false, fp);
    add(false, false, tn);
    add(false, true, fn);
    return {predictions, truths};
}

} // namespace

TEST_CASE("binary counts partition the sample set") {
    auto [p1, t1] = make_pairs(11, 0, 19, 0);
    CHECK(binary_counts(p1, t1) == BinaryCounts{11, 0, 19, 0});

    auto [p2, t2] = make_pairs(10, 1, 18, 1);
    CHECK(binary_counts(p2, t2) == BinaryCounts{10, 1, 18, 1});

    CHECK_THROWS_AS(binary_counts({}, {}), ConfigError);
    CHECK_THROWS_AS(binary_counts({{"a", true}}, {{"b", true}}), ConfigError);
}

TEST_CASE("metrics reproduce the reference values") {
    Metrics perfect = metrics({11, 0, 19, 0});
    CHECK(perfect.accuracy == 1.0);
    CHECK(*perfect.precision == 1.0);
    CHECK(*perfect.recall == 1.0);
    CHECK(*perfect.f1 == 1.0);

    Metrics ablated = metrics({10, 1, 18, 1});
    CHECK(ablated.accuracy == doctest::Approx(0.9333).epsilon(1e-4));
    CHECK(*ablated.precision == doctest::Approx(0.90909).epsilon(1e-4));
    CHECK(*ablated.recall == doctest::Approx(0.90909).epsilon(1e-4));
    CHECK(*ablated.f1 == doctest::Approx(0.90909).epsilon(1e-4));

    Metrics degenerate = metrics({0, 0, 12, 0});
    CHECK(degenerate.accuracy == 1.0);
    CHECK_FALSE(degenerate.precision.has_value()); // absent, never zero
    CHECK_FALSE(degenerate.recall.has_value());
    CHECK_FALSE(degenerate.f1.has_value());
}

TEST_CASE("ground-truth manifests parse and validate group consistency") {
    auto dir = testsupport::make_temp_dir("gt");
    std::string path = (dir / "gt.jsonl").string();
    text::write_file(path,
                     R"({"image": "images/a.png", "labels": [], "group": "Healthy"})"
                     "\n"
                     R"({"image": "images/b.png", "labels": ["Crack"]})"
                     "\n\n");
    auto records = load_ground_truth(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].group == MechanismGroup::Healthy);
    CHECK(records[1].group == MechanismGroup::Structural); // derived from labels

    text::write_file(path, R"({"image": "c.png", "labels": ["Ice"], "group": "Surface"})");
    CHECK_THROWS_AS(load_ground_truth(path), ConfigError);
}

namespace {

EvaluatedItem item(const std::string& image, bool detected,
                   std::vector<std::string> types, int severity, double latency,
                   std::vector<std::string> truth_labels) {
    EvaluatedItem it;
    it.image = image;
    it.report.damage_detected = detected;
    it.report.damage_types = std::move(types);
    it.report.severity = severity;
    it.report.latency_seconds = latency;
    it.truth.image = image;
    it.truth.labels = truth_labels;
    it.truth.group = group_of(truth_labels);
    return it;
}

} // namespace

TEST_CASE("summarize fills the matrix, metrics, histograms and latency stats") {
    std::vector<EvaluatedItem> items = {
        item("a", false, {}, 0, 20.0, {}),                            // TN
        item("b", true, {"Crack"}, 2, 10.0, {}),                      // FP
        item("c", false, {}, 0, 22.0, {"Crack"}),                     // FN
        item("d", true, {"Corrosion", "Rust"}, 4, 18.0, {"Corrosion"}), // TP
        item("e", true, {"Ice", "Snow"}, 4, 30.0, {"Ice", "Snow"}),   // TP
    };
    EvaluationSummary s = summarize(items, 6); // one attempt failed upstream

    CHECK(s.completed == 5);
    CHECK(s.attempted == 6);
    CHECK(s.counts == BinaryCounts{2, 1, 1, 1});

    // Matrix cells sum to the number of evaluated samples.
    int sum = 0;
    for (const auto& row : s.confusion)
        for (int cell : row) sum += cell;
    CHECK(sum == 5);
    auto at = [&](MechanismGroup truth, MechanismGroup predicted) {
        return s.confusion[static_cast<std::size_t>(truth)]
                          [static_cast<std::size_t>(predicted)];
    };
    CHECK(at(MechanismGroup::Healthy, MechanismGroup::Healthy) == 1);
    CHECK(at(MechanismGroup::Healthy, MechanismGroup::Structural) == 1);
    CHECK(at(MechanismGroup::Structural, MechanismGroup::Healthy) == 1);
    CHECK(at(MechanismGroup::Surface, MechanismGroup::Surface) == 1);
    CHECK(at(MechanismGroup::Environmental, MechanismGroup::Environmental) == 1);

    // Collapsing the matrix to healthy-vs-damaged agrees with the binary counts.
    int healthy_idx = static_cast<int>(MechanismGroup::Healthy);
    int matrix_tn = at(MechanismGroup::Healthy, MechanismGroup::Healthy);
    int matrix_fp = 0;
    int matrix_fn = 0;
    int matrix_tp = 0;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (r == healthy_idx && c != healthy_idx) matrix_fp += s.confusion[r][c];
            if (r != healthy_idx && c == healthy_idx) matrix_fn += s.confusion[r][c];
            if (r != healthy_idx && c != healthy_idx) matrix_tp += s.confusion[r][c];
        }
    }
    CHECK(matrix_tp == s.counts.tp);
    CHECK(matrix_fp == s.counts.fp);
    CHECK(matrix_fn == s.counts.fn);
    CHECK(matrix_tn == s.counts.tn);

    CHECK(s.scores.accuracy == doctest::Approx(0.6));
    CHECK(*s.scores.precision == doctest::Approx(2.0 / 3.0));
    CHECK(*s.scores.recall == doctest::Approx(2.0 / 3.0));
    CHECK(*s.scores.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.accuracy_ci.has_value());
    CHECK(s.f1_ci_scaled.has_value()); // scaled convention covers f1, flagged approximate

    CHECK(s.severity_histogram[0] == 2);
    CHECK(s.severity_histogram[2] == 1);
    CHECK(s.severity_histogram[4] == 2);

    CHECK(s.latency.mean == doctest::Approx(20.0));
    CHECK(s.latency.min == doctest::Approx(10.0));
    CHECK(s.latency.max == doctest::Approx(30.0));
    CHECK(s.latency.histogram[2] == 1); // 10s
    CHECK(s.latency.histogram[6] == 1); // 30s lands in the open top bucket

    // JSON and table render without losing the headline numbers.
    auto j = s.to_json();
    CHECK(j["binary_counts"]["tp"] == 2);
    CHECK(j["metrics"]["accuracy"]["value"] == doctest::Approx(0.6));
    std::string table = s.to_table();
    CHECK(table.find("TP=2 FP=1 TN=1 FN=1") != std::string::npos);
}

TEST_CASE("predicted group mirrors the damage flag") {
    InspectionReport report;
    report.damage_detected = false;
    CHECK(predicted_group(report) == MechanismGroup::Healthy);
    report.damage_detected = true;
    report.damage_types = {"Snow"};
    CHECK(predicted_group(report) == MechanismGroup::Environmental);
    report.damage_types.clear(); // detected but typeless counts as damage
    CHECK(predicted_group(report) == MechanismGroup::Surface);
}
