// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lemda/cli.hpp"
#include "lemda/eval.hpp"
#include "lemda/forest.hpp"
#include "lemda/importance.hpp"
#include "lemda/lemda.hpp"
#include "lemda/mlp.hpp"
#include "lemda/pca.hpp"
#include "properties.hpp"
#include "published_rows.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace lemda;
using lemda::support::numeric_dataset;

namespace {

// Tolerances and budgets.
constexpr double kMetricTolerancePct = 0.001;
constexpr double kMetricBudgetS = 1.0;
constexpr double kSynthF1Margin = 0.10;
constexpr double kSynthBudgetS = 180.0;
constexpr double kRealF1Margin = 0.20;
constexpr double kRealBudgetS = 300.0;
constexpr double kSplitTolerance = 1e-12;
constexpr double kEigenResidual = 1e-7;
constexpr double kGradientRelError = 1e-4;
constexpr double kGradientEps = 1e-5;

enum class Status { pass, fail, skip };

struct Verdict {
    Status status = Status::pass;
    std::string detail;
};

Verdict pass(std::string detail) { return {Status::pass, std::move(detail)}; }
Verdict fail(std::string detail) { return {Status::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(precision);
    out << v;
    return out.str();
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("lemda_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

// ---- 1 --------------------------------------------------------------------

Verdict metric_reproduction() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0;
    std::string worst_row;
    for (const auto& row : support::kPublishedRows) {
        const ConfusionMatrix c{row.tp, row.tn, row.fp, row.fn};
        const double got[3] = {100 * accuracy(c), 100 * f1_score(c), 100 * safety_score(c)};
        const double want[3] = {row.accuracy, row.f1, row.safety};
        for (int i = 0; i < 3; ++i) {
            const double gap = std::abs(got[i] - want[i]);
            if (gap > worst) {
                worst = gap;
                worst_row = std::string(row.dataset) + "/" + std::string(row.model) + "/" +
                            std::string(row.method);
            }
        }
    }
    const double elapsed = seconds_since(start);
    const std::string detail = std::to_string(support::kPublishedRows.size()) +
                               " rows, max gap " + fmt(worst, 6) + " pp (" + worst_row + "), " +
                               fmt(elapsed, 6) + " s";
    if (worst > kMetricTolerancePct || elapsed >= kMetricBudgetS) return fail(detail);
    return pass(detail);
}

// ---- 2 --------------------------------------------------------------------

Verdict wedf_example() {
    std::vector<std::string> proto;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 100; ++i) {
        proto.push_back("TCP");
        y.push_back(i < 10 ? kAttack : kNormal);
    }
    for (int i = 0; i < 40; ++i) {
        proto.push_back("UDP");
        y.push_back(kNormal);
    }
    const Dataset d({make_categorical("proto", proto)}, "label", y);
    const auto w = build_wedf_dictionary(d, "proto", 0.5);
    const auto* tcp = w.find("TCP");
    if (!tcp) return fail("TCP missing from dictionary");
    const std::string detail = "n=" + std::to_string(tcp->n) + " z=" + std::to_string(tcp->z) +
                               " p=" + std::to_string(tcp->p) + " score=" + fmt(tcp->score, 17);
    if (tcp->p != 1 || tcp->score != 0.05) return fail(detail);
    return pass(detail);
}

// ---- 3 --------------------------------------------------------------------

Verdict sf_trace() {
    SfConfig cfg;
    cfg.b = 0.5;
    cfg.common_value = "common";
    const auto sf = compute_sf_series({"common", "suspicious", "common", "common"}, cfg);
    const std::vector<double> want{0, 0.5, 0.25, 0.125};
    std::string detail = "[";
    for (std::size_t i = 0; i < sf.size(); ++i) detail += (i ? ", " : "") + fmt(sf[i], 6);
    detail += "]";
    if (sf != want) return fail(detail);
    return pass(detail);
}

// ---- 4 / 5 ----------------------------------------------------------------

struct BenchNumbers {
    double f1 = 0;
    double train_s = 0;
};

BenchNumbers numbers(const nlohmann::json& report, const std::string& key) {
    const auto& a = report.at("aggregate").at(key);
    return {a.at("f1").get<double>(), a.at("train_s").get<double>()};
}

Verdict synthetic_end_to_end() {
    const auto dir = scratch_dir("synth");
    const auto start = std::chrono::steady_clock::now();
    std::string err;
    if (cli({"synth", "--rows", "20000", "--attack-frac", "0.125", "--signal", "0.9", "--informative",
             "5", "--noise", "5", "--seed", "1", "--out", dir.string()},
            &err) != kExitOk) {
        return fail("synth failed: " + err);
    }
    if (cli({"bench", "--data", (dir / "synth.csv").string(), "--methods", "base,lemda", "--models",
             "dt,rf", "--k", "10", "--seed", "7", "--jobs", std::to_string(worker_count()), "--out",
             (dir / "report").string()},
            &err) != kExitOk) {
        return fail("bench failed: " + err);
    }
    const double elapsed = seconds_since(start);
    const auto report = read_json(dir / "report" / "report.json");
    const auto base_dt = numbers(report, "Base/DT");
    const auto lemda_dt = numbers(report, "LEMDA/DT");
    const auto base_rf = numbers(report, "Base/RF");
    const auto lemda_rf = numbers(report, "LEMDA/RF");
    std::ostringstream detail;
    detail << "DT F1 " << fmt(100 * base_dt.f1, 2) << " -> " << fmt(100 * lemda_dt.f1, 2) << ", RF F1 "
           << fmt(100 * base_rf.f1, 2) << " -> " << fmt(100 * lemda_rf.f1, 2) << ", RF train "
           << fmt(base_rf.train_s, 3) << " s -> " << fmt(lemda_rf.train_s, 3) << " s, total "
           << fmt(elapsed, 1) << " s";
    fs::remove_all(dir);
    const bool ok = lemda_dt.f1 >= base_dt.f1 + kSynthF1Margin &&
                    lemda_rf.f1 >= base_rf.f1 + kSynthF1Margin && lemda_rf.train_s <= base_rf.train_s &&
                    elapsed < kSynthBudgetS;
    return ok ? pass(detail.str()) : fail(detail.str());
}

Verdict real_data_check() {
    const char* csv = std::getenv("LEMDA_WUSTL_CSV");
    if (csv == nullptr || *csv == '\0' || !fs::exists(csv)) {
        return {Status::skip, "set LEMDA_WUSTL_CSV (and optionally LEMDA_WUSTL_SCHEMA) to run"};
    }
    const auto dir = scratch_dir("wustl");
    std::vector<std::string> args{"bench",  "--data", csv, "--methods", "base,lemda", "--models", "rf",
                                  "--k",    "10",     "--jobs", std::to_string(worker_count()),
                                  "--out",  (dir / "report").string()};
    if (const char* schema = std::getenv("LEMDA_WUSTL_SCHEMA"); schema != nullptr && *schema != '\0') {
        args.insert(args.end(), {"--schema", schema});
    }
    const auto start = std::chrono::steady_clock::now();
    std::string err;
    if (cli(args, &err) != kExitOk) return fail("bench failed: " + err);
    const double elapsed = seconds_since(start);
    const auto report = read_json(dir / "report" / "report.json");
    const auto base = numbers(report, "Base/RF");
    const auto lemda = numbers(report, "LEMDA/RF");
    const std::string detail = "RF F1 " + fmt(100 * base.f1, 2) + " -> " + fmt(100 * lemda.f1, 2) +
                               ", " + fmt(elapsed, 1) + " s";
    fs::remove_all(dir);
    if (lemda.f1 >= base.f1 + kRealF1Margin && elapsed < kRealBudgetS) return pass(detail);
    return fail(detail);
}

// ---- 6 --------------------------------------------------------------------

Verdict oracle_equivalence() {
    Rng rng = derive_rng(6006);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    auto labels = [&](std::size_t rows) {
        std::vector<std::uint8_t> y(rows);
        for (auto& v : y) v = static_cast<std::uint8_t>(pick(0, 1));
        return y;
    };

    std::size_t split_mismatches = 0;
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t rows = pick(2, 20);
        const std::size_t features = pick(1, 3);
        std::vector<std::vector<double>> x(features, std::vector<double>(rows));
        std::vector<bool> categorical(features);
        std::vector<Column> cols;
        for (std::size_t f = 0; f < features; ++f) {
            const std::size_t levels = pick(2, 6);
            for (auto& v : x[f]) v = static_cast<double>(pick(0, levels - 1));
            categorical[f] = pick(0, 3) == 0;
            if (categorical[f]) {
                std::vector<std::string> text;
                for (double v : x[f]) text.push_back("v" + std::to_string(static_cast<int>(v)));
                cols.push_back(make_categorical("f" + std::to_string(f), text));
                x[f] = cols.back().values;
            } else {
                cols.push_back(make_numeric("f" + std::to_string(f), x[f]));
            }
        }
        const auto y = labels(rows);
        const Dataset d(std::move(cols), "label", y);
        std::vector<std::size_t> all_rows(rows), all_features(features);
        std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
        std::iota(all_features.begin(), all_features.end(), std::size_t{0});
        const auto got = best_split(d, all_rows, all_features);
        const auto want = support::oracle_best_split(x, y, all_rows, categorical, kSplitTolerance);
        const bool same = got.has_value() == want.has_value() &&
                          (!got || (got->feature == want->feature && got->threshold == want->threshold &&
                                    std::abs(got->decrease - want->decrease) <= kSplitTolerance));
        if (!same) ++split_mismatches;
    }

    double worst_residual = 0;
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t n = pick(1, 8);
        std::uniform_real_distribution<double> u(-5, 5);
        SquareMatrix a(n);
        std::vector<double> flat(n * n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = r; c < n; ++c) a(r, c) = a(c, r) = u(rng);
        }
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) flat[r * n + c] = a(r, c);
        }
        const auto e = jacobi_eigen(a);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(n);
            for (std::size_t r = 0; r < n; ++r) v[r] = e.vectors(r, i);
            worst_residual = std::max(worst_residual, support::eigen_residual(flat, n, v, e.values[i]));
        }
    }

    std::size_t nonzero_unused = 0, unused_features = 0;
    for (int forest = 0; forest < 50; ++forest) {
        const std::size_t rows = pick(20, 60);
        const std::size_t features = pick(2, 5);
        std::vector<std::vector<double>> x(features, std::vector<double>(rows));
        for (auto& col : x) {
            for (auto& v : col) v = static_cast<double>(pick(0, 9));
        }
        const std::size_t frozen = pick(0, features - 1);
        std::fill(x[frozen].begin(), x[frozen].end(), 3.0);
        auto y = labels(rows);
        y[0] = kNormal;
        y[1] = kAttack;
        const auto train = numeric_dataset(x, y);
        ForestConfig cfg;
        cfg.trees = pick(2, 10);
        cfg.max_depth = pick(0, 4);
        const auto m = train_forest(train, cfg, rng());
        for (auto& col : x) {
            for (auto& v : col) v = static_cast<double>(pick(0, 9));
        }
        const auto validation = numeric_dataset(x, labels(rows));
        const auto r = mda_scores(m, validation, pick(1, 3), rng());
        for (std::size_t f = 0; f < features; ++f) {
            bool used = false;
            for (const auto& t : m.trees) used = used || t.uses_feature(f);
            if (used) continue;
            ++unused_features;
            if (r.scores[f] != 0.0) ++nonzero_unused;
        }
    }

    std::ostringstream detail;
    detail << "best_split mismatches " << split_mismatches << "/200, max eigen residual "
           << worst_residual << " over 100 matrices, nonzero MDA on " << nonzero_unused << "/"
           << unused_features << " unused features in 50 forests";
    const bool ok = split_mismatches == 0 && worst_residual < kEigenResidual && nonzero_unused == 0 &&
                    unused_features >= 50;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// ---- 7 --------------------------------------------------------------------

Verdict gradient_check_runs() {
    double worst_init = 0, worst_trained = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng = derive_rng(seed, {0x97ad});
        std::normal_distribution<double> z(0, 1);
        Batch b;
        b.inputs = 5;
        for (int r = 0; r < 32; ++r) {
            const double label = r % 3 == 0 ? 1.0 : 0.0;
            for (int i = 0; i < 5; ++i) b.x.push_back(z(rng) + (label > 0 ? 0.8 : -0.4));
            b.y.push_back(label);
        }
        MlpModel m(5, 20, seed);
        worst_init = std::max(worst_init, gradient_check(m, b, kGradientEps));
        MlpHyper h;
        for (int step = 0; step < 5; ++step) m.adam_step(b, h);
        worst_trained = std::max(worst_trained, gradient_check(m, b, kGradientEps));
    }
    std::ostringstream detail;
    detail << "max relative error " << worst_init << " at init, " << worst_trained
           << " after 5 steps, 10 seeds";
    if (worst_init < kGradientRelError && worst_trained < kGradientRelError) return pass(detail.str());
    return fail(detail.str());
}

// ---- 8 --------------------------------------------------------------------

void strip_timing(nlohmann::json& j) {
    if (j.is_object()) {
        j.erase("train_s");
        j.erase("detect_s");
        for (auto& [key, value] : j.items()) strip_timing(value);
    } else if (j.is_array()) {
        for (auto& value : j) strip_timing(value);
    }
}

Verdict determinism() {
    const auto dir = scratch_dir("determinism");
    std::string err;
    if (cli({"synth", "--rows", "1500", "--cardinality", "64", "--seed", "4", "--out", dir.string()},
            &err) != kExitOk) {
        return fail("synth failed: " + err);
    }
    std::vector<std::string> dumps;
    for (const char* run : {"a", "b"}) {
        if (cli({"bench", "--data", (dir / "synth.csv").string(), "--methods", "base,pca,mda,lemda",
                 "--models", "dt,rf,mlp", "--k", "5", "--trees", "20", "--epochs", "3", "--jobs",
                 std::to_string(worker_count()), "--out", (dir / run).string()},
                &err) != kExitOk) {
            return fail("bench failed: " + err);
        }
        auto j = read_json(dir / run / "report.json");
        strip_timing(j);
        dumps.push_back(j.dump(2));
    }
    fs::remove_all(dir);
    const std::string detail = "12 experiments x 5 folds, " + std::to_string(dumps[0].size()) +
                               " bytes without timing fields";
    return dumps[0] == dumps[1] ? pass(detail) : fail(detail + ", runs differ");
}

// ---- 9 --------------------------------------------------------------------

Verdict property_suites() {
    std::size_t properties = 0, cases = 0, failed = 0, below_1000 = 0;
    std::string first;
    for (const auto& p : support::all_properties()) {
        const auto outcome = support::run_property(p);
        ++properties;
        cases += outcome.cases;
        if (p.cases < 1000) ++below_1000;
        if (!outcome.ok()) {
            ++failed;
            if (first.empty()) first = p.module + "/" + p.name + ": " + outcome.first_failure;
        }
    }
    std::ostringstream detail;
    detail << properties << " properties, " << cases << " cases, " << failed << " failing ("
           << below_1000 << " statistical or fixed-size properties run fewer than 1000 cases)";
    if (failed > 0) return fail(detail.str() + "; " + first);
    return pass(detail.str());
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"metric reproduction of the 48 published rows", metric_reproduction},
        {"WEDF worked example", wedf_example},
        {"SF hand trace", sf_trace},
        {"synthetic end-to-end bench", synthetic_end_to_end},
        {"real-data check", real_data_check},
        {"oracle equivalence", oracle_equivalence},
        {"MLP gradient check", gradient_check_runs},
        {"bench determinism", determinism},
        {"property suites", property_suites},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = fail(std::string("threw: ") + e.what());
        }
        const char* tag = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIP";
        if (v.status == Status::fail) ++failures;
        std::cout << tag << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
