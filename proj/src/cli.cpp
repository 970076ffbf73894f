#include "lemda/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lemda/dataset.hpp"
#include "lemda/error.hpp"
#include "lemda/eval.hpp"
#include "lemda/lemda.hpp"
#include "lemda/synth.hpp"

namespace lemda {

namespace fs = std::filesystem;

namespace {

struct DataArgs {
    std::string data;
    std::string schema;
    std::string normal_label = "0";
    std::string attack_label = "1";
};

struct SynthArgs {
    SynthConfig cfg;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string name = "synth";
};

struct FitArgs {
    DataArgs data;
    std::size_t k_features = 5;
    double b = 0.5;
    bool sf = false;
    bool sf_peak_at_one = false;
    std::size_t mda_repeats = 3;
    std::size_t trees = 100;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct TransformArgs {
    std::string pipeline;
    std::string data;
    std::string out;
};

struct BenchArgs {
    DataArgs data;
    std::string methods = "base,pca,mda,lemda";
    std::string models = "dt,rf,mlp";
    std::size_t k = 10;
    std::optional<std::uint64_t> seed;
    double b = 0.5;
    bool sf = false;
    bool sf_peak_at_one = false;
    double pca_threshold = 0.95;
    std::size_t k_features = 5;
    std::size_t mda_repeats = 3;
    std::size_t trees = 100;
    std::size_t epochs = 20;
    std::size_t jobs = 1;
    std::string scope = "per_fold";
    std::string dataset_id;
    std::string out;
};

struct ReportArgs {
    std::string report;
    std::string out;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--data", a.data, "Input CSV file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--schema", a.schema,
                    "Schema file (name=kind per line); defaults to <data>.schema");
    cmd->add_option("--normal-label", a.normal_label, "Label text for normal rows")
        ->capture_default_str();
    cmd->add_option("--attack-label", a.attack_label, "Label text for attack rows")
        ->capture_default_str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("LEMDA_SEED"); env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string_view(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ArgumentError(std::string("LEMDA_SEED is not an unsigned integer: '") + env + "'");
    }
    return fallback;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<ColumnSchema> resolve_schema(const DataArgs& a) {
    fs::path path = a.schema;
    if (path.empty()) {
        path = fs::path(a.data).replace_extension(".schema");
        if (!fs::exists(path)) {
            throw ArgumentError("no --schema given and " + path.string() + " does not exist");
        }
    }
    return read_schema_file(path);
}

Dataset load(const DataArgs& a, std::vector<ColumnSchema>& schema, LabelMapping& mapping) {
    schema = resolve_schema(a);
    mapping = {a.normal_label, a.attack_label};
    return load_csv(a.data, schema, mapping);
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

int do_synth(const SynthArgs& a, std::ostream& out) {
    SynthConfig cfg = a.cfg;
    cfg.seed = resolve_seed(a.seed, cfg.seed);
    const auto d = generate_dataset(cfg);
    write_synth(a.out, a.name, d);
    out << "wrote " << (fs::path(a.out) / (a.name + ".csv")).string() << " (" << d.rows()
        << " rows, " << d.attack_count() << " attacks)\n";
    return kExitOk;
}

int do_fit(const FitArgs& a, std::ostream& out) {
    std::vector<ColumnSchema> schema;
    LabelMapping mapping;
    const auto raw = load(a.data, schema, mapping);
    PipelineConfig cfg;
    cfg.selection.k = a.k_features;
    cfg.selection.mda_repeats = a.mda_repeats;
    cfg.selection.forest.trees = a.trees;
    cfg.selection.seed = resolve_seed(a.seed, 7);
    cfg.selection.jobs = a.jobs;
    cfg.b = a.b;
    cfg.sf_enabled = a.sf;
    cfg.sf_peak_at_one = a.sf_peak_at_one;
    auto pipeline = fit_pipeline(prepare_base(raw), cfg);
    pipeline.input_schema = schema;
    pipeline.labels = mapping;
    auto f = open_output(a.out);
    save_pipeline(f, pipeline);
    out << "selected:";
    for (const auto& n : pipeline.selected) out << ' ' << n;
    out << "\nwrote " << a.out << '\n';
    return kExitOk;
}

int do_transform(const TransformArgs& a, std::ostream& out) {
    std::ifstream in(a.pipeline, std::ios::binary);
    if (!in) throw Error("cannot read " + a.pipeline);
    const auto pipeline = load_pipeline(in);
    const auto d = load_csv(a.data, pipeline.input_schema, pipeline.labels);
    const auto t = transform_pipeline(pipeline, d);
    if (a.out.empty()) {
        write_csv(out, t, pipeline.labels);
    } else {
        auto f = open_output(a.out);
        write_csv(f, t, pipeline.labels);
    }
    return kExitOk;
}

int do_bench(const BenchArgs& a, std::ostream& out) {
    std::vector<ColumnSchema> schema;
    LabelMapping mapping;
    const auto d = load(a.data, schema, mapping);
    std::vector<Method> methods;
    for (const auto& m : split_list(a.methods)) methods.push_back(parse_method(m));
    std::vector<ModelKind> models;
    for (const auto& m : split_list(a.models)) models.push_back(parse_model(m));

    ExperimentConfig cfg;
    cfg.dataset_id = a.dataset_id.empty() ? fs::path(a.data.data).stem().string() : a.dataset_id;
    cfg.k = a.k;
    cfg.seed = resolve_seed(a.seed, 7);
    cfg.k_features = a.k_features;
    cfg.b = a.b;
    cfg.sf = a.sf;
    cfg.sf_peak_at_one = a.sf_peak_at_one;
    cfg.pca_threshold = a.pca_threshold;
    cfg.mda_repeats = a.mda_repeats;
    cfg.forest.trees = a.trees;
    cfg.mlp.epochs = a.epochs;
    cfg.jobs = a.jobs;
    if (a.scope == "global") cfg.selection_scope = SelectionScope::global;
    else if (a.scope != "per_fold") throw ArgumentError("unknown selection scope '" + a.scope + "'");

    const auto report = run_bench(d, methods, models, cfg);
    auto json = to_json(report);
    json["config"]["data"] = a.data.data;
    json["config"]["labels"] = {{"normal", mapping.normal}, {"attack", mapping.attack}};
    const auto table = render_table(json);
    fs::create_directories(a.out);
    {
        auto f = open_output(fs::path(a.out) / "report.json");
        f << json.dump(2) << '\n';
    }
    {
        auto f = open_output(fs::path(a.out) / "table.txt");
        f << table;
    }
    out << table;
    return kExitOk;
}

int do_report(const ReportArgs& a, std::ostream& out) {
    std::ifstream in(a.report, std::ios::binary);
    if (!in) throw Error("cannot read " + a.report);
    nlohmann::json json;
    try {
        json = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report is not valid JSON: ") + e.what());
    }
    std::string table;
    try {
        table = render_table(json);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report lacks expected fields: ") + e.what());
    }
    if (a.out.empty()) {
        out << table;
    } else {
        fs::create_directories(a.out);
        auto f = open_output(fs::path(a.out) / "table.txt");
        f << table;
    }
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LEMDA feature engineering and IDS benchmark toolkit", "lemda"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled flow dataset");
    synth_cmd->add_option("--rows", synth.cfg.rows, "Number of rows")->capture_default_str();
    synth_cmd->add_option("--attack-frac", synth.cfg.attack_fraction, "Fraction of attack rows")
        ->capture_default_str();
    synth_cmd->add_option("--cardinality", synth.cfg.cardinality,
                          "Distinct values of the categorical flags column")
        ->capture_default_str();
    synth_cmd->add_option("--signal", synth.cfg.signal_strength,
                          "How concentrated attacks are in attack-only flag values, in [0,1]")
        ->capture_default_str();
    synth_cmd->add_option("--attack-values", synth.cfg.attack_values,
                          "Flag values attacks concentrate in (0: cardinality/8)")
        ->capture_default_str();
    synth_cmd->add_option("--informative", synth.cfg.informative, "Informative numeric columns")
        ->capture_default_str();
    synth_cmd->add_option("--noise", synth.cfg.noise, "Pure-noise numeric columns")
        ->capture_default_str();
    synth_cmd->add_option("--burst", synth.cfg.mean_burst, "Mean attack burst length")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "RNG seed (falls back to LEMDA_SEED, then 1)");
    synth_cmd->add_option("--name", synth.name, "Output file stem")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a LEMDA pipeline and save it");
    add_data_options(fit_cmd, fit.data);
    fit_cmd->add_option("--k-features", fit.k_features, "Features kept by MDA")
        ->capture_default_str();
    fit_cmd->add_option("--b", fit.b, "WEDF/SF decay base in (0,1)")->capture_default_str();
    fit_cmd->add_flag("--sf", fit.sf, "Append the SF feature");
    fit_cmd->add_flag("--sf-peak-at-one", fit.sf_peak_at_one,
                      "SF restarts at distance 0 (value 1) on a suspicious row");
    fit_cmd->add_option("--mda-repeats", fit.mda_repeats, "Permutations per feature and tree")
        ->capture_default_str();
    fit_cmd->add_option("--trees", fit.trees, "Trees in the importance forest")
        ->capture_default_str();
    fit_cmd->add_option("--jobs", fit.jobs, "Worker threads")->capture_default_str();
    fit_cmd->add_option("--seed", fit.seed, "RNG seed (falls back to LEMDA_SEED, then 7)");
    fit_cmd->add_option("--out", fit.out, "Pipeline file to write")->required();

    TransformArgs transform;
    auto* transform_cmd = app.add_subcommand("transform", "Apply a saved pipeline to a CSV");
    transform_cmd->add_option("--pipeline", transform.pipeline, "Pipeline file from 'fit'")
        ->required()
        ->check(CLI::ExistingFile);
    transform_cmd->add_option("--data", transform.data, "Input CSV file")
        ->required()
        ->check(CLI::ExistingFile);
    transform_cmd->add_option("--out", transform.out, "Output CSV (default: stdout)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run the method x model cross-validation matrix");
    add_data_options(bench_cmd, bench.data);
    bench_cmd->add_option("--methods", bench.methods, "Comma list of base,pca,mda,lemda")
        ->capture_default_str();
    bench_cmd->add_option("--models", bench.models, "Comma list of dt,rf,mlp")
        ->capture_default_str();
    bench_cmd->add_option("--k", bench.k, "Number of folds")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "RNG seed (falls back to LEMDA_SEED, then 7)");
    bench_cmd->add_option("--b", bench.b, "WEDF/SF decay base in (0,1)")->capture_default_str();
    bench_cmd->add_flag("--sf", bench.sf, "Append the SF feature (uses contiguous folds)");
    bench_cmd->add_flag("--sf-peak-at-one", bench.sf_peak_at_one,
                        "SF restarts at distance 0 (value 1) on a suspicious row");
    bench_cmd->add_option("--pca-threshold", bench.pca_threshold,
                          "Cumulative explained-variance target")
        ->capture_default_str();
    bench_cmd->add_option("--k-features", bench.k_features, "Features kept by MDA")
        ->capture_default_str();
    bench_cmd->add_option("--mda-repeats", bench.mda_repeats, "Permutations per feature and tree")
        ->capture_default_str();
    bench_cmd->add_option("--trees", bench.trees, "Trees per random forest")->capture_default_str();
    bench_cmd->add_option("--epochs", bench.epochs, "MLP training epochs")->capture_default_str();
    bench_cmd->add_option("--selection-scope", bench.scope,
                          "per_fold (default) or global MDA selection")
        ->capture_default_str();
    bench_cmd->add_option("--dataset-id", bench.dataset_id, "Name shown in the report");
    bench_cmd->add_option("--jobs", bench.jobs, "Worker threads")->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "Directory for report.json and table.txt")
        ->required();

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "Re-render the table of a saved report.json");
    report_cmd->add_option("--report", report.report, "report.json from 'bench'")
        ->required()
        ->check(CLI::ExistingFile);
    report_cmd->add_option("--out", report.out, "Directory for table.txt (default: stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "lemda: " << e.what() << '\n';
        const auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << active->help();
        return kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) return do_synth(synth, out);
        if (fit_cmd->parsed()) return do_fit(fit, out);
        if (transform_cmd->parsed()) return do_transform(transform, out);
        if (bench_cmd->parsed()) return do_bench(bench, out);
        if (report_cmd->parsed()) return do_report(report, out);
    } catch (const ArgumentError& e) {
        err << "lemda: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "lemda: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "lemda: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace lemda
