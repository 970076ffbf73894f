#include "lemda/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "lemda/error.hpp"
#include "lemda/rng.hpp"

namespace lemda {

void validate(const SynthConfig& cfg) {
    if (!(cfg.attack_fraction > 0.0 && cfg.attack_fraction < 1.0)) {
        throw ArgumentError("attack fraction must lie strictly between 0 and 1");
    }
    if (cfg.cardinality < 2) throw ArgumentError("categorical cardinality must be at least 2");
    if (cfg.rows < 100) throw ArgumentError("synthetic datasets need at least 100 rows");
    if (!(cfg.signal_strength >= 0.0 && cfg.signal_strength <= 1.0)) {
        throw ArgumentError("signal strength must lie in [0, 1]");
    }
    if (cfg.attack_values >= cfg.cardinality) {
        throw ArgumentError("attack values must leave the common value free");
    }
    if (!(cfg.mean_burst >= 1.0)) throw ArgumentError("mean burst length must be at least 1");
}

namespace {

const char* const kInformativeNames[] = {"rate", "src_bytes", "dst_bytes", "jitter", "duration"};

std::vector<std::string> numeric_names(const SynthConfig& cfg) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cfg.informative; ++i) {
        names.push_back(i < std::size(kInformativeNames) ? kInformativeNames[i]
                                                         : "stat" + std::to_string(i + 1));
    }
    for (std::size_t i = 0; i < cfg.noise; ++i) names.push_back("aux" + std::to_string(i + 1));
    return names;
}

std::vector<SynthBurst> place_bursts(const SynthConfig& cfg, std::size_t attacks, Rng& rng) {
    std::geometric_distribution<std::size_t> extra(1.0 / cfg.mean_burst);
    std::vector<std::size_t> lengths;
    std::size_t placed = 0;
    while (placed < attacks) {
        const std::size_t len = std::min(attacks - placed, 1 + extra(rng));
        lengths.push_back(len);
        placed += len;
    }
    const std::size_t normals = cfg.rows - attacks;
    // Interior gaps need one normal row each; merge bursts until they fit.
    while (lengths.size() > 1 && lengths.size() - 1 > normals) {
        const auto last = lengths.back();
        lengths.pop_back();
        lengths.back() += last;
    }
    const std::size_t slots = lengths.size() + 1;
    std::vector<std::size_t> gaps(slots, 0);
    for (std::size_t i = 1; i + 1 < slots; ++i) gaps[i] = 1;
    std::uniform_int_distribution<std::size_t> slot(0, slots - 1);
    for (std::size_t r = 0; r < normals - (slots - 2); ++r) ++gaps[slot(rng)];

    std::vector<SynthBurst> bursts;
    std::size_t cursor = gaps[0];
    for (std::size_t b = 0; b < lengths.size(); ++b) {
        bursts.push_back({cursor, lengths[b]});
        cursor += lengths[b] + gaps[b + 1];
    }
    return bursts;
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
    validate(cfg);
    auto rng = derive_rng(cfg.seed, {0x5e7});
    const auto attacks = static_cast<std::size_t>(
        std::llround(static_cast<double>(cfg.rows) * cfg.attack_fraction));
    if (attacks == 0 || attacks >= cfg.rows) {
        throw ArgumentError("attack fraction leaves one class empty at this row count");
    }

    SynthOutput out;
    out.bursts = place_bursts(cfg, attacks, rng);
    std::vector<std::uint8_t> labels(cfg.rows, kNormal);
    for (const auto& b : out.bursts) {
        std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(b.begin), b.length, kAttack);
    }

    // Value 0 is the common normal value; a random eighth of the others
    // (at least one) are attack values.
    std::vector<std::string> values(cfg.cardinality);
    for (std::size_t v = 0; v < cfg.cardinality; ++v) values[v] = "0x" + std::to_string(v);
    std::vector<std::size_t> others(cfg.cardinality - 1);
    std::iota(others.begin(), others.end(), std::size_t{1});
    std::shuffle(others.begin(), others.end(), rng);
    const std::size_t n_attack_values =
        cfg.attack_values != 0 ? cfg.attack_values : std::max<std::size_t>(1, cfg.cardinality / 8);
    std::vector<std::size_t> attack_values(others.begin(),
                                           others.begin() + static_cast<std::ptrdiff_t>(n_attack_values));
    std::vector<std::size_t> benign_values(others.begin() + static_cast<std::ptrdiff_t>(n_attack_values),
                                           others.end());
    std::sort(attack_values.begin(), attack_values.end());
    std::vector<bool> is_attack_value(cfg.cardinality, false);
    for (auto v : attack_values) {
        is_attack_value[v] = true;
        out.attack_values.push_back(values[v]);
    }
    out.common_value = values[0];

    // Background distribution: half the mass on the common value, the rest
    // uniform over all other values.
    std::bernoulli_distribution common(0.5);
    std::uniform_int_distribution<std::size_t> any_other(1, cfg.cardinality - 1);
    std::bernoulli_distribution signal(cfg.signal_strength);
    auto background = [&](bool avoid_attack_values) {
        if (common(rng)) return std::size_t{0};
        if (avoid_attack_values) {
            if (benign_values.empty()) return std::size_t{0};
            return benign_values[std::uniform_int_distribution<std::size_t>(
                0, benign_values.size() - 1)(rng)];
        }
        return any_other(rng);
    };

    std::vector<std::string> flags(cfg.rows);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        std::size_t v;
        const bool s = signal(rng);
        if (labels[r] == kAttack) {
            v = s ? attack_values[std::uniform_int_distribution<std::size_t>(
                        0, attack_values.size() - 1)(rng)]
                  : background(false);
        } else {
            v = background(s);
        }
        flags[r] = values[v];
    }

    std::vector<std::string> ids(cfg.rows);
    for (std::size_t r = 0; r < cfg.rows; ++r) ids[r] = "flow-" + std::to_string(r + 1);

    std::vector<Column> columns;
    columns.push_back(make_categorical("flow_id", ids, ColumnKind::identifier));
    columns.push_back(make_categorical("flags", flags));

    const auto names = numeric_names(cfg);
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution heavy(0.2);
    for (std::size_t c = 0; c < names.size(); ++c) {
        const bool informative = c < cfg.informative;
        const double mu = 1.0 + 0.5 * static_cast<double>(c % 4);
        std::vector<double> col(cfg.rows);
        for (std::size_t r = 0; r < cfg.rows; ++r) {
            // Two-component lognormal: a bulk and a heavier tail.
            const bool tail = heavy(rng);
            double m = tail ? mu + 1.5 : mu;
            const double sd = tail ? 1.0 : 0.6;
            if (informative && labels[r] == kAttack) m += cfg.numeric_shift;
            const double value = std::exp(m + sd * z(rng));
            col[r] = std::round(value * 1e4) / 1e4;
        }
        columns.push_back(make_numeric(names[c], std::move(col)));
    }
    out.data = Dataset(std::move(columns), "label", std::move(labels));
    return out;
}

Dataset generate_dataset(const SynthConfig& cfg) { return generate(cfg).data; }

void write_synth(const std::filesystem::path& dir, const std::string& stem, const Dataset& d) {
    std::filesystem::create_directories(dir);
    const auto csv_path = dir / (stem + ".csv");
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw Error("cannot write " + csv_path.string());
    write_csv(csv, d);
    const auto schema_path = dir / (stem + ".schema");
    std::ofstream schema(schema_path, std::ios::binary);
    if (!schema) throw Error("cannot write " + schema_path.string());
    const auto s = d.schema();
    write_schema(schema, s);
}

}  // namespace lemda
