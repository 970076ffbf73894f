#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lemda/dataset.hpp"

namespace lemda {

struct SynthConfig {
    std::size_t rows = 20000;
    double attack_fraction = 0.125;
    // Distinct values of the categorical "flags" column.
    std::size_t cardinality = 2048;
    // 0: flags has the same distribution in both classes; 1: attacks only
    // ever carry attack values and normals never do.
    double signal_strength = 0.9;
    // Flag values that attacks concentrate in; 0 means cardinality / 8.
    std::size_t attack_values = 0;
    std::size_t informative = 5;
    std::size_t noise = 5;
    // Shift of the log-mean of informative numerics for attack rows.
    double numeric_shift = 0.25;
    double mean_burst = 8.0;
    std::uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);

struct SynthBurst {
    std::size_t begin = 0;
    std::size_t length = 0;
};

struct SynthOutput {
    Dataset data;
    std::vector<SynthBurst> bursts;
    std::vector<std::string> attack_values;
    std::string common_value;
};

// Rows are in temporal order: normal traffic with attack bursts of
// geometric length, separated by at least one normal row.
SynthOutput generate(const SynthConfig& cfg);
Dataset generate_dataset(const SynthConfig& cfg);

// Writes <dir>/<stem>.csv and <dir>/<stem>.schema.
void write_synth(const std::filesystem::path& dir, const std::string& stem, const Dataset& d);

}  // namespace lemda
