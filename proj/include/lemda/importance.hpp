#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lemda/dataset.hpp"
#include "lemda/forest.hpp"

namespace lemda {

enum class ImportanceMethod { mdi, mda };

struct ImportanceReport {
    ImportanceMethod method = ImportanceMethod::mdi;
    std::vector<std::string> feature_names;
    std::vector<double> scores;
    // Feature indices by descending score, lower index first on ties.
    std::vector<std::size_t> ordering;
    // MDA only: permutations per (feature, tree) and a note on where the
    // validation rows came from.
    std::size_t repeats = 0;
    std::string validation_source;
};

// Descending score, ties by lower index.
std::vector<std::size_t> rank_by_score(const std::vector<double>& scores);

// Mean over trees of sum(node weight * impurity decrease) per feature,
// normalized to sum to one (all zeros when no tree split anything).
ImportanceReport mdi_scores(const ForestModel& m);

// Permutation order used for (feature, tree, repeat); exposed so tests can
// replay exactly what mda_scores applies.
std::vector<std::size_t> mda_permutation(std::uint64_t seed, std::size_t feature, std::size_t tree,
                                         std::size_t repeat, std::size_t rows);

// score_f = mean over trees of (error after permuting f) - (error before).
// Error rates are misclassification fractions on `validation`; the "after"
// error is averaged over `repeats` permutations.
ImportanceReport mda_scores(const ForestModel& m, const Dataset& validation, std::size_t repeats,
                            std::uint64_t seed, std::size_t jobs = 1);

// First k entries of the ordering; the first is the most informative feature.
std::vector<std::size_t> select_top_k(const ImportanceReport& r, std::size_t k);

std::string_view to_string(ImportanceMethod m);
nlohmann::json to_json(const ImportanceReport& r);

}  // namespace lemda
