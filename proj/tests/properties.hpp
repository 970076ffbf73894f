#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lemda/rng.hpp"

namespace lemda::support {

// One generated case: returns a failure description, or nothing on success.
using CaseBody = std::function<std::optional<std::string>(Rng& rng, std::size_t index)>;

struct Property {
    std::string module;
    std::string name;
    std::size_t cases = 1000;
    CaseBody body;
};

struct PropertyOutcome {
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
    bool ok() const { return failures == 0 && cases > 0; }
};

// Runs every case with its own generator derived from the property name and
// case index; exceptions count as failures.
PropertyOutcome run_property(const Property& p, std::uint64_t seed = 20240601);

const std::vector<Property>& all_properties();

}  // namespace lemda::support
