#pragma once

// Packaged, seeded verification suites behind `heisvisc check`.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heisvisc/cones.hpp"
#include "heisvisc/io.hpp"

namespace heisvisc {

struct SuiteOptions {
    std::uint64_t seed = 42;
    /// Replaces the shipped cone list of the cones suite.
    std::optional<ConeSpec> cone;
};

const std::vector<std::string>& suite_names();

/// Runs one suite (or "all"); throws PreconditionError for unknown names.
/// The report is a pure function of (name, options).
io::json run_suite(const std::string& name, const SuiteOptions& opt, bool* passed);

}  // namespace heisvisc
