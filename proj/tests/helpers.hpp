#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lockreach/discipline.hpp"
#include "lockreach/model.hpp"
#include "lockreach/system.hpp"
#include "lockreach/text_format.hpp"

namespace lockreach::testing {

std::string models_path(const std::string& name);
std::string read_models_file(const std::string& name);
ParsedModel load_model(const std::string& name);  // parse + require clean validation
System load_system(const std::string& name);
Computation load_trace(const System& sys, const std::string& name);

// Independent matching oracle: the literal height criterion. For each pop
// step of each thread, collects every call position satisfying it (there
// must be exactly one). Returned per thread as call -> return.
std::vector<std::map<std::size_t, std::size_t>> match_by_heights(const Computation& comp);

// Independent non-well-bracketing oracle: enumerates all (l1, l2, l3, i)
// against the definition, using match_by_heights only. Returns the witness
// minimal by (l1, l2), or nothing.
std::optional<BracketWitness> brute_force_witness(const Computation& comp);

// Structured fuzzer: threads built from procedures that release exactly the
// locks they acquire before returning, so contextual locking holds by
// construction (verified by the caller via the static check).
struct GenLimits {
    int threads = 2;
    int locks = 2;
    int procs = 2;        // callable procedures per thread
    int body_len = 3;     // actions per procedure body before cleanup
    int symbols = 2;      // frame symbols per thread
    bool allow_recursion = true;
};
MultiPdsSpec random_contextual_spec(std::mt19937& rng, const GenLimits& limits);

// Unstructured fuzzer: random rule soup within the caps; the caller filters
// by the static contextual check.
struct SoupLimits {
    int states = 6;
    int symbols = 2;
    int locks = 3;
    int rules_per_family = 3;
};
MultiPdsSpec random_spec_soup(std::mt19937& rng, const SoupLimits& limits);

}  // namespace lockreach::testing
