#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "lockreach/system.hpp"

namespace lockreach {

struct Bounds {
    std::size_t max_stack_depth = 64;
    std::size_t max_steps = 100000;  // configurations expanded
    std::uint32_t max_count = 16;    // reentrant holding cap per lock
};

// Result of bounded breadth-first search. `NotFoundExhausted` is reported only
// when the frontier emptied and no configuration was pruned by a bound, so it
// certifies unreachability; `NotFoundTruncated` certifies nothing.
struct ReachResult {
    enum class Status { Found, NotFoundExhausted, NotFoundTruncated };
    Status status = Status::NotFoundTruncated;
    std::optional<Computation> witness;  // shortest, canonical order (Found only)
    std::size_t expanded = 0;
    std::size_t visited = 0;
    bool pruned_by_bounds = false;
    bool stopped_by_steps = false;

    bool found() const { return status == Status::Found; }
    bool exhausted() const { return status == Status::NotFoundExhausted; }
};

ReachResult bounded_reach(const System& sys, const PairQuery& query, const Bounds& bounds);

// Enumerates every valid computation of length <= max_len exactly once, in
// depth-first order following the canonical successor order (the empty
// computation comes first). The visitor returns false to stop early.
void enumerate_traces(const System& sys, std::size_t max_len,
                      const std::function<bool(const Computation&)>& visit);

// Exact reachable-configuration enumeration under bounds; visits each
// configuration once in BFS order. Returns true if the frontier was exhausted
// without any bound-induced pruning.
bool explore_configs(const System& sys, const Bounds& bounds,
                     const std::function<void(const SystemConfig&)>& visit);

}  // namespace lockreach
