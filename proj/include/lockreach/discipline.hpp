#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lockreach/system.hpp"

namespace lockreach {

// One matched call/return pair breaking contextual locking. Exactly one
// violation is reported per offending pair: the endpoint comparison when it
// fails, otherwise the first interior dip.
struct ContextualViolation {
    enum class Offense : std::uint8_t {
        EndpointMismatch,  // lockset at return differs from lockset at call
        Dip,               // lockset dipped below the call-time lockset
    };
    std::uint32_t thread = 0;
    std::size_t call_pos = 0;
    std::size_t return_pos = 0;
    Offense offense = Offense::EndpointMismatch;
    std::size_t dip_pos = 0;  // configuration index, Dip only

    std::string describe(const System& sys) const;
};

// Per-trace check. Plain mode compares locksets at s_call and s_return and
// requires containment on [call, return]; reentrant mode compares counts at
// s_call and s_{return+1} and requires pointwise <= on [call, return].
std::vector<ContextualViolation> check_contextual_trace(const System& sys,
                                                        const Computation& comp);

// Static per-thread check (plain mode): explores the thread with every lock
// available and stack symbols augmented by the lockset held at push time.
// Violated iff some reachable return exits with a lockset other than the
// pushed one, or some reachable release drops a lock recorded in the top
// frame. Sound and complete under that abstraction.
struct StaticContextualResult {
    bool holds = true;
    std::string offense;
    std::vector<Label> witness;            // labels of the violating singleton run
    std::optional<Computation> witness_comp;  // the same run with configurations
};
StaticContextualResult check_contextual_static(const System& sys, std::size_t thread);

// The thread's spec as a one-thread system over the same lock set (used to
// replay and render static-check witnesses).
MultiPdsSpec singleton_spec(const MultiPdsSpec& spec, std::size_t thread);

// Witness of non-well-bracketing: steps l1 < l2 < l3 where (l1, l3) is a
// matching call/return of `thread` and l2 is a call of the other thread whose
// matching return comes after l3+1 or never.
struct BracketWitness {
    std::size_t l1 = 0, l2 = 0, l3 = 0;
    std::uint32_t thread = 0;
};

// Minimal witness (smallest l1, then smallest l2), or nothing if the
// computation is well-bracketed. Requires exactly two threads.
std::optional<BracketWitness> classify(const Computation& comp);

// One round of the constructive reordering: replays the prefix, then the
// pair-owning thread's moves across the witness window (through its return),
// then the other thread's moves (from its deferred call), then the suffix.
// Preserves length and final configuration; the minimal witness's l1 strictly
// increases. Throws InputError naming the first step that cannot be replayed
// (which indicates a contextual-locking violation in the input).
Computation reorder_once(const System& sys, const Computation& comp);

// Iterates reorder_once until the computation is well-bracketed. Terminates
// within length(comp) rounds.
Computation reorder_to_well_bracketed(const System& sys, const Computation& comp);

}  // namespace lockreach
