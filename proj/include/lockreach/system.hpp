#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lockreach/model.hpp"

namespace lockreach {

using StateId = std::uint32_t;
using SymbolId = std::uint32_t;
using LockIdx = std::uint32_t;
using LockSet = std::uint64_t;  // bitmask over lock indices

constexpr LockSet lock_bit(LockIdx l) { return LockSet{1} << l; }

struct Label {
    enum class Kind : std::uint8_t { State, Push, Pop, Acq, Rel };
    Kind kind = Kind::State;
    LockIdx lock = 0;  // meaningful for Acq/Rel only
    std::uint32_t thread = 0;

    bool operator==(const Label&) const = default;
    bool touches_lock() const { return kind == Kind::Acq || kind == Kind::Rel; }
};

// One thread's part of a configuration. `held` has bit l set iff the thread
// owns lock l; in reentrant mode `counts` carries the acquisition counts and
// `held` mirrors counts > 0.
struct ThreadConfig {
    StateId state = 0;
    std::vector<SymbolId> stack;  // top of stack = back()
    LockSet held = 0;
    std::vector<std::uint32_t> counts;

    bool operator==(const ThreadConfig&) const = default;
    std::size_t height() const { return stack.size(); }
};

struct SystemConfig {
    std::vector<ThreadConfig> threads;
    bool operator==(const SystemConfig&) const = default;
};

struct SystemConfigHash {
    std::size_t operator()(const SystemConfig& c) const;
};

// A computation: initial configuration plus validated steps. Configurations
// are stored per step so invariant checks are O(1).
struct Step {
    Label label;
    SystemConfig after;
};

struct Computation {
    SystemConfig start;
    std::vector<Step> steps;

    std::size_t length() const { return steps.size(); }
    // Configuration s_p for 0 <= p <= length().
    const SystemConfig& config(std::size_t p) const { return p == 0 ? start : steps[p - 1].after; }
    const SystemConfig& final_config() const { return config(steps.size()); }
    std::vector<Label> labels() const;
};

// Matched procedure calls and returns, per thread: a return at j matches the
// call at l iff l < j, the heights at s_l and s_{j+1} agree, and the height
// never dips below its value at s_{l+1} in between.
struct MatchMap {
    std::vector<std::map<std::size_t, std::size_t>> call_to_return;  // per thread
    std::vector<std::vector<std::size_t>> unmatched_calls;           // per thread, ascending

    std::optional<std::size_t> return_of(std::uint32_t thread, std::size_t call_pos) const {
        const auto& m = call_to_return[thread];
        auto it = m.find(call_pos);
        if (it == m.end()) return std::nullopt;
        return it->second;
    }
};

// A validated MultiPdsSpec compiled to dense indices. Execution-side
// operations live here; the original spec is kept for sub-system extraction
// and rendering.
class System {
  public:
    struct Thread {
        std::string name;
        std::vector<std::string> state_names;
        std::vector<std::string> symbol_names;
        StateId initial = 0;
        // Rules grouped by source state, declaration order preserved.
        struct StateRules {
            std::vector<std::pair<StateId, std::uint32_t>> internal;    // (to, rule#)
            std::vector<std::tuple<StateId, SymbolId, std::uint32_t>> push;  // (to, sym, rule#)
            std::vector<std::tuple<SymbolId, StateId, std::uint32_t>> pop;   // (sym, to, rule#)
            std::vector<std::tuple<StateId, LockIdx, std::uint32_t>> acquire;
            std::vector<std::tuple<LockIdx, StateId, std::uint32_t>> release;
        };
        std::vector<StateRules> by_state;

        // The same rules flat, by declaration index (for exact-rule replay).
        struct Flat {
            std::vector<std::pair<StateId, StateId>> internal;                  // from, to
            std::vector<std::tuple<StateId, StateId, SymbolId>> push;           // from, to, sym
            std::vector<std::tuple<StateId, SymbolId, StateId>> pop;            // from, sym, to
            std::vector<std::tuple<StateId, StateId, LockIdx>> acquire;         // from, to, lock
            std::vector<std::tuple<StateId, LockIdx, StateId>> release;         // from, lock, to
        };
        Flat flat;

        std::optional<StateId> state_id(const std::string& name) const;
        std::optional<SymbolId> symbol_id(const std::string& name) const;

      private:
        friend class System;
        std::unordered_map<std::string, StateId> state_index_;
        std::unordered_map<std::string, SymbolId> symbol_index_;
    };

    // Pre: validate(spec) is empty. Throws InputError on unsupported sizes
    // (more than 64 locks) and InternalError if the spec is not clean.
    static System compile(const MultiPdsSpec& spec);

    const MultiPdsSpec& source() const { return source_; }
    bool reentrant() const { return source_.reentrant; }
    std::size_t thread_count() const { return threads_.size(); }
    std::size_t lock_count() const { return lock_names_.size(); }
    const std::vector<std::string>& lock_names() const { return lock_names_; }
    const Thread& thread(std::size_t i) const { return threads_[i]; }
    std::optional<LockIdx> lock_id(const std::string& name) const;

    SystemConfig initial_config() const;
    LockSet all_locks_mask() const;
    LockSet free_locks(const SystemConfig& c) const;

    // One enabled move of a single thread in a lock environment.
    struct ThreadStep {
        Label::Kind kind;
        LockIdx lock = 0;
        ThreadConfig next;
        LockSet free_after = 0;
    };
    // Successors licensed by the five rule families, in the canonical order
    // state, push, pop, acq, rel, then declaration order.
    std::vector<ThreadStep> thread_successors(std::size_t thread, LockSet free,
                                              const ThreadConfig& cfg) const;

    // Interleaving successors: threads in index order, each via
    // thread_successors; duplicates collapse.
    std::vector<std::pair<Label, SystemConfig>> successors(const SystemConfig& c) const;

    // Rebuild a computation from a label word by replay; throws InputError
    // naming the first step that is not enabled. When two declared rules
    // carry the same label from the same configuration, the canonical-order
    // first one is taken.
    Computation replay(std::span<const Label> labels) const;

    // Exact-rule replay: applies the named declarations in order, checking
    // source states and enabledness. Unambiguous by construction.
    struct RuleRef {
        std::uint32_t thread;
        Label::Kind family;
        std::uint32_t index;  // declaration index within the family
    };
    Computation replay_rules(std::span<const RuleRef> rules) const;

    // Full validity check: replays the label word and requires every stored
    // configuration, plus the lock-disjointness and stack-height invariants,
    // to hold. Throws InternalError on mismatch.
    void check_valid(const Computation& comp) const;

    std::string render_label(const Label& l) const;
    std::string render_config(const SystemConfig& c) const;

  private:
    MultiPdsSpec source_;
    std::vector<std::string> lock_names_;
    std::unordered_map<std::string, LockIdx> lock_index_;
    std::vector<Thread> threads_;
};

MatchMap match_calls_returns(const Computation& comp);

bool is_call(const Label& l);
bool is_return(const Label& l);

}  // namespace lockreach
