#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lockreach/explorer.hpp"
#include "lockreach/model.hpp"

namespace lockreach {

// Two-counter machine: finite control, two non-negative counters, five
// transition families (state moves, increment/decrement/zero-test per
// counter). Halting: reach the final state from (initial, 0, 0).
struct CmRule {
    std::string from, to;
    bool operator==(const CmRule&) const = default;
};

struct CounterMachine {
    std::string name;
    std::vector<std::string> states;
    std::string initial;
    std::string final_state;
    std::vector<CmRule> state_moves;
    std::array<std::vector<CmRule>, 2> inc;   // counter 1 at [0], counter 2 at [1]
    std::array<std::vector<CmRule>, 2> dec;
    std::array<std::vector<CmRule>, 2> zero;
    bool operator==(const CounterMachine&) const = default;
};

std::vector<Violation> validate(const CounterMachine& m);

struct CmConfig {
    std::uint32_t state = 0;
    std::uint64_t counter[2] = {0, 0};
    bool operator==(const CmConfig&) const = default;
};

enum class CmKind : std::uint8_t { State, Inc, Dec, Zero };

struct CmStep {
    CmKind kind;
    int counter;  // 0 or 1; -1 for state moves
    CmConfig after;
};

struct CmRun {
    CmConfig start;
    std::vector<CmStep> steps;
};

struct CmHaltResult {
    enum class Status { Halts, NotFoundExhausted, NotFoundTruncated };
    Status status = Status::NotFoundTruncated;
    std::optional<CmRun> run;
    std::size_t expanded = 0;

    bool halts() const { return status == Status::Halts; }
};

// Indexed view used by the operational functions.
class CompiledCm {
  public:
    explicit CompiledCm(const CounterMachine& m);  // pre: validate(m) empty

    const CounterMachine& source() const { return machine_; }
    std::uint32_t state_id(const std::string& name) const;
    std::uint32_t initial() const { return initial_; }
    std::uint32_t final_state() const { return final_; }

    // Successors in canonical order: state moves, then per counter
    // inc/dec/zero, declaration order within each family.
    std::vector<CmStep> step(const CmConfig& c) const;

    CmHaltResult halts_bounded(std::size_t step_bound, std::uint64_t counter_bound) const;

  private:
    CounterMachine machine_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::uint32_t initial_ = 0, final_ = 0;
    struct Moves {
        std::vector<std::uint32_t> state_moves;
        std::array<std::vector<std::uint32_t>, 2> inc, dec, zero;
    };
    std::vector<Moves> by_state_;  // targets grouped by source state
};

std::vector<CmStep> cm_step(const CompiledCm& m, const CmConfig& c);
CmHaltResult cm_halts_bounded(const CounterMachine& m, std::size_t step_bound,
                              std::uint64_t counter_bound);

// Output of the counter-machine-to-locks reduction: a reentrant, stack-free
// 2-PDS over locks {h, h', r1, r2, l1, l2, t1, t2} plus the target pair.
// Thread 0 simulates the machine (counter i = its holding count of l_i);
// thread 1 is the zero-test partner cycling through a six-step handshake.
struct ReductionOutput {
    MultiPdsSpec spec;
    PairQuery target;

    struct SimRole {
        enum class Kind : std::uint8_t { Init, Cm, Test };
        Kind kind;
        std::uint32_t cm_state = 0;  // Cm/Test: machine state index
        int step = 0;                // Init: 0..4; Test: 1..5
        int counter = 0;             // Test only: 0 or 1
    };
    struct PartnerRole {
        enum class Kind : std::uint8_t { Init, Ready, Proto };
        Kind kind;
        int step = 0;     // Init: 0..4; Proto: 0..5
        int counter = 0;  // Proto only
    };
    std::unordered_map<std::string, SimRole> sim_roles;          // thread 0 states
    std::unordered_map<std::string, PartnerRole> partner_roles;  // thread 1 states
    std::string sim_state_name(const std::string& cm_state) const { return "T1." + cm_state; }
};

// The construction: init prefixes acq(h')acq(r1)acq(r2)acq(h)rel(h')
// and acq(h)acq(t1)acq(t2)rel(h)acq(h'), counter moves as lock
// acquisitions/releases of l_i, zero tests as the twelve-step handshake over
// t_i/r_i/l_i. Rejects machines whose state names collide with the reserved
// generated names.
ReductionOutput compile_cm(const CounterMachine& m);

// Projects the counter-machine run out of a computation of the compiled
// system: thread 0's holding counts of l_1/l_2 at each simulated machine
// step. Returns nothing if the computation does not stay within the
// simulation discipline.
std::optional<CmRun> project_cm_run(const ReductionOutput& red, const System& sys,
                                    const Computation& comp);

struct ReductionReport {
    CmHaltResult cm;
    ReachResult pds;
    std::optional<CmRun> projected;
    bool projection_valid = false;  // projected run replays and halts
    bool agree = false;             // positive sides coincide at the bounds
    std::string detail;
};

ReductionReport verify_reduction(const CounterMachine& m, const Bounds& pds_bounds,
                                 std::size_t cm_step_bound, std::uint64_t cm_counter_bound);

}  // namespace lockreach
