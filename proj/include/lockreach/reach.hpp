#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lockreach/model.hpp"
#include "lockreach/saturation.hpp"
#include "lockreach/system.hpp"

namespace lockreach {

// One control state of the combined PDS: both threads' states and locksets.
// h0 and h1 stay disjoint in every reachable state.
struct ProductState {
    StateId q0 = 0;
    LockSet h0 = 0;
    StateId q1 = 0;
    LockSet h1 = 0;
    bool operator==(const ProductState&) const = default;
};

// The combined PDS over the union stack alphabet. Internal/acq/rel moves of
// either thread become internal moves updating that thread's (state, lockset)
// component; push/pop carry the calling thread's symbol onto the one shared
// stack. States materialize lazily from the initial state; the bound
// |Q0|*|Q1|*4^l still holds for everything materialized.
class ProductPds {
  public:
    // Pre: validated, plain, two threads, both statically contextual (the
    // construction simulates exactly the well-bracketed computations, which
    // is complete only under that hypothesis). Throws InputError otherwise.
    static std::unique_ptr<ProductPds> build(const System& sys);

    const System& system() const { return *sys_; }
    sat::ControlId initial_control();
    const ProductState& state_of(sat::ControlId id) const { return states_[id]; }
    std::optional<sat::ControlId> find_control(const ProductState& s) const;
    std::size_t materialized() const { return states_.size(); }
    std::size_t state_bound() const { return bound_; }

    const sat::ControlRules& rules_for(sat::ControlId id);

    sat::Sym global_symbol(std::uint32_t thread, SymbolId s) const;
    std::pair<std::uint32_t, SymbolId> split_symbol(sat::Sym g) const;

    // Decodes a rule tag back to (thread, family, declaration index).
    static System::RuleRef tag_to_rule(std::uint64_t tag);

  private:
    explicit ProductPds(const System& sys);
    sat::ControlId intern(const ProductState& s);

    const System* sys_;
    std::size_t bound_ = 0;
    std::vector<ProductState> states_;
    std::unordered_map<std::uint64_t, sat::ControlId> index_;
    std::vector<std::unique_ptr<sat::ControlRules>> rules_;
};

// The saturated P-automaton: accepts exactly the reachable configurations of
// the product, per control state. Keeps a pointer to the product it was built
// from; the product must outlive it.
class SaturationAutomaton {
  public:
    bool control_reachable(const ProductState& s) const;
    // Reachable (control, stack) query; stack is bottom-first over global
    // symbols.
    bool accepts(const ProductState& s, std::span<const sat::Sym> stack) const;
    // All reachable product states, in materialization order.
    std::vector<ProductState> reachable_states() const;
    // Rule applications of some run reaching this control; empty optional if
    // unreachable.
    std::optional<std::vector<System::RuleRef>> witness_rules(const ProductState& s) const;

    std::size_t transitions() const { return engine_->num_transitions(); }
    const sat::PostStar& engine() const { return *engine_; }

  private:
    friend SaturationAutomaton post_star(ProductPds& prod);
    ProductPds* prod_ = nullptr;
    std::unique_ptr<sat::PostStar> engine_;
};

// Saturation to fixpoint; unreachability read off this automaton is exact.
SaturationAutomaton post_star(ProductPds& prod);

// Drops all threads but the queried two; the answer is unchanged.
std::pair<MultiPdsSpec, PairQuery> reduce_to_pair(const MultiPdsSpec& spec,
                                                  const PairQuery& query);

struct ReachDecision {
    bool reachable = false;
    std::optional<Computation> witness;  // two-thread computation, replayable
    std::size_t product_states = 0;      // materialized controls
    std::size_t product_state_bound = 0;
    std::size_t automaton_transitions = 0;
    double saturation_seconds = 0.0;
};

// One product and one saturation, reused across queries of the same
// two-thread system: post* answers every control-state target at once.
class PairwiseDecider {
  public:
    // Pre: validated two-thread spec; gates as ProductPds::build.
    explicit PairwiseDecider(const MultiPdsSpec& spec);

    const System& system() const { return *sys_; }
    ReachDecision decide(const PairQuery& query) const;

  private:
    std::unique_ptr<System> sys_;
    std::unique_ptr<ProductPds> prod_;
    std::unique_ptr<SaturationAutomaton> aut_;
    double saturation_seconds_ = 0.0;
};

// Decides pairwise control-state reachability for a validated plain-lock
// system whose threads follow contextual locking; reduces n > 2 to the pair
// first. Throws InputError on reentrant or non-contextual inputs.
ReachDecision pairwise_reach(const MultiPdsSpec& spec, const PairQuery& query);

}  // namespace lockreach
