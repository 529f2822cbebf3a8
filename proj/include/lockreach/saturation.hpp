#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace lockreach {
namespace sat {

// post* saturation for pushdown systems whose moves never inspect the top of
// stack except to pop it. Controls are client-interned dense ids; the client
// supplies the outgoing rules of a control on demand, so control spaces that
// are nominally huge (products with lockset components) materialize lazily.
//
// Stack convention: automaton words are read top-first and every accepted
// word ends with an implicit bottom marker; a configuration with stack
// `s0 s1 ... sk` (top = sk) is accepted from its control via the word
// `sk ... s1 s0 BOTTOM`.

using ControlId = std::uint32_t;
using Sym = std::uint32_t;

constexpr Sym kEps = ~Sym{0};
constexpr Sym kBottom = ~Sym{0} - 1;

// One source-level rule, tagged with client provenance (for witnesses).
struct ControlRules {
    struct Internal {
        ControlId target;
        std::uint64_t tag;
    };
    struct Push {
        ControlId target;
        Sym symbol;  // new top
        std::uint64_t tag;
    };
    struct Pop {
        Sym symbol;  // required top
        ControlId target;
        std::uint64_t tag;
    };
    std::vector<Internal> internals;
    std::vector<Push> pushes;
    std::vector<Pop> pops;
};

class PostStar {
  public:
    using RuleProvider = std::function<const ControlRules&(ControlId)>;

    PostStar(ControlId initial_control, RuleProvider provider);

    // Saturate to fixpoint. `max_transitions` guards runaway growth; hitting
    // it is an internal error, not an answer.
    void run(std::size_t max_transitions = 50'000'000);

    bool control_reachable(ControlId c) const;
    std::vector<ControlId> reachable_controls() const;

    // Distinct labels on edges out of a control, ascending (kBottom last).
    // An edge labelled s means some reachable configuration of this control
    // has s on top of its stack (kBottom: the empty stack is reachable).
    std::vector<Sym> out_labels(ControlId c) const;

    // Does the saturated automaton accept configuration (control, stack)?
    // `stack` is bottom-first (execution order); empty stack is allowed.
    bool accepts(ControlId control, std::span<const Sym> stack) const;

    // Rule tags along some run from the initial configuration to a
    // configuration with this control state (deterministic choice). Empty
    // optional iff unreachable.
    std::optional<std::vector<std::uint64_t>> witness_tags(ControlId control) const;

    // Tags of a run reaching a configuration whose control is `control` and
    // whose top of stack is `top` (used for top-sensitive violation checks).
    std::optional<std::vector<std::uint64_t>> witness_tags_with_top(ControlId control,
                                                                    Sym top) const;

    std::size_t num_transitions() const { return trans_.size(); }
    std::size_t num_controls_seen() const { return control_state_.size(); }

  private:
    using AutState = std::uint32_t;
    static constexpr AutState kFinal = 0;
    static constexpr std::uint32_t kNone = ~std::uint32_t{0};

    struct Prov {
        enum class Kind : std::uint8_t { Init, Step, PushHead, PushTail, Eps };
        Kind kind = Kind::Init;
        std::uint32_t premise = kNone;   // transition id
        std::uint32_t premise2 = kNone;  // Eps: the non-eps transition
        std::uint64_t tag = 0;           // Step/PushHead/PushTail: rule tag
    };

    struct Trans {
        AutState from;
        Sym label;
        AutState to;
        Prov prov;
    };

    AutState control_aut(ControlId c);
    AutState aux_aut(ControlId c, Sym s);
    bool is_aux(AutState s) const { return s >= first_aux_ && s != kFinal; }
    void add(AutState from, Sym label, AutState to, Prov prov);
    std::optional<std::vector<std::uint32_t>> shortest_path_to_final(AutState from) const;
    std::vector<std::uint64_t> reconstruct(std::vector<std::uint32_t> path) const;

    RuleProvider provider_;
    ControlId initial_control_;
    // Automaton states: 0 = final sink; controls and aux states interned on
    // demand. Controls never receive incoming edges.
    std::unordered_map<ControlId, AutState> control_state_;
    std::unordered_map<std::uint64_t, AutState> aux_state_;  // key (control, sym)
    std::vector<ControlId> aut_owner_;  // aut state -> control id (controls only)
    AutState next_state_ = 1;
    AutState first_aux_ = ~AutState{0};  // aux states are not contiguous; tracked per-state
    std::vector<bool> aux_flag_;

    std::vector<Trans> trans_;
    std::unordered_map<std::uint64_t, std::uint32_t> trans_index_;  // dedup key -> id
    std::vector<std::vector<std::uint32_t>> out_;     // per state: outgoing transition ids
    std::vector<std::vector<std::uint32_t>> eps_in_;  // per state: incoming eps transition ids
    std::vector<std::uint32_t> worklist_;
    bool ran_ = false;
};

}  // namespace sat
}  // namespace lockreach
