#include "lockreach/reach.hpp"

#include <chrono>
#include <sstream>

#include "lockreach/discipline.hpp"
#include "lockreach/errors.hpp"

namespace lockreach {

namespace {

std::uint64_t pack_state(const ProductState& s) {
    return (static_cast<std::uint64_t>(s.q0) << 48) | (static_cast<std::uint64_t>(s.q1) << 32) |
           (static_cast<std::uint64_t>(s.h0) << 16) | static_cast<std::uint64_t>(s.h1);
}

// Tag layout: thread (bit 35) | family (bits 32..34) | declaration index.
std::uint64_t make_tag(std::uint32_t thread, Label::Kind family, std::uint32_t rule) {
    return (static_cast<std::uint64_t>(thread) << 35) |
           (static_cast<std::uint64_t>(family) << 32) | rule;
}

}  // namespace

System::RuleRef ProductPds::tag_to_rule(std::uint64_t tag) {
    return System::RuleRef{static_cast<std::uint32_t>(tag >> 35),
                           static_cast<Label::Kind>((tag >> 32) & 0x7u),
                           static_cast<std::uint32_t>(tag & 0xffffffffu)};
}

ProductPds::ProductPds(const System& sys) : sys_(&sys) {
    std::size_t hsets = std::size_t{1} << sys.lock_count();
    bound_ = sys.thread(0).state_names.size() * sys.thread(1).state_names.size() * hsets * hsets;
}

std::unique_ptr<ProductPds> ProductPds::build(const System& sys) {
    if (sys.reentrant())
        throw InputError("the decision procedure requires non-reentrant locks");
    if (sys.thread_count() != 2)
        throw InputError("the product construction takes exactly two threads");
    if (sys.lock_count() > 16)
        throw InputError("the product construction supports at most 16 locks");
    for (std::size_t t = 0; t < 2; ++t)
        if (sys.thread(t).state_names.size() > 0xffff)
            throw InputError("the product construction supports at most 65535 states per thread");
    for (std::size_t t = 0; t < 2; ++t) {
        auto check = check_contextual_static(sys, t);
        if (!check.holds) {
            std::ostringstream os;
            os << "thread " << sys.thread(t).name
               << " does not follow contextual locking: " << check.offense;
            os << "; witness:";
            for (const auto& l : check.witness) os << " " << sys.render_label(l);
            throw InputError(os.str());
        }
    }
    return std::unique_ptr<ProductPds>(new ProductPds(sys));
}

sat::ControlId ProductPds::intern(const ProductState& s) {
    internal_check((s.h0 & s.h1) == 0, "product state with overlapping locksets");
    auto [it, fresh] = index_.emplace(pack_state(s), static_cast<sat::ControlId>(states_.size()));
    if (fresh) {
        states_.push_back(s);
        internal_check(states_.size() <= bound_, "product exceeded |Q0||Q1|4^l states");
    }
    return it->second;
}

sat::ControlId ProductPds::initial_control() {
    return intern(ProductState{sys_->thread(0).initial, 0, sys_->thread(1).initial, 0});
}

std::optional<sat::ControlId> ProductPds::find_control(const ProductState& s) const {
    auto it = index_.find(pack_state(s));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

sat::Sym ProductPds::global_symbol(std::uint32_t thread, SymbolId s) const {
    return thread == 0 ? s : s + static_cast<sat::Sym>(sys_->thread(0).symbol_names.size());
}

std::pair<std::uint32_t, SymbolId> ProductPds::split_symbol(sat::Sym g) const {
    auto n0 = static_cast<sat::Sym>(sys_->thread(0).symbol_names.size());
    return g < n0 ? std::pair<std::uint32_t, SymbolId>{0, g}
                  : std::pair<std::uint32_t, SymbolId>{1, g - n0};
}

const sat::ControlRules& ProductPds::rules_for(sat::ControlId id) {
    if (rules_.size() <= id) rules_.resize(id + 1);
    if (rules_[id]) return *rules_[id];

    const ProductState s = states_[id];
    auto rules = std::make_unique<sat::ControlRules>();
    for (std::uint32_t t = 0; t < 2; ++t) {
        StateId q = t == 0 ? s.q0 : s.q1;
        LockSet mine = t == 0 ? s.h0 : s.h1;
        LockSet both = s.h0 | s.h1;
        const auto& by = sys_->thread(t).by_state[q];

        auto with = [&](StateId q2, LockSet h2) {
            ProductState n = s;
            if (t == 0) {
                n.q0 = q2;
                n.h0 = h2;
            } else {
                n.q1 = q2;
                n.h1 = h2;
            }
            return intern(n);
        };
        for (const auto& [to, idx] : by.internal)
            rules->internals.push_back({with(to, mine), make_tag(t, Label::Kind::State, idx)});
        for (const auto& [to, lock, idx] : by.acquire)
            if (!(both & lock_bit(lock)))
                rules->internals.push_back(
                    {with(to, mine | lock_bit(lock)), make_tag(t, Label::Kind::Acq, idx)});
        for (const auto& [lock, to, idx] : by.release)
            if (mine & lock_bit(lock))
                rules->internals.push_back(
                    {with(to, mine & ~lock_bit(lock)), make_tag(t, Label::Kind::Rel, idx)});
        for (const auto& [to, sym, idx] : by.push)
            rules->pushes.push_back(
                {with(to, mine), global_symbol(t, sym), make_tag(t, Label::Kind::Push, idx)});
        for (const auto& [sym, to, idx] : by.pop)
            rules->pops.push_back(
                {global_symbol(t, sym), with(to, mine), make_tag(t, Label::Kind::Pop, idx)});
    }
    rules_[id] = std::move(rules);
    return *rules_[id];
}

SaturationAutomaton post_star(ProductPds& prod) {
    SaturationAutomaton aut;
    aut.prod_ = &prod;
    aut.engine_ = std::make_unique<sat::PostStar>(
        prod.initial_control(), [&prod](sat::ControlId c) -> const sat::ControlRules& {
            return prod.rules_for(c);
        });
    aut.engine_->run();
    return aut;
}

bool SaturationAutomaton::control_reachable(const ProductState& s) const {
    auto id = prod_->find_control(s);
    return id && engine_->control_reachable(*id);
}

bool SaturationAutomaton::accepts(const ProductState& s, std::span<const sat::Sym> stack) const {
    auto id = prod_->find_control(s);
    return id && engine_->accepts(*id, stack);
}

std::vector<ProductState> SaturationAutomaton::reachable_states() const {
    std::vector<ProductState> out;
    for (auto c : engine_->reachable_controls()) out.push_back(prod_->state_of(c));
    return out;
}

std::optional<std::vector<System::RuleRef>> SaturationAutomaton::witness_rules(
    const ProductState& s) const {
    auto id = prod_->find_control(s);
    if (!id) return std::nullopt;
    auto tags = engine_->witness_tags(*id);
    if (!tags) return std::nullopt;
    std::vector<System::RuleRef> rules;
    rules.reserve(tags->size());
    for (auto tag : *tags) rules.push_back(ProductPds::tag_to_rule(tag));
    return rules;
}

std::pair<MultiPdsSpec, PairQuery> reduce_to_pair(const MultiPdsSpec& spec,
                                                  const PairQuery& query) {
    if (spec.threads.size() == 2 && query.thread_a == 0 && query.thread_b == 1)
        return {spec, query};
    MultiPdsSpec pair;
    pair.name = spec.name;
    pair.locks = spec.locks;
    pair.reentrant = spec.reentrant;
    pair.threads.push_back(spec.threads[query.thread_a]);
    pair.threads.push_back(spec.threads[query.thread_b]);
    return {pair, PairQuery{0, 1, query.state_a, query.state_b}};
}

PairwiseDecider::PairwiseDecider(const MultiPdsSpec& spec) {
    if (spec.threads.size() != 2)
        throw InputError("the decision procedure takes exactly two threads");
    sys_ = std::make_unique<System>(System::compile(spec));
    prod_ = ProductPds::build(*sys_);
    auto t0 = std::chrono::steady_clock::now();
    aut_ = std::make_unique<SaturationAutomaton>(post_star(*prod_));
    auto t1 = std::chrono::steady_clock::now();
    saturation_seconds_ = std::chrono::duration<double>(t1 - t0).count();
}

ReachDecision PairwiseDecider::decide(const PairQuery& query) const {
    {
        auto violations = validate_query(sys_->source(), query);
        if (!violations.empty()) throw InputError(violations.front().message);
    }
    // Normalize so qa is the thread-0 side.
    const bool flipped = query.thread_a == 1;
    const StateId qa = *sys_->thread(0).state_id(flipped ? query.state_b : query.state_a);
    const StateId qb = *sys_->thread(1).state_id(flipped ? query.state_a : query.state_b);

    ReachDecision dec;
    dec.product_states = prod_->materialized();
    dec.product_state_bound = prod_->state_bound();
    dec.automaton_transitions = aut_->transitions();
    dec.saturation_seconds = saturation_seconds_;

    // First reachable control matching the query, in materialization order
    // (deterministic: saturation order is fixed).
    std::optional<ProductState> hit;
    for (const auto& s : aut_->reachable_states()) {
        if (s.q0 == qa && s.q1 == qb) {
            hit = s;
            break;
        }
    }
    if (!hit) return dec;

    dec.reachable = true;
    auto rules = aut_->witness_rules(*hit);
    internal_check(rules.has_value(), "reachable control without witness");
    Computation wit = sys_->replay_rules(*rules);
    sys_->check_valid(wit);
    const auto& last = wit.final_config();
    internal_check(last.threads[0].state == qa && last.threads[1].state == qb,
                   "witness does not end at the queried pair");
    dec.witness = std::move(wit);
    return dec;
}

ReachDecision pairwise_reach(const MultiPdsSpec& spec, const PairQuery& query) {
    {
        auto violations = validate(spec);
        if (!violations.empty())
            throw InputError("spec fails validation: " + violations.front().message);
        violations = validate_query(spec, query);
        if (!violations.empty()) throw InputError(violations.front().message);
    }
    if (spec.reentrant)
        throw InputError("the decision procedure requires non-reentrant locks");
    if (spec.threads.size() != 2) {
        auto [pair, q2] = reduce_to_pair(spec, query);
        return pairwise_reach(pair, q2);
    }
    return PairwiseDecider(spec).decide(query);
}

}  // namespace lockreach
