#include "lockreach/discipline.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "lockreach/errors.hpp"
#include "lockreach/saturation.hpp"

namespace lockreach {

std::string ContextualViolation::describe(const System& sys) const {
    std::ostringstream os;
    os << "thread " << sys.thread(thread).name << ": call at step " << call_pos
       << " / return at step " << return_pos;
    if (offense == Offense::EndpointMismatch)
        os << ": lockset at return differs from lockset at call";
    else
        os << ": lockset dipped below the call-time lockset at position " << dip_pos;
    return os.str();
}

std::vector<ContextualViolation> check_contextual_trace(const System& sys,
                                                        const Computation& comp) {
    std::vector<ContextualViolation> out;
    MatchMap mm = match_calls_returns(comp);
    for (std::uint32_t t = 0; t < comp.start.threads.size(); ++t) {
        for (const auto& [call, ret] : mm.call_to_return[t]) {
            if (!sys.reentrant()) {
                LockSet at_call = comp.config(call).threads[t].held;
                LockSet at_return = comp.config(ret).threads[t].held;
                if (at_call != at_return) {
                    out.push_back(ContextualViolation{t, call, ret,
                                                      ContextualViolation::Offense::EndpointMismatch,
                                                      0});
                    continue;
                }
                for (std::size_t p = call; p <= ret; ++p) {
                    if ((comp.config(p).threads[t].held & at_call) != at_call) {
                        out.push_back(ContextualViolation{
                            t, call, ret, ContextualViolation::Offense::Dip, p});
                        break;
                    }
                }
            } else {
                const auto& at_call = comp.config(call).threads[t].counts;
                const auto& after_return = comp.config(ret + 1).threads[t].counts;
                if (at_call != after_return) {
                    out.push_back(ContextualViolation{t, call, ret,
                                                      ContextualViolation::Offense::EndpointMismatch,
                                                      0});
                    continue;
                }
                bool dipped = false;
                for (std::size_t p = call; p <= ret && !dipped; ++p) {
                    const auto& here = comp.config(p).threads[t].counts;
                    for (std::size_t l = 0; l < at_call.size(); ++l)
                        if (here[l] < at_call[l]) {
                            out.push_back(ContextualViolation{
                                t, call, ret, ContextualViolation::Offense::Dip, p});
                            dipped = true;
                            break;
                        }
                }
            }
        }
    }
    return out;
}

MultiPdsSpec singleton_spec(const MultiPdsSpec& spec, std::size_t thread) {
    MultiPdsSpec single;
    single.name = spec.name + "." + spec.threads[thread].name;
    single.locks = spec.locks;
    single.reentrant = spec.reentrant;
    single.threads.push_back(spec.threads[thread]);
    return single;
}

namespace {

// Tags for static-check witnesses: family and declaration index of the
// applied thread transition.
enum class Family : std::uint64_t { Internal = 0, Push, Pop, Acq, Rel };

std::uint64_t make_tag(Family f, std::uint32_t rule) {
    return (static_cast<std::uint64_t>(f) << 32) | rule;
}

System::RuleRef tag_to_rule(std::uint64_t tag) {
    auto rule = static_cast<std::uint32_t>(tag & 0xffffffffu);
    switch (static_cast<Family>(tag >> 32)) {
        case Family::Internal: return {0, Label::Kind::State, rule};
        case Family::Push: return {0, Label::Kind::Push, rule};
        case Family::Pop: return {0, Label::Kind::Pop, rule};
        case Family::Acq: return {0, Label::Kind::Acq, rule};
        case Family::Rel: return {0, Label::Kind::Rel, rule};
    }
    throw InternalError("bad rule tag");
}

}  // namespace

StaticContextualResult check_contextual_static(const System& sys, std::size_t thread) {
    if (sys.reentrant())
        throw InputError(
            "the static contextual check handles plain locks only; use the trace checker for "
            "reentrant systems");
    const std::size_t locks = sys.lock_count();
    if (locks > 20)
        throw InputError("static contextual check supports at most 20 locks (2^l blowup)");

    // Compile the thread as a singleton system; its ids are dense and its
    // runs under "all locks free" are exactly the thread's projections.
    MultiPdsSpec single_spec = singleton_spec(sys.source(), thread);
    System single = System::compile(single_spec);
    const auto& th = single.thread(0);

    const std::uint64_t hsets = std::uint64_t{1} << locks;
    // Dense encodings: control (q, held) and stack symbol (a, pushed lockset).
    auto control_of = [&](StateId q, LockSet h) {
        return static_cast<sat::ControlId>(q * hsets + h);
    };
    auto sym_of = [&](SymbolId a, LockSet hp) { return static_cast<sat::Sym>(a * hsets + hp); };
    internal_check(th.state_names.size() * hsets < (std::uint64_t{1} << 31),
                   "augmented control space too large");

    std::vector<std::unique_ptr<sat::ControlRules>> cache;
    auto provider = [&](sat::ControlId c) -> const sat::ControlRules& {
        if (cache.size() <= c) cache.resize(c + 1);
        if (!cache[c]) {
            auto rules = std::make_unique<sat::ControlRules>();
            StateId q = static_cast<StateId>(c / hsets);
            LockSet h = c % hsets;
            const auto& by = th.by_state[q];
            for (const auto& [to, idx] : by.internal)
                rules->internals.push_back({control_of(to, h), make_tag(Family::Internal, idx)});
            for (const auto& [to, lock, idx] : by.acquire)
                if (!(h & lock_bit(lock)))
                    rules->internals.push_back(
                        {control_of(to, h | lock_bit(lock)), make_tag(Family::Acq, idx)});
            for (const auto& [lock, to, idx] : by.release)
                if (h & lock_bit(lock))
                    rules->internals.push_back(
                        {control_of(to, h & ~lock_bit(lock)), make_tag(Family::Rel, idx)});
            for (const auto& [to, symb, idx] : by.push)
                rules->pushes.push_back(
                    {control_of(to, h), sym_of(symb, h), make_tag(Family::Push, idx)});
            for (const auto& [symb, to, idx] : by.pop)
                for (LockSet hp = 0; hp < hsets; ++hp)
                    rules->pops.push_back(
                        {sym_of(symb, hp), control_of(to, h), make_tag(Family::Pop, idx)});
            cache[c] = std::move(rules);
        }
        return *cache[c];
    };

    sat::PostStar engine(control_of(th.initial, 0), provider);
    engine.run();

    StaticContextualResult res;
    auto finish = [&](sat::ControlId control, sat::Sym top, System::RuleRef final_rule,
                      std::string offense) {
        auto tags = engine.witness_tags_with_top(control, top);
        internal_check(tags.has_value(), "violating configuration lost its witness");
        std::vector<System::RuleRef> rules;
        for (auto tag : *tags) rules.push_back(tag_to_rule(tag));
        rules.push_back(final_rule);
        Computation wit = single.replay_rules(rules);
        single.check_valid(wit);
        res.holds = false;
        res.offense = std::move(offense);
        res.witness = wit.labels();
        res.witness_comp = std::move(wit);
    };

    for (auto control : engine.reachable_controls()) {
        StateId q = static_cast<StateId>(control / hsets);
        LockSet h = control % hsets;
        const auto& by = th.by_state[q];
        for (auto top : engine.out_labels(control)) {
            if (top == sat::kBottom) continue;
            SymbolId a = static_cast<SymbolId>(top / hsets);
            LockSet hp = top % hsets;
            for (const auto& [symb, to, idx] : by.pop) {
                if (symb != a || hp == h) continue;
                finish(control, top, System::RuleRef{0, Label::Kind::Pop, idx},
                       "return from " + th.symbol_names[a] +
                           " exits with a lockset different from the one at the call");
                return res;
            }
            for (const auto& [lock, to, idx] : by.release) {
                if (!(h & lock_bit(lock)) || !(hp & lock_bit(lock))) continue;
                finish(control, top, System::RuleRef{0, Label::Kind::Rel, idx},
                       "lock " + single.lock_names()[lock] + " held at the call of " +
                           th.symbol_names[a] + " is released inside it");
                return res;
            }
        }
    }
    return res;
}

std::optional<BracketWitness> classify(const Computation& comp) {
    if (comp.start.threads.size() != 2)
        throw InputError("well-bracketing is defined for exactly two threads");
    MatchMap mm = match_calls_returns(comp);

    // Minimal by l1 then l2, mirroring the constructive proof's choice.
    std::optional<BracketWitness> best;
    for (std::uint32_t t = 0; t < 2; ++t) {
        for (const auto& [l1, l3] : mm.call_to_return[t]) {
            if (best && best->l1 <= l1) continue;
            for (std::size_t l2 = l1 + 1; l2 < l3; ++l2) {
                const Label& lab = comp.steps[l2].label;
                if (!is_call(lab) || lab.thread == t) continue;
                auto ret = mm.return_of(1 - t, l2);
                if (ret && *ret <= l3 + 1) continue;
                best = BracketWitness{l1, l2, l3, t};
                break;
            }
        }
    }
    return best;
}

namespace {

// Re-applies the step originally at `orig_pos` on top of `current`, checking
// the thread-local precondition and global lock availability.
SystemConfig apply_moved_step(const System& sys, const SystemConfig& current,
                              const Computation& orig, std::size_t orig_pos) {
    const Step& st = orig.steps[orig_pos];
    const std::uint32_t t = st.label.thread;
    const ThreadConfig& pre = orig.config(orig_pos).threads[t];
    const ThreadConfig& post = st.after.threads[t];
    if (!(current.threads[t] == pre))
        throw InternalError("reordering misaligned a thread-local configuration");
    if (st.label.kind == Label::Kind::Acq) {
        for (std::size_t j = 0; j < current.threads.size(); ++j) {
            if (j == t) continue;
            if (current.threads[j].held & lock_bit(st.label.lock))
                throw InputError(
                    "step " + std::to_string(orig_pos) + " (" + sys.render_label(st.label) +
                    ") cannot be replayed: the lock is held by the other thread, so the input "
                    "violates contextual locking");
        }
    }
    SystemConfig next = current;
    next.threads[t] = post;
    return next;
}

}  // namespace

Computation reorder_once(const System& sys, const Computation& comp) {
    if (comp.start.threads.size() != 2)
        throw InputError("reordering is defined for exactly two threads");
    {
        auto violations = check_contextual_trace(sys, comp);
        if (!violations.empty())
            throw InputError("input computation violates contextual locking: " +
                             violations.front().describe(sys));
    }
    auto w = classify(comp);
    if (!w) throw InputError("computation is already well-bracketed");

    // Proof order: prefix up to the deferred call, the pair-owning thread's
    // window moves (their last one is the return), the other thread's window
    // moves (their first one is the deferred call), then the suffix verbatim.
    std::vector<std::size_t> order;
    for (std::size_t p = 0; p < w->l2; ++p) order.push_back(p);
    for (std::size_t p = w->l2; p <= w->l3; ++p)
        if (comp.steps[p].label.thread == w->thread) order.push_back(p);
    for (std::size_t p = w->l2; p <= w->l3; ++p)
        if (comp.steps[p].label.thread != w->thread) order.push_back(p);
    for (std::size_t p = w->l3 + 1; p < comp.steps.size(); ++p) order.push_back(p);
    internal_check(order.size() == comp.steps.size(), "reordering changed the length");

    Computation out;
    out.start = comp.start;
    SystemConfig current = comp.start;
    for (std::size_t p : order) {
        current = apply_moved_step(sys, current, comp, p);
        out.steps.push_back(Step{comp.steps[p].label, current});
    }
    internal_check(out.final_config() == comp.final_config(),
                   "reordering changed the final configuration");

    auto w2 = classify(out);
    internal_check(!w2 || w2->l1 > w->l1, "reordering did not push the minimal witness forward");
    return out;
}

Computation reorder_to_well_bracketed(const System& sys, const Computation& comp) {
    Computation current = comp;
    std::size_t rounds = 0;
    while (classify(current)) {
        internal_check(++rounds <= comp.length() + 1, "reordering exceeded its round bound");
        current = reorder_once(sys, current);
    }
    return current;
}

}  // namespace lockreach
