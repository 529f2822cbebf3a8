#include "lockreach/system.hpp"

#include <algorithm>
#include <sstream>

#include "lockreach/errors.hpp"

namespace lockreach {

namespace {

std::size_t hash_mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

std::size_t SystemConfigHash::operator()(const SystemConfig& c) const {
    std::size_t h = 0x42ULL;
    for (const auto& t : c.threads) {
        h = hash_mix(h, t.state);
        h = hash_mix(h, t.held);
        h = hash_mix(h, t.stack.size());
        for (auto s : t.stack) h = hash_mix(h, s);
        for (auto n : t.counts) h = hash_mix(h, n);
    }
    return h;
}

std::vector<Label> Computation::labels() const {
    std::vector<Label> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.label);
    return out;
}

std::optional<StateId> System::Thread::state_id(const std::string& name) const {
    auto it = state_index_.find(name);
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<SymbolId> System::Thread::symbol_id(const std::string& name) const {
    auto it = symbol_index_.find(name);
    if (it == symbol_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<LockIdx> System::lock_id(const std::string& name) const {
    auto it = lock_index_.find(name);
    if (it == lock_index_.end()) return std::nullopt;
    return it->second;
}

System System::compile(const MultiPdsSpec& spec) {
    if (!validate(spec).empty())
        throw InternalError("System::compile called on a spec that fails validation");
    if (spec.locks.size() > 64)
        throw InputError("at most 64 locks are supported (got " +
                         std::to_string(spec.locks.size()) + ")");

    System sys;
    sys.source_ = spec;
    sys.lock_names_ = spec.locks;
    for (LockIdx i = 0; i < sys.lock_names_.size(); ++i)
        sys.lock_index_.emplace(sys.lock_names_[i], i);

    for (const auto& tspec : spec.threads) {
        Thread t;
        t.name = tspec.name;
        t.state_names = tspec.states;
        t.symbol_names = tspec.stack_alphabet;
        for (StateId i = 0; i < t.state_names.size(); ++i)
            t.state_index_.emplace(t.state_names[i], i);
        for (SymbolId i = 0; i < t.symbol_names.size(); ++i)
            t.symbol_index_.emplace(t.symbol_names[i], i);
        t.initial = *t.state_id(tspec.initial);
        t.by_state.resize(t.state_names.size());

        std::uint32_t rule_no = 0;
        for (const auto& r : tspec.internal) {
            t.by_state[*t.state_id(r.from)].internal.emplace_back(*t.state_id(r.to), rule_no++);
            t.flat.internal.emplace_back(*t.state_id(r.from), *t.state_id(r.to));
        }
        rule_no = 0;
        for (const auto& r : tspec.push) {
            t.by_state[*t.state_id(r.from)].push.emplace_back(*t.state_id(r.to),
                                                              *t.symbol_id(r.symbol), rule_no++);
            t.flat.push.emplace_back(*t.state_id(r.from), *t.state_id(r.to),
                                     *t.symbol_id(r.symbol));
        }
        rule_no = 0;
        for (const auto& r : tspec.pop) {
            t.by_state[*t.state_id(r.from)].pop.emplace_back(*t.symbol_id(r.symbol),
                                                             *t.state_id(r.to), rule_no++);
            t.flat.pop.emplace_back(*t.state_id(r.from), *t.symbol_id(r.symbol),
                                    *t.state_id(r.to));
        }
        rule_no = 0;
        for (const auto& r : tspec.acquire) {
            t.by_state[*t.state_id(r.from)].acquire.emplace_back(*t.state_id(r.to),
                                                                 *sys.lock_id(r.lock), rule_no++);
            t.flat.acquire.emplace_back(*t.state_id(r.from), *t.state_id(r.to),
                                        *sys.lock_id(r.lock));
        }
        rule_no = 0;
        for (const auto& r : tspec.release) {
            t.by_state[*t.state_id(r.from)].release.emplace_back(*sys.lock_id(r.lock),
                                                                 *t.state_id(r.to), rule_no++);
            t.flat.release.emplace_back(*t.state_id(r.from), *sys.lock_id(r.lock),
                                        *t.state_id(r.to));
        }
        sys.threads_.push_back(std::move(t));
    }
    return sys;
}

SystemConfig System::initial_config() const {
    SystemConfig c;
    c.threads.resize(threads_.size());
    for (std::size_t i = 0; i < threads_.size(); ++i) {
        c.threads[i].state = threads_[i].initial;
        if (reentrant()) c.threads[i].counts.assign(lock_count(), 0);
    }
    return c;
}

LockSet System::all_locks_mask() const {
    return lock_count() == 64 ? ~LockSet{0} : (LockSet{1} << lock_count()) - 1;
}

LockSet System::free_locks(const SystemConfig& c) const {
    LockSet held = 0;
    for (const auto& t : c.threads) held |= t.held;
    return all_locks_mask() & ~held;
}

std::vector<System::ThreadStep> System::thread_successors(std::size_t thread, LockSet free,
                                                          const ThreadConfig& cfg) const {
    const Thread& t = threads_[thread];
    const auto& rules = t.by_state[cfg.state];
    std::vector<ThreadStep> out;

    auto emit = [&](Label::Kind kind, LockIdx lock, ThreadConfig next, LockSet free_after) {
        out.push_back(ThreadStep{kind, lock, std::move(next), free_after});
    };

    for (const auto& [to, idx] : rules.internal) {
        ThreadConfig next = cfg;
        next.state = to;
        emit(Label::Kind::State, 0, std::move(next), free);
    }
    for (const auto& [to, sym, idx] : rules.push) {
        ThreadConfig next = cfg;
        next.state = to;
        next.stack.push_back(sym);
        emit(Label::Kind::Push, 0, std::move(next), free);
    }
    if (!cfg.stack.empty()) {
        for (const auto& [sym, to, idx] : rules.pop) {
            if (cfg.stack.back() != sym) continue;
            ThreadConfig next = cfg;
            next.state = to;
            next.stack.pop_back();
            emit(Label::Kind::Pop, 0, std::move(next), free);
        }
    }
    if (!reentrant()) {
        for (const auto& [to, lock, idx] : rules.acquire) {
            if (!(free & lock_bit(lock))) continue;
            ThreadConfig next = cfg;
            next.state = to;
            next.held |= lock_bit(lock);
            emit(Label::Kind::Acq, lock, std::move(next), free & ~lock_bit(lock));
        }
        for (const auto& [lock, to, idx] : rules.release) {
            if (!(cfg.held & lock_bit(lock))) continue;
            ThreadConfig next = cfg;
            next.state = to;
            next.held &= ~lock_bit(lock);
            emit(Label::Kind::Rel, lock, std::move(next), free | lock_bit(lock));
        }
    } else {
        for (const auto& [to, lock, idx] : rules.acquire) {
            bool owned = cfg.counts[lock] > 0;
            if (!owned && !(free & lock_bit(lock))) continue;
            ThreadConfig next = cfg;
            next.state = to;
            next.counts[lock] += 1;
            next.held |= lock_bit(lock);
            emit(Label::Kind::Acq, lock, std::move(next), free & ~lock_bit(lock));
        }
        for (const auto& [lock, to, idx] : rules.release) {
            if (cfg.counts[lock] == 0) continue;
            ThreadConfig next = cfg;
            next.state = to;
            next.counts[lock] -= 1;
            if (next.counts[lock] == 0) {
                next.held &= ~lock_bit(lock);
                emit(Label::Kind::Rel, lock, std::move(next), free | lock_bit(lock));
            } else {
                emit(Label::Kind::Rel, lock, std::move(next), free);
            }
        }
    }
    return out;
}

std::vector<std::pair<Label, SystemConfig>> System::successors(const SystemConfig& c) const {
    LockSet free = free_locks(c);
    std::vector<std::pair<Label, SystemConfig>> out;
    for (std::uint32_t i = 0; i < c.threads.size(); ++i) {
        auto local = thread_successors(i, free, c.threads[i]);
        for (auto& step : local) {
            SystemConfig next = c;
            next.threads[i] = std::move(step.next);
            Label label{step.kind, step.lock, i};
            // Identical declarations yield identical successors; keep one.
            bool dup = false;
            for (const auto& [l2, c2] : out)
                if (l2 == label && c2 == next) {
                    dup = true;
                    break;
                }
            if (!dup) out.emplace_back(label, std::move(next));
        }
    }
    return out;
}

Computation System::replay(std::span<const Label> labels) const {
    Computation comp;
    comp.start = initial_config();
    SystemConfig current = comp.start;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Label& want = labels[i];
        if (want.thread >= thread_count())
            throw InputError("step " + std::to_string(i) + ": thread index " +
                             std::to_string(want.thread) + " out of range");
        bool applied = false;
        for (auto& [label, next] : successors(current)) {
            if (label == want) {
                current = std::move(next);
                comp.steps.push_back(Step{label, current});
                applied = true;
                break;
            }
        }
        if (!applied)
            throw InputError("step " + std::to_string(i) + ": label " + render_label(want) +
                             " is not enabled");
    }
    return comp;
}

Computation System::replay_rules(std::span<const RuleRef> rules) const {
    Computation comp;
    comp.start = initial_config();
    SystemConfig current = comp.start;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const RuleRef& r = rules[i];
        internal_check(r.thread < thread_count(), "rule replay: bad thread");
        const auto& flat = threads_[r.thread].flat;
        ThreadConfig& mine = current.threads[r.thread];
        LockSet others = 0;
        for (std::size_t j = 0; j < current.threads.size(); ++j)
            if (j != r.thread) others |= current.threads[j].held;
        Label label{Label::Kind::State, 0, r.thread};
        switch (r.family) {
            case Label::Kind::State: {
                auto [from, to] = flat.internal.at(r.index);
                internal_check(mine.state == from, "rule replay: state mismatch");
                mine.state = to;
                break;
            }
            case Label::Kind::Push: {
                auto [from, to, sym] = flat.push.at(r.index);
                internal_check(mine.state == from, "rule replay: state mismatch");
                mine.state = to;
                mine.stack.push_back(sym);
                label.kind = Label::Kind::Push;
                break;
            }
            case Label::Kind::Pop: {
                auto [from, sym, to] = flat.pop.at(r.index);
                internal_check(mine.state == from, "rule replay: state mismatch");
                internal_check(!mine.stack.empty() && mine.stack.back() == sym,
                               "rule replay: top of stack mismatch");
                mine.state = to;
                mine.stack.pop_back();
                label.kind = Label::Kind::Pop;
                break;
            }
            case Label::Kind::Acq: {
                auto [from, to, lock] = flat.acquire.at(r.index);
                internal_check(mine.state == from, "rule replay: state mismatch");
                internal_check(!(others & lock_bit(lock)), "rule replay: lock unavailable");
                if (reentrant()) {
                    mine.counts[lock] += 1;
                } else {
                    internal_check(!(mine.held & lock_bit(lock)), "rule replay: lock re-entry");
                }
                mine.state = to;
                mine.held |= lock_bit(lock);
                label.kind = Label::Kind::Acq;
                label.lock = lock;
                break;
            }
            case Label::Kind::Rel: {
                auto [from, lock, to] = flat.release.at(r.index);
                internal_check(mine.state == from, "rule replay: state mismatch");
                internal_check(mine.held & lock_bit(lock), "rule replay: lock not held");
                if (reentrant()) {
                    mine.counts[lock] -= 1;
                    if (mine.counts[lock] == 0) mine.held &= ~lock_bit(lock);
                } else {
                    mine.held &= ~lock_bit(lock);
                }
                mine.state = to;
                label.kind = Label::Kind::Rel;
                label.lock = lock;
                break;
            }
        }
        comp.steps.push_back(Step{label, current});
    }
    return comp;
}

void System::check_valid(const Computation& comp) const {
    internal_check(comp.start == initial_config(), "computation does not start initially");
    SystemConfig current = comp.start;
    for (std::size_t i = 0; i < comp.steps.size(); ++i) {
        const auto& step = comp.steps[i];
        bool found = false;
        for (auto& [label, next] : successors(current)) {
            if (label == step.label && next == step.after) {
                found = true;
                break;
            }
        }
        internal_check(found, "stored step is not a valid transition");
        // Stack-height delta per thread: push +1, pop -1, otherwise 0.
        for (std::uint32_t t = 0; t < thread_count(); ++t) {
            std::ptrdiff_t delta = static_cast<std::ptrdiff_t>(step.after.threads[t].height()) -
                                   static_cast<std::ptrdiff_t>(current.threads[t].height());
            std::ptrdiff_t want = 0;
            if (t == step.label.thread && step.label.kind == Label::Kind::Push) want = 1;
            if (t == step.label.thread && step.label.kind == Label::Kind::Pop) want = -1;
            internal_check(delta == want, "stack height delta does not match label");
        }
        current = step.after;
        // Lock disjointness; in reentrant mode held must mirror counts.
        LockSet seen = 0;
        for (const auto& t : current.threads) {
            internal_check((seen & t.held) == 0, "two threads hold the same lock");
            seen |= t.held;
            if (reentrant()) {
                LockSet mirror = 0;
                for (LockIdx l = 0; l < t.counts.size(); ++l)
                    if (t.counts[l] > 0) mirror |= lock_bit(l);
                internal_check(mirror == t.held, "held mask out of sync with counts");
            }
        }
        internal_check(free_locks(current) == (all_locks_mask() & ~seen),
                       "free set is not the complement of holdings");
    }
}

std::string System::render_label(const Label& l) const {
    std::string word;
    switch (l.kind) {
        case Label::Kind::State: word = "state"; break;
        case Label::Kind::Push: word = "push"; break;
        case Label::Kind::Pop: word = "pop"; break;
        case Label::Kind::Acq: word = "acq(" + lock_names_[l.lock] + ")"; break;
        case Label::Kind::Rel: word = "rel(" + lock_names_[l.lock] + ")"; break;
    }
    return word + " " + std::to_string(l.thread);
}

std::string System::render_config(const SystemConfig& c) const {
    std::ostringstream os;
    for (std::size_t i = 0; i < c.threads.size(); ++i) {
        const auto& t = c.threads[i];
        if (i) os << " | ";
        os << threads_[i].state_names[t.state] << " [";
        for (std::size_t k = 0; k < t.stack.size(); ++k) {
            if (k) os << ' ';
            os << threads_[i].symbol_names[t.stack[k]];
        }
        os << "] {";
        bool first = true;
        for (LockIdx l = 0; l < lock_count(); ++l) {
            if (!(t.held & lock_bit(l))) continue;
            if (!first) os << ' ';
            first = false;
            os << lock_names_[l];
            if (reentrant() && t.counts[l] > 1) os << 'x' << t.counts[l];
        }
        os << '}';
    }
    return os.str();
}

bool is_call(const Label& l) { return l.kind == Label::Kind::Push; }
bool is_return(const Label& l) { return l.kind == Label::Kind::Pop; }

MatchMap match_calls_returns(const Computation& comp) {
    std::size_t n = comp.start.threads.size();
    MatchMap mm;
    mm.call_to_return.resize(n);
    mm.unmatched_calls.resize(n);
    // Heights force LIFO matching, so open calls form a stack per thread.
    std::vector<std::vector<std::size_t>> open(n);
    for (std::size_t pos = 0; pos < comp.steps.size(); ++pos) {
        const Label& l = comp.steps[pos].label;
        if (is_call(l)) open[l.thread].push_back(pos);
        if (is_return(l)) {
            internal_check(!open[l.thread].empty(), "pop with no open call");
            mm.call_to_return[l.thread].emplace(open[l.thread].back(), pos);
            open[l.thread].pop_back();
        }
    }
    for (std::size_t t = 0; t < n; ++t) {
        mm.unmatched_calls[t] = open[t];
        std::sort(mm.unmatched_calls[t].begin(), mm.unmatched_calls[t].end());
    }
    return mm;
}

}  // namespace lockreach
