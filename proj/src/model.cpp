#include "lockreach/model.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace lockreach {

namespace {

using StringSet = std::unordered_set<std::string>;

void report(std::vector<Violation>& out, std::string msg) {
    out.push_back(Violation{std::move(msg)});
}

void check_duplicates(const std::vector<std::string>& names, const std::string& what,
                      std::vector<Violation>& out) {
    StringSet seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) report(out, what + " \"" + n + "\" declared more than once");
    }
}

struct ThreadSets {
    StringSet states;
    StringSet symbols;
};

void check_thread(const PdsSpec& t, std::size_t index, const StringSet& locks,
                  std::vector<Violation>& out) {
    const std::string where = "thread " + (t.name.empty() ? std::to_string(index) : t.name);
    check_duplicates(t.states, where + ": state", out);
    check_duplicates(t.stack_alphabet, where + ": stack symbol", out);

    StringSet states(t.states.begin(), t.states.end());
    StringSet symbols(t.stack_alphabet.begin(), t.stack_alphabet.end());

    auto need_state = [&](const std::string& q, const char* role) {
        if (!states.count(q))
            report(out, where + ": " + role + " names undeclared state \"" + q + "\"");
    };
    auto need_symbol = [&](const std::string& a, const char* role) {
        if (!symbols.count(a))
            report(out, where + ": " + role + " names undeclared stack symbol \"" + a + "\"");
    };
    auto need_lock = [&](const std::string& l, const char* role) {
        if (!locks.count(l))
            report(out, where + ": " + role + " names undeclared lock \"" + l + "\"");
    };

    if (t.initial.empty())
        report(out, where + ": no initial state");
    else
        need_state(t.initial, "initial declaration");

    for (const auto& r : t.internal) {
        need_state(r.from, "internal rule");
        need_state(r.to, "internal rule");
    }
    for (const auto& r : t.push) {
        need_state(r.from, "push rule");
        need_state(r.to, "push rule");
        need_symbol(r.symbol, "push rule");
    }
    for (const auto& r : t.pop) {
        need_state(r.from, "pop rule");
        need_state(r.to, "pop rule");
        need_symbol(r.symbol, "pop rule");
    }
    for (const auto& r : t.acquire) {
        need_state(r.from, "acq rule");
        need_state(r.to, "acq rule");
        need_lock(r.lock, "acq rule");
    }
    for (const auto& r : t.release) {
        need_state(r.from, "rel rule");
        need_state(r.to, "rel rule");
        need_lock(r.lock, "rel rule");
    }
}

}  // namespace

std::vector<Violation> validate(const MultiPdsSpec& spec) {
    std::vector<Violation> out;
    if (spec.threads.empty()) report(out, "system declares no threads");
    check_duplicates(spec.locks, "lock", out);
    StringSet locks(spec.locks.begin(), spec.locks.end());

    for (std::size_t i = 0; i < spec.threads.size(); ++i)
        check_thread(spec.threads[i], i, locks, out);

    // Cross-thread disjointness of state sets and stack alphabets. Collisions
    // are rejected rather than renamed so witness traces stay readable.
    std::unordered_map<std::string, std::size_t> state_owner;
    std::unordered_map<std::string, std::size_t> symbol_owner;
    for (std::size_t i = 0; i < spec.threads.size(); ++i) {
        const auto& t = spec.threads[i];
        auto tname = [&](std::size_t k) {
            const auto& n = spec.threads[k].name;
            return n.empty() ? std::to_string(k) : n;
        };
        for (const auto& q : t.states) {
            auto [it, fresh] = state_owner.emplace(q, i);
            if (!fresh && it->second != i)
                report(out, "state \"" + q + "\" declared by both thread " + tname(it->second) +
                                " and thread " + tname(i));
        }
        for (const auto& a : t.stack_alphabet) {
            auto [it, fresh] = symbol_owner.emplace(a, i);
            if (!fresh && it->second != i)
                report(out, "stack symbol \"" + a + "\" declared by both thread " +
                                tname(it->second) + " and thread " + tname(i));
        }
    }
    return out;
}

std::vector<Violation> validate_query(const MultiPdsSpec& spec, const PairQuery& query) {
    std::vector<Violation> out;
    if (query.thread_a == query.thread_b) report(out, "query names the same thread twice");
    auto check_side = [&](std::size_t idx, const std::string& q) {
        if (idx >= spec.threads.size()) {
            report(out, "query names thread index " + std::to_string(idx) + " out of range");
            return;
        }
        const auto& t = spec.threads[idx];
        if (std::find(t.states.begin(), t.states.end(), q) == t.states.end())
            report(out, "query state \"" + q + "\" is not a state of thread " +
                            (t.name.empty() ? std::to_string(idx) : t.name));
    };
    check_side(query.thread_a, query.state_a);
    check_side(query.thread_b, query.state_b);
    return out;
}

}  // namespace lockreach
