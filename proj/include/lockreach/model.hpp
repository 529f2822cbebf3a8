#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lockreach {

// Static description of one thread: a pushdown system over a shared lock set.
// Identifiers are case-sensitive opaque tokens. The five transition families
// have distinct shapes and are kept in declaration order.

struct InternalRule {
    bool operator==(const InternalRule&) const = default;
    std::string from, to;
};
struct PushRule {
    bool operator==(const PushRule&) const = default;
    std::string from, to, symbol;
};
struct PopRule {
    bool operator==(const PopRule&) const = default;
    std::string from, symbol, to;
};
struct AcqRule {
    bool operator==(const AcqRule&) const = default;
    std::string from, to, lock;
};
struct RelRule {
    bool operator==(const RelRule&) const = default;
    std::string from, lock, to;
};

struct PdsSpec {
    std::string name;
    std::vector<std::string> states;
    std::vector<std::string> stack_alphabet;  // may be empty (non-recursive thread)
    std::string initial;
    std::vector<InternalRule> internal;
    std::vector<PushRule> push;
    std::vector<PopRule> pop;
    std::vector<AcqRule> acquire;
    std::vector<RelRule> release;
    bool operator==(const PdsSpec&) const = default;
};

struct MultiPdsSpec {
    std::string name;
    std::vector<std::string> locks;
    std::vector<PdsSpec> threads;  // n >= 1
    bool reentrant = false;
    bool operator==(const MultiPdsSpec&) const = default;
};

// Pairwise control-state reachability query: can thread_a be at state_a while
// thread_b is at state_b in some computation?
struct PairQuery {
    std::size_t thread_a = 0;
    std::size_t thread_b = 1;
    std::string state_a;
    std::string state_b;
    bool operator==(const PairQuery&) const = default;
};

struct Violation {
    std::string message;
};

// Well-formedness check. Violations are data, not failures; an empty report
// means every invariant holds and all downstream operations are defined.
std::vector<Violation> validate(const MultiPdsSpec& spec);

// Query validity against a spec (distinct threads, states declared).
std::vector<Violation> validate_query(const MultiPdsSpec& spec, const PairQuery& query);

}  // namespace lockreach
