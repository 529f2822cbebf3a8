#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "lockreach/errors.hpp"
#include "lockreach/explorer.hpp"
#include "lockreach/system.hpp"

using namespace lockreach;
using namespace lockreach::testing;

namespace {

System one_thread(PdsSpec t, std::vector<std::string> locks, bool reentrant = false) {
    MultiPdsSpec spec;
    spec.name = "unit";
    spec.locks = std::move(locks);
    spec.reentrant = reentrant;
    spec.threads.push_back(std::move(t));
    REQUIRE(validate(spec).empty());
    return System::compile(spec);
}

}  // namespace

TEST_CASE("acq moves the lock from free to held") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q", "q2"};
    t.initial = "q";
    t.acquire.push_back({"q", "q2", "l1"});
    System sys = one_thread(t, {"l1"});

    ThreadConfig cfg;  // (q, empty, no locks)
    auto succ = sys.thread_successors(0, sys.all_locks_mask(), cfg);
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].kind == Label::Kind::Acq);
    CHECK(succ[0].lock == 0);
    CHECK(succ[0].free_after == 0);
    CHECK(succ[0].next.state == 1);
    CHECK(succ[0].next.held == lock_bit(0));
    CHECK(succ[0].next.stack.empty());

    // The same configuration with the lock unavailable has no successor.
    CHECK(sys.thread_successors(0, 0, cfg).empty());
}

TEST_CASE("pop needs a nonempty stack with the right top") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q", "q2"};
    t.stack_alphabet = {"a"};
    t.initial = "q";
    t.pop.push_back({"q", "a", "q2"});
    System sys = one_thread(t, {});
    ThreadConfig cfg;
    CHECK(sys.thread_successors(0, 0, cfg).empty());
    cfg.stack = {0};
    auto succ = sys.thread_successors(0, 0, cfg);
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].kind == Label::Kind::Pop);
    CHECK(succ[0].next.stack.empty());
}

TEST_CASE("reentrant release decrements and frees only at one") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q", "q2"};
    t.initial = "q";
    t.release.push_back({"q", "l1", "q2"});
    System sys = one_thread(t, {"l1"}, true);

    ThreadConfig cfg;
    cfg.counts = {2};
    cfg.held = lock_bit(0);
    auto succ = sys.thread_successors(0, 0, cfg);
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].next.counts[0] == 1);
    CHECK(succ[0].next.held == lock_bit(0));  // still owned
    CHECK(succ[0].free_after == 0);           // not returned to free

    cfg.counts = {1};
    succ = sys.thread_successors(0, 0, cfg);
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].next.counts[0] == 0);
    CHECK(succ[0].next.held == 0);
    CHECK(succ[0].free_after == lock_bit(0));

    cfg.counts = {0};
    cfg.held = 0;
    CHECK(sys.thread_successors(0, 0, cfg).empty());
}

TEST_CASE("reentrant acq succeeds on an owned lock that is not free") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q", "q2"};
    t.initial = "q";
    t.acquire.push_back({"q", "q2", "l1"});
    System sys = one_thread(t, {"l1"}, true);
    ThreadConfig cfg;
    cfg.counts = {1};
    cfg.held = lock_bit(0);
    auto succ = sys.thread_successors(0, /*free=*/0, cfg);
    REQUIRE(succ.size() == 1);
    CHECK(succ[0].next.counts[0] == 2);
}

TEST_CASE("fig1 initial configuration has exactly the two calls as successors") {
    System sys = load_system("fig1.pds");
    auto succ = sys.successors(sys.initial_config());
    REQUIRE(succ.size() == 2);
    CHECK(succ[0].first == Label{Label::Kind::Push, 0, 0});
    CHECK(succ[1].first == Label{Label::Kind::Push, 0, 1});
}

TEST_CASE("a lock held by thread 0 blocks thread 1's acq") {
    MultiPdsSpec spec;
    spec.name = "block";
    spec.locks = {"l1"};
    PdsSpec a;
    a.name = "A";
    a.states = {"a0", "a1"};
    a.initial = "a0";
    a.acquire.push_back({"a0", "a1", "l1"});
    PdsSpec b;
    b.name = "B";
    b.states = {"b0", "b1"};
    b.initial = "b0";
    b.acquire.push_back({"b0", "b1", "l1"});
    spec.threads = {a, b};
    System sys = System::compile(spec);

    auto first = sys.successors(sys.initial_config());
    REQUIRE(first.size() == 2);  // either thread may take it
    const SystemConfig& thread0_took = first[0].second;
    auto then = sys.successors(thread0_took);
    CHECK(then.empty());  // thread 1 contributes nothing
}

TEST_CASE("successors preserve lock disjointness everywhere reachable (fig1)") {
    System sys = load_system("fig1.pds");
    bool complete = explore_configs(sys, Bounds{8, 100000, 16}, [&](const SystemConfig& c) {
        CHECK((c.threads[0].held & c.threads[1].held) == 0);
    });
    CHECK(complete);
}

TEST_CASE("matching on Comp1: calls at 0 and 2 match returns at 7 and 9") {
    System sys = load_system("fig1.pds");
    Computation comp = load_trace(sys, "comp1.trace");
    REQUIRE(comp.length() == 10);
    MatchMap mm = match_calls_returns(comp);
    CHECK(mm.return_of(0, 0) == 7);
    CHECK(mm.return_of(1, 2) == 9);
    CHECK(mm.unmatched_calls[0].empty());
    CHECK(mm.unmatched_calls[1].empty());

    auto oracle = match_by_heights(comp);
    CHECK(oracle[0] == mm.call_to_return[0]);
    CHECK(oracle[1] == mm.call_to_return[1]);
}

TEST_CASE("a lone push stays unmatched") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q", "q2"};
    t.stack_alphabet = {"a"};
    t.initial = "q";
    t.push.push_back({"q", "q2", "a"});
    System sys = one_thread(t, {});
    std::vector<Label> word = {Label{Label::Kind::Push, 0, 0}};
    Computation comp = sys.replay(word);
    MatchMap mm = match_calls_returns(comp);
    CHECK(mm.call_to_return[0].empty());
    CHECK(mm.unmatched_calls[0] == std::vector<std::size_t>{0});
}

TEST_CASE("nested pushes match LIFO") {
    PdsSpec t;
    t.name = "T";
    t.states = {"q0", "q1", "q2", "q3", "q4"};
    t.stack_alphabet = {"a", "b"};
    t.initial = "q0";
    t.push.push_back({"q0", "q1", "a"});
    t.push.push_back({"q1", "q2", "b"});
    t.pop.push_back({"q2", "b", "q3"});
    t.pop.push_back({"q3", "a", "q4"});
    System sys = one_thread(t, {});
    std::vector<Label> word = {
        Label{Label::Kind::Push, 0, 0},
        Label{Label::Kind::Push, 0, 0},
        Label{Label::Kind::Pop, 0, 0},
        Label{Label::Kind::Pop, 0, 0},
    };
    Computation comp = sys.replay(word);
    MatchMap mm = match_calls_returns(comp);
    CHECK(mm.return_of(0, 1) == 2);  // inner pair
    CHECK(mm.return_of(0, 0) == 3);  // outer pair
    auto oracle = match_by_heights(comp);
    CHECK(oracle[0] == mm.call_to_return[0]);
}

TEST_CASE("replay soundness on every short fig1 trace") {
    System sys = load_system("fig1.pds");
    std::size_t count = 0;
    enumerate_traces(sys, 8, [&](const Computation& comp) {
        auto rebuilt = sys.replay(comp.labels());
        CHECK(rebuilt.start == comp.start);
        REQUIRE(rebuilt.length() == comp.length());
        for (std::size_t i = 0; i < comp.length(); ++i)
            CHECK(rebuilt.steps[i].after == comp.steps[i].after);
        sys.check_valid(comp);
        ++count;
        return true;
    });
    CHECK(count > 100);
}

TEST_CASE("replay rejects a disabled label with its position") {
    System sys = load_system("fig1.pds");
    std::vector<Label> word = {Label{Label::Kind::Pop, 0, 0}};
    CHECK_THROWS_WITH_AS(sys.replay(word), doctest::Contains("step 0"), InputError);
}

TEST_CASE("plain and reentrant semantics coincide when no thread re-acquires") {
    // fig1 and fig4 never reach a state where a thread could take a lock it
    // already holds, so flipping the mode must not change the behavior.
    for (const char* name : {"fig1.pds", "fig4.pds"}) {
        CAPTURE(name);
        auto spec = load_model(name).spec;
        System plain = System::compile(spec);
        spec.reentrant = true;
        System reentrant = System::compile(spec);

        std::set<std::string> plain_set, reentrant_set;
        Bounds b{8, 20000, 4};
        explore_configs(plain, b, [&](const SystemConfig& c) {
            plain_set.insert(plain.render_config(c));
        });
        explore_configs(reentrant, b, [&](const SystemConfig& c) {
            reentrant_set.insert(reentrant.render_config(c));
        });
        CHECK(plain_set == reentrant_set);
    }
}
