#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "lockreach/counter_machine.hpp"
#include "lockreach/discipline.hpp"
#include "lockreach/errors.hpp"
#include "lockreach/explorer.hpp"

using namespace lockreach;
using namespace lockreach::testing;

namespace {

CounterMachine load_cm(const std::string& name) {
    auto m = parse_counter_machine(read_models_file(name));
    REQUIRE(validate(m).empty());
    return m;
}

// The configuration right after both init prefixes: thread 0 holds h, r1, r2
// and sits at the machine's initial state; thread 1 holds h', t1, t2 at the
// ready state.
SystemConfig post_init_config(const System& sys, const ReductionOutput& red,
                              const CounterMachine& m) {
    SystemConfig c = sys.initial_config();
    c.threads[0].state = *sys.thread(0).state_id(red.sim_state_name(m.initial));
    c.threads[1].state = *sys.thread(1).state_id("T2.ready");
    auto hold = [&](std::uint32_t t, const std::string& lock) {
        LockIdx l = *sys.lock_id(lock);
        c.threads[t].counts[l] = 1;
        c.threads[t].held |= lock_bit(l);
    };
    hold(0, "h");
    hold(0, "r1");
    hold(0, "r2");
    hold(1, "h'");
    hold(1, "t1");
    hold(1, "t2");
    return c;
}

}  // namespace

TEST_CASE("cm_step semantics: zero test, blocked decrement, increment") {
    CounterMachine m;
    m.name = "steps";
    m.states = {"q", "q2"};
    m.initial = "q";
    m.final_state = "q2";
    m.zero[0].push_back({"q", "q2"});
    m.dec[0].push_back({"q", "q2"});
    m.inc[1].push_back({"q", "q2"});
    CompiledCm cm(m);

    auto at_zero = cm.step(CmConfig{0, {0, 0}});
    REQUIRE(at_zero.size() == 2);  // zero1 and inc2; dec1 blocked
    bool zero_ok = false, inc_ok = false;
    for (const auto& s : at_zero) {
        if (s.kind == CmKind::Zero) zero_ok = (s.counter == 0 && s.after == CmConfig{1, {0, 0}});
        if (s.kind == CmKind::Inc) inc_ok = (s.counter == 1 && s.after == CmConfig{1, {0, 1}});
    }
    CHECK(zero_ok);
    CHECK(inc_ok);

    auto at_five = cm.step(CmConfig{0, {0, 5}});
    bool saw_dec = false, saw_zero = false;
    for (const auto& s : at_five) {
        saw_dec |= (s.kind == CmKind::Dec);
        saw_zero |= (s.kind == CmKind::Zero && s.counter == 0);
    }
    CHECK(saw_zero);  // counter 1 still zero
    CHECK(!saw_dec);  // counter 1 cannot decrement

    auto dec_ok = cm.step(CmConfig{0, {3, 0}});
    bool found = false;
    for (const auto& s : dec_ok)
        if (s.kind == CmKind::Dec) {
            found = true;
            CHECK(s.after == CmConfig{1, {2, 0}});
        }
    CHECK(found);
}

TEST_CASE("bounded halting: one-step machine, five-step machine, growing loop") {
    CounterMachine one;
    one.name = "one";
    one.states = {"s", "f"};
    one.initial = "s";
    one.final_state = "f";
    one.state_moves.push_back({"s", "f"});
    auto r1 = cm_halts_bounded(one, 1000, 64);
    REQUIRE(r1.halts());
    CHECK(r1.run->steps.size() == 1);

    auto r5 = cm_halts_bounded(load_cm("cm_halt5.cm"), 1000, 64);
    REQUIRE(r5.halts());
    CHECK(r5.run->steps.size() == 5);

    auto loop = cm_halts_bounded(load_cm("cm_incloop.cm"), 1000, 64);
    CHECK(loop.status == CmHaltResult::Status::NotFoundTruncated);

    CounterMachine empty;
    empty.name = "empty";
    empty.states = {"s", "f"};
    empty.initial = "s";
    empty.final_state = "f";
    auto re = cm_halts_bounded(empty, 1000, 64);
    CHECK(re.status == CmHaltResult::Status::NotFoundExhausted);
}

TEST_CASE("compiled state counts match the construction") {
    CounterMachine m;
    m.name = "three";
    m.states = {"x", "y", "z"};
    m.initial = "x";
    m.final_state = "z";
    m.state_moves.push_back({"x", "y"});
    m.inc[0].push_back({"y", "z"});
    auto red = compile_cm(m);
    CHECK(red.spec.reentrant);
    CHECK(red.spec.locks.size() == 8);
    CHECK(red.spec.threads[0].states.size() == 3 + 5);       // no zero tests: no test states
    CHECK(red.spec.threads[0].stack_alphabet.empty());
    CHECK(red.spec.threads[1].states.size() == 5 + 1 + 12);  // full protocol state set
    CHECK(red.spec.threads[1].stack_alphabet.empty());
    CHECK(validate(red.spec).empty());

    // One zero test adds five test states for its target.
    CounterMachine z = m;
    z.zero[1].push_back({"y", "z"});
    auto red2 = compile_cm(z);
    CHECK(red2.spec.threads[0].states.size() == 3 + 5 + 5);
    CHECK(red2.spec.threads[1].states.size() == 18);
}

TEST_CASE("reserved state names are rejected") {
    CounterMachine m;
    m.name = "clash";
    m.states = {"q0", "f"};
    m.initial = "q0";
    m.final_state = "f";
    CHECK_THROWS_WITH_AS(compile_cm(m), doctest::Contains("reserved"), InputError);
}

TEST_CASE("halting machine: the compiled pair is found within 40 steps") {
    auto red = compile_cm(load_cm("cm_halt5.cm"));
    System sys = System::compile(red.spec);
    Bounds b;
    b.max_steps = 200000;
    auto res = bounded_reach(sys, red.target, b);
    REQUIRE(res.found());
    CHECK(res.witness->length() <= 40);
    sys.check_valid(*res.witness);
}

TEST_CASE("growing machine: not found, truncated frontier") {
    auto red = compile_cm(load_cm("cm_incloop.cm"));
    System sys = System::compile(red.spec);
    Bounds b;
    b.max_steps = 200;
    auto res = bounded_reach(sys, red.target, b);
    CHECK(res.status == ReachResult::Status::NotFoundTruncated);
}

TEST_CASE("verify_reduction: positive machine agrees and projects its exact run") {
    auto rep = verify_reduction(load_cm("cm_halt5.cm"), Bounds{}, 100000, 64);
    CHECK(rep.cm.halts());
    CHECK(rep.pds.found());
    CHECK(rep.agree);
    REQUIRE(rep.projected.has_value());
    CHECK(rep.projection_valid);
    const auto& run = *rep.projected;
    REQUIRE(run.steps.size() == 5);
    CmKind kinds[5] = {CmKind::Inc, CmKind::Inc, CmKind::Dec, CmKind::Dec, CmKind::Zero};
    std::uint64_t c1[5] = {1, 2, 1, 0, 0};
    for (int i = 0; i < 5; ++i) {
        CHECK(run.steps[i].kind == kinds[i]);
        CHECK(run.steps[i].counter == 0);
        CHECK(run.steps[i].after.counter[0] == c1[i]);
        CHECK(run.steps[i].after.counter[1] == 0);
    }
}

TEST_CASE("nonzero-counter zero test: neither side positive, handshake blocked") {
    auto m = load_cm("cm_nonzero.cm");
    auto rep = verify_reduction(m, Bounds{}, 100000, 64);
    CHECK(!rep.cm.halts());
    CHECK(!rep.pds.found());
    CHECK(rep.agree);

    // The partner may run a solo handshake if the simulator never starts
    // (then the simulator is parked at its first init state forever). But in
    // every branch where the simulator finished its init, the handshake
    // never passes acq(r1), and while the counter is nonzero even the
    // opening acq(l1) is disabled.
    auto red = compile_cm(m);
    System sys = System::compile(red.spec);
    const StateId ready = *sys.thread(1).state_id("T2.ready");
    const StateId z13 = *sys.thread(1).state_id("T2.z1.3");
    const StateId z14 = *sys.thread(1).state_id("T2.z1.4");
    const StateId z15 = *sys.thread(1).state_id("T2.z1.5");
    const LockIdx l1 = *sys.lock_id("l1");
    auto sim_started = [&](const SystemConfig& c) {
        auto role = red.sim_roles.at(sys.thread(0).state_names[c.threads[0].state]);
        return role.kind != ReductionOutput::SimRole::Kind::Init;
    };
    bool complete = explore_configs(sys, Bounds{}, [&](const SystemConfig& c) {
        if (sim_started(c)) {
            CHECK(c.threads[1].state != z13);
            CHECK(c.threads[1].state != z14);
            CHECK(c.threads[1].state != z15);
        }
        if (c.threads[1].state == ready && c.threads[0].counts[l1] > 0) {
            for (auto& [label, next] : sys.successors(c))
                CHECK(!(label.thread == 1 && label.kind == Label::Kind::Acq && label.lock == l1));
        }
    });
    CHECK(complete);
}

TEST_CASE("empty machine: neither side positive, machine frontier exhausted") {
    CounterMachine m;
    m.name = "empty";
    m.states = {"s", "f"};
    m.initial = "s";
    m.final_state = "f";
    auto rep = verify_reduction(m, Bounds{}, 1000, 16);
    CHECK(rep.cm.status == CmHaltResult::Status::NotFoundExhausted);
    CHECK(!rep.pds.found());
    CHECK(rep.agree);
}

TEST_CASE("after both init prefixes the holdings are exactly as constructed") {
    auto m = load_cm("cm_halt5.cm");
    auto red = compile_cm(m);
    System sys = System::compile(red.spec);
    const LockIdx h = *sys.lock_id("h"), h2 = *sys.lock_id("h'");
    const LockIdx r1 = *sys.lock_id("r1"), r2 = *sys.lock_id("r2");
    const LockIdx t1 = *sys.lock_id("t1"), t2 = *sys.lock_id("t2");
    const StateId sim_start = *sys.thread(0).state_id(red.sim_state_name(m.initial));
    const StateId ready = *sys.thread(1).state_id("T2.ready");

    std::size_t init0_seen = 0, init1_seen = 0;
    explore_configs(sys, Bounds{}, [&](const SystemConfig& c) {
        // Reentrant lock ownership: no lock is owned by both threads.
        CHECK((c.threads[0].held & c.threads[1].held) == 0);
        for (auto& [label, next] : sys.successors(c)) {
            if (label.thread == 0 && label.kind == Label::Kind::Rel && label.lock == h2 &&
                next.threads[0].state == sim_start) {
                ++init0_seen;
                CHECK(next.threads[0].held == (lock_bit(h) | lock_bit(r1) | lock_bit(r2)));
            }
            if (label.thread == 1 && label.kind == Label::Kind::Acq && label.lock == h2 &&
                next.threads[1].state == ready) {
                ++init1_seen;
                CHECK(next.threads[1].held == (lock_bit(h2) | lock_bit(t1) | lock_bit(t2)));
            }
        }
    });
    CHECK(init0_seen > 0);
    CHECK(init1_seen > 0);
}

TEST_CASE("contextual reentrant locking holds on every explored compiled trace") {
    auto red = compile_cm(load_cm("cm_halt5.cm"));
    System sys = System::compile(red.spec);
    std::size_t seen = 0;
    enumerate_traces(sys, 12, [&](const Computation& c) {
        CHECK(check_contextual_trace(sys, c).empty());
        return ++seen < 5000;
    });
    CHECK(seen > 100);
}

TEST_CASE("the zero-test handshake admits exactly one successful interleaving") {
    CounterMachine m;
    m.name = "onezero";
    m.states = {"qs", "qf"};
    m.initial = "qs";
    m.final_state = "qf";
    m.zero[0].push_back({"qs", "qf"});
    auto red = compile_cm(m);
    System sys = System::compile(red.spec);
    SystemConfig start = post_init_config(sys, red, m);
    const StateId goal0 = *sys.thread(0).state_id("T1.qf");
    const StateId goal1 = *sys.thread(1).state_id("T2.ready");

    // Depth-first over all paths of length <= 14 from the handshake start.
    std::vector<std::vector<Label>> hits;
    std::vector<Label> path;
    std::function<void(const SystemConfig&)> dfs = [&](const SystemConfig& c) {
        if (c.threads[0].state == goal0 && c.threads[1].state == goal1) {
            hits.push_back(path);
            return;
        }
        if (path.size() >= 14) return;
        for (auto& [label, next] : sys.successors(c)) {
            path.push_back(label);
            dfs(next);
            path.pop_back();
        }
    };
    dfs(start);

    REQUIRE(hits.size() == 1);
    const auto& labels = hits[0];
    CHECK(labels.size() == 12);
    auto render_thread = [&](std::uint32_t t) {
        std::string s;
        for (const auto& l : labels)
            if (l.thread == t) s += sys.render_label(Label{l.kind, l.lock, t}) + ";";
        return s;
    };
    CHECK(render_thread(0) ==
          "acq(t1) 0;rel(r1) 0;acq(l1) 0;rel(t1) 0;acq(r1) 0;rel(l1) 0;");
    CHECK(render_thread(1) ==
          "acq(l1) 1;rel(t1) 1;acq(r1) 1;rel(l1) 1;acq(t1) 1;rel(r1) 1;");

    // Replay to the end: thread 0 holds r1 again, thread 1 holds t1 again,
    // and nobody holds l1.
    SystemConfig at = start;
    for (const auto& l : labels) {
        bool stepped = false;
        for (auto& [label, next] : sys.successors(at))
            if (label == l) {
                at = next;
                stepped = true;
                break;
            }
        REQUIRE(stepped);
    }
    const LockIdx l1 = *sys.lock_id("l1");
    CHECK(at.threads[0].held == start.threads[0].held);
    CHECK(at.threads[1].held == start.threads[1].held);
    CHECK(at.threads[0].counts[l1] == 0);
    CHECK(at.threads[1].counts[l1] == 0);
}
