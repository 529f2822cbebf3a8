#include <doctest.h>

#include "helpers.hpp"
#include "lockreach/counter_machine.hpp"
#include "lockreach/text_format.hpp"

using namespace lockreach;
using namespace lockreach::testing;

TEST_CASE("fig1 parses to two threads, two locks, one query") {
    auto parsed = parse_model(read_models_file("fig1.pds"));
    CHECK(parsed.spec.name == "fig1");
    CHECK(parsed.spec.locks == std::vector<std::string>{"l1", "l2"});
    REQUIRE(parsed.spec.threads.size() == 2);
    CHECK(parsed.spec.threads[0].name == "P0");
    CHECK(parsed.spec.threads[0].initial == "p0");
    CHECK(parsed.spec.threads[0].push.size() == 1);
    CHECK(parsed.spec.threads[0].release.size() == 4);
    REQUIRE(parsed.queries.size() == 1);
    CHECK(parsed.queries[0] == PairQuery{0, 1, "p1", "r1"});
}

TEST_CASE("empty file reports a missing system header") {
    CHECK_THROWS_WITH_AS(parse_model(""), doctest::Contains("missing system header"), ParseError);
    CHECK_THROWS_WITH_AS(parse_model("# only a comment\n"),
                         doctest::Contains("missing system header"), ParseError);
}

TEST_CASE("redeclaring a lock is a located error") {
    try {
        parse_model("system s\nlocks l1 l1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column == 10);
        CHECK(std::string(e.what()).find("declared twice") != std::string::npos);
    }
}

TEST_CASE("errors carry line and column") {
    try {
        parse_model("system s\nthread A\n  init a0\n  push a0 a1\nend\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 4);
    }
    CHECK_THROWS_AS(parse_model("system s\nquery A x B y\n"), ParseError);  // unknown thread
    CHECK_THROWS_AS(parse_model("system s\nthread A\n  init a0\n"), ParseError);  // no end
    CHECK_THROWS_AS(parse_model("system s\nbogus x\n"), ParseError);
    CHECK_THROWS_AS(parse_model("system s\nreentrant maybe\n"), ParseError);
}

TEST_CASE("round trip: every corpus model reparses identically") {
    for (const char* name : {"fig1.pds", "fig3.pds", "fig4.pds"}) {
        CAPTURE(name);
        auto first = parse_model(read_models_file(name));
        auto second = parse_model(render_model(first.spec, first.queries));
        CHECK(first.spec == second.spec);
        CHECK(first.queries == second.queries);
    }
}

TEST_CASE("round trip keeps states that no transition mentions") {
    auto m = parse_counter_machine(read_models_file("cm_halt5.cm"));
    auto red = compile_cm(m);
    // Thread 2's protocol state set includes the two unused step-0 states.
    auto text = render_model(red.spec, {red.target});
    auto back = parse_model(text);
    CHECK(back.spec == red.spec);
    REQUIRE(back.queries.size() == 1);
    CHECK(back.queries[0] == red.target);
}

TEST_CASE("counter machine round trip") {
    for (const char* name : {"cm_halt5.cm", "cm_nonzero.cm", "cm_incloop.cm"}) {
        CAPTURE(name);
        auto m = parse_counter_machine(read_models_file(name));
        CHECK(validate(m).empty());
        auto back = parse_counter_machine(render_counter_machine(m));
        CHECK(m == back);
    }
}

TEST_CASE("trace parse and render round trip") {
    System sys = load_system("fig1.pds");
    auto text = read_models_file("comp1.trace");
    auto labels = parse_trace(text, sys);
    REQUIRE(labels.size() == 10);
    CHECK(labels[1] == Label{Label::Kind::Acq, 0, 0});
    CHECK(labels[3] == Label{Label::Kind::Acq, 1, 0});
    auto again = parse_trace(render_trace(sys, labels), sys);
    CHECK(labels == again);
}

TEST_CASE("trace parser rejects unknown locks and bad thread indices") {
    System sys = load_system("fig1.pds");
    CHECK_THROWS_AS(parse_trace("acq(nope) 0\n", sys), ParseError);
    CHECK_THROWS_AS(parse_trace("push 2\n", sys), ParseError);
    CHECK_THROWS_AS(parse_trace("hop 0\n", sys), ParseError);
}

TEST_CASE("locks line is optional (lock-free systems parse)") {
    auto parsed = parse_model("system s\nthread A\n  init a0\n  internal a0 a0\nend\n");
    CHECK(parsed.spec.locks.empty());
    CHECK(validate(parsed.spec).empty());
}
