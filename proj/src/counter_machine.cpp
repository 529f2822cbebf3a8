#include "lockreach/counter_machine.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "lockreach/errors.hpp"
#include "lockreach/system.hpp"

namespace lockreach {

namespace {

void report(std::vector<Violation>& out, std::string msg) {
    out.push_back(Violation{std::move(msg)});
}

struct CmConfigHash {
    std::size_t operator()(const CmConfig& c) const {
        std::size_t h = c.state;
        h = h * 0x9e3779b97f4a7c15ULL + c.counter[0];
        h = h * 0x9e3779b97f4a7c15ULL + c.counter[1];
        return h;
    }
};

}  // namespace

std::vector<Violation> validate(const CounterMachine& m) {
    std::vector<Violation> out;
    std::unordered_map<std::string, int> seen;
    for (const auto& q : m.states)
        if (++seen[q] == 2) report(out, "cm state \"" + q + "\" declared more than once");
    auto need = [&](const std::string& q, const char* role) {
        if (!seen.count(q)) report(out, std::string(role) + " names undeclared cm state \"" + q + "\"");
    };
    if (m.initial.empty())
        report(out, "cm has no initial state");
    else
        need(m.initial, "init declaration");
    if (m.final_state.empty())
        report(out, "cm has no final state");
    else
        need(m.final_state, "final declaration");
    for (const auto& r : m.state_moves) {
        need(r.from, "state rule");
        need(r.to, "state rule");
    }
    for (int i = 0; i < 2; ++i) {
        for (const auto& r : m.inc[i]) {
            need(r.from, "inc rule");
            need(r.to, "inc rule");
        }
        for (const auto& r : m.dec[i]) {
            need(r.from, "dec rule");
            need(r.to, "dec rule");
        }
        for (const auto& r : m.zero[i]) {
            need(r.from, "zero rule");
            need(r.to, "zero rule");
        }
    }
    return out;
}

CompiledCm::CompiledCm(const CounterMachine& m) : machine_(m) {
    if (!validate(m).empty())
        throw InternalError("CompiledCm built from a machine that fails validation");
    for (std::uint32_t i = 0; i < m.states.size(); ++i) index_.emplace(m.states[i], i);
    initial_ = index_.at(m.initial);
    final_ = index_.at(m.final_state);
    by_state_.resize(m.states.size());
    for (const auto& r : m.state_moves)
        by_state_[index_.at(r.from)].state_moves.push_back(index_.at(r.to));
    for (int i = 0; i < 2; ++i) {
        for (const auto& r : m.inc[i]) by_state_[index_.at(r.from)].inc[i].push_back(index_.at(r.to));
        for (const auto& r : m.dec[i]) by_state_[index_.at(r.from)].dec[i].push_back(index_.at(r.to));
        for (const auto& r : m.zero[i])
            by_state_[index_.at(r.from)].zero[i].push_back(index_.at(r.to));
    }
}

std::uint32_t CompiledCm::state_id(const std::string& name) const { return index_.at(name); }

std::vector<CmStep> CompiledCm::step(const CmConfig& c) const {
    std::vector<CmStep> out;
    const Moves& mv = by_state_[c.state];
    for (auto to : mv.state_moves) {
        CmConfig next = c;
        next.state = to;
        out.push_back(CmStep{CmKind::State, -1, next});
    }
    for (int i = 0; i < 2; ++i) {
        for (auto to : mv.inc[i]) {
            CmConfig next = c;
            next.state = to;
            next.counter[i] += 1;
            out.push_back(CmStep{CmKind::Inc, i, next});
        }
        for (auto to : mv.dec[i]) {
            if (c.counter[i] == 0) continue;
            CmConfig next = c;
            next.state = to;
            next.counter[i] -= 1;
            out.push_back(CmStep{CmKind::Dec, i, next});
        }
        for (auto to : mv.zero[i]) {
            if (c.counter[i] != 0) continue;
            CmConfig next = c;
            next.state = to;
            out.push_back(CmStep{CmKind::Zero, i, next});
        }
    }
    return out;
}

CmHaltResult CompiledCm::halts_bounded(std::size_t step_bound, std::uint64_t counter_bound) const {
    CmHaltResult res;
    std::unordered_map<CmConfig, std::uint32_t, CmConfigHash> visited;
    std::vector<CmConfig> configs;
    std::vector<std::uint32_t> parent;
    std::vector<CmStep> via;
    std::deque<std::uint32_t> queue;
    bool pruned = false;

    constexpr std::uint32_t kNone = ~std::uint32_t{0};
    auto intern = [&](const CmConfig& c, std::uint32_t from, CmStep step) {
        if (c.counter[0] > counter_bound || c.counter[1] > counter_bound) {
            pruned = true;
            return;
        }
        auto [it, fresh] = visited.emplace(c, static_cast<std::uint32_t>(configs.size()));
        if (!fresh) return;
        configs.push_back(c);
        parent.push_back(from);
        via.push_back(step);
        queue.push_back(it->second);
    };
    intern(CmConfig{initial_, {0, 0}}, kNone, CmStep{});

    std::optional<std::uint32_t> goal;
    bool stopped = false;
    while (!queue.empty()) {
        if (res.expanded >= step_bound) {
            stopped = true;
            break;
        }
        std::uint32_t id = queue.front();
        queue.pop_front();
        ++res.expanded;
        if (configs[id].state == final_) {
            goal = id;
            break;
        }
        for (const auto& s : step(configs[id])) intern(s.after, id, s);
    }

    if (goal) {
        CmRun run;
        std::vector<CmStep> steps;
        for (std::uint32_t at = *goal; parent[at] != kNone; at = parent[at]) steps.push_back(via[at]);
        std::reverse(steps.begin(), steps.end());
        run.start = CmConfig{initial_, {0, 0}};
        run.steps = std::move(steps);
        res.run = std::move(run);
        res.status = CmHaltResult::Status::Halts;
    } else {
        res.status = (pruned || stopped) ? CmHaltResult::Status::NotFoundTruncated
                                         : CmHaltResult::Status::NotFoundExhausted;
    }
    return res;
}

std::vector<CmStep> cm_step(const CompiledCm& m, const CmConfig& c) { return m.step(c); }

CmHaltResult cm_halts_bounded(const CounterMachine& m, std::size_t step_bound,
                              std::uint64_t counter_bound) {
    return CompiledCm(m).halts_bounded(step_bound, counter_bound);
}

namespace {

const std::array<std::string, 8> kReductionLocks = {"h", "h'", "r1", "r2", "l1", "l2", "t1", "t2"};

std::string lk_l(int i) { return i == 0 ? "l1" : "l2"; }
std::string lk_r(int i) { return i == 0 ? "r1" : "r2"; }
std::string lk_t(int i) { return i == 0 ? "t1" : "t2"; }

}  // namespace

ReductionOutput compile_cm(const CounterMachine& m) {
    {
        auto violations = validate(m);
        if (!violations.empty()) {
            std::ostringstream os;
            os << "counter machine is not well-formed:";
            for (const auto& v : violations) os << "\n  " << v.message;
            throw InputError(os.str());
        }
    }
    static const std::vector<std::string> kReserved = {"q0",   "q1",  "q2",  "q3",  "q4", "q'0",
                                                       "q'1",  "q'2", "q'3", "q'4", "q_*"};
    for (const auto& q : m.states)
        if (std::find(kReserved.begin(), kReserved.end(), q) != kReserved.end())
            throw InputError("cm state \"" + q + "\" collides with a reserved reduction name");

    CompiledCm cm(m);
    ReductionOutput out;
    out.spec.name = m.name.empty() ? "reduction" : m.name + "-reduction";
    out.spec.reentrant = true;
    out.spec.locks.assign(kReductionLocks.begin(), kReductionLocks.end());

    auto sim = [&](const std::string& q) { return "T1." + q; };
    auto test_state = [&](const std::string& q, int i, int j) {
        return "T1." + q + ".z" + std::to_string(i + 1) + "." + std::to_string(j);
    };
    auto proto_state = [&](int i, int j) {
        return "T2.z" + std::to_string(i + 1) + "." + std::to_string(j);
    };

    // Thread 0: five init states, one state per machine state, and the
    // five-step test chain for every zero-test target.
    PdsSpec t1;
    t1.name = "T1";
    for (int k = 0; k < 5; ++k) {
        t1.states.push_back("T1.q" + std::to_string(k));
        out.sim_roles.emplace(t1.states.back(),
                              ReductionOutput::SimRole{ReductionOutput::SimRole::Kind::Init,
                                                       0, k, 0});
    }
    for (const auto& q : m.states) {
        t1.states.push_back(sim(q));
        out.sim_roles.emplace(t1.states.back(),
                              ReductionOutput::SimRole{ReductionOutput::SimRole::Kind::Cm,
                                                       cm.state_id(q), 0, 0});
    }
    std::array<std::vector<std::string>, 2> test_targets;
    for (int i = 0; i < 2; ++i) {
        for (const auto& q : m.states) {
            bool is_target = false;
            for (const auto& r : m.zero[i]) is_target |= (r.to == q);
            if (!is_target) continue;
            test_targets[i].push_back(q);
            for (int j = 1; j <= 5; ++j) {
                t1.states.push_back(test_state(q, i, j));
                out.sim_roles.emplace(
                    t1.states.back(),
                    ReductionOutput::SimRole{ReductionOutput::SimRole::Kind::Test,
                                             cm.state_id(q), j, i});
            }
        }
    }
    t1.initial = "T1.q0";
    t1.acquire.push_back(AcqRule{"T1.q0", "T1.q1", "h'"});
    t1.acquire.push_back(AcqRule{"T1.q1", "T1.q2", "r1"});
    t1.acquire.push_back(AcqRule{"T1.q2", "T1.q3", "r2"});
    t1.acquire.push_back(AcqRule{"T1.q3", "T1.q4", "h"});
    t1.release.push_back(RelRule{"T1.q4", "h'", sim(m.initial)});
    for (const auto& r : m.state_moves) t1.internal.push_back(InternalRule{sim(r.from), sim(r.to)});
    for (int i = 0; i < 2; ++i) {
        for (const auto& r : m.inc[i]) t1.acquire.push_back(AcqRule{sim(r.from), sim(r.to), lk_l(i)});
        for (const auto& r : m.dec[i]) t1.release.push_back(RelRule{sim(r.from), lk_l(i), sim(r.to)});
        for (const auto& r : m.zero[i])
            t1.acquire.push_back(AcqRule{sim(r.from), test_state(r.to, i, 1), lk_t(i)});
        for (const auto& q : test_targets[i]) {
            t1.release.push_back(RelRule{test_state(q, i, 1), lk_r(i), test_state(q, i, 2)});
            t1.acquire.push_back(AcqRule{test_state(q, i, 2), test_state(q, i, 3), lk_l(i)});
            t1.release.push_back(RelRule{test_state(q, i, 3), lk_t(i), test_state(q, i, 4)});
            t1.acquire.push_back(AcqRule{test_state(q, i, 4), test_state(q, i, 5), lk_r(i)});
            t1.release.push_back(RelRule{test_state(q, i, 5), lk_l(i), sim(q)});
        }
    }

    // Thread 1: five init states, the ready state, and the full protocol
    // state set {0..5} x {counter 1, counter 2}; the step-0 states are
    // declared but never entered.
    PdsSpec t2;
    t2.name = "T2";
    for (int k = 0; k < 5; ++k) {
        t2.states.push_back("T2.q" + std::to_string(k));
        out.partner_roles.emplace(
            t2.states.back(),
            ReductionOutput::PartnerRole{ReductionOutput::PartnerRole::Kind::Init, k, 0});
    }
    t2.states.push_back("T2.ready");
    out.partner_roles.emplace(
        "T2.ready", ReductionOutput::PartnerRole{ReductionOutput::PartnerRole::Kind::Ready, 0, 0});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j <= 5; ++j) {
            t2.states.push_back(proto_state(i, j));
            out.partner_roles.emplace(
                t2.states.back(),
                ReductionOutput::PartnerRole{ReductionOutput::PartnerRole::Kind::Proto, j, i});
        }
    t2.initial = "T2.q0";
    t2.acquire.push_back(AcqRule{"T2.q0", "T2.q1", "h"});
    t2.acquire.push_back(AcqRule{"T2.q1", "T2.q2", "t1"});
    t2.acquire.push_back(AcqRule{"T2.q2", "T2.q3", "t2"});
    t2.release.push_back(RelRule{"T2.q3", "h", "T2.q4"});
    t2.acquire.push_back(AcqRule{"T2.q4", "T2.ready", "h'"});
    for (int i = 0; i < 2; ++i) {
        t2.acquire.push_back(AcqRule{"T2.ready", proto_state(i, 1), lk_l(i)});
        t2.release.push_back(RelRule{proto_state(i, 1), lk_t(i), proto_state(i, 2)});
        t2.acquire.push_back(AcqRule{proto_state(i, 2), proto_state(i, 3), lk_r(i)});
        t2.release.push_back(RelRule{proto_state(i, 3), lk_l(i), proto_state(i, 4)});
        t2.acquire.push_back(AcqRule{proto_state(i, 4), proto_state(i, 5), lk_t(i)});
        t2.release.push_back(RelRule{proto_state(i, 5), lk_r(i), "T2.ready"});
    }

    out.spec.threads.push_back(std::move(t1));
    out.spec.threads.push_back(std::move(t2));
    out.target = PairQuery{0, 1, sim(m.final_state), "T2.ready"};

    auto violations = validate(out.spec);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "compiled system is not well-formed (exotic state names?):";
        for (const auto& v : violations) os << "\n  " << v.message;
        throw InputError(os.str());
    }
    return out;
}

std::optional<CmRun> project_cm_run(const ReductionOutput& red, const System& sys,
                                    const Computation& comp) {
    using Kind = ReductionOutput::SimRole::Kind;
    const auto l1 = *sys.lock_id("l1");
    const auto l2 = *sys.lock_id("l2");
    const auto& t0 = sys.thread(0);

    auto role_of = [&](StateId s) -> const ReductionOutput::SimRole* {
        auto it = red.sim_roles.find(t0.state_names[s]);
        return it == red.sim_roles.end() ? nullptr : &it->second;
    };
    auto counters = [&](const SystemConfig& c) {
        return std::array<std::uint64_t, 2>{c.threads[0].counts[l1], c.threads[0].counts[l2]};
    };

    CmRun run;
    bool started = false;
    for (std::size_t pos = 0; pos < comp.steps.size(); ++pos) {
        const auto& step = comp.steps[pos];
        if (step.label.thread != 0) continue;
        const SystemConfig& before = comp.config(pos);
        const auto* from = role_of(before.threads[0].state);
        const auto* to = role_of(step.after.threads[0].state);
        if (!from || !to) return std::nullopt;

        if (from->kind == Kind::Init && to->kind == Kind::Cm) {
            // Init prefix completed; the machine starts at (initial, 0, 0).
            auto cs = counters(step.after);
            if (cs[0] != 0 || cs[1] != 0) return std::nullopt;
            run.start = CmConfig{to->cm_state, {0, 0}};
            started = true;
            continue;
        }
        if (!started || from->kind == Kind::Init) continue;

        auto emit = [&](CmKind kind, int counter) {
            auto cs = counters(step.after);
            run.steps.push_back(CmStep{kind, counter, CmConfig{to->cm_state, {cs[0], cs[1]}}});
        };
        if (from->kind == Kind::Cm && to->kind == Kind::Cm) {
            switch (step.label.kind) {
                case Label::Kind::State: emit(CmKind::State, -1); break;
                case Label::Kind::Acq:
                    emit(CmKind::Inc, step.label.lock == l1 ? 0 : 1);
                    break;
                case Label::Kind::Rel:
                    emit(CmKind::Dec, step.label.lock == l1 ? 0 : 1);
                    break;
                default: return std::nullopt;
            }
        } else if (from->kind == Kind::Test && from->step == 5 && to->kind == Kind::Cm) {
            // Zero-test completion; a faithful simulation requires the tested
            // counter to be zero here.
            auto cs = counters(step.after);
            if (cs[from->counter] != 0) return std::nullopt;
            emit(CmKind::Zero, from->counter);
        }
    }
    if (!started) return std::nullopt;
    return run;
}

namespace {

bool replay_cm_run(const CompiledCm& cm, const CmRun& run) {
    CmConfig current = run.start;
    if (current.state != cm.initial() || current.counter[0] != 0 || current.counter[1] != 0)
        return false;
    for (const auto& s : run.steps) {
        bool ok = false;
        for (const auto& succ : cm.step(current))
            if (succ.kind == s.kind && succ.counter == s.counter && succ.after == s.after) {
                ok = true;
                break;
            }
        if (!ok) return false;
        current = s.after;
    }
    return current.state == cm.final_state();
}

}  // namespace

ReductionReport verify_reduction(const CounterMachine& m, const Bounds& pds_bounds,
                                 std::size_t cm_step_bound, std::uint64_t cm_counter_bound) {
    ReductionReport rep;
    CompiledCm cm(m);
    rep.cm = cm.halts_bounded(cm_step_bound, cm_counter_bound);

    ReductionOutput red = compile_cm(m);
    System sys = System::compile(red.spec);
    rep.pds = bounded_reach(sys, red.target, pds_bounds);

    std::ostringstream detail;
    if (rep.pds.found()) {
        rep.projected = project_cm_run(red, sys, *rep.pds.witness);
        rep.projection_valid = rep.projected && replay_cm_run(cm, *rep.projected);
        detail << "pds witness length " << rep.pds.witness->length();
        if (rep.projected) detail << ", projected machine run of " << rep.projected->steps.size()
                                  << " steps";
    }
    if (rep.cm.halts()) detail << (detail.str().empty() ? "" : "; ") << "machine halts in "
                               << rep.cm.run->steps.size() << " steps";

    if (rep.cm.halts() && rep.pds.found())
        rep.agree = rep.projection_valid;
    else if (rep.cm.halts() && !rep.pds.found())
        rep.agree = false;  // halting must be witnessed by the compiled system
    else if (!rep.cm.halts() && rep.pds.found())
        rep.agree = rep.projection_valid;  // the witness recovers a halting run
    else
        rep.agree = true;  // neither side positive at these bounds
    rep.detail = detail.str();
    return rep;
}

}  // namespace lockreach
