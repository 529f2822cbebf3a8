#include "helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

namespace lockreach::testing {

std::string models_path(const std::string& name) {
    return std::string(LOCKREACH_MODELS_DIR) + "/" + name;
}

std::string read_models_file(const std::string& name) {
    std::ifstream in(models_path(name), std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing corpus file ", name);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ParsedModel load_model(const std::string& name) {
    auto parsed = parse_model(read_models_file(name));
    auto violations = validate(parsed.spec);
    REQUIRE_MESSAGE(violations.empty(), "corpus model ", name, " fails validation");
    return parsed;
}

System load_system(const std::string& name) { return System::compile(load_model(name).spec); }

Computation load_trace(const System& sys, const std::string& name) {
    return sys.replay(parse_trace(read_models_file(name), sys));
}

std::vector<std::map<std::size_t, std::size_t>> match_by_heights(const Computation& comp) {
    const std::size_t n = comp.start.threads.size();
    auto height = [&](std::uint32_t t, std::size_t p) { return comp.config(p).threads[t].height(); };
    std::vector<std::map<std::size_t, std::size_t>> out(n);
    for (std::uint32_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < comp.steps.size(); ++j) {
            const Label& ret = comp.steps[j].label;
            if (ret.kind != Label::Kind::Pop || ret.thread != t) continue;
            std::vector<std::size_t> candidates;
            for (std::size_t l = 0; l < j; ++l) {
                const Label& call = comp.steps[l].label;
                if (call.kind != Label::Kind::Push || call.thread != t) continue;
                if (height(t, l) != height(t, j + 1)) continue;
                bool ok = true;
                for (std::size_t p = l + 1; p <= j && ok; ++p)
                    ok = height(t, l + 1) <= height(t, p);
                if (ok) candidates.push_back(l);
            }
            REQUIRE_MESSAGE(candidates.size() == 1, "pop at ", j, " must match exactly one call");
            out[t].emplace(candidates.front(), j);
        }
    }
    return out;
}

std::optional<BracketWitness> brute_force_witness(const Computation& comp) {
    REQUIRE(comp.start.threads.size() == 2);
    auto matches = match_by_heights(comp);
    const std::size_t m = comp.steps.size();
    std::optional<BracketWitness> best;
    std::map<std::size_t, std::size_t> l1_to_l3;  // sanity: fixed l1 fixes l3
    for (std::uint32_t i = 0; i < 2; ++i) {
        for (std::size_t l1 = 0; l1 < m; ++l1) {
            for (std::size_t l2 = l1 + 1; l2 < m; ++l2) {
                for (std::size_t l3 = l2 + 1; l3 < m; ++l3) {
                    auto pair = matches[i].find(l1);
                    if (pair == matches[i].end() || pair->second != l3) continue;
                    const Label& call2 = comp.steps[l2].label;
                    if (call2.kind != Label::Kind::Push || call2.thread != 1 - i) continue;
                    auto ret2 = matches[1 - i].find(l2);
                    if (ret2 != matches[1 - i].end() && ret2->second <= l3 + 1) continue;
                    auto [it, fresh] = l1_to_l3.emplace(l1, l3);
                    CHECK_MESSAGE(it->second == l3, "witnesses with one l1 differ in l3");
                    if (!best || std::pair(l1, l2) < std::pair(best->l1, best->l2))
                        best = BracketWitness{l1, l2, l3, i};
                }
            }
        }
    }
    return best;
}

namespace {

int pick(std::mt19937& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

MultiPdsSpec random_contextual_spec(std::mt19937& rng, const GenLimits& limits) {
    MultiPdsSpec spec;
    spec.name = "fuzz";
    for (int l = 0; l < limits.locks; ++l) spec.locks.push_back("k" + std::to_string(l));

    for (int t = 0; t < limits.threads; ++t) {
        PdsSpec th;
        th.name = "F" + std::to_string(t);
        auto st = [&](const std::string& s) { return "t" + std::to_string(t) + "_" + s; };
        int counter = 0;
        auto fresh = [&]() {
            th.states.push_back(st("s" + std::to_string(counter++)));
            return th.states.back();
        };
        for (int y = 0; y < limits.symbols; ++y)
            th.stack_alphabet.push_back(st("y" + std::to_string(y)));

        // Procedure skeletons first so bodies can call forward.
        struct Proc {
            std::string entry, exit;
        };
        std::vector<Proc> procs(limits.procs);
        for (auto& p : procs) {
            p.entry = fresh();
            p.exit = fresh();
        }
        std::string main_entry = fresh();
        th.initial = main_entry;

        auto emit_body = [&](int proc_index, const std::string& entry, const std::string& exit,
                             bool is_main) {
            std::string at = entry;
            std::vector<std::string> owned;  // locks acquired in this context
            for (int a = 0; a < limits.body_len; ++a) {
                int kind = pick(rng, 0, 3);
                if (kind == 0) {
                    std::string next = fresh();
                    th.internal.push_back({at, next});
                    at = next;
                } else if (kind == 1 && !spec.locks.empty()) {
                    std::string l = spec.locks[pick(rng, 0, limits.locks - 1)];
                    std::string next = fresh();
                    th.acquire.push_back({at, next, l});
                    owned.push_back(l);
                    at = next;
                } else if (kind == 2 && !owned.empty()) {
                    int o = pick(rng, 0, static_cast<int>(owned.size()) - 1);
                    std::string next = fresh();
                    th.release.push_back({at, owned[o], next});
                    owned.erase(owned.begin() + o);
                    at = next;
                } else if (!procs.empty()) {
                    int callee = limits.allow_recursion
                                     ? pick(rng, 0, limits.procs - 1)
                                     : pick(rng, std::min(proc_index + 1, limits.procs - 1),
                                            limits.procs - 1);
                    std::string sym = th.stack_alphabet[pick(rng, 0, limits.symbols - 1)];
                    std::string next = fresh();
                    th.push.push_back({at, procs[callee].entry, sym});
                    th.pop.push_back({procs[callee].exit, sym, next});
                    at = next;
                }
            }
            // Contextual cleanup: release everything acquired here, in random
            // order, before the exit.
            while (!owned.empty()) {
                int o = pick(rng, 0, static_cast<int>(owned.size()) - 1);
                std::string next = fresh();
                th.release.push_back({at, owned[o], next});
                owned.erase(owned.begin() + o);
                at = next;
            }
            th.internal.push_back({at, exit});
            (void)is_main;
        };

        for (int p = 0; p < limits.procs; ++p) emit_body(p, procs[p].entry, procs[p].exit, false);
        std::string main_exit = fresh();
        emit_body(limits.procs, main_entry, main_exit, true);
        spec.threads.push_back(std::move(th));
    }
    return spec;
}

MultiPdsSpec random_spec_soup(std::mt19937& rng, const SoupLimits& limits) {
    MultiPdsSpec spec;
    spec.name = "soup";
    for (int l = 0; l < limits.locks; ++l) spec.locks.push_back("k" + std::to_string(l));
    for (int t = 0; t < 2; ++t) {
        PdsSpec th;
        th.name = "S" + std::to_string(t);
        for (int s = 0; s < limits.states; ++s)
            th.states.push_back("t" + std::to_string(t) + "_q" + std::to_string(s));
        for (int y = 0; y < limits.symbols; ++y)
            th.stack_alphabet.push_back("t" + std::to_string(t) + "_y" + std::to_string(y));
        th.initial = th.states[0];
        auto q = [&]() { return th.states[pick(rng, 0, limits.states - 1)]; };
        auto y = [&]() { return th.stack_alphabet[pick(rng, 0, limits.symbols - 1)]; };
        auto l = [&]() { return spec.locks[pick(rng, 0, limits.locks - 1)]; };
        for (int i = pick(rng, 0, limits.rules_per_family); i > 0; --i)
            th.internal.push_back({q(), q()});
        for (int i = pick(rng, 0, limits.rules_per_family); i > 0; --i)
            th.push.push_back({q(), q(), y()});
        for (int i = pick(rng, 0, limits.rules_per_family); i > 0; --i)
            th.pop.push_back({q(), y(), q()});
        for (int i = pick(rng, 0, limits.rules_per_family); i > 0; --i)
            th.acquire.push_back({q(), q(), l()});
        for (int i = pick(rng, 0, limits.rules_per_family); i > 0; --i)
            th.release.push_back({q(), l(), q()});
        spec.threads.push_back(std::move(th));
    }
    return spec;
}

}  // namespace lockreach::testing
