#include "lockreach/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <memory>
#include <iostream>
#include <sstream>

#include "lockreach/counter_machine.hpp"
#include "lockreach/discipline.hpp"
#include "lockreach/errors.hpp"
#include "lockreach/explorer.hpp"
#include "lockreach/reach.hpp"
#include "lockreach/text_format.hpp"

namespace lockreach {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Options {
    Bounds bounds;
    std::string witness_mode = "labels";  // full | labels | none
    bool no_timing = false;
};

ParsedModel load_model(const std::string& path) {
    auto parsed = parse_model(slurp(path));
    auto violations = validate(parsed.spec);
    if (!violations.empty()) {
        std::ostringstream os;
        os << path << ": model is not well-formed:";
        for (const auto& v : violations) os << "\n  " << v.message;
        throw InputError(os.str());
    }
    return parsed;
}

void print_witness(std::ostream& out, const System& sys, const Computation& comp,
                   const Options& opt) {
    if (opt.witness_mode == "none") return;
    out << "witness:\n";
    for (const auto& step : comp.steps) {
        out << "  " << sys.render_label(step.label) << "\n";
        if (opt.witness_mode == "full") out << "  config: " << sys.render_config(step.after) << "\n";
    }
}

void print_labels(std::ostream& out, const System& sys, const std::vector<Label>& labels) {
    out << "witness:\n";
    for (const auto& l : labels) out << "  " << sys.render_label(l) << "\n";
}

const std::vector<PairQuery>& require_queries(const ParsedModel& model, const std::string& path) {
    if (model.queries.empty()) throw InputError(path + ": model file declares no query");
    return model.queries;
}

void print_query(std::ostream& out, const MultiPdsSpec& spec, const PairQuery& q) {
    out << "query " << spec.threads[q.thread_a].name << ' ' << q.state_a << ' '
        << spec.threads[q.thread_b].name << ' ' << q.state_b << "\n";
}

void check_query(const MultiPdsSpec& spec, const PairQuery& q) {
    auto violations = validate_query(spec, q);
    if (!violations.empty()) throw InputError(violations.front().message);
}

int cmd_check(const std::string& model_path, const Options& opt, std::ostream& out) {
    auto model = load_model(model_path);
    out << "command: check\nmodel: " << model.spec.name << "\n";
    System sys = System::compile(model.spec);
    for (std::size_t t = 0; t < sys.thread_count(); ++t) {
        auto res = check_contextual_static(sys, t);
        if (res.holds) {
            out << "thread " << sys.thread(t).name << ": contextual locking holds\n";
        } else {
            out << "thread " << sys.thread(t).name << ": violated (" << res.offense << ")\n";
            MultiPdsSpec single = singleton_spec(model.spec, t);
            System single_sys = System::compile(single);
            if (opt.witness_mode != "none") print_labels(out, single_sys, res.witness);
        }
    }
    return 0;
}

int cmd_reach(const std::string& model_path, const Options& opt, std::ostream& out) {
    auto model = load_model(model_path);
    out << "command: reach\nmodel: " << model.spec.name << "\n";
    System sys = System::compile(model.spec);
    // For a two-thread model one saturation serves every query in the file.
    std::unique_ptr<PairwiseDecider> decider;
    for (const auto& q : require_queries(model, model_path)) {
        check_query(model.spec, q);
        print_query(out, model.spec, q);
        ReachDecision dec;
        if (model.spec.threads.size() == 2 && !model.spec.reentrant) {
            if (!decider) decider = std::make_unique<PairwiseDecider>(model.spec);
            dec = decider->decide(q);
        } else {
            dec = pairwise_reach(model.spec, q);
        }
        out << "verdict: " << (dec.reachable ? "reachable" : "unreachable") << "\n";
        if (dec.witness) print_witness(out, sys, *dec.witness, opt);
        out << "stats: product-states " << dec.product_states << " bound "
            << dec.product_state_bound << " automaton-transitions " << dec.automaton_transitions
            << "\n";
    }
    return 0;
}

int cmd_oracle(const std::string& model_path, const Options& opt, std::ostream& out) {
    auto model = load_model(model_path);
    out << "command: oracle\nmodel: " << model.spec.name << "\n";
    System sys = System::compile(model.spec);
    for (const auto& q : require_queries(model, model_path)) {
        check_query(model.spec, q);
        print_query(out, model.spec, q);
        auto res = bounded_reach(sys, q, opt.bounds);
        switch (res.status) {
            case ReachResult::Status::Found:
                out << "verdict: found\nwitness-length: " << res.witness->length() << "\n";
                print_witness(out, sys, *res.witness, opt);
                break;
            case ReachResult::Status::NotFoundExhausted:
                out << "verdict: not-found-at-bound (frontier exhausted)\n";
                break;
            case ReachResult::Status::NotFoundTruncated:
                out << "verdict: not-found-at-bound (truncated)\n";
                break;
        }
        out << "stats: expanded " << res.expanded << " visited " << res.visited << "\n";
    }
    return 0;
}

int cmd_classify(const std::string& model_path, const std::string& trace_path, const Options&,
                 std::ostream& out) {
    auto model = load_model(model_path);
    System sys = System::compile(model.spec);
    out << "command: classify\nmodel: " << model.spec.name << "\n";
    auto labels = parse_trace(slurp(trace_path), sys);
    Computation comp = sys.replay(labels);
    auto violations = check_contextual_trace(sys, comp);
    if (violations.empty()) {
        out << "contextual: ok\n";
    } else {
        for (const auto& v : violations) out << "contextual: violation " << v.describe(sys) << "\n";
    }
    if (comp.start.threads.size() != 2) {
        out << "verdict: bracketing undefined (needs exactly two threads)\n";
        return 0;
    }
    auto w = classify(comp);
    if (!w) {
        out << "verdict: well-bracketed\n";
    } else {
        out << "verdict: non-well-bracketed\n";
        out << "witness-triple: l1=" << w->l1 << " l2=" << w->l2 << " l3=" << w->l3
            << " thread=" << w->thread << "\n";
    }
    return 0;
}

int cmd_reorder(const std::string& model_path, const std::string& trace_path, const Options& opt,
                std::ostream& out) {
    auto model = load_model(model_path);
    System sys = System::compile(model.spec);
    out << "command: reorder\nmodel: " << model.spec.name << "\n";
    auto labels = parse_trace(slurp(trace_path), sys);
    Computation comp = sys.replay(labels);
    if (!classify(comp)) {
        out << "verdict: already-well-bracketed\n";
        print_witness(out, sys, comp, opt);
        return 0;
    }
    std::size_t rounds = 0;
    Computation current = comp;
    while (classify(current)) {
        current = reorder_once(sys, current);
        ++rounds;
    }
    out << "verdict: reordered (" << rounds << " round" << (rounds == 1 ? "" : "s") << ")\n";
    print_witness(out, sys, current, opt);
    return 0;
}

int cmd_reduce_cm(const std::string& cm_path, const Options&, std::ostream& out) {
    auto m = parse_counter_machine(slurp(cm_path));
    auto violations = validate(m);
    if (!violations.empty()) {
        std::ostringstream os;
        os << cm_path << ": counter machine is not well-formed:";
        for (const auto& v : violations) os << "\n  " << v.message;
        throw InputError(os.str());
    }
    auto red = compile_cm(m);
    out << render_model(red.spec, {red.target});
    return 0;
}

int cmd_verify_cm(const std::string& cm_path, const Options& opt, std::ostream& out) {
    auto m = parse_counter_machine(slurp(cm_path));
    auto violations = validate(m);
    if (!violations.empty()) {
        std::ostringstream os;
        os << cm_path << ": counter machine is not well-formed:";
        for (const auto& v : violations) os << "\n  " << v.message;
        throw InputError(os.str());
    }
    out << "command: verify-cm\ncm: " << m.name << "\n";
    auto rep = verify_reduction(m, opt.bounds, opt.bounds.max_steps, opt.bounds.max_count);
    switch (rep.cm.status) {
        case CmHaltResult::Status::Halts:
            out << "cm-side: halts (" << rep.cm.run->steps.size() << " steps)\n";
            break;
        case CmHaltResult::Status::NotFoundExhausted:
            out << "cm-side: not-found-at-bound (frontier exhausted)\n";
            break;
        case CmHaltResult::Status::NotFoundTruncated:
            out << "cm-side: not-found-at-bound (truncated)\n";
            break;
    }
    switch (rep.pds.status) {
        case ReachResult::Status::Found:
            out << "pds-side: found (witness length " << rep.pds.witness->length() << ")\n";
            break;
        case ReachResult::Status::NotFoundExhausted:
            out << "pds-side: not-found-at-bound (frontier exhausted)\n";
            break;
        case ReachResult::Status::NotFoundTruncated:
            out << "pds-side: not-found-at-bound (truncated)\n";
            break;
    }
    if (rep.projected)
        out << "projection: " << (rep.projection_valid ? "valid" : "invalid") << " ("
            << rep.projected->steps.size() << " machine steps)\n";
    out << "agreement: " << (rep.agree ? "yes" : "no") << "\n";
    if (!rep.detail.empty()) out << "detail: " << rep.detail << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pairwise reachability for lock-synchronized recursive threads"};
    app.require_subcommand(1);
    app.fallthrough(true);  // global flags may follow the subcommand

    Options opt;
    app.add_option("--max-stack", opt.bounds.max_stack_depth, "stack depth bound (default 64)");
    app.add_option("--max-steps", opt.bounds.max_steps, "exploration step bound (default 100000)");
    app.add_option("--max-count", opt.bounds.max_count,
                   "reentrant holding-count bound (default 16)");
    app.add_option("--witness", opt.witness_mode, "witness rendering: full|labels|none")
        ->check(CLI::IsMember({"full", "labels", "none"}));
    app.add_flag("--no-timing", opt.no_timing, "suppress the timing line");

    std::string model_path, trace_path, cm_path;
    auto* check = app.add_subcommand("check", "static contextual-locking verdict per thread");
    check->add_option("model", model_path)->required();
    auto* reach = app.add_subcommand("reach", "decide pairwise reachability for file queries");
    reach->add_option("model", model_path)->required();
    auto* oracle = app.add_subcommand("oracle", "bounded explicit-state search for file queries");
    oracle->add_option("model", model_path)->required();
    auto* classify = app.add_subcommand("classify", "well-bracketing verdict for a trace");
    classify->add_option("model", model_path)->required();
    classify->add_option("trace", trace_path)->required();
    auto* reorder = app.add_subcommand("reorder", "reorder a trace until well-bracketed");
    reorder->add_option("model", model_path)->required();
    reorder->add_option("trace", trace_path)->required();
    auto* reduce = app.add_subcommand("reduce-cm", "compile a counter machine to a reentrant 2-PDS");
    reduce->add_option("cm", cm_path)->required();
    auto* verify = app.add_subcommand("verify-cm", "cross-check a counter machine and its reduction");
    verify->add_option("cm", cm_path)->required();

    std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 wants reversed args
    auto start = std::chrono::steady_clock::now();
    try {
        try {
            app.parse(argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {  // --help
                out << app.help();
                return 0;
            }
            throw InputError(e.what());
        }
        int rc = 0;
        if (check->parsed())
            rc = cmd_check(model_path, opt, out);
        else if (reach->parsed())
            rc = cmd_reach(model_path, opt, out);
        else if (oracle->parsed())
            rc = cmd_oracle(model_path, opt, out);
        else if (classify->parsed())
            rc = cmd_classify(model_path, trace_path, opt, out);
        else if (reorder->parsed())
            rc = cmd_reorder(model_path, trace_path, opt, out);
        else if (reduce->parsed())
            rc = cmd_reduce_cm(cm_path, opt, out);
        else if (verify->parsed())
            rc = cmd_verify_cm(cm_path, opt, out);
        if (!opt.no_timing) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
            out << "timing: total-ms " << ms << "\n";
        }
        return rc;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace lockreach
