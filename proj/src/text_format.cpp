#include "lockreach/text_format.hpp"

#include <algorithm>
#include <sstream>

namespace lockreach {

namespace {

struct Tok {
    std::string text;
    std::size_t column;  // 1-based
};

struct Line {
    std::size_t number;  // 1-based
    std::vector<Tok> toks;
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::size_t lineno = 0;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        Line line{lineno, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            if (raw[i] == '#') break;
            if (std::isspace(static_cast<unsigned char>(raw[i]))) {
                ++i;
                continue;
            }
            std::size_t start = i;
            while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])) &&
                   raw[i] != '#')
                ++i;
            line.toks.push_back(Tok{raw.substr(start, i - start), start + 1});
        }
        if (!line.toks.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void fail(const Line& l, std::size_t tok, const std::string& msg) {
    std::size_t col = tok < l.toks.size() ? l.toks[tok].column
                                          : (l.toks.empty() ? 1 : l.toks.back().column + 1);
    throw ParseError(l.number, col, msg);
}

void want_args(const Line& l, std::size_t n) {
    if (l.toks.size() != n + 1)
        fail(l, l.toks.size() > n + 1 ? n + 1 : l.toks.size(),
             "\"" + l.toks[0].text + "\" takes " + std::to_string(n) + " argument(s)");
}

// Adds to the declared list on first mention, preserving order.
void mention(std::vector<std::string>& list, const std::string& name) {
    if (std::find(list.begin(), list.end(), name) == list.end()) list.push_back(name);
}

}  // namespace

ParsedModel parse_model(const std::string& text) {
    auto lines = tokenize(text);
    if (lines.empty()) throw ParseError(1, 1, "missing system header");

    ParsedModel out;
    struct PendingQuery {
        Line line;
    };
    std::vector<PendingQuery> pending_queries;

    std::size_t i = 0;
    if (lines[0].toks[0].text != "system") fail(lines[0], 0, "missing system header");
    want_args(lines[0], 1);
    out.spec.name = lines[0].toks[1].text;
    ++i;

    bool reentrant_seen = false;
    PdsSpec* thread = nullptr;  // non-null inside a thread block

    for (; i < lines.size(); ++i) {
        const Line& l = lines[i];
        const std::string& kw = l.toks[0].text;
        if (thread == nullptr) {
            if (kw == "locks") {
                if (l.toks.size() < 2) fail(l, 0, "\"locks\" needs at least one lock");
                for (std::size_t k = 1; k < l.toks.size(); ++k) {
                    const auto& name = l.toks[k].text;
                    if (std::find(out.spec.locks.begin(), out.spec.locks.end(), name) !=
                        out.spec.locks.end())
                        fail(l, k, "lock \"" + name + "\" declared twice");
                    out.spec.locks.push_back(name);
                }
            } else if (kw == "reentrant") {
                want_args(l, 1);
                if (reentrant_seen) fail(l, 0, "\"reentrant\" declared twice");
                reentrant_seen = true;
                const auto& v = l.toks[1].text;
                if (v != "true" && v != "false") fail(l, 1, "expected true or false");
                out.spec.reentrant = (v == "true");
            } else if (kw == "thread") {
                want_args(l, 1);
                for (const auto& t : out.spec.threads)
                    if (t.name == l.toks[1].text)
                        fail(l, 1, "thread \"" + l.toks[1].text + "\" declared twice");
                out.spec.threads.emplace_back();
                thread = &out.spec.threads.back();
                thread->name = l.toks[1].text;
            } else if (kw == "query") {
                want_args(l, 4);
                pending_queries.push_back(PendingQuery{l});
            } else {
                fail(l, 0, "unknown declaration \"" + kw + "\"");
            }
        } else {
            if (kw == "end") {
                want_args(l, 0);
                if (thread->initial.empty())
                    fail(l, 0, "thread \"" + thread->name + "\" has no init declaration");
                thread = nullptr;
            } else if (kw == "init") {
                want_args(l, 1);
                if (!thread->initial.empty()) fail(l, 0, "init declared twice");
                thread->initial = l.toks[1].text;
                mention(thread->states, thread->initial);
            } else if (kw == "states") {
                if (l.toks.size() < 2) fail(l, 0, "\"states\" needs at least one state");
                for (std::size_t k = 1; k < l.toks.size(); ++k)
                    mention(thread->states, l.toks[k].text);
            } else if (kw == "symbols") {
                if (l.toks.size() < 2) fail(l, 0, "\"symbols\" needs at least one symbol");
                for (std::size_t k = 1; k < l.toks.size(); ++k)
                    mention(thread->stack_alphabet, l.toks[k].text);
            } else if (kw == "internal") {
                want_args(l, 2);
                thread->internal.push_back(InternalRule{l.toks[1].text, l.toks[2].text});
                mention(thread->states, l.toks[1].text);
                mention(thread->states, l.toks[2].text);
            } else if (kw == "push") {
                want_args(l, 3);
                thread->push.push_back(PushRule{l.toks[1].text, l.toks[2].text, l.toks[3].text});
                mention(thread->states, l.toks[1].text);
                mention(thread->states, l.toks[2].text);
                mention(thread->stack_alphabet, l.toks[3].text);
            } else if (kw == "pop") {
                want_args(l, 3);
                thread->pop.push_back(PopRule{l.toks[1].text, l.toks[2].text, l.toks[3].text});
                mention(thread->states, l.toks[1].text);
                mention(thread->stack_alphabet, l.toks[2].text);
                mention(thread->states, l.toks[3].text);
            } else if (kw == "acq") {
                want_args(l, 3);
                thread->acquire.push_back(AcqRule{l.toks[1].text, l.toks[2].text, l.toks[3].text});
                mention(thread->states, l.toks[1].text);
                mention(thread->states, l.toks[2].text);
            } else if (kw == "rel") {
                want_args(l, 3);
                thread->release.push_back(RelRule{l.toks[1].text, l.toks[2].text, l.toks[3].text});
                mention(thread->states, l.toks[1].text);
                mention(thread->states, l.toks[3].text);
            } else {
                fail(l, 0, "unknown declaration \"" + kw + "\" inside thread block");
            }
        }
    }
    if (thread != nullptr)
        throw ParseError(lines.back().number, 1,
                         "thread \"" + thread->name + "\" is not closed with \"end\"");

    for (const auto& pq : pending_queries) {
        const Line& l = pq.line;
        auto index_of = [&](std::size_t tok) -> std::size_t {
            for (std::size_t t = 0; t < out.spec.threads.size(); ++t)
                if (out.spec.threads[t].name == l.toks[tok].text) return t;
            fail(l, tok, "query names unknown thread \"" + l.toks[tok].text + "\"");
        };
        PairQuery q;
        q.thread_a = index_of(1);
        q.state_a = l.toks[2].text;
        q.thread_b = index_of(3);
        q.state_b = l.toks[4].text;
        out.queries.push_back(q);
    }
    return out;
}

std::string render_model(const MultiPdsSpec& spec, const std::vector<PairQuery>& queries) {
    std::ostringstream os;
    os << "system " << spec.name << "\n";
    if (!spec.locks.empty()) {
        os << "locks";
        for (const auto& l : spec.locks) os << ' ' << l;
        os << "\n";
    }
    os << "reentrant " << (spec.reentrant ? "true" : "false") << "\n";
    for (const auto& t : spec.threads) {
        os << "\nthread " << t.name << "\n";
        if (!t.states.empty()) {
            os << "  states";
            for (const auto& q : t.states) os << ' ' << q;
            os << "\n";
        }
        if (!t.stack_alphabet.empty()) {
            os << "  symbols";
            for (const auto& a : t.stack_alphabet) os << ' ' << a;
            os << "\n";
        }
        os << "  init " << t.initial << "\n";
        for (const auto& r : t.internal) os << "  internal " << r.from << ' ' << r.to << "\n";
        for (const auto& r : t.push)
            os << "  push " << r.from << ' ' << r.to << ' ' << r.symbol << "\n";
        for (const auto& r : t.pop)
            os << "  pop " << r.from << ' ' << r.symbol << ' ' << r.to << "\n";
        for (const auto& r : t.acquire)
            os << "  acq " << r.from << ' ' << r.to << ' ' << r.lock << "\n";
        for (const auto& r : t.release)
            os << "  rel " << r.from << ' ' << r.lock << ' ' << r.to << "\n";
        os << "end\n";
    }
    for (const auto& q : queries) {
        os << "\nquery " << spec.threads[q.thread_a].name << ' ' << q.state_a << ' '
           << spec.threads[q.thread_b].name << ' ' << q.state_b << "\n";
    }
    return os.str();
}

CounterMachine parse_counter_machine(const std::string& text) {
    auto lines = tokenize(text);
    if (lines.empty()) throw ParseError(1, 1, "missing cm header");
    if (lines[0].toks[0].text != "cm") fail(lines[0], 0, "missing cm header");
    want_args(lines[0], 1);

    CounterMachine m;
    m.name = lines[0].toks[1].text;
    auto counter_index = [&](const Line& l) -> int {
        const auto& v = l.toks[1].text;
        if (v != "1" && v != "2") fail(l, 1, "counter index must be 1 or 2");
        return v == "1" ? 0 : 1;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Line& l = lines[i];
        const std::string& kw = l.toks[0].text;
        if (kw == "states") {
            if (l.toks.size() < 2) fail(l, 0, "\"states\" needs at least one state");
            for (std::size_t k = 1; k < l.toks.size(); ++k) m.states.push_back(l.toks[k].text);
        } else if (kw == "init") {
            want_args(l, 1);
            if (!m.initial.empty()) fail(l, 0, "init declared twice");
            m.initial = l.toks[1].text;
        } else if (kw == "final") {
            want_args(l, 1);
            if (!m.final_state.empty()) fail(l, 0, "final declared twice");
            m.final_state = l.toks[1].text;
        } else if (kw == "state") {
            want_args(l, 2);
            m.state_moves.push_back(CmRule{l.toks[1].text, l.toks[2].text});
        } else if (kw == "inc" || kw == "dec" || kw == "zero") {
            want_args(l, 3);
            int c = counter_index(l);
            CmRule r{l.toks[2].text, l.toks[3].text};
            if (kw == "inc")
                m.inc[c].push_back(r);
            else if (kw == "dec")
                m.dec[c].push_back(r);
            else
                m.zero[c].push_back(r);
        } else {
            fail(l, 0, "unknown declaration \"" + kw + "\"");
        }
    }
    return m;
}

std::string render_counter_machine(const CounterMachine& m) {
    std::ostringstream os;
    os << "cm " << m.name << "\n";
    if (!m.states.empty()) {
        os << "states";
        for (const auto& q : m.states) os << ' ' << q;
        os << "\n";
    }
    os << "init " << m.initial << "\n";
    os << "final " << m.final_state << "\n";
    for (const auto& r : m.state_moves) os << "state " << r.from << ' ' << r.to << "\n";
    for (int c = 0; c < 2; ++c) {
        for (const auto& r : m.inc[c]) os << "inc " << (c + 1) << ' ' << r.from << ' ' << r.to << "\n";
        for (const auto& r : m.dec[c]) os << "dec " << (c + 1) << ' ' << r.from << ' ' << r.to << "\n";
        for (const auto& r : m.zero[c])
            os << "zero " << (c + 1) << ' ' << r.from << ' ' << r.to << "\n";
    }
    return os.str();
}

std::vector<Label> parse_trace(const std::string& text, const System& sys) {
    std::vector<Label> out;
    for (const Line& l : tokenize(text)) {
        want_args(l, 1);
        const std::string& word = l.toks[0].text;
        Label label;
        if (word == "state")
            label.kind = Label::Kind::State;
        else if (word == "push")
            label.kind = Label::Kind::Push;
        else if (word == "pop")
            label.kind = Label::Kind::Pop;
        else if ((word.rfind("acq(", 0) == 0 || word.rfind("rel(", 0) == 0) && word.back() == ')') {
            label.kind = word[0] == 'a' ? Label::Kind::Acq : Label::Kind::Rel;
            std::string lock = word.substr(4, word.size() - 5);
            auto id = sys.lock_id(lock);
            if (!id) fail(l, 0, "unknown lock \"" + lock + "\"");
            label.lock = *id;
        } else {
            fail(l, 0, "unknown label \"" + word + "\"");
        }
        const std::string& idx = l.toks[1].text;
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
            fail(l, 1, "thread index must be a number");
        label.thread = static_cast<std::uint32_t>(std::stoul(idx));
        if (label.thread >= sys.thread_count())
            fail(l, 1, "thread index " + idx + " out of range");
        out.push_back(label);
    }
    return out;
}

std::string render_trace(const System& sys, const std::vector<Label>& labels) {
    std::ostringstream os;
    for (const auto& l : labels) os << sys.render_label(l) << "\n";
    return os.str();
}

}  // namespace lockreach
