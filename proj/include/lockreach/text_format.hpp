#pragma once

#include <string>
#include <vector>

#include "lockreach/counter_machine.hpp"
#include "lockreach/errors.hpp"
#include "lockreach/model.hpp"
#include "lockreach/system.hpp"

namespace lockreach {

struct ParseError : InputError {
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : InputError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                     ": " + what),
          line(line),
          column(column) {}
    std::size_t line;
    std::size_t column;
};

struct ParsedModel {
    MultiPdsSpec spec;
    std::vector<PairQuery> queries;
};

// Model files: one declaration per line, `#` starts a comment.
//   system <name>
//   locks <id>+
//   reentrant <true|false>          (optional, default false)
//   thread <name> ... end           with init/internal/push/pop/acq/rel lines;
//                                   optional explicit `states <id>+` and
//                                   `symbols <id>+` lines keep states alive
//                                   that no transition mentions
//   query <threadA> <stateA> <threadB> <stateB>
// States and stack symbols are otherwise collected in order of first mention.
ParsedModel parse_model(const std::string& text);
std::string render_model(const MultiPdsSpec& spec, const std::vector<PairQuery>& queries = {});

// Counter-machine files:
//   cm <name> ; states <id>+ ; init <q> ; final <q> ;
//   state <q> <q'> ; inc <i> <q> <q'> ; dec <i> <q> <q'> ; zero <i> <q> <q'>
CounterMachine parse_counter_machine(const std::string& text);
std::string render_counter_machine(const CounterMachine& m);

// Trace files: one `<label> <thread-index>` per line, labels
// state | push | pop | acq(<lock>) | rel(<lock>).
std::vector<Label> parse_trace(const std::string& text, const System& sys);
std::string render_trace(const System& sys, const std::vector<Label>& labels);

}  // namespace lockreach
