#ifndef BAGPLAN_PARSER_HPP
#define BAGPLAN_PARSER_HPP

#include "bagplan/task.hpp"

#include <string>

namespace bagplan {

class ParseError : public Error {
public:
    ParseError(const std::string &msg, int line, int col)
        : Error(msg + " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")"),
          line(line), col(col) {}

    int line;
    int col;
};

class UnsupportedFeatureError : public ParseError {
public:
    UnsupportedFeatureError(const std::string &construct, int line, int col)
        : ParseError("unsupported feature: " + construct, line, col), construct(construct) {}

    std::string construct;
};

// Parses the :strips + :typing fragment. Preconditions are conjunctions of
// positive atoms; anything richer (when, or, not, exists, forall, =,
// functions, derived predicates) is rejected with the construct's name.
TypedTask parse_domain(const std::string &text);

// Parses a problem against an already-parsed domain and validates init/goal
// atoms for declared predicates, arity and argument types.
TypedTask parse_problem(const std::string &text, const TypedTask &domain);

TypedTask parse_files(const std::string &domain_path, const std::string &problem_path);

std::string read_file(const std::string &path);

} // namespace bagplan

#endif
