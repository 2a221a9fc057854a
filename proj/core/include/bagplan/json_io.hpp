#ifndef BAGPLAN_JSON_IO_HPP
#define BAGPLAN_JSON_IO_HPP

#include "bagplan/abstraction.hpp"
#include "bagplan/bqnp.hpp"
#include "bagplan/solver.hpp"

#include <string>

namespace bagplan {

// problem.bqnp.json
std::string problem_to_json(const BqnpProblem &problem);
BqnpProblem problem_from_json(const std::string &text);

// mapping.json: counting formulas and concretization rules, standalone
// (object and schema references by name, resolved against the parsed task).
std::string mapping_to_json(const RefinementMapping &mapping, const TypedTask &task);
RefinementMapping mapping_from_json(const std::string &text, const TypedTask &task);

// policy.json
std::string policy_to_json(const Policy &policy, const BqnpProblem &problem);
Policy policy_from_json(const std::string &text, const BqnpProblem &problem);

// certificate.json
std::string certificate_to_json(const TerminationVerdict &verdict, const BqnpProblem &problem);
TerminationVerdict certificate_from_json(const std::string &text);

// Flat QNP-style text format: name, variables, init, goal, then one action
// per block (name / preconditions / effects).
std::string problem_to_qnp_text(const BqnpProblem &problem, const std::string &name);

// Mutex and bag diagnostic reports.
std::string mutex_report_json(const TypedTask &task, const MutexInvariant &invariant,
                              const std::vector<InitViolation> &violations);
std::string bags_report_json(const TypedTask &task, const BagStructure &bags);

std::string plan_to_text(const GroundTask &ground, const std::vector<int> &plan);
std::vector<int> plan_from_text(const std::string &text, const GroundTask &ground);

void write_file(const std::string &path, const std::string &content);

} // namespace bagplan

#endif
