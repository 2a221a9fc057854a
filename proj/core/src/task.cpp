#include "bagplan/task.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace bagplan {

LogLevel log_level() {
    static LogLevel level = [] {
        const char *env = std::getenv("BAGPLAN_LOG");
        if (!env)
            return LogLevel::Warn;
        std::string v(env);
        if (v == "quiet")
            return LogLevel::Quiet;
        if (v == "info")
            return LogLevel::Info;
        if (v == "debug")
            return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

void log_message(LogLevel level, const std::string &msg) {
    if (static_cast<int>(level) <= static_cast<int>(log_level()))
        std::cerr << "bagplan: " << msg << "\n";
}

int TypedTask::type_index(const std::string &name) const {
    for (std::size_t i = 0; i < types.size(); i++)
        if (types[i] == name)
            return static_cast<int>(i);
    return -1;
}

int TypedTask::predicate_index(const std::string &name) const {
    for (std::size_t i = 0; i < predicates.size(); i++)
        if (predicates[i].name == name)
            return static_cast<int>(i);
    return -1;
}

int TypedTask::object_index(const std::string &name) const {
    for (std::size_t i = 0; i < objects.size(); i++)
        if (objects[i].name == name)
            return static_cast<int>(i);
    return -1;
}

bool TypedTask::type_admits(int declared, int t) const {
    while (t != -1) {
        if (t == declared)
            return true;
        t = type_parent[t];
    }
    return false;
}

const std::vector<int> &TypedTask::extent(int declared) const {
    auto it = extents_.find(declared);
    if (it == extents_.end())
        throw Error("extent queried before finalize() for type '" + types[declared] + "'");
    return it->second;
}

void TypedTask::finalize() {
    std::sort(objects.begin(), objects.end(), [](const Object &a, const Object &b) {
        if (a.type != b.type)
            return a.type < b.type;
        return a.name < b.name;
    });
    // Precompute every extent so the task is immutable (and shareable
    // across threads) from here on.
    extents_.clear();
    for (std::size_t t = 0; t < types.size(); t++) {
        std::vector<int> ids;
        for (std::size_t i = 0; i < objects.size(); i++)
            if (type_admits(static_cast<int>(t), objects[i].type))
                ids.push_back(static_cast<int>(i));
        std::sort(ids.begin(), ids.end(), [&](int a, int b) {
            return objects[a].name < objects[b].name;
        });
        extents_[static_cast<int>(t)] = std::move(ids);
    }
}

std::string TypedTask::atom_to_string(const GroundAtom &atom) const {
    std::string s = "(" + predicates[atom.predicate].name;
    for (int o : atom.args)
        s += " " + objects[o].name;
    return s + ")";
}

std::string TypedTask::schema_atom_to_string(const ActionSchema &schema, const SchemaAtom &atom) const {
    std::string s = "(" + predicates[atom.predicate].name;
    for (int p : atom.args)
        s += " ?" + schema.param_names[p];
    return s + ")";
}

bool TypedTask::operator==(const TypedTask &other) const {
    return domain_name == other.domain_name && problem_name == other.problem_name &&
           types == other.types && type_parent == other.type_parent &&
           predicates == other.predicates && actions == other.actions &&
           objects == other.objects && init == other.init && goal == other.goal;
}

std::string TypedTask::print_domain() const {
    std::ostringstream out;
    out << "(define (domain " << domain_name << ")\n";
    out << "  (:requirements :strips :typing)\n";
    out << "  (:types";
    for (std::size_t i = 0; i < types.size(); i++) {
        out << " " << types[i];
        if (type_parent[i] != -1)
            out << " - " << types[type_parent[i]];
    }
    out << ")\n";
    out << "  (:predicates";
    for (const auto &p : predicates) {
        out << "\n    (" << p.name;
        for (std::size_t i = 0; i < p.param_types.size(); i++)
            out << " ?x" << i << " - " << types[p.param_types[i]];
        out << ")";
    }
    out << ")\n";
    for (const auto &a : actions) {
        out << "  (:action " << a.name << "\n    :parameters (";
        for (std::size_t i = 0; i < a.param_names.size(); i++) {
            if (i)
                out << " ";
            out << "?" << a.param_names[i] << " - " << types[a.param_types[i]];
        }
        out << ")\n    :precondition (and";
        for (const auto &atom : a.pre)
            out << " " << schema_atom_to_string(a, atom);
        out << ")\n    :effect (and";
        for (const auto &atom : a.add)
            out << " " << schema_atom_to_string(a, atom);
        for (const auto &atom : a.del)
            out << " (not " << schema_atom_to_string(a, atom) << ")";
        out << "))\n";
    }
    out << ")\n";
    return out.str();
}

std::string TypedTask::print_problem() const {
    std::ostringstream out;
    out << "(define (problem " << problem_name << ")\n";
    out << "  (:domain " << domain_name << ")\n";
    out << "  (:objects";
    for (const auto &o : objects)
        out << " " << o.name << " - " << types[o.type];
    out << ")\n  (:init";
    for (const auto &atom : init)
        out << " " << atom_to_string(atom);
    out << ")\n  (:goal (and";
    for (const auto &atom : goal)
        out << " " << atom_to_string(atom);
    out << ")))\n";
    return out.str();
}

} // namespace bagplan
