#include "bagplan/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>

namespace bagplan {

namespace {

struct Node {
    // Either a symbol or a list.
    std::string symbol;
    std::vector<Node> children;
    bool is_list = false;
    int line = 0;
    int col = 0;

    bool is_symbol() const { return !is_list; }
};

class Lexer {
public:
    explicit Lexer(const std::string &text) : text_(text) {}

    Node parse_all_one() {
        skip_ws();
        Node n = parse_node();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError("trailing content after top-level form", line_, col_);
        return n;
    }

private:
    Node parse_node() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", line_, col_);
        if (text_[pos_] == '(') {
            Node list;
            list.is_list = true;
            list.line = line_;
            list.col = col_;
            advance();
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                list.children.push_back(parse_node());
                skip_ws();
            }
            if (pos_ >= text_.size())
                throw ParseError("missing closing parenthesis", list.line, list.col);
            advance();
            return list;
        }
        if (text_[pos_] == ')')
            throw ParseError("unexpected ')'", line_, col_);
        Node sym;
        sym.line = line_;
        sym.col = col_;
        std::string s;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
            s += static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_])));
            advance();
        }
        sym.symbol = s;
        return sym;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (text_[pos_] == '\n') {
            line_++;
            col_ = 1;
        } else {
            col_++;
        }
        pos_++;
    }

    const std::string &text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

[[noreturn]] void fail(const Node &n, const std::string &msg) {
    throw ParseError(msg, n.line, n.col);
}

void expect_list(const Node &n, const std::string &what) {
    if (!n.is_list)
        fail(n, "expected " + what);
}

const std::string &head(const Node &n) {
    static const std::string empty;
    if (!n.is_list || n.children.empty() || !n.children[0].is_symbol())
        return empty;
    return n.children[0].symbol;
}

// Parses "name+ - type" groups as they appear in :types, :objects and
// parameter lists. Calls sink(name, type_or_empty, node).
template <typename F>
void parse_typed_list(const std::vector<Node> &items, std::size_t from, F sink) {
    std::vector<const Node *> pending;
    for (std::size_t i = from; i < items.size(); i++) {
        const Node &n = items[i];
        if (!n.is_symbol())
            fail(n, "expected name in typed list");
        if (n.symbol == "-") {
            if (i + 1 >= items.size() || !items[i + 1].is_symbol())
                fail(n, "expected type name after '-'");
            const std::string &type = items[i + 1].symbol;
            for (const Node *p : pending)
                sink(p->symbol, type, *p);
            pending.clear();
            i++;
        } else {
            pending.push_back(&n);
        }
    }
    for (const Node *p : pending)
        sink(p->symbol, std::string(), *p);
}

const std::vector<std::string> kUnsupportedRequirements = {
    ":adl", ":negative-preconditions", ":disjunctive-preconditions",
    ":existential-preconditions", ":universal-preconditions",
    ":quantified-preconditions", ":conditional-effects", ":equality",
    ":fluents", ":numeric-fluents", ":action-costs", ":durative-actions",
    ":derived-predicates", ":axioms"};

SchemaAtom parse_schema_atom(const Node &n, const TypedTask &task, const ActionSchema &schema,
                             const std::string &where) {
    expect_list(n, "atom in " + where);
    if (n.children.empty() || !n.children[0].is_symbol())
        fail(n, "expected predicate atom in " + where);
    const std::string &pname = n.children[0].symbol;
    if (pname == "when")
        throw UnsupportedFeatureError("conditional effect (when)", n.line, n.col);
    if (pname == "or")
        throw UnsupportedFeatureError("disjunctive condition (or)", n.line, n.col);
    if (pname == "exists" || pname == "forall")
        throw UnsupportedFeatureError("quantified condition (" + pname + ")", n.line, n.col);
    if (pname == "=")
        throw UnsupportedFeatureError("equality atom (=)", n.line, n.col);
    if (pname == "increase" || pname == "decrease" || pname == "assign")
        throw UnsupportedFeatureError("numeric fluent effect (" + pname + ")", n.line, n.col);
    int pred = task.predicate_index(pname);
    if (pred < 0)
        fail(n, "undeclared predicate '" + pname + "'");
    const auto &sig = task.predicates[pred];
    if (n.children.size() - 1 != sig.param_types.size())
        fail(n, "predicate '" + pname + "' expects " + std::to_string(sig.param_types.size()) +
                    " arguments, got " + std::to_string(n.children.size() - 1));
    SchemaAtom atom;
    atom.predicate = pred;
    for (std::size_t i = 1; i < n.children.size(); i++) {
        const Node &arg = n.children[i];
        if (!arg.is_symbol() || arg.symbol.empty() || arg.symbol[0] != '?') {
            if (arg.is_symbol())
                throw UnsupportedFeatureError("constant '" + arg.symbol + "' in action body",
                                              arg.line, arg.col);
            fail(arg, "expected parameter reference");
        }
        std::string var = arg.symbol.substr(1);
        int param = -1;
        for (std::size_t j = 0; j < schema.param_names.size(); j++)
            if (schema.param_names[j] == var)
                param = static_cast<int>(j);
        if (param < 0)
            fail(arg, "unknown parameter '?" + var + "'");
        int declared = sig.param_types[i - 1];
        if (!task.type_admits(declared, schema.param_types[param]))
            fail(arg, "parameter '?" + var + "' of type '" + task.types[schema.param_types[param]] +
                          "' does not fit '" + task.types[declared] + "'");
        atom.args.push_back(param);
    }
    return atom;
}

void parse_condition(const Node &n, const TypedTask &task, ActionSchema &schema,
                     std::vector<SchemaAtom> &pos, std::vector<SchemaAtom> *neg,
                     const std::string &where) {
    const std::string &h = head(n);
    if (h == "and") {
        for (std::size_t i = 1; i < n.children.size(); i++)
            parse_condition(n.children[i], task, schema, pos, neg, where);
        return;
    }
    if (h == "not") {
        if (n.children.size() != 2)
            fail(n, "(not ...) expects exactly one atom");
        if (!neg)
            throw UnsupportedFeatureError("negative precondition (not)", n.line, n.col);
        neg->push_back(parse_schema_atom(n.children[1], task, schema, where));
        return;
    }
    pos.push_back(parse_schema_atom(n, task, schema, where));
}

GroundAtom parse_ground_atom(const Node &n, const TypedTask &task) {
    expect_list(n, "ground atom");
    if (n.children.empty() || !n.children[0].is_symbol())
        fail(n, "expected ground atom");
    const std::string &pname = n.children[0].symbol;
    if (pname == "=")
        throw UnsupportedFeatureError("equality atom (=)", n.line, n.col);
    int pred = task.predicate_index(pname);
    if (pred < 0)
        fail(n, "undeclared predicate '" + pname + "'");
    const auto &sig = task.predicates[pred];
    if (n.children.size() - 1 != sig.param_types.size())
        fail(n, "predicate '" + pname + "' expects " + std::to_string(sig.param_types.size()) +
                    " arguments, got " + std::to_string(n.children.size() - 1));
    GroundAtom atom;
    atom.predicate = pred;
    for (std::size_t i = 1; i < n.children.size(); i++) {
        const Node &arg = n.children[i];
        if (!arg.is_symbol())
            fail(arg, "expected object name");
        int obj = task.object_index(arg.symbol);
        if (obj < 0)
            fail(arg, "undeclared object '" + arg.symbol + "'");
        if (!task.type_admits(sig.param_types[i - 1], task.objects[obj].type))
            fail(arg, "object '" + arg.symbol + "' of type '" +
                          task.types[task.objects[obj].type] + "' does not fit '" +
                          task.types[sig.param_types[i - 1]] + "'");
        atom.args.push_back(obj);
    }
    return atom;
}

} // namespace

TypedTask parse_domain(const std::string &text) {
    Lexer lexer(text);
    Node root = lexer.parse_all_one();
    expect_list(root, "(define ...)");
    if (head(root) != "define")
        fail(root, "expected (define (domain ...) ...)");

    TypedTask task;
    bool saw_domain_name = false;
    for (std::size_t i = 1; i < root.children.size(); i++) {
        const Node &sec = root.children[i];
        const std::string &h = head(sec);
        if (h == "domain") {
            if (sec.children.size() != 2 || !sec.children[1].is_symbol())
                fail(sec, "expected (domain name)");
            task.domain_name = sec.children[1].symbol;
            saw_domain_name = true;
        } else if (h == ":requirements") {
            for (std::size_t j = 1; j < sec.children.size(); j++) {
                const std::string &req = sec.children[j].symbol;
                if (req != ":strips" && req != ":typing")
                    throw UnsupportedFeatureError("requirement " + req, sec.children[j].line,
                                                  sec.children[j].col);
            }
        } else if (h == ":types") {
            std::vector<std::pair<std::size_t, std::string>> parents;
            parse_typed_list(sec.children, 1, [&](const std::string &name, const std::string &parent,
                                                  const Node &at) {
                if (task.type_index(name) >= 0)
                    fail(at, "type '" + name + "' declared twice");
                task.types.push_back(name);
                task.type_parent.push_back(-1);
                parents.emplace_back(task.types.size() - 1, parent);
            });
            for (auto &[idx, parent] : parents) {
                if (parent.empty() || parent == "object")
                    continue;
                int p = task.type_index(parent);
                if (p < 0) {
                    // Parent used only as a supertype; declare it implicitly.
                    task.types.push_back(parent);
                    task.type_parent.push_back(-1);
                    p = static_cast<int>(task.types.size() - 1);
                }
                task.type_parent[idx] = p;
            }
            for (std::size_t t = 0; t < task.types.size(); t++) {
                int cur = static_cast<int>(t);
                for (std::size_t steps = 0; cur != -1; steps++) {
                    if (steps > task.types.size())
                        fail(sec, "cyclic type hierarchy at '" + task.types[t] + "'");
                    cur = task.type_parent[cur];
                }
            }
        } else if (h == ":constants") {
            throw UnsupportedFeatureError("domain constants (:constants)", sec.line, sec.col);
        } else if (h == ":predicates") {
            for (std::size_t j = 1; j < sec.children.size(); j++) {
                const Node &p = sec.children[j];
                expect_list(p, "predicate declaration");
                if (p.children.empty() || !p.children[0].is_symbol())
                    fail(p, "expected predicate name");
                PredicateSchema pred;
                pred.name = p.children[0].symbol;
                if (task.predicate_index(pred.name) >= 0)
                    fail(p, "predicate '" + pred.name + "' declared twice");
                parse_typed_list(p.children, 1, [&](const std::string &, const std::string &type,
                                                    const Node &at) {
                    if (type.empty())
                        fail(at, "untyped predicate parameter (the :typing fragment requires types)");
                    int t = task.type_index(type);
                    if (t < 0)
                        fail(at, "undeclared type '" + type + "'");
                    pred.param_types.push_back(t);
                });
                task.predicates.push_back(std::move(pred));
            }
        } else if (h == ":functions") {
            throw UnsupportedFeatureError("numeric functions (:functions)", sec.line, sec.col);
        } else if (h == ":derived") {
            throw UnsupportedFeatureError("derived predicates (:derived)", sec.line, sec.col);
        } else if (h == ":action") {
            if (sec.children.size() < 2 || !sec.children[1].is_symbol())
                fail(sec, "expected action name");
            ActionSchema schema;
            schema.name = sec.children[1].symbol;
            const Node *precondition = nullptr;
            const Node *effect = nullptr;
            for (std::size_t j = 2; j + 1 < sec.children.size(); j += 2) {
                const Node &key = sec.children[j];
                const Node &val = sec.children[j + 1];
                if (!key.is_symbol())
                    fail(key, "expected :parameters/:precondition/:effect keyword");
                if (key.symbol == ":parameters") {
                    expect_list(val, "parameter list");
                    parse_typed_list(val.children, 0, [&](const std::string &name,
                                                          const std::string &type, const Node &at) {
                        if (name.empty() || name[0] != '?')
                            fail(at, "parameter names must start with '?'");
                        if (type.empty())
                            fail(at, "untyped parameter '" + name + "'");
                        int t = task.type_index(type);
                        if (t < 0)
                            fail(at, "undeclared type '" + type + "'");
                        for (const auto &existing : schema.param_names)
                            if (existing == name.substr(1))
                                fail(at, "duplicate parameter '" + name + "'");
                        schema.param_names.push_back(name.substr(1));
                        schema.param_types.push_back(t);
                    });
                } else if (key.symbol == ":precondition") {
                    precondition = &val;
                } else if (key.symbol == ":effect") {
                    effect = &val;
                } else {
                    fail(key, "unexpected keyword '" + key.symbol + "' in action");
                }
            }
            if (precondition)
                parse_condition(*precondition, task, schema, schema.pre, nullptr, "precondition");
            if (effect)
                parse_condition(*effect, task, schema, schema.add, &schema.del, "effect");
            std::sort(schema.pre.begin(), schema.pre.end());
            schema.pre.erase(std::unique(schema.pre.begin(), schema.pre.end()), schema.pre.end());
            std::sort(schema.add.begin(), schema.add.end());
            schema.add.erase(std::unique(schema.add.begin(), schema.add.end()), schema.add.end());
            std::sort(schema.del.begin(), schema.del.end());
            schema.del.erase(std::unique(schema.del.begin(), schema.del.end()), schema.del.end());
            for (const auto &a : schema.add)
                for (const auto &d : schema.del)
                    if (a == d)
                        fail(sec, "action '" + schema.name + "' adds and deletes the same atom");
            task.actions.push_back(std::move(schema));
        } else {
            fail(sec, "unexpected section '" + h + "' in domain");
        }
    }
    if (!saw_domain_name)
        fail(root, "missing (domain name)");
    task.finalize();
    return task;
}

TypedTask parse_problem(const std::string &text, const TypedTask &domain) {
    Lexer lexer(text);
    Node root = lexer.parse_all_one();
    expect_list(root, "(define ...)");
    if (head(root) != "define")
        fail(root, "expected (define (problem ...) ...)");

    TypedTask task = domain;
    for (std::size_t i = 1; i < root.children.size(); i++) {
        const Node &sec = root.children[i];
        const std::string &h = head(sec);
        if (h == "problem") {
            if (sec.children.size() != 2 || !sec.children[1].is_symbol())
                fail(sec, "expected (problem name)");
            task.problem_name = sec.children[1].symbol;
        } else if (h == ":domain") {
            if (sec.children.size() != 2 || !sec.children[1].is_symbol())
                fail(sec, "expected (:domain name)");
            if (sec.children[1].symbol != domain.domain_name)
                fail(sec, "problem references domain '" + sec.children[1].symbol +
                              "' but '" + domain.domain_name + "' was parsed");
        } else if (h == ":objects") {
            parse_typed_list(sec.children, 1, [&](const std::string &name, const std::string &type,
                                                  const Node &at) {
                if (type.empty())
                    fail(at, "untyped object '" + name + "'");
                int t = task.type_index(type);
                if (t < 0)
                    fail(at, "undeclared type '" + type + "'");
                if (task.object_index(name) >= 0)
                    fail(at, "object '" + name + "' declared twice");
                task.objects.push_back({name, t});
            });
            task.finalize();
        } else if (h == ":init") {
            for (std::size_t j = 1; j < sec.children.size(); j++)
                task.init.insert(parse_ground_atom(sec.children[j], task));
        } else if (h == ":goal") {
            if (sec.children.size() != 2)
                fail(sec, "expected (:goal <condition>)");
            const Node &cond = sec.children[1];
            if (head(cond) == "and") {
                for (std::size_t j = 1; j < cond.children.size(); j++) {
                    if (head(cond.children[j]) == "not")
                        throw UnsupportedFeatureError("negative goal (not)", cond.children[j].line,
                                                      cond.children[j].col);
                    task.goal.insert(parse_ground_atom(cond.children[j], task));
                }
            } else if (head(cond) == "not") {
                throw UnsupportedFeatureError("negative goal (not)", cond.line, cond.col);
            } else {
                task.goal.insert(parse_ground_atom(cond, task));
            }
        } else if (h == ":metric") {
            throw UnsupportedFeatureError("optimization metric (:metric)", sec.line, sec.col);
        } else {
            fail(sec, "unexpected section '" + h + "' in problem");
        }
    }
    task.finalize();
    return task;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TypedTask parse_files(const std::string &domain_path, const std::string &problem_path) {
    TypedTask domain = parse_domain(read_file(domain_path));
    return parse_problem(read_file(problem_path), domain);
}

} // namespace bagplan
