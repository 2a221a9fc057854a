#include "bagplan/json_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace bagplan {

using nlohmann::json;

namespace {

json qliteral_json(const QLiteral &lit) {
    json j;
    j["var"] = lit.var;
    if (lit.numeric)
        j["rel"] = lit.positive ? ">0" : "=0";
    else
        j["rel"] = lit.positive ? "true" : "false";
    return j;
}

QLiteral qliteral_parse(const json &j) {
    QLiteral lit;
    lit.var = j.at("var").get<int>();
    std::string rel = j.at("rel").get<std::string>();
    lit.numeric = rel == ">0" || rel == "=0";
    lit.positive = rel == ">0" || rel == "true";
    return lit;
}

json atom_json(const TVAtom &atom, const TypedTask &task) {
    json j;
    j["predicate"] = task.predicates[atom.predicate].name;
    json args = json::array();
    for (int a : atom.args) {
        if (TVAtom::is_var(a))
            args.push_back(json{{"var", task.types[TVAtom::var_type(a)]}});
        else
            args.push_back(task.objects[a].name);
    }
    j["args"] = args;
    return j;
}

TVAtom atom_parse(const json &j, const TypedTask &task) {
    TVAtom atom;
    atom.predicate = task.predicate_index(j.at("predicate").get<std::string>());
    if (atom.predicate < 0)
        throw Error("mapping references undeclared predicate");
    for (const auto &a : j.at("args")) {
        if (a.is_object()) {
            int t = task.type_index(a.at("var").get<std::string>());
            if (t < 0)
                throw Error("mapping references undeclared type");
            atom.args.push_back(TVAtom::type_var(t));
        } else {
            int o = task.object_index(a.get<std::string>());
            if (o < 0)
                throw Error("mapping references undeclared object");
            atom.args.push_back(o);
        }
    }
    return atom;
}

json ground_atom_json(const GroundAtom &atom, const TypedTask &task) {
    json j;
    j["predicate"] = task.predicates[atom.predicate].name;
    json args = json::array();
    for (int a : atom.args)
        args.push_back(task.objects[a].name);
    j["args"] = args;
    return j;
}

GroundAtom ground_atom_parse(const json &j, const TypedTask &task) {
    GroundAtom atom;
    atom.predicate = task.predicate_index(j.at("predicate").get<std::string>());
    for (const auto &a : j.at("args"))
        atom.args.push_back(task.object_index(a.get<std::string>()));
    return atom;
}

} // namespace

std::string problem_to_json(const BqnpProblem &problem) {
    json j;
    json numeric = json::array();
    for (const auto &v : problem.numerics) {
        json n;
        n["id"] = v.id;
        n["name"] = v.name;
        n["subtypes"] = v.subtype_names;
        n["eavs_atoms"] = v.eavs_atoms;
        numeric.push_back(n);
    }
    j["numeric"] = numeric;
    json boolean = json::array();
    for (const auto &b : problem.booleans) {
        json n;
        n["id"] = b.id;
        n["name"] = b.name;
        boolean.push_back(n);
    }
    j["boolean"] = boolean;
    json init = json::array();
    for (const auto &lit : problem.init)
        init.push_back(qliteral_json(lit));
    j["init"] = init;
    json goal = json::array();
    for (const auto &lit : problem.goal)
        goal.push_back(qliteral_json(lit));
    j["goal"] = goal;
    json ops = json::array();
    for (const auto &op : problem.ops) {
        json o;
        o["id"] = op.id;
        o["name"] = op.name;
        json pre = json::array();
        for (const auto &lit : op.pre)
            pre.push_back(qliteral_json(lit));
        o["pre"] = pre;
        json eff = json::array();
        for (const auto &[b, val] : op.bool_eff)
            eff.push_back(json{{"var", b}, {"op", val ? "set" : "clear"}});
        for (int v : op.decs)
            eff.push_back(json{{"var", v}, {"op", "dec"}});
        for (int v : op.incs)
            eff.push_back(json{{"var", v}, {"op", "inc"}});
        o["eff"] = eff;
        ops.push_back(o);
    }
    j["ops"] = ops;
    return j.dump(2) + "\n";
}

BqnpProblem problem_from_json(const std::string &text) {
    json j = json::parse(text);
    BqnpProblem p;
    for (const auto &n : j.at("numeric")) {
        NumericVariable v;
        v.id = n.at("id").get<int>();
        v.name = n.at("name").get<std::string>();
        if (n.contains("subtypes"))
            v.subtype_names = n.at("subtypes").get<std::vector<std::string>>();
        if (n.contains("eavs_atoms"))
            v.eavs_atoms = n.at("eavs_atoms").get<std::vector<std::string>>();
        p.numerics.push_back(std::move(v));
    }
    for (const auto &n : j.at("boolean")) {
        BooleanVariable v;
        v.id = n.at("id").get<int>();
        v.name = n.at("name").get<std::string>();
        p.booleans.push_back(std::move(v));
    }
    for (const auto &lit : j.at("init"))
        p.init.push_back(qliteral_parse(lit));
    for (const auto &lit : j.at("goal"))
        p.goal.push_back(qliteral_parse(lit));
    for (const auto &o : j.at("ops")) {
        AbstractAction op;
        op.id = o.at("id").get<int>();
        op.name = o.value("name", std::string("op") + std::to_string(op.id));
        for (const auto &lit : o.at("pre"))
            op.pre.push_back(qliteral_parse(lit));
        for (const auto &e : o.at("eff")) {
            std::string kind = e.at("op").get<std::string>();
            int var = e.at("var").get<int>();
            if (kind == "set")
                op.bool_eff.emplace_back(var, true);
            else if (kind == "clear")
                op.bool_eff.emplace_back(var, false);
            else if (kind == "inc")
                op.incs.push_back(var);
            else if (kind == "dec")
                op.decs.push_back(var);
            else
                throw Error("unknown effect kind '" + kind + "'");
        }
        p.ops.push_back(std::move(op));
    }
    return p;
}

std::string mapping_to_json(const RefinementMapping &mapping, const TypedTask &task) {
    json j;
    json numeric = json::array();
    for (std::size_t i = 0; i < mapping.counters.size(); i++) {
        const auto &f = mapping.counters[i];
        json n;
        n["id"] = static_cast<int>(i);
        json types = json::array();
        for (int t : f.types)
            types.push_back(task.types[t]);
        n["types"] = types;
        json subtypes = json::array();
        for (std::size_t k = 0; k < f.types.size(); k++) {
            json st;
            st["name"] = f.subtype_names[k];
            json members = json::array();
            for (int o : f.members[k])
                members.push_back(task.objects[o].name);
            st["members"] = members;
            subtypes.push_back(st);
        }
        n["subtypes"] = subtypes;
        json atoms = json::array();
        for (const auto &a : f.atoms)
            atoms.push_back(atom_json(a, task));
        n["atoms"] = atoms;
        numeric.push_back(n);
    }
    j["numeric"] = numeric;
    json boolean = json::array();
    for (std::size_t i = 0; i < mapping.boolean_atoms.size(); i++) {
        json b;
        b["id"] = static_cast<int>(i);
        b["atom"] = ground_atom_json(mapping.boolean_atoms[i], task);
        boolean.push_back(b);
    }
    j["boolean"] = boolean;
    json actions = json::array();
    for (std::size_t i = 0; i < mapping.rules.size(); i++) {
        const auto &r = mapping.rules[i];
        json a;
        a["id"] = static_cast<int>(i);
        a["schema"] = task.actions[r.schema].name;
        json args = json::array();
        for (int o : r.args) {
            if (o < 0)
                args.push_back(nullptr);
            else
                args.push_back(task.objects[o].name);
        }
        a["args"] = args;
        a["vars"] = r.vars;
        json pre = json::array();
        for (const auto &atom : r.pre_atoms)
            pre.push_back(atom_json(atom, task));
        a["pre"] = pre;
        actions.push_back(a);
    }
    j["actions"] = actions;
    return j.dump(2) + "\n";
}

RefinementMapping mapping_from_json(const std::string &text, const TypedTask &task) {
    json j = json::parse(text);
    RefinementMapping m;
    for (const auto &n : j.at("numeric")) {
        CounterFormula f;
        for (const auto &t : n.at("types")) {
            int ti = task.type_index(t.get<std::string>());
            if (ti < 0)
                throw Error("mapping references undeclared type");
            f.types.push_back(ti);
        }
        for (const auto &st : n.at("subtypes")) {
            f.subtype_names.push_back(st.at("name").get<std::string>());
            std::vector<int> members;
            for (const auto &o : st.at("members")) {
                int oi = task.object_index(o.get<std::string>());
                if (oi < 0)
                    throw Error("mapping references undeclared object '" +
                                o.get<std::string>() + "'");
                members.push_back(oi);
            }
            f.members.push_back(std::move(members));
        }
        for (const auto &a : n.at("atoms"))
            f.atoms.push_back(atom_parse(a, task));
        m.counters.push_back(std::move(f));
    }
    for (const auto &b : j.at("boolean"))
        m.boolean_atoms.push_back(ground_atom_parse(b.at("atom"), task));
    for (const auto &a : j.at("actions")) {
        ConcretizationRule r;
        std::string schema = a.at("schema").get<std::string>();
        for (std::size_t s = 0; s < task.actions.size(); s++)
            if (task.actions[s].name == schema)
                r.schema = static_cast<int>(s);
        if (r.schema < 0)
            throw Error("mapping references undeclared action schema '" + schema + "'");
        for (const auto &o : a.at("args")) {
            if (o.is_null())
                r.args.push_back(-1);
            else
                r.args.push_back(task.object_index(o.get<std::string>()));
        }
        for (const auto &v : a.at("vars"))
            r.vars.push_back(v.get<int>());
        for (const auto &atom : a.at("pre"))
            r.pre_atoms.push_back(atom_parse(atom, task));
        m.rules.push_back(std::move(r));
    }
    return m;
}

namespace {

json qstate_json(const QState &q, const BqnpProblem &problem) {
    json lits = json::array();
    for (std::size_t i = 0; i < q.numeric_positive.size(); i++)
        lits.push_back(qliteral_json({true, static_cast<int>(i), q.numeric_positive[i]}));
    for (std::size_t i = 0; i < q.booleans.size(); i++)
        lits.push_back(qliteral_json({false, static_cast<int>(i), q.booleans[i]}));
    (void)problem;
    return lits;
}

QState qstate_parse(const json &lits, const BqnpProblem &problem) {
    QState q;
    q.numeric_positive.assign(problem.numerics.size(), false);
    q.booleans.assign(problem.booleans.size(), false);
    for (const auto &l : lits) {
        QLiteral lit = qliteral_parse(l);
        if (lit.numeric)
            q.numeric_positive.at(lit.var) = lit.positive;
        else
            q.booleans.at(lit.var) = lit.positive;
    }
    return q;
}

} // namespace

std::string policy_to_json(const Policy &policy, const BqnpProblem &problem) {
    json entries = json::array();
    for (const auto &[q, op] : policy.map) {
        json e;
        e["qstate"] = qstate_json(q, problem);
        e["action"] = op;
        entries.push_back(e);
    }
    return entries.dump(2) + "\n";
}

Policy policy_from_json(const std::string &text, const BqnpProblem &problem) {
    json j = json::parse(text);
    Policy p;
    for (const auto &e : j)
        p.map[qstate_parse(e.at("qstate"), problem)] = e.at("action").get<int>();
    return p;
}

std::string certificate_to_json(const TerminationVerdict &verdict, const BqnpProblem &problem) {
    json j;
    j["terminating"] = verdict.terminating;
    j["sieve_acyclic"] = verdict.sieve_terminating;
    json steps = json::array();
    for (const auto &s : verdict.steps) {
        json step;
        step["scc"] = s.scc_nodes;
        step["variable"] = s.variable;
        step["variable_name"] = problem.numerics[s.variable].name;
        json removed = json::array();
        for (const auto &e : s.removed)
            removed.push_back(json{{"from", e.from}, {"op", e.op}, {"to", e.to}});
        step["removed"] = removed;
        steps.push_back(step);
    }
    j["steps"] = steps;
    json loops = json::array();
    for (const auto &l : verdict.loops) {
        json loop;
        loop["scc"] = l.scc_nodes;
        loop["variable"] = l.variable;
        loop["variable_name"] = problem.numerics[l.variable].name;
        loop["dec_edges"] = l.dec_edges;
        loop["inc_edges"] = l.inc_edges;
        loops.push_back(loop);
    }
    j["loops"] = loops;
    return j.dump(2) + "\n";
}

TerminationVerdict certificate_from_json(const std::string &text) {
    json j = json::parse(text);
    TerminationVerdict v;
    v.terminating = j.at("terminating").get<bool>();
    v.sieve_terminating = j.at("sieve_acyclic").get<bool>();
    for (const auto &s : j.at("steps")) {
        SieveStep step;
        step.scc_nodes = s.at("scc").get<std::vector<int>>();
        step.variable = s.at("variable").get<int>();
        for (const auto &e : s.at("removed"))
            step.removed.push_back(
                {e.at("from").get<int>(), e.at("op").get<int>(), e.at("to").get<int>()});
        v.steps.push_back(std::move(step));
    }
    for (const auto &l : j.at("loops")) {
        LoopCertificate loop;
        loop.scc_nodes = l.at("scc").get<std::vector<int>>();
        loop.variable = l.at("variable").get<int>();
        loop.dec_edges = l.at("dec_edges").get<int>();
        loop.inc_edges = l.at("inc_edges").get<int>();
        v.loops.push_back(std::move(loop));
    }
    return v;
}

std::string problem_to_qnp_text(const BqnpProblem &problem, const std::string &name) {
    std::ostringstream out;
    out << name << "\n";
    bool first = true;
    for (const auto &v : problem.numerics) {
        out << (first ? "" : " ") << v.name;
        first = false;
    }
    for (const auto &b : problem.booleans) {
        out << (first ? "" : " ") << b.name;
        first = false;
    }
    out << "\n";
    auto lits = [&](const std::vector<QLiteral> &ls) {
        std::string s;
        for (const auto &l : ls) {
            if (!s.empty())
                s += " ";
            s += qliteral_to_string(problem, l);
        }
        return s;
    };
    out << lits(problem.init) << "\n";
    out << lits(problem.goal) << "\n";
    for (const auto &op : problem.ops) {
        out << op.name << "\n";
        out << lits(op.pre) << "\n";
        std::string eff;
        for (const auto &[b, val] : op.bool_eff) {
            if (!eff.empty())
                eff += " ";
            eff += (val ? "" : "!") + problem.booleans[b].name;
        }
        for (int v : op.decs) {
            if (!eff.empty())
                eff += " ";
            eff += "dec(" + problem.numerics[v].name + ")";
        }
        for (int v : op.incs) {
            if (!eff.empty())
                eff += " ";
            eff += "inc(" + problem.numerics[v].name + ")";
        }
        out << eff << "\n";
    }
    return out.str();
}

std::string mutex_report_json(const TypedTask &task, const MutexInvariant &invariant,
                              const std::vector<InitViolation> &violations) {
    json j;
    json types = json::array();
    for (std::size_t t = 0; t < invariant.groups_per_type.size(); t++) {
        if (invariant.groups_per_type[t].empty())
            continue;
        json entry;
        entry["type"] = task.types[t];
        json groups = json::array();
        for (const auto &g : invariant.groups_per_type[t]) {
            json gj;
            json preds = json::array();
            for (int p : g.predicates)
                preds.push_back(task.predicates[p].name);
            gj["predicates"] = preds;
            gj["source"] = g.from_init ? "init" : "effects";
            gj["verified"] = invariant.verified;
            groups.push_back(gj);
        }
        entry["groups"] = groups;
        types.push_back(entry);
    }
    j["types"] = types;
    json ungrouped = json::array();
    for (const auto &[t, p] : invariant.ungrouped)
        ungrouped.push_back(json{{"type", task.types[t]}, {"predicate", task.predicates[p].name}});
    j["ungrouped"] = ungrouped;
    json viols = json::array();
    for (const auto &v : violations)
        viols.push_back(json{{"object", task.objects[v.object].name},
                             {"type", task.types[v.type]},
                             {"group", v.group_index},
                             {"count", v.count}});
    j["init_violations"] = viols;
    j["init_ok"] = violations.empty();
    return j.dump(2) + "\n";
}

std::string bags_report_json(const TypedTask &task, const BagStructure &bags) {
    json j;
    json types = json::array();
    for (int t : bags.baggable)
        types.push_back(task.types[t]);
    j["baggable_types"] = types;
    json subtypes = json::array();
    for (const auto &[t, sts] : bags.subtypes) {
        for (const auto &st : sts) {
            json s;
            s["name"] = st.name;
            s["type"] = task.types[t];
            json members = json::array();
            for (int m : st.members)
                members.push_back(task.objects[m].name);
            s["members"] = members;
            subtypes.push_back(s);
        }
    }
    j["subtypes"] = subtypes;
    json avs_counts = json::object();
    for (const auto &[t, avs] : bags.avs_per_type)
        avs_counts[task.types[t]] = avs.size();
    j["avs_counts"] = avs_counts;
    json eavs = json::array();
    for (const auto &e : bags.eavs)
        eavs.push_back(e.name);
    j["eavs"] = eavs;
    j["proper"] = bags.proper;
    json viols = json::array();
    for (const auto &v : bags.violations)
        viols.push_back(json{{"schema", task.actions[v.schema].name},
                             {"eavs", bags.eavs[v.eavs_index].name},
                             {"first", to_string(task, v.first)},
                             {"second", to_string(task, v.second)}});
    j["violations"] = viols;
    return j.dump(2) + "\n";
}

std::string plan_to_text(const GroundTask &ground, const std::vector<int> &plan) {
    std::string out;
    for (int a : plan)
        out += ground.action_name(a) + "\n";
    return out;
}

std::vector<int> plan_from_text(const std::string &text, const GroundTask &ground) {
    std::map<std::string, int> by_name;
    for (std::size_t i = 0; i < ground.actions.size(); i++)
        by_name[ground.actions[i].name] = static_cast<int>(i);
    std::vector<int> plan;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string trimmed;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c)) || !trimmed.empty())
                trimmed += c;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        if (trimmed.empty() || trimmed[0] == ';')
            continue;
        std::string lower;
        for (char c : trimmed)
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        auto it = by_name.find(lower);
        if (it == by_name.end())
            throw Error("unknown ground action at plan line " + std::to_string(lineno) + ": " +
                        trimmed);
        plan.push_back(it->second);
    }
    return plan;
}

void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write file: " + path);
    out << content;
}

} // namespace bagplan
