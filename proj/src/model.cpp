#include "psmc/model.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace psmc {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ModelError(path, msg);
}

// Byte offset -> "line L, column C" for syntax diagnostics.
std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ExprPtr parse_expr_field(const json& j, const std::string& path) {
    try {
        if (j.is_number_integer()) return Expr::literal(j.get<long long>());
        if (j.is_boolean()) return Expr::literal(j.get<bool>() ? 1 : 0);
        if (j.is_string()) return parse_expr(j.get<std::string>());
    } catch (const ExprError& e) {
        fail(path, e.what());
    }
    fail(path, "expected an integer or an expression string");
}

CmpOp parse_cmp_op(const std::string& s, const std::string& path) {
    if (s == "<") return CmpOp::Lt;
    if (s == "<=") return CmpOp::Le;
    if (s == ">") return CmpOp::Gt;
    if (s == ">=") return CmpOp::Ge;
    fail(path, "bad comparison operator '" + s + "' (expected <, <=, >, >=)");
}

const char* cmp_text(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

std::vector<ClockBound> parse_bounds(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of clock bounds");
    std::vector<ClockBound> out;
    int k = 0;
    for (const auto& b : j) {
        std::string p = path + "[" + std::to_string(k++) + "]";
        if (!b.is_object() || !b.contains("clock") || !b.contains("op") || !b.contains("bound"))
            fail(p, "clock bound needs {clock, op, bound}");
        ClockBound cb;
        cb.clock = b.at("clock").get<std::string>();
        cb.op = parse_cmp_op(b.at("op").get<std::string>(), p);
        cb.bound = parse_expr_field(b.at("bound"), p + ".bound");
        out.push_back(std::move(cb));
    }
    return out;
}

// Placeholder strings: #range(a,b), #booleanmatrix(N[,symmetric][,zerodiag]),
// #binarymatrix(N,N). Both matrix spellings are aliases.
std::optional<ParamDomain> parse_placeholder(const std::string& s, const std::string& path) {
    if (s.empty() || s[0] != '#') return std::nullopt;
    auto open = s.find('(');
    auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        fail(path, "malformed placeholder '" + s + "'");
    std::string head = s.substr(1, open - 1);
    std::string inner = s.substr(open + 1, close - open - 1);
    std::vector<std::string> args;
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
        args.push_back(tok);
    }
    auto as_int = [&](const std::string& t) -> long long {
        try {
            std::size_t used = 0;
            long long v = std::stoll(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (...) {
            fail(path, "placeholder argument '" + t + "' is not an integer");
        }
    };
    if (head == "range") {
        if (args.size() != 2) fail(path, "#range takes two arguments");
        IntRangeDomain d{as_int(args[0]), as_int(args[1])};
        if (d.lo > d.hi) fail(path, "#range requires a <= b");
        return ParamDomain{d};
    }
    if (head == "booleanmatrix" || head == "binarymatrix") {
        if (args.empty()) fail(path, "#" + head + " needs a size");
        MatrixDomain d;
        d.n = static_cast<int>(as_int(args[0]));
        std::size_t flag_start = 1;
        if (head == "binarymatrix") {
            if (args.size() < 2 || as_int(args[1]) != d.n)
                fail(path, "#binarymatrix takes (N, N) with equal sizes");
            flag_start = 2;
        }
        for (std::size_t i = flag_start; i < args.size(); ++i) {
            if (args[i] == "symmetric") d.symmetric = true;
            else if (args[i] == "zerodiag" || args[i] == "zero_diagonal") d.zero_diagonal = true;
            else fail(path, "unknown matrix flag '" + args[i] + "'");
        }
        if (d.n < 1) fail(path, "matrix size must be >= 1");
        return ParamDomain{d};
    }
    fail(path, "unknown placeholder '#" + head + "'");
}

BoolMatrix parse_matrix_literal(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "matrix literal must be a non-empty array of rows");
    const int n = static_cast<int>(j.size());
    BoolMatrix m(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail(path, "matrix rows must all have length " + std::to_string(n));
        for (int c = 0; c < n; ++c) {
            const auto& cell = row[c];
            if (cell.is_boolean()) m.set(i, c, cell.get<bool>());
            else if (cell.is_number_integer()) m.set(i, c, cell.get<long long>() != 0);
            else fail(path, "matrix entries must be booleans or 0/1");
        }
    }
    return m;
}

SyncDef parse_sync(const std::string& s, const std::string& path) {
    SyncDef sync;
    if (s.empty()) return sync;
    char tail = s.back();
    if (tail != '!' && tail != '?') fail(path, "sync must end in '!' or '?'");
    sync.kind = tail == '!' ? SyncKind::Send : SyncKind::Receive;
    std::string body = s.substr(0, s.size() - 1);
    auto bracket = body.find('[');
    if (bracket == std::string::npos) {
        sync.channel = body;
    } else {
        if (body.back() != ']') fail(path, "malformed sync '" + s + "'");
        sync.channel = body.substr(0, bracket);
        std::string idx = body.substr(bracket + 1, body.size() - bracket - 2);
        try {
            sync.index = parse_expr(idx);
        } catch (const ExprError& e) {
            fail(path, e.what());
        }
    }
    if (sync.channel.empty()) fail(path, "sync channel name is empty");
    return sync;
}

UpdateDef parse_update(const json& j, const std::string& path) {
    UpdateDef u;
    if (j.is_object()) {
        if (!j.contains("var") || !j.contains("value")) fail(path, "update needs {var, value}");
        u.var = j.at("var").get<std::string>();
        u.value = parse_expr_field(j.at("value"), path + ".value");
        return u;
    }
    if (!j.is_string()) fail(path, "update must be a string 'var = expr' or {var, value}");
    std::string s = j.get<std::string>();
    auto eq = s.find(":=");
    std::size_t rhs_at;
    if (eq != std::string::npos) {
        rhs_at = eq + 2;
    } else {
        // Plain '=' that is not part of a comparison operator.
        eq = std::string::npos;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '=') continue;
            char prev = i > 0 ? s[i - 1] : '\0';
            char next = i + 1 < s.size() ? s[i + 1] : '\0';
            if (prev != '<' && prev != '>' && prev != '!' && prev != '=' && next != '=') {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) fail(path, "update '" + s + "' needs '=' or ':='");
        rhs_at = eq + 1;
    }
    u.var = s.substr(0, eq);
    u.var.erase(std::remove_if(u.var.begin(), u.var.end(), ::isspace), u.var.end());
    if (u.var.empty()) fail(path, "update target is empty");
    try {
        u.value = parse_expr(s.substr(rhs_at));
    } catch (const ExprError& e) {
        fail(path, e.what());
    }
    return u;
}

VarDecl parse_var(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("name")) fail(path, "variable needs at least {name}");
    VarDecl v;
    v.name = j.at("name").get<std::string>();
    v.init = j.contains("init") ? parse_expr_field(j.at("init"), path + ".init") : Expr::literal(0);
    // Default range mirrors a sane bounded integer.
    v.min = j.contains("min") ? parse_expr_field(j.at("min"), path + ".min")
                              : Expr::literal(-32768);
    v.max = j.contains("max") ? parse_expr_field(j.at("max"), path + ".max")
                              : Expr::literal(32767);
    return v;
}

// --- static validation helpers ---------------------------------------------

struct NameTables {
    std::set<std::string> constants;
    std::set<std::string> globals;
    std::set<std::string> channels;
};

void check_expr_names(const ExprPtr& e, const std::string& path, const NameTables& tables,
                      const TemplateDef* tmpl, bool allow_vars, const char* what) {
    if (!e) return;
    std::vector<std::string> names;
    collect_names(*e, names);
    for (const auto& n : names) {
        if (tables.constants.count(n)) continue;
        if (tmpl && std::find(tmpl->params.begin(), tmpl->params.end(), n) != tmpl->params.end())
            continue;
        bool is_clock =
            tmpl && std::find(tmpl->clocks.begin(), tmpl->clocks.end(), n) != tmpl->clocks.end();
        if (is_clock)
            fail(path, std::string("clock '") + n + "' cannot appear in " + what +
                           "; clock constraints are conjunctions of bounds");
        bool is_var = tables.globals.count(n) > 0;
        if (tmpl && !is_var)
            is_var = std::any_of(tmpl->locals.begin(), tmpl->locals.end(),
                                 [&](const VarDecl& v) { return v.name == n; });
        if (is_var) {
            if (allow_vars) continue;
            fail(path, std::string("variable '") + n + "' cannot appear in " + what +
                           " (must be constant)");
        }
        fail(path, "unknown identifier '" + n + "' in " + what);
    }
}

void validate_model(const ParametrizedModel& pm) {
    NameTables tables;
    for (std::size_t i = 0; i < pm.constants.size(); ++i) {
        const auto& c = pm.constants[i];
        std::string path = "constants." + c.name;
        if (!tables.constants.insert(c.name).second) fail(path, "duplicate constant");
        if (c.expr) {
            // Derived constants may only use earlier constants.
            std::vector<std::string> names;
            collect_names(*c.expr, names);
            for (const auto& n : names)
                if (!tables.constants.count(n) || n == c.name)
                    fail(path, "derived constant may only reference earlier constants ('" + n +
                                   "' is not one)");
        }
    }
    for (const auto& ch : pm.channels) {
        std::string path = "channels." + ch.name;
        if (!tables.channels.insert(ch.name).second) fail(path, "duplicate channel");
        check_expr_names(ch.size, path + ".size", tables, nullptr, false, "a channel size");
    }
    for (const auto& g : pm.globals) {
        std::string path = "variables." + g.name;
        if (tables.constants.count(g.name)) fail(path, "name collides with a constant");
        if (!tables.globals.insert(g.name).second) fail(path, "duplicate variable");
        check_expr_names(g.init, path + ".init", tables, nullptr, false, "a variable initializer");
        check_expr_names(g.min, path + ".min", tables, nullptr, false, "a variable range");
        check_expr_names(g.max, path + ".max", tables, nullptr, false, "a variable range");
    }

    std::set<std::string> template_names;
    for (const auto& t : pm.templates) {
        std::string tp = "templates." + t.name;
        if (!template_names.insert(t.name).second) fail(tp, "duplicate template");
        std::set<std::string> clock_set;
        for (const auto& c : t.clocks)
            if (!clock_set.insert(c).second) fail(tp + ".clocks", "duplicate clock '" + c + "'");
        std::set<std::string> param_set(t.params.begin(), t.params.end());
        if (param_set.size() != t.params.size()) fail(tp + ".params", "duplicate parameter");
        std::set<std::string> local_set;
        for (const auto& v : t.locals) {
            std::string vp = tp + ".variables." + v.name;
            if (!local_set.insert(v.name).second) fail(vp, "duplicate local variable");
            if (clock_set.count(v.name) || param_set.count(v.name))
                fail(vp, "name collides with a clock or parameter");
            check_expr_names(v.init, vp + ".init", tables, &t, false, "a variable initializer");
            check_expr_names(v.min, vp + ".min", tables, &t, false, "a variable range");
            check_expr_names(v.max, vp + ".max", tables, &t, false, "a variable range");
        }

        std::set<std::string> loc_names;
        if (t.locations.empty()) fail(tp, "template has no locations");
        for (const auto& l : t.locations) {
            std::string lp = tp + ".locations." + l.name;
            if (!loc_names.insert(l.name).second) fail(lp, "duplicate location");
            for (const auto& b : l.invariant) {
                if (!clock_set.count(b.clock))
                    fail(lp + ".invariant", "unknown clock '" + b.clock + "'");
                check_expr_names(b.bound, lp + ".invariant", tables, &t, false, "a clock bound");
            }
            for (const auto& [clk, rate] : l.rates) {
                if (!clock_set.count(clk)) fail(lp + ".rates", "unknown clock '" + clk + "'");
                check_expr_names(rate, lp + ".rates", tables, &t, false, "a rate");
            }
            if (l.exp_i) {
                check_expr_names(l.exp_i, lp + ".exp_rate", tables, &t, false, "an exp rate");
                check_expr_names(l.exp_j, lp + ".exp_rate", tables, &t, false, "an exp rate");
            }
        }
        if (!loc_names.count(t.initial)) fail(tp, "initial location '" + t.initial + "' not found");

        int k = 0;
        for (const auto& e : t.edges) {
            std::string ep = tp + ".edges[" + std::to_string(k++) + "]";
            if (!loc_names.count(e.from)) fail(ep, "unknown source location '" + e.from + "'");
            if (!loc_names.count(e.to)) fail(ep, "unknown target location '" + e.to + "'");
            for (const auto& b : e.guard_clocks) {
                if (!clock_set.count(b.clock))
                    fail(ep + ".guard_clocks", "unknown clock '" + b.clock + "'");
                check_expr_names(b.bound, ep + ".guard_clocks", tables, &t, false, "a clock bound");
            }
            check_expr_names(e.guard_data, ep + ".guard_data", tables, &t, true, "a data guard");
            if (e.sync.kind != SyncKind::None) {
                if (!tables.channels.count(e.sync.channel))
                    fail(ep + ".sync", "unknown channel '" + e.sync.channel + "'");
                check_expr_names(e.sync.index, ep + ".sync", tables, &t, true, "a channel index");
            }
            for (const auto& r : e.resets)
                if (!clock_set.count(r)) fail(ep + ".resets", "unknown clock '" + r + "'");
            for (const auto& u : e.updates) {
                bool declared = tables.globals.count(u.var) || local_set.count(u.var);
                if (!declared) fail(ep + ".updates", "unknown variable '" + u.var + "'");
                check_expr_names(u.value, ep + ".updates", tables, &t, true, "an update");
            }
            check_expr_names(e.weight, ep + ".weight", tables, &t, false, "a weight");
        }
    }

    int k = 0;
    for (const auto& inst : pm.instances) {
        std::string ip = "instances[" + std::to_string(k++) + "]";
        const TemplateDef* t = pm.find_template(inst.template_name);
        if (!t) fail(ip, "unknown template '" + inst.template_name + "'");
        if (inst.count) {
            if (!inst.args.empty()) fail(ip, "replicated instance cannot also list args");
            if (t->params.size() != 1)
                fail(ip, "replicated instantiation needs exactly one template parameter");
            check_expr_names(inst.count, ip + ".count", tables, nullptr, false, "a count");
        } else {
            if (inst.args.size() != t->params.size())
                fail(ip, "template '" + t->name + "' expects " +
                             std::to_string(t->params.size()) + " argument(s), got " +
                             std::to_string(inst.args.size()));
            for (const auto& a : inst.args)
                check_expr_names(a, ip + ".args", tables, nullptr, false, "an instance argument");
        }
    }
    if (pm.instances.empty()) fail("instances", "model declares no instances");
}

}  // namespace

const TemplateDef* ParametrizedModel::find_template(const std::string& name) const {
    for (const auto& t : templates)
        if (t.name == name) return &t;
    return nullptr;
}

// --- parsing ----------------------------------------------------------------

ParametrizedModel parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("", "syntax error at " + line_col(text, e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) throw ModelError("", "model document must be a JSON object");

    ParametrizedModel pm;
    if (doc.contains("constants")) {
        for (const auto& [name, val] : doc.at("constants").items()) {
            std::string path = "constants." + name;
            ConstDecl c;
            c.name = name;
            if (val.is_number_integer()) {
                c.value = ConstValue{val.get<long long>()};
            } else if (val.is_boolean()) {
                c.value = ConstValue{static_cast<long long>(val.get<bool>() ? 1 : 0)};
            } else if (val.is_array()) {
                c.value = ConstValue{parse_matrix_literal(val, path)};
            } else if (val.is_string()) {
                std::string s = val.get<std::string>();
                if (auto dom = parse_placeholder(s, path)) {
                    c.domain = dom;
                } else {
                    try {
                        c.expr = parse_expr(s);
                    } catch (const ExprError& e) {
                        fail(path, e.what());
                    }
                }
            } else {
                fail(path, "constant must be an integer, a matrix, a placeholder or an expression");
            }
            pm.constants.push_back(std::move(c));
        }
    }
    if (doc.contains("channels")) {
        for (const auto& ch : doc.at("channels")) {
            std::string path = "channels[" + std::to_string(pm.channels.size()) + "]";
            if (!ch.is_object() || !ch.contains("name")) fail(path, "channel needs {name}");
            ChannelDecl decl;
            decl.name = ch.at("name").get<std::string>();
            if (ch.contains("kind")) {
                std::string kind = ch.at("kind").get<std::string>();
                if (kind == "broadcast") decl.broadcast = true;
                else if (kind != "handshake") fail(path, "channel kind must be handshake|broadcast");
            }
            if (ch.contains("size")) decl.size = parse_expr_field(ch.at("size"), path + ".size");
            pm.channels.push_back(std::move(decl));
        }
    }
    if (doc.contains("variables")) {
        for (const auto& v : doc.at("variables")) {
            pm.globals.push_back(
                parse_var(v, "variables[" + std::to_string(pm.globals.size()) + "]"));
        }
    }
    if (doc.contains("templates")) {
        for (const auto& tj : doc.at("templates")) {
            std::string tp = "templates[" + std::to_string(pm.templates.size()) + "]";
            if (!tj.is_object() || !tj.contains("name")) fail(tp, "template needs {name}");
            TemplateDef t;
            t.name = tj.at("name").get<std::string>();
            tp = "templates." + t.name;
            if (tj.contains("params"))
                for (const auto& p : tj.at("params")) t.params.push_back(p.get<std::string>());
            if (tj.contains("clocks"))
                for (const auto& c : tj.at("clocks")) t.clocks.push_back(c.get<std::string>());
            if (tj.contains("variables"))
                for (const auto& v : tj.at("variables"))
                    t.locals.push_back(parse_var(v, tp + ".variables"));
            if (!tj.contains("locations")) fail(tp, "template needs locations");
            for (const auto& lj : tj.at("locations")) {
                std::string lp = tp + ".locations[" + std::to_string(t.locations.size()) + "]";
                if (!lj.is_object() || !lj.contains("name")) fail(lp, "location needs {name}");
                LocationDef l;
                l.name = lj.at("name").get<std::string>();
                if (lj.contains("invariant"))
                    l.invariant = parse_bounds(lj.at("invariant"), lp + ".invariant");
                if (lj.contains("rates")) {
                    for (const auto& [clk, r] : lj.at("rates").items())
                        l.rates.emplace_back(clk, parse_expr_field(r, lp + ".rates." + clk));
                }
                if (lj.contains("exp_rate")) {
                    const auto& er = lj.at("exp_rate");
                    if (!er.is_array() || er.size() != 2)
                        fail(lp + ".exp_rate", "exp_rate is a pair [i, j]");
                    l.exp_i = parse_expr_field(er[0], lp + ".exp_rate");
                    l.exp_j = parse_expr_field(er[1], lp + ".exp_rate");
                }
                t.locations.push_back(std::move(l));
            }
            if (!tj.contains("initial")) fail(tp, "template needs an initial location");
            t.initial = tj.at("initial").get<std::string>();
            if (tj.contains("edges")) {
                for (const auto& ej : tj.at("edges")) {
                    std::string ep = tp + ".edges[" + std::to_string(t.edges.size()) + "]";
                    if (!ej.is_object() || !ej.contains("from") || !ej.contains("to"))
                        fail(ep, "edge needs {from, to}");
                    EdgeDef e;
                    e.from = ej.at("from").get<std::string>();
                    e.to = ej.at("to").get<std::string>();
                    if (ej.contains("guard_clocks"))
                        e.guard_clocks = parse_bounds(ej.at("guard_clocks"), ep + ".guard_clocks");
                    if (ej.contains("guard_data"))
                        e.guard_data = parse_expr_field(ej.at("guard_data"), ep + ".guard_data");
                    if (ej.contains("sync"))
                        e.sync = parse_sync(ej.at("sync").get<std::string>(), ep + ".sync");
                    if (ej.contains("resets"))
                        for (const auto& r : ej.at("resets")) e.resets.push_back(r.get<std::string>());
                    if (ej.contains("updates"))
                        for (const auto& u : ej.at("updates"))
                            e.updates.push_back(parse_update(u, ep + ".updates"));
                    if (ej.contains("weight"))
                        e.weight = parse_expr_field(ej.at("weight"), ep + ".weight");
                    t.edges.push_back(std::move(e));
                }
            }
            pm.templates.push_back(std::move(t));
        }
    }
    if (doc.contains("instances")) {
        for (const auto& ij : doc.at("instances")) {
            std::string ip = "instances[" + std::to_string(pm.instances.size()) + "]";
            if (!ij.is_object() || !ij.contains("template")) fail(ip, "instance needs {template}");
            InstanceDef inst;
            inst.template_name = ij.at("template").get<std::string>();
            if (ij.contains("args"))
                for (const auto& a : ij.at("args"))
                    inst.args.push_back(parse_expr_field(a, ip + ".args"));
            if (ij.contains("count")) inst.count = parse_expr_field(ij.at("count"), ip + ".count");
            pm.instances.push_back(std::move(inst));
        }
    }

    validate_model(pm);
    return pm;
}

ParametrizedModel parse_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("", "cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

// --- serialization ----------------------------------------------------------

namespace {

json expr_json(const ExprPtr& e) {
    if (e->kind == Expr::Kind::Int) return e->value;
    return expr_to_string(*e);
}

json bounds_json(const std::vector<ClockBound>& bounds) {
    json arr = json::array();
    for (const auto& b : bounds)
        arr.push_back({{"clock", b.clock}, {"op", cmp_text(b.op)}, {"bound", expr_json(b.bound)}});
    return arr;
}

json var_json(const VarDecl& v) {
    return {{"name", v.name},
            {"init", expr_json(v.init)},
            {"min", expr_json(v.min)},
            {"max", expr_json(v.max)}};
}

std::string domain_text(const ParamDomain& d) {
    if (const auto* r = std::get_if<IntRangeDomain>(&d))
        return "#range(" + std::to_string(r->lo) + "," + std::to_string(r->hi) + ")";
    const auto& m = std::get<MatrixDomain>(d);
    std::string s = "#booleanmatrix(" + std::to_string(m.n);
    if (m.symmetric) s += ",symmetric";
    if (m.zero_diagonal) s += ",zerodiag";
    return s + ")";
}

json matrix_json(const BoolMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.n; ++i) {
        json row = json::array();
        for (int j = 0; j < m.n; ++j) row.push_back(m.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string serialize_model(const ParametrizedModel& pm) {
    json doc = json::object();
    json consts = json::object();
    for (const auto& c : pm.constants) {
        if (c.domain) consts[c.name] = domain_text(*c.domain);
        else if (c.expr) consts[c.name] = expr_to_string(*c.expr);
        else if (std::holds_alternative<long long>(*c.value))
            consts[c.name] = std::get<long long>(*c.value);
        else consts[c.name] = matrix_json(std::get<BoolMatrix>(*c.value));
    }
    doc["constants"] = std::move(consts);

    json chans = json::array();
    for (const auto& ch : pm.channels) {
        json c = {{"name", ch.name}, {"kind", ch.broadcast ? "broadcast" : "handshake"}};
        if (ch.size) c["size"] = expr_json(ch.size);
        chans.push_back(std::move(c));
    }
    doc["channels"] = std::move(chans);

    json globals = json::array();
    for (const auto& g : pm.globals) globals.push_back(var_json(g));
    doc["variables"] = std::move(globals);

    json templates = json::array();
    for (const auto& t : pm.templates) {
        json tj = {{"name", t.name}};
        tj["params"] = t.params;
        tj["clocks"] = t.clocks;
        json locals = json::array();
        for (const auto& v : t.locals) locals.push_back(var_json(v));
        tj["variables"] = std::move(locals);
        json locs = json::array();
        for (const auto& l : t.locations) {
            json lj = {{"name", l.name}};
            if (!l.invariant.empty()) lj["invariant"] = bounds_json(l.invariant);
            if (!l.rates.empty()) {
                json rates = json::object();
                for (const auto& [clk, r] : l.rates) rates[clk] = expr_json(r);
                lj["rates"] = std::move(rates);
            }
            if (l.exp_i) lj["exp_rate"] = json::array({expr_json(l.exp_i), expr_json(l.exp_j)});
            locs.push_back(std::move(lj));
        }
        tj["locations"] = std::move(locs);
        tj["initial"] = t.initial;
        json edges = json::array();
        for (const auto& e : t.edges) {
            json ej = {{"from", e.from}, {"to", e.to}};
            if (!e.guard_clocks.empty()) ej["guard_clocks"] = bounds_json(e.guard_clocks);
            if (e.guard_data) ej["guard_data"] = expr_to_string(*e.guard_data);
            if (e.sync.kind != SyncKind::None) {
                std::string s = e.sync.channel;
                if (e.sync.index) s += "[" + expr_to_string(*e.sync.index) + "]";
                s += e.sync.kind == SyncKind::Send ? '!' : '?';
                ej["sync"] = s;
            }
            if (!e.resets.empty()) ej["resets"] = e.resets;
            if (!e.updates.empty()) {
                json ups = json::array();
                for (const auto& u : e.updates)
                    ups.push_back(u.var + " = " + expr_to_string(*u.value));
                ej["updates"] = std::move(ups);
            }
            if (e.weight) ej["weight"] = expr_json(e.weight);
            edges.push_back(std::move(ej));
        }
        tj["edges"] = std::move(edges);
        templates.push_back(std::move(tj));
    }
    doc["templates"] = std::move(templates);

    json insts = json::array();
    for (const auto& i : pm.instances) {
        json ij = {{"template", i.template_name}};
        if (i.count) {
            ij["count"] = expr_json(i.count);
        } else {
            json args = json::array();
            for (const auto& a : i.args) args.push_back(expr_json(a));
            ij["args"] = std::move(args);
        }
        insts.push_back(std::move(ij));
    }
    doc["instances"] = std::move(insts);
    return doc.dump(2) + "\n";
}

// --- parameter space --------------------------------------------------------

unsigned long long domain_cardinality(const ParamDomain& d) {
    if (const auto* r = std::get_if<IntRangeDomain>(&d))
        return static_cast<unsigned long long>(r->hi - r->lo + 1);
    const auto& m = std::get<MatrixDomain>(d);
    int free_bits = 0;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            if (m.zero_diagonal && i == j) continue;
            if (m.symmetric && j < i) continue;
            ++free_bits;
        }
    if (free_bits >= 63) return ~0ULL >> 1;  // saturate
    return 1ULL << free_bits;
}

unsigned long long ParameterSpace::cardinality() const {
    unsigned long long total = 1;
    constexpr unsigned long long kMax = ~0ULL >> 1;
    for (const auto& [name, dom] : entries) {
        unsigned long long c = domain_cardinality(dom);
        if (c != 0 && total > kMax / c) return kMax;  // saturate
        total *= c;
    }
    return total;
}

ParameterSpace parameter_space(const ParametrizedModel& pm) {
    ParameterSpace space;
    for (const auto& c : pm.constants)
        if (c.domain) space.entries.emplace_back(c.name, *c.domain);
    return space;
}

namespace {

ConstValue domain_value(const ParamDomain& d, unsigned long long index) {
    if (const auto* r = std::get_if<IntRangeDomain>(&d))
        return ConstValue{r->lo + static_cast<long long>(index)};
    const auto& m = std::get<MatrixDomain>(d);
    BoolMatrix mat(m.n);
    // Count free cells in row-major order; the first free cell is the most
    // significant bit of the pattern.
    std::vector<std::pair<int, int>> free_cells;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            if (m.zero_diagonal && i == j) continue;
            if (m.symmetric && j < i) continue;
            free_cells.emplace_back(i, j);
        }
    const std::size_t k = free_cells.size();
    for (std::size_t b = 0; b < k; ++b) {
        bool bit = (index >> (k - 1 - b)) & 1ULL;
        auto [i, j] = free_cells[b];
        mat.set(i, j, bit);
        if (m.symmetric) mat.set(j, i, bit);
    }
    return ConstValue{std::move(mat)};
}

}  // namespace

bool value_in_domain(const ConstValue& v, const ParamDomain& d) {
    if (const auto* r = std::get_if<IntRangeDomain>(&d)) {
        const auto* iv = std::get_if<long long>(&v);
        return iv && *iv >= r->lo && *iv <= r->hi;
    }
    const auto& m = std::get<MatrixDomain>(d);
    const auto* mat = std::get_if<BoolMatrix>(&v);
    if (!mat || mat->n != m.n) return false;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            if (m.zero_diagonal && i == j && mat->at(i, j)) return false;
            if (m.symmetric && mat->at(i, j) != mat->at(j, i)) return false;
        }
    return true;
}

std::vector<Assignment> enumerate_assignments(const ParameterSpace& space) {
    const unsigned long long total = space.cardinality();
    if (total > (1ULL << 31))
        throw ModelError("", "parameter space cardinality " + std::to_string(total) +
                                 " exceeds the 2^31 enumeration limit");
    std::vector<unsigned long long> cards;
    cards.reserve(space.entries.size());
    for (const auto& [name, dom] : space.entries) cards.push_back(domain_cardinality(dom));

    std::vector<Assignment> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<unsigned long long> odo(space.entries.size(), 0);
    for (unsigned long long i = 0; i < total; ++i) {
        Assignment a;
        for (std::size_t k = 0; k < space.entries.size(); ++k)
            a.emplace(space.entries[k].first, domain_value(space.entries[k].second, odo[k]));
        out.push_back(std::move(a));
        // Last declared parameter varies fastest.
        for (std::size_t k = space.entries.size(); k-- > 0;) {
            if (++odo[k] < cards[k]) break;
            odo[k] = 0;
        }
    }
    return out;
}

ParametrizedModel apply_assignment(const ParametrizedModel& pm, const Assignment& a) {
    ParametrizedModel out = pm;
    for (auto& c : out.constants) {
        if (!c.domain) continue;
        auto it = a.find(c.name);
        if (it == a.end()) throw ModelError("constants." + c.name, "assignment misses parameter");
        if (!value_in_domain(it->second, *c.domain))
            throw ModelError("constants." + c.name, "assigned value outside the declared domain");
        c.value = it->second;
        c.domain.reset();
    }
    for (const auto& [name, value] : a) {
        bool known = std::any_of(pm.constants.begin(), pm.constants.end(),
                                 [&](const ConstDecl& c) { return c.name == name && c.domain; });
        if (!known) throw ModelError("", "assignment names unknown parameter '" + name + "'");
    }
    return out;
}

// --- instantiation ----------------------------------------------------------

namespace {

// Scope used while folding/compiling template expressions.
struct InstScope : ExprScope {
    const std::map<std::string, long long>* consts = nullptr;
    const std::map<std::string, long long>* args = nullptr;
    const std::map<std::string, int>* var_slots = nullptr;  // null = variables forbidden
    const std::map<std::string, int>* matrix_ids = nullptr;
    const std::vector<BoolMatrix>* matrices = nullptr;

    std::optional<long long> constant(const std::string& name) const override {
        if (args) {
            auto it = args->find(name);
            if (it != args->end()) return it->second;
        }
        if (consts) {
            auto it = consts->find(name);
            if (it != consts->end()) return it->second;
        }
        return std::nullopt;
    }
    int variable_slot(const std::string& name) const override {
        if (!var_slots) return -1;
        auto it = var_slots->find(name);
        return it == var_slots->end() ? -1 : it->second;
    }
    int matrix_slot(const std::string& name) const override {
        if (!matrix_ids) return -1;
        auto it = matrix_ids->find(name);
        return it == matrix_ids->end() ? -1 : it->second;
    }
    std::optional<bool> matrix_entry(int matrix, long long i, long long j) const override {
        const auto& m = (*matrices)[static_cast<std::size_t>(matrix)];
        if (i < 0 || j < 0 || i >= m.n || j >= m.n) return std::nullopt;
        return m.at(static_cast<int>(i), static_cast<int>(j));
    }
};

long long fold_const(const ExprPtr& e, const InstScope& scope, const std::string& path) {
    try {
        ExprPtr c = compile_expr(e, scope);
        if (c->kind != Expr::Kind::Int)
            fail(path, "expression '" + expr_to_string(*e) + "' is not constant");
        return c->value;
    } catch (const EvalError& err) {
        fail(path, err.what());
    }
}

}  // namespace

int RtInstance::find_location(const std::string& name) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
        if (locations[i].name == name) return static_cast<int>(i);
    return -1;
}

int RtInstance::find_clock(const std::string& name) const {
    for (std::size_t i = 0; i < clock_names.size(); ++i)
        if (clock_names[i] == name) return static_cast<int>(i);
    return -1;
}

int RtInstance::find_local(const std::string& name) const {
    for (std::size_t i = 0; i < local_names.size(); ++i)
        if (local_names[i] == name) return static_cast<int>(i);
    return -1;
}

int Network::find_instance(const std::string& tmpl, const std::vector<long long>& args) const {
    for (std::size_t i = 0; i < instances.size(); ++i)
        if (instances[i].template_name == tmpl && instances[i].args == args)
            return static_cast<int>(i);
    return -1;
}

int Network::find_global(const std::string& name) const {
    for (std::size_t i = 0; i < nglobals; ++i)
        if (vars[i].name == name) return static_cast<int>(i);
    return -1;
}

bool Network::matrix_lookup(const void* ctx, int matrix, long long i, long long j) {
    const auto* net = static_cast<const Network*>(ctx);
    const auto& m = net->matrices[static_cast<std::size_t>(matrix)];
    if (i < 0 || j < 0 || i >= m.n || j >= m.n)
        throw EvalError("matrix index out of range at runtime");
    return m.at(static_cast<int>(i), static_cast<int>(j));
}

Network instantiate(const ParametrizedModel& pm_in, const Assignment& a) {
    const ParametrizedModel pm = apply_assignment(pm_in, a);
    Network net;

    // Fold constants in document order.
    std::map<std::string, long long> consts;
    std::map<std::string, int> matrix_ids;
    for (const auto& c : pm.constants) {
        std::string path = "constants." + c.name;
        if (c.expr) {
            InstScope scope;
            scope.consts = &consts;
            scope.matrix_ids = &matrix_ids;
            scope.matrices = &net.matrices;
            consts[c.name] = fold_const(c.expr, scope, path);
            continue;
        }
        if (!c.value) fail(path, "unresolved placeholder (no assignment given)");
        if (const auto* iv = std::get_if<long long>(&*c.value)) {
            consts[c.name] = *iv;
        } else {
            matrix_ids[c.name] = static_cast<int>(net.matrices.size());
            net.matrices.push_back(std::get<BoolMatrix>(*c.value));
            net.matrix_names.push_back(c.name);
        }
    }

    InstScope const_scope;
    const_scope.consts = &consts;
    const_scope.matrix_ids = &matrix_ids;
    const_scope.matrices = &net.matrices;

    // Channels: flatten arrays into a contiguous id space.
    int chan_base = 0;
    for (const auto& ch : pm.channels) {
        ChannelInfo info;
        info.name = ch.name;
        info.broadcast = ch.broadcast;
        info.size = ch.size ? fold_const(ch.size, const_scope, "channels." + ch.name) : 0;
        if (info.size < 0) fail("channels." + ch.name, "channel size must be >= 0");
        info.base = chan_base;
        chan_base += static_cast<int>(info.size == 0 ? 1 : info.size);
        net.channels.push_back(std::move(info));
    }

    // Globals.
    for (const auto& g : pm.globals) {
        std::string path = "variables." + g.name;
        VarInfo v;
        v.name = g.name;
        v.init = fold_const(g.init, const_scope, path);
        v.min = fold_const(g.min, const_scope, path);
        v.max = fold_const(g.max, const_scope, path);
        if (v.min > v.max) fail(path, "min exceeds max");
        if (v.init < v.min || v.init > v.max) fail(path, "initial value outside declared range");
        net.vars.push_back(std::move(v));
    }
    net.nglobals = net.vars.size();

    // Expand instance definitions.
    struct Expansion {
        const TemplateDef* tmpl;
        std::vector<long long> args;
    };
    std::vector<Expansion> expansions;
    int idx = 0;
    for (const auto& inst : pm.instances) {
        std::string ip = "instances[" + std::to_string(idx++) + "]";
        const TemplateDef* t = pm.find_template(inst.template_name);
        if (inst.count) {
            long long n = fold_const(inst.count, const_scope, ip + ".count");
            if (n < 0) fail(ip, "instance count must be >= 0");
            for (long long k = 0; k < n; ++k) expansions.push_back({t, {k}});
        } else {
            std::vector<long long> args;
            for (const auto& ae : inst.args)
                args.push_back(fold_const(ae, const_scope, ip + ".args"));
            expansions.push_back({t, std::move(args)});
        }
    }
    if (expansions.empty()) fail("instances", "model instantiates no automata");

    std::map<std::string, int> global_slots;
    for (std::size_t i = 0; i < net.nglobals; ++i) global_slots[net.vars[i].name] = static_cast<int>(i);

    int clock_base = 1;  // slot 0 is `time`
    for (const auto& ex : expansions) {
        const TemplateDef& t = *ex.tmpl;
        RtInstance inst;
        inst.template_name = t.name;
        inst.args = ex.args;
        {
            std::string d = t.name + "(";
            for (std::size_t i = 0; i < ex.args.size(); ++i)
                d += (i ? "," : "") + std::to_string(ex.args[i]);
            inst.display = d + ")";
        }
        std::string ip = inst.display;

        std::map<std::string, long long> args;
        for (std::size_t i = 0; i < t.params.size(); ++i) args[t.params[i]] = ex.args[i];

        inst.clock_base = clock_base;
        inst.nclocks = static_cast<int>(t.clocks.size());
        inst.clock_names = t.clocks;
        clock_base += inst.nclocks;

        // Locals get fresh slots, shadowing globals by name.
        inst.var_base = static_cast<int>(net.vars.size());
        inst.nlocals = static_cast<int>(t.locals.size());
        std::map<std::string, int> var_slots = global_slots;
        {
            InstScope scope;
            scope.consts = &consts;
            scope.args = &args;
            scope.matrix_ids = &matrix_ids;
            scope.matrices = &net.matrices;
            for (const auto& l : t.locals) {
                std::string vp = ip + "." + l.name;
                VarInfo v;
                v.name = inst.display + "." + l.name;
                v.init = fold_const(l.init, scope, vp);
                v.min = fold_const(l.min, scope, vp);
                v.max = fold_const(l.max, scope, vp);
                if (v.min > v.max) fail(vp, "min exceeds max");
                if (v.init < v.min || v.init > v.max)
                    fail(vp, "initial value outside declared range");
                var_slots[l.name] = static_cast<int>(net.vars.size());
                inst.local_names.push_back(l.name);
                net.vars.push_back(std::move(v));
            }
        }

        InstScope cscope;  // constants + args only
        cscope.consts = &consts;
        cscope.args = &args;
        cscope.matrix_ids = &matrix_ids;
        cscope.matrices = &net.matrices;

        InstScope vscope = cscope;  // adds mutable variables
        vscope.var_slots = &var_slots;

        auto fold_bounds = [&](const std::vector<ClockBound>& in, const std::string& path) {
            std::vector<RtClockBound> out;
            for (const auto& b : in) {
                RtClockBound rb;
                rb.clock = inst.clock_base + inst.find_clock(b.clock);
                rb.op = b.op;
                rb.bound = fold_const(b.bound, cscope, path);
                out.push_back(rb);
            }
            return out;
        };

        for (const auto& l : t.locations) {
            std::string lp = ip + "." + l.name;
            RtLocation rl;
            rl.name = l.name;
            rl.invariant = fold_bounds(l.invariant, lp + ".invariant");
            rl.rates.assign(static_cast<std::size_t>(inst.nclocks), 1);
            for (const auto& [clk, r] : l.rates) {
                long long v = fold_const(r, cscope, lp + ".rates");
                if (v < 0) fail(lp + ".rates", "rate must be >= 0");
                rl.rates[static_cast<std::size_t>(inst.find_clock(clk))] = v;
            }
            if (l.exp_i) {
                long long i = fold_const(l.exp_i, cscope, lp + ".exp_rate");
                long long j = fold_const(l.exp_j, cscope, lp + ".exp_rate");
                if (i <= 0 || j <= 0) fail(lp + ".exp_rate", "exp rate i/j must be positive");
                rl.has_exp = true;
                rl.exp_rate = static_cast<double>(i) / static_cast<double>(j);
            }
            inst.locations.push_back(std::move(rl));
        }
        inst.initial_location = inst.find_location(t.initial);

        for (std::size_t k = 0; k < t.edges.size(); ++k) {
            const EdgeDef& e = t.edges[k];
            std::string ep = ip + ".edges[" + std::to_string(k) + "]";
            RtEdge re;
            re.from = inst.find_location(e.from);
            re.to = inst.find_location(e.to);
            re.guard_clocks = fold_bounds(e.guard_clocks, ep + ".guard_clocks");
            if (e.guard_data) {
                try {
                    re.guard_data = compile_expr(e.guard_data, vscope);
                } catch (const EvalError& err) {
                    fail(ep + ".guard_data", err.what());
                }
            }
            if (e.sync.kind != SyncKind::None) {
                re.sync = e.sync.kind;
                const ChannelInfo* ci = nullptr;
                for (const auto& c : net.channels)
                    if (c.name == e.sync.channel) ci = &c;
                re.channel_base = ci->base;
                re.channel_broadcast = ci->broadcast;
                if (e.sync.index) {
                    try {
                        re.channel_index = compile_expr(e.sync.index, vscope);
                    } catch (const EvalError& err) {
                        fail(ep + ".sync", err.what());
                    }
                    if (ci->size == 0) fail(ep + ".sync", "channel '" + ci->name + "' is scalar");
                    if (re.channel_index->kind == Expr::Kind::Int) {
                        long long v = re.channel_index->value;
                        if (v < 0 || v >= ci->size)
                            fail(ep + ".sync", "channel index out of range");
                    }
                } else if (ci->size != 0) {
                    fail(ep + ".sync", "channel '" + ci->name + "' is an array; index required");
                }
            }
            for (const auto& r : e.resets) re.resets.push_back(inst.clock_base + inst.find_clock(r));
            for (const auto& u : e.updates) {
                auto it = var_slots.find(u.var);
                try {
                    re.updates.emplace_back(it->second, compile_expr(u.value, vscope));
                } catch (const EvalError& err) {
                    fail(ep + ".updates", err.what());
                }
            }
            re.weight = e.weight ? fold_const(e.weight, cscope, ep + ".weight") : 1;
            if (re.weight < 1) fail(ep + ".weight", "edge weight must be >= 1 after instantiation");
            inst.locations[static_cast<std::size_t>(re.from)].out_edges.push_back(
                static_cast<int>(inst.edges.size()));
            inst.edges.push_back(std::move(re));
        }

        // Delay-distribution sanity: a location that can initiate an edge is
        // either bounded above through a positive-rate clock or carries
        // exp_rate. Receive-only locations are passive and need neither.
        for (auto& rl : inst.locations) {
            for (int ei : rl.out_edges)
                if (inst.edges[static_cast<std::size_t>(ei)].sync != SyncKind::Receive)
                    rl.active = true;
            bool bounded = false;
            for (const auto& b : rl.invariant) {
                if (b.op != CmpOp::Lt && b.op != CmpOp::Le) continue;
                long long rate = rl.rates[static_cast<std::size_t>(b.clock - inst.clock_base)];
                if (rate > 0) bounded = true;
            }
            std::string lp = ip + "." + rl.name;
            if (rl.has_exp && bounded)
                fail(lp, "exp_rate on a location whose invariant already bounds the delay");
            if (!rl.has_exp && !bounded && rl.active)
                fail(lp, "unbounded location with initiable edges needs exp_rate");
        }

        net.instances.push_back(std::move(inst));
    }
    net.nclocks = clock_base;
    return net;
}

}  // namespace psmc
