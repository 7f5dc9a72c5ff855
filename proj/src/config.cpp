#include "tfem/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tfem {

namespace {

struct KeyValue {
    std::string section;
    std::string key;
    std::string value;
    int line;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Sectioned key-value format: [section] headers, key = value lines,
// '#' comments. Duplicate keys are kept in order (inclusions repeat).
std::vector<KeyValue> tokenize(const std::string& text) {
    std::vector<KeyValue> out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError("unterminated section header", lineno,
                                 static_cast<int>(line.find('[')) + 1);
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ParseError("empty section name", lineno, 1);
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno, 1);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno, 1);
        out.push_back({section, key, value, lineno});
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

// Split on a separator at parenthesis depth zero (commas also appear inside
// pow(a, b)).
std::vector<std::string> split_top_level(const std::string& s, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_num(const KeyValue& kv, const std::string& word) {
    try {
        std::size_t used = 0;
        double v = std::stod(word, &used);
        if (used != word.size()) throw std::invalid_argument("trail");
        return v;
    } catch (...) {
        throw ParseError("invalid number '" + word + "' for key '" + kv.key + "'", kv.line, 1);
    }
}

long parse_int(const KeyValue& kv, const std::string& word) {
    try {
        std::size_t used = 0;
        long v = std::stol(word, &used);
        if (used != word.size()) throw std::invalid_argument("trail");
        return v;
    } catch (...) {
        throw ParseError("invalid integer '" + word + "' for key '" + kv.key + "'", kv.line, 1);
    }
}

InterfaceCurve parse_curve(const KeyValue& kv, const std::vector<std::string>& w, int& parent) {
    parent = -1;
    std::vector<std::string> args;
    for (const auto& word : w) {
        if (word.rfind("parent=", 0) == 0) {
            parent = static_cast<int>(parse_int(kv, word.substr(7))) - 1;
        } else {
            args.push_back(word);
        }
    }
    if (args.empty()) throw ParseError("missing curve kind for '" + kv.key + "'", kv.line, 1);
    const std::string& kind = args[0];
    if (kind == "circle") {
        if (args.size() != 4)
            throw ParseError("circle expects: circle cx cy r", kv.line, 1);
        return InterfaceCurve::circle(Vec2(parse_num(kv, args[1]), parse_num(kv, args[2])),
                                      parse_num(kv, args[3]));
    }
    if (kind == "ellipse") {
        if (args.size() != 5)
            throw ParseError("ellipse expects: ellipse cx cy a b", kv.line, 1);
        return InterfaceCurve::ellipse(Vec2(parse_num(kv, args[1]), parse_num(kv, args[2])),
                                       parse_num(kv, args[3]), parse_num(kv, args[4]));
    }
    if (kind == "perturbed") {
        if (args.size() < 5)
            throw ParseError("perturbed expects: perturbed cx cy R alpha [freq:amp ...]",
                             kv.line, 1);
        std::vector<InterfaceCurve::Perturbation> terms;
        for (std::size_t i = 5; i < args.size(); ++i) {
            std::size_t colon = args[i].find(':');
            if (colon == std::string::npos)
                throw ParseError("perturbation term must be freq:amp", kv.line, 1);
            terms.push_back({static_cast<int>(parse_int(kv, args[i].substr(0, colon))),
                             parse_num(kv, args[i].substr(colon + 1))});
        }
        return InterfaceCurve::perturbed_circle(
            Vec2(parse_num(kv, args[1]), parse_num(kv, args[2])), parse_num(kv, args[3]),
            std::move(terms), parse_num(kv, args[4]));
    }
    throw ParseError("unknown curve kind '" + kind + "'", kv.line, 1);
}

void validate_expression(const std::string& expr, const std::string& key) {
    try {
        Expression::parse(expr);
    } catch (const ParseError& e) {
        throw ValidationError("key '" + key + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    cfg.raw_text = text;
    auto kvs = tokenize(text);

    std::optional<DomainPartition::Outer> outer;
    std::vector<InterfaceCurve> inclusions;
    std::vector<int> parents;
    std::vector<std::pair<int, std::string>> A_kv, F_kv, f_kv;  // subdomain index -> expr
    std::vector<std::pair<int, std::string>> g_kv;              // interface index -> expr

    for (const auto& kv : kvs) {
        if (kv.section == "domain") {
            if (kv.key == "outer") {
                auto w = split_ws(kv.value);
                if (!w.empty() && w[0] == "box") {
                    if (w.size() != 5)
                        throw ParseError("box expects: box x0 y0 x1 y1", kv.line, 1);
                    outer = Box{Vec2(parse_num(kv, w[1]), parse_num(kv, w[2])),
                                Vec2(parse_num(kv, w[3]), parse_num(kv, w[4]))};
                } else {
                    int dummy;
                    outer = parse_curve(kv, w, dummy);
                }
            } else if (kv.key == "inclusion") {
                int parent;
                inclusions.push_back(parse_curve(kv, split_ws(kv.value), parent));
                parents.push_back(parent);
            } else {
                throw ValidationError("unknown key '" + kv.key + "' in [domain]");
            }
        } else if (kv.section == "coefficients") {
            if (kv.key == "n") {
                cfg.n = static_cast<int>(parse_int(kv, kv.value));
            } else if (kv.key == "kappa") {
                cfg.kappa = parse_num(kv, kv.value);
            } else if (kv.key.rfind("A.", 0) == 0) {
                A_kv.emplace_back(parse_int(kv, kv.key.substr(2)), kv.value);
            } else if (kv.key.rfind("F.", 0) == 0) {
                F_kv.emplace_back(parse_int(kv, kv.key.substr(2)), kv.value);
            } else if (kv.key.rfind("f.", 0) == 0) {
                f_kv.emplace_back(parse_int(kv, kv.key.substr(2)), kv.value);
            } else {
                throw ValidationError("unknown key '" + kv.key + "' in [coefficients]");
            }
        } else if (kv.section.rfind("interface.", 0) == 0) {
            int id = static_cast<int>(parse_int(kv, kv.section.substr(10)));
            if (kv.key != "g")
                throw ValidationError("unknown key '" + kv.key + "' in [" + kv.section + "]");
            g_kv.emplace_back(id, kv.value);
        } else if (kv.section == "solver") {
            if (kv.key == "basis") {
                long b = parse_int(kv, kv.value);
                if (b != 1 && b != 2) throw ValidationError("key 'basis': must be 1 or 2");
                cfg.basis = b == 1 ? Basis::P1 : Basis::P2;
            } else if (kv.key == "tol_lin") {
                cfg.tol_lin = parse_num(kv, kv.value);
            } else if (kv.key == "quad_degree") {
                cfg.quad_degree = static_cast<int>(parse_int(kv, kv.value));
            } else if (kv.key == "h_target") {
                cfg.h_target = parse_num(kv, kv.value);
            } else if (kv.key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(parse_int(kv, kv.value));
            } else {
                throw ValidationError("unknown key '" + kv.key + "' in [solver]");
            }
        } else if (kv.section == "campaign") {
            if (kv.key == "kind") {
                cfg.kind = kv.value;
            } else if (kv.key == "levels") {
                cfg.levels = static_cast<int>(parse_int(kv, kv.value));
            } else if (kv.key == "alpha") {
                cfg.holder_alpha = parse_num(kv, kv.value);
            } else if (kv.key == "manufactured") {
                cfg.manufactured = kv.value;
            } else if (kv.key == "out") {
                cfg.out_dir = kv.value;
            } else if (kv.key == "probe_center") {
                auto parts = split_top_level(kv.value, ',');
                if (parts.size() != 2)
                    throw ParseError("probe_center expects 'x, y'", kv.line, 1);
                cfg.probe_center = Vec2(parse_num(kv, parts[0]), parse_num(kv, parts[1]));
            } else if (kv.key == "probe_mu") {
                cfg.probe_mu = parse_num(kv, kv.value);
            } else if (kv.key == "probe_r0") {
                cfg.probe_r0 = parse_num(kv, kv.value);
            } else if (kv.key == "probe_levels") {
                cfg.probe_levels = static_cast<int>(parse_int(kv, kv.value));
            } else if (kv.key == "probe_subdomain") {
                cfg.probe_subdomain = static_cast<int>(parse_int(kv, kv.value));
            } else {
                throw ValidationError("unknown key '" + kv.key + "' in [campaign]");
            }
        } else if (kv.section.empty()) {
            throw ParseError("key outside any section", kv.line, 1);
        } else {
            throw ValidationError("unknown section [" + kv.section + "]");
        }
    }

    static const char* kinds[] = {"solve", "compare", "convergence", "probe", "mesh-info"};
    bool known = false;
    for (const char* k : kinds) known |= cfg.kind == k;
    if (!known) throw ValidationError("key 'kind': unknown campaign kind '" + cfg.kind + "'");
    if (!cfg.manufactured.empty() && cfg.manufactured != "ms1")
        throw ValidationError("key 'manufactured': unknown instance '" + cfg.manufactured +
                              "' (available: ms1)");
    if (cfg.kind == "convergence" && cfg.manufactured.empty())
        throw ValidationError(
            "key 'kind': the convergence campaign requires 'manufactured = ms1'");
    if (cfg.n < 1) throw ValidationError("key 'n': must be >= 1");
    if (cfg.kappa <= 0) throw ValidationError("key 'kappa': must be positive");
    if (cfg.h_target <= 0) throw ValidationError("key 'h_target': must be positive");
    if (cfg.levels < 1) throw ValidationError("key 'levels': must be >= 1");

    if (cfg.manufactured.empty()) {
        if (!outer) throw ValidationError("key 'outer': missing in [domain]");
        cfg.partition.emplace(std::move(*outer), std::move(inclusions), std::move(parents));
        int m = cfg.partition->num_subdomains();
        int ni = cfg.partition->num_inclusions();
        cfg.A_expr.assign(m, "1");
        cfg.F_expr.assign(m, "");
        cfg.f_expr.assign(m, "");
        cfg.g_expr.assign(ni, "");
        auto check_and_place = [&](const std::vector<std::pair<int, std::string>>& kvlist,
                                   std::vector<std::string>& dst, const char* prefix, int count,
                                   int arity) {
            for (const auto& [idx, expr] : kvlist) {
                if (idx < 1 || idx > count)
                    throw ValidationError(std::string("key '") + prefix + "." +
                                          std::to_string(idx) + "': index out of range (1.." +
                                          std::to_string(count) + ")");
                auto parts = split_top_level(expr, ',');
                if (static_cast<int>(parts.size()) != arity)
                    throw ValidationError(std::string("key '") + prefix + "." +
                                          std::to_string(idx) + "': expected " +
                                          std::to_string(arity) + " expression(s)");
                for (const auto& p : parts)
                    validate_expression(p, std::string(prefix) + "." + std::to_string(idx));
                dst[idx - 1] = expr;
            }
        };
        check_and_place(A_kv, cfg.A_expr, "A", m, 1);
        check_and_place(F_kv, cfg.F_expr, "F", m, 2 * cfg.n);
        check_and_place(f_kv, cfg.f_expr, "f", m, cfg.n);
        check_and_place(g_kv, cfg.g_expr, "g", ni, cfg.n);
    } else {
        if (outer || !inclusions.empty())
            throw ValidationError("section [domain]: not allowed together with 'manufactured'");
        if (!A_kv.empty() || !F_kv.empty() || !f_kv.empty() || !g_kv.empty())
            throw ValidationError(
                "section [coefficients]/[interface.*]: not allowed together with "
                "'manufactured'");
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

TransmissionProblem RunConfig::build_problem() const {
    if (uses_manufactured()) {
        ManufacturedSolution ms = build_manufactured();
        return TransmissionProblem{std::move(ms.partition), std::move(ms.data), 0.9};
    }
    if (!partition) throw ValidationError("config has no domain");
    const int m = partition->num_subdomains();
    const int ni = partition->num_inclusions();
    CoefficientField coeff(n, m, ni);
    for (int j = 1; j <= m; ++j) {
        Expression a = Expression::parse(A_expr[j - 1]);
        coeff.set_scalar(j, [a](const Vec2& p) { return a.eval_at(p); });
        if (!F_expr[j - 1].empty()) {
            auto parts = split_top_level(F_expr[j - 1], ',');
            std::vector<Expression> ex;
            for (const auto& p : parts) ex.push_back(Expression::parse(p));
            coeff.set_flux(j, [ex](const Vec2& p, double* out) {
                EvalContext ctx = EvalContext::at_point(p);
                for (std::size_t i = 0; i < ex.size(); ++i) out[i] = ex[i].eval(ctx);
            });
        }
        if (!f_expr[j - 1].empty()) {
            auto parts = split_top_level(f_expr[j - 1], ',');
            std::vector<Expression> ex;
            for (const auto& p : parts) ex.push_back(Expression::parse(p));
            coeff.set_source(j, [ex](const Vec2& p, double* out) {
                EvalContext ctx = EvalContext::at_point(p);
                for (std::size_t i = 0; i < ex.size(); ++i) out[i] = ex[i].eval(ctx);
            });
        }
    }
    for (int i = 0; i < ni; ++i) {
        if (g_expr[i].empty()) continue;
        auto parts = split_top_level(g_expr[i], ',');
        std::vector<Expression> ex;
        for (const auto& p : parts) ex.push_back(Expression::parse(p));
        Vec2 center = partition->inclusion(i).center();
        coeff.set_interface_data(i, [ex, center](const Vec2& p, double theta, double* out) {
            // On interfaces theta is the curve parameter; r is measured from
            // the curve center.
            EvalContext ctx;
            ctx.x = p.x();
            ctx.y = p.y();
            ctx.r = (p - center).norm();
            ctx.theta = theta;
            for (std::size_t i2 = 0; i2 < ex.size(); ++i2) out[i2] = ex[i2].eval(ctx);
        });
    }
    return TransmissionProblem{*partition, std::move(coeff), kappa};
}

ManufacturedSolution RunConfig::build_manufactured() const {
    if (manufactured == "ms1") return ms1();
    throw ValidationError("unknown manufactured instance '" + manufactured + "'");
}

SolveOptions RunConfig::solve_options() const {
    SolveOptions opts;
    opts.basis = basis;
    opts.tol_lin = tol_lin;
    opts.quad_degree = quad_degree;
    opts.label = std::to_string(fnv1a(raw_text));
    return opts;
}

}  // namespace tfem
