#include "graphfv_cli/config.hpp"

#include <graphfv/errors.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>

namespace graphfv::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string strip_spaces(std::string_view s) {
    std::string out;
    for (char ch : s)
        if (ch != ' ' && ch != '\t') out += ch;
    return out;
}

std::optional<double> time_unit(std::string_view u) {
    if (u == "s") return 1.0;
    if (u == "ms") return 1e-3;
    if (u == "us" || u == "\xc2\xb5s") return 1e-6;
    if (u == "ns") return 1e-9;
    return std::nullopt;
}

std::optional<double> length_unit(std::string_view u) {
    if (u == "m") return 1.0;
    if (u == "cm") return 1e-2;
    if (u == "mm") return 1e-3;
    if (u == "um" || u == "\xc2\xb5m") return 1e-6;
    return std::nullopt;
}

std::optional<double> field_unit(std::string_view u) {
    if (u == "kV") return 1.0;
    if (u == "V") return 1e-3;
    if (u == "MV") return 1e3;
    return std::nullopt;
}

/// "<len>2" -> square of the length factor.
std::optional<double> area_unit(std::string_view u) {
    if (u.size() < 2) return std::nullopt;
    std::string_view base = u;
    if (base.ends_with("^2"))
        base.remove_suffix(2);
    else if (base.ends_with("2"))
        base.remove_suffix(1);
    else
        return std::nullopt;
    const auto f = length_unit(base);
    if (!f) return std::nullopt;
    return *f * *f;
}

std::optional<double> diffusivity_unit(std::string_view u) {
    const auto slash = u.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    const auto a = area_unit(u.substr(0, slash));
    const auto t = time_unit(u.substr(slash + 1));
    if (!a || !t) return std::nullopt;
    return *a / *t;
}

/// m2/(kV*s) or m2/kV/s.
std::optional<double> mobility_unit(std::string_view u) {
    const auto slash = u.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    const auto a = area_unit(u.substr(0, slash));
    if (!a) return std::nullopt;
    std::string_view rest = u.substr(slash + 1);
    std::string_view fpart, tpart;
    if (rest.starts_with("(") && rest.ends_with(")")) {
        rest = rest.substr(1, rest.size() - 2);
        const auto star = rest.find('*');
        if (star == std::string_view::npos) return std::nullopt;
        fpart = rest.substr(0, star);
        tpart = rest.substr(star + 1);
    } else {
        const auto s2 = rest.find('/');
        if (s2 == std::string_view::npos) return std::nullopt;
        fpart = rest.substr(0, s2);
        tpart = rest.substr(s2 + 1);
    }
    const auto f = field_unit(fpart);
    const auto t = time_unit(tpart);
    if (!f || !t) return std::nullopt;
    return *a / (*f * *t);
}

std::optional<double> concentration_unit(std::string_view u) {
    if (u.empty() || u == "1") return 1.0;
    if (u.starts_with("1/")) {
        const auto a = area_unit(u.substr(2));
        if (a) return 1.0 / *a;
    }
    return std::nullopt;
}

const char* dimension_name(Dimension d) {
    switch (d) {
        case Dimension::time: return "time";
        case Dimension::length: return "length";
        case Dimension::diffusivity: return "diffusivity";
        case Dimension::mobility: return "mobility";
        case Dimension::field: return "field";
        case Dimension::concentration: return "concentration";
    }
    return "?";
}

std::pair<double, std::string> split_quantity(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty()) throw Error("empty value");
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw Error("expected a number in '" + s + "'");
    if (!std::isfinite(v)) throw Error("value '" + s + "' is not finite");
    return {v, strip_spaces(std::string_view(end))};
}

double parse_real(std::string_view text) {
    auto [v, unit] = split_quantity(text);
    if (!unit.empty()) throw Error("unexpected trailing text '" + unit + "'");
    return v;
}

bool parse_bool(std::string_view text) {
    const std::string s = trim(text);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw Error("expected a boolean, got '" + s + "'");
}

template <class T>
T parse_unsigned(std::string_view text) {
    const std::string s = trim(text);
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw Error("expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto stop = comma == std::string_view::npos ? text.size() : comma;
        const std::string item = trim(text.substr(start, stop - start));
        if (item.empty()) throw Error("empty list item");
        out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"problem", {"case", "graph", "kind", "norm"}},
        {"mesh", {"h"}},
        {"time", {"dt", "t_end"}},
        {"boundary", {"profile", "value", "duration", "initial", "source"}},
        {"output", {"directory", "snapshot_every", "snapshots", "export_matrix", "positivity"}},
        {"generator",
         {"depth", "branching", "trunk", "mobility", "root_field", "diffusivity", "inflow", "length_min",
          "length_max", "seed"}},
        {"convergence", {"h", "dt"}},
    };
    return keys;
}

}  // namespace

double unit_factor(std::string_view unit, Dimension dim) {
    const std::string u = strip_spaces(unit);
    std::optional<double> f;
    switch (dim) {
        case Dimension::time: f = time_unit(u); break;
        case Dimension::length: f = length_unit(u); break;
        case Dimension::diffusivity: f = diffusivity_unit(u); break;
        case Dimension::mobility: f = mobility_unit(u); break;
        case Dimension::field: f = field_unit(u); break;
        case Dimension::concentration: f = concentration_unit(u); break;
    }
    if (!f) {
        if (u.empty()) throw Error(std::string("missing ") + dimension_name(dim) + " unit");
        throw Error(std::string("unknown ") + dimension_name(dim) + " unit '" + u + "'");
    }
    return *f;
}

double parse_quantity(std::string_view text, Dimension dim) {
    const auto [v, unit] = split_quantity(text);
    return v * unit_factor(unit, dim);
}

IniFile IniFile::parse(std::istream& is) {
    IniFile ini;
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(lineno, "unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            if (section.empty()) throw ParseError(lineno, "empty section name");
            ini.data_[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected `key = value`");
        if (section.empty()) throw ParseError(lineno, "key outside of a section");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ParseError(lineno, "empty key");
        auto& sec = ini.data_[section];
        if (const auto it = sec.find(key); it != sec.end())
            throw ParseError(lineno, "duplicate key " + key + " (first set on line " + std::to_string(it->second.line) + ")");
        sec.emplace(key, Entry{value, lineno});
    }
    return ini;
}

IniFile IniFile::read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config " + path.string());
    return parse(is);
}

const IniFile::Entry* IniFile::find(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s == data_.end()) return nullptr;
    const auto e = s->second.find(key);
    return e == s->second.end() ? nullptr : &e->second;
}

RunConfig parse_config(const IniFile& ini, const std::filesystem::path& base_dir) {
    const auto& allowed = allowed_keys();
    for (const auto& [name, sec] : ini.sections()) {
        const auto a = allowed.find(name);
        if (a == allowed.end()) {
            const std::size_t line = sec.empty() ? 0 : sec.begin()->second.line;
            throw ParseError(line, "unknown section [" + name + "]");
        }
        for (const auto& [key, entry] : sec)
            if (!a->second.count(key)) throw ParseError(entry.line, "unknown key " + key + " in [" + name + "]");
    }

    RunConfig cfg;
    // Runs `parse` on the entry if present, tagging failures with the line.
    auto with = [&](const char* section, const char* key, auto&& parse) {
        const IniFile::Entry* e = ini.find(section, key);
        if (!e) return false;
        try {
            parse(e->value);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ParseError(e->line, std::string(key) + ": " + ex.what());
        }
        return true;
    };
    auto quantity = [&](const char* section, const char* key, Dimension dim, auto&& store) {
        return with(section, key, [&](const std::string& v) {
            const auto [num, unit] = split_quantity(v);
            const double f = unit_factor(unit, dim);
            if (f != 1.0) cfg.conversions.emplace_back(std::string(section) + "." + key, f);
            store(num * f);
        });
    };
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };

    with("problem", "case", [&](const std::string& v) {
        if (!is_builtin_case(v) && v != "TC5-synth") throw Error("unknown builtin case '" + v + "'");
        cfg.case_label = v;
    });
    with("problem", "graph", [&](const std::string& v) { cfg.graph_path = resolve(v); });
    with("problem", "kind", [&](const std::string& v) {
        cfg.kind = parse_problem_kind(v);
        if (!cfg.kind) throw Error("unknown problem kind '" + v + "'");
    });
    with("problem", "norm", [&](const std::string& v) {
        if (v == "absolute")
            cfg.norm = ErrorNorm::absolute;
        else if (v == "normalized")
            cfg.norm = ErrorNorm::normalized;
        else
            throw Error("norm must be absolute or normalized");
    });
    if (cfg.case_label.empty() == cfg.graph_path.empty())
        throw ParseError(0, "[problem] needs exactly one of `case` and `graph`");
    if (!cfg.graph_path.empty() && !cfg.kind) throw ParseError(0, "[problem] kind is required with a graph file");

    quantity("mesh", "h", Dimension::length, [&](double v) {
        if (!(v > 0.0)) throw Error("h must be positive");
        cfg.h = v;
    });

    if (!quantity("time", "dt", Dimension::time, [&](double v) {
            if (!(v > 0.0)) throw Error("dt must be positive");
            cfg.dt = v;
        }) &&
        !ini.find("convergence", "dt"))
        throw ParseError(0, "[time] dt is required");
    quantity("time", "t_end", Dimension::time, [&](double v) {
        if (!(v > 0.0)) throw Error("t_end must be positive");
        cfg.t_end = v;
    });

    for (const char* key : {"profile", "value", "duration", "initial", "source"})
        if (ini.find("boundary", key)) cfg.has_boundary = true;
    with("boundary", "profile", [&](const std::string& v) {
        if (v == "constant")
            cfg.profile = BoundaryProfile::constant;
        else if (v == "ramp")
            cfg.profile = BoundaryProfile::ramp;
        else if (v == "pulse")
            cfg.profile = BoundaryProfile::pulse;
        else
            throw Error("profile must be constant, ramp or pulse");
    });
    quantity("boundary", "value", Dimension::concentration, [&](double v) {
        if (v < 0.0) throw Error("boundary value must be nonnegative");
        cfg.boundary_value = v;
    });
    quantity("boundary", "duration", Dimension::time, [&](double v) {
        if (!(v > 0.0)) throw Error("duration must be positive");
        cfg.profile_duration = v;
    });
    quantity("boundary", "initial", Dimension::concentration, [&](double v) {
        if (v < 0.0) throw Error("initial value must be nonnegative");
        cfg.initial_value = v;
    });
    with("boundary", "source", [&](const std::string& v) {
        cfg.source = parse_real(v);
        if (cfg.source < 0.0) throw Error("source must be nonnegative");
    });

    with("output", "directory", [&](const std::string& v) { cfg.output_dir = resolve(v); });
    with("output", "snapshot_every", [&](const std::string& v) { cfg.snapshot_every = parse_unsigned<std::size_t>(v); });
    with("output", "snapshots", [&](const std::string& v) { cfg.write_snapshots = parse_bool(v); });
    with("output", "export_matrix", [&](const std::string& v) { cfg.export_matrix = parse_bool(v); });
    with("output", "positivity", [&](const std::string& v) {
        if (v == "warn")
            cfg.positivity = PositivityMode::warn;
        else if (v == "strict")
            cfg.positivity = PositivityMode::strict;
        else
            throw Error("positivity must be warn or strict");
    });

    TreeingConfig& g = cfg.generator;
    with("generator", "depth", [&](const std::string& v) {
        g.depth = parse_unsigned<unsigned>(v);
        if (g.depth < 1) throw Error("depth must be at least 1");
    });
    with("generator", "branching", [&](const std::string& v) {
        g.branching = parse_unsigned<unsigned>(v);
        if (g.branching < 1) throw Error("branching must be at least 1");
    });
    with("generator", "trunk", [&](const std::string& v) { g.trunk = parse_bool(v); });
    with("generator", "seed", [&](const std::string& v) { g.seed = parse_unsigned<std::uint64_t>(v); });
    auto positive = [](double& slot, const char* what) {
        return [&slot, what](double v) {
            if (!(v > 0.0)) throw Error(std::string(what) + " must be positive");
            slot = v;
        };
    };
    quantity("generator", "mobility", Dimension::mobility, positive(g.mobility, "mobility"));
    quantity("generator", "root_field", Dimension::field, positive(g.root_field, "root_field"));
    quantity("generator", "diffusivity", Dimension::diffusivity, positive(g.diffusivity, "diffusivity"));
    quantity("generator", "inflow", Dimension::concentration, positive(g.inflow, "inflow"));
    quantity("generator", "length_min", Dimension::length, positive(g.length_min, "length_min"));
    quantity("generator", "length_max", Dimension::length, positive(g.length_max, "length_max"));
    if (g.length_min > g.length_max) throw ParseError(0, "length_min exceeds length_max");

    auto list = [&](const char* key, Dimension dim, std::vector<double>& out) {
        with("convergence", key, [&](const std::string& v) {
            for (const std::string& item : split_list(v)) {
                const double x = parse_quantity(item, dim);
                if (!(x > 0.0)) throw Error(std::string(key) + " must be positive");
                out.push_back(x);
            }
        });
    };
    list("h", Dimension::length, cfg.study_h);
    list("dt", Dimension::time, cfg.study_dt);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(IniFile::read(path), path.parent_path());
}

TestCase make_problem(const RunConfig& cfg) {
    TestCase tc;
    if (cfg.case_label == "TC5-synth") {
        tc = treeing_case(cfg.generator, cfg.t_end.value_or(500.0));
    } else if (!cfg.case_label.empty()) {
        tc = builtin_case(cfg.case_label);
        if (cfg.t_end) tc.t_end = *cfg.t_end;
    } else {
        tc.label = cfg.graph_path.stem().string();
        tc.kind = *cfg.kind;
        tc.graph = read_graph(cfg.graph_path);
        const double v = cfg.boundary_value;
        const double d = cfg.profile_duration;
        TimeFunction f;
        switch (cfg.profile) {
            case BoundaryProfile::constant: f = [v](double) { return v; }; break;
            case BoundaryProfile::ramp: f = [v, d](double t) { return v * std::min(1.0, t / d); }; break;
            case BoundaryProfile::pulse: f = [v, d](double t) { return t <= d ? v : 0.0; }; break;
        }
        for (NodeId n : tc.graph.nodes_with_role(NodeRole::dirichlet_source)) tc.bc.dirichlet[n] = f;
        if (cfg.source > 0.0) tc.bc.source = [s = cfg.source](EdgeId, double) { return s; };
        tc.u0 = [u = cfg.initial_value](const EdgePlace&) { return u; };
        tc.t_end = cfg.t_end.value_or(1.0);
        if (cfg.norm) tc.norm = *cfg.norm;
        return tc;
    }
    if (cfg.kind && *cfg.kind != tc.kind)
        throw Error("case " + tc.label + " is a " + std::string(to_string(tc.kind)) + " problem");
    if (cfg.has_boundary) throw Error("boundary data is fixed by case " + tc.label);
    if (cfg.norm) tc.norm = *cfg.norm;
    return tc;
}

}  // namespace graphfv::cli
