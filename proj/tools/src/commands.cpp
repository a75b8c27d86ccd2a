#include "graphfv_cli/commands.hpp"

#include "graphfv_cli/config.hpp"

#include <graphfv/certificates.hpp>
#include <graphfv/errors.hpp>
#include <graphfv/io.hpp>
#include <graphfv/sparse_matrix.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace graphfv::cli {

namespace {

using json = nlohmann::ordered_json;

void create_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

RunConfig configure(const std::filesystem::path& config, const Overrides& ov) {
    RunConfig cfg = load_config(config);
    if (ov.output) cfg.output_dir = *ov.output;
    if (ov.strict_positivity) cfg.positivity = PositivityMode::strict;
    if (ov.seed) cfg.generator.seed = *ov.seed;
    return cfg;
}

json metadata(const RunConfig& cfg, const TestCase& tc) {
    json units = json::object();
    units["time"] = "s";
    units["length"] = "m";
    units["field"] = "kV";
    json conv = json::object();
    for (const auto& [key, f] : cfg.conversions) conv[key] = f;
    json j;
    j["case"] = tc.label;
    j["kind"] = std::string(to_string(tc.kind));
    j["internal_units"] = units;
    j["conversions"] = conv;
    if (cfg.case_label == "TC5-synth") {
        const TreeingConfig& g = cfg.generator;
        j["generator"] = {{"depth", g.depth},           {"branching", g.branching},   {"trunk", g.trunk},
                          {"seed", g.seed},             {"mobility", g.mobility},     {"root_field", g.root_field},
                          {"diffusivity", g.diffusivity}, {"inflow", g.inflow},     {"length_min", g.length_min},
                          {"length_max", g.length_max}};
    }
    return j;
}

/// Catches library errors and maps them to exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const PositivityError& e) {
        err << "positivity violation: " << e.what() << '\n';
        return exit_positivity;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_error;
    }
}

}  // namespace

int cmd_run(const std::filesystem::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = std::chrono::steady_clock::now();
        const RunConfig cfg = configure(config, ov);
        if (!(cfg.dt > 0.0)) throw Error("dt must be positive");
        const TestCase tc = make_problem(cfg);

        RunOptions opts;
        opts.snapshot_every = cfg.snapshot_every;
        opts.step.positivity = cfg.positivity;
        const CaseRun cr = run_case(tc, cfg.h, cfg.dt, opts);
        const Graph& g = cr.mesh.graph;

        create_dir(cfg.output_dir);
        if (cfg.export_matrix) write_triplets(cfg.output_dir / "matrix.txt", assemble(g, tc.kind, cfg.dt).matrix);
        if (cfg.write_snapshots) write_snapshots(cr.result.snapshots, g, cfg.output_dir / "snapshots");

        double residual = 0.0;
        for (const SolutionState& s : cr.result.snapshots)
            for (const auto& [node, r] : junction_residuals(s, g, tc.kind)) residual = std::max(residual, r);

        json summary;
        summary["case"] = tc.label;
        summary["n_edges"] = g.num_edges();
        summary["n_steps"] = cr.result.steps;
        if (cr.error) summary["error"] = *cr.error;
        summary["min_u"] = cr.result.min_u;
        summary["max_u"] = cr.result.max_u;
        summary["mass_final"] = cr.result.final_state.mass(g);
        summary["max_junction_residual"] = residual;
        summary["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_json(cfg.output_dir / "summary.json", summary);
        write_json(cfg.output_dir / "metadata.json", metadata(cfg, tc));
        out << summary.dump(2) << '\n';
        if (cr.result.positivity_violation) {
            err << "warning: negative values were produced\n";
            if (cfg.positivity == PositivityMode::strict) return int(exit_positivity);
        }
        return int(exit_ok);
    });
}

int cmd_convergence(const std::filesystem::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = configure(config, ov);
        if (cfg.study_h.empty() || cfg.study_dt.empty()) throw Error("[convergence] needs h and dt lists");
        const TestCase tc = make_problem(cfg);
        if (!tc.exact) throw Error("case " + tc.label + " has no exact solution");

        StudyOptions so;
        so.threads = ov.threads.value_or(1);
        so.run.step.positivity = cfg.positivity;
        const ConvergenceReport rep = convergence_study(tc, cfg.study_h, cfg.study_dt, so);

        create_dir(cfg.output_dir);
        {
            std::ofstream os(cfg.output_dir / "convergence.csv");
            if (!os) throw Error("cannot write convergence.csv");
            write_csv(os, rep);
        }
        auto fit = [](const std::optional<OrderFit>& f) -> json {
            if (!f) return nullptr;
            return {{"order", f->order}, {"residual", f->residual}, {"points_used", f->points_used}};
        };
        json orders;
        orders["case"] = rep.label;
        orders["space"] = fit(rep.space);
        orders["time"] = fit(rep.time);
        write_json(cfg.output_dir / "orders.json", orders);

        write_csv(out, rep);
        char line[96];
        if (rep.space) {
            std::snprintf(line, sizeof line, "space order %.4f (%zu points)\n", rep.space->order, rep.space->points_used);
            out << line;
        }
        if (rep.time) {
            std::snprintf(line, sizeof line, "time order %.4f (%zu points)\n", rep.time->order, rep.time->points_used);
            out << line;
        }
        return int(exit_ok);
    });
}

int cmd_verify(const std::filesystem::path& matrix, std::size_t dense_cap, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const SparseMatrix m = read_triplets(matrix);
        const CertificateReport r = verify_certificates(m, dense_cap);
        out << describe(r);
        return int(r.passes() ? exit_ok : exit_certificate);
    });
}

int cmd_generate(const std::filesystem::path& config, const std::filesystem::path& out_path, const Overrides& ov,
                 std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const IniFile ini = IniFile::read(config);
        for (const auto& [name, sec] : ini.sections())
            if (name != "generator") throw Error("generate reads only the [generator] section, found [" + name + "]");
        // Reuse the validating parser with a placeholder problem.
        std::stringstream ss;
        ss << "[problem]\ncase = TC5-synth\n[time]\ndt = 1 s\n";
        std::ifstream is(config);
        ss << is.rdbuf();
        RunConfig cfg = parse_config(IniFile::parse(ss), config.parent_path());
        if (ov.seed) cfg.generator.seed = *ov.seed;
        const Graph g = derive_treeing_fields(generate_tree(cfg.generator), cfg.generator);
        if (out_path.has_parent_path()) create_dir(out_path.parent_path());
        write_graph(out_path, g);
        out << "wrote " << g.num_edges() << " edges, " << g.num_nodes() << " nodes to " << out_path.string() << '\n';
        return int(exit_ok);
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finite-volume solver for transport and diffusion on directed graphs", "graphfv"};
    app.require_subcommand(1);

    Overrides ov;
    std::filesystem::path config;
    std::string output;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    std::size_t cap = default_dense_cap;
    std::filesystem::path target;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config, "Config file")->check(CLI::ExistingFile);
        if (needs_config) c->required();
        sub->add_option("--output", output, "Output directory or file");
        sub->add_flag("--strict-positivity", ov.strict_positivity, "Fail on negative values");
        sub->add_option("--threads", threads, "Parallel study points")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Generator seed");
    };
    CLI::App* run = app.add_subcommand("run", "Run one simulation");
    add_common(run, true);
    CLI::App* conv = app.add_subcommand("convergence", "Run a convergence study");
    add_common(conv, true);
    CLI::App* verify = app.add_subcommand("verify", "Check M-matrix certificates of a triplet file");
    verify->add_option("matrix", target, "Triplet file")->required()->check(CLI::ExistingFile);
    verify->add_option("--dense-cap", cap, "Largest size for the dense inverse check");
    CLI::App* gen = app.add_subcommand("generate", "Write a synthetic treeing graph");
    add_common(gen, true);
    gen->add_option("out", target, "Graph file to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_ok;
        }
        err << "error: " << e.what() << '\n';
        return exit_error;
    }

    for (CLI::App* sub : {run, conv, gen}) {
        if (sub->count("--output")) ov.output = output;
        if (sub->count("--threads")) ov.threads = threads;
        if (sub->count("--seed")) ov.seed = seed;
    }

    if (*run) return cmd_run(config, ov, out, err);
    if (*conv) return cmd_convergence(config, ov, out, err);
    if (*verify) return cmd_verify(target, cap, out, err);
    if (target.empty()) {
        if (!ov.output) {
            err << "error: generate needs an output path\n";
            return exit_error;
        }
        target = *ov.output;
    }
    return cmd_generate(config, target, ov, out, err);
}

}  // namespace graphfv::cli
