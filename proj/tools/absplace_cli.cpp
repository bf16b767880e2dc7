// Command-line front end: placement, sweeps, bounds, oracle and the
// fixed-deployment allocation variants.

#include <absplace/baselines.hpp>
#include <absplace/extensions.hpp>
#include <absplace/gspa.hpp>
#include <absplace/propagation.hpp>
#include <absplace/scenario.hpp>
#include <absplace/sweep.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace absplace;
using nlohmann::json;

enum Exit { ok = 0, failure = 1, infeasible = 2, parse_error = 3, not_converged = 4 };

struct Common {
    std::optional<double> rho, eps_abs, eps_rel;
    std::optional<std::size_t> max_iters, reweight_rounds;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--rho", c.rho, "ADMM step size");
    cmd->add_option("--eps-abs", c.eps_abs, "absolute stopping tolerance");
    cmd->add_option("--eps-rel", c.eps_rel, "relative stopping tolerance");
    cmd->add_option("--max-iters", c.max_iters, "ADMM iterations per reweighting round");
    cmd->add_option("--reweight-rounds", c.reweight_rounds, "reweighting rounds after the first solve");
    cmd->add_option("--seed", c.seed, "GT sampling seed (sweep: master seed)");
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

AdmmConfig solver_config(const Scenario& s, const Common& c)
{
    AdmmConfig cfg = s.solver.apply({});
    if (c.rho) cfg.rho = *c.rho;
    if (c.eps_abs) cfg.eps_abs = *c.eps_abs;
    if (c.eps_rel) cfg.eps_rel = *c.eps_rel;
    if (c.max_iters) cfg.max_iters = *c.max_iters;
    if (c.reweight_rounds) cfg.reweight_rounds = *c.reweight_rounds;
    cfg.threads = c.threads;
    cfg.validate();
    return cfg;
}

Scenario load_with_seed(const std::string& path, const Common& c)
{
    Scenario s = load_scenario(path);
    if (c.seed)
        if (auto* smp = std::get_if<SampledGts>(&s.gts))
            smp->seed = *c.seed;
    return s;
}

json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

void write_json(const json& j, const std::string& path)
{
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write '" + path + "'");
    os << j.dump(2) << '\n';
}

/// ABS positions either from a placement file written by `place` or from explicit grid indices.
std::vector<std::size_t> deployed_columns(const std::string& placement, const std::vector<std::size_t>& columns,
                                          std::size_t grid_size)
{
    std::vector<std::size_t> cols = columns;
    if (!placement.empty()) {
        std::ifstream is(placement);
        if (!is)
            throw ParseError("cannot open placement '" + placement + "'");
        json j;
        try {
            j = json::parse(is);
            cols = j.at("active_columns").get<std::vector<std::size_t>>();
        } catch (const json::exception& e) {
            throw ParseError("placement '" + placement + "': " + e.what());
        }
    }
    if (cols.empty())
        throw DomainError("no deployed ABSs: pass --placement or --columns");
    for (auto c : cols)
        if (c >= grid_size)
            throw DomainError("column " + std::to_string(c) + " is outside the flight grid of " +
                              std::to_string(grid_size) + " points");
    return cols;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Aerial base station placement"};
    app.require_subcommand(1);
    Common common;
    std::string scenario_path, out_path, spec_path, placement_path;
    std::vector<std::size_t> columns;
    bool no_timing = false, lp_only = false;

    auto* place = app.add_subcommand("place", "place ABSs for a scenario with GSPA");
    place->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    place->add_option("-o,--out", out_path, "placement JSON (default: stdout)");
    add_common(place, common);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep to CSV");
    sweep->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    sweep->add_option("spec", spec_path, "sweep spec file")->required()->check(CLI::ExistingFile);
    sweep->add_option("-o,--out", out_path, "CSV file (default: stdout)");
    sweep->add_flag("--no-timing", no_timing, "write 0 in the wall_ms column for byte-reproducible output");
    add_common(sweep, common);

    auto* bound = app.add_subcommand("bound", "backhaul lower bound on the number of ABSs");
    bound->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    add_common(bound, common);

    auto* oracle = app.add_subcommand("oracle", "exact minimum by subset enumeration (tiny flight grids)");
    oracle->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    oracle->add_option("-o,--out", out_path, "result JSON (default: stdout)");
    add_common(oracle, common);

    auto* minconn = app.add_subcommand("min-connections", "fewest GT-ABS links for a fixed deployment");
    minconn->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    minconn->add_option("--placement", placement_path, "placement JSON from `place`");
    minconn->add_option("--columns", columns, "flight-grid indices of the deployed ABSs")->delimiter(',');
    minconn->add_option("-o,--out", out_path, "result JSON (default: stdout)");
    add_common(minconn, common);

    auto* served = app.add_subcommand("allocate-served", "serve as many GTs as possible with a fixed deployment");
    served->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    served->add_option("--placement", placement_path, "placement JSON from `place`");
    served->add_option("--columns", columns, "flight-grid indices of the deployed ABSs")->delimiter(',');
    served->add_flag("--lp-only", lp_only, "report the shortfall LP vertex without greedy completion");
    served->add_option("-o,--out", out_path, "result JSON (default: stdout)");
    add_common(served, common);

    auto* gain = app.add_subcommand("gain-map", "export the GT-to-grid gain matrix");
    gain->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    gain->add_option("-o,--out", out_path, "gain map file")->required();
    add_common(gain, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::parse_error;
    }

    try {
        Scenario scen = load_with_seed(scenario_path, common);

        if (*place) {
            AdmmConfig cfg = solver_config(scen, common);
            Instance inst = build_instance(scen, common.threads);
            auto sol = gspa_solve(inst.problem, cfg);
            auto lb = lower_bound(inst.problem.num_gts(), inst.problem.min_rate, inst.problem.backhaul);
            json j;
            j["count"] = sol.count();
            j["lower_bound"] = lb ? json(*lb) : json(nullptr);
            j["active_columns"] = sol.active_columns;
            json pos = json::array();
            for (auto c : sol.active_columns)
                pos.push_back(vec_json(inst.flight_grid[c]));
            j["positions"] = pos;
            j["rates_bps"] = matrix_json(sol.rates);
            j["feasible"] = sol.feasible;
            j["converged"] = sol.converged;
            j["iterations"] = sol.iterations;
            write_json(j, out_path);
            std::fprintf(stderr, "%zu ABSs (lower bound %s), feasible=%d converged=%d\n", sol.count(),
                         lb ? std::to_string(*lb).c_str() : "none", sol.feasible ? 1 : 0, sol.converged ? 1 : 0);
            if (!sol.feasible)
                return Exit::infeasible;
            return sol.converged ? Exit::ok : Exit::not_converged;
        }

        if (*sweep) {
            SweepSpec spec = load_sweep_spec(spec_path);
            if (common.seed)
                spec.master_seed = *common.seed;
            AdmmConfig cfg = solver_config(scen, common);
            SweepResult res = run_sweep(scen, spec, cfg, common.threads);
            if (out_path.empty() || out_path == "-")
                write_csv(res, std::cout, !no_timing);
            else
                emit_csv(res, out_path, !no_timing);
            for (const auto& s : res.summarize())
                std::fprintf(stderr, "%s=%g %s: mean %.3f over %zu/%zu feasible trials\n",
                             std::string(to_string(res.parameter)).c_str(), s.param_value,
                             std::string(to_string(s.algorithm)).c_str(), s.mean_count, s.feasible_trials,
                             res.trials);
            return Exit::ok;
        }

        if (*bound) {
            auto flight = scenario_flight_grid(scen);
            auto bh = backhaul_vector(flight, scen.backhaul);
            std::size_t m = std::holds_alternative<SampledGts>(scen.gts)
                                ? std::get<SampledGts>(scen.gts).count
                                : std::get<std::vector<Vec3>>(scen.gts).size();
            auto lb = lower_bound(m, scen.min_rate, bh);
            if (!lb) {
                std::puts("infeasible: no backhaul capacity");
                return Exit::infeasible;
            }
            std::printf("%zu\n", *lb);
            return *lb > flight.size() ? Exit::infeasible : Exit::ok;
        }

        if (*oracle) {
            Instance inst = build_instance(scen, common.threads);
            auto res = brute_force_min_abs(inst.problem);
            json j{{"min_count", res.min_count}, {"witness_columns", res.witness_columns}, {"explored", res.explored}};
            write_json(j, out_path);
            return Exit::ok;
        }

        if (*minconn || *served) {
            Instance inst = build_instance(scen, common.threads);
            auto cols = deployed_columns(placement_path, columns, inst.flight_grid.size());
            Matrix c = inst.problem.capacity.select_cols(cols);
            std::vector<double> bh;
            for (auto k : cols)
                bh.push_back(inst.problem.backhaul[k]);
            json j{{"columns", cols}};
            if (*minconn) {
                std::size_t rounds = common.reweight_rounds.value_or(2);
                auto r = min_connections(c, bh, scen.min_rate, rounds);
                j["connections"] = r.connections;
                j["rates_bps"] = matrix_json(r.rates);
            } else {
                auto r = max_served_users(c, bh, scen.min_rate, !lp_only);
                j["served"] = r.served;
                j["num_gts"] = inst.problem.num_gts();
                j["shortfall_bps"] = r.objective;
                j["lp_shortfall_bps"] = r.lp_objective;
                j["rates_bps"] = matrix_json(r.rates);
            }
            write_json(j, out_path);
            return Exit::ok;
        }

        if (*gain) {
            auto gts = scenario_gts(scen);
            auto flight = scenario_flight_grid(scen);
            GainMap map = compute_gain_map(gts, flight, scenario_gain_model(scen), scen.radio.wavelength(),
                                           common.threads);
            save_gain_map(map, out_path);
            std::fprintf(stderr, "wrote %zu x %zu gains to %s\n", gts.size(), flight.size(), out_path.c_str());
            return Exit::ok;
        }
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return Exit::infeasible;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return Exit::parse_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Exit::failure;
    }
    return Exit::failure;
}
