#pragma once

#include <absplace/baselines.hpp>
#include <absplace/errors.hpp>
#include <absplace/gspa.hpp>
#include <absplace/parallel.hpp>
#include <absplace/scenario.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace absplace {

enum class SweepParam { num_gts, min_rate, backhaul, building_absorption, min_flight_height, building_height };

inline std::string_view to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::num_gts: return "num_gts";
    case SweepParam::min_rate: return "min_rate";
    case SweepParam::backhaul: return "backhaul";
    case SweepParam::building_absorption: return "building_absorption";
    case SweepParam::min_flight_height: return "min_flight_height";
    case SweepParam::building_height: return "building_height";
    }
    return "unknown";
}

inline std::optional<SweepParam> parse_sweep_param(std::string_view s)
{
    for (auto p : {SweepParam::num_gts, SweepParam::min_rate, SweepParam::backhaul, SweepParam::building_absorption,
                   SweepParam::min_flight_height, SweepParam::building_height})
        if (s == to_string(p))
            return p;
    return std::nullopt;
}

enum class Algorithm { gspa, kmeans, lower_bound, oracle };

inline std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::gspa: return "gspa";
    case Algorithm::kmeans: return "kmeans";
    case Algorithm::lower_bound: return "lower_bound";
    case Algorithm::oracle: return "oracle";
    }
    return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s)
{
    for (auto a : {Algorithm::gspa, Algorithm::kmeans, Algorithm::lower_bound, Algorithm::oracle})
        if (s == to_string(a))
            return a;
    return std::nullopt;
}

struct SweepSpec {
    SweepParam parameter = SweepParam::num_gts;
    std::vector<double> values;
    std::size_t trials = 20;
    std::uint64_t master_seed = 1;
    std::vector<Algorithm> algorithms{Algorithm::gspa, Algorithm::kmeans, Algorithm::lower_bound};

    void validate() const
    {
        if (values.empty())
            throw DomainError("sweep: value list is empty");
        if (trials == 0)
            throw DomainError("sweep: trials must be at least 1");
        if (algorithms.empty())
            throw DomainError("sweep: no algorithms selected");
    }
};

struct SweepRecord {
    double param_value = 0.0;
    Algorithm algorithm = Algorithm::gspa;
    std::size_t trial = 0;
    long abs_count = -1;   // -1 when the algorithm found no placement
    bool feasible = false;
    long lower_bound = -1; // -1 when the backhaul is zero everywhere
    double wall_ms = 0.0;

    friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct SweepSummary {
    double param_value = 0.0;
    Algorithm algorithm = Algorithm::gspa;
    std::size_t feasible_trials = 0;
    double mean_count = 0.0; // over feasible trials
};

struct SweepResult {
    SweepParam parameter = SweepParam::num_gts;
    std::size_t trials = 0;
    std::vector<SweepRecord> records; // value-major, then trial, then SweepSpec::algorithms order

    std::vector<SweepSummary> summarize() const
    {
        std::vector<SweepSummary> out;
        std::map<std::pair<double, int>, std::size_t> slot;
        for (const auto& r : records) {
            auto key = std::make_pair(r.param_value, static_cast<int>(r.algorithm));
            auto [it, fresh] = slot.try_emplace(key, out.size());
            if (fresh)
                out.push_back({r.param_value, r.algorithm, 0, 0.0});
            auto& s = out[it->second];
            if (r.feasible) {
                ++s.feasible_trials;
                s.mean_count += static_cast<double>(r.abs_count);
            }
        }
        for (auto& s : out)
            if (s.feasible_trials > 0)
                s.mean_count /= static_cast<double>(s.feasible_trials);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Seeds and trial construction
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t value_index, std::size_t trial_index)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(value_index));
    return splitmix64(h ^ static_cast<std::uint64_t>(trial_index));
}

/// The scenario with the swept parameter set to `value`.
inline Scenario apply_sweep_value(Scenario s, SweepParam p, double value)
{
    switch (p) {
    case SweepParam::num_gts: {
        if (!(value >= 0.0) || value != std::floor(value))
            throw DomainError("sweep: num_gts values must be non-negative integers");
        std::uint64_t seed = 0;
        if (auto* smp = std::get_if<SampledGts>(&s.gts))
            seed = smp->seed;
        s.gts = SampledGts{static_cast<std::size_t>(value), seed};
        break;
    }
    case SweepParam::min_rate: s.min_rate = value; break;
    case SweepParam::backhaul:
        if (!std::holds_alternative<ConstantBackhaul>(s.backhaul))
            throw DomainError("sweep: backhaul sweeps need a constant backhaul scenario");
        s.backhaul = ConstantBackhaul{value};
        break;
    case SweepParam::building_absorption:
        for (auto& b : s.buildings)
            b.absorption = value;
        break;
    case SweepParam::min_flight_height: s.min_flight_height = value; break;
    case SweepParam::building_height:
        for (auto& b : s.buildings)
            b.height = value;
        break;
    }
    s.validate();
    return s;
}

/// Scenario draw for one (value, trial): sampled terminals are redrawn with the trial seed.
inline Instance trial_instance(const Scenario& base, const SweepSpec& spec, std::size_t value_index,
                               std::size_t trial_index, unsigned threads = 1)
{
    Scenario s = apply_sweep_value(base, spec.parameter, spec.values.at(value_index));
    std::uint64_t seed = trial_seed(spec.master_seed, value_index, trial_index);
    if (auto* smp = std::get_if<SampledGts>(&s.gts))
        return build_instance(s, sample_gts(s, smp->count, seed), threads);
    return build_instance(s, threads);
}

/// Outcome of running one algorithm on one instance.
struct AlgorithmRun {
    std::optional<PlacementSolution> solution; // absent for lower_bound and on failure
    long count = -1;
    bool feasible = false;
};

inline AlgorithmRun run_algorithm(Algorithm a, const Instance& inst, const AdmmConfig& cfg, std::uint64_t seed)
{
    AlgorithmRun run;
    const auto& p = inst.problem;
    try {
        switch (a) {
        case Algorithm::lower_bound: {
            auto lb = lower_bound(p.num_gts(), p.min_rate, p.backhaul);
            if (lb) {
                run.count = static_cast<long>(*lb);
                run.feasible = true;
            }
            break;
        }
        case Algorithm::gspa: {
            auto sol = gspa_solve(p, cfg);
            run.count = static_cast<long>(sol.count());
            run.feasible = sol.feasible;
            run.solution = std::move(sol);
            break;
        }
        case Algorithm::kmeans: {
            auto km = kmeans_placement(inst.gts, inst.flight_grid, p.capacity, p.backhaul, p.min_rate,
                                       inst.flight_grid.size(), seed);
            run.count = static_cast<long>(km.solution.count());
            run.feasible = verify_feasibility(p, km.solution).ok();
            run.solution = std::move(km.solution);
            break;
        }
        case Algorithm::oracle: {
            auto o = brute_force_min_abs(p);
            auto sol = allocate_on_columns(p, o.witness_columns);
            run.count = static_cast<long>(o.min_count);
            run.feasible = sol.has_value() && sol->feasible;
            run.solution = std::move(sol);
            break;
        }
        }
    } catch (const InfeasibleError&) {
        run.count = -1;
        run.feasible = false;
    }
    return run;
}

/// Runs every (value, trial) pair, `threads` trials at a time. Records come
/// back in value, trial, algorithm order whatever the completion order.
inline SweepResult run_sweep(const Scenario& base, const SweepSpec& spec, const AdmmConfig& cfg, unsigned threads = 1)
{
    spec.validate();
    cfg.validate();
    for (auto a : spec.algorithms)
        if (a == Algorithm::oracle) {
            for (double v : spec.values) {
                auto n = scenario_flight_grid(apply_sweep_value(base, spec.parameter, v)).size();
                if (n > kOracleMaxPoints)
                    throw BudgetError("sweep: oracle needs at most " + std::to_string(kOracleMaxPoints) +
                                      " flight-grid points, scenario has " + std::to_string(n));
            }
        }

    const std::size_t n_values = spec.values.size(), n_algos = spec.algorithms.size();
    SweepResult result;
    result.parameter = spec.parameter;
    result.trials = spec.trials;
    result.records.resize(n_values * spec.trials * n_algos);
    AdmmConfig inner = cfg;
    inner.threads = 1;

    detail::parallel_for(n_values * spec.trials, threads, [&](std::size_t job) {
        const std::size_t vi = job / spec.trials, ti = job % spec.trials;
        const std::uint64_t seed = trial_seed(spec.master_seed, vi, ti);
        Instance inst = trial_instance(base, spec, vi, ti);
        auto lb = lower_bound(inst.problem.num_gts(), inst.problem.min_rate, inst.problem.backhaul);
        for (std::size_t ai = 0; ai < n_algos; ++ai) {
            auto t0 = std::chrono::steady_clock::now();
            AlgorithmRun run = run_algorithm(spec.algorithms[ai], inst, inner, seed);
            auto t1 = std::chrono::steady_clock::now();
            SweepRecord& rec = result.records[job * n_algos + ai];
            rec.param_value = spec.values[vi];
            rec.algorithm = spec.algorithms[ai];
            rec.trial = ti;
            rec.abs_count = run.count;
            rec.feasible = run.feasible;
            rec.lower_bound = lb ? static_cast<long>(*lb) : -1;
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
    });
    return result;
}

/// Rebuilds trial (value_index, trial_index) and reruns one algorithm on it.
inline std::pair<Instance, AlgorithmRun> replay_trial(const Scenario& base, const SweepSpec& spec,
                                                      std::size_t value_index, std::size_t trial_index,
                                                      Algorithm algorithm, const AdmmConfig& cfg)
{
    Instance inst = trial_instance(base, spec, value_index, trial_index);
    AlgorithmRun run =
        run_algorithm(algorithm, inst, cfg, trial_seed(spec.master_seed, value_index, trial_index));
    return {std::move(inst), std::move(run)};
}

// ---------------------------------------------------------------------------
// CSV and spec files
// ---------------------------------------------------------------------------

inline constexpr const char* kSweepCsvHeader = "param_value,algorithm,trial,abs_count,feasible,lower_bound,wall_ms";

/// One line per record. With `timing` off the wall_ms column is written as
/// 0 so that repeated runs produce identical bytes.
inline void write_csv(const SweepResult& r, std::ostream& os, bool timing = true)
{
    os << kSweepCsvHeader << '\n';
    char buf[64];
    for (const auto& rec : r.records) {
        std::snprintf(buf, sizeof buf, "%.17g", rec.param_value);
        os << buf << ',' << to_string(rec.algorithm) << ',' << rec.trial << ',' << rec.abs_count << ','
           << (rec.feasible ? 1 : 0) << ',' << rec.lower_bound << ',';
        std::snprintf(buf, sizeof buf, "%.3f", timing ? rec.wall_ms : 0.0);
        os << buf << '\n';
    }
}

inline void emit_csv(const SweepResult& r, const std::string& path, bool timing = true)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write CSV '" + path + "'");
    write_csv(r, os, timing);
    if (!os)
        throw Error("write failed for '" + path + "'");
}

inline std::vector<SweepRecord> read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != kSweepCsvHeader)
        throw ParseError("sweep CSV: missing or unexpected header", 1);
    std::vector<SweepRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 7)
            throw ParseError("sweep CSV: expected 7 columns, got " + std::to_string(cells.size()), lineno);
        SweepRecord rec;
        try {
            std::size_t used = 0;
            rec.param_value = std::stod(cells[0], &used);
            auto algo = parse_algorithm(cells[1]);
            if (!algo)
                throw ParseError("sweep CSV: unknown algorithm '" + cells[1] + "'", lineno);
            rec.algorithm = *algo;
            rec.trial = std::stoul(cells[2]);
            rec.abs_count = std::stol(cells[3]);
            rec.feasible = cells[4] == "1";
            if (cells[4] != "0" && cells[4] != "1")
                throw ParseError("sweep CSV: feasible must be 0 or 1", lineno);
            rec.lower_bound = std::stol(cells[5]);
            rec.wall_ms = std::stod(cells[6]);
        } catch (const std::logic_error&) {
            throw ParseError("sweep CSV: malformed number", lineno);
        }
        out.push_back(rec);
    }
    return out;
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j)
{
    using detail::field;
    using detail::schema_error;
    SweepSpec s;
    const auto& pj = field(j, "parameter", "");
    if (!pj.is_string())
        schema_error("parameter", "expected a string");
    auto p = parse_sweep_param(pj.get<std::string>());
    if (!p)
        schema_error("parameter", "unknown sweep parameter '" + pj.get<std::string>() + "'");
    s.parameter = *p;
    const auto& vj = field(j, "values", "");
    if (!vj.is_array() || vj.empty())
        schema_error("values", "expected a non-empty array");
    for (std::size_t i = 0; i < vj.size(); ++i)
        s.values.push_back(detail::get_number(vj[i], "values[" + std::to_string(i) + "]"));
    if (auto it = j.find("trials"); it != j.end())
        s.trials = detail::get_uint(*it, "trials");
    if (s.trials == 0)
        schema_error("trials", "must be at least 1");
    if (auto it = j.find("seed"); it != j.end())
        s.master_seed = detail::get_uint(*it, "seed");
    if (auto it = j.find("algorithms"); it != j.end()) {
        if (!it->is_array() || it->empty())
            schema_error("algorithms", "expected a non-empty array");
        s.algorithms.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& a = (*it)[i];
            std::string path = "algorithms[" + std::to_string(i) + "]";
            if (!a.is_string())
                schema_error(path, "expected a string");
            auto algo = parse_algorithm(a.get<std::string>());
            if (!algo)
                schema_error(path, "unknown algorithm '" + a.get<std::string>() + "'");
            s.algorithms.push_back(*algo);
        }
    }
    return s;
}

inline SweepSpec load_sweep_spec(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open sweep spec '" + path + "'");
    try {
        return sweep_spec_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("sweep spec '" + path + "': " + e.what());
    }
}

} // namespace absplace
