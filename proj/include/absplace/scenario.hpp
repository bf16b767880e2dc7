#pragma once

#include <absplace/errors.hpp>
#include <absplace/geometry.hpp>
#include <absplace/gspa.hpp>
#include <absplace/problem.hpp>
#include <absplace/propagation.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace absplace {

inline constexpr int kScenarioSchemaVersion = 1;

/// Regular 2D lattice of candidate GT positions, corners included.
struct GtGrid {
    double spacing = 10.0;
    double height = 2.0;

    friend bool operator==(const GtGrid&, const GtGrid&) = default;
};

/// Terminals given explicitly or drawn from the GT grid.
struct SampledGts {
    std::size_t count = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const SampledGts&, const SampledGts&) = default;
};
using GtSource = std::variant<std::vector<Vec3>, SampledGts>;

/// Solver fields present in the scenario file; absent ones keep the library defaults.
struct SolverOverrides {
    std::optional<double> rho, eps_abs, eps_rel;
    std::optional<std::size_t> max_iters;
    std::optional<double> bisection_tol;
    std::optional<std::size_t> reweight_rounds;
    std::optional<double> reweight_epsilon, activation_threshold;

    AdmmConfig apply(AdmmConfig cfg) const
    {
        if (rho) cfg.rho = *rho;
        if (eps_abs) cfg.eps_abs = *eps_abs;
        if (eps_rel) cfg.eps_rel = *eps_rel;
        if (max_iters) cfg.max_iters = *max_iters;
        if (bisection_tol) cfg.bisection_tol = *bisection_tol;
        if (reweight_rounds) cfg.reweight_rounds = *reweight_rounds;
        if (reweight_epsilon) cfg.reweight_epsilon = *reweight_epsilon;
        if (activation_threshold) cfg.activation_threshold = *activation_threshold;
        return cfg;
    }

    friend bool operator==(const SolverOverrides&, const SolverOverrides&) = default;
};

struct Scenario {
    Region region{{0.0, 0.0, 0.0}, {500.0, 400.0, 150.0}};
    std::vector<Building> buildings;
    Dims3 slf_dims{50, 40, 15};
    Dims3 flight_dims{9, 9, 5};
    double min_flight_height = 50.0;
    RadioParams radio;
    ChannelModel channel = ChannelModel::tomographic;
    AlHouraniParams alhourani;
    std::string gain_map_path; // ingested model only; absolute after load
    double min_rate = 20e6;
    BackhaulSpec backhaul = ConstantBackhaul{100e6};
    GtGrid gt_grid;
    GtSource gts = SampledGts{70, 1};
    SolverOverrides solver;

    void validate() const
    {
        region.validate();
        for (const auto& b : buildings)
            b.validate();
        for (auto d : slf_dims)
            if (d == 0)
                throw DomainError("scenario: slf_dims must be positive");
        for (auto d : flight_dims)
            if (d == 0)
                throw DomainError("scenario: flight_grid.dims must be positive");
        radio.validate();
        if (!(min_rate >= 0.0) || !std::isfinite(min_rate))
            throw DomainError("scenario: min_rate must be finite and non-negative");
        if (!(gt_grid.spacing > 0.0))
            throw DomainError("scenario: gt_grid.spacing must be positive");
        if (channel == ChannelModel::ingested && gain_map_path.empty())
            throw DomainError("scenario: ingested channel needs channel.path");
    }
};

inline bool operator==(const Scenario& a, const Scenario& b)
{
    auto bh_eq = [](const BackhaulSpec& x, const BackhaulSpec& y) {
        if (x.index() != y.index())
            return false;
        if (auto* c = std::get_if<ConstantBackhaul>(&x))
            return c->rate_bps == std::get<ConstantBackhaul>(y).rate_bps;
        const auto& mx = std::get<MappedBackhaul>(x);
        const auto& my = std::get<MappedBackhaul>(y);
        return mx.gains_db == my.gains_db && mx.radio.bandwidth_hz == my.radio.bandwidth_hz &&
               mx.radio.tx_power_dbm == my.radio.tx_power_dbm &&
               mx.radio.noise_interf_dbm == my.radio.noise_interf_dbm && mx.radio.carrier_hz == my.radio.carrier_hz;
    };
    auto radio_eq = [](const RadioParams& x, const RadioParams& y) {
        return x.bandwidth_hz == y.bandwidth_hz && x.tx_power_dbm == y.tx_power_dbm &&
               x.noise_interf_dbm == y.noise_interf_dbm && x.carrier_hz == y.carrier_hz;
    };
    return a.region.min_corner == b.region.min_corner && a.region.max_corner == b.region.max_corner &&
           a.buildings == b.buildings && a.slf_dims == b.slf_dims && a.flight_dims == b.flight_dims &&
           a.min_flight_height == b.min_flight_height && radio_eq(a.radio, b.radio) && a.channel == b.channel &&
           a.alhourani == b.alhourani && a.gain_map_path == b.gain_map_path && a.min_rate == b.min_rate &&
           bh_eq(a.backhaul, b.backhaul) && a.gt_grid == b.gt_grid && a.gts == b.gts && a.solver == b.solver;
}

/// Six 63 m blocks in a 500 x 400 x 150 m region, 70 sampled terminals,
/// 20 Mbps per terminal and 100 Mbps backhaul per ABS.
inline Scenario default_scenario()
{
    Scenario s;
    const double h = 63.0, a = 1.0;
    s.buildings = {
        {60, 140, 50, 130, h, a},   {200, 290, 40, 110, h, a},  {360, 440, 60, 150, h, a},
        {50, 130, 240, 330, h, a},  {210, 300, 220, 320, h, a}, {350, 450, 250, 340, h, a},
    };
    return s;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what)
{
    throw ParseError("scenario field '" + path + "': " + what);
}

inline const json& field(const json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object())
        schema_error(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
        schema_error(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

inline double get_number(const json& j, const std::string& path)
{
    if (!j.is_number())
        schema_error(path, "expected a number");
    return j.get<double>();
}

inline std::uint64_t get_uint(const json& j, const std::string& path)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        schema_error(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline double number_or(const json& j, const std::string& key, const std::string& path, double fallback)
{
    auto it = j.find(key);
    return it == j.end() ? fallback : get_number(*it, join(path, key));
}

inline Vec3 get_vec3(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 3)
        schema_error(path, "expected an array of 3 numbers");
    return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]"), get_number(j[2], path + "[2]")};
}

inline Dims3 get_dims(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 3)
        schema_error(path, "expected an array of 3 positive integers");
    Dims3 d{};
    for (std::size_t i = 0; i < 3; ++i) {
        d[i] = get_uint(j[i], path + "[" + std::to_string(i) + "]");
        if (d[i] == 0)
            schema_error(path + "[" + std::to_string(i) + "]", "must be positive");
    }
    return d;
}

inline json radio_json(const RadioParams& r)
{
    return {{"bandwidth_hz", r.bandwidth_hz},
            {"tx_power_dbm", r.tx_power_dbm},
            {"noise_interf_dbm", r.noise_interf_dbm},
            {"carrier_hz", r.carrier_hz}};
}

inline RadioParams parse_radio(const json& j, const std::string& path)
{
    if (!j.is_object())
        schema_error(path, "expected an object");
    RadioParams r;
    r.bandwidth_hz = number_or(j, "bandwidth_hz", path, r.bandwidth_hz);
    r.tx_power_dbm = number_or(j, "tx_power_dbm", path, r.tx_power_dbm);
    r.noise_interf_dbm = number_or(j, "noise_interf_dbm", path, r.noise_interf_dbm);
    r.carrier_hz = number_or(j, "carrier_hz", path, r.carrier_hz);
    try {
        r.validate();
    } catch (const DomainError& e) {
        schema_error(path, e.what());
    }
    return r;
}

} // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s)
{
    using nlohmann::json;
    json j;
    j["schema_version"] = kScenarioSchemaVersion;
    j["region"] = {{"min", {s.region.min_corner.x, s.region.min_corner.y, s.region.min_corner.z}},
                   {"max", {s.region.max_corner.x, s.region.max_corner.y, s.region.max_corner.z}}};
    j["buildings"] = json::array();
    for (const auto& b : s.buildings)
        j["buildings"].push_back({{"x_min", b.x_min},
                                  {"x_max", b.x_max},
                                  {"y_min", b.y_min},
                                  {"y_max", b.y_max},
                                  {"height", b.height},
                                  {"absorption_db_per_m", b.absorption}});
    j["slf_dims"] = s.slf_dims;
    j["flight_grid"] = {{"dims", s.flight_dims}, {"min_height", s.min_flight_height}};
    j["radio"] = detail::radio_json(s.radio);
    json ch = {{"model", std::string(to_string(s.channel))}};
    if (s.channel == ChannelModel::alhourani)
        ch["alhourani"] = {{"a", s.alhourani.a},
                           {"b", s.alhourani.b},
                           {"eta_los_db", s.alhourani.eta_los_db},
                           {"eta_nlos_db", s.alhourani.eta_nlos_db}};
    if (s.channel == ChannelModel::ingested)
        ch["path"] = s.gain_map_path;
    j["channel"] = ch;
    j["min_rate_bps"] = s.min_rate;
    if (auto* c = std::get_if<ConstantBackhaul>(&s.backhaul)) {
        j["backhaul"] = {{"kind", "constant"}, {"rate_bps", c->rate_bps}};
    } else {
        const auto& m = std::get<MappedBackhaul>(s.backhaul);
        j["backhaul"] = {{"kind", "mapped"}, {"gains_db", m.gains_db}, {"radio", detail::radio_json(m.radio)}};
    }
    j["gt_grid"] = {{"spacing", s.gt_grid.spacing}, {"height", s.gt_grid.height}};
    if (auto* pos = std::get_if<std::vector<Vec3>>(&s.gts)) {
        json arr = json::array();
        for (const auto& p : *pos)
            arr.push_back({p.x, p.y, p.z});
        j["gts"] = {{"positions", arr}};
    } else {
        const auto& smp = std::get<SampledGts>(s.gts);
        j["gts"] = {{"count", smp.count}, {"seed", smp.seed}};
    }
    json solver = json::object();
    const auto& o = s.solver;
    if (o.rho) solver["rho"] = *o.rho;
    if (o.eps_abs) solver["eps_abs"] = *o.eps_abs;
    if (o.eps_rel) solver["eps_rel"] = *o.eps_rel;
    if (o.max_iters) solver["max_iters"] = *o.max_iters;
    if (o.bisection_tol) solver["bisection_tol"] = *o.bisection_tol;
    if (o.reweight_rounds) solver["reweight_rounds"] = *o.reweight_rounds;
    if (o.reweight_epsilon) solver["reweight_epsilon"] = *o.reweight_epsilon;
    if (o.activation_threshold) solver["activation_threshold"] = *o.activation_threshold;
    j["solver"] = solver;
    return j;
}

/// Relative paths inside the document resolve against `base_dir`.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    using namespace detail;
    if (!j.is_object())
        schema_error("", "document must be an object");
    auto ver = get_uint(field(j, "schema_version", ""), "schema_version");
    if (ver != static_cast<std::uint64_t>(kScenarioSchemaVersion))
        schema_error("schema_version", "unsupported version " + std::to_string(ver));

    Scenario s;
    const auto& reg = field(j, "region", "");
    s.region.min_corner = get_vec3(field(reg, "min", "region"), "region.min");
    s.region.max_corner = get_vec3(field(reg, "max", "region"), "region.max");
    try {
        s.region.validate();
    } catch (const DomainError& e) {
        schema_error("region", e.what());
    }

    if (auto it = j.find("buildings"); it != j.end()) {
        if (!it->is_array())
            schema_error("buildings", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& bj = (*it)[i];
            std::string p = "buildings[" + std::to_string(i) + "]";
            Building b;
            b.x_min = get_number(field(bj, "x_min", p), p + ".x_min");
            b.x_max = get_number(field(bj, "x_max", p), p + ".x_max");
            b.y_min = get_number(field(bj, "y_min", p), p + ".y_min");
            b.y_max = get_number(field(bj, "y_max", p), p + ".y_max");
            b.height = get_number(field(bj, "height", p), p + ".height");
            b.absorption = get_number(field(bj, "absorption_db_per_m", p), p + ".absorption_db_per_m");
            try {
                b.validate();
            } catch (const DomainError& e) {
                schema_error(p, e.what());
            }
            s.buildings.push_back(b);
        }
    }

    s.slf_dims = get_dims(field(j, "slf_dims", ""), "slf_dims");
    const auto& fg = field(j, "flight_grid", "");
    s.flight_dims = get_dims(field(fg, "dims", "flight_grid"), "flight_grid.dims");
    s.min_flight_height = get_number(field(fg, "min_height", "flight_grid"), "flight_grid.min_height");

    if (auto it = j.find("radio"); it != j.end())
        s.radio = parse_radio(*it, "radio");

    const auto& ch = field(j, "channel", "");
    const auto& model = field(ch, "model", "channel");
    if (!model.is_string())
        schema_error("channel.model", "expected a string");
    auto parsed = parse_channel_model(model.get<std::string>());
    if (!parsed)
        schema_error("channel.model", "unknown model '" + model.get<std::string>() +
                                          "' (expected tomographic, free_space, alhourani or ingested)");
    s.channel = *parsed;
    if (auto it = ch.find("alhourani"); it != ch.end()) {
        s.alhourani.a = number_or(*it, "a", "channel.alhourani", s.alhourani.a);
        s.alhourani.b = number_or(*it, "b", "channel.alhourani", s.alhourani.b);
        s.alhourani.eta_los_db = number_or(*it, "eta_los_db", "channel.alhourani", s.alhourani.eta_los_db);
        s.alhourani.eta_nlos_db = number_or(*it, "eta_nlos_db", "channel.alhourani", s.alhourani.eta_nlos_db);
    }
    if (s.channel == ChannelModel::ingested) {
        const auto& pj = field(ch, "path", "channel");
        if (!pj.is_string())
            schema_error("channel.path", "expected a string");
        std::filesystem::path p = pj.get<std::string>();
        if (p.is_relative())
            p = base_dir / p;
        p = std::filesystem::absolute(p).lexically_normal();
        if (!std::filesystem::exists(p))
            schema_error("channel.path", "file '" + p.string() + "' does not exist");
        s.gain_map_path = p.string();
    }

    s.min_rate = get_number(field(j, "min_rate_bps", ""), "min_rate_bps");
    if (!(s.min_rate >= 0.0))
        schema_error("min_rate_bps", "must be non-negative");

    const auto& bh = field(j, "backhaul", "");
    const auto& kind = field(bh, "kind", "backhaul");
    if (kind == "constant") {
        double r = get_number(field(bh, "rate_bps", "backhaul"), "backhaul.rate_bps");
        if (!(r >= 0.0))
            schema_error("backhaul.rate_bps", "must be non-negative");
        s.backhaul = ConstantBackhaul{r};
    } else if (kind == "mapped") {
        MappedBackhaul m;
        const auto& g = field(bh, "gains_db", "backhaul");
        if (!g.is_array())
            schema_error("backhaul.gains_db", "expected an array");
        for (std::size_t i = 0; i < g.size(); ++i)
            m.gains_db.push_back(get_number(g[i], "backhaul.gains_db[" + std::to_string(i) + "]"));
        if (auto it = bh.find("radio"); it != bh.end())
            m.radio = parse_radio(*it, "backhaul.radio");
        s.backhaul = std::move(m);
    } else {
        schema_error("backhaul.kind", "expected 'constant' or 'mapped'");
    }

    if (auto it = j.find("gt_grid"); it != j.end()) {
        s.gt_grid.spacing = number_or(*it, "spacing", "gt_grid", s.gt_grid.spacing);
        s.gt_grid.height = number_or(*it, "height", "gt_grid", s.gt_grid.height);
        if (!(s.gt_grid.spacing > 0.0))
            schema_error("gt_grid.spacing", "must be positive");
    }

    const auto& gj = field(j, "gts", "");
    if (auto it = gj.find("positions"); it != gj.end()) {
        if (!it->is_array())
            schema_error("gts.positions", "expected an array");
        std::vector<Vec3> pos;
        for (std::size_t i = 0; i < it->size(); ++i)
            pos.push_back(get_vec3((*it)[i], "gts.positions[" + std::to_string(i) + "]"));
        s.gts = std::move(pos);
    } else {
        SampledGts smp;
        smp.count = get_uint(field(gj, "count", "gts"), "gts.count");
        if (auto sit = gj.find("seed"); sit != gj.end())
            smp.seed = get_uint(*sit, "gts.seed");
        s.gts = smp;
    }

    if (auto it = j.find("solver"); it != j.end()) {
        if (!it->is_object())
            schema_error("solver", "expected an object");
        auto& o = s.solver;
        auto num = [&](const char* key, std::optional<double>& dst) {
            if (auto f = it->find(key); f != it->end())
                dst = get_number(*f, std::string("solver.") + key);
        };
        auto uint = [&](const char* key, std::optional<std::size_t>& dst) {
            if (auto f = it->find(key); f != it->end())
                dst = get_uint(*f, std::string("solver.") + key);
        };
        num("rho", o.rho);
        num("eps_abs", o.eps_abs);
        num("eps_rel", o.eps_rel);
        uint("max_iters", o.max_iters);
        num("bisection_tol", o.bisection_tol);
        uint("reweight_rounds", o.reweight_rounds);
        num("reweight_epsilon", o.reweight_epsilon);
        num("activation_threshold", o.activation_threshold);
        try {
            o.apply({}).validate();
        } catch (const DomainError& e) {
            schema_error("solver", e.what());
        }
    }
    return s;
}

inline Scenario load_scenario(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open scenario '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scenario '" + path + "': " + e.what());
    }
    return scenario_from_json(j, std::filesystem::path(path).parent_path());
}

inline void save_scenario(const Scenario& s, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write scenario '" + path + "'");
    os << scenario_to_json(s).dump(2) << '\n';
    if (!os)
        throw Error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Terminals and instances
// ---------------------------------------------------------------------------

/// GT-grid points outside every building footprint, x fastest then y.
inline std::vector<Vec3> gt_candidates(const Scenario& s)
{
    std::vector<Vec3> out;
    const Vec3 lo = s.region.min_corner, hi = s.region.max_corner;
    const double h = s.gt_grid.spacing;
    const auto nx = static_cast<std::size_t>(std::floor((hi.x - lo.x) / h + 1e-9)) + 1;
    const auto ny = static_cast<std::size_t>(std::floor((hi.y - lo.y) / h + 1e-9)) + 1;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            double x = lo.x + h * static_cast<double>(i), y = lo.y + h * static_cast<double>(j);
            bool blocked = std::any_of(s.buildings.begin(), s.buildings.end(),
                                       [&](const Building& b) { return b.footprint_contains(x, y); });
            if (!blocked)
                out.push_back({x, y, lo.z + s.gt_grid.height});
        }
    return out;
}

/// `count` distinct GT-grid points chosen uniformly without replacement,
/// returned in grid order.
inline std::vector<Vec3> sample_gts(const Scenario& s, std::size_t count, std::uint64_t seed)
{
    auto cand = gt_candidates(s);
    if (count > cand.size())
        throw DomainError("sample_gts: requested " + std::to_string(count) + " terminals but only " +
                          std::to_string(cand.size()) + " ground positions are outside buildings");
    std::vector<std::size_t> idx(cand.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    std::vector<Vec3> out;
    out.reserve(count);
    for (auto i : idx)
        out.push_back(cand[i]);
    return out;
}

inline std::vector<Vec3> scenario_gts(const Scenario& s)
{
    if (auto* pos = std::get_if<std::vector<Vec3>>(&s.gts))
        return *pos;
    const auto& smp = std::get<SampledGts>(s.gts);
    return sample_gts(s, smp.count, smp.seed);
}

inline std::vector<Vec3> scenario_flight_grid(const Scenario& s)
{
    return build_flight_grid(s.region, s.flight_dims, s.min_flight_height, s.buildings);
}

inline GainModel scenario_gain_model(const Scenario& s)
{
    switch (s.channel) {
    case ChannelModel::free_space: return FreeSpaceModel{};
    case ChannelModel::alhourani: return AlHouraniModel{s.alhourani};
    case ChannelModel::ingested: return IngestedModel{load_gain_map(s.gain_map_path)};
    case ChannelModel::tomographic: break;
    }
    auto slf = std::make_shared<SpatialLossField>(voxelize_slf(s.buildings, voxel_grid(s.region, s.slf_dims)));
    return TomographicModel{std::move(slf)};
}

/// Everything needed to run a placement algorithm on one scenario draw.
struct Instance {
    std::vector<Vec3> gts;
    std::vector<Vec3> flight_grid;
    PlacementProblem problem;
};

inline Instance build_instance(const Scenario& s, std::vector<Vec3> gts, unsigned threads = 1)
{
    s.validate();
    Instance inst;
    inst.gts = std::move(gts);
    inst.flight_grid = scenario_flight_grid(s);
    Matrix c = inst.gts.empty() ? Matrix(0, inst.flight_grid.size())
                                : build_capacity_matrix(inst.gts, inst.flight_grid, scenario_gain_model(s), s.radio,
                                                        threads);
    inst.problem = PlacementProblem(std::move(c), backhaul_vector(inst.flight_grid, s.backhaul), s.min_rate);
    return inst;
}

inline Instance build_instance(const Scenario& s, unsigned threads = 1)
{
    return build_instance(s, scenario_gts(s), threads);
}

} // namespace absplace
