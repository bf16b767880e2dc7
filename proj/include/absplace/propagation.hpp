#pragma once

#include <absplace/errors.hpp>
#include <absplace/geometry.hpp>
#include <absplace/matrix.hpp>
#include <absplace/parallel.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace absplace {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RadioParams {
    double bandwidth_hz = 20e6;
    double tx_power_dbm = 20.0;
    double noise_interf_dbm = -96.0;
    double carrier_hz = 2.4e9;

    double wavelength() const noexcept { return kSpeedOfLight / carrier_hz; }

    void validate() const
    {
        if (!(bandwidth_hz > 0.0))
            throw DomainError("radio: bandwidth must be positive");
        if (!(carrier_hz > 0.0))
            throw DomainError("radio: carrier frequency must be positive");
    }

    friend bool operator==(const RadioParams&, const RadioParams&) = default;
};

/// Mean air-to-ground excess-loss model driven by elevation angle.
struct AlHouraniParams {
    double a = 12.08;
    double b = 0.11;
    double eta_los_db = 2.3;
    double eta_nlos_db = 34.0;

    friend bool operator==(const AlHouraniParams&, const AlHouraniParams&) = default;
};

// ---------------------------------------------------------------------------
// Tomographic line integral
// ---------------------------------------------------------------------------

/// Walks the segment x1 -> x2 through the voxels of `slf`, calling
/// `visit(i, j, k, dt)` for every piece, where dt is the fraction of the
/// segment inside voxel (i, j, k). Indices may fall outside the grid when the
/// segment leaves it. Returns the number of voxel-boundary crossings.
template <class Visitor>
std::size_t traverse_segment(Vec3 x1, Vec3 x2, const Grid3& grid, Visitor&& visit)
{
    for (std::size_t a = 0; a < 3; ++a)
        if (!std::isfinite(x1[a]) || !std::isfinite(x2[a]))
            throw DomainError("traverse_segment: non-finite endpoint");

    // Voxel units: voxel i spans [i - 1/2, i + 1/2).
    std::array<double, 3> start{};
    std::array<double, 3> delta{};
    std::array<int, 3> step{};
    std::array<long, 3> current{};
    for (std::size_t a = 0; a < 3; ++a) {
        start[a] = (x1[a] - grid.origin[a]) / grid.spacing[a];
        delta[a] = (x2[a] - x1[a]) / grid.spacing[a];
        step[a] = (delta[a] > 0.0) - (delta[a] < 0.0);
        if (step[a] == 0)
            delta[a] = 1.0;
        current[a] = static_cast<long>(std::floor(start[a] + 0.5));
    }

    std::size_t crossings = 0;
    double t = 0.0;
    while (t < 1.0) {
        double t_next = 1.0;
        int axis = -1;
        for (std::size_t a = 0; a < 3; ++a) {
            if (step[a] == 0)
                continue;
            double cand = (static_cast<double>(current[a]) + 0.5 * step[a] - start[a]) / delta[a];
            if (cand < t_next) {
                t_next = cand;
                axis = static_cast<int>(a);
            }
        }
        t_next = std::max(t_next, t);
        visit(current[0], current[1], current[2], t_next - t);
        t = t_next;
        if (axis >= 0) {
            current[static_cast<std::size_t>(axis)] += step[static_cast<std::size_t>(axis)];
            ++crossings;
        }
    }
    return crossings;
}

/// Shadowing between two points: exact line integral of the piecewise-constant
/// field divided by sqrt of the segment length.
inline double tomographic_integral(Vec3 x1, Vec3 x2, const SpatialLossField& slf)
{
    double len = distance(x1, x2);
    if (len == 0.0)
        return 0.0;
    double acc = 0.0;
    traverse_segment(x1, x2, slf.grid(), [&](long i, long j, long k, double dt) {
        acc += dt * slf.clamped(i, j, k);
    });
    return std::sqrt(len) * acc;
}

// ---------------------------------------------------------------------------
// Channel gains and capacity
// ---------------------------------------------------------------------------

inline double gain_free_space(Vec3 gt, Vec3 abs_pos, double lambda_m)
{
    double d = distance(gt, abs_pos);
    if (d == 0.0)
        throw DomainError("gain: coincident endpoints");
    return 20.0 * std::log10(lambda_m / (4.0 * std::numbers::pi * d));
}

inline double gain_tomographic(Vec3 gt, Vec3 abs_pos, const SpatialLossField& slf, double lambda_m)
{
    return gain_free_space(gt, abs_pos, lambda_m) - tomographic_integral(gt, abs_pos, slf);
}

/// Probability of line of sight at elevation `theta_deg`.
inline double alhourani_los_probability(double theta_deg, const AlHouraniParams& p)
{
    return 1.0 / (1.0 + p.a * std::exp(-p.b * (theta_deg - p.a)));
}

inline double gain_alhourani(Vec3 gt, Vec3 abs_pos, const AlHouraniParams& params, double lambda_m)
{
    if (!(params.b > 0.0))
        throw DomainError("alhourani: b must be positive");
    Vec3 d = abs_pos - gt;
    if (!(d.z > 0.0))
        throw DomainError("alhourani: transmitter must be strictly above the terminal");
    double theta = std::atan2(d.z, std::hypot(d.x, d.y)) * 180.0 / std::numbers::pi;
    double p_los = alhourani_los_probability(theta, params);
    double fspl = -gain_free_space(gt, abs_pos, lambda_m);
    return -(fspl + p_los * params.eta_los_db + (1.0 - p_los) * params.eta_nlos_db);
}

/// Shannon capacity in bit/s for a channel gain in dB.
inline double capacity(double gain_db, const RadioParams& params)
{
    params.validate();
    double snr = std::pow(10.0, (params.tx_power_dbm + gain_db - params.noise_interf_dbm) / 10.0);
    return params.bandwidth_hz * std::log1p(snr) / std::numbers::ln2;
}

// ---------------------------------------------------------------------------
// Gain maps
// ---------------------------------------------------------------------------

enum class ChannelModel { tomographic, free_space, alhourani, ingested };

inline std::string_view to_string(ChannelModel m)
{
    switch (m) {
    case ChannelModel::tomographic: return "tomographic";
    case ChannelModel::free_space: return "free_space";
    case ChannelModel::alhourani: return "alhourani";
    case ChannelModel::ingested: return "ingested";
    }
    return "unknown";
}

inline std::optional<ChannelModel> parse_channel_model(std::string_view s)
{
    if (s == "tomographic") return ChannelModel::tomographic;
    if (s == "free_space") return ChannelModel::free_space;
    if (s == "alhourani") return ChannelModel::alhourani;
    if (s == "ingested") return ChannelModel::ingested;
    return std::nullopt;
}

/// Gains in dB from every terminal (rows) to every flight-grid point (cols).
struct GainMap {
    Matrix gains_db;
    ChannelModel provenance = ChannelModel::ingested;
};

inline void write_gain_map(const GainMap& map, std::ostream& os)
{
    const Matrix& g = map.gains_db;
    os << g.rows() << ' ' << g.cols() << '\n';
    char buf[64];
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", g(r, c));
            if (c)
                os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

inline void save_gain_map(const GainMap& map, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    write_gain_map(map, os);
    if (!os)
        throw Error("failed writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view tok, T& out)
{
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

} // namespace detail

inline GainMap read_gain_map(std::istream& is)
{
    std::string line;
    std::size_t lineno = 0;
    auto next_nonblank = [&]() -> bool {
        while (std::getline(is, line)) {
            ++lineno;
            if (!detail::split_ws(line).empty())
                return true;
        }
        return false;
    };

    if (!next_nonblank())
        throw ParseError("missing header", 1);
    auto head = detail::split_ws(line);
    std::size_t rows = 0, cols = 0;
    if (head.size() != 2 || !detail::parse_number(head[0], rows) || !detail::parse_number(head[1], cols) ||
        rows == 0 || cols == 0)
        throw ParseError("header must be two positive integers 'M G'", lineno);

    GainMap map{Matrix(rows, cols), ChannelModel::ingested};
    for (std::size_t r = 0; r < rows; ++r) {
        if (!next_nonblank())
            throw ParseError("expected " + std::to_string(rows) + " data rows, found " + std::to_string(r),
                             lineno + 1);
        auto toks = detail::split_ws(line);
        if (toks.size() != cols)
            throw ParseError("expected " + std::to_string(cols) + " values, found " + std::to_string(toks.size()),
                             lineno);
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!detail::parse_number(toks[c], v))
                throw ParseError("malformed number '" + std::string(toks[c]) + "'", lineno);
            if (!std::isfinite(v))
                throw ParseError("non-finite gain value", lineno);
            map.gains_db(r, c) = v;
        }
    }
    if (next_nonblank())
        throw ParseError("trailing data after " + std::to_string(rows) + " rows", lineno);
    return map;
}

inline GainMap load_gain_map(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open gain map '" + path + "'");
    return read_gain_map(is);
}

// ---------------------------------------------------------------------------
// Capacity matrix
// ---------------------------------------------------------------------------

struct FreeSpaceModel {};

struct TomographicModel {
    std::shared_ptr<const SpatialLossField> slf;
};

struct AlHouraniModel {
    AlHouraniParams params;
};

/// Precomputed gains, indexed by (terminal, grid point) rather than by position.
struct IngestedModel {
    GainMap map;
};

using GainModel = std::variant<FreeSpaceModel, TomographicModel, AlHouraniModel, IngestedModel>;

namespace detail {

inline double model_gain(const GainModel& model, std::size_t m, std::size_t g, Vec3 gt, Vec3 abs_pos,
                         double lambda)
{
    struct Eval {
        std::size_t m, g;
        Vec3 gt, abs_pos;
        double lambda;
        double operator()(const FreeSpaceModel&) const { return gain_free_space(gt, abs_pos, lambda); }
        double operator()(const TomographicModel& t) const
        {
            return gain_tomographic(gt, abs_pos, *t.slf, lambda);
        }
        double operator()(const AlHouraniModel& a) const { return gain_alhourani(gt, abs_pos, a.params, lambda); }
        double operator()(const IngestedModel& i) const { return i.map.gains_db(m, g); }
    };
    return std::visit(Eval{m, g, gt, abs_pos, lambda}, model);
}

} // namespace detail

/// Gains (dB) from each terminal to each flight-grid point under `model`.
inline GainMap compute_gain_map(std::span<const Vec3> gts, std::span<const Vec3> flight_grid,
                                const GainModel& model, double lambda_m, unsigned threads = 1)
{
    if (gts.empty() || flight_grid.empty())
        throw DomainError("gain map: terminal and flight-grid lists must be non-empty");
    if (auto* ing = std::get_if<IngestedModel>(&model)) {
        const Matrix& g = ing->map.gains_db;
        if (g.rows() != gts.size() || g.cols() != flight_grid.size())
            throw DomainError("ingested gain map is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                              ", expected " + std::to_string(gts.size()) + "x" +
                              std::to_string(flight_grid.size()));
        return ing->map;
    }

    ChannelModel tag = std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FreeSpaceModel>)
                return ChannelModel::free_space;
            else if constexpr (std::is_same_v<T, TomographicModel>)
                return ChannelModel::tomographic;
            else if constexpr (std::is_same_v<T, AlHouraniModel>)
                return ChannelModel::alhourani;
            else
                return ChannelModel::ingested;
        },
        model);

    GainMap out{Matrix(gts.size(), flight_grid.size()), tag};
    detail::parallel_for(gts.size(), threads, [&](std::size_t m) {
        for (std::size_t g = 0; g < flight_grid.size(); ++g) {
            try {
                out.gains_db(m, g) = detail::model_gain(model, m, g, gts[m], flight_grid[g], lambda_m);
            } catch (const DomainError& e) {
                throw DomainError("gain(" + std::to_string(m) + ", " + std::to_string(g) + "): " + e.what());
            }
        }
    });
    return out;
}

inline Matrix capacity_matrix_from_gains(const GainMap& map, const RadioParams& params)
{
    params.validate();
    Matrix c(map.gains_db.rows(), map.gains_db.cols());
    for (std::size_t r = 0; r < c.rows(); ++r)
        for (std::size_t g = 0; g < c.cols(); ++g)
            c(r, g) = capacity(map.gains_db(r, g), params);
    return c;
}

/// C(m, g) = capacity of the link between terminal m and flight-grid point g.
inline Matrix build_capacity_matrix(std::span<const Vec3> gts, std::span<const Vec3> flight_grid,
                                    const GainModel& model, const RadioParams& params, unsigned threads = 1)
{
    params.validate();
    return capacity_matrix_from_gains(compute_gain_map(gts, flight_grid, model, params.wavelength(), threads),
                                      params);
}

// ---------------------------------------------------------------------------
// Backhaul
// ---------------------------------------------------------------------------

struct ConstantBackhaul {
    double rate_bps = 0.0;
};

/// Backhaul capacity from per-grid-point gains to the terrestrial station(s).
struct MappedBackhaul {
    std::vector<double> gains_db;
    RadioParams radio;
};

using BackhaulSpec = std::variant<ConstantBackhaul, MappedBackhaul>;

inline std::vector<double> backhaul_vector(std::span<const Vec3> flight_grid, const BackhaulSpec& spec)
{
    if (auto* c = std::get_if<ConstantBackhaul>(&spec)) {
        if (!(c->rate_bps >= 0.0))
            throw DomainError("backhaul: constant rate must be non-negative");
        return std::vector<double>(flight_grid.size(), c->rate_bps);
    }
    const auto& m = std::get<MappedBackhaul>(spec);
    if (m.gains_db.size() != flight_grid.size())
        throw DomainError("backhaul: gain vector length " + std::to_string(m.gains_db.size()) +
                          " does not match flight grid size " + std::to_string(flight_grid.size()));
    std::vector<double> out(flight_grid.size());
    for (std::size_t g = 0; g < out.size(); ++g)
        out[g] = capacity(m.gains_db[g], m.radio);
    return out;
}

} // namespace absplace
