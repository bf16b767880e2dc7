#pragma once

#include <absplace/matrix.hpp>
#include <absplace/problem.hpp>

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace absplace {

/// Dinic max-flow on real capacities.
class MaxFlow {
public:
    explicit MaxFlow(std::size_t nodes) : adj_(nodes) {}

    /// Returns the edge id, usable with flow().
    std::size_t add_edge(std::size_t u, std::size_t v, double cap)
    {
        std::size_t id = edges_.size();
        edges_.push_back({v, cap, 0.0});
        adj_[u].push_back(id);
        edges_.push_back({u, 0.0, 0.0});
        adj_[v].push_back(id + 1);
        return id;
    }

    double flow(std::size_t edge) const { return edges_[edge].flow; }

    double solve(std::size_t s, std::size_t t, double eps = 1e-12)
    {
        eps_ = eps;
        double total = 0.0;
        while (bfs(s, t)) {
            it_.assign(adj_.size(), 0);
            for (double f; (f = dfs(s, t, std::numeric_limits<double>::infinity())) > eps_;)
                total += f;
        }
        return total;
    }

private:
    struct Edge {
        std::size_t to;
        double cap, flow;
    };

    bool bfs(std::size_t s, std::size_t t)
    {
        level_.assign(adj_.size(), -1);
        level_[s] = 0;
        std::vector<std::size_t> queue{s};
        for (std::size_t h = 0; h < queue.size(); ++h) {
            std::size_t u = queue[h];
            for (auto id : adj_[u]) {
                const Edge& e = edges_[id];
                if (level_[e.to] < 0 && e.cap - e.flow > eps_) {
                    level_[e.to] = level_[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        return level_[t] >= 0;
    }

    double dfs(std::size_t u, std::size_t t, double pushed)
    {
        if (u == t)
            return pushed;
        for (auto& i = it_[u]; i < adj_[u].size(); ++i) {
            std::size_t id = adj_[u][i];
            Edge& e = edges_[id];
            if (level_[e.to] != level_[u] + 1 || e.cap - e.flow <= eps_)
                continue;
            double got = dfs(e.to, t, std::min(pushed, e.cap - e.flow));
            if (got > eps_) {
                e.flow += got;
                edges_[id ^ 1].flow -= got;
                return got;
            }
        }
        return 0.0;
    }

    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> it_;
    double eps_ = 1e-12;
};

/// Allocation giving every terminal exactly R^min on the listed columns,
/// found as a max-flow in units of R^min; nullopt if none exists.
/// Columns of the result follow `cols`.
inline std::optional<Matrix> flow_allocation(const PlacementProblem& p, std::span<const std::size_t> cols)
{
    const std::size_t m_count = p.num_gts(), k_count = cols.size();
    Matrix out(m_count, k_count);
    if (m_count == 0 || p.min_rate == 0.0)
        return out;
    const double unit = p.min_rate;
    const std::size_t src = 0, sink = 1 + m_count + k_count;
    MaxFlow mf(sink + 1);
    for (std::size_t m = 0; m < m_count; ++m)
        mf.add_edge(src, 1 + m, 1.0);
    std::vector<std::size_t> link(m_count * k_count, 0);
    std::vector<bool> has(m_count * k_count, false);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < k_count; ++k) {
            double cap = std::min(p.capacity(m, cols[k]) / unit, 1.0);
            if (cap > 0.0) {
                link[m * k_count + k] = mf.add_edge(1 + m, 1 + m_count + k, cap);
                has[m * k_count + k] = true;
            }
        }
    for (std::size_t k = 0; k < k_count; ++k)
        mf.add_edge(1 + m_count + k, sink, p.backhaul[cols[k]] / unit);
    double total = mf.solve(src, sink);
    if (total < static_cast<double>(m_count) * (1.0 - 1e-9))
        return std::nullopt;
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < k_count; ++k)
            if (has[m * k_count + k])
                out(m, k) = std::max(mf.flow(link[m * k_count + k]), 0.0) * unit;
    return out;
}

} // namespace absplace
