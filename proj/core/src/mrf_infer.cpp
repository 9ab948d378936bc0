#include "sdnloc/mrf_infer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "sdnloc/errors.hpp"

namespace sdnloc {

namespace {

// Mean RGB of each block, scaled to [0,255].
std::vector<std::array<double, 3>> block_colors(const ImageRgb& image, const BlockGrid& grid) {
    std::vector<std::array<double, 3>> colors(grid.block_count());
    const std::size_t B = grid.block_size;
    for (std::size_t br = 0; br < grid.rows; ++br) {
        for (std::size_t bc = 0; bc < grid.cols; ++bc) {
            double acc[3] = {0.0, 0.0, 0.0};
            for (std::size_t r = br * B; r < (br + 1) * B; ++r)
                for (std::size_t c = bc * B; c < (bc + 1) * B; ++c) {
                    const double* p = image.pixel(r, c);
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            const double inv = 255.0 / static_cast<double>(B * B);
            colors[br * grid.cols + bc] = {acc[0] * inv, acc[1] * inv, acc[2] * inv};
        }
    }
    return colors;
}

double color_dist2(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
    return dr * dr + dg * dg + db * db;
}

void check_params(const MrfParams& p) {
    if (p.alpha < 0.0 || p.beta0 < 0.0 || p.beta1 < 0.0 || p.phi <= 0.0)
        throw InputError("MRF parameters must be non-negative (phi positive)");
}

// Unary energies under the probability floor: index 0 = cost of label 0.
inline void unary_costs(double p, double alpha, double& u0, double& u1) {
    const double q = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    u0 = -std::log(1.0 - q);
    u1 = -std::log(q) + alpha;
}

// Dinic max-flow specialized for the 4-connected block lattice plus
// source/sink terminals. Floating capacities, 1e-12 saturation tolerance.
class GridMaxFlow {
public:
    static constexpr double kEps = 1e-12;

    explicit GridMaxFlow(std::size_t nodes) : n_(nodes + 2), head_(n_, -1) {
        source_ = nodes;
        sink_ = nodes + 1;
    }

    void add_edge(std::size_t u, std::size_t v, double cap_uv, double cap_vu) {
        edges_.push_back({static_cast<int>(v), head_[u], cap_uv});
        head_[u] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({static_cast<int>(u), head_[v], cap_vu});
        head_[v] = static_cast<int>(edges_.size()) - 1;
    }

    void add_terminal(std::size_t node, double cap_source, double cap_sink) {
        add_edge(source_, node, cap_source, 0.0);
        add_edge(node, sink_, cap_sink, 0.0);
    }

    void solve() {
        while (bfs_levels()) {
            iter_ = head_;
            while (dfs_augment(source_, std::numeric_limits<double>::infinity()) > kEps) {}
        }
    }

    /// True if node stays on the source side of the min cut.
    bool source_side(std::size_t node) const { return level_[node] >= 0; }

private:
    struct Edge {
        int to;
        int next;
        double cap;
    };

    bool bfs_levels() {
        level_.assign(n_, -1);
        std::queue<std::size_t> q;
        q.push(source_);
        level_[source_] = 0;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (int e = head_[u]; e != -1; e = edges_[e].next) {
                const auto v = static_cast<std::size_t>(edges_[e].to);
                if (level_[v] < 0 && edges_[e].cap > kEps) {
                    level_[v] = level_[u] + 1;
                    q.push(v);
                }
            }
        }
        return level_[sink_] >= 0;
    }

    double dfs_augment(std::size_t u, double pushed) {
        if (u == sink_) return pushed;
        for (int& e = iter_[u]; e != -1; e = edges_[e].next) {
            const auto v = static_cast<std::size_t>(edges_[e].to);
            if (level_[v] == level_[u] + 1 && edges_[e].cap > kEps) {
                const double d = dfs_augment(v, std::min(pushed, edges_[e].cap));
                if (d > kEps) {
                    edges_[e].cap -= d;
                    edges_[e ^ 1].cap += d;
                    return d;
                }
            }
        }
        return 0.0;
    }

    std::size_t n_, source_, sink_;
    std::vector<int> head_, iter_;
    std::vector<Edge> edges_;
    std::vector<int> level_;
};

}  // namespace

EdgeWeights pairwise_weights(const ImageRgb& image, const BlockGrid& grid,
                             const MrfParams& params) {
    check_params(params);
    const auto colors = block_colors(image, grid);
    EdgeWeights w;
    w.rows = grid.rows;
    w.cols = grid.cols;
    w.horizontal.resize(grid.rows * (grid.cols - 1));
    w.vertical.resize((grid.rows - 1) * grid.cols);
    const double inv2phi2 = 1.0 / (2.0 * params.phi * params.phi);
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c + 1 < grid.cols; ++c)
            w.horizontal[r * (grid.cols - 1) + c] =
                params.beta0 + params.beta1 * std::exp(-color_dist2(colors[r * grid.cols + c],
                                                                    colors[r * grid.cols + c + 1]) *
                                                       inv2phi2);
    for (std::size_t r = 0; r + 1 < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c)
            w.vertical[r * grid.cols + c] =
                params.beta0 + params.beta1 * std::exp(-color_dist2(colors[r * grid.cols + c],
                                                                    colors[(r + 1) * grid.cols + c]) *
                                                       inv2phi2);
    return w;
}

EnergyBreakdown energy(const LabelField& labels, const TamperMap& probs,
                       const EdgeWeights& weights, const MrfParams& params) {
    const std::size_t rows = probs.grid.rows, cols = probs.grid.cols;
    if (labels.labels.size() != probs.p.size() || weights.rows != rows || weights.cols != cols)
        throw InputError("energy: shape mismatch");

    EnergyBreakdown e;
    for (std::size_t i = 0; i < probs.p.size(); ++i) {
        double u0, u1;
        unary_costs(probs.p[i], 0.0, u0, u1);
        e.likelihood_energy += labels.labels[i] ? u1 : u0;
        if (labels.labels[i]) e.unary_penalty += params.alpha;
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + 1 < cols; ++c)
            if (labels.labels[r * cols + c] != labels.labels[r * cols + c + 1])
                e.pairwise_penalty += weights.h(r, c);
    for (std::size_t r = 0; r + 1 < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (labels.labels[r * cols + c] != labels.labels[(r + 1) * cols + c])
                e.pairwise_penalty += weights.v(r, c);
    e.total = e.likelihood_energy + e.unary_penalty + e.pairwise_penalty;
    return e;
}

LabelField min_cut_labels(const TamperMap& probs, const EdgeWeights& weights,
                          const MrfParams& params) {
    check_params(params);
    const std::size_t rows = probs.grid.rows, cols = probs.grid.cols;
    const std::size_t n = rows * cols;
    if (weights.rows != rows || weights.cols != cols) throw InputError("weight grid mismatch");

    GridMaxFlow flow(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u0, u1;
        unary_costs(probs.p[i], params.alpha, u0, u1);
        // source side = label 0: cutting s->i pays the label-1 cost
        flow.add_terminal(i, u1, u0);
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + 1 < cols; ++c)
            flow.add_edge(r * cols + c, r * cols + c + 1, weights.h(r, c), weights.h(r, c));
    for (std::size_t r = 0; r + 1 < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            flow.add_edge(r * cols + c, (r + 1) * cols + c, weights.v(r, c), weights.v(r, c));

    flow.solve();

    LabelField out;
    out.grid = probs.grid;
    out.labels.resize(n);
    // source side keeps i -> t intact elsewhere; a node on the sink side
    // pays the s -> i capacity, i.e. the label-1 cost
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = flow.source_side(i) ? 0 : 1;
    return out;
}

LbpResult lbp_marginals(const TamperMap& probs, const EdgeWeights& weights,
                        const MrfParams& params, std::size_t max_sweeps) {
    check_params(params);
    if (max_sweeps < 1) throw InputError("max_sweeps must be >= 1");
    const std::size_t rows = probs.grid.rows, cols = probs.grid.cols;
    const std::size_t n = rows * cols;

    // unary factors
    std::vector<std::array<double, 2>> psi(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u0, u1;
        unary_costs(probs.p[i], params.alpha, u0, u1);
        psi[i] = {std::exp(-u0), std::exp(-u1)};
    }

    // directed messages, 4 per node: 0=from left nbr, 1=right, 2=up, 3=down
    std::vector<std::array<std::array<double, 2>, 4>> msg(
        n, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}});

    auto edge_w = [&](std::size_t i, int dir) {
        const std::size_t r = i / cols, c = i % cols;
        switch (dir) {
            case 0: return weights.h(r, c - 1);  // left neighbor -> i
            case 1: return weights.h(r, c);      // right neighbor -> i
            case 2: return weights.v(r - 1, c);  // up
            default: return weights.v(r, c);     // down
        }
    };
    auto has_nbr = [&](std::size_t i, int dir) {
        const std::size_t r = i / cols, c = i % cols;
        switch (dir) {
            case 0: return c > 0;
            case 1: return c + 1 < cols;
            case 2: return r > 0;
            default: return r + 1 < rows;
        }
    };
    auto nbr_of = [&](std::size_t i, int dir) -> std::size_t {
        switch (dir) {
            case 0: return i - 1;
            case 1: return i + 1;
            case 2: return i - cols;
            default: return i + cols;
        }
    };
    const int opposite[4] = {1, 0, 3, 2};

    LbpResult result;
    double damping = 0.5;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double residual = 0.0;
        auto next = msg;
        for (std::size_t i = 0; i < n; ++i) {
            for (int dir = 0; dir < 4; ++dir) {
                if (!has_nbr(i, dir)) continue;
                const std::size_t j = nbr_of(i, dir);
                // message i -> j, stored at j's slot opposite[dir]
                const double w = edge_w(i, dir);
                const double agree = 1.0, differ = std::exp(-w);
                double prod[2] = {psi[i][0], psi[i][1]};
                for (int d2 = 0; d2 < 4; ++d2) {
                    if (d2 == dir || !has_nbr(i, d2)) continue;
                    prod[0] *= msg[i][d2][0];
                    prod[1] *= msg[i][d2][1];
                }
                double m0 = prod[0] * agree + prod[1] * differ;
                double m1 = prod[0] * differ + prod[1] * agree;
                const double z = m0 + m1;
                if (z > 0.0) {
                    m0 /= z;
                    m1 /= z;
                } else {
                    m0 = m1 = 0.5;
                }
                auto& slot = next[j][opposite[dir]];
                const double old0 = msg[j][opposite[dir]][0];
                slot[0] = damping * m0 + (1.0 - damping) * old0;
                slot[1] = damping * m1 + (1.0 - damping) * msg[j][opposite[dir]][1];
                residual = std::max(residual, std::abs(m0 - old0));
            }
        }
        msg.swap(next);
        result.sweeps = sweep + 1;
        if (residual < 1e-6) {
            if (!result.converged) {
                result.converged = true;
                damping = 1.0;  // undamped clean-up sweeps settle onto the fixed point
            } else if (residual < 1e-15) {
                break;
            }
        }
    }

    result.marginals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double b0 = psi[i][0], b1 = psi[i][1];
        for (int dir = 0; dir < 4; ++dir) {
            if (!has_nbr(i, dir)) continue;
            b0 *= msg[i][dir][0];
            b1 *= msg[i][dir][1];
        }
        result.marginals[i] = b1 / (b0 + b1);
    }
    return result;
}

namespace {

// For spatially coherent labelings the plain pseudo-likelihood is nearly flat
// in alpha and monotone in the betas (neighbor terms dominate every
// conditional), so the grid search would drift to the box corner. A small
// ridge on omega breaks the degeneracy toward the weakest parameters that
// still explain the labeling.
constexpr double kOmegaRidge = 0.5;

// Gibbs pseudo-log-likelihood of a labeling under (alpha, beta0, beta1);
// similarity terms are precomputed so each combination is a cheap sweep.
double pseudo_log_likelihood(const LabelField& f, const TamperMap& probs,
                             const EdgeWeights& sim, double alpha, double beta0, double beta1) {
    const std::size_t rows = probs.grid.rows, cols = probs.grid.cols;
    double pll = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            double u0, u1;
            unary_costs(probs.p[i], alpha, u0, u1);
            double pair0 = 0.0, pair1 = 0.0;
            auto add_nbr = [&](std::size_t j, double w) {
                if (f.labels[j] == 0)
                    pair1 += w;
                else
                    pair0 += w;
            };
            if (c > 0) add_nbr(i - 1, beta0 + beta1 * sim.h(r, c - 1));
            if (c + 1 < cols) add_nbr(i + 1, beta0 + beta1 * sim.h(r, c));
            if (r > 0) add_nbr(i - cols, beta0 + beta1 * sim.v(r - 1, c));
            if (r + 1 < rows) add_nbr(i + cols, beta0 + beta1 * sim.v(r, c));
            const double e0 = u0 + pair0, e1 = u1 + pair1;
            const double m = std::min(e0, e1);
            const double log_z = m - std::log(std::exp(m - e0) + std::exp(m - e1));
            // log P(f_i | neighbors) = -e(f_i) - logsumexp(-e0, -e1)
            pll += -(f.labels[i] ? e1 : e0) + log_z;
        }
    }
    return pll;
}

}  // namespace

ParamEstimate estimate_params(const TamperMap& probs, const ImageRgb& image,
                              const BlockGrid& grid, const LabelField& init_labels,
                              std::size_t iter_max, double phi) {
    if (init_labels.labels.size() != probs.p.size())
        throw InputError("estimate_params: label/probability size mismatch");

    // similarity factors only (beta0 = 0, beta1 = 1): actual weights are
    // beta0 + beta1 * sim
    MrfParams sim_params;
    sim_params.alpha = 0.0;
    sim_params.beta0 = 0.0;
    sim_params.beta1 = 1.0;
    sim_params.phi = phi;
    const EdgeWeights sim = pairwise_weights(image, grid, sim_params);

    std::vector<double> alpha_grid;
    for (int i = 0; i < 12; ++i)
        alpha_grid.push_back(0.1 * std::pow(30.0, static_cast<double>(i) / 11.0));
    std::vector<double> beta0_grid;
    for (int i = 0; i <= 10; ++i) beta0_grid.push_back(0.1 * i);
    std::vector<double> beta1_grid;
    for (int i = 0; i <= 8; ++i) beta1_grid.push_back(0.25 * i);

    ParamEstimate out;
    out.labels = init_labels;

    for (std::size_t iter = 0; iter < iter_max; ++iter) {
        double best_pll = -std::numeric_limits<double>::infinity();
        MrfParams best{};
        best.phi = phi;
        for (double a : alpha_grid)
            for (double b0 : beta0_grid)
                for (double b1 : beta1_grid) {
                    const double pll =
                        pseudo_log_likelihood(out.labels, probs, sim, a, b0, b1) -
                        kOmegaRidge * (a * a + b0 * b0 + b1 * b1);
                    if (pll > best_pll) {
                        best_pll = pll;
                        best.alpha = a;
                        best.beta0 = b0;
                        best.beta1 = b1;
                    }
                }

        out.params = best;
        const EdgeWeights w = pairwise_weights(image, grid, best);

        EnergyTraceEntry entry;
        entry.iteration = iter;
        entry.before_cut = energy(out.labels, probs, w, best);
        LabelField next = min_cut_labels(probs, w, best);
        entry.after_cut = energy(next, probs, w, best);
        out.trace.push_back(entry);

        const bool fixed_point = next.labels == out.labels.labels;
        out.labels = std::move(next);
        if (fixed_point) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace sdnloc
