#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "lagtess/rng.hpp"
#include "lagtess/tessellation.hpp"

namespace lagtess {

// Sufficient-statistic terms of the conditional radii model. The enum order
// doubles as the layout of the raw statistic table below.
enum class TermKind {
    LogRadius,          // sum_j log(t_j / 6)
    LogOneMinusRadius,  // sum_j log(1 - t_j / 6)
    SumNof,             // twice the total number of faces
    SumSurf,            // twice the total surface area
    SumVolSq,           // sum of squared cell volumes
    SumDvol,            // sum of |vol_i - vol_j| over faces (deduplicated)
};
inline constexpr int kNumRawStats = 6;

// '+'- or comma-separated names: beta (expands to both log terms), nof, surf,
// vol2, dvol; e.g. "beta+nof+dvol".
std::vector<TermKind> parse_terms(const std::string& names);
std::string term_set_name(const std::vector<TermKind>& terms);

struct RadiiModelSpec {
    std::vector<TermKind> terms;
    Eigen::VectorXd theta;

    int dim() const { return static_cast<int>(terms.size()); }
    // sizes match, no duplicate terms, theta > -1 on the two log terms
    void validate() const;
};

// H(y, t) for a feasible tessellation; throws Infeasible on empty cells.
Eigen::VectorXd sufficient_stats(const std::vector<TermKind>& terms,
                                 const PeriodicTessellation& tess);

// log of the unnormalized density; -inf (not an error) when some radius is
// outside [0, r_max] or some cell is empty.
double log_unnormalized_density(const RadiiModelSpec& spec, const MarkedPointPattern& pattern,
                                const TessellationOptions& topts = {});

// Change in the four geometry statistics (nof, surf, volsq, dvol) when the
// radius of `site` becomes `new_radius`; computed from the incremental
// preview, touching only affected cells.
struct GeomDelta {
    bool feasible = true;
    double nof = 0.0, surf = 0.0, volsq = 0.0, dvol = 0.0;
};
GeomDelta geom_stat_deltas(const PeriodicTessellation& tess, int site, double new_radius);

struct MwgOptions {
    long n_sweeps = 500;
    double proposal_sd = 0.2;
    bool random_scan = false;  // default: systematic 1..m
    double r_max = 6.0;
};

struct MwgDiagnostics {
    long proposed = 0;
    long accepted = 0;
    double acceptanceRate() const { return proposed ? double(accepted) / proposed : 0.0; }
};

struct MwgResult {
    std::vector<double> radii;
    MwgDiagnostics diagnostics;
};

// Metropolis-within-Gibbs for the radii given the points. Default initial
// state: all radii equal (the tessellation is then Voronoi, hence feasible).
MwgResult simulate_radii_mwg(const RadiiModelSpec& spec, const std::vector<Vec3>& points,
                             const Window& window, const MwgOptions& opts, Rng& rng,
                             const std::vector<double>* initial = nullptr,
                             const TessellationOptions& topts = {});

struct RadiiQuadrature {
    int n_nodes = 120;  // midpoint rule on [0, r_max]
};

// Per-site x per-node raw statistics for the radii pseudolikelihood. This is
// the expensive, theta- and term-set-independent part: one incremental
// preview per (site, node). Reused across candidate term sets.
class RadiiNodeTable {
public:
    RadiiNodeTable(const MarkedPointPattern& pattern, const RadiiQuadrature& quad = {},
                   const TessellationOptions& topts = {});

    long sites() const { return m_; }
    int nodes() const { return n_nodes_; }
    double nodeWeight() const { return node_weight_; }
    // raw observed statistics in TermKind order
    const std::array<double, kNumRawStats>& observedRaw() const { return obs_raw_; }

    bool feasibleAt(long site, int node) const { return feas_[site * n_nodes_ + node] != 0; }
    // raw statistic `kind` of the pattern with radius of `site` set to node value
    double rawAt(long site, int node, TermKind kind) const;

private:
    long m_ = 0;
    int n_nodes_ = 0;
    double node_weight_ = 0.0;
    std::array<double, kNumRawStats> obs_raw_{};
    std::vector<double> node_u_;
    std::vector<double> node_lograd_, node_log1m_;   // per node
    std::vector<double> rest_lograd_, rest_log1m_;   // per site, excluding own radius
    std::vector<std::uint8_t> feas_;                 // m x n
    std::vector<std::array<double, 4>> geom_;        // m x n: nof, surf, volsq, dvol
};

struct RadiiPlValue {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

class RadiiPlWorkspace {
public:
    RadiiPlWorkspace(std::vector<TermKind> terms, std::shared_ptr<const RadiiNodeTable> table);
    RadiiPlWorkspace(const std::vector<TermKind>& terms, const MarkedPointPattern& pattern,
                     const RadiiQuadrature& quad = {}, const TessellationOptions& topts = {});

    RadiiPlValue eval(const Eigen::VectorXd& theta) const;
    int dim() const { return static_cast<int>(terms_.size()); }
    const Eigen::VectorXd& observedStats() const { return h_obs_; }

private:
    std::vector<TermKind> terms_;
    std::shared_ptr<const RadiiNodeTable> table_;
    Eigen::VectorXd h_obs_;
};

double log_pseudolikelihood_radii(const RadiiModelSpec& spec, const MarkedPointPattern& pattern,
                                  const RadiiQuadrature& quad = {},
                                  Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr,
                                  const TessellationOptions& topts = {});

struct RadiiFitOptions {
    RadiiQuadrature quad;
    double grad_tol = 1e-8;
    int max_iter = 100;
};

struct RadiiFitResult {
    RadiiModelSpec spec;
    double log_pl = 0.0;
    int iterations = 0;
};

// Newton-Raphson from theta = 0 with step halving; steps shrink to keep the
// log-term thetas in the open set (> -1).
RadiiFitResult fit_mple_radii(const std::vector<TermKind>& terms,
                              const MarkedPointPattern& pattern,
                              const RadiiFitOptions& opts = {});
RadiiFitResult fit_mple_radii(const std::vector<TermKind>& terms,
                              std::shared_ptr<const RadiiNodeTable> table,
                              const RadiiFitOptions& opts = {});

}  // namespace lagtess
