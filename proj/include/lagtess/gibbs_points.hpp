#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lagtess/geometry.hpp"
#include "lagtess/rng.hpp"

namespace lagtess {

// Multiscale pairwise-interaction process M_d: density proportional to
//   beta^m prod_i gamma_i^{#pairs with distance in (delta_{i-1}, delta_i]}
// d = 1 is the homogeneous Poisson process with intensity beta.
struct MultiscaleParams {
    double beta = 1.0;
    std::vector<double> gammas;  // gamma_1..gamma_{d-1}, each in [0,1]
    std::vector<double> deltas;  // 0 < delta_1 < ... < delta_{d-1}

    int order() const { return static_cast<int>(gammas.size()) + 1; }
    void validate() const;
};

// Counts of points of `points` within each band (delta_{i-1}, delta_i] of u,
// excluding u itself if present.
std::vector<int> band_counts(const Vec3& u, const std::vector<Vec3>& points,
                             const std::vector<double>& deltas, const Window& window);

// Pattern-level band pair counts (S_{delta_i} - S_{delta_{i-1}}).
std::vector<long> band_pair_counts(const std::vector<Vec3>& points,
                                   const std::vector<double>& deltas, const Window& window);

// Papangelou conditional intensity lambda*(u, y); 0^0 = 1.
double papangelou(const MultiscaleParams& params, const std::vector<Vec3>& points,
                  const Vec3& u, const Window& window);

struct BdmOptions {
    long n_steps = 100000;
    double move_sd = 0.5;    // isotropic Gaussian displacement, wrapped
    long trace_stride = 100;
};

struct BdmDiagnostics {
    long births_proposed = 0, births_accepted = 0;
    long deaths_proposed = 0, deaths_accepted = 0;
    long moves_proposed = 0, moves_accepted = 0;
    std::vector<int> count_trace;
};

struct BdmResult {
    std::vector<Vec3> points;
    BdmDiagnostics diagnostics;
};

// Birth-death-move Metropolis-Hastings chain with stationary density M_d.
BdmResult simulate_bdm(const MultiscaleParams& params, const Window& window,
                       const BdmOptions& opts, Rng& rng,
                       const std::vector<Vec3>* initial = nullptr);

// 3-D midpoint quadrature lattice for the pseudolikelihood integral.
struct PointQuadrature {
    int nx = 64, ny = 64, nz = 128;
};

struct PointPlValue {
    double value = 0.0;
    Eigen::VectorXd grad;   // in theta = (log beta, log gamma_1, ...)
    Eigen::MatrixXd hess;
};

// Precomputed band counts for a fixed pattern/deltas/lattice, so repeated
// evaluations during Newton iterations only touch the exponentials.
class PointPlWorkspace {
public:
    PointPlWorkspace(const std::vector<Vec3>& points, const Window& window,
                     const std::vector<double>& deltas, const PointQuadrature& quad);

    // theta = (log beta, log gamma_1, ..., log gamma_{d-1})
    PointPlValue eval(const Eigen::VectorXd& theta) const;

    int dim() const { return static_cast<int>(deltas_.size()) + 1; }
    const std::vector<long>& pairCounts() const { return pair_counts_; }

private:
    std::vector<double> deltas_;
    std::vector<long> pair_counts_;
    long m_ = 0;
    double volume_ = 0.0;
    double node_weight_ = 0.0;
    int n_nodes_ = 0;
    std::vector<std::uint16_t> node_counts_;  // n_nodes x (d-1)
};

double log_pseudolikelihood_points(const MultiscaleParams& params,
                                   const std::vector<Vec3>& points, const Window& window,
                                   const PointQuadrature& quad, Eigen::VectorXd* grad = nullptr,
                                   Eigen::MatrixXd* hess = nullptr);

struct PointFitOptions {
    PointQuadrature quad;
    double grad_tol = 1e-8;
    int max_iter = 100;
};

struct PointFitResult {
    MultiscaleParams params;
    double log_pl = 0.0;
    int iterations = 0;
    std::vector<bool> gamma_at_zero;  // hard-core boundary per scale
    struct GridEntry {
        std::vector<double> deltas;
        double log_pl;
        bool converged;
    };
    std::vector<GridEntry> grid;  // profile table over the delta grid
};

// All strictly increasing (d-1)-tuples from `values`.
std::vector<std::vector<double>> make_delta_tuples(const std::vector<double>& values, int d);

// Profile maximum pseudolikelihood over the delta grid; Newton-Raphson with
// step halving in theta for each tuple.
PointFitResult fit_mple_points(const std::vector<Vec3>& points, const Window& window, int d,
                               const std::vector<std::vector<double>>& delta_grid,
                               const PointFitOptions& opts = {});

}  // namespace lagtess
