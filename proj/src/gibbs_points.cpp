#include "lagtess/gibbs_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lagtess/errors.hpp"

namespace lagtess {

void MultiscaleParams::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (gammas.size() != deltas.size())
        throw std::invalid_argument("gammas and deltas must have equal length");
    for (double g : gammas)
        if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("gamma outside [0,1]");
    double prev = 0.0;
    for (double d : deltas) {
        if (!(d > prev)) throw std::invalid_argument("deltas must be strictly increasing and positive");
        prev = d;
    }
}

std::vector<int> band_counts(const Vec3& u, const std::vector<Vec3>& points,
                             const std::vector<double>& deltas, const Window& window) {
    std::vector<int> counts(deltas.size(), 0);
    if (deltas.empty()) return counts;
    const double dmax2 = deltas.back() * deltas.back();
    for (const auto& p : points) {
        const double d2 = window.dist2(u, p);
        if (d2 <= 0.0 || d2 > dmax2) continue;
        const double d = std::sqrt(d2);
        for (std::size_t i = 0; i < deltas.size(); ++i)
            if (d <= deltas[i]) {
                ++counts[i];
                break;
            }
    }
    return counts;
}

std::vector<long> band_pair_counts(const std::vector<Vec3>& points,
                                   const std::vector<double>& deltas, const Window& window) {
    std::vector<long> counts(deltas.size(), 0);
    if (deltas.empty()) return counts;
    const double dmax2 = deltas.back() * deltas.back();
    for (std::size_t a = 0; a < points.size(); ++a)
        for (std::size_t b = a + 1; b < points.size(); ++b) {
            const double d2 = window.dist2(points[a], points[b]);
            if (d2 > dmax2) continue;
            const double d = std::sqrt(d2);
            for (std::size_t i = 0; i < deltas.size(); ++i)
                if (d <= deltas[i]) {
                    ++counts[i];
                    break;
                }
        }
    return counts;
}

namespace {

double papangelou_excluding(const MultiscaleParams& params, const std::vector<Vec3>& points,
                            const Vec3& u, const Window& window, int exclude) {
    double lam = params.beta;
    if (params.deltas.empty()) return lam;
    const double dmax2 = params.deltas.back() * params.deltas.back();
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (static_cast<int>(j) == exclude) continue;
        const double d2 = window.dist2(u, points[j]);
        if (d2 <= 0.0 || d2 > dmax2) continue;
        const double d = std::sqrt(d2);
        for (std::size_t i = 0; i < params.deltas.size(); ++i)
            if (d <= params.deltas[i]) {
                lam *= params.gammas[i];
                break;
            }
        if (lam == 0.0) return 0.0;
    }
    return lam;
}

}  // namespace

double papangelou(const MultiscaleParams& params, const std::vector<Vec3>& points,
                  const Vec3& u, const Window& window) {
    return papangelou_excluding(params, points, u, window, -1);
}

BdmResult simulate_bdm(const MultiscaleParams& params, const Window& window,
                       const BdmOptions& opts, Rng& rng, const std::vector<Vec3>* initial) {
    params.validate();
    if (opts.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    const double V = window.volume();

    BdmResult res;
    if (initial) {
        res.points = *initial;
    } else {
        const long n0 = static_cast<long>(std::ceil(params.beta * V));
        for (long i = 0; i < n0; ++i)
            res.points.push_back({rng.uniform(0.0, window.a), rng.uniform(0.0, window.b),
                                  rng.uniform(0.0, window.c)});
    }
    auto& y = res.points;
    auto& diag = res.diagnostics;

    for (long step = 0; step < opts.n_steps; ++step) {
        const double pick = rng.uniform();
        if (pick < 1.0 / 3.0) {
            ++diag.births_proposed;
            const Vec3 u{rng.uniform(0.0, window.a), rng.uniform(0.0, window.b),
                         rng.uniform(0.0, window.c)};
            const double lam = papangelou(params, y, u, window);
            const double r = lam * V / static_cast<double>(y.size() + 1);
            if (rng.uniform() < r) {
                y.push_back(u);
                ++diag.births_accepted;
            }
        } else if (pick < 2.0 / 3.0) {
            ++diag.deaths_proposed;
            if (!y.empty()) {
                const std::size_t idx = rng.integer(y.size());
                const double lam =
                    papangelou_excluding(params, y, y[idx], window, static_cast<int>(idx));
                // lam == 0 means the current state has zero density; removing
                // the point can only help, so accept
                const bool accept =
                    (lam == 0.0) || rng.uniform() < static_cast<double>(y.size()) / (V * lam);
                if (accept) {
                    y[idx] = y.back();
                    y.pop_back();
                    ++diag.deaths_accepted;
                }
            }
        } else {
            ++diag.moves_proposed;
            if (!y.empty()) {
                const std::size_t idx = rng.integer(y.size());
                const Vec3 proposal = window.wrap(
                    y[idx] + Vec3{rng.normal(0.0, opts.move_sd), rng.normal(0.0, opts.move_sd),
                                  rng.normal(0.0, opts.move_sd)});
                const double lam_old =
                    papangelou_excluding(params, y, y[idx], window, static_cast<int>(idx));
                const double lam_new =
                    papangelou_excluding(params, y, proposal, window, static_cast<int>(idx));
                const bool accept = (lam_old == 0.0) ? true : rng.uniform() < lam_new / lam_old;
                if (accept) {
                    y[idx] = proposal;
                    ++diag.moves_accepted;
                }
            }
        }
        if (step % opts.trace_stride == 0)
            diag.count_trace.push_back(static_cast<int>(y.size()));
    }
    diag.count_trace.push_back(static_cast<int>(y.size()));
    return res;
}

PointPlWorkspace::PointPlWorkspace(const std::vector<Vec3>& points, const Window& window,
                                   const std::vector<double>& deltas,
                                   const PointQuadrature& quad) {
    if (points.empty()) throw std::invalid_argument("pattern must be nonempty");
    deltas_ = deltas;
    m_ = static_cast<long>(points.size());
    volume_ = window.volume();
    pair_counts_ = band_pair_counts(points, deltas, window);
    n_nodes_ = quad.nx * quad.ny * quad.nz;
    node_weight_ = volume_ / n_nodes_;
    const int nb = static_cast<int>(deltas.size());
    node_counts_.resize(static_cast<std::size_t>(n_nodes_) * nb);
    std::size_t at = 0;
    for (int ix = 0; ix < quad.nx; ++ix)
        for (int iy = 0; iy < quad.ny; ++iy)
            for (int iz = 0; iz < quad.nz; ++iz) {
                const Vec3 u{(ix + 0.5) * window.a / quad.nx, (iy + 0.5) * window.b / quad.ny,
                             (iz + 0.5) * window.c / quad.nz};
                auto counts = band_counts(u, points, deltas, window);
                for (int i = 0; i < nb; ++i)
                    node_counts_[at + i] = static_cast<std::uint16_t>(counts[i]);
                at += nb;
            }
}

PointPlValue PointPlWorkspace::eval(const Eigen::VectorXd& theta) const {
    const int q = dim();
    if (theta.size() != q) throw std::invalid_argument("theta dimension mismatch");
    const int nb = q - 1;

    // gamma_i == 0 is allowed only when the observed band pair count is zero;
    // the corresponding nodes then contribute nothing to the integral
    std::vector<bool> zero(nb, false);
    for (int i = 0; i < nb; ++i) {
        if (std::isinf(theta[i + 1]) && theta[i + 1] < 0) {
            if (pair_counts_[i] > 0)
                throw NonFiniteValue("gamma is zero with positive pair count");
            zero[i] = true;
        }
    }

    PointPlValue out;
    out.grad = Eigen::VectorXd::Zero(q);
    out.hess = Eigen::MatrixXd::Zero(q, q);

    // data term: m log beta + 2 sum_i (S_i - S_{i-1}) log gamma_i
    double value = volume_ + m_ * theta[0];
    out.grad[0] += m_;
    for (int i = 0; i < nb; ++i) {
        if (!zero[i]) value += 2.0 * pair_counts_[i] * theta[i + 1];
        out.grad[i + 1] += 2.0 * pair_counts_[i];
    }

    // integral term: sum over lattice nodes of lambda*(u)
    Eigen::VectorXd s(q);
    std::size_t at = 0;
    for (int node = 0; node < n_nodes_; ++node, at += nb) {
        double log_lam = theta[0];
        bool dead = false;
        s[0] = 1.0;
        for (int i = 0; i < nb; ++i) {
            const double t = node_counts_[at + i];
            s[i + 1] = t;
            if (t > 0) {
                if (zero[i]) dead = true;
                else log_lam += t * theta[i + 1];  // avoid 0 * (-inf)
            }
        }
        if (dead) continue;
        const double w = node_weight_ * std::exp(log_lam);
        value -= w;
        out.grad.noalias() -= w * s;
        out.hess.noalias() -= w * (s * s.transpose());
    }
    for (int i = 0; i < nb; ++i) {
        if (zero[i]) {
            out.grad[i + 1] = 0.0;
            out.hess.row(i + 1).setZero();
            out.hess.col(i + 1).setZero();
            out.hess(i + 1, i + 1) = -1.0;
        }
    }
    out.value = value;
    return out;
}

double log_pseudolikelihood_points(const MultiscaleParams& params,
                                   const std::vector<Vec3>& points, const Window& window,
                                   const PointQuadrature& quad, Eigen::VectorXd* grad,
                                   Eigen::MatrixXd* hess) {
    params.validate();
    PointPlWorkspace ws(points, window, params.deltas, quad);
    Eigen::VectorXd theta(params.order());
    theta[0] = std::log(params.beta);
    for (std::size_t i = 0; i < params.gammas.size(); ++i)
        theta[i + 1] = std::log(params.gammas[i]);  // -inf when gamma == 0
    auto r = ws.eval(theta);
    if (grad) *grad = r.grad;
    if (hess) *hess = r.hess;
    return r.value;
}

std::vector<std::vector<double>> make_delta_tuples(const std::vector<double>& values, int d) {
    std::vector<std::vector<double>> out;
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    const int k = d - 1;
    if (k == 0) {
        out.push_back({});
        return out;
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const int n = static_cast<int>(sorted.size());
    if (n < k) return out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        std::vector<double> tuple(k);
        for (int i = 0; i < k; ++i) tuple[i] = sorted[idx[i]];
        out.push_back(std::move(tuple));
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
    return out;
}

namespace {

struct NewtonOutcome {
    Eigen::VectorXd theta;
    double value;
    int iterations;
};

// Maximize the concave log PL in theta with the box constraint
// theta_i <= 0 for the gamma coordinates.
NewtonOutcome newton_maximize(const PointPlWorkspace& ws, const PointFitOptions& opts,
                              const Eigen::VectorXd& theta0) {
    const int q = ws.dim();
    Eigen::VectorXd theta = theta0;
    auto project = [&](Eigen::VectorXd& t) {
        for (int i = 1; i < q; ++i) t[i] = std::min(t[i], 0.0);
    };
    project(theta);
    PointPlValue cur = ws.eval(theta);
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        Eigen::VectorXd pg = cur.grad;
        for (int i = 1; i < q; ++i)
            if (theta[i] >= -1e-12 && pg[i] > 0.0) pg[i] = 0.0;
        if (pg.norm() <= opts.grad_tol) return {theta, cur.value, iter};

        Eigen::MatrixXd H = cur.hess;
        H.diagonal().array() -= 1e-12;  // keep the solve well posed
        Eigen::VectorXd dir = H.ldlt().solve(-cur.grad);
        if (!dir.allFinite() || dir.dot(cur.grad) <= 0.0) dir = cur.grad;  // fallback: ascent

        double step = 1.0;
        bool improved = false;
        bool at_resolution = false;  // step underflowed to cand == theta
        for (int h = 0; h < 60; ++h) {
            Eigen::VectorXd cand = theta + step * dir;
            project(cand);
            if ((cand - theta).norm() == 0.0) {
                at_resolution = true;
                break;
            }
            PointPlValue val = ws.eval(cand);
            if (val.value > cur.value) {
                theta = cand;
                cur = val;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            // when the expected quadratic gain is below the fp resolution of
            // the objective, monotonicity cannot be certified; take the full
            // Newton step if it still shrinks the gradient and stop
            const double expected = 0.5 * std::abs(dir.dot(cur.grad));
            if (at_resolution || pg.norm() <= 1e-6 ||
                expected <= 1e-9 * (1.0 + std::abs(cur.value))) {
                Eigen::VectorXd cand = theta + dir;
                project(cand);
                PointPlValue val = ws.eval(cand);
                if (val.grad.norm() < cur.grad.norm()) return {cand, val.value, iter};
                return {theta, cur.value, iter};
            }
            throw NewtonDivergence("step halving failed to improve the log PL");
        }
    }
    throw NewtonDivergence("Newton-Raphson did not converge");
}

}  // namespace

PointFitResult fit_mple_points(const std::vector<Vec3>& points, const Window& window, int d,
                               const std::vector<std::vector<double>>& delta_grid,
                               const PointFitOptions& opts) {
    if (points.empty()) throw std::invalid_argument("pattern must be nonempty");
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    const double V = window.volume();
    const long m = static_cast<long>(points.size());

    PointFitResult best;
    best.log_pl = -std::numeric_limits<double>::infinity();

    std::vector<std::vector<double>> grid = delta_grid;
    if (d == 1) grid = {{}};

    for (const auto& tuple : grid) {
        if (static_cast<int>(tuple.size()) != d - 1)
            throw std::invalid_argument("delta tuple has wrong length for d");
        PointFitResult::GridEntry entry;
        entry.deltas = tuple;
        entry.converged = false;
        entry.log_pl = -std::numeric_limits<double>::infinity();
        try {
            PointPlWorkspace ws(points, window, tuple, opts.quad);
            Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(d);
            theta0[0] = std::log(static_cast<double>(m) / V);
            // scales with zero observed pairs sit on the hard-core boundary
            std::vector<bool> at_zero(d - 1, false);
            for (int i = 0; i < d - 1; ++i)
                if (ws.pairCounts()[i] == 0) {
                    at_zero[i] = true;
                    theta0[i + 1] = -std::numeric_limits<double>::infinity();
                }
            auto res = newton_maximize(ws, opts, theta0);
            entry.converged = true;
            entry.log_pl = res.value;
            if (res.value > best.log_pl) {
                best.log_pl = res.value;
                best.iterations = res.iterations;
                best.params.beta = std::exp(res.theta[0]);
                best.params.deltas = tuple;
                best.params.gammas.assign(d - 1, 0.0);
                best.gamma_at_zero = at_zero;
                for (int i = 0; i < d - 1; ++i)
                    best.params.gammas[i] = at_zero[i] ? 0.0 : std::exp(res.theta[i + 1]);
            }
        } catch (const NewtonDivergence&) {
            // reported in the grid table; the cell is skipped
        }
        best.grid.push_back(std::move(entry));
    }
    if (!std::isfinite(best.log_pl))
        throw NewtonDivergence("no delta grid cell converged");
    return best;
}

}  // namespace lagtess
