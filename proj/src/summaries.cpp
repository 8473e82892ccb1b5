#include "lagtess/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lagtess/errors.hpp"

namespace lagtess {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty grid");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("grid not strictly increasing");
}

void check_range_grid(const std::vector<double>& grid, const Window& w) {
    check_grid(grid);
    if (grid.front() < 0.0) throw std::invalid_argument("grid values must be nonnegative");
    if (grid.back() > 0.5 * w.minSide())
        throw std::invalid_argument("grid max exceeds half the smallest window side");
}

void warn_if_coarse(CurveSet& cs) {
    if (cs.grid.size() < 64) cs.warnings.push_back("GridTooCoarse: fewer than 64 grid points");
}

// Pairwise torus distances, each unordered pair once.
std::vector<double> pair_distances(const MarkedPointPattern& pat) {
    const auto& g = pat.generators;
    std::vector<double> d;
    d.reserve(g.size() * (g.size() - 1) / 2);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            d.push_back(pat.window.dist(g[i].pos, g[j].pos));
    return d;
}

std::vector<double> nn_distances(const MarkedPointPattern& pat) {
    const auto& g = pat.generators;
    std::vector<double> nn(g.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            double d = pat.window.dist(g[i].pos, g[j].pos);
            nn[i] = std::min(nn[i], d);
            nn[j] = std::min(nn[j], d);
        }
    return nn;
}

// Empirical cdf of `sample` (sorted in place) evaluated on the grid.
std::vector<double> ecdf_on_grid(std::vector<double>& sample, const std::vector<double>& grid) {
    std::sort(sample.begin(), sample.end());
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto it = std::upper_bound(sample.begin(), sample.end(), grid[k]);
        v[k] = static_cast<double>(it - sample.begin()) / static_cast<double>(sample.size());
    }
    return v;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void CurveSet::validate() const {
    if (grid.empty()) throw std::invalid_argument("empty grid");
    if (block_starts.empty() || block_starts.front() != 0)
        throw std::invalid_argument("block_starts must begin with 0");
    // strictly increasing within each concatenation block
    for (std::size_t b = 0; b < block_starts.size(); ++b) {
        std::size_t lo = static_cast<std::size_t>(block_starts[b]);
        std::size_t hi = b + 1 < block_starts.size() ? static_cast<std::size_t>(block_starts[b + 1])
                                                     : grid.size();
        if (lo >= hi || hi > grid.size()) throw std::invalid_argument("bad block boundaries");
        for (std::size_t k = lo + 1; k < hi; ++k)
            if (!(grid[k] > grid[k - 1]))
                throw std::invalid_argument("grid not strictly increasing within block");
    }
    for (const auto& c : curves)
        if (c.size() != grid.size()) throw std::invalid_argument("curve length != grid length");
}

std::vector<double> default_summary_grid(const Window& window, int n) {
    double tmax = 0.25 * window.minSide();
    std::vector<double> grid(n);
    for (int k = 0; k < n; ++k) grid[k] = tmax * (k + 1) / n;
    return grid;
}

CurveSet l_function(const MarkedPointPattern& pattern, const std::vector<double>& grid) {
    check_range_grid(grid, pattern.window);
    if (pattern.size() == 0) throw std::invalid_argument("empty pattern");
    CurveSet cs;
    cs.label = "L";
    cs.grid = grid;
    warn_if_coarse(cs);
    const std::size_t m = pattern.size();
    if (m < 2) {
        cs.warnings.push_back("L undefined for fewer than 2 points");
        return cs;
    }
    auto dists = pair_distances(pattern);
    std::sort(dists.begin(), dists.end());
    double scale = pattern.window.volume() / (static_cast<double>(m) * (m - 1));
    std::vector<double> L(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto it = std::upper_bound(dists.begin(), dists.end(), grid[k]);
        double K = scale * 2.0 * static_cast<double>(it - dists.begin());
        L[k] = std::cbrt(3.0 * K / (4.0 * kPi));
    }
    cs.curves.push_back(std::move(L));
    return cs;
}

CurveSet f_function(const MarkedPointPattern& pattern, const std::vector<double>& grid,
                    int lattice_n) {
    check_range_grid(grid, pattern.window);
    if (pattern.size() == 0) throw std::invalid_argument("empty pattern");
    if (lattice_n < 2) throw std::invalid_argument("lattice_n must be >= 2");
    CurveSet cs;
    cs.label = "F";
    cs.grid = grid;
    warn_if_coarse(cs);
    const Window& w = pattern.window;
    std::vector<double> empt;
    empt.reserve(static_cast<std::size_t>(lattice_n) * lattice_n * lattice_n);
    for (int ix = 0; ix < lattice_n; ++ix)
        for (int iy = 0; iy < lattice_n; ++iy)
            for (int iz = 0; iz < lattice_n; ++iz) {
                Vec3 u{w.a * (ix + 0.5) / lattice_n, w.b * (iy + 0.5) / lattice_n,
                       w.c * (iz + 0.5) / lattice_n};
                double best = std::numeric_limits<double>::infinity();
                for (const auto& g : pattern.generators)
                    best = std::min(best, w.dist2(u, g.pos));
                empt.push_back(std::sqrt(best));
            }
    cs.curves.push_back(ecdf_on_grid(empt, grid));
    return cs;
}

CurveSet g_function(const MarkedPointPattern& pattern, const std::vector<double>& grid) {
    check_range_grid(grid, pattern.window);
    if (pattern.size() == 0) throw std::invalid_argument("empty pattern");
    CurveSet cs;
    cs.label = "G";
    cs.grid = grid;
    warn_if_coarse(cs);
    if (pattern.size() < 2) {
        cs.warnings.push_back("G undefined for fewer than 2 points");
        return cs;
    }
    auto nn = nn_distances(pattern);
    cs.curves.push_back(ecdf_on_grid(nn, grid));
    return cs;
}

double default_mark_bandwidth(const MarkedPointPattern& pattern) {
    if (pattern.size() < 2) throw std::invalid_argument("need >= 2 points");
    return 0.15 * mean_of(nn_distances(pattern));
}

CurveSet mark_correlation(const MarkedPointPattern& pattern, const std::vector<double>& grid,
                          double bandwidth) {
    check_grid(grid);
    if (pattern.size() < 2) throw std::invalid_argument("need >= 2 points");
    if (!(bandwidth > 0.0)) throw BandwidthNonpositive("mark correlation bandwidth must be > 0");
    const auto& g = pattern.generators;
    // (distance, r_i * r_j) per unordered pair, sorted by distance.
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(g.size() * (g.size() - 1) / 2);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            pairs.emplace_back(pattern.window.dist(g[i].pos, g[j].pos),
                               g[i].radius * g[j].radius);
    std::sort(pairs.begin(), pairs.end());
    double rbar = 0.0;
    for (const auto& gen : g) rbar += gen.radius;
    rbar /= static_cast<double>(g.size());
    double rbar2 = rbar * rbar;

    CurveSet cs;
    cs.label = "kappa";
    cs.grid = grid;
    warn_if_coarse(cs);
    std::vector<double> kappa(grid.size(), 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double t = grid[k];
        auto lo = std::lower_bound(pairs.begin(), pairs.end(),
                                   std::make_pair(t - bandwidth, -1.0));
        auto hi = std::upper_bound(pairs.begin(), pairs.end(),
                                   std::make_pair(t + bandwidth, std::numeric_limits<double>::max()));
        double num = 0.0, den = 0.0;
        for (auto it = lo; it != hi; ++it) {
            double u = (it->first - t) / bandwidth;
            double kv = 0.75 * (1.0 - u * u) / bandwidth;
            if (kv <= 0.0) continue;
            num += kv * it->second;
            den += kv;
        }
        if (den > 0.0 && rbar2 > 0.0) kappa[k] = (num / den) / rbar2;
    }
    cs.curves.push_back(std::move(kappa));
    return cs;
}

double silverman_bandwidth(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("need >= 2 values");
    double sd = sd_of(values);
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    auto quant = [&](double p) {
        double idx = p * (n - 1);
        std::size_t lo = static_cast<std::size_t>(idx);
        double f = idx - lo;
        return lo + 1 < n ? v[lo] * (1.0 - f) + v[lo + 1] * f : v[lo];
    };
    double iqr = (quant(0.75) - quant(0.25)) / 1.34;
    double spread = 0.0;
    if (sd > 0.0 && iqr > 0.0) spread = std::min(sd, iqr);
    else spread = std::max(sd, iqr);
    if (spread <= 0.0) spread = 1e-9 * (1.0 + std::abs(mean_of(values)));  // point mass
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

CurveSet characteristic_density(const std::vector<double>& values, const std::string& label,
                                const std::vector<double>& grid, double bandwidth) {
    check_grid(grid);
    if (values.size() < 2) throw std::invalid_argument("need >= 2 values");
    double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(values);
    CurveSet cs;
    cs.label = label;
    cs.grid = grid;
    warn_if_coarse(cs);
    const double norm = 1.0 / (std::sqrt(2.0 * kPi) * h * static_cast<double>(values.size()));
    std::vector<double> f(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double s = 0.0;
        for (double v : values) {
            double u = (grid[k] - v) / h;
            s += std::exp(-0.5 * u * u);
        }
        f[k] = norm * s;
    }
    cs.curves.push_back(std::move(f));
    return cs;
}

CharacteristicSet characteristic_samples(const PeriodicTessellation& tess) {
    CharacteristicSet set(6);
    set[0].name = "nof";
    set[1].name = "vol";
    set[2].name = "surf";
    set[3].name = "tel";
    set[4].name = "spher";
    set[5].name = "dvol";
    for (int i = 0; i < static_cast<int>(tess.cells().size()); ++i) {
        if (tess.cell(i).empty) continue;
        auto ch = cell_characteristics(tess, i);
        set[0].values.push_back(static_cast<double>(ch.nof));
        set[1].values.push_back(ch.vol);
        set[2].values.push_back(ch.surf);
        set[3].values.push_back(ch.tel);
        set[4].values.push_back(ch.spher);
    }
    for (const auto& fc : face_characteristics(tess)) set[5].values.push_back(fc.dvol);
    return set;
}

std::vector<MomentRow> moment_table(const CharacteristicSet& observed,
                                    const std::vector<CharacteristicSet>& replicates) {
    if (replicates.empty()) throw std::invalid_argument("need >= 1 replicate");
    std::vector<MomentRow> rows;
    for (std::size_t c = 0; c < observed.size(); ++c) {
        MomentRow row;
        row.name = observed[c].name;
        row.obs_mean = mean_of(observed[c].values);
        row.obs_sd = sd_of(observed[c].values);
        for (const auto& rep : replicates) {
            if (rep.size() != observed.size() || rep[c].name != row.name)
                throw std::invalid_argument("replicate characteristics mismatch");
            row.sim_mean += mean_of(rep[c].values);
            row.sim_sd += sd_of(rep[c].values);
        }
        row.sim_mean /= static_cast<double>(replicates.size());
        row.sim_sd /= static_cast<double>(replicates.size());
        row.dev_mean_pct = row.obs_mean != 0.0
                               ? 100.0 * (row.sim_mean - row.obs_mean) / row.obs_mean : 0.0;
        row.dev_sd_pct = row.obs_sd != 0.0
                             ? 100.0 * (row.sim_sd - row.obs_sd) / row.obs_sd : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lagtess
