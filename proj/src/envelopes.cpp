#include "lagtess/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lagtess/errors.hpp"
#include "lagtess/rng.hpp"

namespace lagtess {

std::string measure_name(EnvelopeMeasure m) {
    return m == EnvelopeMeasure::rank ? "rank" : "area";
}

CurveSet concat_curves(const std::vector<CurveSet>& parts) {
    if (parts.empty()) throw std::invalid_argument("no curve sets to concatenate");
    for (const auto& p : parts) p.validate();
    const std::size_t ncurves = parts.front().curves.size();
    for (const auto& p : parts)
        if (p.curves.size() != ncurves)
            throw ReplicateCountMismatch("curve sets have different replicate counts");
    CurveSet out;
    out.label = parts.front().label;
    out.block_starts.clear();
    out.curves.resize(ncurves);
    for (const auto& p : parts) {
        if (&p != &parts.front()) out.label += "+" + p.label;
        for (int bs : p.block_starts)
            out.block_starts.push_back(static_cast<int>(out.grid.size()) + bs);
        out.grid.insert(out.grid.end(), p.grid.begin(), p.grid.end());
        for (std::size_t c = 0; c < ncurves; ++c)
            out.curves[c].insert(out.curves[c].end(), p.curves[c].begin(), p.curves[c].end());
        for (const auto& w : p.warnings) out.warnings.push_back(w);
    }
    out.validate();
    return out;
}

namespace {

// Pointwise two-sided depth of each curve at each grid point: the most
// extreme value has depth 1. Ties share the deeper (less extreme) count.
// depths[i][r] = min(#{j: T_j(r) <= T_i(r)}, #{j: T_j(r) >= T_i(r)}).
std::vector<std::vector<int>> pointwise_depths(const CurveSet& cs) {
    const std::size_t s = cs.curves.size(), d = cs.grid.size();
    std::vector<std::vector<int>> depths(s, std::vector<int>(d));
    std::vector<double> col(s);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t i = 0; i < s; ++i) col[i] = cs.curves[i][r];
        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < s; ++i) {
            auto le = std::upper_bound(sorted.begin(), sorted.end(), col[i]) - sorted.begin();
            auto ge = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), col[i]);
            depths[i][r] = static_cast<int>(std::min<std::ptrdiff_t>(le, ge));
        }
    }
    return depths;
}

}  // namespace

EnvelopeResult area_rank_envelope(const CurveSet& curves, double alpha,
                                  EnvelopeMeasure measure) {
    curves.validate();
    const int s = static_cast<int>(curves.curves.size());
    const std::size_t d = curves.grid.size();
    if (s < 2) throw TooFewReplicates("need at least one replicate curve");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    if (alpha * s < 1.0)
        throw TooFewReplicates("(k+1)*alpha < 1: cannot reject at this level");

    auto depths = pointwise_depths(curves);
    std::vector<int> extreme(s);
    for (int i = 0; i < s; ++i)
        extreme[i] = *std::min_element(depths[i].begin(), depths[i].end());
    if (measure == EnvelopeMeasure::area)
        // the area refinement orders curves by their sorted depth profiles:
        // lexicographically smaller = deeper/wider excursions = more extreme
        for (auto& dep : depths) std::sort(dep.begin(), dep.end());

    // strict "more extreme than" under the chosen measure
    auto more_extreme = [&](int i, int j) {
        if (measure == EnvelopeMeasure::rank) return extreme[i] < extreme[j];
        return depths[i] < depths[j];
    };

    // p-interval of the observed curve under exchangeability; ties contribute
    // to the upper end only.
    int n_le = 0, n_lt = 0;
    for (int i = 0; i < s; ++i) {
        if (!more_extreme(0, i)) ++n_le;
        if (i != 0 && more_extreme(i, 0)) ++n_lt;
    }

    // Critical rank: the largest k with #{i: R_i < k} <= alpha*s; curves with
    // extreme rank below it lie strictly outside the k_crit-th order-statistic
    // band somewhere.
    int k_crit = 1;
    for (int k = 2; k <= (s + 1) / 2 + 1; ++k) {
        int below = 0;
        for (int i = 0; i < s; ++i)
            if (extreme[i] < k) ++below;
        if (below <= alpha * s) k_crit = k;
        else break;
    }

    EnvelopeResult res;
    res.grid = curves.grid;
    res.alpha = alpha;
    res.measure = measure;
    res.k_crit = k_crit;
    res.p_upper = static_cast<double>(n_le) / s;
    res.p_lower = static_cast<double>(n_lt + 1) / s;
    res.observed = curves.curves[0];
    res.observed_outside = extreme[0] < k_crit;

    res.lower.resize(d);
    res.upper.resize(d);
    res.sim_mean.assign(d, 0.0);
    std::vector<double> col(s);
    for (std::size_t r = 0; r < d; ++r) {
        for (int i = 0; i < s; ++i) col[i] = curves.curves[i][r];
        std::sort(col.begin(), col.end());
        res.lower[r] = col[k_crit - 1];
        res.upper[r] = col[s - k_crit];
        for (int i = 1; i < s; ++i) res.sim_mean[r] += curves.curves[i][r];
        res.sim_mean[r] /= (s - 1);
    }

    for (std::size_t r = 0; r < d; ++r) {
        if (res.observed[r] >= res.lower[r] && res.observed[r] <= res.upper[r]) continue;
        std::size_t end = r;
        while (end + 1 < d && (res.observed[end + 1] < res.lower[end + 1] ||
                               res.observed[end + 1] > res.upper[end + 1]))
            ++end;
        res.outside.push_back({static_cast<int>(r), static_cast<int>(end),
                               res.grid[r], res.grid[end]});
        r = end;
    }
    return res;
}

EnvelopeResult permutation_mark_test(const MarkedPointPattern& pattern, int n_perm,
                                     double alpha, std::uint64_t rng_seed) {
    if (n_perm < 99) throw std::invalid_argument("n_perm must be >= 99");
    pattern.validate();
    if (pattern.size() < 2) throw std::invalid_argument("need >= 2 points");
    auto grid = default_summary_grid(pattern.window);
    double h = default_mark_bandwidth(pattern);

    CurveSet cs = mark_correlation(pattern, grid, h);
    cs.label = "kappa_perm";
    Rng rng(rng_seed);
    MarkedPointPattern perm = pattern;
    const std::size_t m = pattern.size();
    for (int p = 0; p < n_perm; ++p) {
        for (std::size_t i = m - 1; i > 0; --i) {
            std::size_t j = rng.integer(i + 1);
            std::swap(perm.generators[i].radius, perm.generators[j].radius);
        }
        cs.curves.push_back(mark_correlation(perm, grid, h).curves[0]);
    }
    return area_rank_envelope(cs, alpha, EnvelopeMeasure::area);
}

}  // namespace lagtess
