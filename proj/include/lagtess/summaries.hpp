#pragma once

#include <string>
#include <vector>

#include "lagtess/pattern.hpp"
#include "lagtess/tessellation.hpp"

namespace lagtess {

// A labelled argument grid with one or more curves over it. By convention
// curves[0] is the observed curve and the rest are simulated replicates.
// block_starts records block boundaries after concat_curves (index into grid).
struct CurveSet {
    std::string label;
    std::vector<double> grid;
    std::vector<std::vector<double>> curves;
    std::vector<int> block_starts{0};
    std::vector<std::string> warnings;

    // Throws std::invalid_argument if the grid is not strictly increasing or
    // curve lengths disagree with it.
    void validate() const;

    int replicates() const { return static_cast<int>(curves.size()) - 1; }
};

// Equally spaced grid t_k = tmax * k / n, k = 1..n, with the module default
// tmax = 0.25 * min(a,b,c) and n = 128.
std::vector<double> default_summary_grid(const Window& window, int n = 128);

// Torus-exact estimators (no edge correction). Grid max must be at most half
// the smallest window side.
CurveSet l_function(const MarkedPointPattern& pattern, const std::vector<double>& grid);
CurveSet f_function(const MarkedPointPattern& pattern, const std::vector<double>& grid,
                    int lattice_n = 32);
CurveSet g_function(const MarkedPointPattern& pattern, const std::vector<double>& grid);

// Epanechnikov-smoothed mark correlation of the radii; identically 1 when the
// kernel mass at a grid point vanishes.
CurveSet mark_correlation(const MarkedPointPattern& pattern, const std::vector<double>& grid,
                          double bandwidth);

// Module default bandwidth: 0.15 * mean nearest-neighbor distance.
double default_mark_bandwidth(const MarkedPointPattern& pattern);

// Gaussian KDE on the grid; bandwidth <= 0 selects Silverman's rule.
CurveSet characteristic_density(const std::vector<double>& values, const std::string& label,
                                const std::vector<double>& grid, double bandwidth = 0.0);

double silverman_bandwidth(const std::vector<double>& values);

// Named per-cell / per-face samples of one tessellation.
struct NamedSample {
    std::string name;
    std::vector<double> values;
};
using CharacteristicSet = std::vector<NamedSample>;

// The six characteristics {nof, vol, surf, tel, spher, dvol}; the first five
// are per cell, dvol is per geometric face.
CharacteristicSet characteristic_samples(const PeriodicTessellation& tess);

struct MomentRow {
    std::string name;
    double obs_mean = 0.0, obs_sd = 0.0;
    double sim_mean = 0.0, sim_sd = 0.0;
    double dev_mean_pct = 0.0, dev_sd_pct = 0.0;  // signed, 100*(sim-obs)/obs
};

// Per characteristic: empirical mean/sd, replicate-averaged simulated mean/sd,
// and signed percent deviations.
std::vector<MomentRow> moment_table(const CharacteristicSet& observed,
                                    const std::vector<CharacteristicSet>& replicates);

}  // namespace lagtess
