#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lagtess/pattern.hpp"
#include "lagtess/summaries.hpp"

namespace lagtess {

// Pointwise depth / extreme rank measures. Both are functions of pointwise
// ranks only, so p-values are invariant under monotone transforms of the
// curves. "area" breaks extreme-rank ties by ordering the sorted vectors of
// pointwise depths lexicographically (extreme rank length).
enum class EnvelopeMeasure { rank, area };

struct GridSpan {
    int first = 0, last = 0;  // inclusive grid indices
    double t_lo = 0.0, t_hi = 0.0;
};

struct EnvelopeResult {
    std::vector<double> grid;
    std::vector<double> lower, upper;     // level-alpha global envelope
    std::vector<double> observed;
    std::vector<double> sim_mean;         // mean of the replicate curves
    double alpha = 0.05;
    double p_lower = 0.0, p_upper = 0.0;  // p-interval of the observed curve
    EnvelopeMeasure measure = EnvelopeMeasure::area;
    int k_crit = 1;                       // envelope = k_crit-th order statistics
    bool observed_outside = false;        // extreme rank of observed < k_crit
    std::vector<GridSpan> outside;        // spans where observed leaves the envelope
};

// Concatenate curve sets block-wise (observed + equal replicate counts).
// Throws ReplicateCountMismatch.
CurveSet concat_curves(const std::vector<CurveSet>& parts);

// Global rank envelope with the given measure; curves.curves[0] is observed.
// Throws TooFewReplicates when (k+1)*alpha < 1.
EnvelopeResult area_rank_envelope(const CurveSet& curves, double alpha = 0.05,
                                  EnvelopeMeasure measure = EnvelopeMeasure::area);

// Mark-independence permutation test: fixes points, permutes radii n_perm
// times, compares mark correlation curves via the area rank envelope.
EnvelopeResult permutation_mark_test(const MarkedPointPattern& pattern, int n_perm,
                                     double alpha, std::uint64_t rng_seed);

std::string measure_name(EnvelopeMeasure m);

}  // namespace lagtess
