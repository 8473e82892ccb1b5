#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lagtess/envelopes.hpp"
#include "lagtess/gibbs_points.hpp"
#include "lagtess/radii_model.hpp"
#include "lagtess/summaries.hpp"
#include "lagtess/tessellation.hpp"

namespace lagtess {

inline constexpr const char* kVersion = "1.0.0";

// Flat key=value run configuration; CLI flags override file values.
struct RunConfig {
    std::string input_csv;
    double window_a = 1.0, window_b = 1.0, window_c = 1.0;
    double r_max = 6.0;
    int quad_nx = 64, quad_ny = 64, quad_nz = 128;  // 3-D pseudolikelihood lattice
    int radii_nodes = 120;                          // 1-D radii quadrature
    long bdm_steps = 100000;
    double bdm_move_sd = 0.5;
    long mwg_sweeps = 500;
    double mwg_sd = 0.2;
    bool mwg_random_scan = false;
    std::uint64_t seed = 1;
    int d_max = 3;
    std::vector<double> delta_grid;         // profile grid for the delta tuples
    std::vector<std::string> term_sets;     // candidate radii models
    int k_point = 1999, k_joint = 499;      // envelope replicate counts
    double alpha = 0.05;
    int f_lattice = 32;
    int grid_points = 128;
    std::string out_dir = "out";

    void validate() const;  // throws std::invalid_argument
    Window window() const { return Window(window_a, window_b, window_c); }
};

// delta_grid 0.25..3.0 step 0.25 and the full candidate term sweep.
RunConfig default_config();
std::vector<std::string> default_term_sweep();

RunConfig load_run_config(const std::string& path);
// "key=value", same grammar as the file; throws std::invalid_argument.
void apply_override(RunConfig& cfg, const std::string& assignment);
std::string serialize_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);  // FNV-1a of the serialization

// Concatenated L/F/G curve of one pattern on the default grids.
CurveSet lfg_curves(const MarkedPointPattern& pattern, const RunConfig& cfg);

// BDM chain for the points followed by an MWG chain for the radii.
MarkedPointPattern simulate_joint(const RunConfig& cfg, const MultiscaleParams& points,
                                  const RadiiModelSpec& radii, Rng& rng);

struct PointSelection {
    bool accepted = false;
    int d = 0;                        // accepted order (0 if none)
    MultiscaleParams params;          // accepted model, or the last one tried
    std::vector<PointFitResult> fits; // d = 1, 2, ... in order tried
    std::vector<double> p_values;     // conservative upper end per d
};

// Fits M_1, M_2, ... and stops at the first order whose concatenated L/F/G
// area rank test is not rejected at level alpha.
PointSelection select_point_model(const RunConfig& cfg, const MarkedPointPattern& pattern);

struct RadiiCandidate {
    std::string name;
    int q = 0;           // parameter count (beta contributes two)
    bool ok = false;
    std::string error;   // when skipped
    RadiiFitResult fit;
};

struct RadiiSelection {
    std::vector<RadiiCandidate> candidates;  // config order
    std::vector<int> winners_per_q;          // candidate indices, ascending q
    int best = -1;                           // highest log PL overall
};

// Fits every configured candidate term set against the observed pattern,
// reusing one node table; failed candidates are skipped with a warning.
RadiiSelection select_radii_model(const RunConfig& cfg, const MarkedPointPattern& pattern);

// Concatenated six-density GOF test of a joint model against the observed
// tessellation (grids and bandwidths fixed by the observed sample).
EnvelopeResult joint_density_gof(const RunConfig& cfg, const MarkedPointPattern& observed,
                                 const MultiscaleParams& points, const RadiiModelSpec& radii);

// Radii KDEs over the 2x2x2 subdivision of the window (homogeneity check).
std::vector<CurveSet> octant_radii_densities(const MarkedPointPattern& pattern,
                                             int grid_points = 128);

// Deterministic artifact writers (%.17g numbers).
void write_curve_csv(const std::string& path, const CurveSet& cs);
void write_envelope_csv(const std::string& path, const EnvelopeResult& res);
void write_cells_csv(const std::string& path, const PeriodicTessellation& tess);
void write_faces_csv(const std::string& path, const PeriodicTessellation& tess);
void write_moment_csv(const std::string& path, const std::vector<MomentRow>& rows);
void write_slices_csv(const std::string& path, const std::vector<SlicePolygon>& polys);

// {"config_hash", "seed", "version"} header embedded in every JSON report.
std::string report_header_json(const RunConfig& cfg);
std::string envelope_json(const RunConfig& cfg, const EnvelopeResult& res);

}  // namespace lagtess
