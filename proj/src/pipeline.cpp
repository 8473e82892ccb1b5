#include "lagtess/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "lagtess/errors.hpp"

namespace lagtess {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ",";
        out += s;
    }
    return out;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "input_csv") cfg.input_csv = value;
        else if (key == "window_a") cfg.window_a = std::stod(value);
        else if (key == "window_b") cfg.window_b = std::stod(value);
        else if (key == "window_c") cfg.window_c = std::stod(value);
        else if (key == "r_max") cfg.r_max = std::stod(value);
        else if (key == "quad_nx") cfg.quad_nx = std::stoi(value);
        else if (key == "quad_ny") cfg.quad_ny = std::stoi(value);
        else if (key == "quad_nz") cfg.quad_nz = std::stoi(value);
        else if (key == "radii_nodes") cfg.radii_nodes = std::stoi(value);
        else if (key == "bdm_steps") cfg.bdm_steps = std::stol(value);
        else if (key == "bdm_move_sd") cfg.bdm_move_sd = std::stod(value);
        else if (key == "mwg_sweeps") cfg.mwg_sweeps = std::stol(value);
        else if (key == "mwg_sd") cfg.mwg_sd = std::stod(value);
        else if (key == "mwg_random_scan") cfg.mwg_random_scan = (value == "true" || value == "1");
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "d_max") cfg.d_max = std::stoi(value);
        else if (key == "delta_grid") {
            cfg.delta_grid.clear();
            for (const auto& s : split_list(value)) cfg.delta_grid.push_back(std::stod(s));
        } else if (key == "term_sets") {
            cfg.term_sets = split_list(value);
        } else if (key == "k_point") cfg.k_point = std::stoi(value);
        else if (key == "k_joint") cfg.k_joint = std::stoi(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "f_lattice") cfg.f_lattice = std::stoi(value);
        else if (key == "grid_points") cfg.grid_points = std::stoi(value);
        else if (key == "out_dir") cfg.out_dir = value;
        else throw std::invalid_argument("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value for config key " + key + ": " + value);
    }
}

}  // namespace

void RunConfig::validate() const {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    pos(window_a, "window_a");
    pos(window_b, "window_b");
    pos(window_c, "window_c");
    pos(r_max, "r_max");
    pos(quad_nx, "quad_nx");
    pos(quad_ny, "quad_ny");
    pos(quad_nz, "quad_nz");
    pos(radii_nodes, "radii_nodes");
    pos(static_cast<double>(bdm_steps), "bdm_steps");
    pos(bdm_move_sd, "bdm_move_sd");
    pos(static_cast<double>(mwg_sweeps), "mwg_sweeps");
    pos(mwg_sd, "mwg_sd");
    pos(d_max, "d_max");
    pos(k_point, "k_point");
    pos(k_joint, "k_joint");
    pos(f_lattice, "f_lattice");
    pos(grid_points, "grid_points");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    for (std::size_t i = 0; i < delta_grid.size(); ++i) {
        if (!(delta_grid[i] > 0.0)) throw std::invalid_argument("delta_grid values must be positive");
        if (i > 0 && !(delta_grid[i] > delta_grid[i - 1]))
            throw std::invalid_argument("delta_grid must be strictly increasing");
    }
    for (const auto& ts : term_sets) parse_terms(ts);  // throws on unknown names
}

std::vector<std::string> default_term_sweep() {
    const std::vector<std::string> extras = {"vol2", "nof", "surf", "dvol"};
    std::vector<std::string> out = {"beta"};  // q = 2
    for (const auto& e : extras) out.push_back("beta+" + e);
    for (std::size_t i = 0; i < extras.size(); ++i)
        for (std::size_t j = i + 1; j < extras.size(); ++j)
            out.push_back("beta+" + extras[i] + "+" + extras[j]);
    return out;
}

RunConfig default_config() {
    RunConfig cfg;
    for (int k = 1; k <= 12; ++k) cfg.delta_grid.push_back(0.25 * k);
    cfg.term_sets = default_term_sweep();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    RunConfig cfg = default_config();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + assignment);
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "input_csv = " << cfg.input_csv << "\n";
    os << "window_a = " << fmt(cfg.window_a) << "\n";
    os << "window_b = " << fmt(cfg.window_b) << "\n";
    os << "window_c = " << fmt(cfg.window_c) << "\n";
    os << "r_max = " << fmt(cfg.r_max) << "\n";
    os << "quad_nx = " << cfg.quad_nx << "\n";
    os << "quad_ny = " << cfg.quad_ny << "\n";
    os << "quad_nz = " << cfg.quad_nz << "\n";
    os << "radii_nodes = " << cfg.radii_nodes << "\n";
    os << "bdm_steps = " << cfg.bdm_steps << "\n";
    os << "bdm_move_sd = " << fmt(cfg.bdm_move_sd) << "\n";
    os << "mwg_sweeps = " << cfg.mwg_sweeps << "\n";
    os << "mwg_sd = " << fmt(cfg.mwg_sd) << "\n";
    os << "mwg_random_scan = " << (cfg.mwg_random_scan ? "true" : "false") << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "d_max = " << cfg.d_max << "\n";
    std::vector<std::string> dg;
    for (double d : cfg.delta_grid) dg.push_back(fmt(d));
    os << "delta_grid = " << join(dg) << "\n";
    os << "term_sets = " << join(cfg.term_sets) << "\n";
    os << "k_point = " << cfg.k_point << "\n";
    os << "k_joint = " << cfg.k_joint << "\n";
    os << "alpha = " << fmt(cfg.alpha) << "\n";
    os << "f_lattice = " << cfg.f_lattice << "\n";
    os << "grid_points = " << cfg.grid_points << "\n";
    os << "out_dir = " << cfg.out_dir << "\n";
    return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : serialize_config(cfg)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

CurveSet lfg_curves(const MarkedPointPattern& pattern, const RunConfig& cfg) {
    auto grid = default_summary_grid(pattern.window, cfg.grid_points);
    auto L = l_function(pattern, grid);
    auto F = f_function(pattern, grid, cfg.f_lattice);
    auto G = g_function(pattern, grid);
    return concat_curves({L, F, G});
}

MarkedPointPattern simulate_joint(const RunConfig& cfg, const MultiscaleParams& points,
                                  const RadiiModelSpec& radii, Rng& rng) {
    BdmOptions bopts;
    bopts.n_steps = cfg.bdm_steps;
    bopts.move_sd = cfg.bdm_move_sd;
    auto bdm = simulate_bdm(points, cfg.window(), bopts, rng);

    MwgOptions mopts;
    mopts.n_sweeps = cfg.mwg_sweeps;
    mopts.proposal_sd = cfg.mwg_sd;
    mopts.random_scan = cfg.mwg_random_scan;
    mopts.r_max = cfg.r_max;
    auto mwg = simulate_radii_mwg(radii, bdm.points, cfg.window(), mopts, rng);

    MarkedPointPattern pat;
    pat.window = cfg.window();
    pat.r_max = cfg.r_max;
    for (std::size_t i = 0; i < bdm.points.size(); ++i)
        pat.generators.push_back({bdm.points[i], mwg.radii[i]});
    return pat;
}

PointSelection select_point_model(const RunConfig& cfg, const MarkedPointPattern& pattern) {
    cfg.validate();
    std::vector<Vec3> pts;
    for (const auto& g : pattern.generators) pts.push_back(g.pos);

    PointFitOptions fopts;
    fopts.quad = {cfg.quad_nx, cfg.quad_ny, cfg.quad_nz};

    PointSelection sel;
    for (int d = 1; d <= cfg.d_max; ++d) {
        auto tuples = make_delta_tuples(cfg.delta_grid, d);
        auto fit = fit_mple_points(pts, pattern.window, d, tuples, fopts);
        sel.fits.push_back(fit);
        sel.params = fit.params;

        CurveSet cs = lfg_curves(pattern, cfg);
        BdmOptions bopts;
        bopts.n_steps = cfg.bdm_steps;
        bopts.move_sd = cfg.bdm_move_sd;
        for (int rep = 0; rep < cfg.k_point; ++rep) {
            Rng rng = Rng::chain(cfg.seed, static_cast<std::uint64_t>(d) * 1000003ULL + rep);
            auto sim = simulate_bdm(fit.params, pattern.window, bopts, rng);
            MarkedPointPattern simpat;
            simpat.window = pattern.window;
            simpat.r_max = pattern.r_max;
            for (const auto& p : sim.points) simpat.generators.push_back({p, 0.0});
            if (simpat.generators.empty()) {
                // empty realisation: flat curves at the most extreme values
                cs.curves.push_back(std::vector<double>(cs.grid.size(), 0.0));
                continue;
            }
            cs.curves.push_back(lfg_curves(simpat, cfg).curves[0]);
        }
        auto env = area_rank_envelope(cs, cfg.alpha);
        sel.p_values.push_back(env.p_upper);
        if (env.p_upper >= cfg.alpha) {
            sel.accepted = true;
            sel.d = d;
            return sel;
        }
    }
    return sel;
}

RadiiSelection select_radii_model(const RunConfig& cfg, const MarkedPointPattern& pattern) {
    cfg.validate();
    if (cfg.term_sets.empty()) throw std::invalid_argument("no candidate radii models configured");
    auto table = std::make_shared<const RadiiNodeTable>(
        pattern, RadiiQuadrature{cfg.radii_nodes});
    RadiiFitOptions fopts;
    fopts.quad = {cfg.radii_nodes};

    RadiiSelection sel;
    for (const auto& name : cfg.term_sets) {
        RadiiCandidate cand;
        cand.name = name;
        try {
            auto terms = parse_terms(name);
            cand.q = static_cast<int>(terms.size());
            cand.fit = fit_mple_radii(terms, table, fopts);
            cand.ok = true;
        } catch (const std::exception& e) {
            cand.error = e.what();
        }
        sel.candidates.push_back(std::move(cand));
    }

    std::map<int, int> winner;  // q -> candidate index
    for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
        const auto& c = sel.candidates[i];
        if (!c.ok) continue;
        auto it = winner.find(c.q);
        if (it == winner.end() || c.fit.log_pl > sel.candidates[it->second].fit.log_pl)
            winner[c.q] = static_cast<int>(i);
        if (sel.best < 0 || c.fit.log_pl > sel.candidates[sel.best].fit.log_pl)
            sel.best = static_cast<int>(i);
    }
    for (const auto& [q, idx] : winner) sel.winners_per_q.push_back(idx);
    return sel;
}

EnvelopeResult joint_density_gof(const RunConfig& cfg, const MarkedPointPattern& observed,
                                 const MultiscaleParams& points, const RadiiModelSpec& radii) {
    cfg.validate();
    auto tess = build_tessellation(observed);
    auto obs = characteristic_samples(tess);

    // grids and bandwidths are fixed by the observed samples so that observed
    // and simulated densities are comparable curves
    std::vector<std::vector<double>> grids;
    std::vector<double> bands;
    std::vector<CurveSet> parts;
    for (const auto& ns : obs) {
        double h = silverman_bandwidth(ns.values);
        double lo = *std::min_element(ns.values.begin(), ns.values.end()) - 3.0 * h;
        double hi = *std::max_element(ns.values.begin(), ns.values.end()) + 3.0 * h;
        std::vector<double> grid;
        for (int k = 0; k < cfg.grid_points; ++k)
            grid.push_back(lo + (hi - lo) * k / (cfg.grid_points - 1));
        parts.push_back(characteristic_density(ns.values, ns.name, grid, h));
        grids.push_back(std::move(grid));
        bands.push_back(h);
    }

    for (int rep = 0; rep < cfg.k_joint; ++rep) {
        Rng rng = Rng::chain(cfg.seed, 7777777ULL + rep);
        auto sim = simulate_joint(cfg, points, radii, rng);
        auto simtess = build_tessellation(sim);
        auto simchars = characteristic_samples(simtess);
        for (std::size_t c = 0; c < parts.size(); ++c) {
            auto d = characteristic_density(simchars[c].values, simchars[c].name, grids[c],
                                            bands[c]);
            parts[c].curves.push_back(std::move(d.curves[0]));
        }
    }
    return area_rank_envelope(concat_curves(parts), cfg.alpha);
}

std::vector<CurveSet> octant_radii_densities(const MarkedPointPattern& pattern,
                                             int grid_points) {
    std::vector<std::vector<double>> octants(8);
    for (const auto& g : pattern.generators) {
        int o = (g.pos.x >= 0.5 * pattern.window.a ? 1 : 0) +
                (g.pos.y >= 0.5 * pattern.window.b ? 2 : 0) +
                (g.pos.z >= 0.5 * pattern.window.c ? 4 : 0);
        octants[o].push_back(g.radius);
    }
    std::vector<double> all;
    for (const auto& g : pattern.generators) all.push_back(g.radius);
    double h = silverman_bandwidth(all);
    double lo = *std::min_element(all.begin(), all.end()) - 3.0 * h;
    double hi = *std::max_element(all.begin(), all.end()) + 3.0 * h;
    std::vector<double> grid;
    for (int k = 0; k < grid_points; ++k)
        grid.push_back(lo + (hi - lo) * k / (grid_points - 1));

    std::vector<CurveSet> out;
    for (int o = 0; o < 8; ++o) {
        if (octants[o].size() < 2) {
            CurveSet cs;
            cs.label = "octant_" + std::to_string(o);
            cs.grid = grid;
            cs.warnings.push_back("octant has fewer than 2 radii");
            out.push_back(std::move(cs));
            continue;
        }
        auto cs = characteristic_density(octants[o], "octant_" + std::to_string(o), grid, h);
        out.push_back(std::move(cs));
    }
    return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

}  // namespace

void write_curve_csv(const std::string& path, const CurveSet& cs) {
    auto out = open_out(path);
    out << "t,observed";
    for (int k = 1; k < static_cast<int>(cs.curves.size()); ++k) out << ",sim_" << k;
    out << "\n";
    for (std::size_t r = 0; r < cs.grid.size(); ++r) {
        out << fmt(cs.grid[r]);
        for (const auto& c : cs.curves) out << "," << fmt(c[r]);
        out << "\n";
    }
}

void write_envelope_csv(const std::string& path, const EnvelopeResult& res) {
    auto out = open_out(path);
    out << "t,lo,hi,observed,mean\n";
    for (std::size_t r = 0; r < res.grid.size(); ++r)
        out << fmt(res.grid[r]) << "," << fmt(res.lower[r]) << "," << fmt(res.upper[r]) << ","
            << fmt(res.observed[r]) << "," << fmt(res.sim_mean[r]) << "\n";
}

void write_cells_csv(const std::string& path, const PeriodicTessellation& tess) {
    auto out = open_out(path);
    out << "generator,x,y,z,r,vol,surf,nof,tel,spher\n";
    for (int i = 0; i < static_cast<int>(tess.cells().size()); ++i) {
        const auto& g = tess.pattern().generators[i];
        auto ch = cell_characteristics(tess, i);
        out << i << "," << fmt(g.pos.x) << "," << fmt(g.pos.y) << "," << fmt(g.pos.z) << ","
            << fmt(g.radius) << "," << fmt(ch.vol) << "," << fmt(ch.surf) << "," << ch.nof
            << "," << fmt(ch.tel) << "," << fmt(ch.spher) << "\n";
    }
}

void write_faces_csv(const std::string& path, const PeriodicTessellation& tess) {
    auto out = open_out(path);
    out << "i,j,farea,fper,fnoe,dvol\n";
    for (const auto& f : face_characteristics(tess))
        out << f.i << "," << f.j << "," << fmt(f.farea) << "," << fmt(f.fper) << "," << f.fnoe
            << "," << fmt(f.dvol) << "\n";
}

void write_moment_csv(const std::string& path, const std::vector<MomentRow>& rows) {
    auto out = open_out(path);
    out << "characteristic,obs_mean,obs_sd,sim_mean,sim_sd,dev_mean_pct,dev_sd_pct\n";
    for (const auto& r : rows)
        out << r.name << "," << fmt(r.obs_mean) << "," << fmt(r.obs_sd) << "," << fmt(r.sim_mean)
            << "," << fmt(r.sim_sd) << "," << fmt(r.dev_mean_pct) << "," << fmt(r.dev_sd_pct)
            << "\n";
}

void write_slices_csv(const std::string& path, const std::vector<SlicePolygon>& polys) {
    auto out = open_out(path);
    out << "polygon,generator,vertex,x,y,z\n";
    for (std::size_t p = 0; p < polys.size(); ++p)
        for (std::size_t v = 0; v < polys[p].ring.size(); ++v)
            out << p << "," << polys[p].generator << "," << v << "," << fmt(polys[p].ring[v].x)
                << "," << fmt(polys[p].ring[v].y) << "," << fmt(polys[p].ring[v].z) << "\n";
}

std::string report_header_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["version"] = kVersion;
    return j.dump();
}

std::string envelope_json(const RunConfig& cfg, const EnvelopeResult& res) {
    nlohmann::json j = nlohmann::json::parse(report_header_json(cfg));
    j["p_lower"] = res.p_lower;
    j["p_upper"] = res.p_upper;
    j["alpha"] = res.alpha;
    j["measure"] = measure_name(res.measure);
    j["k_crit"] = res.k_crit;
    j["observed_outside"] = res.observed_outside;
    auto spans = nlohmann::json::array();
    for (const auto& s : res.outside)
        spans.push_back({{"first", s.first}, {"last", s.last}, {"t_lo", s.t_lo},
                         {"t_hi", s.t_hi}});
    j["outside_intervals"] = spans;
    return j.dump(2);
}

}  // namespace lagtess
