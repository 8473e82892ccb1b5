#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "lagtess/errors.hpp"
#include "lagtess/pipeline.hpp"

using namespace lagtess;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string input;

    RunConfig make() const {
        RunConfig cfg = config_path.empty() ? default_config() : load_run_config(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (!input.empty()) cfg.input_csv = input;
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "flat key=value config file");
    app->add_option("--set", c.overrides, "override: key=value (repeatable)");
    app->add_option("--input", c.input, "input pattern CSV (x,y,z,r)");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

MarkedPointPattern load_input(const RunConfig& cfg) {
    if (cfg.input_csv.empty()) throw std::invalid_argument("no input CSV configured");
    try {
        return load_pattern_csv(cfg.input_csv, cfg.window(), cfg.r_max);
    } catch (const std::runtime_error& e) {  // unreadable input is a config error
        throw std::invalid_argument(e.what());
    }
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text << "\n";
}

nlohmann::json header(const RunConfig& cfg) {
    return nlohmann::json::parse(report_header_json(cfg));
}

nlohmann::json point_params_json(const MultiscaleParams& p) {
    return {{"beta", p.beta}, {"gammas", p.gammas}, {"deltas", p.deltas}, {"d", p.order()}};
}

MultiscaleParams point_params_from(double beta, const std::string& gammas,
                                   const std::string& deltas) {
    MultiscaleParams p;
    p.beta = beta;
    p.gammas = parse_list(gammas);
    p.deltas = parse_list(deltas);
    p.validate();
    return p;
}

RadiiModelSpec radii_spec_from(const std::string& terms, const std::string& theta) {
    RadiiModelSpec spec;
    spec.terms = parse_terms(terms);
    auto th = parse_list(theta);
    spec.theta = Eigen::Map<Eigen::VectorXd>(th.data(), static_cast<long>(th.size()));
    spec.validate();
    return spec;
}

int cmd_tessellate(const Common& c) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    auto tess = build_tessellation(pat);
    write_cells_csv(out_path(cfg, "cells.csv"), tess);
    write_faces_csv(out_path(cfg, "faces.csv"), tess);
    write_slices_csv(out_path(cfg, "slices.csv"),
                     slice_tessellation(tess, 0.5 * cfg.window_c));
    auto j = header(cfg);
    j["m"] = pat.size();
    j["feasible"] = tess.feasible();
    j["empty_cells"] = tess.emptyIndices().size();
    j["total_volume"] = tess.totalVolume();
    write_text(out_path(cfg, "tessellate.json"), j.dump(2));
    return 0;
}

int cmd_fit_points(const Common& c, int d) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    std::vector<Vec3> pts;
    for (const auto& g : pat.generators) pts.push_back(g.pos);
    PointFitOptions fopts;
    fopts.quad = {cfg.quad_nx, cfg.quad_ny, cfg.quad_nz};
    auto fit = fit_mple_points(pts, pat.window, d, make_delta_tuples(cfg.delta_grid, d), fopts);
    auto j = header(cfg);
    j["params"] = point_params_json(fit.params);
    j["log_pl"] = fit.log_pl;
    j["gamma_at_zero"] = fit.gamma_at_zero;
    auto grid = nlohmann::json::array();
    for (const auto& e : fit.grid)
        grid.push_back({{"deltas", e.deltas}, {"log_pl", e.log_pl}, {"converged", e.converged}});
    j["profile_grid"] = grid;
    write_text(out_path(cfg, "fit_points.json"), j.dump(2));
    return 0;
}

int cmd_simulate_points(const Common& c, double beta, const std::string& gammas,
                        const std::string& deltas) {
    auto cfg = c.make();
    auto params = point_params_from(beta, gammas, deltas);
    BdmOptions bopts;
    bopts.n_steps = cfg.bdm_steps;
    bopts.move_sd = cfg.bdm_move_sd;
    Rng rng(cfg.seed);
    auto res = simulate_bdm(params, cfg.window(), bopts, rng);
    save_points_csv(out_path(cfg, "points_sim.csv"), res.points);
    auto j = header(cfg);
    j["params"] = point_params_json(params);
    j["m"] = res.points.size();
    j["acceptance"] = {{"births", {res.diagnostics.births_accepted, res.diagnostics.births_proposed}},
                       {"deaths", {res.diagnostics.deaths_accepted, res.diagnostics.deaths_proposed}},
                       {"moves", {res.diagnostics.moves_accepted, res.diagnostics.moves_proposed}}};
    write_text(out_path(cfg, "simulate_points.json"), j.dump(2));
    return 0;
}

int cmd_fit_radii(const Common& c, const std::string& terms) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    RadiiFitOptions fopts;
    fopts.quad = {cfg.radii_nodes};
    auto fit = fit_mple_radii(parse_terms(terms), pat, fopts);
    auto j = header(cfg);
    j["terms"] = term_set_name(fit.spec.terms);
    j["theta"] = std::vector<double>(fit.spec.theta.data(),
                                     fit.spec.theta.data() + fit.spec.theta.size());
    j["log_pl"] = fit.log_pl;
    j["iterations"] = fit.iterations;
    write_text(out_path(cfg, "fit_radii.json"), j.dump(2));
    return 0;
}

int cmd_simulate_radii(const Common& c, const std::string& terms, const std::string& theta) {
    auto cfg = c.make();
    auto pat = load_input(cfg);  // radii column ignored: positions conditioned on
    auto spec = radii_spec_from(terms, theta);
    std::vector<Vec3> pts;
    for (const auto& g : pat.generators) pts.push_back(g.pos);
    MwgOptions mopts;
    mopts.n_sweeps = cfg.mwg_sweeps;
    mopts.proposal_sd = cfg.mwg_sd;
    mopts.random_scan = cfg.mwg_random_scan;
    mopts.r_max = cfg.r_max;
    Rng rng(cfg.seed);
    auto res = simulate_radii_mwg(spec, pts, cfg.window(), mopts, rng);
    MarkedPointPattern out = pat;
    for (std::size_t i = 0; i < out.generators.size(); ++i)
        out.generators[i].radius = res.radii[i];
    save_pattern_csv(out_path(cfg, "radii_sim.csv"), out);
    auto j = header(cfg);
    j["terms"] = terms;
    j["acceptance_rate"] = res.diagnostics.acceptanceRate();
    write_text(out_path(cfg, "simulate_radii.json"), j.dump(2));
    return 0;
}

int cmd_simulate_joint(const Common& c, double beta, const std::string& gammas,
                       const std::string& deltas, const std::string& terms,
                       const std::string& theta) {
    auto cfg = c.make();
    auto params = point_params_from(beta, gammas, deltas);
    auto spec = radii_spec_from(terms, theta);
    Rng rng(cfg.seed);
    auto pat = simulate_joint(cfg, params, spec, rng);
    save_pattern_csv(out_path(cfg, "joint_sim.csv"), pat);
    auto tess = build_tessellation(pat);
    write_cells_csv(out_path(cfg, "joint_cells.csv"), tess);
    write_faces_csv(out_path(cfg, "joint_faces.csv"), tess);
    auto j = header(cfg);
    j["m"] = pat.size();
    j["feasible"] = tess.feasible();
    write_text(out_path(cfg, "simulate_joint.json"), j.dump(2));
    return 0;
}

int cmd_envelope(const Common& c, const std::string& mode, double beta,
                 const std::string& gammas, const std::string& deltas,
                 const std::string& terms, const std::string& theta) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    auto params = point_params_from(beta, gammas, deltas);
    EnvelopeResult res;
    if (mode == "lfg") {
        CurveSet cs = lfg_curves(pat, cfg);
        BdmOptions bopts;
        bopts.n_steps = cfg.bdm_steps;
        bopts.move_sd = cfg.bdm_move_sd;
        for (int rep = 0; rep < cfg.k_point; ++rep) {
            Rng rng = Rng::chain(cfg.seed, rep);
            auto sim = simulate_bdm(params, cfg.window(), bopts, rng);
            MarkedPointPattern sp;
            sp.window = cfg.window();
            sp.r_max = cfg.r_max;
            for (const auto& p : sim.points) sp.generators.push_back({p, 0.0});
            cs.curves.push_back(sp.generators.empty()
                                    ? std::vector<double>(cs.grid.size(), 0.0)
                                    : lfg_curves(sp, cfg).curves[0]);
        }
        res = area_rank_envelope(cs, cfg.alpha);
    } else if (mode == "density") {
        res = joint_density_gof(cfg, pat, params, radii_spec_from(terms, theta));
    } else {
        throw std::invalid_argument("envelope mode must be lfg or density");
    }
    write_envelope_csv(out_path(cfg, "envelope.csv"), res);
    write_text(out_path(cfg, "envelope.json"), envelope_json(cfg, res));
    return 0;
}

int cmd_select_points(const Common& c, bool strict) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    auto sel = select_point_model(cfg, pat);
    auto j = header(cfg);
    j["accepted"] = sel.accepted;
    j["d"] = sel.d;
    j["p_values"] = sel.p_values;
    auto fits = nlohmann::json::array();
    for (const auto& f : sel.fits)
        fits.push_back({{"params", point_params_json(f.params)}, {"log_pl", f.log_pl}});
    j["fits"] = fits;
    j["params"] = point_params_json(sel.params);
    write_text(out_path(cfg, "select_points.json"), j.dump(2));
    if (!sel.accepted) {
        std::cerr << "no point model accepted up to d_max=" << cfg.d_max << "\n";
        if (strict) return 4;
    }
    return 0;
}

int cmd_select_radii(const Common& c, bool strict, bool gof, double beta,
                     const std::string& gammas, const std::string& deltas) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    auto sel = select_radii_model(cfg, pat);
    auto j = header(cfg);
    auto cands = nlohmann::json::array();
    for (const auto& cand : sel.candidates) {
        nlohmann::json cj = {{"model", cand.name}, {"q", cand.q}, {"ok", cand.ok}};
        if (cand.ok) {
            cj["log_pl"] = cand.fit.log_pl;
            cj["theta"] = std::vector<double>(cand.fit.spec.theta.data(),
                                              cand.fit.spec.theta.data() +
                                                  cand.fit.spec.theta.size());
        } else {
            cj["error"] = cand.error;
            std::cerr << "candidate " << cand.name << " skipped: " << cand.error << "\n";
        }
        cands.push_back(cj);
    }
    j["candidates"] = cands;
    auto winners = nlohmann::json::array();
    for (int idx : sel.winners_per_q) winners.push_back(sel.candidates[idx].name);
    j["winners_per_q"] = winners;
    if (sel.best < 0) throw NewtonDivergence("no radii candidate could be fitted");
    j["best"] = sel.candidates[sel.best].name;

    bool rejected = false;
    if (gof) {
        auto params = point_params_from(beta, gammas, deltas);
        auto res = joint_density_gof(cfg, pat, params, sel.candidates[sel.best].fit.spec);
        j["gof"] = nlohmann::json::parse(envelope_json(cfg, res));
        rejected = res.p_upper < cfg.alpha;
        write_envelope_csv(out_path(cfg, "select_radii_gof.csv"), res);
    }
    write_text(out_path(cfg, "select_radii.json"), j.dump(2));
    if (rejected) {
        std::cerr << "best radii model rejected at alpha=" << cfg.alpha << "\n";
        if (strict) return 4;
    }
    return 0;
}

int cmd_report(const Common& c) {
    auto cfg = c.make();
    auto pat = load_input(cfg);
    auto grid = default_summary_grid(pat.window, cfg.grid_points);
    write_curve_csv(out_path(cfg, "curve_L.csv"), l_function(pat, grid));
    write_curve_csv(out_path(cfg, "curve_F.csv"), f_function(pat, grid, cfg.f_lattice));
    write_curve_csv(out_path(cfg, "curve_G.csv"), g_function(pat, grid));
    write_curve_csv(out_path(cfg, "curve_markcorr.csv"),
                    mark_correlation(pat, grid, default_mark_bandwidth(pat)));
    auto tess = build_tessellation(pat);
    auto chars = characteristic_samples(tess);
    for (const auto& ns : chars) {
        double h = silverman_bandwidth(ns.values);
        double lo = *std::min_element(ns.values.begin(), ns.values.end()) - 3.0 * h;
        double hi = *std::max_element(ns.values.begin(), ns.values.end()) + 3.0 * h;
        std::vector<double> dgrid;
        for (int k = 0; k < cfg.grid_points; ++k)
            dgrid.push_back(lo + (hi - lo) * k / (cfg.grid_points - 1));
        write_curve_csv(out_path(cfg, "density_" + ns.name + ".csv"),
                        characteristic_density(ns.values, ns.name, dgrid, h));
    }
    auto octs = octant_radii_densities(pat, cfg.grid_points);
    for (std::size_t o = 0; o < octs.size(); ++o)
        write_curve_csv(out_path(cfg, "octant_" + std::to_string(o) + ".csv"), octs[o]);
    auto j = header(cfg);
    j["m"] = pat.size();
    j["feasible"] = tess.feasible();
    write_text(out_path(cfg, "report.json"), j.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic Laguerre tessellation modelling"};
    app.require_subcommand(1);

    Common c_tess, c_fitp, c_simp, c_fitr, c_simr, c_joint, c_env, c_selp, c_selr, c_rep;
    int fitp_d = 2;
    double simp_beta = 0.01, joint_beta = 0.01, env_beta = 0.01, selr_beta = 0.01;
    std::string simp_gammas, simp_deltas;
    std::string fitr_terms = "beta", simr_terms = "beta", simr_theta = "0,0";
    std::string joint_gammas, joint_deltas, joint_terms = "beta", joint_theta = "0,0";
    std::string env_mode = "lfg", env_gammas, env_deltas, env_terms = "beta", env_theta = "0,0";
    std::string selr_gammas, selr_deltas;
    bool selp_strict = false, selr_strict = false, selr_gof = false;

    auto* tess = app.add_subcommand("tessellate", "build the tessellation, dump cells/faces");
    add_common(tess, c_tess);

    auto* fitp = app.add_subcommand("fit-points", "MPLE of the multiscale point model");
    add_common(fitp, c_fitp);
    fitp->add_option("--d", fitp_d, "model order d");

    auto* simp = app.add_subcommand("simulate-points", "BDM chain for the point model");
    add_common(simp, c_simp);
    simp->add_option("--beta", simp_beta)->required();
    simp->add_option("--gammas", simp_gammas, "comma list");
    simp->add_option("--deltas", simp_deltas, "comma list");

    auto* fitr = app.add_subcommand("fit-radii", "MPLE of the conditional radii model");
    add_common(fitr, c_fitr);
    fitr->add_option("--terms", fitr_terms, "e.g. beta+nof+dvol");

    auto* simr = app.add_subcommand("simulate-radii", "MWG chain for radii given points");
    add_common(simr, c_simr);
    simr->add_option("--terms", simr_terms);
    simr->add_option("--theta", simr_theta, "comma list");

    auto* joint = app.add_subcommand("simulate-joint", "points then radii");
    add_common(joint, c_joint);
    joint->add_option("--beta", joint_beta)->required();
    joint->add_option("--gammas", joint_gammas);
    joint->add_option("--deltas", joint_deltas);
    joint->add_option("--terms", joint_terms);
    joint->add_option("--theta", joint_theta);

    auto* env = app.add_subcommand("envelope", "area rank envelope test");
    add_common(env, c_env);
    env->add_option("--mode", env_mode, "lfg | density");
    env->add_option("--beta", env_beta)->required();
    env->add_option("--gammas", env_gammas);
    env->add_option("--deltas", env_deltas);
    env->add_option("--terms", env_terms);
    env->add_option("--theta", env_theta);

    auto* selp = app.add_subcommand("select-points", "model selection over d");
    add_common(selp, c_selp);
    selp->add_flag("--strict", selp_strict, "exit 4 when no model is accepted");

    auto* selr = app.add_subcommand("select-radii", "candidate term-set ranking");
    add_common(selr, c_selr);
    selr->add_flag("--strict", selr_strict, "exit 4 when the best model is rejected");
    selr->add_flag("--gof", selr_gof, "run the six-density GOF test on the winner");
    selr->add_option("--beta", selr_beta, "point model for --gof simulations");
    selr->add_option("--gammas", selr_gammas);
    selr->add_option("--deltas", selr_deltas);

    auto* rep = app.add_subcommand("report", "summary curves and densities of a pattern");
    add_common(rep, c_rep);

    CLI11_PARSE(app, argc, argv);

    try {
        if (tess->parsed()) return cmd_tessellate(c_tess);
        if (fitp->parsed()) return cmd_fit_points(c_fitp, fitp_d);
        if (simp->parsed()) return cmd_simulate_points(c_simp, simp_beta, simp_gammas, simp_deltas);
        if (fitr->parsed()) return cmd_fit_radii(c_fitr, fitr_terms);
        if (simr->parsed()) return cmd_simulate_radii(c_simr, simr_terms, simr_theta);
        if (joint->parsed())
            return cmd_simulate_joint(c_joint, joint_beta, joint_gammas, joint_deltas,
                                      joint_terms, joint_theta);
        if (env->parsed())
            return cmd_envelope(c_env, env_mode, env_beta, env_gammas, env_deltas, env_terms,
                                env_theta);
        if (selp->parsed()) return cmd_select_points(c_selp, selp_strict);
        if (selr->parsed())
            return cmd_select_radii(c_selr, selr_strict, selr_gof, selr_beta, selr_gammas,
                                    selr_deltas);
        if (rep->parsed()) return cmd_report(c_rep);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
