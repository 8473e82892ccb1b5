#include "lagtess/radii_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lagtess/errors.hpp"

namespace lagtess {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_log_term(TermKind k) {
    return k == TermKind::LogRadius || k == TermKind::LogOneMinusRadius;
}

}  // namespace

std::vector<TermKind> parse_terms(const std::string& names) {
    std::vector<TermKind> terms;
    std::string normalized = names;
    std::replace(normalized.begin(), normalized.end(), '+', ',');  // "beta+nof" == "beta,nof"
    std::stringstream ss(normalized);
    std::string tok;
    auto add = [&](TermKind k) {
        if (std::find(terms.begin(), terms.end(), k) != terms.end())
            throw std::invalid_argument("duplicate term: " + tok);
        terms.push_back(k);
    };
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (tok == "beta") {
            add(TermKind::LogRadius);
            add(TermKind::LogOneMinusRadius);
        } else if (tok == "nof") add(TermKind::SumNof);
        else if (tok == "surf") add(TermKind::SumSurf);
        else if (tok == "vol2") add(TermKind::SumVolSq);
        else if (tok == "dvol") add(TermKind::SumDvol);
        else throw std::invalid_argument("unknown term: " + tok);
    }
    if (terms.empty()) throw std::invalid_argument("no terms given");
    return terms;
}

std::string term_set_name(const std::vector<TermKind>& terms) {
    std::string out;
    auto append = [&](const std::string& s) {
        if (!out.empty()) out += "+";
        out += s;
    };
    for (std::size_t i = 0; i < terms.size(); ++i) {
        switch (terms[i]) {
            case TermKind::LogRadius:
                if (i + 1 < terms.size() && terms[i + 1] == TermKind::LogOneMinusRadius) {
                    append("beta");
                    ++i;
                } else append("logr");
                break;
            case TermKind::LogOneMinusRadius: append("log1mr"); break;
            case TermKind::SumNof: append("nof"); break;
            case TermKind::SumSurf: append("surf"); break;
            case TermKind::SumVolSq: append("vol2"); break;
            case TermKind::SumDvol: append("dvol"); break;
        }
    }
    return out;
}

void RadiiModelSpec::validate() const {
    if (terms.empty()) throw std::invalid_argument("no terms");
    if (theta.size() != dim()) throw std::invalid_argument("theta dimension mismatch");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j)
            if (terms[i] == terms[j]) throw std::invalid_argument("duplicate term");
        if (is_log_term(terms[i]) && !(theta[i] > -1.0))
            throw std::invalid_argument("log-term theta must exceed -1");
    }
}

Eigen::VectorXd sufficient_stats(const std::vector<TermKind>& terms,
                                 const PeriodicTessellation& tess) {
    if (!tess.feasible()) throw Infeasible("tessellation has empty cells");
    const auto& gens = tess.pattern().generators;
    const double rmax = tess.pattern().r_max;

    double lograd = 0.0, log1m = 0.0, nof = 0.0, surf = 0.0, volsq = 0.0, dvol = 0.0;
    for (const auto& g : gens) {
        lograd += std::log(g.radius / rmax);
        log1m += std::log(1.0 - g.radius / rmax);
    }
    for (const auto& c : tess.cells()) {
        nof += static_cast<double>(c.faces.size());
        surf += c.surface();
        volsq += c.volume * c.volume;
    }
    for (const auto& f : face_characteristics(tess)) dvol += f.dvol;

    Eigen::VectorXd h(static_cast<int>(terms.size()));
    for (std::size_t i = 0; i < terms.size(); ++i) {
        switch (terms[i]) {
            case TermKind::LogRadius: h[i] = lograd; break;
            case TermKind::LogOneMinusRadius: h[i] = log1m; break;
            case TermKind::SumNof: h[i] = nof; break;
            case TermKind::SumSurf: h[i] = surf; break;
            case TermKind::SumVolSq: h[i] = volsq; break;
            case TermKind::SumDvol: h[i] = dvol; break;
        }
    }
    return h;
}

double log_unnormalized_density(const RadiiModelSpec& spec, const MarkedPointPattern& pattern,
                                const TessellationOptions& topts) {
    spec.validate();
    for (const auto& g : pattern.generators)
        if (!(g.radius >= 0.0 && g.radius <= pattern.r_max)) return -kInf;
    auto tess = build_tessellation(pattern, topts);
    if (!tess.feasible()) return -kInf;
    return spec.theta.dot(sufficient_stats(spec.terms, tess));
}

namespace {

GeomDelta geom_stat_deltas_impl(const PeriodicTessellation& tess, int site, double new_radius,
                                std::vector<LaguerreCell>* keep) {
    Generator g = tess.pattern().generators[site];
    g.radius = new_radius;
    auto fresh = preview_update(tess, site, g);

    GeomDelta d;
    std::unordered_map<int, const LaguerreCell*> fresh_by_index;
    for (const auto& c : fresh) {
        if (c.empty) {
            d.feasible = false;
            return d;
        }
        fresh_by_index[c.generator] = &c;
    }

    const auto& cells = tess.cells();
    for (const auto& c : fresh) {
        const auto& old = cells[c.generator];
        d.nof += static_cast<double>(c.faces.size()) - static_cast<double>(old.faces.size());
        d.surf += c.surface() - old.surface();
        d.volsq += c.volume * c.volume - old.volume * old.volume;
    }

    // dvol: only face pairs incident to a recomputed cell change; faces
    // between two recomputed cells are deduplicated by keeping i < nb
    auto incident_dvol = [&](bool use_new) {
        double s = 0.0;
        for (const auto& c : fresh) {
            const int i = c.generator;
            const LaguerreCell& cell = use_new ? c : cells[i];
            const double vi = use_new ? c.volume : cells[i].volume;
            for (const auto& f : cell.faces) {
                const int nb = f.neighbor;
                if (nb == i) continue;  // self pair: |vol - vol| = 0
                auto it = fresh_by_index.find(nb);
                if (it != fresh_by_index.end() && nb < i) continue;
                const double vnb = (use_new && it != fresh_by_index.end())
                                       ? it->second->volume
                                       : cells[nb].volume;
                s += std::abs(vi - vnb);
            }
        }
        return s;
    };
    d.dvol = incident_dvol(true) - incident_dvol(false);
    if (keep) *keep = std::move(fresh);
    return d;
}

}  // namespace

GeomDelta geom_stat_deltas(const PeriodicTessellation& tess, int site, double new_radius) {
    return geom_stat_deltas_impl(tess, site, new_radius, nullptr);
}

namespace {

double theta_dot_delta(const RadiiModelSpec& spec, const GeomDelta& gd, double r_old,
                       double r_new, double rmax) {
    double dlog = 0.0;
    for (int i = 0; i < spec.dim(); ++i) {
        double dh = 0.0;
        switch (spec.terms[i]) {
            case TermKind::LogRadius: dh = std::log(r_new / rmax) - std::log(r_old / rmax); break;
            case TermKind::LogOneMinusRadius:
                dh = std::log(1.0 - r_new / rmax) - std::log(1.0 - r_old / rmax);
                break;
            case TermKind::SumNof: dh = gd.nof; break;
            case TermKind::SumSurf: dh = gd.surf; break;
            case TermKind::SumVolSq: dh = gd.volsq; break;
            case TermKind::SumDvol: dh = gd.dvol; break;
        }
        dlog += spec.theta[i] * dh;
    }
    return dlog;
}

}  // namespace

MwgResult simulate_radii_mwg(const RadiiModelSpec& spec, const std::vector<Vec3>& points,
                             const Window& window, const MwgOptions& opts, Rng& rng,
                             const std::vector<double>* initial,
                             const TessellationOptions& topts) {
    spec.validate();
    if (points.empty()) throw std::invalid_argument("no points");
    if (initial && initial->size() != points.size())
        throw std::invalid_argument("initial radii size mismatch");

    MarkedPointPattern pat;
    pat.window = window;
    pat.r_max = opts.r_max;
    for (std::size_t i = 0; i < points.size(); ++i)
        // equal radii give the Voronoi diagram, which is always feasible
        pat.generators.push_back({points[i], initial ? (*initial)[i] : 0.5 * pat.r_max});
    try {
        pat.validate();
    } catch (const std::invalid_argument& e) {
        throw InfeasibleInitial(e.what());
    }

    auto tess = build_tessellation(pat, topts);
    if (!tess.feasible()) throw InfeasibleInitial("initial tessellation has empty cells");

    MwgResult res;
    const long m = static_cast<long>(points.size());
    const double rmax = pat.r_max;
    for (long sweep = 0; sweep < opts.n_sweeps; ++sweep) {
        for (long s = 0; s < m; ++s) {
            const long site = opts.random_scan ? static_cast<long>(rng.integer(m)) : s;
            ++res.diagnostics.proposed;
            const double cur = tess.pattern().generators[site].radius;
            const double prop = cur + rng.normal(0.0, opts.proposal_sd);
            if (prop < 0.0 || prop > rmax) continue;
            std::vector<LaguerreCell> fresh;
            auto gd = geom_stat_deltas_impl(tess, static_cast<int>(site), prop, &fresh);
            if (!gd.feasible) continue;
            const double dlog = theta_dot_delta(spec, gd, cur, prop, rmax);
            if (dlog >= 0.0 || rng.uniform() < std::exp(dlog)) {
                Generator g = tess.pattern().generators[site];
                g.radius = prop;
                apply_preview(tess, static_cast<int>(site), g, std::move(fresh));
                ++res.diagnostics.accepted;
            }
        }
    }
    res.radii.reserve(m);
    for (const auto& g : tess.pattern().generators) res.radii.push_back(g.radius);
    return res;
}

RadiiNodeTable::RadiiNodeTable(const MarkedPointPattern& pattern, const RadiiQuadrature& quad,
                               const TessellationOptions& topts) {
    if (quad.n_nodes < 1) throw std::invalid_argument("n_nodes must be >= 1");
    pattern.validate();
    auto tess = build_tessellation(pattern, topts);
    if (!tess.feasible()) throw Infeasible("observed pattern has empty cells");

    m_ = static_cast<long>(pattern.size());
    n_nodes_ = quad.n_nodes;
    const double rmax = pattern.r_max;
    node_weight_ = rmax / n_nodes_;
    node_u_.resize(n_nodes_);
    node_lograd_.resize(n_nodes_);
    node_log1m_.resize(n_nodes_);
    for (int k = 0; k < n_nodes_; ++k) {
        node_u_[k] = (k + 0.5) * node_weight_;
        node_lograd_[k] = std::log(node_u_[k] / rmax);
        node_log1m_[k] = std::log(1.0 - node_u_[k] / rmax);
    }

    double lograd = 0.0, log1m = 0.0, nof = 0.0, surf = 0.0, volsq = 0.0, dvol = 0.0;
    std::vector<double> own_lograd(m_), own_log1m(m_);
    for (long j = 0; j < m_; ++j) {
        own_lograd[j] = std::log(pattern.generators[j].radius / rmax);
        own_log1m[j] = std::log(1.0 - pattern.generators[j].radius / rmax);
        lograd += own_lograd[j];
        log1m += own_log1m[j];
    }
    for (const auto& c : tess.cells()) {
        nof += static_cast<double>(c.faces.size());
        surf += c.surface();
        volsq += c.volume * c.volume;
    }
    for (const auto& f : face_characteristics(tess)) dvol += f.dvol;
    obs_raw_ = {lograd, log1m, nof, surf, volsq, dvol};

    rest_lograd_.resize(m_);
    rest_log1m_.resize(m_);
    for (long j = 0; j < m_; ++j) {
        if (std::isfinite(own_lograd[j])) rest_lograd_[j] = lograd - own_lograd[j];
        else {
            double s = 0.0;
            for (long k = 0; k < m_; ++k)
                if (k != j) s += own_lograd[k];
            rest_lograd_[j] = s;
        }
        if (std::isfinite(own_log1m[j])) rest_log1m_[j] = log1m - own_log1m[j];
        else {
            double s = 0.0;
            for (long k = 0; k < m_; ++k)
                if (k != j) s += own_log1m[k];
            rest_log1m_[j] = s;
        }
    }

    feas_.assign(static_cast<std::size_t>(m_) * n_nodes_, 0);
    geom_.assign(static_cast<std::size_t>(m_) * n_nodes_, {});
    for (long j = 0; j < m_; ++j) {
        bool any = false;
        for (int k = 0; k < n_nodes_; ++k) {
            auto gd = geom_stat_deltas(tess, static_cast<int>(j), node_u_[k]);
            if (!gd.feasible) continue;
            const std::size_t at = static_cast<std::size_t>(j) * n_nodes_ + k;
            feas_[at] = 1;
            geom_[at] = {nof + gd.nof, surf + gd.surf, volsq + gd.volsq, dvol + gd.dvol};
            any = true;
        }
        if (!any)
            throw QuadratureAllInfeasible("site " + std::to_string(j) +
                                          " has no feasible quadrature node");
    }
}

double RadiiNodeTable::rawAt(long site, int node, TermKind kind) const {
    const std::size_t at = static_cast<std::size_t>(site) * n_nodes_ + node;
    switch (kind) {
        case TermKind::LogRadius: return rest_lograd_[site] + node_lograd_[node];
        case TermKind::LogOneMinusRadius: return rest_log1m_[site] + node_log1m_[node];
        case TermKind::SumNof: return geom_[at][0];
        case TermKind::SumSurf: return geom_[at][1];
        case TermKind::SumVolSq: return geom_[at][2];
        case TermKind::SumDvol: return geom_[at][3];
    }
    return 0.0;
}

RadiiPlWorkspace::RadiiPlWorkspace(std::vector<TermKind> terms,
                                   std::shared_ptr<const RadiiNodeTable> table)
    : terms_(std::move(terms)), table_(std::move(table)) {
    if (terms_.empty()) throw std::invalid_argument("no terms");
    h_obs_.resize(dim());
    for (int i = 0; i < dim(); ++i)
        h_obs_[i] = table_->observedRaw()[static_cast<int>(terms_[i])];
}

RadiiPlWorkspace::RadiiPlWorkspace(const std::vector<TermKind>& terms,
                                   const MarkedPointPattern& pattern,
                                   const RadiiQuadrature& quad, const TessellationOptions& topts)
    : RadiiPlWorkspace(terms, std::make_shared<RadiiNodeTable>(pattern, quad, topts)) {}

RadiiPlValue RadiiPlWorkspace::eval(const Eigen::VectorXd& theta) const {
    const int q = dim();
    if (theta.size() != q) throw std::invalid_argument("theta dimension mismatch");
    const long m = table_->sites();
    const int n = table_->nodes();
    const double w = table_->nodeWeight();

    RadiiPlValue out;
    out.value = static_cast<double>(m) * theta.dot(h_obs_);
    out.grad = static_cast<double>(m) * h_obs_;
    out.hess = Eigen::MatrixXd::Zero(q, q);

    Eigen::MatrixXd h(q, n);   // H at the feasible nodes of one site
    Eigen::VectorXd x(n);      // theta . H
    for (long j = 0; j < m; ++j) {
        int nf = 0;
        for (int k = 0; k < n; ++k) {
            if (!table_->feasibleAt(j, k)) continue;
            for (int i = 0; i < q; ++i) h(i, nf) = table_->rawAt(j, k, terms_[i]);
            x[nf] = theta.dot(h.col(nf));
            ++nf;
        }
        const double xmax = x.head(nf).maxCoeff();
        double z = 0.0;
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(q);
        Eigen::MatrixXd e2 = Eigen::MatrixXd::Zero(q, q);
        for (int k = 0; k < nf; ++k) {
            const double wk = w * std::exp(x[k] - xmax);
            z += wk;
            e1.noalias() += wk * h.col(k);
            e2.noalias() += wk * (h.col(k) * h.col(k).transpose());
        }
        out.value -= xmax + std::log(z);
        e1 /= z;
        e2 /= z;
        out.grad -= e1;
        out.hess -= e2 - e1 * e1.transpose();
    }
    return out;
}

double log_pseudolikelihood_radii(const RadiiModelSpec& spec, const MarkedPointPattern& pattern,
                                  const RadiiQuadrature& quad, Eigen::VectorXd* grad,
                                  Eigen::MatrixXd* hess, const TessellationOptions& topts) {
    spec.validate();
    RadiiPlWorkspace ws(spec.terms, pattern, quad, topts);
    auto r = ws.eval(spec.theta);
    if (grad) *grad = r.grad;
    if (hess) *hess = r.hess;
    return r.value;
}

namespace {

bool in_domain(const std::vector<TermKind>& terms, const Eigen::VectorXd& theta) {
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (is_log_term(terms[i]) && !(theta[i] > -1.0)) return false;
    return true;
}

}  // namespace

RadiiFitResult fit_mple_radii(const std::vector<TermKind>& terms,
                              std::shared_ptr<const RadiiNodeTable> table,
                              const RadiiFitOptions& opts) {
    RadiiPlWorkspace ws(terms, std::move(table));
    const int q = ws.dim();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(q);  // always admissible
    RadiiPlValue cur = ws.eval(theta);

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        if (cur.grad.norm() <= opts.grad_tol) {
            RadiiFitResult res;
            res.spec.terms = terms;
            res.spec.theta = theta;
            res.log_pl = cur.value;
            res.iterations = iter;
            return res;
        }
        Eigen::MatrixXd H = cur.hess;
        H.diagonal().array() -= 1e-12;
        Eigen::VectorXd dir = H.ldlt().solve(-cur.grad);
        if (!dir.allFinite() || dir.dot(cur.grad) <= 0.0) dir = cur.grad;

        double step = 1.0;
        bool improved = false;
        for (int h = 0; h < 60; ++h) {
            Eigen::VectorXd cand = theta + step * dir;
            if (!in_domain(terms, cand)) {
                step *= 0.5;  // shrink to stay in the open set
                continue;
            }
            RadiiPlValue val = ws.eval(cand);
            if (val.value > cur.value) {
                theta = cand;
                cur = val;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            // expected gain below the fp resolution of the objective: take
            // the Newton step if it still shrinks the gradient and stop
            const double expected = 0.5 * std::abs(dir.dot(cur.grad));
            if (cur.grad.norm() <= 1e-6 ||
                expected <= 1e-9 * (1.0 + std::abs(cur.value))) {
                Eigen::VectorXd cand = theta + dir;
                if (in_domain(terms, cand)) {
                    RadiiPlValue val = ws.eval(cand);
                    if (val.grad.norm() < cur.grad.norm()) {
                        theta = cand;
                        cur = val;
                    }
                }
                RadiiFitResult res;
                res.spec.terms = terms;
                res.spec.theta = theta;
                res.log_pl = cur.value;
                res.iterations = iter;
                return res;
            }
            throw NewtonDivergence("step halving failed to improve the radii log PL");
        }
    }
    throw NewtonDivergence("Newton-Raphson did not converge for the radii model");
}

RadiiFitResult fit_mple_radii(const std::vector<TermKind>& terms,
                              const MarkedPointPattern& pattern, const RadiiFitOptions& opts) {
    return fit_mple_radii(terms, std::make_shared<RadiiNodeTable>(pattern, opts.quad), opts);
}

}  // namespace lagtess
