#include "lagtess/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "lagtess/errors.hpp"

namespace lagtess {

double power_distance(const Vec3& y, const Generator& g, const Window& window) {
    return window.dist2(y, g.pos) - g.radius * g.radius;
}

double LaguerreCell::surface() const {
    double s = 0.0;
    for (const auto& f : faces) s += f.area;
    return s;
}

double LaguerreCell::totalEdgeLength() const {
    double p = 0.0;
    for (const auto& f : faces) p += f.perimeter;
    return 0.5 * p;  // each edge belongs to exactly two faces of the cell
}

int LaguerreCell::edgeCount() const {
    std::size_t e = 0;
    for (const auto& f : faces) e += f.ring.size();
    return static_cast<int>(e / 2);
}

namespace {

struct Candidate {
    double dist2;
    int j;
    std::array<int, 3> shift;
    Vec3 u;  // image position relative to the cell generator
};

// All periodic images of generator j (relative displacement `base`, wrap
// offset `wrap`) within distance R of the origin.
void gather_images(const Window& W, const Vec3& base, const std::array<int, 3>& wrap, int j,
                   double R, std::vector<Candidate>& out, double R_min = -1.0) {
    const double R2 = R * R;
    const double Rmin2 = R_min < 0.0 ? -1.0 : R_min * R_min;
    const int kx0 = static_cast<int>(std::ceil((-R - base.x) / W.a));
    const int kx1 = static_cast<int>(std::floor((R - base.x) / W.a));
    const int ky0 = static_cast<int>(std::ceil((-R - base.y) / W.b));
    const int ky1 = static_cast<int>(std::floor((R - base.y) / W.b));
    const int kz0 = static_cast<int>(std::ceil((-R - base.z) / W.c));
    const int kz1 = static_cast<int>(std::floor((R - base.z) / W.c));
    for (int kx = kx0; kx <= kx1; ++kx)
        for (int ky = ky0; ky <= ky1; ++ky)
            for (int kz = kz0; kz <= kz1; ++kz) {
                const Vec3 u = base + Vec3{kx * W.a, ky * W.b, kz * W.c};
                const double d2 = u.norm2();
                if (d2 <= R2 && d2 > Rmin2)
                    out.push_back({d2, j, {kx + wrap[0], ky + wrap[1], kz + wrap[2]}, u});
            }
}

LaguerreCell compute_cell(const MarkedPointPattern& pat, int i, const TessellationOptions& opts,
                          int override_idx = -1, const Generator* override_g = nullptr) {
    const Window& W = pat.window;
    auto gen = [&](int k) -> const Generator& {
        return (k == override_idx) ? *override_g : pat.generators[k];
    };
    const Generator gi = gen(i);
    const double ri2 = gi.radius * gi.radius;

    double rmax = 0.0;
    const int n = static_cast<int>(pat.size());
    for (int k = 0; k < n; ++k) rmax = std::max(rmax, gen(k).radius);

    // The cell is contained in the window-sized box centered at the generator
    // (it lies on the generator's side of the radical planes of its own
    // periodic images, which have equal radii).
    const Vec3 half{0.5 * W.a, 0.5 * W.b, 0.5 * W.c};
    ConvexPolyhedron poly = ConvexPolyhedron::box(Vec3{0, 0, 0} - half, half, i);

    auto security = [&]() {
        const double rc2 = poly.maxVertexNorm2();
        return std::sqrt(rc2) + std::sqrt(std::max(rc2 - ri2, 0.0) + rmax * rmax);
    };

    // Clipping can only shrink the polyhedron, so the initial security radius
    // bounds everything we will ever need.
    const double R0 = security();

    // Candidates are gathered in stages: a density-based radius first, then
    // outward while the security radius still reaches past the gathered
    // shell. Clip order stays globally sorted by (distance, j, shift), so the
    // result is identical to a single full gather.
    const auto by_key = [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist2, a.j, a.shift) < std::tie(b.dist2, b.j, b.shift);
    };
    std::vector<Candidate> cands;
    double Rg = -1.0;
    auto extend = [&](double R_new) {
        const std::size_t tail = cands.size();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;  // own images never cut the starting box
            const Vec3 raw = gen(j).pos - gi.pos;
            const Vec3 base = W.delta(gi.pos, gen(j).pos);
            const std::array<int, 3> wrap = {
                static_cast<int>(std::lround((base.x - raw.x) / W.a)),
                static_cast<int>(std::lround((base.y - raw.y) / W.b)),
                static_cast<int>(std::lround((base.z - raw.z) / W.c)),
            };
            gather_images(W, base, wrap, j, R_new, cands, Rg);
        }
        std::sort(cands.begin() + tail, cands.end(), by_key);
        Rg = R_new;
    };
    extend(std::min(R0, 2.0 * std::cbrt(W.volume() / n)));

    LaguerreCell cell;
    cell.generator = i;
    double D = R0;
    bool empty = false;
    std::size_t pos = 0;
    while (true) {
        if (pos < cands.size()) {
            const Candidate& cand = cands[pos++];
            // gathered candidates all lie within Rg, so dist > D here
            // implies D < Rg and nothing beyond can cut either
            if (cand.dist2 > D * D) break;
            const double len = std::sqrt(cand.dist2);
            const double rj = gen(cand.j).radius;
            ClipPlane plane{cand.u / len, (cand.dist2 + ri2 - rj * rj) / (2.0 * len)};
            if (!poly.clip(plane, cand.j, cand.shift, opts.plane_eps)) {
                empty = true;
                break;
            }
            D = security();
        } else {
            if (Rg >= std::min(D, R0)) break;
            extend(std::min(R0, std::max(1.6 * Rg, std::min(D, R0))));
        }
    }

    if (!empty) {
        poly.finalize(opts.min_face_area);
        const double vol = poly.volume();
        if (vol < opts.min_volume) empty = true;
        else {
            cell.empty = false;
            cell.volume = vol;
            cell.verts.reserve(poly.verts.size());
            for (const auto& v : poly.verts) cell.verts.push_back(v + gi.pos);
            cell.faces.reserve(poly.faces.size());
            for (auto& f : poly.faces) {
                LaguerreCell::Face cf;
                cf.neighbor = f.neighbor;
                cf.shift = f.shift;
                cf.area = ConvexPolyhedron::faceArea(poly.verts, f.ring);
                cf.perimeter = ConvexPolyhedron::facePerimeter(poly.verts, f.ring);
                cf.ring = std::move(f.ring);
                cell.faces.push_back(std::move(cf));
            }
        }
    }
    return cell;
}

bool cells_equal(const LaguerreCell& a, const LaguerreCell& b) {
    if (a.empty != b.empty) return false;
    if (a.empty) return true;
    if (a.volume != b.volume || a.verts.size() != b.verts.size() ||
        a.faces.size() != b.faces.size())
        return false;
    for (std::size_t k = 0; k < a.verts.size(); ++k)
        if (!(a.verts[k] == b.verts[k])) return false;
    for (std::size_t k = 0; k < a.faces.size(); ++k) {
        const auto& fa = a.faces[k];
        const auto& fb = b.faces[k];
        if (fa.neighbor != fb.neighbor || fa.shift != fb.shift || fa.ring != fb.ring)
            return false;
    }
    return true;
}

std::vector<int> face_neighbors(const LaguerreCell& cell) {
    std::vector<int> nb;
    for (const auto& f : cell.faces)
        if (f.neighbor != cell.generator) nb.push_back(f.neighbor);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    return nb;
}

}  // namespace

std::vector<int> PeriodicTessellation::emptyIndices() const {
    std::vector<int> idx;
    for (const auto& c : cells_)
        if (c.empty) idx.push_back(c.generator);
    return idx;
}

bool PeriodicTessellation::feasible() const {
    for (const auto& c : cells_)
        if (c.empty) return false;
    return true;
}

std::vector<std::pair<int, int>> PeriodicTessellation::adjacency() const {
    std::set<std::pair<int, int>> pairs;
    for (const auto& c : cells_)
        for (const auto& f : c.faces)
            pairs.insert(std::minmax(c.generator, f.neighbor));
    return {pairs.begin(), pairs.end()};
}

double PeriodicTessellation::totalVolume() const {
    double v = 0.0;
    for (const auto& c : cells_) v += c.volume;
    return v;
}

PeriodicTessellation build_tessellation(const MarkedPointPattern& pattern,
                                        const TessellationOptions& opts) {
    pattern.validate();
    PeriodicTessellation tess;
    tess.pattern_ = pattern;
    tess.opts_ = opts;
    tess.cells_.reserve(pattern.size());
    for (int i = 0; i < static_cast<int>(pattern.size()); ++i)
        tess.cells_.push_back(compute_cell(pattern, i, opts));
    return tess;
}

namespace {

// Radius-only updates admit an exact local criterion: candidate clip order is
// keyed on positions only, so cell k's recomputation is bitwise identical
// unless the radical plane of `index` cut its polyhedron before (it has a face
// with `index`) or cuts it at the new radius. No cascade is possible.
std::vector<LaguerreCell> preview_radius_update(const MarkedPointPattern& pat,
                                                const std::vector<LaguerreCell>& cells,
                                                const TessellationOptions& opts, int index,
                                                const Generator& g) {
    const Window& W = pat.window;
    const double eps = opts.plane_eps;
    const double rn2 = g.radius * g.radius;
    const bool shrunk = g.radius < pat.generators[index].radius;

    std::vector<int> affected{index};
    std::vector<Candidate> images;
    for (int k = 0; k < static_cast<int>(pat.size()); ++k) {
        if (k == index) continue;
        const LaguerreCell& cell = cells[k];
        if (cell.empty) {
            // a weaker plane can revive an empty cell; a stronger one cannot
            if (shrunk) affected.push_back(k);
            continue;
        }
        bool hit = false;
        for (const auto& f : cell.faces)
            if (f.neighbor == index) {
                hit = true;
                break;
            }
        if (!hit) {
            const Vec3 gk = pat.generators[k].pos;
            const double rk2 = pat.generators[k].radius * pat.generators[k].radius;
            double rc2 = 0.0;
            for (const auto& v : cell.verts) rc2 = std::max(rc2, (v - gk).norm2());
            const double rc = std::sqrt(rc2);
            const double reach = rc + std::sqrt(rc2 + std::max(rn2 - rk2, 0.0));
            const Vec3 raw = g.pos - gk;
            const Vec3 base = W.delta(gk, g.pos);
            images.clear();
            gather_images(W, base, {0, 0, 0}, index, reach, images);
            for (const auto& im : images) {
                const double len = std::sqrt(im.dist2);
                const double offset = (im.dist2 + rk2 - rn2) / (2.0 * len);
                for (const auto& v : cell.verts)
                    if ((v - gk).dot(im.u) > (offset + eps) * len) {
                        hit = true;
                        break;
                    }
                if (hit) break;
            }
            (void)raw;
        }
        if (hit) affected.push_back(k);
    }

    std::vector<LaguerreCell> out;
    out.reserve(affected.size());
    for (int k : affected) out.push_back(compute_cell(pat, k, opts, index, &g));
    return out;
}

}  // namespace

std::vector<LaguerreCell> preview_update(const PeriodicTessellation& tess, int index,
                                         const Generator& g) {
    const auto& pat = tess.pattern_;
    if (index < 0 || index >= static_cast<int>(pat.size()))
        throw std::invalid_argument("generator index out of range");
    if (g.pos == pat.generators[index].pos)
        return preview_radius_update(pat, tess.cells_, tess.opts_, index, g);

    // A change can cascade: a grown cell may swallow cells that never shared a
    // face with the updated generator. Propagate through old and new face
    // neighbors of every cell that actually changed, until a fixpoint.
    std::vector<LaguerreCell> out;
    std::set<int> done;
    std::vector<int> queue{index};
    auto enqueue = [&](int k) {
        if (!done.count(k)) queue.push_back(k);
    };
    for (int nb : face_neighbors(tess.cells_[index])) enqueue(nb);
    while (!queue.empty()) {
        const int k = queue.back();
        queue.pop_back();
        if (done.count(k)) continue;
        done.insert(k);
        LaguerreCell fresh = compute_cell(pat, k, tess.opts_, index, &g);
        const bool changed = !cells_equal(tess.cells_[k], fresh);
        if (k == index || changed) {
            for (int nb : face_neighbors(tess.cells_[k])) enqueue(nb);
            for (int nb : face_neighbors(fresh)) enqueue(nb);
        }
        out.push_back(std::move(fresh));
    }
    return out;
}

ChangeReport update_generator(PeriodicTessellation& tess, int index, const Generator& g) {
    if (!tess.pattern_.window.contains(g.pos) || !(g.radius >= 0.0) ||
        !(g.radius <= tess.pattern_.r_max))
        throw std::invalid_argument("new generator state violates pattern invariants");
    std::vector<LaguerreCell> updated = preview_update(tess, index, g);
    ChangeReport report;
    for (auto& cell : updated) {
        const int k = cell.generator;
        if (!cells_equal(tess.cells_[k], cell)) report.changed.push_back(k);
        tess.cells_[k] = std::move(cell);
    }
    tess.pattern_.generators[index] = g;
    std::sort(report.changed.begin(), report.changed.end());
    return report;
}

void apply_preview(PeriodicTessellation& tess, int index, const Generator& g,
                   std::vector<LaguerreCell>&& cells) {
    for (auto& cell : cells) {
        const int k = cell.generator;
        tess.cells_[k] = std::move(cell);
    }
    tess.pattern_.generators[index] = g;
}

CellCharacteristics cell_characteristics(const PeriodicTessellation& tess, int index) {
    const LaguerreCell& c = tess.cell(index);
    if (c.empty) throw EmptyCell("cell " + std::to_string(index) + " is empty");
    CellCharacteristics ch;
    ch.vol = c.volume;
    ch.surf = c.surface();
    ch.nof = static_cast<int>(c.faces.size());
    ch.tel = c.totalEdgeLength();
    ch.spher = std::cbrt(M_PI) * std::pow(6.0 * ch.vol, 2.0 / 3.0) / ch.surf;
    return ch;
}

std::vector<CellCharacteristics> all_cell_characteristics(const PeriodicTessellation& tess) {
    std::vector<CellCharacteristics> out;
    for (const auto& c : tess.cells())
        if (!c.empty) out.push_back(cell_characteristics(tess, c.generator));
    return out;
}

std::vector<FaceCharacteristics> face_characteristics(const PeriodicTessellation& tess) {
    std::vector<FaceCharacteristics> out;
    for (const auto& c : tess.cells()) {
        for (const auto& f : c.faces) {
            // each geometric face shows up twice; keep one deterministic copy
            const bool keep = (c.generator < f.neighbor) ||
                              (c.generator == f.neighbor && f.shift > std::array<int, 3>{0, 0, 0});
            if (!keep) continue;
            FaceCharacteristics fc;
            fc.i = c.generator;
            fc.j = f.neighbor;
            fc.farea = f.area;
            fc.fper = f.perimeter;
            fc.fnoe = static_cast<int>(f.ring.size());
            const auto& other = tess.cell(f.neighbor);
            fc.dvol = std::fabs(c.volume - (other.empty ? 0.0 : other.volume));
            out.push_back(fc);
        }
    }
    return out;
}

std::vector<SlicePolygon> slice_tessellation(const PeriodicTessellation& tess, double z0) {
    std::vector<SlicePolygon> out;
    const Window& W = tess.pattern().window;
    for (const auto& c : tess.cells()) {
        if (c.empty) continue;
        double zlo = 1e300, zhi = -1e300;
        for (const auto& v : c.verts) {
            zlo = std::min(zlo, v.z);
            zhi = std::max(zhi, v.z);
        }
        for (int k = -1; k <= 1; ++k) {
            const double zp = z0 + k * W.c;
            if (zp <= zlo || zp >= zhi) continue;
            // rebuild a local polyhedron and cut it with the slice plane; the
            // cap ring is the cross-section
            ConvexPolyhedron poly;
            poly.verts = c.verts;
            for (const auto& f : c.faces) {
                ConvexPolyhedron::Face pf;
                pf.neighbor = f.neighbor;
                pf.shift = f.shift;
                pf.ring = f.ring;
                poly.faces.push_back(std::move(pf));
            }
            ClipPlane plane{{0.0, 0.0, 1.0}, zp};
            if (!poly.clip(plane, -2, {0, 0, 0}, 1e-12)) continue;
            for (const auto& f : poly.faces) {
                if (f.neighbor != -2) continue;
                SlicePolygon sp;
                sp.generator = c.generator;
                for (int v : f.ring) sp.ring.push_back({poly.verts[v].x, poly.verts[v].y, z0});
                out.push_back(std::move(sp));
            }
        }
    }
    return out;
}

}  // namespace lagtess
