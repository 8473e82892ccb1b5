#include "lagtess/polyhedron.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "lagtess/errors.hpp"

namespace lagtess {

ConvexPolyhedron ConvexPolyhedron::box(const Vec3& lo, const Vec3& hi, int self_index) {
    ConvexPolyhedron p;
    p.verts = {
        {lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
        {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z},
    };
    auto add = [&](std::array<int, 3> shift, std::vector<int> ring) {
        Face f;
        f.neighbor = self_index;
        f.shift = shift;
        f.ring = std::move(ring);
        p.faces.push_back(std::move(f));
    };
    add({0, 0, -1}, {0, 3, 2, 1});
    add({0, 0, 1}, {4, 5, 6, 7});
    add({0, -1, 0}, {0, 1, 5, 4});
    add({0, 1, 0}, {2, 3, 7, 6});
    add({-1, 0, 0}, {0, 4, 7, 3});
    add({1, 0, 0}, {1, 2, 6, 5});
    return p;
}

namespace {
enum Side : int { IN = -1, ON = 0, OUT = 1 };
}

bool ConvexPolyhedron::clip(const ClipPlane& plane, int neighbor,
                            const std::array<int, 3>& shift, double eps) {
    const std::size_t nv = verts.size();
    std::vector<double> dist(nv);
    std::vector<int> side(nv);
    std::size_t n_out = 0, n_in = 0;
    for (std::size_t i = 0; i < nv; ++i) {
        const double s = plane.normal.dot(verts[i]) - plane.offset;
        dist[i] = s;
        side[i] = (s > eps) ? OUT : (s < -eps ? IN : ON);
        if (side[i] == OUT) ++n_out;
        else if (side[i] == IN) ++n_in;
    }
    if (n_out == 0) return true;  // plane does not cut (tangency included)
    if (n_in == 0) {              // nothing of positive volume left
        verts.clear();
        faces.clear();
        return false;
    }

    // Intersection vertex on a crossing edge, memoized per undirected edge so
    // both incident faces use the identical point.
    std::map<std::pair<int, int>, int> edge_cut;
    auto cut = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = edge_cut.find(key);
        if (it != edge_cut.end()) return it->second;
        const double t = dist[a] / (dist[a] - dist[b]);
        Vec3 p = verts[a] + (verts[b] - verts[a]) * t;
        int idx = static_cast<int>(verts.size());
        verts.push_back(p);
        edge_cut.emplace(key, idx);
        return idx;
    };

    // Directed chords (exit -> entry) inserted into each cut face; they chain
    // into the ring of the new cap face.
    std::vector<std::pair<int, int>> chords;
    std::vector<Face> kept;
    kept.reserve(faces.size() + 1);
    for (auto& f : faces) {
        bool any_out = false;
        for (int v : f.ring)
            if (side[v] == OUT) { any_out = true; break; }
        if (!any_out) {
            kept.push_back(std::move(f));
            continue;
        }
        const std::size_t k = f.ring.size();
        std::vector<int> ring;
        ring.reserve(k + 2);
        int exit_v = -1, entry_v = -1;
        for (std::size_t i = 0; i < k; ++i) {
            const int a = f.ring[i];
            const int b = f.ring[(i + 1) % k];
            if (side[a] != OUT) ring.push_back(a);
            if (side[a] == IN && side[b] == OUT) {
                exit_v = cut(a, b);
                ring.push_back(exit_v);
            } else if (side[a] == ON && side[b] == OUT) {
                exit_v = a;
            } else if (side[a] == OUT && side[b] == IN) {
                entry_v = cut(a, b);
                ring.push_back(entry_v);
            } else if (side[a] == OUT && side[b] == ON) {
                entry_v = b;
            }
        }
        if (exit_v >= 0 && entry_v >= 0 && exit_v != entry_v)
            chords.emplace_back(exit_v, entry_v);
        if (ring.size() >= 3) {
            f.ring = std::move(ring);
            kept.push_back(std::move(f));
        }
    }

    // Chain the chords into the cap ring.
    if (chords.size() >= 3) {
        std::map<int, int> next;
        for (auto& [from, to] : chords) next[from] = to;
        std::vector<int> ring;
        ring.reserve(chords.size());
        int start = chords.front().first;
        int cur = start;
        do {
            ring.push_back(cur);
            auto it = next.find(cur);
            if (it == next.end()) throw DegenerateConfiguration("open chord chain while clipping");
            cur = it->second;
        } while (cur != start && ring.size() <= chords.size() + 1);
        if (cur != start || ring.size() != chords.size())
            throw DegenerateConfiguration("inconsistent chord chain while clipping");
        // orient the cap outward (ring normal along the clip plane normal)
        Vec3 n{0, 0, 0};
        const Vec3& v0 = verts[ring[0]];
        for (std::size_t i = 1; i + 1 < ring.size(); ++i)
            n += (verts[ring[i]] - v0).cross(verts[ring[i + 1]] - v0);
        if (n.dot(plane.normal) < 0.0) std::reverse(ring.begin(), ring.end());
        Face cap;
        cap.neighbor = neighbor;
        cap.shift = shift;
        cap.ring = std::move(ring);
        kept.push_back(std::move(cap));
    }

    faces = std::move(kept);
    return !faces.empty();
}

void ConvexPolyhedron::finalize(double min_face_area) {
    std::vector<Face> kept;
    kept.reserve(faces.size());
    for (auto& f : faces) {
        if (f.ring.size() < 3) continue;
        if (faceArea(verts, f.ring) < min_face_area) continue;
        kept.push_back(std::move(f));
    }
    faces = std::move(kept);

    std::vector<int> remap(verts.size(), -1);
    std::vector<Vec3> nverts;
    for (auto& f : faces)
        for (int& v : f.ring) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(nverts.size());
                nverts.push_back(verts[v]);
            }
            v = remap[v];
        }
    verts = std::move(nverts);
}

double ConvexPolyhedron::volume() const {
    double v6 = 0.0;
    for (const auto& f : faces) {
        const Vec3& v0 = verts[f.ring[0]];
        for (std::size_t i = 1; i + 1 < f.ring.size(); ++i)
            v6 += v0.dot(verts[f.ring[i]].cross(verts[f.ring[i + 1]]));
    }
    return v6 / 6.0;
}

double ConvexPolyhedron::maxVertexNorm2() const {
    double m = 0.0;
    for (const auto& v : verts) m = std::max(m, v.norm2());
    return m;
}

double ConvexPolyhedron::faceArea(const std::vector<Vec3>& verts, const std::vector<int>& ring) {
    Vec3 n{0, 0, 0};
    const Vec3& v0 = verts[ring[0]];
    for (std::size_t i = 1; i + 1 < ring.size(); ++i)
        n += (verts[ring[i]] - v0).cross(verts[ring[i + 1]] - v0);
    return 0.5 * n.norm();
}

double ConvexPolyhedron::facePerimeter(const std::vector<Vec3>& verts,
                                       const std::vector<int>& ring) {
    double p = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i)
        p += (verts[ring[(i + 1) % ring.size()]] - verts[ring[i]]).norm();
    return p;
}

}  // namespace lagtess
