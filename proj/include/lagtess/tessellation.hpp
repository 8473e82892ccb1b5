#pragma once

#include <array>
#include <string>
#include <vector>

#include "lagtess/pattern.hpp"
#include "lagtess/polyhedron.hpp"

namespace lagtess {

struct CellCharacteristics {
    double vol = 0.0;    // um^3
    double surf = 0.0;   // um^2
    int nof = 0;
    double tel = 0.0;    // um
    double spher = 0.0;  // pi^{1/3} (6 vol)^{2/3} / surf
};

struct FaceCharacteristics {
    int i = 0, j = 0;    // generator indices of the incident cells
    double farea = 0.0;
    double fper = 0.0;
    int fnoe = 0;
    double dvol = 0.0;   // |vol_i - vol_j|
};

struct LaguerreCell {
    int generator = -1;
    bool empty = true;
    double volume = 0.0;
    // vertices in absolute coordinates (generator position + local offset);
    // they may stick out of the window, which is fine on the torus
    std::vector<Vec3> verts;
    struct Face {
        int neighbor = -1;
        std::array<int, 3> shift{};
        std::vector<int> ring;
        double area = 0.0;
        double perimeter = 0.0;
    };
    std::vector<Face> faces;

    double surface() const;
    double totalEdgeLength() const;
    int edgeCount() const;  // distinct edges (each shared by two faces)
};

struct ChangeReport {
    std::vector<int> changed;  // generator indices whose cells differ
};

// Clipping tolerances (see tessellation construction notes in the README).
struct TessellationOptions {
    double plane_eps = 1e-10;      // on-plane band for clip classification
    double min_face_area = 1e-12;  // faces below this are dropped
    double min_volume = 1e-12;     // cells below this count as empty
};

class PeriodicTessellation {
public:
    PeriodicTessellation() = default;

    const MarkedPointPattern& pattern() const { return pattern_; }
    const std::vector<LaguerreCell>& cells() const { return cells_; }
    const LaguerreCell& cell(int i) const { return cells_.at(i); }
    std::vector<int> emptyIndices() const;
    bool feasible() const;  // no empty cells

    // Unordered generator pairs (i <= j) sharing at least one face.
    std::vector<std::pair<int, int>> adjacency() const;

    double totalVolume() const;

    friend PeriodicTessellation build_tessellation(const MarkedPointPattern&,
                                                   const TessellationOptions&);
    friend std::vector<LaguerreCell> preview_update(const PeriodicTessellation&, int,
                                                    const Generator&);
    friend ChangeReport update_generator(PeriodicTessellation&, int, const Generator&);
    friend void apply_preview(PeriodicTessellation&, int, const Generator&,
                              std::vector<LaguerreCell>&&);

private:
    MarkedPointPattern pattern_;
    std::vector<LaguerreCell> cells_;
    TessellationOptions opts_;
};

PeriodicTessellation build_tessellation(const MarkedPointPattern& pattern,
                                        const TessellationOptions& opts = {});

// Recompute the cells affected by changing generator `index` to `g`, without
// mutating the tessellation. Returns the new cells (affected indices only,
// `index` first).
std::vector<LaguerreCell> preview_update(const PeriodicTessellation& tess, int index,
                                         const Generator& g);

// In-place single-generator update; equivalent to a full rebuild on the
// modified pattern. The report lists cells that actually changed.
ChangeReport update_generator(PeriodicTessellation& tess, int index, const Generator& g);

// Commit cells previously obtained from preview_update(tess, index, g).
void apply_preview(PeriodicTessellation& tess, int index, const Generator& g,
                   std::vector<LaguerreCell>&& cells);

// Signed power distance ||y - x||_W^2 - r^2 under the torus metric.
double power_distance(const Vec3& y, const Generator& g, const Window& window);

CellCharacteristics cell_characteristics(const PeriodicTessellation& tess, int index);
std::vector<CellCharacteristics> all_cell_characteristics(const PeriodicTessellation& tess);

// One entry per geometric face of the periodic tessellation.
std::vector<FaceCharacteristics> face_characteristics(const PeriodicTessellation& tess);

// Cross-section polygons of all cells with the plane z = z0 (for slice plots).
struct SlicePolygon {
    int generator = -1;
    std::vector<Vec3> ring;  // points with z == z0
};
std::vector<SlicePolygon> slice_tessellation(const PeriodicTessellation& tess, double z0);

}  // namespace lagtess
