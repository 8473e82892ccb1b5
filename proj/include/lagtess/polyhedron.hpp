#pragma once

#include <array>
#include <vector>

#include "lagtess/geometry.hpp"

namespace lagtess {

// Half-space n . y <= offset with unit normal n.
struct ClipPlane {
    Vec3 normal;
    double offset = 0.0;
};

// Convex polyhedron kept as vertices plus faces with oriented vertex rings
// (counter-clockwise seen from outside). Used for Voro++-style per-cell
// half-space clipping; coordinates are local to the cell generator.
class ConvexPolyhedron {
public:
    struct Face {
        int neighbor = -1;            // generator index behind the face
        std::array<int, 3> shift{};   // periodic image offset of that generator
        std::vector<int> ring;
    };

    // Axis-aligned box [lo, hi]; the six faces are labelled as faces against
    // the generator's own periodic images.
    static ConvexPolyhedron box(const Vec3& lo, const Vec3& hi, int self_index);

    // Clip by the half-space; returns false when nothing remains. Vertices
    // within eps of the plane are treated as lying on it, so a plane tangent
    // to the polyhedron is a no-op.
    bool clip(const ClipPlane& plane, int neighbor, const std::array<int, 3>& shift,
              double eps);

    // Drop unreferenced vertices and faces below the area floor.
    void finalize(double min_face_area);

    double volume() const;
    double maxVertexNorm2() const;  // max |v|^2 over vertices

    static double faceArea(const std::vector<Vec3>& verts, const std::vector<int>& ring);
    static double facePerimeter(const std::vector<Vec3>& verts, const std::vector<int>& ring);

    std::vector<Vec3> verts;
    std::vector<Face> faces;
};

}  // namespace lagtess
