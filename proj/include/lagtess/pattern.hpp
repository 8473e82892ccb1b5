#pragma once

#include <string>
#include <vector>

#include "lagtess/geometry.hpp"

namespace lagtess {

struct Generator {
    Vec3 pos;
    double radius = 0.0;
};

// Finite marked point pattern (x_n, r_n): generator positions inside the
// window with radii in [0, r_max]. Positions use the half-open convention
// [0,a) x [0,b) x [0,c).
struct MarkedPointPattern {
    Window window;
    std::vector<Generator> generators;
    double r_max = 6.0;

    std::size_t size() const { return generators.size(); }

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;

    double maxRadius() const;
};

// CSV with header x,y,z,r (micrometers), one generator per line.
MarkedPointPattern load_pattern_csv(const std::string& path, const Window& window,
                                    double r_max = 6.0);
void save_pattern_csv(const std::string& path, const MarkedPointPattern& pattern);

// Points-only CSV with header x,y,z.
std::vector<Vec3> load_points_csv(const std::string& path, const Window& window);
void save_points_csv(const std::string& path, const std::vector<Vec3>& points);

}  // namespace lagtess
