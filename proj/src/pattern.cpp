#include "lagtess/pattern.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lagtess {

void MarkedPointPattern::validate() const {
    if (generators.empty()) throw std::invalid_argument("pattern has no generators");
    if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const auto& g = generators[i];
        if (!window.contains(g.pos))
            throw std::invalid_argument("generator position outside window");
        if (!(g.radius >= 0.0 && g.radius <= r_max))
            throw std::invalid_argument("radius outside [0, r_max]");
    }
    const double tol2 = 1e-24;
    for (std::size_t i = 0; i < generators.size(); ++i)
        for (std::size_t j = i + 1; j < generators.size(); ++j)
            if (window.dist2(generators[i].pos, generators[j].pos) < tol2)
                throw std::invalid_argument("coincident generator positions");
}

double MarkedPointPattern::maxRadius() const {
    double m = 0.0;
    for (const auto& g : generators) m = std::max(m, g.radius);
    return m;
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw std::runtime_error(path + ": expected header '" + expected_header + "', got '" +
                                 line + "'");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": bad numeric field '" + field + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

MarkedPointPattern load_pattern_csv(const std::string& path, const Window& window,
                                    double r_max) {
    MarkedPointPattern p;
    p.window = window;
    p.r_max = r_max;
    for (const auto& row : read_numeric_csv(path, "x,y,z,r")) {
        if (row.size() != 4) throw std::runtime_error(path + ": expected 4 columns");
        p.generators.push_back({{row[0], row[1], row[2]}, row[3]});
    }
    p.validate();
    return p;
}

void save_pattern_csv(const std::string& path, const MarkedPointPattern& pattern) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "x,y,z,r\n");
    for (const auto& g : pattern.generators)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", g.pos.x, g.pos.y, g.pos.z, g.radius);
    std::fclose(f);
}

std::vector<Vec3> load_points_csv(const std::string& path, const Window& window) {
    std::vector<Vec3> pts;
    for (const auto& row : read_numeric_csv(path, "x,y,z")) {
        if (row.size() != 3) throw std::runtime_error(path + ": expected 3 columns");
        Vec3 p{row[0], row[1], row[2]};
        if (!window.contains(p)) throw std::runtime_error(path + ": point outside window");
        pts.push_back(p);
    }
    return pts;
}

void save_points_csv(const std::string& path, const std::vector<Vec3>& points) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f, "x,y,z\n");
    for (const auto& p : points) std::fprintf(f, "%.17g,%.17g,%.17g\n", p.x, p.y, p.z);
    std::fclose(f);
}

}  // namespace lagtess
