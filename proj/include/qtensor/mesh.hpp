#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qtensor {

struct Mesh {
    int dim = 2;
    std::array<double, 3> extent{0, 0, 0};
    std::array<int, 3> cells{0, 0, 0};
    std::vector<std::array<double, 3>> nodes;  // z = 0 in 2D
    std::vector<std::array<int, 4>> elements;  // last slot unused in 2D
    std::vector<int> boundary;                 // sorted node indices
    std::vector<double> volumes;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_elements() const { return elements.size(); }
    int nodes_per_element() const { return dim + 1; }
    double domain_measure() const { return dim == 2 ? extent[0] * extent[1] : extent[0] * extent[1] * extent[2]; }
};

namespace detail {

inline double signed_measure(const Mesh& m, const std::array<int, 4>& e) {
    const auto& a = m.nodes[e[0]];
    const auto& b = m.nodes[e[1]];
    const auto& c = m.nodes[e[2]];
    if (m.dim == 2) return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    const auto& d = m.nodes[e[3]];
    double u[3], v[3], w[3];
    for (int k = 0; k < 3; ++k) {
        u[k] = b[k] - a[k];
        v[k] = c[k] - a[k];
        w[k] = d[k] - a[k];
    }
    return (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) + u[2] * (v[0] * w[1] - v[1] * w[0])) / 6.0;
}

inline void finalize(Mesh& m) {
    m.volumes.resize(m.elements.size());
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        double v = signed_measure(m, m.elements[e]);
        if (v < 0) {
            std::swap(m.elements[e][1], m.elements[e][2]);
            v = -v;
        }
        m.volumes[e] = v;
    }
    const double tol = 1e-12;
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        bool on = false;
        for (int k = 0; k < m.dim; ++k) {
            double x = m.nodes[i][k];
            if (std::abs(x) <= tol * m.extent[k] || std::abs(x - m.extent[k]) <= tol * m.extent[k]) on = true;
        }
        if (on) m.boundary.push_back(static_cast<int>(i));
    }
}

}  // namespace detail

inline Mesh rect_mesh(double lx, double ly, int nx, int ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("rect_mesh: cell counts must be >= 1");
    if (!(lx > 0) || !(ly > 0)) throw std::invalid_argument("rect_mesh: extents must be positive");
    Mesh m;
    m.dim = 2;
    m.extent = {lx, ly, 0};
    m.cells = {nx, ny, 0};
    m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.push_back({i == nx ? lx : lx * i / nx, j == ny ? ly : ly * j / ny, 0.0});
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    m.elements.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
            m.elements.push_back({n00, n10, n11, -1});
            m.elements.push_back({n00, n11, n01, -1});
        }
    detail::finalize(m);
    return m;
}

inline Mesh box_mesh(double lx, double ly, double lz, int nx, int ny, int nz) {
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("box_mesh: cell counts must be >= 1");
    if (!(lx > 0) || !(ly > 0) || !(lz > 0)) throw std::invalid_argument("box_mesh: extents must be positive");
    Mesh m;
    m.dim = 3;
    m.extent = {lx, ly, lz};
    m.cells = {nx, ny, nz};
    m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                m.nodes.push_back({i == nx ? lx : lx * i / nx, j == ny ? ly : ly * j / ny, k == nz ? lz : lz * k / nz});
    auto id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    // Kuhn split: each tet follows a monotone path from corner 0 to corner 7.
    static constexpr int paths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    m.elements.reserve(6 * static_cast<std::size_t>(nx) * ny * nz);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (const auto& path : paths) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> tet{};
                    tet[0] = id(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[path[s]];
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    m.elements.push_back(tet);
                }
    detail::finalize(m);
    return m;
}

inline const std::vector<int>& boundary_nodes(const Mesh& m) { return m.boundary; }

}  // namespace qtensor
