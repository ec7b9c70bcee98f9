#pragma once

#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>

#include "diagnostics.hpp"
#include "fem.hpp"
#include "mesh.hpp"

namespace qtensor {

// Legacy ASCII VTK with the full tensor, eigenvalue gap and director per node.
inline void write_vtk(const Mesh& m, const TensorField& q, const std::string& path, const std::string& title = "qtensor") {
    if (q.size() != m.num_nodes()) throw std::invalid_argument("write_vtk: field size does not match mesh");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vtk: cannot open '" + path + "'");
    out << std::setprecision(9);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << m.num_nodes() << " double\n";
    for (const auto& x : m.nodes) out << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';

    const int nloc = m.nodes_per_element();
    out << "CELLS " << m.num_elements() << ' ' << m.num_elements() * (nloc + 1) << '\n';
    for (const auto& e : m.elements) {
        out << nloc;
        for (int a = 0; a < nloc; ++a) out << ' ' << e[a];
        out << '\n';
    }
    out << "CELL_TYPES " << m.num_elements() << '\n';
    const int type = m.dim == 2 ? 5 : 10;
    for (std::size_t e = 0; e < m.num_elements(); ++e) out << type << '\n';

    auto df = defect_field(q);
    out << "POINT_DATA " << m.num_nodes() << '\n';
    out << "TENSORS q double\n";
    for (const auto& v : q.values) {
        for (int i = 0; i < 3; ++i) out << v(i, 0) << ' ' << v(i, 1) << ' ' << v(i, 2) << '\n';
    }
    out << "SCALARS lambda_gap double 1\nLOOKUP_TABLE default\n";
    for (double g : df.lambda_gap) out << g << '\n';
    out << "VECTORS director double\n";
    for (const auto& d : df.director) out << d[0] << ' ' << d[1] << ' ' << d[2] << '\n';
    if (!out) throw std::runtime_error("write_vtk: write failed for '" + path + "'");
}

}  // namespace qtensor
