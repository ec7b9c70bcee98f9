#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mesh.hpp"
#include "tensor_core.hpp"

namespace qtensor {

using ScalarField = std::vector<double>;

struct TensorField {
    std::vector<QTensor> values;
    bool traceless = true;

    TensorField() = default;
    explicit TensorField(std::size_t n, bool tl = true) : values(n, QTensor{0, 0, 0, 0, 0, 0, tl}), traceless(tl) {}

    std::size_t size() const { return values.size(); }
    QTensor& operator[](std::size_t i) { return values[i]; }
    const QTensor& operator[](std::size_t i) const { return values[i]; }
};

// The five unknowns per node are (11, 12, 13, 22, 23); q33 = -(q11 + q22).
inline constexpr int kComponents = 5;
inline constexpr std::array<std::array<int, 2>, 5> kComponentIndex{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}}};

inline double component(const QTensor& q, int r) {
    switch (r) {
        case 0: return q.q11;
        case 1: return q.q12;
        case 2: return q.q13;
        case 3: return q.q22;
        default: return q.q23;
    }
}

inline ScalarField component_field(const TensorField& f, int r) {
    ScalarField u(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) u[i] = component(f[i], r);
    return u;
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct SparseOperator {
    SparseMatrix mat;
    bool symmetric = false;
    bool spd = false;

    Eigen::Index rows() const { return mat.rows(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat * x; }
};

class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

struct SolveResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual = 0;
};

inline SolveResult solve(const SparseOperator& op, const Eigen::VectorXd& b, double tol = 1e-10, int max_iter = 10000,
                         const Eigen::VectorXd* guess = nullptr) {
    if (op.mat.rows() != op.mat.cols() || op.mat.rows() != b.size())
        throw std::invalid_argument("solve: dimension mismatch");
    SolveResult res;
    double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x = Eigen::VectorXd::Zero(b.size());
        return res;
    }
    auto finish = [&](auto& solver) {
        solver.setTolerance(tol);
        solver.setMaxIterations(max_iter);
        solver.compute(op.mat);
        if (guess)
            res.x = solver.solveWithGuess(b, *guess);
        else
            res.x = solver.solve(b);
        res.iterations = static_cast<int>(solver.iterations());
        res.residual = (op.mat * res.x - b).norm() / bnorm;
    };
    if (op.spd) {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        finish(cg);
    } else {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> bicg;
        finish(bicg);
    }
    // Krylov recurrences can report convergence slightly ahead of the true residual.
    if (!(res.residual <= tol) && res.residual <= 10.0 * tol) {
        Eigen::VectorXd x0 = res.x;
        int it = res.iterations;
        guess = &x0;
        if (op.spd) {
            Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
            finish(cg);
        } else {
            Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> bicg;
            finish(bicg);
        }
        res.iterations += it;
    }
    if (!(res.residual <= tol) || !res.x.allFinite())
        throw SolverFailure("solve: no convergence, relative residual " + std::to_string(res.residual), res.residual,
                            res.iterations);
    return res;
}

struct QuadRule {
    int n = 0;
    std::array<std::array<double, 4>, 4> bary{};
    std::array<double, 4> weight{};  // fractions of the element measure
};

inline QuadRule quad_rule(int dim) {
    QuadRule q;
    if (dim == 2) {
        q.n = 3;
        const double a = 2.0 / 3.0, b = 1.0 / 6.0;
        q.bary = {{{a, b, b, 0}, {b, a, b, 0}, {b, b, a, 0}, {0, 0, 0, 0}}};
        q.weight = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0};
    } else {
        q.n = 4;
        const double a = 0.5854101966249685, b = 0.1381966011250105;
        q.bary = {{{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}}};
        q.weight = {0.25, 0.25, 0.25, 0.25};
    }
    return q;
}

// Precomputed P1 geometry, quadrature and sparsity layout of a mesh.
// The mesh must outlive the space.
class P1Space {
public:
    explicit P1Space(const Mesh& m) : mesh_(&m), nloc_(m.dim + 1), rule_(quad_rule(m.dim)) {
        build_gradients();
        build_pattern();
    }

    const Mesh& mesh() const { return *mesh_; }
    int nloc() const { return nloc_; }
    std::size_t num_nodes() const { return mesh_->num_nodes(); }
    const QuadRule& rule() const { return rule_; }
    const Vec3& grad(std::size_t e, int a) const { return grads_[e][a]; }

    // Scalar operator with the shared pattern and zero values.
    SparseMatrix scalar_pattern() const { return scalar_; }
    SparseMatrix coupled_pattern() const { return coupled_; }

    // Offset into valuePtr() of the scalar entry (row of local a, column of local b).
    int scalar_offset(std::size_t e, int a, int b) const { return offsets_[(e * nloc_ + a) * nloc_ + b]; }
    // Offset of the coupled entry (component r of local a, component c of local b).
    int coupled_offset(std::size_t e, int a, int b, int r, int c) const {
        int i = mesh_->elements[e][a];
        int pos = offsets_[(e * nloc_ + a) * nloc_ + b] - row_start_[i];
        int deg = row_start_[i + 1] - row_start_[i];
        return kComponents * kComponents * row_start_[i] + r * kComponents * deg + kComponents * pos + c;
    }

    // Interpolated value of a nodal field at quadrature point q of element e.
    template <class Get>
    auto at_qp(std::size_t e, int q, Get&& get) const {
        const auto& el = mesh_->elements[e];
        auto v = rule_.bary[q][0] * get(el[0]);
        for (int a = 1; a < nloc_; ++a) v = v + rule_.bary[q][a] * get(el[a]);
        return v;
    }

private:
    void build_gradients() {
        const Mesh& m = *mesh_;
        grads_.resize(m.num_elements());
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            const auto& el = m.elements[e];
            const auto& x0 = m.nodes[el[0]];
            auto& g = grads_[e];
            g = {};
            if (m.dim == 2) {
                double j00 = m.nodes[el[1]][0] - x0[0], j01 = m.nodes[el[2]][0] - x0[0];
                double j10 = m.nodes[el[1]][1] - x0[1], j11 = m.nodes[el[2]][1] - x0[1];
                double det = j00 * j11 - j01 * j10;
                // rows of the inverse Jacobian
                g[1] = {j11 / det, -j01 / det, 0};
                g[2] = {-j10 / det, j00 / det, 0};
            } else {
                double J[3][3];
                for (int a = 0; a < 3; ++a)
                    for (int k = 0; k < 3; ++k) J[k][a] = m.nodes[el[a + 1]][k] - x0[k];
                double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                             J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                             J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
                double inv[3][3];
                inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
                inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
                inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
                inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
                inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
                inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
                inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
                inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
                inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
                for (int a = 0; a < 3; ++a) g[a + 1] = {inv[a][0], inv[a][1], inv[a][2]};
            }
            for (int k = 0; k < 3; ++k) g[0][k] = -(g[1][k] + g[2][k] + (m.dim == 3 ? g[3][k] : 0.0));
        }
    }

    void build_pattern() {
        const Mesh& m = *mesh_;
        const int n = static_cast<int>(m.num_nodes());
        std::vector<std::vector<int>> adj(n);
        for (const auto& el : m.elements)
            for (int a = 0; a < nloc_; ++a)
                for (int b = 0; b < nloc_; ++b) adj[el[a]].push_back(el[b]);
        row_start_.assign(n + 1, 0);
        for (int i = 0; i < n; ++i) {
            auto& v = adj[i];
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            row_start_[i + 1] = row_start_[i] + static_cast<int>(v.size());
        }
        const int nnz = row_start_[n];

        scalar_.resize(n, n);
        scalar_.resizeNonZeros(nnz);
        for (int i = 0; i <= n; ++i) scalar_.outerIndexPtr()[i] = row_start_[i];
        for (int i = 0; i < n; ++i)
            std::copy(adj[i].begin(), adj[i].end(), scalar_.innerIndexPtr() + row_start_[i]);
        std::fill(scalar_.valuePtr(), scalar_.valuePtr() + nnz, 0.0);

        const int K = kComponents;
        coupled_.resize(K * n, K * n);
        coupled_.resizeNonZeros(K * K * nnz);
        int* outer = coupled_.outerIndexPtr();
        int* inner = coupled_.innerIndexPtr();
        outer[0] = 0;
        for (int i = 0; i < n; ++i) {
            int deg = row_start_[i + 1] - row_start_[i];
            for (int r = 0; r < K; ++r) {
                int start = K * K * row_start_[i] + r * K * deg;
                outer[K * i + r] = start;
                for (int p = 0; p < deg; ++p)
                    for (int c = 0; c < K; ++c) inner[start + K * p + c] = K * adj[i][p] + c;
            }
        }
        outer[K * n] = K * K * nnz;
        std::fill(coupled_.valuePtr(), coupled_.valuePtr() + K * K * nnz, 0.0);

        offsets_.resize(m.num_elements() * nloc_ * nloc_);
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            const auto& el = m.elements[e];
            for (int a = 0; a < nloc_; ++a) {
                const auto& row = adj[el[a]];
                for (int b = 0; b < nloc_; ++b) {
                    auto it = std::lower_bound(row.begin(), row.end(), el[b]);
                    offsets_[(e * nloc_ + a) * nloc_ + b] = row_start_[el[a]] + static_cast<int>(it - row.begin());
                }
            }
        }
    }

    const Mesh* mesh_;
    int nloc_;
    QuadRule rule_;
    std::vector<std::array<Vec3, 4>> grads_;
    std::vector<int> row_start_;
    std::vector<int> offsets_;
    SparseMatrix scalar_;
    SparseMatrix coupled_;
};

// Exact P1 element mass entry: V/(d+1)/(d+2) * (1 + delta_ab) in both 2D and 3D.
inline double element_mass(const Mesh& m, std::size_t e, int a, int b) {
    double d = m.dim;
    return m.volumes[e] * (a == b ? 2.0 : 1.0) / ((d + 1.0) * (d + 2.0));
}

inline double element_stiffness(const P1Space& s, std::size_t e, int a, int b) {
    const auto& ga = s.grad(e, a);
    const auto& gb = s.grad(e, b);
    return s.mesh().volumes[e] * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
}

inline SparseOperator assemble_mass(const P1Space& s) {
    SparseOperator op{s.scalar_pattern(), true, true};
    double* v = op.mat.valuePtr();
    const int nl = s.nloc();
    for (std::size_t e = 0; e < s.mesh().num_elements(); ++e)
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) v[s.scalar_offset(e, a, b)] += element_mass(s.mesh(), e, a, b);
    return op;
}

inline SparseOperator assemble_stiffness(const P1Space& s) {
    SparseOperator op{s.scalar_pattern(), true, false};
    double* v = op.mat.valuePtr();
    const int nl = s.nloc();
    for (std::size_t e = 0; e < s.mesh().num_elements(); ++e)
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) v[s.scalar_offset(e, a, b)] += element_stiffness(s, e, a, b);
    return op;
}

inline SparseOperator assemble_mass(const Mesh& m) { return assemble_mass(P1Space(m)); }
inline SparseOperator assemble_stiffness(const Mesh& m) { return assemble_stiffness(P1Space(m)); }

using Coupling5 = std::array<std::array<double, 5>, 5>;

// Reduced coupling of a fourth-order coefficient on the five unknowns:
// c[r][a] = sum_kl X_{r,kl} dQ_kl/du_a, with q33 = -(q11 + q22).
inline Coupling5 reduce_coupling(const Tensor4& x) {
    Coupling5 c{};
    for (int r = 0; r < 5; ++r) {
        int i = kComponentIndex[r][0], j = kComponentIndex[r][1];
        const auto& X = x.a[i][j];
        c[r][0] = X[0][0] - X[2][2];
        c[r][1] = X[0][1] + X[1][0];
        c[r][2] = X[0][2] + X[2][0];
        c[r][3] = X[1][1] - X[2][2];
        c[r][4] = X[1][2] + X[2][1];
    }
    return c;
}

// Per-element coefficient: either a scalar (weighted mass) or a fourth-order
// tensor (5x5 block coupling of the unknown components).
using ElementCoefficient = std::variant<std::vector<double>, std::vector<Tensor4>>;

inline SparseOperator assemble_weighted(const P1Space& s, const ElementCoefficient& coeff) {
    const Mesh& m = s.mesh();
    const int nl = s.nloc();
    if (auto* c = std::get_if<std::vector<double>>(&coeff)) {
        if (c->size() != m.num_elements()) throw std::invalid_argument("assemble_weighted: coefficient size mismatch");
        SparseOperator op{s.scalar_pattern(), true, false};
        double* v = op.mat.valuePtr();
        for (std::size_t e = 0; e < m.num_elements(); ++e)
            for (int a = 0; a < nl; ++a)
                for (int b = 0; b < nl; ++b) v[s.scalar_offset(e, a, b)] += (*c)[e] * element_mass(m, e, a, b);
        op.spd = std::all_of(c->begin(), c->end(), [](double x) { return x > 0; });
        return op;
    }
    const auto& t = std::get<std::vector<Tensor4>>(coeff);
    if (t.size() != m.num_elements()) throw std::invalid_argument("assemble_weighted: coefficient size mismatch");
    SparseOperator op{s.coupled_pattern(), false, false};
    double* v = op.mat.valuePtr();
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        Coupling5 cr = reduce_coupling(t[e]);
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) {
                double mab = element_mass(m, e, a, b);
                for (int r = 0; r < 5; ++r)
                    for (int c = 0; c < 5; ++c) v[s.coupled_offset(e, a, b, r, c)] += cr[r][c] * mab;
            }
    }
    return op;
}

inline SparseOperator assemble_weighted(const Mesh& m, const ElementCoefficient& coeff) {
    return assemble_weighted(P1Space(m), coeff);
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(const ScalarField& u) {
    return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}

inline double integrate(const SparseOperator& mass, const ScalarField& u) { return (mass.mat * as_vector(u)).sum(); }

inline double l2_norm(const SparseOperator& mass, const ScalarField& u) {
    auto x = as_vector(u);
    return std::sqrt(std::max(0.0, x.dot(mass.mat * x)));
}

inline double h1_norm(const SparseOperator& mass, const SparseOperator& stiff, const ScalarField& u) {
    auto x = as_vector(u);
    return std::sqrt(std::max(0.0, x.dot(mass.mat * x) + x.dot(stiff.mat * x)));
}

namespace detail {
// Frobenius-weighted sum over the six stored components of a symmetric field.
template <class Form>
double tensor_form(const TensorField& f, Form&& form) {
    static constexpr double w[6] = {1, 2, 2, 1, 2, 1};
    double s = 0;
    ScalarField u(f.size());
    for (int c = 0; c < 6; ++c) {
        for (std::size_t i = 0; i < f.size(); ++i) u[i] = f[i].data()[c];
        s += w[c] * form(u);
    }
    return s;
}
}  // namespace detail

inline double l2_norm(const SparseOperator& mass, const TensorField& f) {
    return std::sqrt(detail::tensor_form(f, [&](const ScalarField& u) { return std::pow(l2_norm(mass, u), 2); }));
}

inline double h1_norm(const SparseOperator& mass, const SparseOperator& stiff, const TensorField& f) {
    return std::sqrt(
        detail::tensor_form(f, [&](const ScalarField& u) { return std::pow(h1_norm(mass, stiff, u), 2); }));
}

}  // namespace qtensor
