#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fem.hpp"
#include "potential.hpp"

namespace qtensor {

enum class SchemeId { UES1D, OD2C, OD1D };

inline std::string to_string(SchemeId s) {
    switch (s) {
        case SchemeId::UES1D: return "ues1d";
        case SchemeId::OD2C: return "od2c";
        default: return "od1d";
    }
}

inline SchemeId parse_scheme(const std::string& s) {
    if (s == "ues1d" || s == "UES1D") return SchemeId::UES1D;
    if (s == "od2c" || s == "OD2C") return SchemeId::OD2C;
    if (s == "od1d" || s == "OD1D") return SchemeId::OD1D;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct BoundaryCondition {
    enum class Kind { Neumann, DirichletUniform, DirichletRadial, DirichletCustom };
    Kind kind = Kind::Neumann;
    TensorField custom;  // nodal values, used for DirichletCustom

    bool dirichlet() const { return kind != Kind::Neumann; }
};

inline std::string to_string(BoundaryCondition::Kind k) {
    switch (k) {
        case BoundaryCondition::Kind::Neumann: return "neumann";
        case BoundaryCondition::Kind::DirichletUniform: return "dirichlet-uniform";
        case BoundaryCondition::Kind::DirichletRadial: return "dirichlet-radial";
        default: return "dirichlet-custom";
    }
}

inline BoundaryCondition::Kind parse_bc(const std::string& s) {
    if (s == "neumann") return BoundaryCondition::Kind::Neumann;
    if (s == "dirichlet-uniform") return BoundaryCondition::Kind::DirichletUniform;
    if (s == "dirichlet-radial") return BoundaryCondition::Kind::DirichletRadial;
    if (s == "dirichlet-custom") return BoundaryCondition::Kind::DirichletCustom;
    throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

// Boundary value at node i. Uniform: director (0,1,0). Radial: d = ((x-2)/2, (y-2)/2, 0)
// without normalisation.
inline QTensor dirichlet_value(const BoundaryCondition& bc, const Mesh& m, std::size_t i) {
    switch (bc.kind) {
        case BoundaryCondition::Kind::DirichletUniform: return uniaxial(1.0, {0, 1, 0});
        case BoundaryCondition::Kind::DirichletRadial: {
            double dx = (m.nodes[i][0] - 2.0) / 2.0, dy = (m.nodes[i][1] - 2.0) / 2.0;
            double d2 = dx * dx + dy * dy;
            return make_traceless(dx * dx - d2 / 3.0, dx * dy, 0.0, dy * dy - d2 / 3.0, 0.0);
        }
        case BoundaryCondition::Kind::DirichletCustom:
            if (bc.custom.size() != m.num_nodes()) throw std::invalid_argument("dirichlet: custom field size mismatch");
            return bc.custom[i];
        default: throw std::logic_error("dirichlet_value: Neumann has no boundary value");
    }
}

inline TensorField apply_dirichlet(const TensorField& field, const BoundaryCondition& bc, const Mesh& m) {
    TensorField out = field;
    if (!bc.dirichlet()) return out;
    for (int i : m.boundary) out[i] = dirichlet_value(bc, m, i);
    return out;
}

struct SchemeConfig {
    SchemeId scheme = SchemeId::OD2C;
    double dt = 1e-4;
    BoundaryCondition bc;
    PotentialParams params;
    double tol = 1e-10;
    int max_iter = 10000;
};

struct StepReport {
    std::vector<std::string> solves;  // component label per solve, in solve order
    std::vector<int> iterations;
    std::vector<double> residuals;
    double wall_seconds = 0;
    double trace_residual = 0;
    bool solvability_warning = false;
    double solvability_dt = 0;  // sufficient step-size bound for OD2C/OD1D, 0 otherwise
};

inline const char* component_label(int r) {
    static const char* names[5] = {"11", "12", "13", "22", "23"};
    return names[r];
}

// Nonlinear part of the scheme at one point, as a full 3x3 tensor:
// psi^dt(Q^{n+1}, Q^n) + p^dt(Q^{n+1}, Q^n) with D = Q^{n+1} - Q^n.
inline QTensor scheme_nonlinearity(SchemeId s, const QTensor& qn, const QTensor& d, const PotentialParams& p) {
    QTensor half = qn + 0.5 * d;
    QTensor g2 = (p.A + p.C * p.alpha * p.alpha) * half;
    if (s == SchemeId::UES1D) {
        return psi1_hat_grad(qn, p) + psi3_hat_grad(qn, p) + trace_penalty_truncated(qn, p) + g2 +
               (0.5 * (p.S1 + p.S3)) * d;
    }
    auto parts = psi_parts_grad(qn, p);
    Tensor4 h = psi1_hessian(qn, p) + psi3_hessian(qn, p) + trace_penalty_grad(qn, p);
    if (s == SchemeId::OD1D) h = lower_triangular(h);
    Mat3 hd = apply4(h, d);
    Mat3 g = (parts.g1 + parts.g3 + trace_penalty(qn, p) + g2).matrix();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g[i][j] += 0.5 * hd[i][j];
    // L:D need not be symmetric; the stored tensor keeps the upper triangle rows
    // solved by the scheme.
    return QTensor::symmetric(g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]);
}

class Stepper {
public:
    Stepper(const Mesh& m, SchemeConfig cfg) : space_(m), cfg_(std::move(cfg)) {
        if (!(cfg_.dt > 0)) throw std::invalid_argument("SchemeConfig: dt must be positive");
        cfg_.params.validate();
        mass_ = assemble_mass(space_);
        stiff_ = assemble_stiffness(space_);
        is_boundary_.assign(m.num_nodes(), 0);
        if (cfg_.bc.dirichlet())
            for (int i : m.boundary) is_boundary_[i] = 1;
        if (cfg_.scheme == SchemeId::UES1D) {
            const auto& p = cfg_.params;
            double a = 1.0 / (p.gamma * cfg_.dt) + (p.S1 + p.S3 + p.A + p.C * p.alpha * p.alpha) / (2.0 * p.epsilon);
            ues_op_.mat = a * mass_.mat + 0.5 * stiff_.mat;
            ues_op_.symmetric = ues_op_.spd = true;
            impose_rows(ues_op_.mat, 1);
        }
    }

    const SchemeConfig& config() const { return cfg_; }
    const P1Space& space() const { return space_; }
    const Mesh& mesh() const { return space_.mesh(); }
    const SparseOperator& mass() const { return mass_; }
    const SparseOperator& stiffness() const { return stiff_; }

    std::pair<TensorField, StepReport> step(const TensorField& q) const {
        switch (cfg_.scheme) {
            case SchemeId::UES1D: return step_ues1d(q);
            case SchemeId::OD2C: return step_od2c(q);
            default: return step_od1d(q);
        }
    }

    std::pair<TensorField, StepReport> step_ues1d(const TensorField& q) const {
        auto t0 = std::chrono::steady_clock::now();
        check_input(q);
        StepReport rep;
        const auto& p = cfg_.params;
        auto rhs = explicit_rhs(q, [&](const QTensor& qn) {
            return psi1_hat_grad(qn, p) + psi3_hat_grad(qn, p) + trace_penalty_truncated(qn, p);
        });
        std::array<Eigen::VectorXd, 5> d;
        for (int r = 0; r < 5; ++r) {
            zero_boundary(rhs[r], 1);
            auto res = solve(ues_op_, rhs[r], cfg_.tol, cfg_.max_iter);
            record(rep, component_label(r), res);
            d[r] = std::move(res.x);
        }
        return finish(q, d, rep, t0);
    }

    std::pair<TensorField, StepReport> step_od2c(const TensorField& q) const {
        auto t0 = std::chrono::steady_clock::now();
        check_input(q);
        StepReport rep;
        const auto& p = cfg_.params;
        const Mesh& m = mesh();
        const std::size_t n = m.num_nodes();
        const int nl = space_.nloc();
        const auto& rule = space_.rule();
        auto rhs = explicit_rhs(q, [&](const QTensor& qn) {
            auto g = psi_parts_grad(qn, p);
            return g.g1 + g.g3 + trace_penalty(qn, p);
        });

        SparseOperator op{space_.coupled_pattern(), false, false};
        double* v = op.mat.valuePtr();
        const double a0 = diag_coeff();
        const double half_eps = 0.5 / p.epsilon;
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            std::array<Coupling5, 4> cq;
            for (int k = 0; k < rule.n; ++k) cq[k] = reduce_coupling(coefficient(qp_value(q, e, k)));
            const double vol = m.volumes[e];
            for (int a = 0; a < nl; ++a)
                for (int b = 0; b < nl; ++b) {
                    double base = a0 * element_mass(m, e, a, b) + 0.5 * element_stiffness(space_, e, a, b);
                    Coupling5 c{};
                    for (int k = 0; k < rule.n; ++k) {
                        double w = half_eps * rule.weight[k] * vol * rule.bary[k][a] * rule.bary[k][b];
                        for (int r = 0; r < 5; ++r)
                            for (int s = 0; s < 5; ++s) c[r][s] += w * cq[k][r][s];
                    }
                    for (int r = 0; r < 5; ++r) {
                        c[r][r] += base;
                        for (int s = 0; s < 5; ++s) v[space_.coupled_offset(e, a, b, r, s)] += c[r][s];
                    }
                }
        }
        impose_rows(op.mat, kComponents);

        Eigen::VectorXd b(kComponents * n);
        for (std::size_t i = 0; i < n; ++i)
            for (int r = 0; r < 5; ++r) b[kComponents * i + r] = rhs[r][i];
        zero_boundary(b, kComponents);
        auto res = solve(op, b, cfg_.tol, cfg_.max_iter);
        record(rep, "coupled", res);
        std::array<Eigen::VectorXd, 5> d;
        for (int r = 0; r < 5; ++r) {
            d[r].resize(n);
            for (std::size_t i = 0; i < n; ++i) d[r][i] = res.x[kComponents * i + r];
        }
        solvability(q, rep);
        return finish(q, d, rep, t0);
    }

    std::pair<TensorField, StepReport> step_od1d(const TensorField& q) const {
        auto t0 = std::chrono::steady_clock::now();
        check_input(q);
        StepReport rep;
        const auto& p = cfg_.params;
        const Mesh& m = mesh();
        const std::size_t n = m.num_nodes();
        const int nl = space_.nloc();
        const auto& rule = space_.rule();
        auto rhs = explicit_rhs(q, [&](const QTensor& qn) {
            auto g = psi_parts_grad(qn, p);
            return g.g1 + g.g3 + trace_penalty(qn, p);
        });

        std::vector<std::array<Coupling5, 4>> cq(m.num_elements());
        for (std::size_t e = 0; e < m.num_elements(); ++e)
            for (int k = 0; k < rule.n; ++k) cq[e][k] = reduce_coupling(lower_triangular(coefficient(qp_value(q, e, k))));

        const double a0 = diag_coeff();
        const double half_eps = 0.5 / p.epsilon;
        std::array<Eigen::VectorXd, 5> d;
        for (int r = 0; r < 5; ++r) {
            SparseOperator op{space_.scalar_pattern(), true, true};
            double* v = op.mat.valuePtr();
            Eigen::VectorXd b = rhs[r];
            for (std::size_t e = 0; e < m.num_elements(); ++e) {
                const auto& el = m.elements[e];
                const double vol = m.volumes[e];
                std::array<double, 4> known{};  // sum over solved components at each qp
                for (int k = 0; k < rule.n; ++k)
                    for (int s = 0; s < r; ++s) {
                        double ds = 0;
                        for (int a = 0; a < nl; ++a) ds += rule.bary[k][a] * d[s][el[a]];
                        known[k] += cq[e][k][r][s] * ds;
                    }
                for (int a = 0; a < nl; ++a) {
                    for (int k = 0; k < rule.n; ++k)
                        b[el[a]] -= half_eps * rule.weight[k] * vol * rule.bary[k][a] * known[k];
                    for (int bb = 0; bb < nl; ++bb) {
                        double c = a0 * element_mass(m, e, a, bb) + 0.5 * element_stiffness(space_, e, a, bb);
                        for (int k = 0; k < rule.n; ++k)
                            c += half_eps * rule.weight[k] * vol * rule.bary[k][a] * rule.bary[k][bb] * cq[e][k][r][r];
                        v[space_.scalar_offset(e, a, bb)] += c;
                    }
                }
            }
            impose_rows(op.mat, 1);
            zero_boundary(b, 1);
            auto res = solve(op, b, cfg_.tol, cfg_.max_iter);
            record(rep, component_label(r), res);
            d[r] = std::move(res.x);
        }
        solvability(q, rep);
        return finish(q, d, rep, t0);
    }

    // Value of a nodal field at a quadrature point.
    QTensor qp_value(const TensorField& q, std::size_t e, int k) const {
        const auto& el = mesh().elements[e];
        const auto& rule = space_.rule();
        QTensor v = rule.bary[k][0] * q[el[0]];
        for (int a = 1; a < space_.nloc(); ++a) v = v + rule.bary[k][a] * q[el[a]];
        return v;
    }

private:
    Tensor4 coefficient(const QTensor& qn) const {
        const auto& p = cfg_.params;
        return psi1_hessian(qn, p) + psi3_hessian(qn, p) + trace_penalty_grad(qn, p);
    }

    double diag_coeff() const {
        const auto& p = cfg_.params;
        return 1.0 / (p.gamma * cfg_.dt) + (p.A + p.C * p.alpha * p.alpha) / (2.0 * p.epsilon);
    }

    void check_input(const TensorField& q) const {
        if (q.size() != mesh().num_nodes()) throw std::invalid_argument("step: field size does not match mesh");
        for (const auto& v : q.values)
            if (std::abs(v.trace()) > 1e-10 * (1.0 + frobenius(v)))
                throw std::invalid_argument("step: input field is not traceless");
    }

    // Right-hand side of the increment equations, per component:
    // -K Q^n - (1/eps) [ (A + C alpha^2) M Q^n + (F(Q^n), phi) ].
    template <class Explicit>
    std::array<Eigen::VectorXd, 5> explicit_rhs(const TensorField& q, Explicit&& f) const {
        const auto& p = cfg_.params;
        const Mesh& m = mesh();
        const std::size_t n = m.num_nodes();
        const auto& rule = space_.rule();
        const int nl = space_.nloc();
        std::array<Eigen::VectorXd, 5> rhs;
        const double c2 = (p.A + p.C * p.alpha * p.alpha) / p.epsilon;
        for (int r = 0; r < 5; ++r) {
            Eigen::VectorXd u(n);
            for (std::size_t i = 0; i < n; ++i) u[i] = component(q[i], r);
            rhs[r] = -(stiff_.mat * u) - c2 * (mass_.mat * u);
        }
        for (std::size_t e = 0; e < m.num_elements(); ++e) {
            const auto& el = m.elements[e];
            const double vol = m.volumes[e];
            for (int k = 0; k < rule.n; ++k) {
                QTensor fq = f(qp_value(q, e, k));
                double w = rule.weight[k] * vol / p.epsilon;
                for (int a = 0; a < nl; ++a) {
                    double wa = w * rule.bary[k][a];
                    for (int r = 0; r < 5; ++r) rhs[r][el[a]] -= wa * component(fq, r);
                }
            }
        }
        return rhs;
    }

    // Identity rows and zeroed columns for Dirichlet nodes (block size 1 or 5).
    void impose_rows(SparseMatrix& a, int block) const {
        if (!cfg_.bc.dirichlet()) return;
        for (Eigen::Index row = 0; row < a.outerSize(); ++row) {
            bool brow = is_boundary_[row / block];
            for (SparseMatrix::InnerIterator it(a, row); it; ++it) {
                if (brow)
                    it.valueRef() = it.col() == row ? 1.0 : 0.0;
                else if (is_boundary_[it.col() / block])
                    it.valueRef() = 0.0;
            }
        }
    }

    void zero_boundary(Eigen::VectorXd& b, int block) const {
        if (!cfg_.bc.dirichlet()) return;
        for (Eigen::Index i = 0; i < b.size(); ++i)
            if (is_boundary_[i / block]) b[i] = 0.0;
    }

    static void record(StepReport& rep, const std::string& label, const SolveResult& res) {
        rep.solves.push_back(label);
        rep.iterations.push_back(res.iterations);
        rep.residuals.push_back(res.residual);
    }

    void solvability(const TensorField& q, StepReport& rep) const {
        const auto& p = cfg_.params;
        double n1 = 0, n3 = 0, np = 0;
        for (const auto& v : q.values) {
            n1 = std::max(n1, frobenius4(psi1_hessian(v, p)));
            n3 = std::max(n3, frobenius4(psi3_hessian(v, p)));
            np = std::max(np, frobenius4(trace_penalty_grad(v, p)));
        }
        double denom = p.gamma * (n1 + n3 + np);
        rep.solvability_dt = denom > 0 ? 2.0 * p.epsilon / denom : INFINITY;
        rep.solvability_warning = cfg_.dt > rep.solvability_dt;
    }

    std::pair<TensorField, StepReport> finish(const TensorField& q, const std::array<Eigen::VectorXd, 5>& d,
                                              StepReport& rep, std::chrono::steady_clock::time_point t0) const {
        TensorField out(q.size(), true);
        double tr = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const auto& a = q[i];
            out[i] = make_traceless(a.q11 + d[0][i], a.q12 + d[1][i], a.q13 + d[2][i], a.q22 + d[3][i], a.q23 + d[4][i]);
            tr = std::max(tr, std::abs(out[i].trace()));
        }
        rep.trace_residual = tr;
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return {std::move(out), std::move(rep)};
    }

    P1Space space_;
    SchemeConfig cfg_;
    SparseOperator mass_, stiff_, ues_op_;
    std::vector<char> is_boundary_;
};

inline std::pair<TensorField, StepReport> step_ues1d(const Stepper& s, const TensorField& q) { return s.step_ues1d(q); }
inline std::pair<TensorField, StepReport> step_od2c(const Stepper& s, const TensorField& q) { return s.step_od2c(q); }
inline std::pair<TensorField, StepReport> step_od1d(const Stepper& s, const TensorField& q) { return s.step_od1d(q); }

}  // namespace qtensor
