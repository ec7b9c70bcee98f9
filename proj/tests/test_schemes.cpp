#include "catch_amalgamated.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "qtensor/diagnostics.hpp"
#include "qtensor/schemes.hpp"
#include "test_util.hpp"

using namespace qtensor;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SchemeConfig make_cfg(SchemeId s, double dt, double eps = 1e-2) {
    SchemeConfig c;
    c.scheme = s;
    c.dt = dt;
    c.params.epsilon = eps;
    c.tol = 1e-12;
    return c;
}

// Smooth traceless data on [0,1]^2 of moderate size.
TensorField smooth_field(const Mesh& m, double amp = 0.4) {
    const double pi = std::numbers::pi;
    TensorField q(m.num_nodes());
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        double x = m.nodes[i][0], y = m.nodes[i][1];
        q[i] = make_traceless(amp * std::cos(pi * x), amp * std::sin(pi * y) * 0.5, amp * x * y, -amp * std::cos(pi * y) * 0.7,
                              amp * (x - y) * 0.3);
    }
    return q;
}

double max_diff(const TensorField& a, const TensorField& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto x = a[i].data(), y = b[i].data();
        for (int c = 0; c < 6; ++c) d = std::max(d, std::abs(x[c] - y[c]));
    }
    return d;
}

// Dense residual of the full weak form of one step, built directly from the
// tensor-level definitions with the same quadrature. Neumann only.
double weak_form_residual(const Stepper& st, const TensorField& qn, const TensorField& qnew) {
    const auto& cfg = st.config();
    const auto& p = cfg.params;
    const Mesh& m = st.mesh();
    const P1Space& s = st.space();
    const auto& rule = s.rule();
    const int nl = s.nloc();
    const Eigen::Index n = m.num_nodes();
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(5 * n, 5 * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5 * n);
    Eigen::VectorXd d(5 * n), u(5 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int r = 0; r < 5; ++r) {
            d[5 * i + r] = component(qnew[i], r) - component(qn[i], r);
            u[5 * i + r] = component(qn[i], r);
        }
    const double c2 = p.A + p.C * p.alpha * p.alpha;
    double diag = 1.0 / (p.gamma * cfg.dt) + c2 / (2 * p.epsilon);
    if (cfg.scheme == SchemeId::UES1D) diag += (p.S1 + p.S3) / (2 * p.epsilon);
    Eigen::MatrixXd K = Eigen::MatrixXd(st.stiffness().mat), M = Eigen::MatrixXd(st.mass().mat);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (int r = 0; r < 5; ++r) {
                lhs(5 * i + r, 5 * j + r) += diag * M(i, j) + 0.5 * K(i, j);
                rhs[5 * i + r] -= (K(i, j) + c2 / p.epsilon * M(i, j)) * u[5 * j + r];
            }
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto& el = m.elements[e];
        for (int k = 0; k < rule.n; ++k) {
            QTensor q = st.qp_value(qn, e, k);
            QTensor f;
            Tensor4 h;
            if (cfg.scheme == SchemeId::UES1D) {
                f = psi1_hat_grad(q, p) + psi3_hat_grad(q, p) + trace_penalty_truncated(q, p);
            } else {
                f = psi_grad(q, p) - (c2 * q) + trace_penalty(q, p);
                h = psi_hessian(q, p) + (-c2) * Tensor4::identity() + trace_penalty_grad(q, p);
                if (cfg.scheme == SchemeId::OD1D) h = lower_triangular(h);
            }
            double w = rule.weight[k] * m.volumes[e] / p.epsilon;
            for (int a = 0; a < nl; ++a) {
                for (int r = 0; r < 5; ++r) rhs[5 * el[a] + r] -= w * rule.bary[k][a] * component(f, r);
                if (cfg.scheme == SchemeId::UES1D) continue;
                for (int b = 0; b < nl; ++b)
                    for (int c = 0; c < 5; ++c) {
                        // unit increment in component c of node b, mapped to a full traceless tensor
                        double e5[5] = {0, 0, 0, 0, 0};
                        e5[c] = 1;
                        Mat3 hd = apply4(h, make_traceless(e5[0], e5[1], e5[2], e5[3], e5[4]));
                        for (int r = 0; r < 5; ++r)
                            lhs(5 * el[a] + r, 5 * el[b] + c) += 0.5 * w * rule.bary[k][a] * rule.bary[k][b] *
                                                                   hd[kComponentIndex[r][0]][kComponentIndex[r][1]];
                    }
            }
        }
    }
    return (lhs * d - rhs).norm() / rhs.norm();
}

}  // namespace

TEST_CASE("zero field is preserved") {
    Mesh m = rect_mesh(1, 1, 4, 4);
    for (SchemeId s : {SchemeId::UES1D, SchemeId::OD2C, SchemeId::OD1D}) {
        Stepper st(m, make_cfg(s, 1e-3));
        auto [q1, rep] = st.step(TensorField(m.num_nodes()));
        CHECK(max_diff(q1, TensorField(m.num_nodes())) == 0);
    }
}

TEST_CASE("uniform uniaxial critical state is a fixed point") {
    Mesh m = rect_mesh(1, 1, 5, 5);
    PotentialParams p;
    double s = uniaxial_critical_s(p.A, p.B, p.C);
    TensorField q0(m.num_nodes());
    for (auto& v : q0.values) v = uniaxial(s, {0, 0, 1});
    for (SchemeId id : {SchemeId::UES1D, SchemeId::OD2C, SchemeId::OD1D}) {
        Stepper st(m, make_cfg(id, 1e-3));
        TensorField q = q0;
        for (int k = 0; k < 20; ++k) q = st.step(q).first;
        CHECK(max_diff(q, q0) <= 1e-10);
    }
}

TEST_CASE("steps satisfy the discrete weak form") {
    Mesh m = rect_mesh(1, 1, 4, 3);
    TensorField q = smooth_field(m, 0.8);
    for (SchemeId id : {SchemeId::UES1D, SchemeId::OD2C, SchemeId::OD1D}) {
        Stepper st(m, make_cfg(id, 2e-3));
        auto [q1, rep] = st.step(q);
        CHECK(weak_form_residual(st, q, q1) <= 1e-9);
    }
}

TEST_CASE("truncated scheme inside the cutoff band satisfies its weak form") {
    Mesh m = rect_mesh(1, 1, 3, 3);
    TensorField q(m.num_nodes());
    std::mt19937_64 rng(6);
    for (auto& v : q.values) {
        QTensor d = testutil::random_traceless(rng);
        v = (1.195 / frobenius(d)) * d;
    }
    Stepper st(m, make_cfg(SchemeId::UES1D, 1e-3));
    auto [q1, rep] = st.step(q);
    CHECK(weak_form_residual(st, q, q1) <= 1e-9);
}

TEST_CASE("outputs are traceless and inputs are checked") {
    Mesh m = rect_mesh(1, 1, 4, 4);
    TensorField q = smooth_field(m);
    for (SchemeId id : {SchemeId::UES1D, SchemeId::OD2C, SchemeId::OD1D}) {
        Stepper st(m, make_cfg(id, 1e-3));
        TensorField cur = q;
        double worst = 0;
        for (int k = 0; k < 1000; ++k) {
            auto [next, rep] = st.step(cur);
            worst = std::max(worst, rep.trace_residual);
            cur = std::move(next);
        }
        CHECK(worst <= 1e-10);
        TensorField bad = q;
        bad[3].q33 += 1e-3;
        CHECK_THROWS_AS(st.step(bad), std::invalid_argument);
        CHECK_THROWS_AS(st.step(TensorField(3)), std::invalid_argument);
    }
}

TEST_CASE("step reports list the solves in order") {
    Mesh m = rect_mesh(1, 1, 3, 3);
    TensorField q = smooth_field(m);
    auto r1 = Stepper(m, make_cfg(SchemeId::OD1D, 1e-3)).step(q).second;
    CHECK(r1.solves == std::vector<std::string>{"11", "12", "13", "22", "23"});
    auto r2 = Stepper(m, make_cfg(SchemeId::OD2C, 1e-3)).step(q).second;
    CHECK(r2.solves.size() == 1);
    CHECK(r2.solvability_dt > 0);
    auto r3 = Stepper(m, make_cfg(SchemeId::UES1D, 1e-3)).step(q).second;
    CHECK(r3.solves.size() == 5);
    for (double res : r3.residuals) CHECK(res <= 1e-12);
}

TEST_CASE("one-step gap between OD1D and OD2C is second order in dt") {
    Mesh m = rect_mesh(1, 1, 6, 6);
    TensorField q = smooth_field(m, 0.9);
    auto mass = assemble_mass(m);
    std::vector<double> gaps;
    for (double dt : {4e-4, 2e-4, 1e-4}) {
        auto a = Stepper(m, make_cfg(SchemeId::OD1D, dt)).step(q).first;
        auto b = Stepper(m, make_cfg(SchemeId::OD2C, dt)).step(q).first;
        gaps.push_back(l2_norm(mass, difference(a, b)));
    }
    for (int i = 0; i + 1 < 2; ++i) {
        double ratio = gaps[i] / gaps[i + 1];
        CHECK(ratio >= 3.0);
        CHECK(ratio <= 5.0);
    }
}

TEST_CASE("truncated scheme decreases the modified energy for large steps") {
    Mesh m = rect_mesh(4, 4, 8, 8);
    TensorField q(m.num_nodes());
    for (std::size_t i = 0; i < q.size(); ++i) {
        double th = 4 * std::atan2(m.nodes[i][0] - 2, m.nodes[i][1] - 2 + 1e-9);
        q[i] = make_traceless(std::cos(th) * std::cos(th) - 1.0 / 3, std::cos(th) * std::sin(th), 0,
                              std::sin(th) * std::sin(th) - 1.0 / 3, 0);
    }
    for (double dt : {1e-2, 1e-1}) {
        auto cfg = make_cfg(SchemeId::UES1D, dt, 1e-3);
        cfg.params.S3 = stability_bounds(cfg.params).s3F_report;
        Stepper st(m, cfg);
        TensorField cur = q;
        double e = energy(st.space(), st.stiffness(), cur, cfg.params, true);
        for (int k = 0; k < 20; ++k) {
            cur = st.step(cur).first;
            double en = energy(st.space(), st.stiffness(), cur, cfg.params, true);
            CHECK(en <= e);
            e = en;
        }
    }
}

TEST_CASE("boundary conditions") {
    Mesh m = rect_mesh(4, 4, 4, 4);
    TensorField zero(m.num_nodes());
    BoundaryCondition uni{BoundaryCondition::Kind::DirichletUniform, {}};
    TensorField u = apply_dirichlet(zero, uni, m);
    const QTensor ref = uniaxial(1, {0, 1, 0});
    for (int i : m.boundary) CHECK(frobenius(u[i] - ref) <= 1e-15);
    CHECK_THAT(u[m.boundary[0]].q22, WithinAbs(2.0 / 3, 1e-15));
    CHECK(frobenius(u[12]) == 0);

    BoundaryCondition rad{BoundaryCondition::Kind::DirichletRadial, {}};
    TensorField r = apply_dirichlet(zero, rad, m);
    // node (4,2) is index 2*5+4
    CHECK_THAT(r[14].q11, WithinAbs(2.0 / 3, 1e-15));
    CHECK_THAT(r[14].q22, WithinAbs(-1.0 / 3, 1e-15));
    CHECK_THAT(r[14].q33, WithinAbs(-1.0 / 3, 1e-15));

    CHECK(max_diff(apply_dirichlet(smooth_field(m), BoundaryCondition{}, m), smooth_field(m)) == 0);

    for (SchemeId id : {SchemeId::UES1D, SchemeId::OD2C, SchemeId::OD1D}) {
        auto cfg = make_cfg(id, 1e-3);
        cfg.bc = rad;
        Stepper st(m, cfg);
        TensorField q = apply_dirichlet(smooth_field(m), rad, m);
        for (int k = 0; k < 5; ++k) q = st.step(q).first;
        double bd = 0;
        for (int i : m.boundary) bd = std::max(bd, frobenius(q[i] - dirichlet_value(rad, m, i)));
        CHECK(bd <= 1e-14);
    }

    BoundaryCondition custom{BoundaryCondition::Kind::DirichletCustom, smooth_field(m)};
    CHECK(max_diff(apply_dirichlet(zero, custom, m), zero) > 0);
    BoundaryCondition broken{BoundaryCondition::Kind::DirichletCustom, TensorField(2)};
    CHECK_THROWS_AS(apply_dirichlet(zero, broken, m), std::invalid_argument);
}

TEST_CASE("scheme and boundary names") {
    CHECK(parse_scheme("od1d") == SchemeId::OD1D);
    CHECK(to_string(SchemeId::UES1D) == "ues1d");
    CHECK(parse_bc("dirichlet-radial") == BoundaryCondition::Kind::DirichletRadial);
    CHECK_THROWS_AS(parse_scheme("rk4"), std::invalid_argument);
    CHECK_THROWS_AS(parse_bc("periodic"), std::invalid_argument);
    CHECK_THROWS_AS(Stepper(rect_mesh(1, 1, 1, 1), make_cfg(SchemeId::OD2C, 0.0)), std::invalid_argument);
}
