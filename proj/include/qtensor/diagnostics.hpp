#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fem.hpp"
#include "potential.hpp"
#include "schemes.hpp"

namespace qtensor {

struct EnergyRecord {
    long step = 0;
    double t = 0;
    double E = 0;
    double E_hat = 0;
    double nd_residual = 0;
    double nd_direct = 0;
    double trace_norm = 0;
    double max_q = 0;
    double dt = 0;
};

inline double elastic_energy(const SparseOperator& stiff, const TensorField& q) {
    return 0.5 * detail::tensor_form(q, [&](const ScalarField& u) {
        auto x = as_vector(u);
        return x.dot(stiff.mat * x);
    });
}

inline double bulk_energy(const P1Space& s, const TensorField& q, const PotentialParams& p, bool truncated) {
    const Mesh& m = s.mesh();
    const auto& rule = s.rule();
    double sum = 0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        double part = 0;
        for (int k = 0; k < rule.n; ++k) {
            QTensor v = s.at_qp(e, k, [&](int i) { return q[i]; });
            part += rule.weight[k] * (truncated ? psi_hat_value(v, p) : psi_value(v, p));
        }
        sum += part * m.volumes[e];
    }
    return sum / p.epsilon;
}

inline double energy(const P1Space& s, const SparseOperator& stiff, const TensorField& q, const PotentialParams& p,
                     bool truncated) {
    return elastic_energy(stiff, q) + bulk_energy(s, q, p, truncated);
}

inline double energy(const Mesh& m, const TensorField& q, const PotentialParams& p, bool truncated) {
    P1Space s(m);
    return energy(s, assemble_stiffness(s), q, p, truncated);
}

struct Dissipation {
    double residual = 0;
    double direct = 0;
};

inline TensorField difference(const TensorField& a, const TensorField& b) {
    TensorField d(a.size(), a.traceless && b.traceless);
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

// Residual form from the discrete energy law, and the direct integral of
// (psi^dt : dQ - dPsi) / (eps dt) evaluated with the energy quadrature.
inline Dissipation numerical_dissipation(const Stepper& st, const TensorField& qnew, const TensorField& qold,
                                         double e_new, double e_old) {
    const auto& cfg = st.config();
    const auto& p = cfg.params;
    const double dt = cfg.dt;
    const bool trunc = cfg.scheme == SchemeId::UES1D;
    TensorField d = difference(qnew, qold);
    double dnorm2 = std::pow(l2_norm(st.mass(), d), 2);
    Dissipation nd;
    nd.residual = -(e_new - e_old) / dt - dnorm2 / (p.gamma * dt * dt);

    const P1Space& s = st.space();
    const Mesh& m = s.mesh();
    const auto& rule = s.rule();
    double sum = 0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        double part = 0;
        for (int k = 0; k < rule.n; ++k) {
            QTensor qo = s.at_qp(e, k, [&](int i) { return qold[i]; });
            QTensor dq = s.at_qp(e, k, [&](int i) { return d[i]; });
            QTensor qn = qo + dq;
            QTensor g = scheme_nonlinearity(cfg.scheme, qo, dq, p);
            double dpsi = trunc ? psi_hat_value(qn, p) - psi_hat_value(qo, p) : psi_value(qn, p) - psi_value(qo, p);
            part += rule.weight[k] * (contract22(g, dq) - dpsi);
        }
        sum += part * m.volumes[e];
    }
    nd.direct = sum / (p.epsilon * dt);
    return nd;
}

inline double trace_norm(const TensorField& q) {
    double t = 0;
    for (const auto& v : q.values) t = std::max(t, std::abs(v.trace()));
    return t;
}

struct MaxPrinciple {
    double max_q = 0;
    bool violated = false;
};

inline MaxPrinciple max_principle_monitor(const TensorField& q, double alpha) {
    MaxPrinciple r;
    for (const auto& v : q.values) r.max_q = std::max(r.max_q, frobenius(v));
    r.violated = r.max_q > alpha * (1.0 + 1e-8);
    return r;
}

inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& dts) {
    if (errors.size() != dts.size() || errors.size() < 2) throw std::invalid_argument("eoc: need matching lists of length >= 2");
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!(errors[i] > 0) || !(dts[i] > 0)) throw std::invalid_argument("eoc: errors and steps must be positive");
    std::vector<double> r(errors.size() - 1);
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        r[i] = std::log(errors[i] / errors[i + 1]) / std::log(dts[i] / dts[i + 1]);
    return r;
}

struct EocRow {
    double dt = 0;
    std::array<double, 5> e2{}, e1{};
    std::array<double, 5> r2{}, r1{};  // rate against the previous row; unset on the first row
    bool has_rate = false;
};

struct EocTable {
    std::vector<EocRow> rows;
};

inline void fill_rates(EocTable& t) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        auto& cur = t.rows[i];
        const auto& prev = t.rows[i - 1];
        for (int c = 0; c < 5; ++c) {
            cur.r2[c] = eoc({prev.e2[c], cur.e2[c]}, {prev.dt, cur.dt})[0];
            cur.r1[c] = eoc({prev.e1[c], cur.e1[c]}, {prev.dt, cur.dt})[0];
        }
        cur.has_rate = true;
    }
}

struct DefectField {
    ScalarField lambda_gap;
    std::vector<Vec3> director;
};

inline DefectField defect_field(const TensorField& q) {
    DefectField f;
    f.lambda_gap.resize(q.size());
    f.director.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        auto ed = eig_sym3(q[i]);
        f.lambda_gap[i] = ed.eigenvalues[0] - ed.eigenvalues[1];
        f.director[i] = ed.eigenvectors[0];
    }
    return f;
}

}  // namespace qtensor
