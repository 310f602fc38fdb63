#pragma once

// Banach-Kronecker system diagnostics.  The invariant metric is the sampled
// sup D(x,y) = sup_g d(S_g x, S_g y); any non-singular measure on a minimal
// system with an invariant metric is globally supported; and the witness
// construction takes D_eps = {(x,y) : d(x,y) < eps/2C}, saturates it under
// the sampled diagonal action into O_eps, and checks 0 < (m x P)(O_eps) < 1,
// which exhibits a non-ergodic product and rules out weak mixing.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/invariant.hpp"

namespace ergolab {

struct MetricTable {
    Eigen::MatrixXd D;
    double min_ratio = 1;            // min D/d over distinct pairs
    double max_ratio = 1;            // max D/d over distinct pairs
    double invariance_residual = 0;  // max |D(S_g x, S_g y) - D(x, y)| over snapped pairs
    double triangle_defect = 0;      // max over triples of D(x,z) - D(x,y) - D(y,z)
};

namespace detail {

// Nearest-cloud-point action of each S_g: sigma_g(p) = argmin_q |S_g y_p - y_q|.
// Returns the per-element permutation and the worst snap distance.
inline std::pair<std::vector<std::vector<int>>, double> snap_actions(const BKSystem& sys) {
    const Eigen::Index P = sys.cloud.rows();
    std::vector<std::vector<int>> sigma;
    double worst = 0;
    for (const auto& M : sys.S) {
        std::vector<int> s(static_cast<std::size_t>(P));
        for (Eigen::Index p = 0; p < P; ++p) {
            Eigen::VectorXd y = M * sys.cloud.row(p).transpose();
            double best = 1e300;
            int arg = 0;
            for (Eigen::Index q = 0; q < P; ++q) {
                double dd = (y - sys.cloud.row(q).transpose()).norm();
                if (dd < best) { best = dd; arg = static_cast<int>(q); }
            }
            s[static_cast<std::size_t>(p)] = arg;
            worst = std::max(worst, best);
        }
        sigma.push_back(std::move(s));
    }
    return {sigma, worst};
}

} // namespace detail

// D(x,y) = max over the sampled group of d(S_g x, S_g y), computed with the
// exact matrices.  Requires the equicontinuity diagnostic.
inline MetricTable invariant_metric(const BKSystem& sys, double triangle_tol = 1e-9) {
    if (!sys.equicontinuous)
        throw InvalidInput("invariant_metric: equicontinuity diagnostic failed");
    const Eigen::Index P = sys.cloud.rows();
    MetricTable t;
    t.D = Eigen::MatrixXd::Zero(P, P);
    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = p + 1; q < P; ++q) {
            Eigen::VectorXd diff = (sys.cloud.row(p) - sys.cloud.row(q)).transpose();
            double best = 0;
            for (const auto& M : sys.S) best = std::max(best, (M * diff).norm());
            t.D(p, q) = t.D(q, p) = best;
        }

    t.min_ratio = 1e300;
    t.max_ratio = 0;
    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = p + 1; q < P; ++q)
            if (sys.d(p, q) > 1e-12) {
                double r = t.D(p, q) / sys.d(p, q);
                t.min_ratio = std::min(t.min_ratio, r);
                t.max_ratio = std::max(t.max_ratio, r);
            }

    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = 0; q < P; ++q)
            for (Eigen::Index r = 0; r < P; ++r)
                t.triangle_defect =
                    std::max(t.triangle_defect, t.D(p, r) - t.D(p, q) - t.D(q, r));
    if (t.triangle_defect > triangle_tol)
        throw NumericalFailure("invariant_metric: triangle inequality violated beyond tolerance");

    auto [sigma, snap] = detail::snap_actions(sys);
    for (std::size_t g = 0; g < sigma.size(); ++g)
        for (Eigen::Index p = 0; p < P; ++p)
            for (Eigen::Index q = p + 1; q < P; ++q) {
                double dd = std::abs(t.D(sigma[g][static_cast<std::size_t>(p)],
                                         sigma[g][static_cast<std::size_t>(q)]) -
                                     t.D(p, q));
                t.invariance_residual = std::max(t.invariance_residual, dd);
            }
    return t;
}

struct SupportCheck {
    bool globally_supported = false;
    double min_ball_mass = 0;
};

// Every D-ball of radius eps must carry positive measure on a minimal
// system.  Zero mass is a legitimate negative verdict, not an error.
inline SupportCheck global_support_check(const BKSystem& sys, const Eigen::VectorXd& measure,
                                         const Eigen::MatrixXd& D, double eps) {
    if (!sys.minimal)
        throw InvalidInput("global_support_check: minimality diagnostic failed");
    if (measure.size() != sys.cloud.rows())
        throw InvalidInput("global_support_check: measure size mismatch");
    SupportCheck out;
    out.min_ball_mass = 1e300;
    for (Eigen::Index p = 0; p < sys.cloud.rows(); ++p) {
        double mass = 0;
        for (Eigen::Index q = 0; q < sys.cloud.rows(); ++q)
            if (D(p, q) < eps) mass += measure[q];
        out.min_ball_mass = std::min(out.min_ball_mass, mass);
    }
    out.globally_supported = out.min_ball_mass > 0;
    return out;
}

struct WitnessSets {
    double eps = 0;
    double C = 1;
    std::vector<std::pair<int, int>> D_eps;
    std::vector<std::pair<int, int>> O_eps;
    double product_measure = 0;          // (m x P)(O_eps)
    bool witnessed = false;              // 0 < measure < 1 at tolerance 1e-6
    bool containment_ok = false;         // D_eps subset O_eps subset {d < eps}
    double diag_invariance_defect = 0;   // symmetric-difference measure per sampled g
    double snap_error = 0;
    int saturation_rounds = 0;
};

// The proof's construction at finite scale: saturate D_eps under the
// sampled diagonal action to a fixed point.  P must be invariant under the
// sampled S_g within 1e-9 (transported counting measure for group orbits).
inline WitnessSets nonergodic_product_witness(const BKSystem& sys, const Eigen::VectorXd& P,
                                              double eps) {
    if (!(eps > 0)) throw InvalidInput("nonergodic_product_witness: eps must be positive");
    const Eigen::Index n = sys.cloud.rows();
    if (P.size() != n) throw InvalidInput("nonergodic_product_witness: P size mismatch");

    auto [sigma, snap] = detail::snap_actions(sys);
    for (const auto& s : sigma) {
        Eigen::VectorXd pushed = Eigen::VectorXd::Zero(n);
        for (Eigen::Index p = 0; p < n; ++p) pushed[s[static_cast<std::size_t>(p)]] += P[p];
        if ((pushed - P).cwiseAbs().maxCoeff() > 1e-9)
            throw InvalidInput("nonergodic_product_witness: P is not invariant under the sample");
    }

    WitnessSets w;
    w.eps = eps;
    w.C = sys.C;
    w.snap_error = snap;

    const double cut = eps / (2.0 * sys.C);
    std::vector<char> in_o(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    auto at = [n](Eigen::Index p, Eigen::Index q) {
        return static_cast<std::size_t>(p) * static_cast<std::size_t>(n) + static_cast<std::size_t>(q);
    };
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q)
            if (sys.d(p, q) < cut) {
                w.D_eps.push_back({static_cast<int>(p), static_cast<int>(q)});
                in_o[at(p, q)] = 1;
            }

    bool grew = true;
    while (grew) {
        grew = false;
        ++w.saturation_rounds;
        for (const auto& s : sigma)
            for (Eigen::Index p = 0; p < n; ++p)
                for (Eigen::Index q = 0; q < n; ++q) {
                    if (!in_o[at(p, q)]) continue;
                    std::size_t target = at(s[static_cast<std::size_t>(p)], s[static_cast<std::size_t>(q)]);
                    if (!in_o[target]) { in_o[target] = 1; grew = true; }
                }
        if (w.saturation_rounds > 4 * static_cast<int>(sigma.size()) + 64)
            throw NumericalFailure("nonergodic_product_witness: saturation did not stabilize");
    }

    double measure = 0;
    bool contained = true;
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q)
            if (in_o[at(p, q)]) {
                w.O_eps.push_back({static_cast<int>(p), static_cast<int>(q)});
                measure += sys.nu[p] * P[q];
                if (!(sys.d(p, q) < eps)) contained = false;
            }
    w.product_measure = measure;
    w.containment_ok = contained;  // D_eps subset O_eps holds by construction

    for (const auto& s : sigma) {
        double sym = 0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = 0; q < n; ++q) {
                bool a = in_o[at(p, q)];
                bool b = in_o[at(s[static_cast<std::size_t>(p)], s[static_cast<std::size_t>(q)])];
                if (a != b) sym += sys.nu[p] * P[q];
            }
        w.diag_invariance_defect = std::max(w.diag_invariance_defect, sym);
    }

    if (measure >= 1.0 - 1e-6)
        throw InvalidInput("nonergodic_product_witness: O_eps is everything; shrink eps");
    w.witnessed = measure > 1e-6 && measure < 1.0 - 1e-6 && contained;
    return w;
}

} // namespace ergolab
