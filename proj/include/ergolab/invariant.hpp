#pragma once

// Finite-dimensional invariant subspace detection and its consequences:
// the absolutely continuous invariant measure d(mu) = phi dm built from an
// invariant subspace (phi = (1/d) sum_j |f_j|^2), and the linear factor
// F(x) = (f_1(x), ..., f_d(x)) with matrices S_g satisfying F o T_g = S_g F.
//
// The detector works in the unitary picture: conjugating a Koopman operator
// by D = diag(sqrt(m)) gives a plain unitary matrix, and the conjugated
// basis vectors are exactly the bounded action functions.  Minimal common
// invariant subspaces are the eigenspaces of a generic self-adjoint element
// of the commutant of the generator set, which at finite dimension is a
// solvable linear system.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/spaces.hpp"

namespace ergolab {

struct InvariantSubspaceReport {
    int dim = 0;
    std::vector<Eigen::VectorXcd> basis;          // orthonormal in L2(m), Koopman picture
    std::vector<Eigen::VectorXcd> bounded_basis;  // action functions, sup-normalized
    std::vector<Eigen::MatrixXcd> A;              // U_g f_j = sum_i A_g(i,j) f_i, per generator
    std::vector<double> residuals;                // closure residual per generator
    Eigen::VectorXd phi;                          // (1/d) sum_j |f_j|^2 per state
    Eigen::VectorXd mu;                           // phi .* m
    double max_modulus_over_rms = 0;              // boundedness diagnostic
    std::uint64_t seed = 0;
    int retries = 0;
};

namespace detail {

// Unitary picture of a Koopman operator: Uhat = D U D^{-1}, D = diag(sqrt m).
inline Eigen::MatrixXcd hat_matrix(const KoopmanOperator& U) {
    Eigen::MatrixXcd m = U.materialize();
    const Eigen::VectorXd& w = U.space().weights();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) *= std::sqrt(w[i]) / std::sqrt(w[j]);
    return m;
}

inline Eigen::VectorXcd hat_vector(const MeasureSpace& sp, const Eigen::VectorXcd& v) {
    Eigen::VectorXcd h(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) h[i] = v[i] * std::sqrt(sp.weight(i));
    return h;
}

// Orthonormal basis of the complement of span{e0} (standard metric).
inline Eigen::MatrixXcd complement_basis(const Eigen::VectorXcd& e0) {
    const Eigen::Index n = e0.size();
    Eigen::MatrixXcd m(n, n);
    m.col(0) = e0.normalized();
    for (Eigen::Index j = 1; j < n; ++j) m.col(j) = Eigen::VectorXcd::Unit(n, j - 1);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    Eigen::MatrixXcd q = qr.householderQ();
    // ensure the first column spans e0
    if (std::abs((q.col(0).adjoint() * e0.normalized())(0)) < 0.9)
        throw NumericalFailure("complement_basis: QR did not preserve the pivot direction");
    return q.rightCols(n - 1);
}

// Basis of the commutant {B : B V_g = V_g B for all g} via the null space
// of the stacked Sylvester system.  Row (g, r, c) of K carries the (r, c)
// entry of V_g B - B V_g as a linear form in vec(B).
inline std::vector<Eigen::MatrixXcd> commutant_basis(const std::vector<Eigen::MatrixXcd>& gens,
                                                     double tol = 1e-10) {
    const Eigen::Index n = gens.at(0).rows();
    const Eigen::Index n2 = n * n;
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(gens.size()) * n2, n2);
    auto slot = [n](Eigen::Index bi, Eigen::Index bj) { return bj * n + bi; };  // vec(B) index of B(bi,bj)
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const Eigen::MatrixXcd& V = gens[g];
        Eigen::Index row0 = static_cast<Eigen::Index>(g) * n2;
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) {
                Eigen::Index row = row0 + slot(r, c);
                for (Eigen::Index k = 0; k < n; ++k) {
                    K(row, slot(k, c)) += V(r, k);   // (V B)(r, c)
                    K(row, slot(r, k)) -= V(k, c);   // (B V)(r, c)
                }
            }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double scale = sv.size() ? sv[0] : 1.0;
    std::vector<Eigen::MatrixXcd> basis;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol * std::max(1.0, scale)) continue;
        Eigen::VectorXcd v = svd.matrixV().col(i);
        Eigen::MatrixXcd B(n, n);
        for (Eigen::Index bj = 0; bj < n; ++bj)
            for (Eigen::Index bi = 0; bi < n; ++bi) B(bi, bj) = v[bj * n + bi];
        basis.push_back(std::move(B));
    }
    return basis;
}

} // namespace detail

// Minimal common invariant subspaces of the generator set, orthogonal to
// constants, of dimension <= max_dim.  An empty result is a verdict (no
// such subspace at this tolerance), not an error.
inline std::vector<InvariantSubspaceReport> find_invariant_subspaces(
    const std::vector<KoopmanOperator>& gens, int max_dim, double tol = 1e-8,
    std::uint64_t seed = 20240817u) {
    if (gens.empty()) throw InvalidInput("find_invariant_subspaces: no generators");
    if (max_dim < 1 || max_dim > 12)
        throw InvalidInput("find_invariant_subspaces: max_dim must be in [1, 12]");
    const MeasureSpace& sp = gens[0].space();
    const Eigen::Index n = sp.dim();
    for (const auto& g : gens)
        if (g.dim() != n) throw InvalidInput("find_invariant_subspaces: mixed spaces");

    // constants direction in the unitary picture
    Eigen::VectorXcd e0;
    if (gens[0].constants_direction().size() == n)
        e0 = detail::hat_vector(sp, gens[0].constants_direction());
    else
        e0 = detail::hat_vector(sp, Eigen::VectorXcd::Ones(n));
    e0.normalize();

    Eigen::MatrixXcd Q = detail::complement_basis(e0);
    std::vector<Eigen::MatrixXcd> V;
    for (const auto& g : gens) V.push_back(Q.adjoint() * detail::hat_matrix(g) * Q);

    std::vector<Eigen::MatrixXcd> comm = detail::commutant_basis(V);
    if (comm.size() <= 1) return {};  // trivial commutant: only scalars

    const Eigen::Index nm = n - 1;
    std::vector<InvariantSubspaceReport> reports;
    int retries = 0;
    std::uint64_t cur_seed = seed;
    for (; retries <= 3; ++retries, ++cur_seed) {
        std::mt19937_64 rng(cur_seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(nm, nm);
        for (const auto& B : comm) {
            double xr = nd(rng), xi = nd(rng);
            H += xr * (B + B.adjoint());
            H += xi * (cplx(0, 1) * (B - B.adjoint()));
        }
        H = 0.5 * (H + H.adjoint()).eval();

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("find_invariant_subspaces: commutant eigensolve failed");
        const Eigen::VectorXd& ev = es.eigenvalues();
        double spread = std::max(1e-30, ev[nm - 1] - ev[0]);
        double gap_cut = 1e-7 * spread;

        // reject ambiguous spectra (collisions between distinct blocks)
        bool ambiguous = false;
        for (Eigen::Index i = 0; i + 1 < nm; ++i) {
            double gap = ev[i + 1] - ev[i];
            if (gap > gap_cut / 100 && gap < gap_cut * 100 && gap > 1e-13 * spread) ambiguous = true;
        }
        if (ambiguous && retries < 3) continue;

        std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;  // [begin, end)
        Eigen::Index begin = 0;
        for (Eigen::Index i = 1; i <= nm; ++i) {
            if (i == nm || ev[i] - ev[i - 1] > gap_cut) {
                clusters.push_back({begin, i});
                begin = i;
            }
        }

        reports.clear();
        bool all_ok = true;
        for (auto [b, e] : clusters) {
            int d = static_cast<int>(e - b);
            if (d > max_dim) continue;
            Eigen::MatrixXcd W = es.eigenvectors().middleCols(b, d);  // (n-1) x d
            Eigen::MatrixXcd Fhat = Q * W;                            // n x d, orthonormal

            InvariantSubspaceReport rep;
            rep.dim = d;
            rep.seed = cur_seed;
            rep.retries = retries;
            double worst = 0;
            for (const auto& g : gens) {
                Eigen::MatrixXcd Uh = detail::hat_matrix(g);
                Eigen::MatrixXcd Ag = Fhat.adjoint() * Uh * Fhat;
                double res = (Uh * Fhat - Fhat * Ag).norm();
                rep.A.push_back(std::move(Ag));
                rep.residuals.push_back(res);
                worst = std::max(worst, res);
            }
            if (worst > tol) { all_ok = all_ok && true; continue; }

            for (int j = 0; j < d; ++j) {
                Eigen::VectorXcd fhat = Fhat.col(j);
                Eigen::VectorXcd f(n);
                for (Eigen::Index i = 0; i < n; ++i) f[i] = fhat[i] / std::sqrt(sp.weight(i));
                rep.basis.push_back(std::move(f));
                double sup = fhat.cwiseAbs().maxCoeff();
                rep.bounded_basis.push_back(fhat / sup);
            }
            rep.phi = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < d; ++j)
                for (Eigen::Index i = 0; i < n; ++i)
                    rep.phi[i] += std::norm(rep.basis[static_cast<std::size_t>(j)][i]) / d;
            rep.mu = rep.phi.cwiseProduct(sp.weights());
            double rms = 1.0 / std::sqrt(static_cast<double>(n));
            double mm = 0;
            for (const auto& f : rep.basis)
                for (Eigen::Index i = 0; i < n; ++i)
                    mm = std::max(mm, std::abs(f[i]) * std::sqrt(sp.weight(i)));
            rep.max_modulus_over_rms = mm / rms;
            reports.push_back(std::move(rep));
        }
        if (all_ok) break;
    }

    std::sort(reports.begin(), reports.end(),
              [](const InvariantSubspaceReport& a, const InvariantSubspaceReport& b) {
                  if (a.dim != b.dim) return a.dim < b.dim;
                  double pa = a.A.empty() ? 0 : std::arg(a.A[0].trace());
                  double pb = b.A.empty() ? 0 : std::arg(b.A[0].trace());
                  return pa < pb;
              });
    return reports;
}

// d(mu) = phi dm.  Validates mu is a probability measure and (when a map is
// available) that mu(T_g B) = mu(B) on singletons within d*residual + 1e-10.
struct InvariantMeasureCheck {
    Eigen::VectorXd mu;
    double max_singleton_defect = 0;
    double total = 0;
};

inline InvariantMeasureCheck build_invariant_measure(const InvariantSubspaceReport& rep,
                                                     const std::vector<KoopmanOperator>& gens) {
    if (rep.basis.empty()) throw InvalidInput("build_invariant_measure: empty report");
    InvariantMeasureCheck out;
    out.mu = rep.mu;
    out.total = rep.mu.sum();
    if (std::abs(out.total - 1.0) > 1e-10)
        throw NumericalFailure("build_invariant_measure: mu is not a probability measure");
    for (const auto& g : gens) {
        if (!g.map() || g.map()->is_rotation()) continue;
        const auto& map = *g.map();
        for (Eigen::Index i = 0; i < out.mu.size(); ++i) {
            double defect = std::abs(out.mu[map.apply_state(static_cast<int>(i))] - out.mu[i]);
            out.max_singleton_defect = std::max(out.max_singleton_defect, defect);
        }
    }
    return out;
}

// A linear factor: point cloud Y with weights nu, matrices S_g, equivariance
// and topological-diagnostic data.
struct BKSystem {
    Eigen::MatrixXd cloud;             // P x n, row p = F(x_p)
    Eigen::VectorXd nu;                // probability weights on the cloud
    std::vector<Eigen::MatrixXd> S;    // one matrix per sampled group element
    std::vector<int> powers;           // group sample labels (powers of the generator)
    double C = 1;                      // operator norm bound (with 1.05 safety factor)
    Eigen::MatrixXd d;                 // Euclidean metric table on the cloud
    double equivariance_residual = 0;  // max_p |F(T_g x_p) - S_g F(x_p)|
    // diagnostics
    double expansion_factor = 0;       // max_g max_pairs d(S_g x, S_g y)/d(x, y)
    double orbit_gap = 0;              // orbit epsilon-density of a nu-positive point
    bool equicontinuous = false;
    bool minimal = false;
};

namespace detail {

inline Eigen::MatrixXd realify(const Eigen::MatrixXcd& A) {
    const Eigen::Index d = A.rows();
    Eigen::MatrixXd R(2 * d, 2 * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            R(2 * i, 2 * j) = A(i, j).real();
            R(2 * i, 2 * j + 1) = -A(i, j).imag();
            R(2 * i + 1, 2 * j) = A(i, j).imag();
            R(2 * i + 1, 2 * j + 1) = A(i, j).real();
        }
    return R;
}

inline double op_norm(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues()(0);
}

} // namespace detail

// Extracts the Banach-Kronecker factor of an invariant subspace: the image
// cloud of F = (h_1, ..., h_d) (bounded action functions), the matrices S_g
// for powers |k| <= sample_radius of the generator, and the equicontinuity
// and minimality diagnostics.  Fourier systems are evaluated on a uniform
// spatial grid of `spatial_points` circle points.
inline BKSystem extract_bk_factor(const InvariantSubspaceReport& rep,
                                  const KoopmanOperator& gen, int sample_radius,
                                  int spatial_points = 256, double tol = 1e-8) {
    if (rep.bounded_basis.empty()) throw InvalidInput("extract_bk_factor: empty report");
    const MeasureSpace& sp = gen.space();
    const int d = rep.dim;
    const Eigen::Index n = sp.dim();

    // per-state (or per-grid-point) complex values of the bounded basis
    Eigen::MatrixXcd vals;  // P x d
    Eigen::VectorXd nu;
    const bool fourier = sp.is_fourier();
    if (fourier) {
        if (sp.cutoffs().size() != 1)
            throw InvalidInput("extract_bk_factor: only 1-d Fourier models are evaluated on a grid");
        const int P = spatial_points;
        vals.resize(P, d);
        nu = Eigen::VectorXd::Constant(P, 1.0 / P);
        for (int p = 0; p < P; ++p) {
            double x = static_cast<double>(p) / P;
            for (int j = 0; j < d; ++j) {
                cplx acc = 0;
                const Eigen::VectorXcd& h = rep.bounded_basis[static_cast<std::size_t>(j)];
                for (Eigen::Index m = 0; m < n; ++m) {
                    int k = sp.mode_of(m)[0];
                    acc += h[m] * std::polar(1.0, two_pi * k * x);
                }
                vals(p, j) = acc;
            }
        }
    } else {
        vals.resize(n, d);
        nu = sp.weights();
        for (int j = 0; j < d; ++j) vals.col(j) = rep.bounded_basis[static_cast<std::size_t>(j)];
    }

    bool complex_cloud = vals.imag().cwiseAbs().maxCoeff() > 1e-9;
    BKSystem sys;
    if (complex_cloud) {
        sys.cloud.resize(vals.rows(), 2 * d);
        for (int j = 0; j < d; ++j) {
            sys.cloud.col(2 * j) = vals.col(j).real();
            sys.cloud.col(2 * j + 1) = vals.col(j).imag();
        }
    } else {
        sys.cloud = vals.real();
    }
    sys.nu = nu;

    double diam = 0;
    const Eigen::Index P = sys.cloud.rows();
    sys.d.resize(P, P);
    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = 0; q < P; ++q) {
            sys.d(p, q) = (sys.cloud.row(p) - sys.cloud.row(q)).norm();
            diam = std::max(diam, sys.d(p, q));
        }
    if (diam < 1e-9)
        throw InvalidInput("extract_bk_factor: degenerate cloud (trivial factor)");

    // Transition matrix of the bounded basis under the generator:
    // h_j o T = sum_i Ah(i,j) h_i with Ah(i,j) = A(i,j) * sup_i / sup_j.
    Eigen::MatrixXcd Ah = rep.A.at(0);
    {
        Eigen::VectorXd sup(d);
        for (int j = 0; j < d; ++j) {
            const Eigen::VectorXcd& h = rep.bounded_basis[static_cast<std::size_t>(j)];
            const Eigen::VectorXcd& f = rep.basis[static_cast<std::size_t>(j)];
            // h = fhat / sup with fhat = f .* sqrt(m); recover sup from the ratio
            double s = 0;
            for (Eigen::Index i = 0; i < f.size(); ++i)
                s = std::max(s, std::abs(f[i]) * std::sqrt(sp.weight(i)));
            sup[j] = s;
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) Ah(i, j) *= sup[i] / sup[j];
    }

    // S matrices for powers of the generator: F(T^k x) = (Ah^T)^k F(x)
    auto realize = [&](const Eigen::MatrixXcd& M) {
        if (complex_cloud) return detail::realify(M);
        if (M.imag().cwiseAbs().maxCoeff() > 1e-9)
            throw NumericalFailure("extract_bk_factor: complex transition on a real cloud");
        return Eigen::MatrixXd(M.real());
    };
    Eigen::MatrixXcd At = Ah.transpose();
    std::vector<Eigen::MatrixXcd> pos(static_cast<std::size_t>(sample_radius) + 1);
    pos[0] = Eigen::MatrixXcd::Identity(d, d);
    for (int k = 1; k <= sample_radius; ++k) pos[static_cast<std::size_t>(k)] = At * pos[static_cast<std::size_t>(k - 1)];
    Eigen::MatrixXcd Ati = At.inverse();
    std::vector<Eigen::MatrixXcd> neg(static_cast<std::size_t>(sample_radius) + 1);
    neg[0] = pos[0];
    for (int k = 1; k <= sample_radius; ++k) neg[static_cast<std::size_t>(k)] = Ati * neg[static_cast<std::size_t>(k - 1)];
    for (int k = -sample_radius; k <= sample_radius; ++k) {
        sys.powers.push_back(k);
        sys.S.push_back(realize(k >= 0 ? pos[static_cast<std::size_t>(k)] : neg[static_cast<std::size_t>(-k)]));
    }

    double cop = 0;
    for (const auto& M : sys.S) cop = std::max(cop, detail::op_norm(M));
    sys.C = 1.05 * cop;

    // equivariance check: F(T_g x) vs S_g F(x), exact evaluation of F o T_g
    double worst = 0;
    for (std::size_t si = 0; si < sys.S.size(); ++si) {
        int k = sys.powers[si];
        for (Eigen::Index p = 0; p < P; ++p) {
            Eigen::VectorXd lhs(sys.cloud.cols());
            if (fourier) {
                double alpha = gen.map()->angles()[0];
                double x = static_cast<double>(p) / static_cast<double>(P) + k * alpha;
                for (int j = 0; j < d; ++j) {
                    cplx acc = 0;
                    const Eigen::VectorXcd& h = rep.bounded_basis[static_cast<std::size_t>(j)];
                    for (Eigen::Index m = 0; m < n; ++m)
                        acc += h[m] * std::polar(1.0, two_pi * sp.mode_of(m)[0] * x);
                    if (complex_cloud) {
                        lhs[2 * j] = acc.real();
                        lhs[2 * j + 1] = acc.imag();
                    } else {
                        lhs[j] = acc.real();
                    }
                }
            } else {
                const auto& perm = gen.map()->perm();
                std::vector<int> inv(perm.size());
                for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
                int q = static_cast<int>(p);
                for (int s = 0; s < std::abs(k); ++s)
                    q = k > 0 ? perm[static_cast<std::size_t>(q)] : inv[static_cast<std::size_t>(q)];
                lhs = sys.cloud.row(q);
            }
            Eigen::VectorXd rhs = sys.S[si] * sys.cloud.row(p).transpose();
            worst = std::max(worst, (lhs - rhs).norm());
        }
    }
    sys.equivariance_residual = worst;
    if (worst > std::max(tol, 1e-6))
        throw NumericalFailure("extract_bk_factor: equivariance residual too large");

    // diagnostics
    double kappa = 0;
    for (const auto& M : sys.S)
        for (Eigen::Index p = 0; p < P; ++p)
            for (Eigen::Index q = p + 1; q < P; ++q) {
                double dd = sys.d(p, q);
                if (dd < 1e-12) continue;
                kappa = std::max(kappa, (M * (sys.cloud.row(p) - sys.cloud.row(q)).transpose()).norm() / dd);
            }
    sys.expansion_factor = kappa;
    sys.equicontinuous = kappa <= sys.C + 1e-9;

    Eigen::Index p0;
    sys.nu.maxCoeff(&p0);
    double gap = 0;
    for (Eigen::Index p = 0; p < P; ++p) {
        double best = 1e300;
        for (const auto& M : sys.S)
            best = std::min(best, (M * sys.cloud.row(p0).transpose() - sys.cloud.row(p).transpose()).norm());
        gap = std::max(gap, best);
    }
    sys.orbit_gap = gap;
    sys.minimal = gap <= std::max(0.1 * diam, 4.0 * diam / std::sqrt(static_cast<double>(P)));
    return sys;
}

} // namespace ergolab
