#pragma once

// Gaussian dynamical systems attached to a unitary representation: the
// stationary covariance C_ij = Re<pi(g_j^{-1} g_i) v, v>, deterministic
// sampling of the process, symmetric tensor powers (the Fock truncation),
// and the weak-mixing verdict.  The Gaussian action is ergodic iff it is
// weakly mixing iff pi is weakly mixing, so the verdict procedure works
// entirely on pi: a fixed vector of pi (x) conj(pi) averaged over a Folner
// window (finite-dimensional route), or decay of Folner means of
// |<pi(g) f1, f2>| across two window sizes (coefficient route).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/groups.hpp"

namespace ergolab {

class UnitaryRep {
public:
    UnitaryRep(GroupKind kind, int dim, std::function<Eigen::MatrixXcd(const GroupElement&)> eval)
        : kind_(kind), dim_(dim), eval_(std::move(eval)) {}

    // chi(g) = exp(2 pi i <freq, g>) as a 1-dimensional representation
    static UnitaryRep character(GroupKind kind, std::vector<double> freq) {
        Character chi(std::move(freq));
        return UnitaryRep(kind, 1, [chi](const GroupElement& g) {
            Eigen::MatrixXcd m(1, 1);
            m(0, 0) = chi.eval(g);
            return m;
        });
    }

    // pi_{alpha,beta}(M(a,b,c)) z = e^{i(alpha a + beta b)} z
    static UnitaryRep scalar_heisenberg(double alpha, double beta) {
        return UnitaryRep(GroupKind::Heisenberg, 1, [alpha, beta](const GroupElement& g) {
            if (g.kind() != GroupKind::Heisenberg)
                throw InvalidInput("scalar_heisenberg: expected a Heisenberg element");
            Eigen::MatrixXcd m(1, 1);
            m(0, 0) = std::polar(1.0, alpha * g.a() + beta * g.b());
            return m;
        });
    }

    // Z-action generated by a fixed unitary: pi(n) = U^n (spectral powers)
    static UnitaryRep from_generator(const Eigen::MatrixXcd& U) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(U);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("UnitaryRep::from_generator: eigensolve failed");
        Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::VectorXcd lam = es.eigenvalues();
        Eigen::MatrixXcd Vi = V.inverse();
        int d = static_cast<int>(U.rows());
        return UnitaryRep(GroupKind::IntLattice, d, [V, lam, Vi, d](const GroupElement& g) {
            if (g.dim() != 1) throw InvalidInput("from_generator: expected a Z element");
            double n = g[0];
            Eigen::VectorXcd p(lam.size());
            for (Eigen::Index i = 0; i < lam.size(); ++i)
                p[i] = std::pow(lam[i], n);
            return Eigen::MatrixXcd(V * p.asDiagonal() * Vi);
        });
    }

    static UnitaryRep direct_sum(const UnitaryRep& a, const UnitaryRep& b) {
        if (a.kind_ != b.kind_) throw InvalidInput("direct_sum: group kind mismatch");
        int d = a.dim_ + b.dim_;
        auto ea = a.eval_, eb = b.eval_;
        int da = a.dim_;
        return UnitaryRep(a.kind_, d, [ea, eb, d, da](const GroupElement& g) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
            Eigen::MatrixXcd ma = ea(g), mb = eb(g);
            m.topLeftCorner(da, da) = ma;
            m.bottomRightCorner(d - da, d - da) = mb;
            return m;
        });
    }

    GroupKind kind() const { return kind_; }
    int dim() const { return dim_; }
    Eigen::MatrixXcd operator()(const GroupElement& g) const { return eval_(g); }

private:
    GroupKind kind_;
    int dim_;
    std::function<Eigen::MatrixXcd(const GroupElement&)> eval_;
};

// Haar-ish random unitary from a seeded complex Gaussian QR.
inline Eigen::MatrixXcd random_unitary(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXcd A(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = cplx(nd(rng), nd(rng));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    Eigen::MatrixXcd Q = qr.householderQ();
    Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        cplx r = R(j, j);
        Q.col(j) *= (std::abs(r) > 0 ? r / std::abs(r) : cplx(1, 0));
    }
    return Q;
}

// C_ij = Re<pi(g_j^{-1} g_i) v, v>; the Gram matrix of the orbit vectors
// pi(g_i) v under the real inner product.  Symmetric PSD with constant
// diagonal |v|^2.
inline Eigen::MatrixXd gaussian_covariance(const UnitaryRep& rep, const Eigen::VectorXcd& v,
                                           const std::vector<GroupElement>& elements) {
    if (elements.empty()) throw InvalidInput("gaussian_covariance: no elements");
    if (v.size() != rep.dim() || v.norm() == 0)
        throw InvalidInput("gaussian_covariance: cyclic vector must be nonzero of matching dimension");
    const int k = static_cast<int>(elements.size());
    Eigen::MatrixXd C(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            GroupElement gij = compose(inverse(elements[static_cast<std::size_t>(j)]),
                                       elements[static_cast<std::size_t>(i)]);
            cplx val = (v.adjoint() * (rep(gij) * v))(0);
            C(i, j) = val.real();
        }
    C = 0.5 * (C + C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw NumericalFailure("gaussian_covariance: PSD violation (representation/group-law inconsistency)");
    return C;
}

namespace detail {

// Deterministic standard normals: splitmix64-derived stream + Box-Muller,
// independent of the platform's std::normal_distribution.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : state_(seed) {}
    double next() {
        if (have_) { have_ = false; return spare_; }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(two_pi * u2);
        have_ = true;
        return r * std::cos(two_pi * u2);
    }

private:
    double uniform01() {
        // (0, 1]: avoids log(0)
        std::uint64_t bits = splitmix64(state_);
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }
    std::uint64_t state_;
    double spare_ = 0;
    bool have_ = false;
};

} // namespace detail

// Rows are independent N(0, C) draws.  Spectral factorization tolerates the
// PSD-singular covariances that character representations produce.
inline Eigen::MatrixXd sample_gaussian_process(const Eigen::MatrixXd& C, int n_samples,
                                               std::uint64_t seed) {
    if (n_samples < 0) throw InvalidInput("sample_gaussian_process: negative sample count");
    const Eigen::Index k = C.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("sample_gaussian_process: factorization failed");
    if (es.eigenvalues().minCoeff() < -1e-8)
        throw InvalidInput("sample_gaussian_process: covariance is not PSD");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd L = es.eigenvectors() * lam.asDiagonal();
    Eigen::MatrixXd out(n_samples, k);
    for (int r = 0; r < n_samples; ++r) {
        detail::NormalStream ns(detail::mix_seed(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd z(k);
        for (Eigen::Index i = 0; i < k; ++i) z[i] = ns.next();
        out.row(r) = (L * z).transpose();
    }
    return out;
}

inline Eigen::Index sym_dim(int d, int n) {
    // binomial(d + n - 1, n)
    long double acc = 1;
    for (int i = 1; i <= n; ++i) acc = acc * (d + n - i) / i;
    return static_cast<Eigen::Index>(std::llround(static_cast<double>(acc)));
}

namespace detail {

inline std::vector<std::vector<int>> multisets(int d, int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(n), 0);
    while (true) {
        out.push_back(cur);
        int i = n - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == d - 1) --i;
        if (i < 0) break;
        int v = ++cur[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) cur[static_cast<std::size_t>(j)] = v;
    }
    return out;
}

} // namespace detail

// Matrix of U^{(x)n} restricted to the symmetric subspace H^{(.)n}, in the
// orthonormal symmetrized basis indexed by multisets; dimension
// binomial(d+n-1, n).  Unitary when U is.
inline Eigen::MatrixXcd sym_tensor_power(const Eigen::MatrixXcd& U, int n) {
    const int d = static_cast<int>(U.rows());
    if (n < 1) throw InvalidInput("sym_tensor_power: n must be >= 1");
    double full = std::pow(static_cast<double>(d), n);
    if (full > static_cast<double>(size_cap()))
        throw SizeCapExceeded("sym_tensor_power: d^n exceeds the size cap");
    const Eigen::Index full_dim = static_cast<Eigen::Index>(full);
    auto sets = detail::multisets(d, n);
    const Eigen::Index D = static_cast<Eigen::Index>(sets.size());

    // embedding E: symmetric basis -> product basis
    auto tuple_index = [&](const std::vector<int>& t) {
        Eigen::Index idx = 0;
        for (int x : t) idx = idx * d + x;
        return idx;
    };
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(full_dim, D);
    {
        for (Eigen::Index col = 0; col < D; ++col) {
            const auto& I = sets[static_cast<std::size_t>(col)];
            // multiplicity factor: sqrt(prod m_a! / n!)
            double mult = 1;
            for (int i = 1; i <= n; ++i) mult *= i;  // n!
            double mfact = 1;
            int run = 1;
            for (std::size_t i = 1; i <= I.size(); ++i) {
                if (i < I.size() && I[i] == I[i - 1]) { ++run; continue; }
                for (int r = 2; r <= run; ++r) mfact *= r;
                run = 1;
            }
            double coef = std::sqrt(mfact / mult);
            // place coef at every distinct permutation of I
            std::vector<int> perm = I;
            std::sort(perm.begin(), perm.end());
            do {
                E(tuple_index(perm), col) = coef;
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
    }

    // U^{(x)n} applied column by column without materializing it
    Eigen::MatrixXcd out(D, D);
    Eigen::VectorXcd x(full_dim), y(full_dim);
    for (Eigen::Index col = 0; col < D; ++col) {
        x = E.col(col);
        for (int axis = 0; axis < n; ++axis) {
            // contract U on the given tensor axis
            Eigen::Index stride = 1;
            for (int a = axis + 1; a < n; ++a) stride *= d;
            y.setZero();
            Eigen::Index outer = full_dim / (stride * d);
            for (Eigen::Index o = 0; o < outer; ++o)
                for (Eigen::Index s = 0; s < stride; ++s) {
                    Eigen::Index base = o * stride * d + s;
                    for (int r = 0; r < d; ++r) {
                        cplx acc = 0;
                        for (int c = 0; c < d; ++c) acc += U(r, c) * x[base + c * stride];
                        y[base + r * stride] = acc;
                    }
                }
            x.swap(y);
        }
        out.col(col) = E.adjoint() * x;
    }
    return out;
}

enum class MixVerdict { WeaklyMixing, NotWeaklyMixing, Inconclusive };

inline std::string to_string(MixVerdict v) {
    switch (v) {
        case MixVerdict::WeaklyMixing: return "weakly-mixing";
        case MixVerdict::NotWeaklyMixing: return "not-weakly-mixing";
        case MixVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct GaussianVerdict {
    MixVerdict verdict = MixVerdict::Inconclusive;
    std::string route;  // "fixed-vector" or "coefficient-mean"
    std::vector<int> window_sizes;
    std::vector<double> means;
    double fixed_vector_residual = 1e300;
    Eigen::VectorXcd fixed_vector;
    double tau = 0;
};

// Weak-mixing verdict for a finite-dimensional representation: look for an
// invariant vector of pi (x) conj(pi) via the window-averaged operator, then
// fall back to coefficient means across two window sizes.
inline GaussianVerdict gaussian_ergodicity_verdict(const UnitaryRep& rep,
                                                   const FolnerWindow& window, double tau = 0.05) {
    const int d = rep.dim();
    GaussianVerdict out;
    out.tau = tau;
    check_size_cap(static_cast<std::size_t>(d) * static_cast<std::size_t>(d),
                   "gaussian_ergodicity_verdict");

    Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(d * d, d * d);
    std::vector<Eigen::MatrixXcd> mats;
    mats.reserve(window.sample.size());
    for (const auto& g : window.sample) {
        Eigen::MatrixXcd pg = rep(g);
        Eigen::MatrixXcd big(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                big.block(i * d, k * d, d, d) = pg(i, k) * pg.conjugate();
        avg += big;
        mats.push_back(std::move(big));
    }
    avg /= static_cast<double>(window.sample.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (avg + avg.adjoint()));
    Eigen::VectorXcd top = es.eigenvectors().col(d * d - 1);
    double res = 0;
    for (const auto& m : mats) res = std::max(res, (m * top - top).norm());
    out.fixed_vector_residual = res;
    if (res < 1e-8) {
        out.verdict = MixVerdict::NotWeaklyMixing;
        out.route = "fixed-vector";
        out.fixed_vector = top;
        return out;
    }

    // coefficient route on the matrix-coefficient grid
    auto window_mean = [&](const FolnerWindow& w) {
        double worst = 0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double acc = 0;
                for (const auto& g : w.sample) acc += std::abs(rep(g)(j, i));
                acc /= static_cast<double>(w.sample.size());
                worst = std::max(worst, acc);
            }
        return worst;
    };
    int wdim = window.sample.empty() ? 1 : window.sample.front().dim();
    if (window.kind == GroupKind::Heisenberg) wdim = 1;
    FolnerWindow w2 = folner_box(window.kind, window.radius * 2, window.step, wdim);
    double m1 = window_mean(window), m2 = window_mean(w2);
    out.route = "coefficient-mean";
    out.window_sizes = {window.radius, w2.radius};
    out.means = {m1, m2};
    if (m2 < tau && m2 < 0.95 * m1) out.verdict = MixVerdict::WeaklyMixing;
    else if (m2 > tau && m2 >= 0.95 * m1) out.verdict = MixVerdict::NotWeaklyMixing;
    else out.verdict = MixVerdict::Inconclusive;
    return out;
}

// Coefficient route for representations that are only coefficient-evaluable
// (the Heisenberg L2(R) representation): decide from the Folner means of
// |coeff(g)| at two window sizes.
inline GaussianVerdict gaussian_ergodicity_verdict(
    const std::function<cplx(const GroupElement&)>& coeff, const FolnerWindow& w1,
    const FolnerWindow& w2, double tau = 0.05) {
    auto mean_of = [&](const FolnerWindow& w) {
        double acc = 0;
        for (const auto& g : w.sample) acc += std::abs(coeff(g));
        return acc / static_cast<double>(w.sample.size());
    };
    GaussianVerdict out;
    out.tau = tau;
    out.route = "coefficient-mean";
    double m1 = mean_of(w1), m2 = mean_of(w2);
    out.window_sizes = {w1.radius, w2.radius};
    out.means = {m1, m2};
    if (m2 < tau && m2 < 0.95 * m1) out.verdict = MixVerdict::WeaklyMixing;
    else if (m2 > tau && m2 >= 0.95 * m1) out.verdict = MixVerdict::NotWeaklyMixing;
    else out.verdict = MixVerdict::Inconclusive;
    return out;
}

} // namespace ergolab
