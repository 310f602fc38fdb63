#pragma once

// Correlation sequences c(n) = <U^n f, f>, their spectral types via Fejer
// inversion at a finite window, eigenvalue sets e(T) at finite scale, and
// the ergodic multiplier decision procedure: the product T x S fails to be
// ergodic exactly when some non-trivial eigenvalue of T carries positive
// mass under the spectral type of the reduced Koopman representation of S.
// On exact finite models the spectral type of S is purely atomic with atoms
// at its mean-zero eigenvalues, so the decision reduces to an eigenvalue
// intersection, cross-checked against a direct fixed-vector search on the
// product operator.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/spaces.hpp"

namespace ergolab {

// c(-N..N), stored with offset N; c(-n) = conj(c(n)), c(0) = |f|^2.
inline std::vector<cplx> correlation_sequence(const KoopmanOperator& U,
                                              const Eigen::VectorXcd& f, int N) {
    if (N < 1) throw InvalidInput("correlation_sequence: N must be >= 1");
    std::vector<cplx> c(static_cast<std::size_t>(2 * N + 1));
    Eigen::VectorXcd g = f;
    for (int n = 0; n <= N; ++n) {
        cplx v = U.space().inner(g, f);
        c[static_cast<std::size_t>(N + n)] = v;
        c[static_cast<std::size_t>(N - n)] = std::conj(v);
        if (n < N) g = U.apply(g);
    }
    return c;
}

struct SpectralAtom {
    double location = 0;  // in [0, 1)
    double mass = 0;
};

struct SpectralEstimate {
    int window = 0;                 // N: uses c(-N..N)
    std::vector<double> grid;       // dual grid points in [0, 1)
    std::vector<double> density;    // Fejer-smoothed density samples
    std::vector<SpectralAtom> atoms;
    double total_mass = 0;
};

namespace detail {

// Fejer-smoothed density at theta from c(-N..N):
//   sum_{|n|<=N} (1 - |n|/(N+1)) c(n) e^{-2 pi i n theta}
inline double fejer_density(const std::vector<cplx>& c, int N, double theta) {
    const int off = static_cast<int>(c.size() / 2);
    double acc = c[static_cast<std::size_t>(off)].real();
    for (int n = 1; n <= N; ++n) {
        double w = 1.0 - static_cast<double>(n) / (N + 1);
        cplx e = std::polar(1.0, -two_pi * n * theta);
        acc += 2.0 * w * (c[static_cast<std::size_t>(off + n)] * e).real();
    }
    return acc;
}

// Wiener-style mass estimate of a candidate atom at theta:
//   (1/(2N+1)) sum_{|n|<=N} c(n) e^{-2 pi i n theta}
inline double wiener_mass(const std::vector<cplx>& c, int N, double theta) {
    const int off = static_cast<int>(c.size() / 2);
    cplx acc = c[static_cast<std::size_t>(off)];
    for (int n = 1; n <= N; ++n) {
        acc += c[static_cast<std::size_t>(off + n)] * std::polar(1.0, -two_pi * n * theta);
        acc += c[static_cast<std::size_t>(off - n)] * std::polar(1.0, two_pi * n * theta);
    }
    return (acc / static_cast<double>(2 * N + 1)).real();
}

inline int next_pow2(int n) {
    int m = 1;
    while (m < n) m *= 2;
    return m;
}

// Golden-section refinement of a local max of the Fejer density.
inline double refine_peak(const std::vector<cplx>& c, int N, double lo, double hi) {
    const double gr = 0.61803398874989485;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = fejer_density(c, N, x1), f2 = fejer_density(c, N, x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = fejer_density(c, N, x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = fejer_density(c, N, x1);
        }
    }
    return wrap01(0.5 * (a + b));
}

} // namespace detail

// Herglotz-style inversion of a positive-definite sequence at a finite
// window.  Atom rule: a dual-grid cell is an atom candidate when its Fejer
// cell mass exceeds 10/N and the mass estimate moves by < 20% between the
// half window and the full window (atoms carry mass O(1); absolutely
// continuous spectrum puts only O(1/N) into a cell).
inline SpectralEstimate spectral_estimate(const std::vector<cplx>& c) {
    if (c.size() < 9 || c.size() % 2 == 0)
        throw InvalidInput("spectral_estimate: need c(-N..N) with N >= 4");
    const int N = static_cast<int>(c.size() / 2);
    const int M = detail::next_pow2(2 * (N + 1));

    SpectralEstimate est;
    est.window = N;
    est.grid.resize(static_cast<std::size_t>(M));
    est.density.resize(static_cast<std::size_t>(M));
    const double c0 = c[static_cast<std::size_t>(N)].real();
    double total = 0, dmin = 0;
    for (int j = 0; j < M; ++j) {
        double theta = static_cast<double>(j) / M;
        double d = detail::fejer_density(c, N, theta);
        est.grid[static_cast<std::size_t>(j)] = theta;
        est.density[static_cast<std::size_t>(j)] = d;
        total += d / M;
        dmin = std::min(dmin, d);
    }
    est.total_mass = total;
    if (dmin < -1e-3 * std::max(1.0, c0))
        throw NumericalFailure("spectral_estimate: input sequence is not positive-definite");

    const double cell_threshold = 10.0 / N;
    const int N2 = N / 2;
    for (int j = 0; j < M; ++j) {
        double d = est.density[static_cast<std::size_t>(j)];
        double left = est.density[static_cast<std::size_t>((j + M - 1) % M)];
        double right = est.density[static_cast<std::size_t>((j + 1) % M)];
        if (d < left || d <= right) continue;  // local max cells only
        if (d / M <= cell_threshold) continue;
        double theta0 = static_cast<double>(j) / M;
        double loc = detail::refine_peak(c, N, theta0 - 1.0 / M, theta0 + 1.0 / M);
        double mass_full = detail::wiener_mass(c, N, loc);
        double mass_half = detail::wiener_mass(c, N2, loc);
        if (mass_full <= 0) continue;
        if (std::abs(mass_full - mass_half) >= 0.2 * std::max(mass_full, mass_half)) continue;
        // merge duplicates from adjacent cells refining to the same spot
        bool dup = false;
        for (const auto& a : est.atoms)
            if (std::abs(a.location - loc) < 2.0 / M || std::abs(a.location - loc) > 1.0 - 2.0 / M)
                dup = true;
        if (!dup) est.atoms.push_back({loc, mass_full});
    }
    std::sort(est.atoms.begin(), est.atoms.end(),
              [](const SpectralAtom& x, const SpectralAtom& y) { return x.location < y.location; });
    return est;
}

struct EigenPair {
    cplx value;
    Eigen::VectorXcd koopman_vector;  // eigenvector of U, unit weighted norm
    Eigen::VectorXcd eigenfunction;   // action eigenfunction (constant modulus when ergodic)
    double residual = 0;
    double modulus_ratio = 1;         // max|h| / min|h| of the eigenfunction
    bool trivial = false;             // the constants direction
};

struct EigenData {
    std::vector<EigenPair> entries;
};

namespace detail {

inline void phase_fix(Eigen::VectorXcd& v) {
    Eigen::Index imax = 0;
    double best = -1;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > best + 1e-15) { best = std::abs(v[i]); imax = i; }
    if (best > 0) v *= std::conj(v[imax]) / std::abs(v[imax]);
}

} // namespace detail

// All unit-modulus eigenpairs of U with residual <= tol.  Eigenfunctions
// are reported in the action normalization h = f * sqrt(m), unit weighted
// norm: these satisfy h o T = lambda h, and for an ergodic system have
// constant modulus.
inline EigenData eigenvalue_set(const KoopmanOperator& U, double tol = 1e-8) {
    const MeasureSpace& sp = U.space();
    EigenData out;

    auto finish_entry = [&](cplx lambda, Eigen::VectorXcd v) {
        EigenPair e;
        e.value = lambda;
        double nv = sp.norm(v);
        if (nv <= 0) return;
        v /= nv;
        Eigen::VectorXcd uv = U.apply(v);
        double res = sp.norm(uv - lambda * v);
        // action presentation
        Eigen::VectorXcd h(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) h[i] = v[i] * std::sqrt(sp.weight(i));
        double nh = sp.norm(h);
        if (nh > 0) h /= nh;
        if (U.map() && !U.map()->is_rotation()) {
            Eigen::VectorXcd hT(h.size());
            for (Eigen::Index i = 0; i < h.size(); ++i)
                hT[i] = h[U.map()->apply_state(static_cast<int>(i))];
            res = std::max(res, sp.norm(hT - lambda * h));
        }
        if (res > tol) return;
        detail::phase_fix(v);
        detail::phase_fix(h);
        double hmax = 0, hmin = 1e300;
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            hmax = std::max(hmax, std::abs(h[i]));
            hmin = std::min(hmin, std::abs(h[i]));
        }
        e.koopman_vector = std::move(v);
        e.eigenfunction = std::move(h);
        e.residual = res;
        e.modulus_ratio = hmin > 0 ? hmax / hmin : 1e300;
        if (U.constants_direction().size() == e.koopman_vector.size()) {
            cplx ov = sp.inner(e.koopman_vector, U.constants_direction());
            e.trivial = std::abs(ov) > 0.5;
        }
        out.entries.push_back(std::move(e));
    };

    if (U.is_diagonal()) {
        for (Eigen::Index i = 0; i < U.dim(); ++i) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(U.dim());
            v[i] = 1.0;
            finish_entry(U.diagonal()[i], std::move(v));
        }
    } else {
        Eigen::MatrixXcd m = U.materialize();
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("eigenvalue_set: eigensolver failed to converge");
        for (Eigen::Index i = 0; i < U.dim(); ++i) {
            cplx lambda = es.eigenvalues()[i];
            if (std::abs(std::abs(lambda) - 1.0) > 1e-6) continue;  // isometry spectrum guard
            finish_entry(lambda, es.eigenvectors().col(i));
        }
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const EigenPair& a, const EigenPair& b) {
        double pa = detail::wrap01(std::arg(a.value) / two_pi);
        double pb = detail::wrap01(std::arg(b.value) / two_pi);
        return pa < pb;
    });
    return out;
}

enum class MultiplierVerdict { Ergodic, NotErgodic };

struct MultiplierWitness {
    cplx lambda_T;
    cplx mu_S;
    Eigen::VectorXcd product_fixed_vector;
    double residual = 0;
};

struct MultiplierResult {
    MultiplierVerdict verdict = MultiplierVerdict::Ergodic;
    std::optional<MultiplierWitness> witness;
    double min_match_distance = 1e300;   // closest e(T) eigenvalue / sigma0(S) atom pair
    // direct oracle: fixed-vector search on the product operator, mean-zero
    MultiplierVerdict oracle_verdict = MultiplierVerdict::Ergodic;
    double oracle_min_residual = 1e300;  // min |U w - w| over candidate mean-zero fixed vectors
    bool oracle_agrees = false;
    bool proper_ergodicity_assumed = true;  // hypothesis flag, not checkable at finite scale
    std::string resolution;
};

namespace detail {

inline std::string space_label(const MeasureSpace& s) {
    if (s.is_fourier()) {
        std::string r = "fourier(K=";
        for (std::size_t i = 0; i < s.cutoffs().size(); ++i)
            r += (i ? "," : "") + std::to_string(s.cutoffs()[i]);
        return r + ")";
    }
    return "points(n=" + std::to_string(s.dim()) + ")";
}

} // namespace detail

// Thm-style decision procedure: T x S is ergodic at this resolution iff no
// non-trivial eigenvalue of T matches an atom of the reduced spectral type
// of S.  S must be measure preserving and ergodic at scale; T ergodic at
// scale (eigenvalue 1 simple).  The verdict is cross-checked by a direct
// fixed-vector search on product_koopman restricted to mean-zero.
inline MultiplierResult multiplier_test(const KoopmanOperator& T, const KoopmanOperator& S,
                                        double match_tol = 1e-9, double fixed_tol = 1e-8) {
    if (S.map() && !S.map()->is_rotation() && !S.map()->measure_preserving(1e-10))
        throw InvalidInput("multiplier_test: S must be measure preserving");

    EigenData eigT = eigenvalue_set(T, 1e-6);
    EigenData eigS = eigenvalue_set(S, 1e-6);

    auto count_fixed = [](const EigenData& e) {
        int k = 0;
        for (const auto& p : e.entries)
            if (std::abs(p.value - 1.0) < 1e-9) ++k;
        return k;
    };
    if (count_fixed(eigT) != 1)
        throw InvalidInput("multiplier_test: T is not ergodic at this scale (eigenvalue 1 not simple)");
    if (count_fixed(eigS) != 1)
        throw InvalidInput("multiplier_test: S is not ergodic at this scale (eigenvalue 1 not simple)");

    MultiplierResult res;
    res.resolution = detail::space_label(T.space()) + " x " + detail::space_label(S.space());

    // sigma0 of the reduced Koopman representation of S excludes the
    // trivial character's atom; matching never uses chi_0 on either side.
    std::vector<const EigenPair*> t_side, s_side;
    for (const auto& p : eigT.entries)
        if (!p.trivial) t_side.push_back(&p);
    for (const auto& p : eigS.entries)
        if (!p.trivial) s_side.push_back(&p);

    const EigenPair* best_t = nullptr;
    const EigenPair* best_s = nullptr;
    for (const auto* pt : t_side)
        for (const auto* ps : s_side) {
            double d = std::abs(pt->value - ps->value);
            if (d < res.min_match_distance) {
                res.min_match_distance = d;
                best_t = pt;
                best_s = ps;
            }
        }

    if (best_t && res.min_match_distance < match_tol) {
        // matched pair: the invariant function of the product is
        // f (x) conj(h); its Koopman vector pairs v_T with the eigenvector
        // of S for the conjugate eigenvalue.
        const EigenPair* conj_s = nullptr;
        double bestd = 1e300;
        for (const auto& p : eigS.entries) {
            double d = std::abs(p.value - std::conj(best_s->value));
            if (d < bestd) { bestd = d; conj_s = &p; }
        }
        if (conj_s && bestd < match_tol) {
            const Eigen::Index nv = S.dim();
            Eigen::VectorXcd w(T.dim() * nv);
            for (Eigen::Index i = 0; i < T.dim(); ++i)
                for (Eigen::Index j = 0; j < nv; ++j)
                    w[i * nv + j] = best_t->koopman_vector[i] * conj_s->koopman_vector[j];
            Eigen::VectorXcd uw = kron_apply(T, S, w);
            MeasureSpace prod = MeasureSpace::product(T.space(), S.space());
            double r = prod.norm(uw - w) / prod.norm(w);
            if (r < fixed_tol) {
                res.verdict = MultiplierVerdict::NotErgodic;
                res.witness = MultiplierWitness{best_t->value, best_s->value, std::move(w), r};
            }
        }
    }

    // Direct oracle: all product eigenpairs u_i (x) v_j from the factor
    // eigendecompositions; residual of each candidate is measured on the
    // actual product operator.
    {
        MeasureSpace prod = MeasureSpace::product(T.space(), S.space());
        const Eigen::Index nv = S.dim();
        for (const auto& pt : eigT.entries)
            for (const auto& ps : eigS.entries) {
                if (pt.trivial && ps.trivial) continue;  // the constant function
                double quick = std::abs(pt.value * ps.value - 1.0);
                if (quick > res.oracle_min_residual + 0.5) continue;
                Eigen::VectorXcd w(T.dim() * nv);
                for (Eigen::Index i = 0; i < T.dim(); ++i)
                    for (Eigen::Index j = 0; j < nv; ++j)
                        w[i * nv + j] = pt.koopman_vector[i] * ps.koopman_vector[j];
                double nrm = prod.norm(w);
                if (nrm <= 0) continue;
                Eigen::VectorXcd uw = kron_apply(T, S, w);
                double r = prod.norm(uw - w) / nrm;
                res.oracle_min_residual = std::min(res.oracle_min_residual, r);
            }
        res.oracle_verdict = res.oracle_min_residual < fixed_tol ? MultiplierVerdict::NotErgodic
                                                                 : MultiplierVerdict::Ergodic;
    }
    res.oracle_agrees = (res.oracle_verdict == res.verdict);
    return res;
}

} // namespace ergolab
