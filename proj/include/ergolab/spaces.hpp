#pragma once

// Finite models of measure spaces, non-singular maps with their
// Radon-Nikodym weights, and the Koopman isometry
//
//   (U_T f)(x) = sqrt(d(m o T)/dm)(x) * f(Tx)
//
// Two exact models are provided.  A PointSpace is n states with
// probability weights; irrational rotations are represented in Fourier
// modes (state space = the mode lattice |k_i| <= K_i), where the rotation
// Koopman operator is exactly diagonal.  Mode cutoffs are hard
// truncations; verdicts downstream are reported "at resolution K".

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/groups.hpp"

namespace ergolab {

class MeasureSpace {
public:
    enum class Model { FourierTorus, PointSpace, Product };

    static MeasureSpace fourier_torus(int d, int K) {
        if (d < 1 || K < 1) throw InvalidInput("fourier_torus: need d >= 1, K >= 1");
        return fourier_torus(std::vector<int>(static_cast<std::size_t>(d), K));
    }
    static MeasureSpace fourier_torus(std::vector<int> cutoffs) {
        MeasureSpace s;
        s.model_ = Model::FourierTorus;
        s.cutoffs_ = std::move(cutoffs);
        std::size_t n = 1;
        for (int K : s.cutoffs_) {
            if (K < 1) throw InvalidInput("fourier_torus: cutoffs must be >= 1");
            n *= static_cast<std::size_t>(2 * K + 1);
            check_size_cap(n, "fourier_torus");
        }
        s.w_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
        return s;
    }
    static MeasureSpace point_space(Eigen::VectorXd weights) {
        if (weights.size() == 0) throw InvalidInput("point_space: empty weight vector");
        check_size_cap(static_cast<std::size_t>(weights.size()), "point_space");
        double total = 0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0) throw InvalidInput("point_space: negative weight");
            total += weights[i];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw InvalidInput("point_space: weights must sum to 1");
        MeasureSpace s;
        s.model_ = Model::PointSpace;
        s.w_ = std::move(weights);
        return s;
    }
    static MeasureSpace product(const MeasureSpace& a, const MeasureSpace& b) {
        MeasureSpace s;
        if (a.model_ == Model::FourierTorus && b.model_ == Model::FourierTorus) {
            std::vector<int> ks = a.cutoffs_;
            ks.insert(ks.end(), b.cutoffs_.begin(), b.cutoffs_.end());
            return fourier_torus(std::move(ks));
        }
        s.model_ = (a.model_ == Model::PointSpace && b.model_ == Model::PointSpace)
                       ? Model::PointSpace
                       : Model::Product;
        check_size_cap(static_cast<std::size_t>(a.dim()) * static_cast<std::size_t>(b.dim()),
                       "product space");
        s.w_ = Eigen::VectorXd(a.dim() * b.dim());
        for (Eigen::Index i = 0; i < a.dim(); ++i)
            for (Eigen::Index j = 0; j < b.dim(); ++j)
                s.w_[i * b.dim() + j] = a.w_[i] * b.w_[j];
        return s;
    }

    Model model() const { return model_; }
    Eigen::Index dim() const { return w_.size(); }
    const Eigen::VectorXd& weights() const { return w_; }
    double weight(Eigen::Index i) const { return w_[i]; }
    const std::vector<int>& cutoffs() const { return cutoffs_; }

    bool is_fourier() const { return model_ == Model::FourierTorus; }

    // Fourier mode bookkeeping: index <-> integer tuple, lexicographic with
    // the first coordinate slowest.  Mode 0 is always present.
    std::vector<int> mode_of(Eigen::Index idx) const {
        std::vector<int> k(cutoffs_.size());
        for (std::size_t d = cutoffs_.size(); d-- > 0;) {
            int span = 2 * cutoffs_[d] + 1;
            k[d] = static_cast<int>(idx % span) - cutoffs_[d];
            idx /= span;
        }
        return k;
    }
    Eigen::Index index_of_mode(const std::vector<int>& k) const {
        if (k.size() != cutoffs_.size()) throw InvalidInput("index_of_mode: dimension mismatch");
        Eigen::Index idx = 0;
        for (std::size_t d = 0; d < k.size(); ++d) {
            if (std::abs(k[d]) > cutoffs_[d]) throw InvalidInput("index_of_mode: mode outside cutoff");
            idx = idx * (2 * cutoffs_[d] + 1) + (k[d] + cutoffs_[d]);
        }
        return idx;
    }
    Eigen::Index zero_mode_index() const {
        return index_of_mode(std::vector<int>(cutoffs_.size(), 0));
    }

    // <f, g> = sum_i f_i conj(g_i) w_i
    cplx inner(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) const {
        return g.dot(f.cwiseProduct(w_.cast<cplx>()));
    }
    double norm(const Eigen::VectorXcd& f) const {
        return std::sqrt((f.cwiseAbs2().cwiseProduct(w_)).sum());
    }

private:
    Model model_ = Model::PointSpace;
    Eigen::VectorXd w_;
    std::vector<int> cutoffs_;
};

// A non-singular self-map of a finite model: a state permutation together
// with the per-state Radon-Nikodym weight d(m o T)/dm, or a mode rotation
// on a Fourier model (which is measure preserving, rn = 1).
class NonSingularMap {
public:
    static NonSingularMap permutation(const MeasureSpace& space, std::vector<int> perm) {
        if (static_cast<Eigen::Index>(perm.size()) != space.dim())
            throw InvalidInput("NonSingularMap: permutation size mismatch");
        std::vector<char> seen(perm.size(), 0);
        for (int p : perm) {
            if (p < 0 || p >= static_cast<int>(perm.size()) || seen[static_cast<std::size_t>(p)])
                throw InvalidInput("NonSingularMap: not a permutation");
            seen[static_cast<std::size_t>(p)] = 1;
        }
        NonSingularMap m;
        m.space_ = space;
        m.perm_ = std::move(perm);
        m.rn_ = Eigen::VectorXd(space.dim());
        for (Eigen::Index i = 0; i < space.dim(); ++i) {
            double mi = space.weight(i);
            double mt = space.weight(m.perm_[static_cast<std::size_t>(i)]);
            if (mi <= 0 || mt <= 0)
                throw InvalidInput("NonSingularMap: zero-weight state breaks non-singularity");
            m.rn_[i] = mt / mi;
        }
        return m;
    }

    static NonSingularMap mode_rotation(const MeasureSpace& space, std::vector<double> angles) {
        if (!space.is_fourier()) throw InvalidInput("mode_rotation: needs a Fourier model");
        if (angles.size() != space.cutoffs().size())
            throw InvalidInput("mode_rotation: angle count must match dimension");
        NonSingularMap m;
        m.space_ = space;
        m.rotation_ = true;
        m.angles_ = std::move(angles);
        m.rn_ = Eigen::VectorXd::Ones(space.dim());
        return m;
    }

    const MeasureSpace& space() const { return *space_; }
    bool is_rotation() const { return rotation_; }
    const std::vector<double>& angles() const { return angles_; }
    const std::vector<int>& perm() const { return perm_; }
    const Eigen::VectorXd& rn_weight() const { return rn_; }
    bool measure_preserving(double tol = 1e-12) const {
        return (rn_.array() - 1.0).abs().maxCoeff() <= tol;
    }

    int apply_state(int i) const {
        if (rotation_) throw InvalidInput("apply_state: rotation maps act on modes, not states");
        return perm_[static_cast<std::size_t>(i)];
    }

private:
    std::optional<MeasureSpace> space_;
    std::vector<int> perm_;
    Eigen::VectorXd rn_;
    std::vector<double> angles_;
    bool rotation_ = false;
};

// The matrix of U_T over the model's basis.  Rotations and their products
// are stored as scaled permutations (scale_i * f[perm[i]]), which keeps
// diagonal operators diagonal and tensor products cheap; anything else is
// a dense matrix.
class KoopmanOperator {
public:
    static KoopmanOperator scaled_permutation(MeasureSpace space, std::vector<int> perm,
                                              Eigen::VectorXcd scale) {
        KoopmanOperator u;
        u.space_ = std::move(space);
        u.perm_ = std::move(perm);
        u.scale_ = std::move(scale);
        u.dense_ = false;
        return u;
    }
    static KoopmanOperator dense(MeasureSpace space, Eigen::MatrixXcd m) {
        KoopmanOperator u;
        u.space_ = std::move(space);
        u.mat_ = std::move(m);
        u.dense_ = true;
        return u;
    }

    const MeasureSpace& space() const { return *space_; }
    Eigen::Index dim() const { return space_->dim(); }
    bool is_dense() const { return dense_; }
    const std::vector<int>& perm() const { return perm_; }
    const Eigen::VectorXcd& scale() const { return scale_; }
    bool is_diagonal() const {
        if (dense_) return false;
        for (std::size_t i = 0; i < perm_.size(); ++i)
            if (perm_[i] != static_cast<int>(i)) return false;
        return true;
    }
    const Eigen::VectorXcd& diagonal() const {
        if (!is_diagonal()) throw InvalidInput("diagonal(): operator is not diagonal");
        return scale_;
    }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const {
        if (f.size() != dim()) throw InvalidInput("KoopmanOperator::apply: size mismatch");
        if (dense_) return mat_ * f;
        Eigen::VectorXcd out(dim());
        for (Eigen::Index i = 0; i < dim(); ++i)
            out[i] = scale_[i] * f[perm_[static_cast<std::size_t>(i)]];
        return out;
    }

    Eigen::MatrixXcd materialize() const {
        if (dense_) return mat_;
        if (dim() > 4096)
            throw SizeCapExceeded("materialize: operator too large for a dense matrix");
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim(), dim());
        for (Eigen::Index i = 0; i < dim(); ++i)
            m(i, perm_[static_cast<std::size_t>(i)]) = scale_[i];
        return m;
    }

    // Unit vector spanning the trivial fixed direction (the constant
    // function, in Koopman coordinates).
    const Eigen::VectorXcd& constants_direction() const { return const_dir_; }
    void set_constants_direction(Eigen::VectorXcd v) {
        const_dir_ = std::move(v);
        double n = const_dir_.norm() > 0 ? space_->norm(const_dir_) : 0.0;
        if (n > 0) const_dir_ /= n;
    }

    const std::optional<NonSingularMap>& map() const { return map_; }
    void set_map(NonSingularMap m) { map_ = std::move(m); }

    double isometry_defect(const Eigen::VectorXcd& f) const {
        return std::abs(space_->norm(apply(f)) - space_->norm(f));
    }

private:
    std::optional<MeasureSpace> space_;
    std::vector<int> perm_;
    Eigen::VectorXcd scale_;
    Eigen::MatrixXcd mat_;
    bool dense_ = false;
    Eigen::VectorXcd const_dir_;
    std::optional<NonSingularMap> map_;
};

// Rotation by `angles` on T^d, realized on the mode lattice |k_i| <= K.
// The operator is diagonal with entry exp(2 pi i <k, angles>) at mode k.
inline std::pair<MeasureSpace, KoopmanOperator> build_fourier_rotation(
    int d, int K, const std::vector<double>& angles) {
    if (static_cast<int>(angles.size()) != d)
        throw InvalidInput("build_fourier_rotation: need one angle per dimension");
    MeasureSpace space = MeasureSpace::fourier_torus(d, K);
    Eigen::VectorXcd diag(space.dim());
    for (Eigen::Index i = 0; i < space.dim(); ++i) {
        std::vector<int> k = space.mode_of(i);
        double phase = 0;
        for (int t = 0; t < d; ++t) phase += k[static_cast<std::size_t>(t)] * angles[static_cast<std::size_t>(t)];
        diag[i] = std::polar(1.0, two_pi * phase);
    }
    std::vector<int> id(static_cast<std::size_t>(space.dim()));
    std::iota(id.begin(), id.end(), 0);
    KoopmanOperator u = KoopmanOperator::scaled_permutation(space, std::move(id), std::move(diag));
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(space.dim());
    c[space.zero_mode_index()] = 1.0;
    u.set_constants_direction(std::move(c));
    u.set_map(NonSingularMap::mode_rotation(space, angles));
    return {space, u};
}

// n-bit adding machine under the (p, 1-p) product measure: states are the
// integers 0..2^n-1 (bit j of x is the j-th coordinate), T(x) = x+1 mod 2^n
// (a single 2^n-cycle), and rn(x) = m(Tx)/m(x).
inline std::pair<MeasureSpace, NonSingularMap> build_odometer(int n_bits, double p) {
    if (n_bits < 2 || n_bits > 20) throw InvalidInput("build_odometer: bits must be in [2, 20]");
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("build_odometer: p must be in (0, 1)");
    const std::size_t n = std::size_t{1} << n_bits;
    check_size_cap(n, "build_odometer");
    Eigen::VectorXd m(static_cast<Eigen::Index>(n));
    for (std::size_t x = 0; x < n; ++x) {
        double w = 1.0;
        for (int j = 0; j < n_bits; ++j) w *= ((x >> j) & 1u) ? (1.0 - p) : p;
        m[static_cast<Eigen::Index>(x)] = w;
    }
    m /= m.sum();
    MeasureSpace space = MeasureSpace::point_space(std::move(m));
    std::vector<int> perm(n);
    for (std::size_t x = 0; x < n; ++x) perm[x] = static_cast<int>((x + 1) % n);
    return {space, NonSingularMap::permutation(space, std::move(perm))};
}

// (U f)(x) = sqrt(rn(x)) f(Tx)
inline KoopmanOperator koopman_of(const NonSingularMap& map) {
    const MeasureSpace& space = map.space();
    if (map.is_rotation()) {
        auto [s, u] = build_fourier_rotation(static_cast<int>(space.cutoffs().size()),
                                             space.cutoffs()[0], map.angles());
        return u;
    }
    Eigen::VectorXcd scale(space.dim());
    for (Eigen::Index i = 0; i < space.dim(); ++i) {
        double w = map.rn_weight()[i];
        if (!(w > 0) || !std::isfinite(w))
            throw NumericalFailure("koopman_of: non-singularity violation (rn weight not positive)");
        scale[i] = std::sqrt(w);
    }
    KoopmanOperator u = KoopmanOperator::scaled_permutation(
        space, std::vector<int>(map.perm()), std::move(scale));
    // U is fixed on c/sqrt(m); that vector is the constant function once the
    // sqrt(rn) factor is unwound.
    Eigen::VectorXcd c(space.dim());
    for (Eigen::Index i = 0; i < space.dim(); ++i) c[i] = 1.0 / std::sqrt(space.weight(i));
    u.set_constants_direction(std::move(c));
    u.set_map(map);
    return u;
}

// Tensor (Kronecker) product of two Koopman operators; the product system
// operator of T x S.  Index convention: (i, j) -> i * dimS + j.
inline KoopmanOperator product_koopman(const KoopmanOperator& U, const KoopmanOperator& V) {
    MeasureSpace space = MeasureSpace::product(U.space(), V.space());
    const Eigen::Index nu = U.dim(), nv = V.dim();
    check_size_cap(static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv), "product_koopman");

    KoopmanOperator out = [&] {
        if (!U.is_dense() && !V.is_dense()) {
            std::vector<int> perm(static_cast<std::size_t>(nu * nv));
            Eigen::VectorXcd scale(nu * nv);
            for (Eigen::Index i = 0; i < nu; ++i)
                for (Eigen::Index j = 0; j < nv; ++j) {
                    Eigen::Index idx = i * nv + j;
                    perm[static_cast<std::size_t>(idx)] =
                        U.perm()[static_cast<std::size_t>(i)] * static_cast<int>(nv) +
                        V.perm()[static_cast<std::size_t>(j)];
                    scale[idx] = U.scale()[i] * V.scale()[j];
                }
            return KoopmanOperator::scaled_permutation(space, std::move(perm), std::move(scale));
        }
        if (static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv) > 4096)
            throw SizeCapExceeded("product_koopman: dense product too large");
        Eigen::MatrixXcd a = U.materialize(), b = V.materialize();
        Eigen::MatrixXcd m(nu * nv, nu * nv);
        for (Eigen::Index i = 0; i < nu; ++i)
            for (Eigen::Index k = 0; k < nu; ++k)
                m.block(i * nv, k * nv, nv, nv) = a(i, k) * b;
        return KoopmanOperator::dense(space, std::move(m));
    }();

    if (U.constants_direction().size() == nu && V.constants_direction().size() == nv) {
        Eigen::VectorXcd c(nu * nv);
        for (Eigen::Index i = 0; i < nu; ++i)
            for (Eigen::Index j = 0; j < nv; ++j)
                c[i * nv + j] = U.constants_direction()[i] * V.constants_direction()[j];
        out.set_constants_direction(std::move(c));
    }
    return out;
}

// Applies U (x) V to a product-space vector without materializing the
// Kronecker matrix.
inline Eigen::VectorXcd kron_apply(const KoopmanOperator& U, const KoopmanOperator& V,
                                   const Eigen::VectorXcd& f) {
    const Eigen::Index nu = U.dim(), nv = V.dim();
    if (f.size() != nu * nv) throw InvalidInput("kron_apply: size mismatch");
    Eigen::VectorXcd out(nu * nv);
    // Apply V along each i-slice, then U across slices.
    Eigen::MatrixXcd slices(nv, nu);
    for (Eigen::Index i = 0; i < nu; ++i)
        slices.col(i) = V.apply(f.segment(i * nv, nv));
    for (Eigen::Index j = 0; j < nv; ++j) {
        Eigen::VectorXcd row = slices.row(j).transpose();
        Eigen::VectorXcd urow = U.apply(row);
        for (Eigen::Index i = 0; i < nu; ++i) out[i * nv + j] = urow[i];
    }
    return out;
}

} // namespace ergolab
