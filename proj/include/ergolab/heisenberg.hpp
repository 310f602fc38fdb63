#pragma once

// Explicit representations of H3(R).  The scalar family
//   pi_{alpha,beta}(M(a,b,c)) z = e^{i(alpha a + beta b)} z
// ignores the center; the infinite-dimensional family acts on L2(R) by
//   [pi_gamma(M(a,b,c)) f](t) = e^{i gamma (c + b t)} f(t + a)
// and is realized here on a symmetric uniform grid with zero padding.
// Translations are snapped to the grid, which keeps the action exactly
// norm preserving on interior mass; the shifted-out mass is tracked.
//
// The rigidity sequence g_n = M(0, 0, 2 pi n + 1/n) is pure central phase,
// so r_n = |pi_gamma(g_n) f - f| = |e^{i gamma (2 pi n + 1/n)} - 1| |f| is
// computed with the phase reduced mod 2 pi before any trigonometry.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/groups.hpp"

namespace ergolab {

struct LineGrid {
    double L = 12.0;
    double step = 0.01;
    int size = 0;

    LineGrid(double half_width, double s) : L(half_width), step(s) {
        if (!(s > 0) || !(half_width > 0)) throw InvalidInput("LineGrid: need positive L and step");
        long long m = std::llround(half_width / s);
        if (std::abs(half_width - static_cast<double>(m) * s) > 1e-9)
            throw InvalidInput("LineGrid: L must be an integer multiple of step");
        size = static_cast<int>(2 * m + 1);
        check_size_cap(static_cast<std::size_t>(size), "LineGrid");
    }

    double t(int k) const { return (-L) + k * step; }
    double norm(const Eigen::VectorXcd& f) const { return std::sqrt(f.squaredNorm() * step); }
    cplx inner(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) const {
        return g.dot(f) * step;
    }
};

// pi_{alpha,beta}(M(a,b,c)) = e^{i(alpha a + beta b)}; c drops out.
inline cplx heis_rep_scalar(double alpha, double beta, const GroupElement& g) {
    if (g.kind() != GroupKind::Heisenberg)
        throw InvalidInput("heis_rep_scalar: expected a Heisenberg element");
    return std::polar(1.0, alpha * g.a() + beta * g.b());
}

class L2LineRep {
public:
    L2LineRep(double gamma, LineGrid grid) : gamma_(gamma), grid_(grid) {
        if (gamma == 0) throw InvalidInput("L2LineRep: gamma must be nonzero");
    }

    double gamma() const { return gamma_; }
    const LineGrid& grid() const { return grid_; }

    double nearest_valid_a(double a) const { return std::round(a / grid_.step) * grid_.step; }

    // output(t) = e^{i gamma (c + b t)} f(t + a), zero beyond the grid
    Eigen::VectorXcd apply(const GroupElement& g, const Eigen::VectorXcd& f,
                           double* boundary_loss = nullptr) const {
        if (g.kind() != GroupKind::Heisenberg)
            throw InvalidInput("L2LineRep: expected a Heisenberg element");
        if (f.size() != grid_.size) throw InvalidInput("L2LineRep: grid size mismatch");
        double sh = g.a() / grid_.step;
        long long shift = std::llround(sh);
        if (std::abs(sh - static_cast<double>(shift)) > 1e-9)
            throw InvalidInput("L2LineRep: translation " + std::to_string(g.a()) +
                               " is off-grid; nearest valid a = " +
                               std::to_string(nearest_valid_a(g.a())));
        Eigen::VectorXcd out(grid_.size);
        double lost = 0;
        for (int k = 0; k < grid_.size; ++k) {
            long long src = k + shift;
            if (src < 0 || src >= grid_.size) {
                out[k] = 0;
            } else {
                out[k] = std::polar(1.0, gamma_ * (g.c() + g.b() * grid_.t(k))) * f[src];
            }
        }
        for (int k = 0; k < grid_.size; ++k) {
            long long dst = k - shift;
            if (dst < 0 || dst >= grid_.size) lost += std::norm(f[k]) * grid_.step;
        }
        if (boundary_loss) *boundary_loss = lost;
        return out;
    }

    cplx coefficient(const GroupElement& g, const Eigen::VectorXcd& f1,
                     const Eigen::VectorXcd& f2) const {
        return grid_.inner(apply(g, f1), f2);
    }

private:
    double gamma_;
    LineGrid grid_;
};

inline GroupElement rigidity_element(int n) {
    if (n == 0) throw InvalidInput("rigidity_element: n must be nonzero");
    return GroupElement::heisenberg(0, 0, two_pi * n + 1.0 / n);
}

// gamma * (2 pi n + 1/n) mod 2 pi, reduced analytically: the 2 pi gamma n
// part contributes only through the fractional part of gamma * n.
inline double rigidity_phase(double gamma, int n) {
    double gn = gamma * static_cast<double>(n);
    double frac = gn - std::floor(gn);
    return two_pi * frac + gamma / static_cast<double>(n);
}

// r_n = |pi_gamma(g_n) f - f| = |e^{i gamma (2 pi n + 1/n)} - 1| * |f|.
// Pure central phase: no translation, no boundary loss, r_n -> 0 at gamma=1.
inline std::vector<double> rigidity_profile(double gamma, double f_norm, int n_max) {
    if (f_norm < 0) throw InvalidInput("rigidity_profile: negative norm");
    std::vector<double> r;
    r.reserve(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        cplx phase = std::polar(1.0, rigidity_phase(gamma, n));
        r.push_back(std::abs(phase - 1.0) * f_norm);
    }
    return r;
}

inline std::vector<double> rigidity_profile(const L2LineRep& rep, const Eigen::VectorXcd& f,
                                            int n_max) {
    return rigidity_profile(rep.gamma(), rep.grid().norm(f), n_max);
}

// Mean over the window of |<pi_gamma(g) f1, f2>|.  The modulus kills the
// central phase, so the mean is exactly invariant in c.
inline double weak_mixing_mean(const L2LineRep& rep, const Eigen::VectorXcd& f1,
                               const Eigen::VectorXcd& f2, const FolnerWindow& window) {
    if (window.kind != GroupKind::Heisenberg)
        throw InvalidInput("weak_mixing_mean: expected a Heisenberg window");
    double acc = 0;
    for (const auto& g : window.sample)
        acc += std::abs(rep.coefficient(g, f1, f2));
    return acc / static_cast<double>(window.sample.size());
}

// Unit-norm Gaussian test vector f(t) = pi^{-1/4} e^{-t^2/2}; satisfies
// |<f(.+a), f>| = e^{-a^2/4}.
inline Eigen::VectorXcd gaussian_vector(const LineGrid& grid) {
    Eigen::VectorXcd f(grid.size);
    const double c = std::pow(M_PI, -0.25);
    for (int k = 0; k < grid.size; ++k) {
        double t = grid.t(k);
        f[k] = c * std::exp(-0.5 * t * t);
    }
    return f;
}

} // namespace ergolab
