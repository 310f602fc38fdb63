#pragma once

// Group elements for the four supported groups (Z^d, T^d, R^d, H3(R)),
// characters of the abelian ones, and Folner boxes used to approximate
// the invariant mean by growing symmetric averages.
//
// Heisenberg elements are the unipotent matrices M(a,b,c) with group law
//   M(a,b,c) * M(a',b',c') = M(a+a', b+b', c+c'+a*b')
// so the identity is M(0,0,0) and M(a,b,c)^{-1} = M(-a,-b,ab-c).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

enum class GroupKind { IntLattice, Torus, RealVector, Heisenberg };

inline std::string to_string(GroupKind k) {
    switch (k) {
        case GroupKind::IntLattice: return "int_lattice";
        case GroupKind::Torus: return "torus";
        case GroupKind::RealVector: return "real_vector";
        case GroupKind::Heisenberg: return "heisenberg";
    }
    return "?";
}

namespace detail {
inline double wrap01(double x) {
    double r = x - std::floor(x);
    return (r >= 1.0) ? 0.0 : r;
}
} // namespace detail

class GroupElement {
public:
    static GroupElement lattice(std::vector<double> coords) {
        for (double& c : coords) c = std::round(c);
        return GroupElement(GroupKind::IntLattice, std::move(coords));
    }
    static GroupElement torus(std::vector<double> coords) {
        for (double& c : coords) c = detail::wrap01(c);
        return GroupElement(GroupKind::Torus, std::move(coords));
    }
    static GroupElement real_vector(std::vector<double> coords) {
        return GroupElement(GroupKind::RealVector, std::move(coords));
    }
    static GroupElement heisenberg(double a, double b, double c) {
        return GroupElement(GroupKind::Heisenberg, {a, b, c});
    }
    static GroupElement identity(GroupKind kind, int dim = 1) {
        if (kind == GroupKind::Heisenberg) return heisenberg(0, 0, 0);
        return GroupElement(kind, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    }

    GroupKind kind() const { return kind_; }
    int dim() const { return static_cast<int>(c_.size()); }
    const std::vector<double>& coords() const { return c_; }
    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }

    // Heisenberg coordinate accessors
    double a() const { return c_[0]; }
    double b() const { return c_[1]; }
    double c() const { return c_[2]; }

private:
    GroupElement(GroupKind kind, std::vector<double> coords)
        : kind_(kind), c_(std::move(coords)) {}

    GroupKind kind_;
    std::vector<double> c_;
};

inline GroupElement compose(const GroupElement& g, const GroupElement& h) {
    if (g.kind() != h.kind() || g.dim() != h.dim())
        throw InvalidInput("compose: group kind/dimension mismatch");
    switch (g.kind()) {
        case GroupKind::IntLattice: {
            std::vector<double> r(g.coords());
            for (int i = 0; i < g.dim(); ++i) r[static_cast<std::size_t>(i)] += h[i];
            return GroupElement::lattice(std::move(r));
        }
        case GroupKind::Torus: {
            std::vector<double> r(g.coords());
            for (int i = 0; i < g.dim(); ++i)
                r[static_cast<std::size_t>(i)] = detail::wrap01(r[static_cast<std::size_t>(i)] + h[i]);
            return GroupElement::torus(std::move(r));
        }
        case GroupKind::RealVector: {
            std::vector<double> r(g.coords());
            for (int i = 0; i < g.dim(); ++i) r[static_cast<std::size_t>(i)] += h[i];
            return GroupElement::real_vector(std::move(r));
        }
        case GroupKind::Heisenberg:
            return GroupElement::heisenberg(g.a() + h.a(), g.b() + h.b(),
                                            g.c() + h.c() + g.a() * h.b());
    }
    throw InvalidInput("compose: unknown group kind");
}

inline GroupElement inverse(const GroupElement& g) {
    switch (g.kind()) {
        case GroupKind::Heisenberg:
            return GroupElement::heisenberg(-g.a(), -g.b(), g.a() * g.b() - g.c());
        case GroupKind::Torus: {
            std::vector<double> r(g.coords());
            for (double& x : r) x = detail::wrap01(-x);
            return GroupElement::torus(std::move(r));
        }
        default: {
            std::vector<double> r(g.coords());
            for (double& x : r) x = -x;
            return (g.kind() == GroupKind::IntLattice) ? GroupElement::lattice(std::move(r))
                                                       : GroupElement::real_vector(std::move(r));
        }
    }
}

inline double element_distance(const GroupElement& g, const GroupElement& h) {
    if (g.kind() != h.kind() || g.dim() != h.dim()) return 1e300;
    double s = 0;
    for (int i = 0; i < g.dim(); ++i) {
        double d = g[i] - h[i];
        if (g.kind() == GroupKind::Torus) {
            d = std::abs(d);
            d = std::min(d, 1.0 - d);
        }
        s += d * d;
    }
    return std::sqrt(s);
}

// chi(g) = exp(2 pi i <frequency, g>).  Frequencies pair with torus
// coordinates (then they must be integers, or chi is not well defined
// mod 1), with lattice points, or with real vectors.
class Character {
public:
    explicit Character(std::vector<double> frequency) : freq_(std::move(frequency)) {
        if (freq_.empty()) throw InvalidInput("Character: empty frequency vector");
    }

    int dim() const { return static_cast<int>(freq_.size()); }
    const std::vector<double>& frequency() const { return freq_; }

    cplx eval(const GroupElement& g) const {
        if (g.kind() == GroupKind::Heisenberg)
            throw InvalidInput("Character: Heisenberg group is not abelian; use the scalar representation");
        if (g.dim() != dim())
            throw InvalidInput("Character: pairing dimension mismatch");
        if (g.kind() == GroupKind::Torus) {
            for (double f : freq_)
                if (std::abs(f - std::round(f)) > 1e-12)
                    throw InvalidInput("Character: torus characters need integer frequencies");
        }
        double phase = 0;
        for (int i = 0; i < dim(); ++i) phase += freq_[static_cast<std::size_t>(i)] * g[i];
        return std::polar(1.0, two_pi * phase);
    }

private:
    std::vector<double> freq_;
};

inline cplx character_eval(const Character& chi, const GroupElement& g) { return chi.eval(g); }

struct FolnerWindow {
    GroupKind kind = GroupKind::IntLattice;
    int radius = 1;
    double step = 1.0;
    std::vector<GroupElement> sample;
};

// Symmetric box sample of radius N.  Lattice boxes are exact; continuous
// groups are snapped to the declared step.  The Heisenberg box is taken in
// exponential coordinates (a, b, z) with c = z + ab/2, which makes the grid
// closed under inversion: (a,b,z)^{-1} corresponds to (-a,-b,-z).
inline FolnerWindow folner_box(GroupKind kind, int N, double step = 1.0, int dim = 1) {
    if (N < 1) throw InvalidInput("folner_box: radius must be >= 1");
    if (kind != GroupKind::IntLattice && step <= 0)
        throw InvalidInput("folner_box: continuous kinds need a positive step");
    if (dim < 1) throw InvalidInput("folner_box: dimension must be >= 1");

    FolnerWindow w;
    w.kind = kind;
    w.radius = N;
    w.step = (kind == GroupKind::IntLattice) ? 1.0 : step;

    auto axis_values = [&]() {
        std::vector<double> v;
        if (kind == GroupKind::IntLattice) {
            for (int k = -N; k <= N; ++k) v.push_back(static_cast<double>(k));
        } else {
            int K = static_cast<int>(std::llround(static_cast<double>(N) / step));
            if (K < 1) K = 1;
            for (int k = -K; k <= K; ++k) v.push_back(k * step);
        }
        return v;
    };

    if (kind == GroupKind::Heisenberg) {
        std::vector<double> ax = axis_values();
        check_size_cap(ax.size() * ax.size() * ax.size(), "folner_box(heisenberg)");
        for (double a : ax)
            for (double b : ax)
                for (double z : ax)
                    w.sample.push_back(GroupElement::heisenberg(a, b, z + 0.5 * a * b));
        return w;
    }

    if (kind == GroupKind::Torus) {
        long m = std::llround(1.0 / step);
        if (m < 1) m = 1;
        int K = static_cast<int>(std::llround(static_cast<double>(N) / step));
        std::vector<double> ax;
        if (2 * K + 1 >= m) {
            for (long k = 0; k < m; ++k) ax.push_back(detail::wrap01(static_cast<double>(k) / static_cast<double>(m)));
        } else {
            for (int k = -K; k <= K; ++k) ax.push_back(detail::wrap01(k * (1.0 / static_cast<double>(m))));
        }
        std::vector<std::vector<double>> tuples{{}};
        for (int d = 0; d < dim; ++d) {
            std::vector<std::vector<double>> next;
            for (const auto& t : tuples)
                for (double x : ax) {
                    auto u = t;
                    u.push_back(x);
                    next.push_back(std::move(u));
                }
            tuples = std::move(next);
            check_size_cap(tuples.size(), "folner_box(torus)");
        }
        for (auto& t : tuples) w.sample.push_back(GroupElement::torus(std::move(t)));
        return w;
    }

    std::vector<double> ax = axis_values();
    std::vector<std::vector<double>> tuples{{}};
    for (int d = 0; d < dim; ++d) {
        std::vector<std::vector<double>> next;
        for (const auto& t : tuples)
            for (double x : ax) {
                auto u = t;
                u.push_back(x);
                next.push_back(std::move(u));
            }
        tuples = std::move(next);
        check_size_cap(tuples.size(), "folner_box");
    }
    for (auto& t : tuples)
        w.sample.push_back(kind == GroupKind::IntLattice ? GroupElement::lattice(std::move(t))
                                                         : GroupElement::real_vector(std::move(t)));
    return w;
}

} // namespace ergolab
