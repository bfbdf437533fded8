#pragma once

#include <functional>
#include <vector>

#include "tensor_space.hpp"

namespace iklab {

// Radical-inverse (Halton) coordinate of `index` in `base`.
inline double halton(std::uint64_t index, unsigned base)
{
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

inline unsigned nth_prime(int n)
{
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    if (n < 0 || n >= static_cast<int>(std::size(primes))) throw InvalidInput("halton: dimension too large");
    return primes[n];
}

struct LMOptions {
    int max_iterations = 200;
    double fd_step = 1e-7;
    double target = 1e-14;     // stop when ‖r‖ falls below
    double max_abs_real = 40.0;  // abandon when a coordinate runs off
    int stall_iteration = 60;    // abandon if still above stall_residual here
    double stall_residual = 1e-3;
};

struct LMResult {
    std::vector<cplx> x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool finite = false;
};

using ResidualFn = std::function<Vec(const std::vector<cplx>&)>;

// Levenberg–Marquardt for a holomorphic residual vector in complex unknowns;
// the Jacobian comes from central differences along the real axis.
inline LMResult levenberg_marquardt(const ResidualFn& f, std::vector<cplx> x, const LMOptions& o = {})
{
    const auto n = static_cast<Eigen::Index>(x.size());
    auto finite_vec = [](const Vec& v) { return v.allFinite(); };
    LMResult res;
    Vec r = f(x);
    if (!finite_vec(r)) return res;
    double cost = r.norm();
    double mu = 1e-3;
    for (int it = 0; it < o.max_iterations; ++it) {
        res.iterations = it + 1;
        if (cost < o.target) break;
        Mat J(r.size(), n);
        bool ok = true;
        for (Eigen::Index k = 0; k < n && ok; ++k) {
            const double h = o.fd_step * (1.0 + std::abs(x[static_cast<std::size_t>(k)]));
            auto xp = x, xm = x;
            xp[static_cast<std::size_t>(k)] += h;
            xm[static_cast<std::size_t>(k)] -= h;
            const Vec fp = f(xp), fm = f(xm);
            ok = finite_vec(fp) && finite_vec(fm);
            if (ok) J.col(k) = (fp - fm) / (2.0 * h);
        }
        if (!ok) break;
        const Mat JhJ = J.adjoint() * J;
        const Vec g = J.adjoint() * r;
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            Mat A = JhJ;
            for (Eigen::Index k = 0; k < n; ++k) A(k, k) += mu * (JhJ(k, k).real() + 1e-12);
            const Vec step = A.partialPivLu().solve(-g);
            auto xn = x;
            for (Eigen::Index k = 0; k < n; ++k) xn[static_cast<std::size_t>(k)] += step(k);
            const Vec rn = f(xn);
            if (finite_vec(rn) && rn.norm() < cost) {
                x = std::move(xn);
                r = rn;
                const double gain = cost - rn.norm();
                cost = rn.norm();
                mu = std::max(mu / 3.0, 1e-12);
                improved = true;
                if (gain < 1e-15 * cost) it = o.max_iterations;  // stalled
                break;
            }
            mu *= 4.0;
        }
        if (!improved) break;
        bool runaway = false;
        for (const cplx& z : x) runaway = runaway || std::abs(z.real()) > o.max_abs_real;
        if (runaway) break;
        if (it + 1 == o.stall_iteration && cost > o.stall_residual) break;
    }
    res.x = std::move(x);
    res.residual = cost;
    res.finite = std::isfinite(cost);
    return res;
}

}  // namespace iklab
