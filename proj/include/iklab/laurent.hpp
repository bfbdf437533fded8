#pragma once

#include <vector>

#include "tensor_space.hpp"

namespace iklab {

// Λ(u) ≈ Σ_{k=−K..K} a_k e^{k u}, fitted on a horizontal segment
// u = x·half_width + i·im_u, x ∈ [−1, 1].
struct LaurentFit {
    int degree = 0;                // K
    std::vector<cplx> coeffs;      // a_{−K}..a_{K}
    double im_u = 0.0;
    double half_width = 0.0;
    double holdout_error = 0.0;    // max relative error at held-out points
    double band_tail = 0.0;        // DFT only: largest coefficient beyond degree, relative

    cplx coefficient(int k) const { return coeffs[static_cast<std::size_t>(k + degree)]; }

    cplx operator()(cplx u) const
    {
        cplx s{};
        for (int k = -degree; k <= degree; ++k) s += coefficient(k) * std::exp(static_cast<double>(k) * u);
        return s;
    }

    // max_k |a_{−k} − a_k e^{k·shift}| relative to the largest compared coefficient;
    // zero for functions invariant under u → −u + shift
    double pairing_residual(cplx shift) const
    {
        double worst = 0.0, scale = 1e-300;
        for (int k = 0; k <= degree; ++k) {
            const cplx lhs = coefficient(-k), rhs = coefficient(k) * std::exp(static_cast<double>(k) * shift);
            worst = std::max(worst, std::abs(lhs - rhs));
            scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
        }
        return worst / scale;
    }
};

struct LaurentGrid {
    int degree = 0;
    double im_u = 0.3;
    double half_width = 2.0;
    double dft_re_u = 0.0;

    int node_count() const { return 2 * degree + 1; }

    std::vector<cplx> nodes() const
    {
        const int n = node_count();
        std::vector<cplx> v;
        for (int i = 0; i < n; ++i) {
            const double x = std::cos(pi * (2.0 * i + 1.0) / (2.0 * n));
            v.emplace_back(half_width * x, im_u);
        }
        return v;
    }

    static constexpr int holdout_count = 10;

    std::vector<cplx> holdout() const
    {
        std::vector<cplx> v;
        for (int i = 0; i < holdout_count; ++i) {
            const double x = -0.97 + 1.94 * (i + 0.5) / holdout_count;
            v.emplace_back(half_width * x, im_u);
        }
        return v;
    }

    // equispaced points on the vertical line Re u = dft_re_u, one full period
    int dft_count() const { return 4 * degree + 4; }

    std::vector<cplx> dft_nodes() const
    {
        std::vector<cplx> v;
        const int m = dft_count();
        for (int j = 0; j < m; ++j) v.emplace_back(dft_re_u, 2.0 * pi * j / m);
        return v;
    }

    // Coefficients by trapezoidal quadrature over the period; exact for
    // |k| < dft_count()/2, so the band beyond `degree` measures truncation.
    LaurentFit dft_fit(const std::vector<cplx>& values) const
    {
        const int m = dft_count();
        if (static_cast<int>(values.size()) != m) throw InvalidInput("laurent: dft value count mismatch");
        auto coeff = [&](int k) {
            cplx s{};
            for (int j = 0; j < m; ++j) s += values[static_cast<std::size_t>(j)] * std::exp(cplx(0.0, -2.0 * pi * k * j / m));
            return s / static_cast<double>(m) * std::exp(-static_cast<double>(k) * dft_re_u);
        };
        LaurentFit f;
        f.degree = degree;
        f.im_u = 0.0;
        f.half_width = 0.0;
        double scale = 1e-300, tail = 0.0;
        for (int k = -degree; k <= degree; ++k) {
            f.coeffs.push_back(coeff(k));
            scale = std::max(scale, std::abs(f.coeffs.back()) * std::exp(k * dft_re_u));
        }
        for (int k = degree + 1; k < m / 2; ++k)
            tail = std::max({tail, std::abs(coeff(k)) * std::exp(k * dft_re_u), std::abs(coeff(-k)) * std::exp(-k * dft_re_u)});
        f.band_tail = tail / scale;
        return f;
    }

    LaurentFit fit(const std::vector<cplx>& node_values, const std::vector<cplx>& holdout_values) const
    {
        const auto xs = nodes();
        const auto n = static_cast<Eigen::Index>(xs.size());
        if (static_cast<Eigen::Index>(node_values.size()) != n) throw InvalidInput("laurent: node value count mismatch");
        Mat V(n, n);
        Eigen::VectorXd colscale(n);
        for (Eigen::Index c = 0; c < n; ++c) {
            const double k = static_cast<double>(c - degree);
            for (Eigen::Index r = 0; r < n; ++r) V(r, c) = std::exp(k * xs[static_cast<std::size_t>(r)]);
            colscale(c) = V.col(c).norm();
            V.col(c) /= colscale(c);
        }
        Vec b(n);
        for (Eigen::Index r = 0; r < n; ++r) b(r) = node_values[static_cast<std::size_t>(r)];
        const Vec a = V.colPivHouseholderQr().solve(b);
        LaurentFit f;
        f.degree = degree;
        f.im_u = im_u;
        f.half_width = half_width;
        for (Eigen::Index c = 0; c < n; ++c) f.coeffs.push_back(a(c) / colscale(c));
        const auto hs = holdout();
        double scale = 1e-300;
        for (const cplx& v : holdout_values) scale = std::max(scale, std::abs(v));
        for (const cplx& v : node_values) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < hs.size() && i < holdout_values.size(); ++i)
            f.holdout_error = std::max(f.holdout_error, std::abs(f(hs[i]) - holdout_values[i]) / scale);
        return f;
    }
};

}  // namespace iklab
