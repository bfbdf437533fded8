#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tensor_space.hpp"

namespace iklab {

struct CheckReport {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::vector<cplx> sample_points;
    std::vector<CheckReport> components;
    std::string note;

    static CheckReport single(std::string name, double residual, double tol, std::vector<cplx> samples = {})
    {
        CheckReport r;
        r.name = std::move(name);
        r.residual = residual;
        r.tolerance = tol;
        r.passed = residual <= tol;
        r.sample_points = std::move(samples);
        return r;
    }

    // max residual over parts; passes only if every part does
    static CheckReport aggregate(std::string name, std::vector<CheckReport> parts)
    {
        CheckReport r;
        r.name = std::move(name);
        r.passed = true;
        double worst_ratio = -1.0;
        for (const auto& c : parts) {
            r.passed = r.passed && c.passed;
            const double ratio = c.tolerance > 0 ? c.residual / c.tolerance : c.residual;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                r.residual = c.residual;
                r.tolerance = c.tolerance;
            }
            r.sample_points.insert(r.sample_points.end(), c.sample_points.begin(), c.sample_points.end());
        }
        r.components = std::move(parts);
        return r;
    }
};

// Platform-independent uniform doubles from the standardized mt19937_64 stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// Spectral-parameter sampler over Re u ∈ [−2,2], Im u ∈ [−π,π].
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    cplx next()
    {
        for (;;) {
            const cplx u{rng_.uniform(-2.0, 2.0), rng_.uniform(-pi, pi)};
            if (std::none_of(avoid_.begin(), avoid_.end(), [&](const auto& f) { return std::abs(f(u)) < 1e-3; })) return u;
        }
    }

    std::vector<cplx> points(int count)
    {
        std::vector<cplx> v;
        v.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) v.push_back(next());
        return v;
    }

    // reject u where |f(u)| < 1e−3
    Sampler& avoid(std::function<cplx(cplx)> f)
    {
        avoid_.push_back(std::move(f));
        return *this;
    }

private:
    Rng rng_;
    std::vector<std::function<cplx(cplx)>> avoid_;
};

// Accumulates max relative residual over sample points; skips points where both
// sides vanish.
class ResidualTracker {
public:
    void add(const Mat& lhs, const Mat& rhs, cplx u, double zero_floor = 1e-12)
    {
        if (std::max(lhs.norm(), rhs.norm()) < zero_floor) {
            ++skipped_;
            return;
        }
        worst_ = std::max(worst_, rel_diff(lhs, rhs));
        points_.push_back(u);
    }

    void add(cplx lhs, cplx rhs, cplx u, double zero_floor = 1e-12)
    {
        Mat a(1, 1), b(1, 1);
        a(0, 0) = lhs;
        b(0, 0) = rhs;
        add(a, b, u, zero_floor);
    }

    void add_residual(double r, cplx u)
    {
        worst_ = std::max(worst_, r);
        points_.push_back(u);
    }

    CheckReport report(std::string name, double tol) const
    {
        auto r = CheckReport::single(std::move(name), worst_, tol, points_);
        if (points_.empty()) {
            r.passed = false;
            r.note = "no evaluable sample points";
        } else if (skipped_ > 0) {
            r.note = std::to_string(skipped_) + " point(s) skipped (both sides vanish)";
        }
        return r;
    }

private:
    double worst_ = 0.0;
    int skipped_ = 0;
    std::vector<cplx> points_;
};

}  // namespace iklab
