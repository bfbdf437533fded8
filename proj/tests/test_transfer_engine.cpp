#include <gtest/gtest.h>

#include <iklab/transfer_engine.hpp>

#include "oracle.hpp"

using namespace iklab;

namespace {

// one site: t(u) = tr_0 K+_0 R_01(u−θ) K−_0 R_10(u+θ), built with plain Kronecker products
Mat transfer_one_site(cplx u, const ModelParams& p)
{
    const Mat I3 = Mat::Identity(3, 3), P = oracle::swap9();
    const cplx th = p.thetas[0];
    const Mat x = kron(k_plus(u, p).matrix(), I3) * oracle::r_blocks(u - th, p.eta) * kron(k_minus(u, p).matrix(), I3) * P *
                  oracle::r_blocks(u + th, p.eta) * P;
    Mat t = Mat::Zero(3, 3);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int k = 0; k < 3; ++k) t(a, b) += x(3 * k + a, 3 * k + b);
    return t;
}

}  // namespace

TEST(TransferEngine, OneSiteMatchesKroneckerOracle)
{
    const ModelParams p = ModelParams::default_profile(1);
    const TransferEngine eng(p);
    Sampler s(21);
    for (cplx u : s.points(5)) EXPECT_LT(rel_diff(eng.transfer(u).matrix(), transfer_one_site(u, p)), 1e-12);
}

TEST(TransferEngine, CommutesAtTwoSites)
{
    const TransferEngine eng(ModelParams::default_profile(2));
    EXPECT_TRUE(eng.check_commutativity({{cplx(0.3, 0.2), cplx(-0.7, 1.1)}, {cplx(1.2, -0.4), cplx(0.05, 2.5)}}, 1e-10).passed);
}

TEST(TransferEngine, SpecialValuesAndSymmetries)
{
    const TransferEngine eng(ModelParams::default_profile(2));
    const std::vector<cplx> us = {cplx(0.4, 0.3), cplx(-1.1, 2.0)};
    EXPECT_TRUE(eng.check_special_values(1e-10).passed);
    EXPECT_TRUE(eng.check_crossing_symmetry(us, 1e-10).passed);
    EXPECT_TRUE(eng.check_periodicity(us, 1e-10).passed);
    EXPECT_TRUE(eng.check_all_operator_identities(1e-9).passed);
}

TEST(TransferEngine, DerivativeMatchesDifferences)
{
    const TransferEngine eng(ModelParams::default_profile(2));
    const cplx u{0.21, -0.37};
    EXPECT_LT(rel_diff(eng.transfer_derivative(u).matrix(), eng.transfer_derivative_fd(u).matrix()), 1e-7);
}

TEST(TransferEngine, HamiltonianFormsAgree)
{
    const TransferEngine eng(ModelParams::default_profile(2).homogeneous());
    EXPECT_LT(rel_diff(eng.hamiltonian_logderiv().matrix(), eng.hamiltonian_explicit().matrix()), 1e-8);
}

TEST(TransferEngine, HamiltonianNeedsHomogeneousChain)
{
    const TransferEngine eng(ModelParams::default_profile(2));
    EXPECT_THROW(eng.hamiltonian_logderiv(), InvalidInput);
}

TEST(TransferEngine, RejectsLongChains)
{
    EXPECT_THROW(TransferEngine(ModelParams::default_profile(4), 3), InvalidInput);
    EXPECT_NO_THROW(TransferEngine(ModelParams::default_profile(3), 3));
}

TEST(TransferEngine, CurveValuesAreEigenvalues)
{
    const TransferEngine eng(ModelParams::default_profile(2));
    const auto curves = eng.eigencurves({cplx(0.8, -0.6)});
    ASSERT_EQ(curves.size(), 9u);
    const Mat t = eng.transfer(cplx(0.8, -0.6)).matrix();
    for (const auto& c : curves) {
        const cplx lam = c.samples.at(0).second;
        EXPECT_LT((t * c.right - lam * c.right).norm() / (t.norm() * c.right.norm()), 1e-10) << "curve " << c.id;
        EXPECT_LT(std::abs((t - lam * Mat::Identity(9, 9)).determinant()) / std::pow(t.norm(), 9), 1e-9);
    }
}

TEST(TransferEngine, ChargeCommutesOnlyInDiagonalLimit)
{
    const ModelParams p = ModelParams::default_profile(2);
    const TransferEngine gen(p), diag(p.diagonal_limit());
    const cplx u{0.33, 0.71};
    auto comm = [&](const TransferEngine& e) {
        const Mat t = e.transfer(u).matrix(), q = e.charge_operator();
        return (t * q - q * t).norm() / t.norm();
    };
    EXPECT_LT(comm(diag), 1e-13);
    EXPECT_GT(comm(gen), 1e-3);
}

TEST(TransferEngine, DiagonalSplitterAssignsIntegerCharges)
{
    const TransferEngine eng(ModelParams::default_profile(1).diagonal_limit());
    EigencurveOptions o;
    o.splitter = eng.charge_operator();
    const auto curves = eng.eigencurves({}, o);
    std::vector<long> seen;
    for (const auto& c : curves) {
        ASSERT_TRUE(c.charge.has_value());
        for (int k = 0; k < c.multiplicity; ++k) seen.push_back(*c.charge);
    }
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(seen, (std::vector<long>{0, 1, 2}));
}

TEST(Laurent, FitRecoversKnownPolynomial)
{
    LaurentGrid g;
    g.degree = 3;
    std::vector<cplx> a = {cplx(0.1, 0.2), cplx(-0.3, 0.0), cplx(0.0, 1.0), cplx(2.0, -1.0), cplx(0.5, 0.5), cplx(-1.0, 0.1), cplx(0.25, 0.0)};
    auto f = [&](cplx u) {
        cplx s{};
        for (int k = -3; k <= 3; ++k) s += a[static_cast<std::size_t>(k + 3)] * std::exp(static_cast<double>(k) * u);
        return s;
    };
    std::vector<cplx> nv, hv, dv;
    for (cplx u : g.nodes()) nv.push_back(f(u));
    for (cplx u : g.holdout()) hv.push_back(f(u));
    for (cplx u : g.dft_nodes()) dv.push_back(f(u));
    const auto fit = g.fit(nv, hv), dft = g.dft_fit(dv);
    for (int k = -3; k <= 3; ++k) {
        EXPECT_LT(std::abs(fit.coefficient(k) - a[static_cast<std::size_t>(k + 3)]), 1e-9);
        EXPECT_LT(std::abs(dft.coefficient(k) - a[static_cast<std::size_t>(k + 3)]), 1e-12);
    }
    EXPECT_LT(fit.holdout_error, 1e-12);
    EXPECT_LT(dft.band_tail, 1e-12);
}

TEST(Laurent, DftDetectsHigherDegree)
{
    LaurentGrid g;
    g.degree = 2;
    std::vector<cplx> dv;
    for (cplx u : g.dft_nodes()) dv.push_back(std::exp(3.0 * u) + std::exp(u));
    EXPECT_GT(g.dft_fit(dv).band_tail, 0.5);
}
