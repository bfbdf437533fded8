#include <gtest/gtest.h>

#include <iklab/check_report.hpp>
#include <iklab/model_data.hpp>

#include "oracle.hpp"

using namespace iklab;

using oracle::r_blocks;
using oracle::swap9;

TEST(ModelData, RMatrixMatchesBlockForm)
{
    const ModelParams p = ModelParams::default_profile(1);
    Sampler s(3);
    for (cplx u : s.points(5)) EXPECT_LT((r_matrix(u, p).matrix() - r_blocks(u, p.eta)).norm(), 1e-13);
}

TEST(ModelData, UnitarityWithIndependentR)
{
    const ModelParams p = ModelParams::default_profile(1);
    const Mat P = swap9();
    Sampler s(4);
    for (cplx u : s.points(4)) {
        const Mat lhs = r_blocks(u, p.eta) * P * r_blocks(-u, p.eta) * P;
        EXPECT_LT(rel_diff(lhs, rho1(u, p.eta) * Mat::Identity(9, 9)), 1e-12);
    }
}

TEST(ModelData, RDerivativeMatchesDifferences)
{
    const ModelParams p = ModelParams::default_profile(1);
    const cplx u{0.31, -0.27};
    const double h = 1e-6;
    const Mat fd = (r_matrix(u + h, p).matrix() - r_matrix(u - h, p).matrix()) / (2.0 * h);
    EXPECT_LT(rel_diff(r_matrix_derivative(u, p).matrix(), fd), 1e-8);
}

TEST(ModelData, KMinusAtZeroIsScalar)
{
    const ModelParams p = ModelParams::default_profile(1);
    EXPECT_LT(rel_diff(k_minus(0.0, p).matrix(), k_minus_at_zero(p) * Mat::Identity(3, 3)), 1e-14);
}

TEST(ModelData, KMinusUnitarity)
{
    const ModelParams p = ModelParams::default_profile(1);
    const cplx u{0.2, 0.45};
    const Mat prod = k_minus(u, p).matrix() * k_minus(-u, p).matrix();
    EXPECT_LT(rel_diff(prod, scalar(Scalar::DeltaMinus, u, p) * Mat::Identity(3, 3)), 1e-13);
}

TEST(ModelData, DiagonalLimitDropsBoundaryTerms)
{
    const ModelParams d = ModelParams::default_profile(2).diagonal_limit();
    EXPECT_TRUE(d.diagonal());
    EXPECT_EQ(boundary_weight(d.eps), cplx{});
    EXPECT_LT(rel_diff(k_minus(cplx(0.4, 0.1), d).matrix(), Mat::Identity(3, 3)), 1e-15);
    EXPECT_LT(rel_diff(k_plus(cplx(0.4, 0.1), d).matrix(), m_matrix(d).matrix()), 1e-15);
}

TEST(ModelData, FusionVectorsOrthonormalUnderBilinearPairing)
{
    const auto f = fusion_vectors(ModelParams::default_profile(1));
    const Vec* v[] = {&f.phi0, &f.phi1, &f.phi2, &f.phi3};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_LT(std::abs((v[i]->transpose() * *v[j])(0, 0) - (i == j ? 1.0 : 0.0)), 1e-14);
}

TEST(ModelData, ValidationRejectsDegenerateEta)
{
    ModelParams p = ModelParams::default_profile(1);
    p.eta = 0.0;
    EXPECT_THROW(validate(p), InvalidInput);
    p.eta = cplx(0.0, pi / 4.0);  // cosh 2η = 0
    EXPECT_THROW(validate(p), InvalidInput);
}

TEST(ModelData, ValidationRejectsCoincidentThetas)
{
    ModelParams p = ModelParams::default_profile(2);
    p.thetas[1] = -p.thetas[0];
    EXPECT_THROW(validate(p), InvalidInput);
    EXPECT_NO_THROW(validate(p, false));
}

TEST(ModelData, ValidationRejectsMixedDiagonalLimit)
{
    ModelParams p = ModelParams::default_profile(1);
    p.eps = cplx(std::numeric_limits<double>::infinity(), 0.0);
    EXPECT_THROW(validate(p), InvalidInput);
}
