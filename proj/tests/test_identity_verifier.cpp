#include <gtest/gtest.h>

#include <iklab/identity_verifier.hpp>

using namespace iklab;

TEST(IdentityVerifier, SuitePassesOnDefaultProfile)
{
    const auto reports = identity_suite(ModelParams::default_profile(1), 7, 1e-10);
    EXPECT_GE(reports.size(), 15u);
    for (const auto& r : reports) EXPECT_TRUE(r.passed) << r.name << " residual " << r.residual;
}

TEST(IdentityVerifier, SuitePassesAtAnotherGenericPoint)
{
    ModelParams p = ModelParams::default_profile(1);
    p.eta = cplx(0.17, -0.23);
    p.eps = cplx(-0.3, 0.4);
    p.sigma = cplx(0.1, 0.6);
    for (const auto& r : identity_suite(p, 8, 1e-9)) EXPECT_TRUE(r.passed) << r.name << " residual " << r.residual;
}

TEST(IdentityVerifier, SinTypoBreaksYangBaxter)
{
    const auto p = ModelParams::default_profile(1);
    const auto bad = check_qybe(p, {3, 10}, 1e-10, BTerm::SinTypo);
    EXPECT_FALSE(bad.passed);
    EXPECT_GT(bad.residual, 1e-3);
    EXPECT_TRUE(check_qybe(p, {3, 10}, 1e-10).passed);
}

TEST(IdentityVerifier, ResultsAreDeterministic)
{
    const auto p = ModelParams::default_profile(1);
    const auto a = identity_suite(p, 99, 1e-10), b = identity_suite(p, 99, 1e-10);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].name, b[i].name);
        EXPECT_EQ(a[i].residual, b[i].residual);
    }
}

TEST(IdentityVerifier, ReflectionHoldsAcrossBoundaryParameters)
{
    ModelParams p = ModelParams::default_profile(1);
    for (cplx sig : {cplx(0.0, 0.0), cplx(-1.3, 0.4), cplx(0.2, -2.0)}) {
        p.sigma = sig;
        EXPECT_TRUE(check_re(p, {5, 5}, 1e-10).passed);
        EXPECT_TRUE(check_dual_re(p, {5, 5}, 1e-10).passed);
    }
}
