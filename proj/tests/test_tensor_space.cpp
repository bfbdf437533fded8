#include <gtest/gtest.h>

#include <iklab/tensor_space.hpp>

using namespace iklab;

namespace {

Mat random_mat(int n, unsigned seed)
{
    std::srand(seed);
    return Mat::Random(n, n);
}

// reference: (A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l]
Mat kron_loops(const Mat& a, const Mat& b)
{
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return r;
}

}  // namespace

TEST(TensorSpace, KronMatchesIndexFormula)
{
    const Mat a = random_mat(3, 1), b = random_mat(9, 2);
    EXPECT_LT((kron(a, b) - kron_loops(a, b)).norm(), 1e-14);
}

TEST(TensorSpace, EmbedSingleSite)
{
    const Mat a = random_mat(3, 3);
    const Mat i3 = Mat::Identity(3, 3);
    const Op e = embed(Op(a, 1), 2, 3);
    EXPECT_LT((e.matrix() - kron_loops(kron_loops(i3, a), i3)).norm(), 1e-14);
}

TEST(TensorSpace, EmbedPairReversedIsConjugatedByPermutation)
{
    const Op b(random_mat(9, 4), 2);
    const Op P = permutation_matrix();
    EXPECT_LT((embed_pair(b, 2, 1, 2).matrix() - (P * b * P).matrix()).norm(), 1e-13);
    EXPECT_LT((embed_pair(b, 1, 2, 2).matrix() - b.matrix()).norm(), 1e-14);
}

TEST(TensorSpace, EmbedPairNonAdjacent)
{
    const Mat a = random_mat(3, 5), c = random_mat(3, 6);
    const Mat i3 = Mat::Identity(3, 3);
    const Op b(kron_loops(a, c), 2);
    EXPECT_LT((embed_pair(b, 1, 3, 3).matrix() - kron_loops(kron_loops(a, i3), c)).norm(), 1e-13);
    EXPECT_LT((embed_pair(b, 3, 1, 3).matrix() - kron_loops(kron_loops(c, i3), a)).norm(), 1e-13);
}

TEST(TensorSpace, PartialTransposeAndTrace)
{
    const Mat a = random_mat(3, 7), c = random_mat(3, 8);
    const Op ab(kron_loops(a, c), 2);
    EXPECT_LT((partial_transpose(ab, 2).matrix() - kron_loops(a, c.transpose())).norm(), 1e-14);
    EXPECT_LT((partial_transpose(ab, 1).matrix() - kron_loops(a.transpose(), c)).norm(), 1e-14);
    EXPECT_LT((partial_transpose(partial_transpose(ab, 1), 1).matrix() - ab.matrix()).norm(), 1e-14);
    EXPECT_LT((partial_trace(ab, 2).matrix() - a * c.trace()).norm(), 1e-13);
    EXPECT_LT((partial_trace(ab, 1).matrix() - c * a.trace()).norm(), 1e-13);
}

TEST(TensorSpace, SitePermutationCycles)
{
    const Mat a = random_mat(3, 9), b = random_mat(3, 10), c = random_mat(3, 11);
    const Op s = site_permutation({1, 2, 0});
    const Mat x = kron_loops(kron_loops(a, b), c);
    const Mat y = s.matrix() * x * s.matrix().adjoint();
    // one of the two cyclic orders must come out
    const double d1 = (y - kron_loops(kron_loops(b, c), a)).norm(), d2 = (y - kron_loops(kron_loops(c, a), b)).norm();
    EXPECT_LT(std::min(d1, d2), 1e-13);
}

TEST(TensorSpace, OpRejectsWrongShape)
{
    EXPECT_THROW(Op(Mat::Identity(4, 4), 1), InvalidInput);
    EXPECT_THROW(Op(Mat::Identity(9, 9), 0), InvalidInput);
    EXPECT_THROW(Op::identity(1) * Op::identity(2), InvalidInput);
}

TEST(TensorSpace, EigReconstructs)
{
    const Mat a = random_mat(9, 12);
    const auto ed = eig(a);
    const Mat rebuilt = ed.right * ed.values.asDiagonal() * ed.left.adjoint();
    EXPECT_LT((rebuilt - a).norm() / a.norm(), 1e-12);
    EXPECT_LT((ed.left.adjoint() * ed.right - Mat::Identity(9, 9)).norm(), 1e-10);
    for (Eigen::Index k = 1; k < 9; ++k) EXPECT_LE(ed.values(k - 1).real(), ed.values(k).real());
}

TEST(TensorSpace, EigRejectsJordanBlock)
{
    Mat j = Mat::Zero(3, 3);
    j(0, 0) = j(1, 1) = j(2, 2) = 1.0;
    j(0, 1) = 1.0;
    EXPECT_THROW(eig(j), NumericalFailure);
}
