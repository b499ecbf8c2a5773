#include "perfopt/linalg.hpp"

#include <gtest/gtest.h>

#include "perfopt/errors.hpp"
#include "perfopt/rng.hpp"

namespace perfopt {
namespace {

TEST(Pseudoinverse, SatisfiesPenroseConditionsOnRandomMatrices) {
  RngStream rng(42);
  for (int inst = 0; inst < 20; ++inst) {
    int rows = 1 + static_cast<int>(rng.raw() % 6);
    int cols = 1 + static_cast<int>(rng.raw() % 6);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
    Matrix p = pseudoinverse(m);
    double tol = 1e-8 * (1.0 + m.norm());
    EXPECT_LE((m * p * m - m).norm(), tol);
    EXPECT_LE((p * m * p - p).norm(), tol);
    EXPECT_LE((m * p - Matrix((m * p).transpose())).norm(), tol);
    EXPECT_LE((p * m - Matrix((p * m).transpose())).norm(), tol);
  }
}

TEST(Pseudoinverse, HandlesRankDeficiency) {
  // Two identical rows: rank 1.
  Matrix m(2, 2);
  m << 1.0, 2.0, 1.0, 2.0;
  Matrix p = pseudoinverse(m);
  EXPECT_LE((m * p * m - m).norm(), 1e-10);
  // A zero matrix pseudoinverts to zero.
  Matrix z = Matrix::Zero(3, 2);
  EXPECT_EQ(pseudoinverse(z).norm(), 0.0);
}

TEST(InvertSmall, MatchesDirectInverse) {
  Matrix m(2, 2);
  m << 4.0, 1.0, 2.0, 3.0;
  Matrix inv = invert_small(m);
  EXPECT_LE((m * inv - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(InvertSmall, ThrowsOnSingularInput) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 4.0;
  EXPECT_THROW(invert_small(m), SingularMatrixError);
}

TEST(SpectralNorm, KnownValues) {
  Matrix d(2, 2);
  d << 3.0, 0.0, 0.0, -4.0;
  EXPECT_NEAR(spectral_norm(d), 4.0, 1e-12);
  Matrix n(2, 2);
  n << 0.0, 2.0, 0.0, 0.0;
  EXPECT_NEAR(spectral_norm(n), 2.0, 1e-12);
}

TEST(ClipGradient, PassesShortVectorsThrough) {
  Vector g(2);
  g << 6.0, 8.0;  // norm exactly 10
  Vector out = clip_gradient(g, 10.0);
  EXPECT_EQ(out, g);
}

TEST(ClipGradient, CapsLongVectorsAtTheThreshold) {
  Vector g(2);
  g << 30.0, 40.0;  // norm 50
  Vector out = clip_gradient(g, 10.0);
  EXPECT_NEAR(out.norm(), 10.0, 1e-12);
  EXPECT_NEAR(out[0], 6.0, 1e-12);
  EXPECT_NEAR(out[1], 8.0, 1e-12);
}

TEST(ProjectBox, ClampsComponentwise) {
  Vector x(3), lo(3), hi(3);
  x << -5.0, 0.5, 5.0;
  lo << -1.0, -1.0, -1.0;
  hi << 1.0, 1.0, 1.0;
  Vector out = project_box(x, lo, hi);
  EXPECT_EQ(out[0], -1.0);
  EXPECT_EQ(out[1], 0.5);
  EXPECT_EQ(out[2], 1.0);
}

TEST(ProjectBox, RejectsBadInputs) {
  Vector x(2), lo(3), hi(3);
  x.setZero();
  lo.setZero();
  hi.setOnes();
  EXPECT_THROW(project_box(x, lo, hi), InvalidInputError);
  Vector lo2(2), hi2(2);
  lo2 << 1.0, 0.0;
  hi2 << 0.0, 1.0;
  Vector x2 = Vector::Zero(2);
  EXPECT_THROW(project_box(x2, lo2, hi2), InvalidInputError);
}

TEST(ConditionNumber, RatioOfExtremeSingularValues) {
  Matrix d(2, 2);
  d << 4.0, 0.0, 0.0, 2.0;
  EXPECT_NEAR(condition_number(d), 2.0, 1e-12);
  Matrix s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  EXPECT_TRUE(std::isinf(condition_number(s)));
}

}  // namespace
}  // namespace perfopt
