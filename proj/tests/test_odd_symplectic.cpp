#include "charflow/odd_symplectic.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace charflow {
namespace {

using testing::random_generator;

TEST(SymplecticForm, StandardFormEntries) {
  const Mat J1 = standard_symplectic_form(1).matrix;
  EXPECT_EQ(J1, (Mat(2, 2) << 0, 1, -1, 0).finished());

  const Mat J2 = standard_symplectic_form(2).matrix;
  Mat expected = Mat::Zero(4, 4);
  expected(0, 2) = expected(1, 3) = 1;
  expected(2, 0) = expected(3, 1) = -1;
  EXPECT_EQ(J2, expected);

  for (int n = 1; n <= 4; ++n) {
    const Mat J = standard_symplectic_form(n).matrix;
    EXPECT_EQ(Mat(J * J), Mat(-Mat::Identity(2 * n, 2 * n)));
    EXPECT_EQ(Mat(J.transpose()), Mat(-J));
  }
  EXPECT_THROW(standard_symplectic_form(0), InvalidArgument);
}

TEST(SymplecticForm, ExtendedFormEntries) {
  const Mat O = extended_symplectic_form(1).matrix;
  Mat expected = Mat::Zero(4, 4);
  expected(0, 3) = 1;
  expected(3, 0) = -1;
  expected(1, 2) = 1;
  expected(2, 1) = -1;
  EXPECT_EQ(O, expected);
  for (int n = 1; n <= 4; ++n) {
    const Mat Om = extended_symplectic_form(n).matrix;
    EXPECT_EQ(Mat(Om.transpose()), Mat(-Om));
    EXPECT_EQ(Mat(Om * Om), Mat(-Mat::Identity(2 * n + 2, 2 * n + 2)));
    EXPECT_EQ(Mat(Om.block(1, 1, 2 * n, 2 * n)), standard_symplectic_form(n).matrix);
  }
}

// Of the two t-z pairings, only Omega[t,z] = +1 annihilates embedded generators.
TEST(SymplecticForm, TzSignIsForcedByGenerators) {
  std::mt19937_64 rng(11);
  int plus_ok = 0, minus_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const GeneratorU u = random_generator(rng, n);
    const Mat U = embed_generator(u);
    const int dim = 2 * n + 2;
    for (int sign : {+1, -1}) {
      Mat Om = Mat::Zero(dim, dim);
      Om(0, dim - 1) = sign;
      Om(dim - 1, 0) = -sign;
      Om.block(1, 1, 2 * n, 2 * n) = standard_symplectic_form(n).matrix;
      const double r = inf_norm(Mat(U.transpose() * Om + Om * U));
      if (r <= 1e-12) (sign > 0 ? plus_ok : minus_ok)++;
    }
  }
  EXPECT_EQ(plus_ok, 100);
  EXPECT_EQ(minus_ok, 0);
}

TEST(Generator, EmbedBlockPlacement) {
  {
    const GeneratorU u((Mat(2, 2) << 0, 1, 0, 0).finished(), Vec::Zero(2), 2.0);
    Mat expected = Mat::Zero(4, 4);
    expected(1, 2) = 1;  // U[x, y]
    expected(3, 0) = 2;  // U[z, t]
    EXPECT_EQ(embed_generator(u), expected);
  }
  {
    const GeneratorU u(Mat::Zero(2, 2), (Vec(2) << 1, 0).finished(), 0.0);
    Mat expected = Mat::Zero(4, 4);
    expected(1, 0) = 1;   // U[x, t]
    expected(3, 2) = -1;  // U[z, y], Jv = (0, -1)
    EXPECT_EQ(embed_generator(u), expected);
  }
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Mat U = embed_generator(random_generator(rng, 1 + i % 3));
    EXPECT_EQ(U.col(U.cols() - 1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(U.row(0).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Generator, RejectsNonHamiltonianBlock) {
  EXPECT_THROW(GeneratorU(Mat::Identity(2, 2), Vec::Zero(2), 0.0), InvalidArgument);
  EXPECT_THROW(GeneratorU(Mat::Zero(3, 3), Vec::Zero(3), 0.0), InvalidArgument);
  EXPECT_THROW(GeneratorU(Mat::Zero(2, 2), Vec::Zero(3), 0.0), InvalidArgument);
}

TEST(Generator, AlphaBetaGammaBlocks) {
  std::mt19937_64 rng(5);
  const int n = 2;
  const Mat alpha = testing::random_mat(rng, n, n);
  const Mat beta = testing::random_symmetric(rng, n);
  const Mat gamma = testing::random_symmetric(rng, n);
  Mat JA(2 * n, 2 * n);
  JA << -gamma, alpha, alpha.transpose(), beta;
  const Mat J = standard_symplectic_form(n).matrix;
  const GeneratorU u(Mat(-J * JA), Vec::Zero(2 * n), 0.0);
  EXPECT_LE(inf_norm(Mat(u.alpha() - alpha)), 1e-15);
  EXPECT_LE(inf_norm(Mat(u.beta() - beta)), 1e-15);
  EXPECT_LE(inf_norm(Mat(u.gamma() - gamma)), 1e-15);
}

TEST(HamiltonianMatrix, Examples) {
  EXPECT_TRUE(is_hamiltonian_matrix((Mat(2, 2) << 0, 1, 0, 0).finished()));
  EXPECT_FALSE(is_hamiltonian_matrix(Mat::Identity(2, 2)));
  EXPECT_THROW(is_hamiltonian_matrix(Mat::Zero(3, 3)), InvalidArgument);

  std::mt19937_64 rng(7);
  for (int n = 1; n <= 3; ++n) {
    const Mat S = testing::random_symmetric(rng, 2 * n);
    EXPECT_LE(hamiltonian_residual(standard_symplectic_form(n).matrix * S), 1e-12);
  }
}

TEST(OddSymplectic, MembershipExamples) {
  EXPECT_TRUE(is_odd_symplectic({1, Mat::Identity(4, 4)}));
  EXPECT_FALSE(is_odd_symplectic({1, Vec((Vec(4) << 2, 1, 1, 1).finished()).asDiagonal()}));
  EXPECT_THROW(is_odd_symplectic({1, Mat::Identity(3, 3)}), InvalidArgument);

  // Symplectic but moves e_z.
  Mat shear = Mat::Identity(4, 4);
  shear(0, 3) = 1.0;
  EXPECT_LE(odd_symplectic_residual({1, shear}).form, 1e-15);
  EXPECT_FALSE(is_odd_symplectic({1, shear}));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> sd(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const GeneratorU u = random_generator(rng, 1 + i % 3);
    EXPECT_TRUE(is_odd_symplectic(matrix_exponential(u, sd(rng)), 1e-10));
  }
}

TEST(MatrixExponential, NilpotentAndIdentity) {
  const GeneratorU u(Mat::Zero(2, 2), Vec::Zero(2), 1.0);
  const Mat U = embed_generator(u);
  EXPECT_EQ(Mat(U * U), Mat(Mat::Zero(4, 4)));
  for (double s : {-3.0, 0.25, 7.0}) EXPECT_LE(inf_norm(Mat(matrix_exponential(u, s).matrix - (Mat::Identity(4, 4) + s * U))), 1e-15);

  std::mt19937_64 rng(17);
  const GeneratorU r = random_generator(rng, 2);
  EXPECT_EQ(matrix_exponential(r, 0.0).matrix, Mat(Mat::Identity(6, 6)));
}

TEST(MatrixExponential, RotationBlock) {
  const Mat J = standard_symplectic_form(1).matrix;
  const GeneratorU u(J, Vec::Zero(2), 0.0);
  for (double s : {0.3, -1.2, 2.0, 9.5}) {
    const Mat E = matrix_exponential(u, s).matrix.block(1, 1, 2, 2);
    // exp(sJ) = cos(s) I + sin(s) J since J^2 = -I.
    const Mat expected = std::cos(s) * Mat::Identity(2, 2) + std::sin(s) * J;
    EXPECT_LE(inf_norm(Mat(E - expected)), 1e-13) << "s = " << s;
  }
}

TEST(MatrixExponential, AgreesWithEigenPade) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> sd(-2.0, 2.0);
  for (int i = 0; i < 40; ++i) {
    const GeneratorU u = random_generator(rng, 1 + i % 3, 4.0);
    const double s = sd(rng);
    const Mat sU = s * embed_generator(u);
    const Mat reference = sU.exp();
    EXPECT_LE(inf_norm(Mat(matrix_exponential(u, s).matrix - reference)), 1e-12 * std::max(1.0, inf_norm(reference)));
  }
}

TEST(MatrixExponential, GroupLawAndFixedVector) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const GeneratorU u = random_generator(rng, 1 + i % 3, 5.0);
    const double s1 = sd(rng), s2 = sd(rng);
    const Mat lhs = matrix_exponential(u, s1).matrix * matrix_exponential(u, s2).matrix;
    EXPECT_LE(inf_norm(Mat(lhs - matrix_exponential(u, s1 + s2).matrix)), 1e-9);

    const auto r = odd_symplectic_residual(matrix_exponential(u, 2.0 * s1));
    EXPECT_LE(r.fixed_vec, 1e-14);
  }
}

TEST(GeneratorField, Examples) {
  const double h0 = 0.7;
  const GeneratorU eik((Mat(2, 2) << 0, 1, 0, 0).finished(), Vec::Zero(2), h0);
  const AffineRate r1 = generator_field_at(eik, (Vec(2) << 0.4, -1.5).finished(), 0.0);
  EXPECT_EQ(r1.dw, (Vec(2) << -1.5, 0).finished());
  EXPECT_EQ(r1.dz, h0);

  const GeneratorU shift(Mat::Zero(2, 2), (Vec(2) << 1, 0).finished(), 0.0);
  const AffineRate r2 = generator_field_at(shift, Vec::Zero(2), 0.0);
  EXPECT_EQ(r2.dw, (Vec(2) << 1, 0).finished());
  EXPECT_EQ(r2.dz, 0.0);
  EXPECT_EQ(generator_field_at(shift, (Vec(2) << 2, 3).finished(), 0.0).dz, -3.0);
}

// (exp(eps U) p - p) / eps -> U p = (0, generator field) with O(eps) error.
TEST(GeneratorField, IsDerivativeOfExponentialAction) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 10; ++i) {
    const int n = 1 + i % 3;
    const GeneratorU u = random_generator(rng, n);
    const Vec w = testing::random_vec(rng, 2 * n);
    const double z = 0.3;
    const AffineRate exact = generator_field_at(u, w, z);
    double prev = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double eps = 1e-2 / std::ldexp(1.0, k);
      const auto [w1, z1] = affine_action(matrix_exponential(u, eps), w, z);
      Vec diff(2 * n + 1);
      diff << (w1 - w) / eps - exact.dw, (z1 - z) / eps - exact.dz;
      const double err = inf_norm(diff);
      if (k > 0) {
        EXPECT_GT(prev / err, 1.8);
        EXPECT_LT(prev / err, 2.2);
      }
      prev = err;
    }
  }
}

}  // namespace
}  // namespace charflow
