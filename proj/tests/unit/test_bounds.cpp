#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mvkl/bounds.hpp"

using namespace mvkl;

TEST(RademacherBound, PartCSingleKernelUnitInputs) {
  const auto r = rademacher_bound_detail(BoundInputs{});
  EXPECT_EQ(r.part, BoundPart::c);
  EXPECT_NEAR(r.value, std::sqrt(23.0 / 22.0), 1e-12);
  EXPECT_NEAR(r.value, 1.02247, 1e-5);
}

TEST(RademacherBound, PartADirectEvaluation) {
  const BoundInputs in{1.0, 2, 1.0, 4.0, 16, 1.5, {}};
  EXPECT_NEAR(bound_part_a(in), 1.0, 1e-12);
}

TEST(RademacherBound, PartCGrowsWithM) {
  double prev = 0.0;
  for (std::size_t m : {2u, 4u, 8u, 16u}) {
    const double v = bound_part_c(BoundInputs{1.0, m, 1.0, 1.0, 1, 1.0, {}});
    EXPECT_GT(v, prev);
    EXPECT_NEAR(v, std::sqrt(23.0 / 22.0 * std::exp(1.0) * std::ceil(2.0 * std::log(double(m)))), 1e-12);
    prev = v;
  }
}

TEST(RademacherBound, PartSelection) {
  const auto b = rademacher_bound_detail(BoundInputs{1.0, 3, 1.0, 1.0, 10, 2.0, {}});
  EXPECT_EQ(b.part, BoundPart::b);
  EXPECT_EQ(b.q, 2u);
  EXPECT_NEAR(b.value, std::pow(3.0, 0.5) * std::sqrt(23.0 / 22.0 * 2.0 / 10.0), 1e-12);
  EXPECT_EQ(rademacher_bound_detail(BoundInputs{1.0, 3, 1.0, 1.0, 10, 1.5, {}}).part, BoundPart::b);
  EXPECT_EQ(rademacher_bound_detail(BoundInputs{1.0, 3, 1.0, 1.0, 10, 1.7, {}}).part, BoundPart::a);
}

TEST(RademacherBound, PartBAtQOneMatchesPartCForOneKernel) {
  const BoundInputs in{2.0, 1, 0.5, 3.0, 7, 1.0, {}};
  EXPECT_NEAR(bound_part_b(in, 1), bound_part_c(in), 1e-15);
}

TEST(RademacherBound, ExplicitMomentOrder) {
  BoundInputs in{1.0, 8, 1.0, 1.0, 4, 1.0, std::size_t{3}};
  EXPECT_NEAR(bound_part_c(in), 2.0 * std::sqrt(23.0 / 22.0 * 3.0 / 4.0), 1e-12);
}

TEST(RademacherBound, RejectsInvalidInputs) {
  for (const BoundInputs& bad : {BoundInputs{0.0, 1, 1, 1, 1, 1, {}}, BoundInputs{1.0, 0, 1, 1, 1, 1, {}},
                                 BoundInputs{1.0, 1, -1, 1, 1, 1, {}}, BoundInputs{1.0, 1, 1, 0, 1, 1, {}},
                                 BoundInputs{1.0, 1, 1, 1, 0, 1, {}}, BoundInputs{1.0, 1, 1, 1, 1, 0.5, {}},
                                 BoundInputs{1.0, 1, 1, 1, 1, 1, std::size_t{0}}}) {
    try {
      rademacher_bound(bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    }
  }
}

TEST(RademacherBound, GeneralFormsReduceToSeparableOnes) {
  const double nb = 1.3, kappa = 0.8, tau = 2.5;
  const std::size_t l = 20, m = 5;
  const std::vector<double> u(m, std::sqrt(double(l) * kappa * tau));
  const BoundInputs in{nb, m, kappa, tau, l, 1.0, {}};
  EXPECT_NEAR(bound_part_a_general(u, nb, l), bound_part_a(in), 1e-12);
  EXPECT_NEAR(bound_part_b_general(u, nb, l, 3), bound_part_b(in, 3), 1e-12);
  BoundInputs with_r = in;
  with_r.r = 4;
  EXPECT_NEAR(bound_part_c_general(u, nb, l, 4), bound_part_c(with_r), 1e-12);
  EXPECT_THROW(bound_part_a_general(std::vector<double>{}, nb, l), Error);
  EXPECT_THROW(bound_part_b_general(std::vector<double>{-1.0}, nb, l, 2), Error);
}
