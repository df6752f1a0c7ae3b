#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "siou/error.hpp"
#include "siou/loss.hpp"

using siou::Box;
using siou::CriterionId;
using siou::ExponentMode;

namespace {

siou::CriterionParams gk(double gamma, double kappa) {
  siou::CriterionParams p;
  p.gamma = gamma;
  p.kappa = kappa;
  return p;
}

} // namespace

TEST(Loss, Values) {
  const Box a(0, 0, 10, 10);
  const auto params = siou::CriterionParams::loss_preset();
  for (auto id : siou::kAllCriteria) {
    EXPECT_DOUBLE_EQ(siou::loss_value(id, a, a, params), 0.0) << siou::to_string(id);
  }
  EXPECT_DOUBLE_EQ(siou::loss_value(CriterionId::IoU, a, Box(50, 0, 10, 10), params), 1.0);
  EXPECT_NEAR(siou::loss_value(CriterionId::GIoU, a, Box(20, 0, 10, 10), params), 4.0 / 3.0,
              1e-15);
}

TEST(Loss, FixedExponentOverride) {
  const Box a(0, 0, 8, 8);
  const Box b(4, 0, 8, 8);
  EXPECT_NEAR(siou::loss_value(CriterionId::SIoU, a, b, gk(-3, 16), 2.0), 1.0 - 1.0 / 9.0,
              1e-15);
}

TEST(Loss, IdenticalBoxesGiveZeroGradient) {
  const Box a(3, -2, 10, 14);
  const auto params = siou::CriterionParams::loss_preset();
  for (auto id : {CriterionId::IoU, CriterionId::GIoU, CriterionId::SIoU, CriterionId::GSIoU,
                  CriterionId::NWD}) {
    const auto g = siou::loss_gradient(id, a, a, params);
    EXPECT_DOUBLE_EQ(g.max_abs(), 0.0) << siou::to_string(id);
  }
  const auto fd = siou::finite_difference_gradient(CriterionId::IoU, a, a, params, 1e-4);
  EXPECT_NEAR(fd.d_x, 0.0, 1e-10);
}

TEST(Loss, ShiftedRightIncreasesLoss) {
  const Box truth(0, 0, 10, 10);
  const Box pred(5, 0, 10, 10);
  const auto params = siou::CriterionParams::loss_preset();
  for (auto id : {CriterionId::IoU, CriterionId::GIoU, CriterionId::SIoU, CriterionId::GSIoU}) {
    const auto g = siou::loss_gradient(id, pred, truth, params);
    EXPECT_GT(g.d_x, 0.0) << siou::to_string(id);
    EXPECT_DOUBLE_EQ(g.d_y, 0.0) << siou::to_string(id);
    // The shared y interval is a kink; central differences are O(h) there.
    const auto fd = siou::finite_difference_gradient(id, pred, truth, params, 1e-4);
    EXPECT_LT(oracle::relative_error(g, fd), 1e-5) << siou::to_string(id);
  }
}

TEST(Loss, IoUGradientClosedForm) {
  // Horizontal overlap 10 - s of two 10x10 squares: L = 1 - (10 - s) / (10 + s),
  // dL/ds = 20 / (10 + s)^2.
  const Box truth(0, 0, 10, 10);
  const Box pred(4, 0, 10, 10);
  const auto g = siou::loss_gradient(CriterionId::IoU, pred, truth, {});
  EXPECT_NEAR(g.d_x, 20.0 / 196.0, 1e-14);
}

TEST(Loss, NonDifferentiablePoints) {
  const Box truth(0, 0, 10, 10);
  const auto params = siou::CriterionParams::loss_preset();
  // Touching along x.
  EXPECT_THROW(siou::loss_gradient(CriterionId::IoU, Box(10, 0, 10, 10), truth, params),
               siou::NonDifferentiablePoint);
  // A single pair of coinciding edges (left edges both at -5).
  EXPECT_THROW(siou::loss_gradient(CriterionId::GIoU, Box(1, 0, 12, 8), truth, params),
               siou::NonDifferentiablePoint);
  // GSIoU at GIoU = 0 with p < 1: infinite slope.
  const Box far(10, 0, 10, 10);
  EXPECT_THROW(siou::loss_gradient(CriterionId::GSIoU, far, truth, gk(0.5, 64)),
               siou::NonDifferentiablePoint);
}

TEST(Loss, NonOverlappingSIoUHasZeroGradient) {
  const Box truth(0, 0, 10, 10);
  const auto g = siou::loss_gradient(CriterionId::SIoU, Box(30, 3, 10, 10), truth, gk(-3, 16));
  EXPECT_DOUBLE_EQ(g.max_abs(), 0.0);
}

TEST(Loss, RandomConfigurationsMatchFiniteDifferences) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> gamma(-5, 1);
  std::uniform_real_distribution<double> kappa(1, 256);
  for (int i = 0; i < 200; ++i) {
    const auto draw = oracle::draw_smooth_pair(gen);
    const auto params = gk(gamma(gen), kappa(gen));
    for (auto id : {CriterionId::IoU, CriterionId::GIoU, CriterionId::SIoU, CriterionId::GSIoU}) {
      for (auto mode : {ExponentMode::Coupled, ExponentMode::Detached}) {
        if (std::abs(siou::giou(draw.pred, draw.truth)) < 1e-3 && id == CriterionId::GSIoU) {
          continue;
        }
        const auto a = siou::loss_gradient(id, draw.pred, draw.truth, params, mode);
        const auto fd =
            siou::finite_difference_gradient(id, draw.pred, draw.truth, params, 1e-4, mode);
        EXPECT_LT(oracle::relative_error(a, fd), 1e-5)
            << siou::to_string(id) << " pred " << draw.pred << " truth " << draw.truth;
      }
    }
  }
}

TEST(Loss, CentralDifferenceIsSecondOrder) {
  const Box truth(0, 0, 20, 16);
  const Box pred(4.3, -2.1, 17.5, 19.2);
  const auto params = gk(-3, 16);
  const auto a = siou::loss_gradient(CriterionId::SIoU, pred, truth, params);
  const double e1 =
      (a - siou::finite_difference_gradient(CriterionId::SIoU, pred, truth, params, 0.2)).norm();
  const double e2 =
      (a - siou::finite_difference_gradient(CriterionId::SIoU, pred, truth, params, 0.1)).norm();
  // Halving the step cuts the error by about 4.
  EXPECT_GT(e1 / e2, 3.5);
  EXPECT_LT(e1 / e2, 4.5);
}

TEST(Loss, NWDGradientMatchesFiniteDifferences) {
  const Box truth(0, 0, 20, 16);
  const Box pred(4.3, -2.1, 17.5, 19.2);
  const siou::CriterionParams params;
  const auto a = siou::loss_gradient(CriterionId::NWD, pred, truth, params);
  const auto fd = siou::finite_difference_gradient(CriterionId::NWD, pred, truth, params, 1e-4);
  EXPECT_LT(oracle::relative_error(a, fd), 1e-7);
}

TEST(Reweight, LossRatio) {
  EXPECT_NEAR(siou::reweight_loss_ratio(0.5, 2.0), 1.5, 1e-15);
  EXPECT_NEAR(siou::reweight_loss_ratio(0.5, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(siou::reweight_loss_ratio(0.3, 1.0), 1.0, 1e-15);
  for (double p : {0.5, 1.0, 2.0, 4.0}) {
    EXPECT_NEAR(siou::reweight_loss_ratio(1.0 - 1e-8, p), p, 1e-5);
  }
}

TEST(Reweight, GradientRatio) {
  EXPECT_NEAR(siou::reweight_gradient_ratio(0.5, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(siou::reweight_gradient_ratio(0.7, 1.0), 1.0, 1e-15);
  for (double p : {0.5, 1.0, 2.0, 4.0}) {
    EXPECT_NEAR(siou::reweight_gradient_ratio(1.0 - 1e-8, p), p, 1e-6);
  }
}

TEST(Reweight, DomainErrors) {
  EXPECT_THROW(siou::reweight_loss_ratio(0.0, 2.0), siou::DomainError);
  EXPECT_THROW(siou::reweight_loss_ratio(1.0, 2.0), siou::DomainError);
  EXPECT_THROW(siou::reweight_gradient_ratio(0.5, 0.0), siou::DomainError);
  EXPECT_THROW(siou::reweight_gradient_ratio(-0.1, 2.0), siou::DomainError);
}
