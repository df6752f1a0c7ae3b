#include <gtest/gtest.h>

#include <random>

#include "siou/rating.hpp"

using siou::Box;
using siou::CriterionId;
using siou::RatingRecord;

namespace {

RatingRecord rec(int rating, double gt_w, double shift, std::optional<bool> context = {},
                 std::optional<bool> expertise = {}, std::optional<int> age = {}) {
  return {rating, Box(0, 0, gt_w, gt_w), Box(shift, 0, gt_w, gt_w), context, expertise, age};
}

} // namespace

TEST(Kendall, Examples) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 3, 2, 4};
  EXPECT_NEAR(siou::kendall_tau(x, y), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(siou::kendall_tau(x, x), 1.0, 1e-15);
  const std::vector<double> rev{4, 3, 2, 1};
  EXPECT_NEAR(siou::kendall_tau(x, rev), -1.0, 1e-15);
}

TEST(Kendall, TieCorrection) {
  // tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)); hand count for this case:
  // pairs 6, C = 4, D = 0, ties in x 1, ties in y 1 -> 4 / 5.
  const std::vector<double> x{1, 1, 2, 3};
  const std::vector<double> y{1, 2, 3, 3};
  EXPECT_NEAR(siou::kendall_tau(x, y), 0.8, 1e-15);
}

TEST(Kendall, Errors) {
  const std::vector<double> a{1, 2};
  const std::vector<double> b{1, 2, 3};
  EXPECT_THROW(siou::kendall_tau(a, b), siou::InvalidArgument);
  const std::vector<double> c{2, 2, 2};
  EXPECT_THROW(siou::kendall_tau(b, c), siou::DegenerateInput);
}

TEST(Kendall, MonotoneAndIndependentRatings) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> shift(0, 9);
  std::vector<RatingRecord> mono;
  for (int i = 0; i < 300; ++i) {
    auto r = rec(1, 10, shift(gen));
    const double u = siou::iou(r.proposal_box, r.gt_box);
    r.rating = 1 + std::min(4, static_cast<int>(u * 5));
    mono.push_back(r);
  }
  // No ties in IoU, no discordant pair: tau-b = sqrt(1 - tied_y / pairs).
  double pairs = 0, tied = 0;
  for (std::size_t i = 0; i < mono.size(); ++i) {
    for (std::size_t j = i + 1; j < mono.size(); ++j) {
      pairs += 1;
      tied += mono[i].rating == mono[j].rating;
    }
  }
  EXPECT_NEAR(siou::criterion_rating_correlation(mono, CriterionId::IoU, {}),
              std::sqrt(1 - tied / pairs), 1e-12);

  std::uniform_int_distribution<int> rating(1, 5);
  std::vector<RatingRecord> noise;
  for (int i = 0; i < 1000; ++i) {
    noise.push_back(rec(rating(gen), 10, shift(gen)));
  }
  EXPECT_LT(std::abs(siou::criterion_rating_correlation(noise, CriterionId::IoU, {})), 0.1);
}

TEST(RelativeGap, FromMeans) {
  const auto c = siou::relative_gap_from_means({0.2, 0.3, 0.4});
  EXPECT_NEAR(c[0], -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(c[1], 0.0, 1e-15);
  EXPECT_NEAR(c[2], 1.0 / 3.0, 1e-15);
  const auto t = siou::relative_gap_from_means({0.214, 0.223, 0.245});
  EXPECT_LT(t[0], 0.0);
  EXPECT_GT(t[2], 0.0);
  EXPECT_NEAR(t[0] + t[1] + t[2], 0.0, 1e-12);
  const auto flat = siou::relative_gap_from_means({0.5, 0.5, 0.5});
  for (double v : flat) {
    EXPECT_DOUBLE_EQ(v, 0.0);
  }
  EXPECT_THROW(siou::relative_gap_from_means({0, 0, 0}), siou::DegenerateInput);
}

TEST(RelativeGap, FromRecords) {
  std::vector<RatingRecord> r{rec(3, 10, 2), rec(3, 50, 10), rec(3, 200, 20), rec(3, 12, 1)};
  const auto rows = siou::relative_gap(r, CriterionId::IoU, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].count[0], 2u);
  EXPECT_NEAR(rows[0].gap[0] + rows[0].gap[1] + rows[0].gap[2], 0.0, 1e-12);
  r.push_back(rec(5, 10, 0));
  try {
    siou::relative_gap(r, CriterionId::IoU, {});
    FAIL() << "expected EmptyCell";
  } catch (const siou::EmptyCell& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("medium/r=5"), std::string::npos);
    EXPECT_NE(msg.find("large/r=5"), std::string::npos);
  }
}

TEST(GroupMeans, Basics) {
  std::vector<RatingRecord> r;
  for (int i = 0; i < 10; ++i) {
    r.push_back(rec(4, 10, 1, true, false, 20));
    r.push_back(rec(3, 200, 1, false, true, 30));
  }
  const auto by_size = siou::group_means(r, siou::Grouping::Size, CriterionId::IoU, {});
  ASSERT_EQ(by_size.size(), 2u);
  EXPECT_EQ(by_size[0].group, "large");
  EXPECT_EQ(by_size[1].group, "small");
  EXPECT_DOUBLE_EQ(by_size[1].mean_rating - by_size[0].mean_rating, 1.0);

  const auto by_age = siou::group_means(r, siou::Grouping::AgeBucket, CriterionId::IoU, {});
  ASSERT_EQ(by_age.size(), 2u);
  EXPECT_EQ(by_age[0].group, "(10,25]");

  std::vector<RatingRecord> single(r.begin(), r.begin() + 1);
  single.push_back(r[0]);
  const auto one = siou::group_means(single, siou::Grouping::Context, CriterionId::IoU, {});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].mean_rating, 4.0);

  // Records without the field are left out.
  r.push_back(rec(1, 10, 1));
  EXPECT_EQ(siou::group_means(r, siou::Grouping::Expertise, CriterionId::IoU, {}).size(), 2u);
  EXPECT_EQ(siou::age_bucket(70), "other");
  EXPECT_THROW(siou::parse_grouping("height"), siou::InvalidArgument);
}

TEST(Anova, HandComputed) {
  const std::vector<std::vector<double>> g{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
  const auto r = siou::one_way_anova(g);
  EXPECT_NEAR(r.f_statistic, 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.df_between, 2);
  EXPECT_DOUBLE_EQ(r.df_within, 6);
  // For 2 numerator degrees of freedom, P(F > f) = (1 + 2 f / d2)^(-d2 / 2).
  EXPECT_NEAR(r.p_value, 0.125, 1e-12);
}

TEST(Anova, Extremes) {
  const std::vector<std::vector<double>> same{{1, 2, 3}, {1, 2, 3}};
  const auto r = siou::one_way_anova(same);
  EXPECT_NEAR(r.f_statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  const std::vector<std::vector<double>> far{{0, 0, 0, 0}, {10, 10, 10, 10.0001}};
  const auto f = siou::one_way_anova(far);
  EXPECT_GT(f.f_statistic, 1e6);
  EXPECT_LT(f.p_value, 1e-6);
  const std::vector<std::vector<double>> one{{1, 2}};
  EXPECT_THROW(siou::one_way_anova(one), siou::InsufficientSamples);
  const std::vector<std::vector<double>> flat{{1, 1}, {2, 2}};
  EXPECT_THROW(siou::one_way_anova(flat), siou::DegenerateInput);
}
