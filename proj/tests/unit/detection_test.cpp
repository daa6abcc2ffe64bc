#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tlfusion/detection.hpp"
#include "tlfusion/errors.hpp"

using namespace tlfusion;

TEST(Classes, NamesRoundTrip) {
  for (std::size_t i = 0; i < kNumClassesWithBackground; ++i) {
    const TlClass c = class_at(i);
    EXPECT_EQ(class_index(c), i);
    EXPECT_EQ(class_from_name(class_name(c)), c);
  }
  EXPECT_THROW(class_from_name("3-blue"), ParseError);
  EXPECT_EQ(class_name(TlClass::k5dhRedYleft), "5dh-red-yleft");
}

TEST(Classes, TypeMapping) {
  EXPECT_EQ(class_to_type(TlClass::k3Yellow), TlType::kThreeBulb);
  EXPECT_EQ(class_to_type(TlClass::k4Off), TlType::kFourArrow);
  EXPECT_EQ(class_to_type(TlClass::k5dhRedGleft), TlType::kFiveDoghouse);
  EXPECT_THROW(class_to_type(TlClass::kBackground), NoTypeError);
}

TEST(Classes, ValidStatesPartitionTheThirteenClasses) {
  std::set<TlClass> seen;
  std::size_t total = 0;
  for (TlType t : kAllTypes) {
    for (TlClass s : valid_states(t)) {
      EXPECT_EQ(class_to_type(s), t);
      seen.insert(s);
      ++total;
    }
  }
  EXPECT_EQ(total, kNumClasses);
  EXPECT_EQ(seen.size(), kNumClasses);
  EXPECT_EQ(valid_states(TlType::kThreeBulb).front(), TlClass::k3Red);
  EXPECT_EQ(valid_states(TlType::kFourArrow).back(), TlClass::k4Off);
}

TEST(Classes, OnlyOffAndBackgroundAreDark) {
  for (std::size_t i = 0; i < kNumClassesWithBackground; ++i) {
    const TlClass c = class_at(i);
    EXPECT_EQ(is_on(c), c != TlClass::k4Off && c != TlClass::kBackground);
  }
}

TEST(Detection, ArgmaxTakesLowestIndexOnTie) {
  Detection2D d;
  d.confidence[class_index(TlClass::k3Red)] = 0.5;
  d.confidence[class_index(TlClass::k3Yellow)] = 0.5;
  EXPECT_EQ(d.detected_class(), TlClass::k3Red);
}

TEST(Detection, ValidateRejectsBadVectors) {
  Detection2D d;
  d.box = {10, 10, 5, 5};
  d.confidence = one_hot(TlClass::k3Green);
  EXPECT_NO_THROW(d.validate());
  d.confidence[0] = 0.5;
  EXPECT_THROW(d.validate(), ValidationError);
  d.confidence = one_hot(TlClass::k3Green);
  d.score = 1.5;
  EXPECT_THROW(d.validate(), ValidationError);
}

TEST(Confusion, SingleColumnNormalizes) {
  CountMatrix c3(3, 3);
  c3 << 8, 0, 0, 2, 5, 0, 0, 0, 1;
  const auto states = valid_states(TlType::kThreeBulb);
  const ConfusionModel m =
      confusion_from_counts(TlType::kThreeBulb, {states.begin(), states.end()}, c3);
  EXPECT_DOUBLE_EQ(m.matrix(0, 0), 0.8);
  EXPECT_DOUBLE_EQ(m.matrix(1, 0), 0.2);
  EXPECT_DOUBLE_EQ(m.matrix(1, 1), 1.0);
}

TEST(Confusion, EmptyColumnIsDegenerate) {
  CountMatrix c3 = CountMatrix::Identity(3, 3);
  c3(2, 2) = 0;
  const auto states = valid_states(TlType::kThreeBulb);
  try {
    confusion_from_counts(TlType::kThreeBulb, {states.begin(), states.end()}, c3);
    FAIL();
  } catch (const DegenerateColumnError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Confusion, ColumnsAreStochastic) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::int64_t> u(0, 1000);
  for (TlType t : kAllTypes) {
    const auto states = valid_states(t);
    const auto n = static_cast<Eigen::Index>(states.size());
    for (int trial = 0; trial < 100; ++trial) {
      CountMatrix c(n, n);
      for (auto& x : c.reshaped()) x = u(rng);
      c.diagonal().array() += 1;
      const auto m = confusion_from_counts(t, {states.begin(), states.end()}, c);
      for (Eigen::Index k = 0; k < n; ++k) EXPECT_NEAR(m.matrix.col(k).sum(), 1.0, 1e-12);
      EXPECT_TRUE((m.matrix.array() >= 0.0).all());
    }
  }
}

TEST(Confusion, CountsConvergeToPosteriorOfTrueGivenObserved) {
  // Joint sampling of (true, observed) from a known prior and detector model;
  // the normalized counts must approach Bayes' P(true | observed).
  const Eigen::Vector3d prior(0.5, 0.2, 0.3);
  Eigen::Matrix3d obs_given_true;
  obs_given_true << 0.9, 0.05, 0.05, 0.1, 0.8, 0.1, 0.02, 0.08, 0.9;
  std::mt19937_64 rng(43);
  std::discrete_distribution<int> pick_true({prior(0), prior(1), prior(2)});
  std::array<std::discrete_distribution<int>, 3> pick_obs;
  for (int j = 0; j < 3; ++j) {
    pick_obs[j] = std::discrete_distribution<int>(
        {obs_given_true(j, 0), obs_given_true(j, 1), obs_given_true(j, 2)});
  }
  CountMatrix counts = CountMatrix::Zero(3, 3);
  for (int s = 0; s < 100000; ++s) {
    const int j = pick_true(rng);
    counts(j, pick_obs[j](rng)) += 1;
  }
  const auto states = valid_states(TlType::kThreeBulb);
  const auto m = confusion_from_counts(TlType::kThreeBulb, {states.begin(), states.end()}, counts);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d joint = prior.cwiseProduct(obs_given_true.col(k));
    const Eigen::Vector3d posterior = joint / joint.sum();
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.matrix(j, k), posterior(j), 1e-2);
  }
}

TEST(TypeHeights, PerType) {
  const TypeHeights h;
  EXPECT_DOUBLE_EQ(h.of(TlType::kFourArrow), 1.07);
  EXPECT_DOUBLE_EQ(h.of(TlType::kThreeBulb), 0.76);
}
