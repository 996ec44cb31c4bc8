#include "kdwbc/robot_model.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace kdwbc;

TEST(Model, LoadBiped24) {
  const RobotModel m = test::loadBiped24();
  EXPECT_EQ(m.n_j, 24);
  EXPECT_EQ(m.links.size(), 25u);
  EXPECT_NEAR(m.total_mass, 46.0, 1e-9);
  EXPECT_EQ(m.contacts.size(), 4u);
  EXPECT_EQ(m.contacts[0].name, "l_toe");
  EXPECT_EQ(m.contacts[0].link, m.contacts[1].link);
  EXPECT_EQ(m.contacts[2].link, m.contacts[3].link);
}

TEST(Model, LoadBiped18) {
  const RobotModel m = test::loadBiped18();
  EXPECT_EQ(m.n_j, 18);
  EXPECT_NEAR(m.total_mass, 46.0, 1e-9);
}

TEST(Model, HeavyLimbMassFraction) {
  const RobotModel m = test::loadBiped24();
  double limb_mass = 0.0;
  for (size_t i = 1; i < m.links.size(); ++i) limb_mass += m.links[i].mass;
  EXPECT_GT(limb_mass / m.total_mass, 0.60);
}

TEST(Model, FixedBasePendulumRejected) {
  const std::string text = R"(
model pendulum
link base
  joint revolute 0 1 0
  mass 1.0
  com 0 0 -0.5
  inertia 0.1 0 0 0.1 0 0.01
)";
  try {
    loadModelFromString(text);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("floating base"), std::string::npos) << e.what();
  }
}

TEST(Model, ZeroMassLinkNamed) {
  const std::string text = R"(
model bad
link base
  joint floating
  mass 5.0
  com 0 0 0
  inertia 0.1 0 0 0.1 0 0.1
link l_foot
  parent base
  joint revolute 0 1 0
  origin 0 0.1 -0.4
  mass 0.0
  com 0 0 0
  inertia 0.01 0 0 0.01 0 0.01
  limits -1 1 10 -50 50
link r_foot
  parent base
  joint revolute 0 1 0
  origin 0 -0.1 -0.4
  mass 1.0
  com 0 0 0
  inertia 0.01 0 0 0.01 0 0.01
  limits -1 1 10 -50 50
contact l_toe l_foot 0.1 0 0
contact l_heel l_foot -0.1 0 0
contact r_toe r_foot 0.1 0 0
contact r_heel r_foot -0.1 0 0
)";
  try {
    loadModelFromString(text);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("l_foot"), std::string::npos) << e.what();
  }
}

TEST(Model, ParseErrorCarriesLine) {
  const std::string text = "model x\nlink base\n  joint floating\n  mass oops\n";
  try {
    loadModelFromString(text);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Model, BadLimitsRejected) {
  // q_min >= q_max on r_foot
  const std::string text = R"(
model bad
link base
  joint floating
  mass 5.0
  com 0 0 0
  inertia 0.1 0 0 0.1 0 0.1
link l_foot
  parent base
  joint revolute 0 1 0
  origin 0 0.1 -0.4
  mass 1.0
  com 0 0 0
  inertia 0.01 0 0 0.01 0 0.01
  limits -1 1 10 -50 50
link r_foot
  parent base
  joint revolute 0 1 0
  origin 0 -0.1 -0.4
  mass 1.0
  com 0 0 0
  inertia 0.01 0 0 0.01 0 0.01
  limits 1 -1 10 -50 50
contact l_toe l_foot 0.1 0 0
contact l_heel l_foot -0.1 0 0
contact r_toe r_foot 0.1 0 0
contact r_heel r_foot -0.1 0 0
)";
  try {
    loadModelFromString(text);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("r_foot"), std::string::npos) << e.what();
  }
}

TEST(Model, StateValidation) {
  const RobotModel m = test::loadBiped18();
  GeneralizedState s(vector_t::Zero(m.nv()), vector_t::Zero(m.nv()));
  EXPECT_NO_THROW(s.validate(m));

  GeneralizedState wrong_dim(vector_t::Zero(m.nv() - 1), vector_t::Zero(m.nv()));
  EXPECT_THROW(wrong_dim.validate(m), std::invalid_argument);

  GeneralizedState gimbal(vector_t::Zero(m.nv()), vector_t::Zero(m.nv()));
  gimbal.q[4] = M_PI / 2.0;
  EXPECT_THROW(gimbal.validate(m), std::invalid_argument);
}
