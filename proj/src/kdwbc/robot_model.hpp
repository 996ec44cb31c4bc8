#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdwbc/types.hpp"

namespace kdwbc {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JointType { Floating, Revolute };

struct Link {
  std::string name;
  int parent = -1;  // -1 only for the floating base
  JointType joint = JointType::Revolute;
  vector3_t axis = vector3_t::UnitZ();  // revolute axis, child frame
  matrix3_t joint_rotation = matrix3_t::Identity();  // joint placement in parent frame
  vector3_t joint_translation = vector3_t::Zero();
  double mass = 0.0;
  vector3_t com = vector3_t::Zero();            // link frame
  matrix3_t inertia = matrix3_t::Zero();        // about the CoM, link frame
};

struct ContactFrame {
  std::string name;
  int link = -1;
  vector3_t offset = vector3_t::Zero();  // link frame
};

struct JointLimits {
  vector_t q_min, q_max;    // rad
  vector_t v_max;           // rad/s
  vector_t tau_min, tau_max;  // N*m
};

// Kinematic tree: link 0 is the floating base, every other link hangs off a
// single revolute joint, so joint/actuated-dof i drives link i+1.
// Contact frames come in toe/heel pairs: [0,1] on one foot link, [2,3] on the
// other, left foot first.
struct RobotModel {
  std::string name;
  std::vector<Link> links;
  std::array<ContactFrame, kNumContacts> contacts;
  JointLimits limits;
  vector_t nominal_joints;
  int n_j = 0;
  double total_mass = 0.0;

  int nv() const { return 6 + n_j; }
  int linkOfJoint(int joint_index) const { return joint_index + 1; }

  // Joints on the chain from the base to `link`, outermost last.
  std::vector<int> supportingJoints(int link) const;

  const ContactFrame& contact(int i) const { return contacts.at(static_cast<size_t>(i)); }

  // Throws ModelError naming the offending link/joint on any invariant violation.
  void validate() const;
};

// Parses the key/value model text format (see README for the format reference).
// Throws ModelError with a line reference on parse failures and invariant violations.
RobotModel loadModelFromString(const std::string& text);
RobotModel loadModelFromFile(const std::string& path);

// State in generalized coordinates. q = [base position; base ZYX euler
// (yaw,pitch,roll); joint angles], v = [base linear velocity (world); base
// angular velocity (world); joint rates].
struct GeneralizedState {
  vector_t q;
  vector_t v;

  GeneralizedState() = default;
  GeneralizedState(vector_t q_in, vector_t v_in) : q(std::move(q_in)), v(std::move(v_in)) {}

  // Rejects dimension mismatches and pitch outside (-pi/2, pi/2).
  void validate(const RobotModel& model) const;
};

}  // namespace kdwbc
