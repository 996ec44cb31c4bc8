#include "kdwbc/robot_model.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "kdwbc/geometry.hpp"

namespace kdwbc {

std::vector<int> RobotModel::supportingJoints(int link) const {
  std::vector<int> joints;
  int i = link;
  while (i > 0) {
    joints.push_back(i - 1);
    i = links[static_cast<size_t>(i)].parent;
  }
  std::reverse(joints.begin(), joints.end());
  return joints;
}

void RobotModel::validate() const {
  if (links.empty() || links[0].joint != JointType::Floating || links[0].parent != -1) {
    throw ModelError("floating base required: link 0 must carry the floating joint");
  }
  for (size_t i = 1; i < links.size(); ++i) {
    const Link& l = links[i];
    if (l.joint != JointType::Revolute) {
      throw ModelError("link '" + l.name + "': only link 0 may be floating");
    }
    if (l.parent < 0 || l.parent >= static_cast<int>(i)) {
      throw ModelError("link '" + l.name + "': parent index must precede the link in the tree");
    }
    if (std::abs(l.axis.norm() - 1.0) > 1e-9) {
      throw ModelError("joint of link '" + l.name + "': axis must be a unit vector");
    }
  }
  for (const Link& l : links) {
    if (!(l.mass > 0.0)) {
      throw ModelError("link '" + l.name + "': mass must be > 0");
    }
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ModelError("link '" + l.name + "': inertia matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<matrix3_t> es(l.inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw ModelError("link '" + l.name + "': inertia matrix must be positive definite");
    }
  }
  if (n_j != static_cast<int>(links.size()) - 1) {
    throw ModelError("actuated dof count inconsistent with link count");
  }

  // contacts: toe/heel pairs on two distinct leaf links
  std::vector<bool> has_child(links.size(), false);
  for (size_t i = 1; i < links.size(); ++i) has_child[static_cast<size_t>(links[i].parent)] = true;
  for (const ContactFrame& c : contacts) {
    if (c.link <= 0 || c.link >= static_cast<int>(links.size())) {
      throw ModelError("contact '" + c.name + "': invalid link index");
    }
    if (has_child[static_cast<size_t>(c.link)]) {
      throw ModelError("contact '" + c.name + "': must attach to a foot (leaf) link");
    }
  }
  if (contacts[0].link != contacts[1].link || contacts[2].link != contacts[3].link ||
      contacts[0].link == contacts[2].link) {
    throw ModelError("contacts must form toe/heel pairs on two distinct foot links");
  }

  auto checkDim = [&](const vector_t& v, const char* what) {
    if (v.size() != n_j) throw ModelError(std::string("joint limits '") + what + "' missing for some joint");
  };
  checkDim(limits.q_min, "q_min");
  checkDim(limits.q_max, "q_max");
  checkDim(limits.v_max, "v_max");
  checkDim(limits.tau_min, "tau_min");
  checkDim(limits.tau_max, "tau_max");
  checkDim(nominal_joints, "nominal");
  for (int j = 0; j < n_j; ++j) {
    const std::string& nm = links[static_cast<size_t>(j + 1)].name;
    if (!(limits.q_min[j] < limits.q_max[j])) throw ModelError("joint of link '" + nm + "': q_min must be < q_max");
    if (!(limits.v_max[j] > 0.0)) throw ModelError("joint of link '" + nm + "': v_max must be > 0");
    if (!(limits.tau_min[j] < 0.0 && limits.tau_max[j] > 0.0)) {
      throw ModelError("joint of link '" + nm + "': torque limits must straddle zero");
    }
  }
}

namespace {

struct LinkSpec {
  Link link;
  std::string parent_name;
  bool has_mass = false, has_inertia = false;
  double q_min = 0, q_max = 0, v_max = 0, tau_min = 0, tau_max = 0;
  bool has_limits = false;
  double nominal = 0.0;
  int line = 0;
};

struct ContactSpec {
  std::string name, link_name;
  vector3_t offset;
  int line = 0;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ModelError("model line " + std::to_string(line) + ": " + msg);
}

double num(const std::string& tok, int line) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) fail(line, "bad number '" + tok + "'");
    return v;
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception&) {
    fail(line, "bad number '" + tok + "'");
  }
}

}  // namespace

RobotModel loadModelFromString(const std::string& text) {
  std::vector<LinkSpec> specs;
  std::vector<ContactSpec> contact_specs;
  std::string model_name = "unnamed";
  LinkSpec* cur = nullptr;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> args;
    for (std::string tok; ls >> tok;) args.push_back(tok);

    if (key == "model") {
      if (args.size() != 1) fail(line_no, "model expects a name");
      model_name = args[0];
    } else if (key == "link") {
      if (args.size() != 1) fail(line_no, "link expects a name");
      specs.emplace_back();
      cur = &specs.back();
      cur->link.name = args[0];
      cur->line = line_no;
    } else if (key == "contact") {
      if (args.size() != 5) fail(line_no, "contact expects: name link x y z");
      ContactSpec c;
      c.name = args[0];
      c.link_name = args[1];
      c.offset = vector3_t(num(args[2], line_no), num(args[3], line_no), num(args[4], line_no));
      c.line = line_no;
      contact_specs.push_back(c);
      cur = nullptr;
    } else if (cur == nullptr) {
      fail(line_no, "key '" + key + "' outside a link block");
    } else if (key == "parent") {
      if (args.size() != 1) fail(line_no, "parent expects a name");
      cur->parent_name = args[0];
    } else if (key == "joint") {
      if (args.size() == 1 && args[0] == "floating") {
        cur->link.joint = JointType::Floating;
      } else if (args.size() == 4 && args[0] == "revolute") {
        cur->link.joint = JointType::Revolute;
        cur->link.axis = vector3_t(num(args[1], line_no), num(args[2], line_no), num(args[3], line_no));
      } else {
        fail(line_no, "joint expects 'floating' or 'revolute ax ay az'");
      }
    } else if (key == "origin") {
      if (args.size() != 3) fail(line_no, "origin expects x y z");
      cur->link.joint_translation =
          vector3_t(num(args[0], line_no), num(args[1], line_no), num(args[2], line_no));
    } else if (key == "rpy") {
      if (args.size() != 3) fail(line_no, "rpy expects roll pitch yaw");
      const vector3_t rpy(num(args[0], line_no), num(args[1], line_no), num(args[2], line_no));
      cur->link.joint_rotation = rotationZyx(vector3_t(rpy[2], rpy[1], rpy[0]));
    } else if (key == "mass") {
      if (args.size() != 1) fail(line_no, "mass expects one value");
      cur->link.mass = num(args[0], line_no);
      cur->has_mass = true;
    } else if (key == "com") {
      if (args.size() != 3) fail(line_no, "com expects x y z");
      cur->link.com = vector3_t(num(args[0], line_no), num(args[1], line_no), num(args[2], line_no));
    } else if (key == "inertia") {
      if (args.size() != 6) fail(line_no, "inertia expects ixx ixy ixz iyy iyz izz");
      const double ixx = num(args[0], line_no), ixy = num(args[1], line_no), ixz = num(args[2], line_no);
      const double iyy = num(args[3], line_no), iyz = num(args[4], line_no), izz = num(args[5], line_no);
      cur->link.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
      cur->has_inertia = true;
    } else if (key == "limits") {
      if (args.size() != 5) fail(line_no, "limits expects qmin qmax vmax taumin taumax");
      cur->q_min = num(args[0], line_no);
      cur->q_max = num(args[1], line_no);
      cur->v_max = num(args[2], line_no);
      cur->tau_min = num(args[3], line_no);
      cur->tau_max = num(args[4], line_no);
      cur->has_limits = true;
    } else if (key == "nominal") {
      if (args.size() != 1) fail(line_no, "nominal expects one value");
      cur->nominal = num(args[0], line_no);
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }

  if (specs.empty()) throw ModelError("model has no links");

  RobotModel model;
  model.name = model_name;
  std::map<std::string, int> index;
  for (LinkSpec& s : specs) {
    if (index.count(s.link.name)) fail(s.line, "duplicate link '" + s.link.name + "'");
    if (!s.has_mass) fail(s.line, "link '" + s.link.name + "' is missing mass");
    if (!s.has_inertia) fail(s.line, "link '" + s.link.name + "' is missing inertia");
    const int idx = static_cast<int>(model.links.size());
    if (idx == 0) {
      if (!s.parent_name.empty()) fail(s.line, "first link must be the floating base (no parent)");
      if (s.link.joint != JointType::Floating) fail(s.line, "floating base required: first link must use 'joint floating'");
    } else {
      if (s.link.joint == JointType::Floating) fail(s.line, "only the first link may be floating");
      auto it = index.find(s.parent_name);
      if (it == index.end()) fail(s.line, "link '" + s.link.name + "': unknown parent '" + s.parent_name + "'");
      s.link.parent = it->second;
      if (!s.has_limits) fail(s.line, "link '" + s.link.name + "' is missing joint limits");
    }
    index[s.link.name] = idx;
    model.links.push_back(s.link);
  }

  model.n_j = static_cast<int>(model.links.size()) - 1;
  model.limits.q_min.resize(model.n_j);
  model.limits.q_max.resize(model.n_j);
  model.limits.v_max.resize(model.n_j);
  model.limits.tau_min.resize(model.n_j);
  model.limits.tau_max.resize(model.n_j);
  model.nominal_joints.resize(model.n_j);
  for (int j = 0; j < model.n_j; ++j) {
    const LinkSpec& s = specs[static_cast<size_t>(j + 1)];
    model.limits.q_min[j] = s.q_min;
    model.limits.q_max[j] = s.q_max;
    model.limits.v_max[j] = s.v_max;
    model.limits.tau_min[j] = s.tau_min;
    model.limits.tau_max[j] = s.tau_max;
    model.nominal_joints[j] = s.nominal;
  }

  if (contact_specs.size() != kNumContacts) {
    throw ModelError("model must declare exactly " + std::to_string(kNumContacts) + " contact frames, got " +
                     std::to_string(contact_specs.size()));
  }
  for (size_t i = 0; i < contact_specs.size(); ++i) {
    const ContactSpec& c = contact_specs[i];
    auto it = index.find(c.link_name);
    if (it == index.end()) fail(c.line, "contact '" + c.name + "': unknown link '" + c.link_name + "'");
    model.contacts[i] = ContactFrame{c.name, it->second, c.offset};
  }

  for (const Link& l : model.links) {
    model.total_mass += l.mass;
  }

  model.validate();
  return model;
}

RobotModel loadModelFromFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return loadModelFromString(ss.str());
}

void GeneralizedState::validate(const RobotModel& model) const {
  if (q.size() != model.nv() || v.size() != model.nv()) {
    throw std::invalid_argument("generalized state dimension mismatch: expected " + std::to_string(model.nv()));
  }
  if (std::abs(q[4]) >= M_PI / 2.0 - 1e-9) {
    throw std::invalid_argument("base pitch at or beyond +/- pi/2 (euler parameterization singular)");
  }
}

}  // namespace kdwbc
