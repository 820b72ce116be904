#include "pae/losses.hpp"

#include <cmath>

#include "pae/error.hpp"

namespace pae {

double position_loss(const Vec3& x, const Vec3& x0) { return distance(x0, x); }

double orientation_loss(const Quaternion& q, const Quaternion& q0) {
  const double n = q.norm();
  if (!(n >= 1e-12)) throw ValidationError("orientation_loss: predicted quaternion has near-zero norm");
  const Quaternion u{q.w / n, q.x / n, q.y / n, q.z / n};
  const double dw = q0.w - u.w, dx = q0.x - u.x, dy = q0.y - u.y, dz = q0.z - u.z;
  return std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
}

double learnable_pose_loss(double position_term, double orientation_term, const LossWeights& weights) {
  return position_term * std::exp(-weights.s_x) + weights.s_x + orientation_term * std::exp(-weights.s_q) +
         weights.s_q;
}

static double l2_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double distillation_loss(const LatentPair& teacher, const LatentPair& student, const Vec3& decoded_x,
                         const Quaternion& decoded_q, const Pose& truth, const LossWeights& weights) {
  if (teacher.z_x.size() != student.z_x.size() || teacher.z_q.size() != student.z_q.size() ||
      teacher.z_x.size() != teacher.z_q.size()) {
    throw ValidationError("distillation_loss: latent dimensions differ (teacher " + std::to_string(teacher.dim()) +
                          ", student " + std::to_string(student.dim()) + ")");
  }
  const double pose = learnable_pose_loss(position_loss(decoded_x, truth.x), orientation_loss(decoded_q, truth.q),
                                          weights);
  return l2_diff(teacher.z_x, student.z_x) + l2_diff(teacher.z_q, student.z_q) + pose;
}

namespace graph_loss {

ad::NodeId weighted_term(ad::Graph& g, ad::NodeId term, ad::NodeId s) {
  return g.add(g.mul(term, g.exp(g.negate(s))), s);
}

ad::NodeId mean_row_distance(ad::Graph& g, ad::NodeId a, ad::NodeId b) { return g.mean(g.l2norm(g.sub(a, b))); }

PoseLossNodes pose_loss(ad::Graph& g, ad::NodeId x_pred, ad::NodeId q_pred, ad::NodeId x_true, ad::NodeId q_true,
                        ad::NodeId s_x, ad::NodeId s_q) {
  PoseLossNodes out;
  out.position = mean_row_distance(g, x_true, x_pred);
  out.orientation = mean_row_distance(g, q_true, g.normalize(q_pred));
  out.total = g.add(weighted_term(g, out.position, s_x), weighted_term(g, out.orientation, s_q));
  return out;
}

}  // namespace graph_loss

}  // namespace pae
