#pragma once

#include "pae/graph.hpp"
#include "pae/pose.hpp"

namespace pae {

/// Learnable uncertainty weights for the pose loss.
struct LossWeights {
  double s_x = 0.0;
  double s_q = -3.0;
};

/// ||x0 - x||_2 in metres.
double position_loss(const Vec3& x, const Vec3& x0);

/// ||q0 - q/||q|| ||_2. `q` may be unnormalized; sign-sensitive.
double orientation_loss(const Quaternion& q, const Quaternion& q0);

/// L_x exp(-s_x) + s_x + L_q exp(-s_q) + s_q.
double learnable_pose_loss(double position_term, double orientation_term, const LossWeights& weights);

/// ||z_x - zhat_x|| + ||z_q - zhat_q|| + pose loss of `decoded` against `truth`.
/// `decoded.q` is the raw head output (normalized inside the loss).
double distillation_loss(const LatentPair& teacher, const LatentPair& student, const Vec3& decoded_x,
                         const Quaternion& decoded_q, const Pose& truth, const LossWeights& weights);

namespace graph_loss {

struct PoseLossNodes {
  ad::NodeId position;     // batch mean of L_x
  ad::NodeId orientation;  // batch mean of L_q
  ad::NodeId total;        // learnable combination
};

/// Batch pose loss. `x_pred` is [B,3], `q_pred` is raw [B,4]; `x_true`,
/// `q_true` are constant nodes of the same shapes; `s_x`, `s_q` are
/// one-element nodes (parameters or constants).
PoseLossNodes pose_loss(ad::Graph& g, ad::NodeId x_pred, ad::NodeId q_pred, ad::NodeId x_true, ad::NodeId q_true,
                        ad::NodeId s_x, ad::NodeId s_q);

/// exp(-s) * term + s.
ad::NodeId weighted_term(ad::Graph& g, ad::NodeId term, ad::NodeId s);

/// Batch mean of ||a - b||_2 over rows.
ad::NodeId mean_row_distance(ad::Graph& g, ad::NodeId a, ad::NodeId b);

}  // namespace graph_loss

}  // namespace pae
