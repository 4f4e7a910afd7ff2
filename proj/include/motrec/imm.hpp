#pragma once

#include <array>

#include <Eigen/Core>

namespace motrec {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

enum class MotionStatus { kStatic, kDynamic };

/// Model bank indices. Order matters: model probabilities, the transition
/// matrix and every per-model array are (static, dynamic).
inline constexpr int kStaticModel = 0;
inline constexpr int kDynamicModel = 1;

/// Discrete-time linear motion model over [cx,cy,cz,vx,vy,vz].
struct MotionModel {
  Matrix6d f = Matrix6d::Identity();
  Matrix6d q = Matrix6d::Zero();
};

/// Random walk on position, velocity ignored. sigma_walk is meters per step
/// (the walk does not scale with dt).
MotionModel static_model(double sigma_walk);

/// Constant velocity with white-acceleration process noise sigma_accel
/// (m/s^2), discretised over dt.
MotionModel dynamic_model(double dt, double sigma_accel);

struct ImmConfig {
  Eigen::Matrix2d transition =
      (Eigen::Matrix2d() << 0.6, 0.4, 0.4, 0.6).finished();
  Eigen::Matrix3d measurement_noise = 0.01 * Eigen::Matrix3d::Identity();
  Matrix6d init_covariance = Matrix6d::Identity();
  double process_noise_accel = 0.2;
  double process_noise_walk = 0.01;
};

/// Two-model mixture state. Combined moments are kept in sync by every
/// operation that returns an ImmState.
struct ImmState {
  std::array<Vector6d, 2> mean;
  std::array<Matrix6d, 2> cov;
  Eigen::Vector2d probs = Eigen::Vector2d::Constant(0.5);
  Vector6d combined_mean = Vector6d::Zero();
  Matrix6d combined_cov = Matrix6d::Identity();
};

/// Both models start at the observation with zero velocity, covariance from
/// config, equal model probabilities.
ImmState imm_init(const Eigen::Vector3d& z0, const ImmConfig& cfg);

/// Standard IMM cycle half: Markov mixing of the model-conditional moments,
/// then per-model Kalman prediction. Throws std::invalid_argument on dt <= 0.
ImmState imm_predict(const ImmState& s, double dt, const ImmConfig& cfg);

/// Per-model Kalman position update (H = [I3|0]) with Gaussian-likelihood
/// reweighting of the model probabilities.
ImmState imm_update(const ImmState& s, const Eigen::Vector3d& z,
                    const ImmConfig& cfg);

/// Static wins only on strict majority; ties are dynamic, which keeps the
/// conservative (terminable) label.
MotionStatus motion_status(const ImmState& s);

}  // namespace motrec
