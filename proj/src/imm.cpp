#include "motrec/imm.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace motrec {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void recompute_combined(ImmState& s) {
  s.combined_mean = s.probs[0] * s.mean[0] + s.probs[1] * s.mean[1];
  Matrix6d cov = Matrix6d::Zero();
  for (int j = 0; j < 2; ++j) {
    const Vector6d d = s.mean[j] - s.combined_mean;
    cov += s.probs[j] * (s.cov[j] + d * d.transpose());
  }
  s.combined_cov = 0.5 * (cov + cov.transpose());
}

std::array<MotionModel, 2> model_bank(double dt, const ImmConfig& cfg) {
  return {static_model(cfg.process_noise_walk),
          dynamic_model(dt, cfg.process_noise_accel)};
}

}  // namespace

MotionModel static_model(double sigma_walk) {
  MotionModel m;
  m.q.topLeftCorner<3, 3>() =
      sigma_walk * sigma_walk * Eigen::Matrix3d::Identity();
  return m;
}

MotionModel dynamic_model(double dt, double sigma_accel) {
  MotionModel m;
  m.f.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
  const double s2 = sigma_accel * sigma_accel;
  const double dt2 = dt * dt;
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  m.q.topLeftCorner<3, 3>() = s2 * dt2 * dt2 / 4.0 * i3;
  m.q.topRightCorner<3, 3>() = s2 * dt2 * dt / 2.0 * i3;
  m.q.bottomLeftCorner<3, 3>() = s2 * dt2 * dt / 2.0 * i3;
  m.q.bottomRightCorner<3, 3>() = s2 * dt2 * i3;
  return m;
}

ImmState imm_init(const Eigen::Vector3d& z0, const ImmConfig& cfg) {
  ImmState s;
  Vector6d mean = Vector6d::Zero();
  mean.head<3>() = z0;
  s.mean = {mean, mean};
  s.cov = {cfg.init_covariance, cfg.init_covariance};
  s.probs = Eigen::Vector2d::Constant(0.5);
  recompute_combined(s);
  return s;
}

ImmState imm_predict(const ImmState& s, double dt, const ImmConfig& cfg) {
  if (dt <= 0.0) throw std::invalid_argument("imm_predict: dt must be > 0");

  // Mixing: c_j = sum_i T(i,j) pi_i, mu_{i|j} = T(i,j) pi_i / c_j.
  const Eigen::Vector2d c = cfg.transition.transpose() * s.probs;
  std::array<Vector6d, 2> mixed_mean;
  std::array<Matrix6d, 2> mixed_cov;
  for (int j = 0; j < 2; ++j) {
    if (c[j] <= 0.0) {
      // Nothing transitions into model j; keep its own prior.
      mixed_mean[j] = s.mean[j];
      mixed_cov[j] = s.cov[j];
      continue;
    }
    Vector6d m = Vector6d::Zero();
    for (int i = 0; i < 2; ++i)
      m += cfg.transition(i, j) * s.probs[i] / c[j] * s.mean[i];
    Matrix6d p = Matrix6d::Zero();
    for (int i = 0; i < 2; ++i) {
      const Vector6d d = s.mean[i] - m;
      p += cfg.transition(i, j) * s.probs[i] / c[j] *
           (s.cov[i] + d * d.transpose());
    }
    mixed_mean[j] = m;
    mixed_cov[j] = p;
  }

  const auto models = model_bank(dt, cfg);
  ImmState out;
  for (int j = 0; j < 2; ++j) {
    out.mean[j] = models[j].f * mixed_mean[j];
    const Matrix6d p =
        models[j].f * mixed_cov[j] * models[j].f.transpose() + models[j].q;
    out.cov[j] = 0.5 * (p + p.transpose());
  }
  out.probs = c / c.sum();
  recompute_combined(out);
  return out;
}

ImmState imm_update(const ImmState& s, const Eigen::Vector3d& z,
                    const ImmConfig& cfg) {
  ImmState out = s;
  Eigen::Vector2d likelihood;
  for (int j = 0; j < 2; ++j) {
    const Eigen::Vector3d nu = z - s.mean[j].head<3>();
    const Eigen::Matrix3d innov_cov =
        s.cov[j].topLeftCorner<3, 3>() + cfg.measurement_noise;
    const Eigen::LLT<Eigen::Matrix3d> llt(innov_cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("imm_update: singular innovation covariance");

    // K = P H^T S^-1 with H = [I3|0].
    const Eigen::Matrix<double, 6, 3> pht = s.cov[j].leftCols<3>();
    const Eigen::Matrix<double, 6, 3> gain =
        llt.solve(pht.transpose()).transpose();
    out.mean[j] = s.mean[j] + gain * nu;

    Matrix6d joseph = Matrix6d::Identity();
    joseph.leftCols<3>() -= gain;
    const Matrix6d p = joseph * s.cov[j] * joseph.transpose() +
                       gain * cfg.measurement_noise * gain.transpose();
    out.cov[j] = 0.5 * (p + p.transpose());

    const double maha = nu.dot(llt.solve(nu));
    const double det = innov_cov.determinant();
    likelihood[j] =
        std::exp(-0.5 * maha) / std::sqrt(kTwoPi * kTwoPi * kTwoPi * det);
  }

  const Eigen::Vector2d weighted = likelihood.cwiseProduct(s.probs);
  const double total = weighted.sum();
  // Far-outlier underflow: keep the predicted probabilities.
  if (total > 0.0 && std::isfinite(total)) out.probs = weighted / total;
  recompute_combined(out);
  return out;
}

MotionStatus motion_status(const ImmState& s) {
  return s.probs[kStaticModel] > s.probs[kDynamicModel]
             ? MotionStatus::kStatic
             : MotionStatus::kDynamic;
}

}  // namespace motrec
