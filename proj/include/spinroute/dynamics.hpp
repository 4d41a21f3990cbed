#pragma once
// Exact propagation under a time-independent Hermitian Hamiltonian via its
// eigendecomposition: psi(t) = V exp(-i w t) V^dag psi(0), H in rad/us.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "units.hpp"

namespace spinroute {

class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols())
      throw std::invalid_argument("SpectralPropagator: square matrix required");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("SpectralPropagator: eigendecomposition failed");
    w_ = es.eigenvalues();
    v_ = es.eigenvectors();
  }

  Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi0, double t_us) const {
    const Eigen::VectorXcd c0 = v_.adjoint() * psi0;
    Eigen::VectorXcd phased(c0.size());
    for (Eigen::Index k = 0; k < c0.size(); ++k)
      phased[k] = std::exp(-I * w_[k] * t_us) * c0[k];
    return v_ * phased;
  }

  // One column per time point.
  Eigen::MatrixXcd evolve_many(const Eigen::VectorXcd& psi0,
                               const std::vector<double>& ts_us) const {
    Eigen::MatrixXcd out(psi0.size(), static_cast<Eigen::Index>(ts_us.size()));
    const Eigen::VectorXcd c0 = v_.adjoint() * psi0;
    for (std::size_t j = 0; j < ts_us.size(); ++j) {
      Eigen::VectorXcd phased(c0.size());
      for (Eigen::Index k = 0; k < c0.size(); ++k)
        phased[k] = std::exp(-I * w_[k] * ts_us[j]) * c0[k];
      out.col(static_cast<Eigen::Index>(j)) = v_ * phased;
    }
    return out;
  }

  const Eigen::VectorXd& eigenvalues() const { return w_; }
  const Eigen::MatrixXcd& eigenvectors() const { return v_; }

 private:
  Eigen::VectorXd w_;
  Eigen::MatrixXcd v_;
};

// Site populations |<n|psi(t)>|^2 over a time grid; row = time index.
inline Eigen::MatrixXd populations_over(const Eigen::MatrixXcd& h,
                                        const Eigen::VectorXcd& psi0,
                                        const std::vector<double>& ts_us) {
  const SpectralPropagator prop(h);
  const Eigen::MatrixXcd traj = prop.evolve_many(psi0, ts_us);
  return traj.cwiseAbs2().transpose();
}

}  // namespace spinroute
