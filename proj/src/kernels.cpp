#include "rrp/kernels.hpp"

#include <cmath>
#include <string>

namespace rrp {

namespace {
constexpr double kSqrt5 = 2.23606797749978969;

void check_dims(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                const Eigen::VectorXd& ell) {
  if (X1.cols() != X2.cols()) {
    throw DimensionError("input matrices disagree on dimension: X1 has " +
                         std::to_string(X1.cols()) + " columns, X2 has " +
                         std::to_string(X2.cols()));
  }
  if (X1.cols() != ell.size()) {
    throw DimensionError("inputs have " + std::to_string(X1.cols()) +
                         " columns but " + std::to_string(ell.size()) +
                         " lengthscales were given");
  }
  if (!(ell.array() > 0.0).all()) {
    throw DomainError("lengthscales must be strictly positive");
  }
}
}  // namespace

KernelKind kernel_from_string(std::string_view name) {
  if (name == "matern52") return KernelKind::Matern52;
  if (name == "rbf") return KernelKind::Rbf;
  throw DomainError("unknown kernel '" + std::string(name) +
                    "' (expected matern52 or rbf)");
}

std::string to_string(KernelKind kind) {
  return kind == KernelKind::Matern52 ? "matern52" : "rbf";
}

Eigen::MatrixXd scaled_sq_dist(const Eigen::MatrixXd& X1,
                               const Eigen::MatrixXd& X2,
                               const Eigen::VectorXd& lengthscales) {
  check_dims(X1, X2, lengthscales);
  // direct per-pair differences: the norm-expansion shortcut loses relative
  // accuracy for well-separated points
  const Eigen::MatrixXd S1 =
      X1.array().rowwise() / lengthscales.transpose().array();
  const Eigen::MatrixXd S2 =
      X2.array().rowwise() / lengthscales.transpose().array();
  Eigen::MatrixXd d2(S1.rows(), S2.rows());
  for (Index j = 0; j < S2.rows(); ++j) {
    d2.col(j) =
        (S1.rowwise() - S2.row(j)).rowwise().squaredNorm();
  }
  return d2;
}

Eigen::MatrixXd matern52(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                         const Hyperparameters& hyper) {
  hyper.validate();
  const Eigen::ArrayXXd r =
      scaled_sq_dist(X1, X2, hyper.lengthscales).array().sqrt();
  return hyper.outputscale *
         ((1.0 + kSqrt5 * r + (5.0 / 3.0) * r.square()) * (-kSqrt5 * r).exp())
             .matrix();
}

Eigen::MatrixXd rbf(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                    const Hyperparameters& hyper) {
  hyper.validate();
  const Eigen::ArrayXXd d2 =
      scaled_sq_dist(X1, X2, hyper.lengthscales).array();
  return hyper.outputscale * (-0.5 * d2).exp().matrix();
}

Eigen::MatrixXd kernel_matrix(KernelKind kind, const Eigen::MatrixXd& X1,
                              const Eigen::MatrixXd& X2,
                              const Hyperparameters& hyper) {
  return kind == KernelKind::Matern52 ? matern52(X1, X2, hyper)
                                      : rbf(X1, X2, hyper);
}

Eigen::MatrixXd base_cov_matrix(const Dataset& data,
                                const Hyperparameters& hyper,
                                KernelKind kind) {
  Eigen::MatrixXd K0 = kernel_matrix(kind, data.X, data.X, hyper);
  K0.diagonal().array() += hyper.noise;
  return 0.5 * (K0 + K0.transpose());
}

KernelWithGrads kernel_with_grads(KernelKind kind, const Eigen::MatrixXd& X,
                                  const Hyperparameters& hyper) {
  hyper.validate();
  const Index n = X.rows();
  const Index d = X.cols();
  KernelWithGrads out;
  out.grads.reserve(static_cast<std::size_t>(d) + 1);

  const Eigen::MatrixXd D = scaled_sq_dist(X, X, hyper.lengthscales);

  // dK/dD, which is d x d independent; the per-dimension gradient is then
  // dK/dlog ell_k = dK/dD * (-2 * Delta_k^2 / ell_k^2).
  Eigen::ArrayXXd dK_dD(n, n);
  if (kind == KernelKind::Rbf) {
    const Eigen::ArrayXXd K = hyper.outputscale * (-0.5 * D.array()).exp();
    out.K = K.matrix();
    dK_dD = -0.5 * K;
  } else {
    const Eigen::ArrayXXd r = D.array().sqrt();
    const Eigen::ArrayXXd e = (-kSqrt5 * r).exp();
    out.K = (hyper.outputscale *
             (1.0 + kSqrt5 * r + (5.0 / 3.0) * r.square()) * e)
                .matrix();
    dK_dD = -hyper.outputscale * (5.0 / 6.0) * (1.0 + kSqrt5 * r) * e;
  }

  for (Index k = 0; k < d; ++k) {
    const Eigen::ArrayXd col = X.col(k).array();
    Eigen::ArrayXXd delta2 =
        (col.replicate(1, n) - col.transpose().replicate(n, 1)).square() /
        (hyper.lengthscales[k] * hyper.lengthscales[k]);
    out.grads.emplace_back((dK_dD * (-2.0 * delta2)).matrix());
  }
  out.grads.emplace_back(out.K);  // K is linear in sf2
  return out;
}

}  // namespace rrp
