#pragma once

// Monte Carlo marginalization of a fitted GP's posterior over every input but
// one. Works directly from the kriging equations: for a kept coordinate x and
// sampled remaining coordinates z, r(x, z) factors as a(x) * b(z), which keeps
// 1e5-draw estimates affordable on a full grid.

#include "gsax/gp.hpp"
#include "gsax/random.hpp"

#include "oracles.hpp"

#include <cmath>

namespace oracle {

struct MarginalMc {
  MeanSe mean;
  MeanSe variance;
};

class MarginalSampler {
 public:
  MarginalSampler(const gsax::GpModel& model, std::size_t dim, Eigen::Index draws,
                  std::uint64_t seed)
      : m_(model), i_(static_cast<Eigen::Index>(dim)), n_draws_(draws) {
    const Eigen::Index d = static_cast<Eigen::Index>(model.dim());
    const Eigen::Index n = static_cast<Eigen::Index>(model.size());
    gsax::Rng rng = gsax::make_rng(seed);
    z1_.resize(draws, d);
    z2_.resize(draws, d);
    for (Eigen::Index k = 0; k < draws; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) z1_(k, j) = gsax::uniform01(rng);
      for (Eigen::Index j = 0; j < d; ++j) z2_(k, j) = gsax::uniform01(rng);
    }
    b1_ = others(z1_);
    b2_ = others(z2_);
    rinv_ = model.factor().solve(gsax::Matrix::Identity(n, n));
    prior_.resize(draws);
    const gsax::Vector& theta = model.theta();
    for (Eigen::Index k = 0; k < draws; ++k) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (j == i_) continue;
        s += theta[j] * (z1_(k, j) - z2_(k, j)) * (z1_(k, j) - z2_(k, j));
      }
      prior_[k] = std::exp(-s);
    }
  }

  /// Estimates at x, given in original units of the kept input.
  MarginalMc at(double x) const {
    const auto& b = m_.bounds();
    const double u = (x - b.lower()[i_]) / b.width(static_cast<std::size_t>(i_));
    const gsax::Matrix& tr = m_.unit_inputs();
    const double theta_i = m_.theta()[i_];
    const double sf = m_.signal_fraction();
    const gsax::Vector a =
        (-theta_i * (tr.col(i_).array() - u).square()).exp().matrix() * sf;

    const gsax::Matrix r1 = b1_.array().rowwise() * a.transpose().array();
    const gsax::Matrix r2 = b2_.array().rowwise() * a.transpose().array();
    const gsax::Matrix f1 = basis(z1_, u);
    const gsax::Matrix f2 = basis(z2_, u);

    MarginalMc out;
    const double scale = m_.output_scale();
    const gsax::Vector mean_std = f1 * m_.beta() + r1 * m_.weights();
    out.mean = mean_se((m_.output_mean() + scale * mean_std.array()).matrix());

    const gsax::Matrix w = r2 * rinv_;
    const gsax::Matrix t1 = r1 * m_.rinv_f() - f1;
    const gsax::Matrix t2 = r2 * m_.rinv_f() - f2;
    const gsax::Matrix gt2 = t2 * m_.gls_inverse();
    const gsax::Vector cov = sf * prior_.array() - (r1.array() * w.array()).rowwise().sum() +
                             (t1.array() * gt2.array()).rowwise().sum();
    out.variance = mean_se(cov * m_.process_variance());
    return out;
  }

 private:
  gsax::Matrix others(const gsax::Matrix& z) const {
    const gsax::Matrix& tr = m_.unit_inputs();
    const gsax::Vector& theta = m_.theta();
    gsax::Matrix b(z.rows(), tr.rows());
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
      for (Eigen::Index l = 0; l < tr.rows(); ++l) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
          if (j == i_) continue;
          s += theta[j] * (z(k, j) - tr(l, j)) * (z(k, j) - tr(l, j));
        }
        b(k, l) = std::exp(-s);
      }
    }
    return b;
  }

  gsax::Matrix basis(const gsax::Matrix& z, double u) const {
    const auto p = static_cast<Eigen::Index>(m_.basis_size());
    gsax::Matrix f(z.rows(), p);
    f.col(0).setOnes();
    if (p > 1) {
      f.rightCols(p - 1) = z;
      f.col(i_ + 1).setConstant(u);
    }
    return f;
  }

  const gsax::GpModel& m_;
  Eigen::Index i_;
  Eigen::Index n_draws_;
  gsax::Matrix z1_, z2_, b1_, b2_, rinv_;
  gsax::Vector prior_;
};

}  // namespace oracle
