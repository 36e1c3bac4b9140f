#pragma once

// Shared helpers for the test binaries. Reference computations here are kept
// independent of the library's solver path on purpose: power iteration for
// spectral quantities, a fixed-step baseline for convergence comparisons, and
// an exact trust-region inner maximization for brute-force gap evaluation.

#include <bvi/bvi.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace support {

using bvi::Matrix;
using bvi::Vector;

// Spectral norm via power iteration on A^T A. Deterministic start.
inline double power_norm(const Matrix& A, int iters = 20000) {
  const Eigen::Index n = A.cols();
  Vector v = Vector::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>(i);
  v /= v.norm();
  double lambda = 0.0;
  for (int t = 0; t < iters; ++t) {
    Vector u = A.transpose() * (A * v);
    lambda = u.norm();
    if (lambda == 0.0) return 0.0;
    v = u / lambda;
  }
  return std::sqrt(lambda);
}

// Smallest eigenvalue of a symmetric matrix: power iteration on s I - S with
// s an upper bound on the spectrum.
inline double symmetric_min_eig(const Matrix& S, int iters = 20000) {
  const double s = power_norm(S, iters) + 1.0;
  const Eigen::Index n = S.cols();
  Matrix M = s * Matrix::Identity(n, n) - S;
  Vector v = Vector::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>(i);
  v /= v.norm();
  double lambda = 0.0;
  for (int t = 0; t < iters; ++t) {
    Vector u = M * v;
    lambda = v.dot(u);
    const double nrm = u.norm();
    if (nrm == 0.0) break;
    v = u / nrm;
  }
  return s - lambda;
}

// Plain mirror-prox with a fixed step 1/L, no adaptivity, no restarts.
// Returns the uniformly averaged w sequence.
inline Vector fixed_step_mirror_prox(const bvi::OperatorOracle& oracle,
                                     const bvi::ProxSetup& setup, const bvi::FeasibleSet& set,
                                     Vector z, double L, int iters) {
  Vector acc = Vector::Zero(z.size());
  for (int t = 0; t < iters; ++t) {
    const Vector w = bvi::prox_map(setup, set, z, oracle.inexact(z), L);
    z = bvi::prox_map(setup, set, z, oracle.inexact(w), L);
    acc += w;
  }
  return acc / static_cast<double>(iters);
}

// Exact max_{x in ball} <Ax + b, c - x> for positive definite symmetric part.
// The objective is a concave quadratic, so this is a trust-region problem:
// in the eigenbasis of S = (A + A^T)/2 the KKT system becomes a scalar
// secular equation in the multiplier, solved by bisection.
class AffineGapOracle {
 public:
  AffineGapOracle(Matrix A, Vector b, const bvi::FeasibleSet::Ball& ball)
      : A_(std::move(A)), b_(std::move(b)), ctr_(ball.center), R_(ball.radius) {
    const Matrix S = 0.5 * (A_ + A_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    lam_ = eig.eigenvalues();
    U_ = eig.eigenvectors();
  }

  double gap_at(const Vector& c) const {
    // maximize -x^T S x + q^T x + b^T c over the ball, q = A^T c - b
    const Vector q = A_.transpose() * c - b_;
    // shift to y = x - ctr: minimize y^T S y - p^T y, p = q - 2 S ctr
    const Vector p = q - (A_ + A_.transpose()) * ctr_;
    const Vector r = U_.transpose() * p;

    Vector y(lam_.size());
    bool interior = true;
    for (Eigen::Index i = 0; i < lam_.size(); ++i) y[i] = r[i] / (2.0 * lam_[i]);
    if (y.norm() > R_) {
      interior = false;
      // secular equation: sum r_i^2 / (2(lam_i + nu))^2 = R^2, nu >= 0
      double lo = 0.0, hi = 1.0;
      auto norm_at = [&](double nu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lam_.size(); ++i) {
          const double d = 2.0 * (lam_[i] + nu);
          s += (r[i] / d) * (r[i] / d);
        }
        return std::sqrt(s);
      };
      while (norm_at(hi) > R_) hi *= 2.0;
      for (int t = 0; t < 200; ++t) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) > R_ ? lo : hi) = mid;
      }
      const double nu = 0.5 * (lo + hi);
      for (Eigen::Index i = 0; i < lam_.size(); ++i) y[i] = r[i] / (2.0 * (lam_[i] + nu));
    }
    (void)interior;
    const Vector x = ctr_ + U_ * y;
    return (A_ * x + b_).dot(c - x);
  }

  // Coarse-to-fine scan for argmin_c gap_at(c) over the ball. The gap grows
  // at least quadratically away from the solution, so shrinking the window
  // around the running best by 5x per level keeps the minimizer inside.
  Vector brute_force_solution(int levels = 5) const {
    Vector best = ctr_;
    double best_val = gap_at(best);
    double span = R_;
    const int grid = 40;
    for (int lvl = 0; lvl < levels; ++lvl) {
      const Vector base = best;
      for (int i = 0; i <= grid; ++i)
        for (int j = 0; j <= grid; ++j) {
          Vector c(2);
          c << base[0] - span + 2.0 * span * i / grid, base[1] - span + 2.0 * span * j / grid;
          if ((c - ctr_).norm() > R_) continue;
          const double v = gap_at(c);
          if (v < best_val) {
            best_val = v;
            best = c;
          }
        }
      span /= 5.0;
    }
    return best;
  }

 private:
  Matrix A_;
  Vector b_;
  Vector ctr_;
  double R_;
  Vector lam_;
  Matrix U_;
};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      auto cand = base / ("bvi_test_" + std::to_string(::getpid()) + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(cand, ec)) {
        path = cand;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  TempDir dir;
  const auto out_path = dir.path / "out.txt";
  const auto err_path = dir.path / "err.txt";
  const std::string cmd = (env_prefix.empty() ? "" : env_prefix + " ") + std::string(BVI_CLI_PATH) +
                          " " + args + " > " + out_path.string() + " 2> " + err_path.string();
  const int rc = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

inline std::string problems_dir() { return BVI_PROBLEMS_DIR; }

}  // namespace support
