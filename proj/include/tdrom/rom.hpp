#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tdrom {

/// Time-ordered latent states z_1..z_N, each of length n, spaced dt apart.
struct LatentSequence {
  std::size_t n = 0;
  std::vector<Eigen::VectorXd> states;
  double dt_hours = 6.0;

  std::size_t size() const { return states.size(); }
  void validate() const;
};

/// Delay embedding of a sequence at depth d. Column j of `past` stacks
/// [z_{d+j-1}; ...; z_j] newest first and column j of `future` is z_{d+j}
/// (1-based states), so both have N - d columns.
struct DelayMatrices {
  Eigen::MatrixXd past;    // n*d x (N-d)
  Eigen::MatrixXd future;  // n x (N-d)
};

DelayMatrices build_delay_matrices(const LatentSequence& seq, std::size_t d);

/// z_{k+1} = L [z_k; z_{k-1}; ...; z_{k-d+1}], L is n x n*d.
struct DelayRom {
  std::size_t n = 0;
  std::size_t d = 0;
  Eigen::MatrixXd L;

  void validate() const;
};

/// L = [I 0 ... 0]: repeats the newest state.
DelayRom persistence_operator(std::size_t n, std::size_t d);

/// argmin_L |future - L past|_F^2 + lambda |L|_F^2. lambda = 0 gives the
/// minimum-norm least-squares solution (column-pivoted QR of past^T);
/// lambda > 0 solves the regularized normal equations by Cholesky.
DelayRom fit_operator(const Eigen::MatrixXd& past, const Eigen::MatrixXd& future, double lambda = 0.0);

/// |future - L past|_F.
double operator_residual(const DelayRom& rom, const Eigen::MatrixXd& past, const Eigen::MatrixXd& future);

/// `window` holds exactly d states, oldest first. Returns z_1..z_T.
std::vector<Eigen::VectorXd> rollout(const DelayRom& rom, std::span<const Eigen::VectorXd> window,
                                     std::size_t steps);

/// Least-squares bookkeeping: each output row of L has n*d unknowns and is
/// fitted from N - d equations.
struct EquationCount {
  std::size_t unknowns_per_row = 0;
  std::size_t equations = 0;
  bool underdetermined() const { return unknowns_per_row > equations; }
  /// unknowns / equations; values near or above 1 are poorly conditioned.
  double ratio() const { return static_cast<double>(unknowns_per_row) / static_cast<double>(equations); }
};

EquationCount equation_count(std::size_t n, std::size_t d, std::size_t sequence_length);

/// Layout: "ROMOP1"; u32 n, d; n*(n*d) f64 entries of L row-major.
/// Little-endian.
void write_operator(const std::string& path, const DelayRom& rom);
DelayRom read_operator(const std::string& path);

}  // namespace tdrom
