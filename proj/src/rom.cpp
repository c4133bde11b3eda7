#include "tdrom/rom.hpp"

#include <cstdint>

#include "tdrom/binary_io.hpp"
#include "tdrom/error.hpp"
#include "tdrom/linalg.hpp"

namespace tdrom {
namespace {

constexpr char kMagic[] = "ROMOP1";

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

void LatentSequence::validate() const {
  if (n == 0) throw ShapeError("latent sequence: dimension n must be positive");
  if (!(dt_hours > 0.0)) throw ConfigError("latent sequence: dt_hours must be positive");
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (static_cast<std::size_t>(states[k].size()) != n)
      throw ShapeError("latent sequence: state " + std::to_string(k) + " has length " +
                       std::to_string(states[k].size()) + ", expected " + std::to_string(n));
    if (!states[k].allFinite()) throw NumericalError("latent sequence: state " + std::to_string(k) + " is not finite");
  }
}

DelayMatrices build_delay_matrices(const LatentSequence& seq, std::size_t d) {
  seq.validate();
  if (d == 0) throw ConfigError("delay depth d must be at least 1");
  const std::size_t N = seq.size();
  if (N < d + 1)
    throw DataError("sequence too short: " + std::to_string(N) + " states cannot embed delay depth " +
                    std::to_string(d) + " (need at least " + std::to_string(d + 1) + ")");
  const std::size_t n = seq.n, cols = N - d;
  DelayMatrices m{Eigen::MatrixXd(idx(n * d), idx(cols)), Eigen::MatrixXd(idx(n), idx(cols))};
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t lag = 0; lag < d; ++lag) m.past.block(idx(lag * n), idx(j), idx(n), 1) = seq.states[j + d - 1 - lag];
    m.future.col(idx(j)) = seq.states[j + d];
  }
  return m;
}

void DelayRom::validate() const {
  if (n == 0 || d == 0) throw ConfigError("operator: n and d must be positive");
  if (static_cast<std::size_t>(L.rows()) != n || static_cast<std::size_t>(L.cols()) != n * d)
    throw ShapeError("operator: L is " + std::to_string(L.rows()) + "x" + std::to_string(L.cols()) + ", expected " +
                     std::to_string(n) + "x" + std::to_string(n * d));
  if (!L.allFinite()) throw NumericalError("operator: L has non-finite entries");
}

DelayRom persistence_operator(std::size_t n, std::size_t d) {
  DelayRom rom{n, d, Eigen::MatrixXd::Zero(idx(n), idx(n * d))};
  rom.L.leftCols(idx(n)).setIdentity();
  rom.validate();
  return rom;
}

DelayRom fit_operator(const Eigen::MatrixXd& past, const Eigen::MatrixXd& future, double lambda) {
  if (past.cols() != future.cols())
    throw ShapeError("fit_operator: " + std::to_string(past.cols()) + " delay columns but " +
                     std::to_string(future.cols()) + " target columns");
  if (future.rows() == 0 || past.cols() == 0 || past.rows() % future.rows() != 0)
    throw ShapeError("fit_operator: delay rows " + std::to_string(past.rows()) + " are not a multiple of n = " +
                     std::to_string(future.rows()));
  if (!(lambda >= 0.0)) throw ConfigError("fit_operator: ridge lambda must be >= 0");
  if (!past.allFinite() || !future.allFinite()) throw NumericalError("fit_operator: non-finite input");
  const std::size_t n = static_cast<std::size_t>(future.rows());
  DelayRom rom;
  rom.n = n;
  rom.d = static_cast<std::size_t>(past.rows()) / n;
  // L past = future  <=>  past^T L^T = future^T
  const Eigen::MatrixXd pt = past.transpose(), ft = future.transpose();
  rom.L = (lambda == 0.0 ? lstsq_min_norm(pt, ft) : ridge_solve(pt, ft, lambda)).transpose();
  if (!rom.L.allFinite()) throw NumericalError("fit_operator: solve produced non-finite entries");
  return rom;
}

double operator_residual(const DelayRom& rom, const Eigen::MatrixXd& past, const Eigen::MatrixXd& future) {
  if (past.rows() != rom.L.cols() || future.rows() != rom.L.rows() || past.cols() != future.cols())
    throw ShapeError("operator_residual: matrices do not conform to L");
  return (future - rom.L * past).norm();
}

std::vector<Eigen::VectorXd> rollout(const DelayRom& rom, std::span<const Eigen::VectorXd> window,
                                     std::size_t steps) {
  rom.validate();
  if (window.size() != rom.d)
    throw ShapeError("rollout: window holds " + std::to_string(window.size()) + " states, operator needs d = " +
                     std::to_string(rom.d));
  const Eigen::Index n = idx(rom.n);
  // zt is the delay vector newest first
  Eigen::VectorXd zt(idx(rom.n * rom.d));
  for (std::size_t lag = 0; lag < rom.d; ++lag) {
    const auto& z = window[rom.d - 1 - lag];
    if (z.size() != n) throw ShapeError("rollout: window state has length " + std::to_string(z.size()));
    zt.segment(idx(lag) * n, n) = z;
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::VectorXd next = rom.L * zt;
    if (rom.d > 1) {
      const Eigen::VectorXd older = zt.head(idx(rom.n * (rom.d - 1)));
      zt.tail(idx(rom.n * (rom.d - 1))) = older;
    }
    zt.head(n) = next;
    out.push_back(std::move(next));
  }
  return out;
}

EquationCount equation_count(std::size_t n, std::size_t d, std::size_t sequence_length) {
  if (sequence_length <= d)
    throw DataError("sequence too short: " + std::to_string(sequence_length) + " states for delay depth " +
                    std::to_string(d));
  return EquationCount{n * d, sequence_length - d};
}

void write_operator(const std::string& path, const DelayRom& rom) {
  rom.validate();
  binio::Writer w;
  w.bytes(std::string_view(kMagic, 6));
  w.u32(static_cast<std::uint32_t>(rom.n));
  w.u32(static_cast<std::uint32_t>(rom.d));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = rom.L;
  w.f64s(std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
  w.save(path);
}

DelayRom read_operator(const std::string& path) {
  auto r = binio::Reader::open(path, "ROMOP1");
  r.expect_magic(std::string_view(kMagic, 6));
  DelayRom rom;
  rom.n = r.u32("n");
  rom.d = r.u32("d");
  if (rom.n == 0 || rom.d == 0)
    throw FormatError("ROMOP1: extent mismatch, n = " + std::to_string(rom.n) + ", d = " + std::to_string(rom.d));
  const std::size_t count = rom.n * rom.n * rom.d;
  if (r.remaining() != count * 8)
    throw FormatError("ROMOP1: payload length mismatch, " + std::to_string(r.remaining()) +
                      " bytes where the header implies " + std::to_string(count * 8));
  const auto v = r.f64s(count, "L");
  r.expect_end();
  rom.L = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      v.data(), idx(rom.n), idx(rom.n * rom.d));
  if (!rom.L.allFinite()) throw NumericalError("ROMOP1: L has non-finite entries");
  return rom;
}

}  // namespace tdrom
