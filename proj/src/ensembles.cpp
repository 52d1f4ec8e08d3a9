#include "rmt/ensembles.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rmt/errors.hpp"
#include "rmt/report_io.hpp"

namespace rmt
{

namespace
{

std::size_t pair_count(std::size_t n) { return n == 0 ? 0 : n * (n - 1) / 2; }

// Row-major index of (i, j), i < j, in the strict upper triangle.
std::size_t upper_index(std::size_t n, std::size_t i, std::size_t j)
{
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

void require_positive(std::size_t n, const char *who)
{
  if (n == 0)
  {
    throw InvalidInput(std::string(who) + ": dimension must be positive");
  }
}

std::size_t parse_header(std::istream &is, const std::string &kind)
{
  std::string line;
  if (!std::getline(is, line))
  {
    throw InvalidInput("matrix CSV: missing header");
  }
  const std::string prefix = "# " + kind + " n=";
  if (line.rfind(prefix, 0) != 0)
  {
    throw InvalidInput("matrix CSV: expected header '" + prefix + "<n>'");
  }
  const double n = parse_double(std::string_view(line).substr(prefix.size()));
  if (!(n >= 1.0) || n != std::floor(n))
  {
    throw InvalidInput("matrix CSV: bad dimension in header");
  }
  return static_cast<std::size_t>(n);
}

std::vector<double> read_lower_rows(std::istream &is, std::size_t n)
{
  std::vector<double> lower;
  lower.reserve(pair_count(n));
  std::string line;
  for (std::size_t i = 1; i < n; i++)
  {
    if (!std::getline(is, line))
    {
      throw InvalidInput("matrix CSV: truncated body");
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != i)
    {
      throw InvalidInput("matrix CSV: row " + std::to_string(i) + " has wrong length");
    }
    for (const auto &f : fields)
    {
      lower.push_back(parse_double(f));
    }
  }
  return lower;
}

}  // namespace

TournamentMatrix::TournamentMatrix(std::size_t n, std::vector<std::uint8_t> upper_bits)
  : n_(n), upper_(std::move(upper_bits))
{
  if (upper_.size() != pair_count(n))
  {
    throw InvalidInput("TournamentMatrix: wrong number of bits");
  }
  for (auto b : upper_)
  {
    if (b > 1)
    {
      throw InvalidInput("TournamentMatrix: bits must be 0 or 1");
    }
  }
}

TournamentMatrix TournamentMatrix::from_dense(const Eigen::MatrixXi &D)
{
  if (D.rows() != D.cols())
  {
    throw InvalidInput("TournamentMatrix::from_dense: matrix is not square");
  }
  const auto n = static_cast<std::size_t>(D.rows());
  std::vector<std::uint8_t> bits;
  bits.reserve(pair_count(n));
  for (Eigen::Index i = 0; i < D.rows(); i++)
  {
    if (D(i, i) != 0)
    {
      throw InvalidInput("TournamentMatrix::from_dense: nonzero diagonal");
    }
    for (Eigen::Index j = i + 1; j < D.cols(); j++)
    {
      if ((D(i, j) != 0 && D(i, j) != 1) || D(i, j) != 1 - D(j, i))
      {
        throw InvalidInput("TournamentMatrix::from_dense: D_ij = 1 - D_ji violated");
      }
      bits.push_back(static_cast<std::uint8_t>(D(i, j)));
    }
  }
  return TournamentMatrix(n, std::move(bits));
}

int TournamentMatrix::operator()(std::size_t i, std::size_t j) const
{
  if (i == j)
  {
    return 0;
  }
  return i < j ? upper_[upper_index(n_, i, j)] : 1 - upper_[upper_index(n_, j, i)];
}

Eigen::MatrixXi TournamentMatrix::dense() const
{
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXi D = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t i = 0; i < n_; i++)
  {
    for (std::size_t j = 0; j < n_; j++)
    {
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j);
    }
  }
  return D;
}

TournamentMatrix cyclic_tournament3()
{
  // Upper bits (0,1), (0,2), (1,2): D_12 = 1, D_13 = 0 (since D_31 = 1), D_23 = 1.
  return TournamentMatrix(3, {1, 0, 1});
}

TournamentMatrix sample_tournament(std::size_t n, const Seed &seed)
{
  require_positive(n, "sample_tournament");
  CounterRng rng(seed);
  std::vector<std::uint8_t> bits(pair_count(n));
  for (auto &b : bits)
  {
    b = rng.bit() ? 1 : 0;
  }
  return TournamentMatrix(n, std::move(bits));
}

SkewMatrix tournament_to_skew(const TournamentMatrix &D)
{
  const std::size_t n = D.size();
  std::vector<double> lower(pair_count(n));
  for (std::size_t i = 1; i < n; i++)
  {
    for (std::size_t j = 0; j < i; j++)
    {
      lower[SkewMatrix::packed_index(i, j)] = 2.0 * D(i, j) - 1.0;
    }
  }
  return SkewMatrix(n, std::move(lower));
}

Eigen::MatrixXd shifted_tournament(const TournamentMatrix &D)
{
  return 2.0 * D.dense().cast<double>() + Eigen::MatrixXd::Identity(D.size(), D.size());
}

SkewMatrix sample_skew_pm1(std::size_t n, const Seed &seed)
{
  require_positive(n, "sample_skew_pm1");
  return tournament_to_skew(sample_tournament(n, seed));
}

SkewMatrix sample_skew_gaussian(std::size_t n, const Seed &seed, double scale)
{
  require_positive(n, "sample_skew_gaussian");
  if (!(scale > 0.0))
  {
    throw InvalidInput("sample_skew_gaussian: scale must be positive");
  }
  CounterRng rng(seed);
  std::vector<double> lower(pair_count(n));
  for (std::size_t i = 0; i < n; i++)
  {
    for (std::size_t j = i + 1; j < n; j++)
    {
      // Upper entry W_ij ~ N(0, scale^2); the stored lower entry is W_ji = -W_ij.
      lower[SkewMatrix::packed_index(j, i)] = -scale * rng.normal();
    }
  }
  return SkewMatrix(n, std::move(lower));
}

HermitianMatrix sample_gue(std::size_t n, const Seed &seed)
{
  require_positive(n, "sample_gue");
  CounterRng rng(seed);
  HermitianMatrix G(n);
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; i++)
  {
    G.set(i, i, rng.normal());
    for (std::size_t j = i + 1; j < n; j++)
    {
      const double x = rng.normal();
      const double y = rng.normal();
      G.set(i, j, Complex(r * x, r * y));
    }
  }
  return G;
}

Eigen::VectorXd sample_unit_vector(std::size_t n, const Seed &seed)
{
  require_positive(n, "sample_unit_vector");
  CounterRng rng(seed);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < b.size(); a++)
  {
    b(a) = rng.normal();
  }
  return b / b.norm();
}

RankOnePerturbedModel::RankOnePerturbedModel(HermitianMatrix base_, Eigen::VectorXd direction_, double strength_)
  : base(std::move(base_)), direction(std::move(direction_)), strength(strength_)
{
  if (static_cast<std::size_t>(direction.size()) != base.size())
  {
    throw InvalidInput("RankOnePerturbedModel: direction has wrong dimension");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-12)
  {
    throw InvalidInput("RankOnePerturbedModel: direction must be a unit vector");
  }
}

Eigen::MatrixXcd RankOnePerturbedModel::dense() const
{
  Eigen::MatrixXcd W = base.dense();
  W += Complex(0.0, strength) * (direction * direction.transpose()).cast<Complex>();
  return W;
}

void write_skew_csv(std::ostream &os, const SkewMatrix &W)
{
  os << "# skew n=" << W.size() << '\n';
  std::vector<double> row;
  for (std::size_t i = 1; i < W.size(); i++)
  {
    row.clear();
    for (std::size_t j = 0; j < i; j++)
    {
      row.push_back(W(i, j));
    }
    os << csv_row(row) << '\n';
  }
}

SkewMatrix read_skew_csv(std::istream &is)
{
  const std::size_t n = parse_header(is, "skew");
  return SkewMatrix(n, read_lower_rows(is, n));
}

void write_tournament_csv(std::ostream &os, const TournamentMatrix &D)
{
  os << "# tournament n=" << D.size() << '\n';
  for (std::size_t i = 1; i < D.size(); i++)
  {
    for (std::size_t j = 0; j < i; j++)
    {
      os << (j > 0 ? "," : "") << D(i, j);
    }
    os << '\n';
  }
}

TournamentMatrix read_tournament_csv(std::istream &is)
{
  const std::size_t n = parse_header(is, "tournament");
  const std::vector<double> lower = read_lower_rows(is, n);
  std::vector<std::uint8_t> bits(pair_count(n));
  for (std::size_t i = 1; i < n; i++)
  {
    for (std::size_t j = 0; j < i; j++)
    {
      const double d = lower[SkewMatrix::packed_index(i, j)];
      if (d != 0.0 && d != 1.0)
      {
        throw InvalidInput("tournament CSV: entries must be 0 or 1");
      }
      bits[upper_index(n, j, i)] = static_cast<std::uint8_t>(1.0 - d);
    }
  }
  return TournamentMatrix(n, std::move(bits));
}

}  // namespace rmt
