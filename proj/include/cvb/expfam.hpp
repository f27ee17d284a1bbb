// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_EXPFAM_HPP_
#define CVB_EXPFAM_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cvb {

// Raised when a numerical quantity leaves its valid domain during evaluation
// (e.g. a scatter matrix that is no longer positive definite).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ln Gamma(x) and the digamma function psi(x) for x > 0.  Non-positive or
// non-finite arguments throw std::domain_error.
double ln_gamma(double x);
double digamma(double x);

// Dirichlet concentration vector.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> concentration);
  static DirichletParams symmetric(std::size_t k, double alpha);

  std::size_t size() const { return concentration_.size(); }
  double operator[](std::size_t i) const { return concentration_[i]; }
  const std::vector<double>& concentration() const { return concentration_; }
  double total() const;

 private:
  std::vector<double> concentration_;
};

// Gauss-Wishart block over (mu, Lambda):
//   Lambda ~ Wishart(S^{-1}, nu),  mu | Lambda ~ N(m, (kappa Lambda)^{-1}).
// S is the scale of the quadratic form, i.e. the inverse of the Wishart scale
// matrix.
struct GaussWishartParams {
  Eigen::VectorXd m;
  double kappa = 1.0;
  double nu = 1.0;
  Eigen::MatrixXd S;

  std::size_t dim() const { return static_cast<std::size_t>(m.size()); }
  // Throws std::invalid_argument on shape, symmetry, kappa or nu violations
  // and NumericalError when S is not positive definite.
  void validate() const;
};

// ln R_D(alpha) = ln Gamma(sum alpha) - sum ln Gamma(alpha_k).
double ln_dirichlet_norm(const DirichletParams& p);
double ln_dirichlet_norm(std::span<const double> concentration);

// ln R_GW(S, nu, kappa) = (nu/2) ln|S| - ((nu+1)D/2) ln 2 - (D(D+1)/4) ln pi
//                       + (D/2) ln kappa - sum_d ln Gamma((nu+1-d)/2).
double ln_gauss_wishart_norm(const GaussWishartParams& p);
// Same, with ln|S| supplied by the caller (who already holds a factorization).
double ln_gauss_wishart_norm(double log_det_s, double nu, double kappa,
                             std::size_t dim);

// E[ln pi_k] under Dirichlet(alpha).
std::vector<double> dirichlet_expected_log(const DirichletParams& p);

// KL(Dir(a) || Dir(b)).
double kl_dirichlet(const DirichletParams& a, const DirichletParams& b);

// KL(GW(a) || GW(b)) via the log-normalizer route.
double kl_gauss_wishart(const GaussWishartParams& a,
                        const GaussWishartParams& b);

// Sum_{d=1}^{D} psi((nu + 1 - d) / 2).
double multi_digamma_sum(double nu, std::size_t dim);

// Row structure shared by a table of logits.  Rows may have different widths
// (sparse per-read support in the quantification model); a dense N x K table
// is the uniform special case.
class RowLayout {
 public:
  RowLayout() : offsets_{0} {}
  static RowLayout dense(std::size_t rows, std::size_t width);
  static RowLayout ragged(std::span<const std::size_t> widths);

  std::size_t rows() const { return offsets_.size() - 1; }
  std::size_t size() const { return offsets_.back(); }
  std::size_t offset(std::size_t row) const { return offsets_[row]; }
  std::size_t width(std::size_t row) const {
    return offsets_[row + 1] - offsets_[row];
  }
  // Common row width, or 0 when the layout is ragged.
  std::size_t uniform_width() const { return uniform_width_; }

  bool operator==(const RowLayout& other) const {
    return offsets_ == other.offsets_;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::size_t uniform_width_ = 0;
};

// Row-wise softmax with per-row max subtraction.  `log_r`, when non-empty,
// receives ln r computed directly from the logits so that it stays finite
// when r underflows.
void softmax_rows(const RowLayout& layout, std::span<const double> rho,
                  std::span<double> r, std::span<double> log_r = {});
std::vector<double> softmax_rows(const RowLayout& layout,
                                 std::span<const double> rho);

// Chain rule through the row softmax:
//   g_rho[n,k] = r[n,k] (g_r[n,k] - sum_j r[n,j] g_r[n,j]).
std::vector<double> softmax_chain(const RowLayout& layout,
                                  std::span<const double> r,
                                  std::span<const double> g_r);

// -sum r ln r over every row, 0 ln 0 taken as 0.
double categorical_entropy(std::span<const double> r);

// Unconstrained logits rho with cached responsibilities r = softmax(rho) and
// ln r.  rho is never modified; the gauge (per-row additive constant) belongs
// to whoever constructs the table.
class LogitTable {
 public:
  LogitTable() = default;
  LogitTable(RowLayout layout, std::vector<double> rho);

  static LogitTable uniform(const RowLayout& layout);

  const RowLayout& layout() const { return layout_; }
  std::size_t rows() const { return layout_.rows(); }
  std::size_t size() const { return rho_.size(); }

  std::span<const double> rho() const { return rho_; }
  std::span<const double> r() const { return r_; }
  std::span<const double> log_r() const { return log_r_; }

  std::span<const double> rho_row(std::size_t i) const {
    return {rho_.data() + layout_.offset(i), layout_.width(i)};
  }
  std::span<const double> r_row(std::size_t i) const {
    return {r_.data() + layout_.offset(i), layout_.width(i)};
  }
  std::span<const double> log_r_row(std::size_t i) const {
    return {log_r_.data() + layout_.offset(i), layout_.width(i)};
  }

  // rho + step * direction.
  LogitTable shifted(std::span<const double> direction, double step) const;
  // Same responsibilities with every row's maximum logit moved to zero.
  LogitTable recentered() const;

  // Entropy of the factorized categorical, -sum r ln r, using cached ln r.
  double entropy() const;

 private:
  RowLayout layout_;
  std::vector<double> rho_;
  std::vector<double> r_;
  std::vector<double> log_r_;
};

}  // namespace cvb

#endif  // CVB_EXPFAM_HPP_
