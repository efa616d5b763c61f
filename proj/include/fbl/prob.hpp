#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fbl {

inline constexpr double kMassTolerance = 1e-12;

class Pmf {
 public:
  explicit Pmf(std::vector<double> probs, bool renormalize = false);

  static Pmf uniform(std::size_t size);
  static Pmf point_mass(std::size_t size, std::size_t index);
  static Pmf binary(double p0);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Row-stochastic matrix, rows indexed by input symbol.
class Channel {
 public:
  Channel(std::size_t input_size, std::size_t output_size,
          std::vector<double> row_major, bool renormalize = false);
  explicit Channel(const std::vector<std::vector<double>>& rows,
                   bool renormalize = false);

  static Channel identity(std::size_t size);
  static Channel bsc(double crossover);
  // Every input maps to the same output law.
  static Channel constant(std::size_t input_size, const Pmf& output);

  std::size_t input_size() const { return input_size_; }
  std::size_t output_size() const { return output_size_; }
  double operator()(std::size_t in, std::size_t out) const {
    return data_[in * output_size_ + out];
  }
  std::span<const double> row(std::size_t in) const {
    return {data_.data() + in * output_size_, output_size_};
  }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t input_size_;
  std::size_t output_size_;
  std::vector<double> data_;
};

// Dense row-major multi-array; axis 0 varies slowest.
class JointPmf {
 public:
  JointPmf(std::vector<std::size_t> dims, std::vector<double> probs,
           bool renormalize = false);
  explicit JointPmf(const Pmf& pmf);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t flat) const { return probs_[flat]; }
  double at(std::span<const std::size_t> index) const;

  std::size_t flatten(std::span<const std::size_t> index) const;
  void unflatten(std::size_t flat, std::span<std::size_t> index) const;

  // Only valid for rank 1.
  Pmf to_pmf() const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<double> probs_;
};

// One factor of a sequential factorization. `given` lists earlier axes; the
// kernel input is their row-major flattening and its output is a new axis.
struct Factor {
  std::vector<std::size_t> given;
  Channel kernel;

  static Factor root(const Pmf& pmf);
  static Factor conditional(std::vector<std::size_t> given, Channel kernel);
};

// Axis i of the result is the output of factors[i].
JointPmf compose(std::span<const Factor> factors);

// Keeps the listed axes in ascending order; mass preserved.
JointPmf marginal(const JointPmf& joint, std::span<const std::size_t> keep);
JointPmf marginal(const JointPmf& joint, std::initializer_list<std::size_t> keep);

// P(target | given) with flattened given/target indices. Rows with zero
// given-mass are uniform.
Channel conditional_channel(const JointPmf& joint,
                            std::span<const std::size_t> given,
                            std::span<const std::size_t> target);

double binary_entropy(double q);
double binary_convolution(double b, double a);
double entropy(const Pmf& pmf);
double entropy(const JointPmf& joint);
// Rank-2 joint over (A,B).
double mutual_information(const JointPmf& joint);
// H(A|B) for a rank-2 joint over (A,B).
double conditional_entropy(const JointPmf& joint);

}  // namespace fbl
