#include "fbl/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fbl/error.hpp"

namespace fbl {
namespace {

void normalize_block(std::span<double> block, bool renormalize, const char* what) {
  double sum = 0.0;
  for (double& p : block) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument(std::string(what) + ": negative or non-finite probability");
    }
    sum += p;
  }
  if (renormalize) {
    if (sum <= 0.0) throw InvalidArgument(std::string(what) + ": zero total mass");
    for (double& p : block) p /= sum;
    return;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) {
    throw InvalidArgument(std::string(what) + ": mass " + std::to_string(sum) +
                          " is not 1");
  }
}

void check_probability(double q, const char* what) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw InvalidArgument(std::string(what) + ": argument outside [0,1]");
  }
}

double plogp(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

}  // namespace

Pmf::Pmf(std::vector<double> probs, bool renormalize) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidArgument("Pmf: empty alphabet");
  normalize_block(probs_, renormalize, "Pmf");
}

Pmf Pmf::uniform(std::size_t size) {
  if (size == 0) throw InvalidArgument("Pmf: empty alphabet");
  return Pmf(std::vector<double>(size, 1.0 / static_cast<double>(size)), true);
}

Pmf Pmf::point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw InvalidArgument("Pmf: point mass index out of range");
  std::vector<double> p(size, 0.0);
  p[index] = 1.0;
  return Pmf(std::move(p));
}

Pmf Pmf::binary(double p0) {
  check_probability(p0, "Pmf::binary");
  return Pmf({p0, 1.0 - p0});
}

Channel::Channel(std::size_t input_size, std::size_t output_size,
                 std::vector<double> row_major, bool renormalize)
    : input_size_(input_size), output_size_(output_size), data_(std::move(row_major)) {
  if (input_size_ == 0 || output_size_ == 0) {
    throw InvalidArgument("Channel: empty alphabet");
  }
  if (data_.size() != input_size_ * output_size_) {
    throw InvalidArgument("Channel: data size does not match dimensions");
  }
  for (std::size_t i = 0; i < input_size_; ++i) {
    normalize_block({data_.data() + i * output_size_, output_size_}, renormalize,
                    "Channel row");
  }
}

static std::vector<double> flatten_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidArgument("Channel: no rows");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw InvalidArgument("Channel: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

Channel::Channel(const std::vector<std::vector<double>>& rows, bool renormalize)
    : Channel(rows.size(), rows.empty() ? 0 : rows.front().size(), flatten_rows(rows),
              renormalize) {}

Channel Channel::identity(std::size_t size) {
  std::vector<double> d(size * size, 0.0);
  for (std::size_t i = 0; i < size; ++i) d[i * size + i] = 1.0;
  return Channel(size, size, std::move(d));
}

Channel Channel::bsc(double crossover) {
  check_probability(crossover, "Channel::bsc");
  return Channel(2, 2, {1.0 - crossover, crossover, crossover, 1.0 - crossover});
}

Channel Channel::constant(std::size_t input_size, const Pmf& output) {
  std::vector<double> d;
  d.reserve(input_size * output.size());
  for (std::size_t i = 0; i < input_size; ++i) {
    d.insert(d.end(), output.probs().begin(), output.probs().end());
  }
  return Channel(input_size, output.size(), std::move(d));
}

JointPmf::JointPmf(std::vector<std::size_t> dims, std::vector<double> probs,
                   bool renormalize)
    : dims_(std::move(dims)), probs_(std::move(probs)) {
  if (dims_.empty()) throw InvalidArgument("JointPmf: no axes");
  std::size_t total = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw InvalidArgument("JointPmf: empty axis");
    total *= d;
  }
  if (total != probs_.size()) {
    throw InvalidArgument("JointPmf: data size does not match dimensions");
  }
  strides_.assign(dims_.size(), 1);
  for (std::size_t a = dims_.size() - 1; a > 0; --a) {
    strides_[a - 1] = strides_[a] * dims_[a];
  }
  normalize_block(probs_, renormalize, "JointPmf");
}

JointPmf::JointPmf(const Pmf& pmf)
    : JointPmf({pmf.size()}, std::vector<double>(pmf.probs().begin(), pmf.probs().end())) {}

std::size_t JointPmf::flatten(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw InvalidArgument("JointPmf: index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (index[a] >= dims_[a]) throw InvalidArgument("JointPmf: index out of range");
    flat += index[a] * strides_[a];
  }
  return flat;
}

void JointPmf::unflatten(std::size_t flat, std::span<std::size_t> index) const {
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    index[a] = flat / strides_[a];
    flat %= strides_[a];
  }
}

double JointPmf::at(std::span<const std::size_t> index) const {
  return probs_[flatten(index)];
}

Pmf JointPmf::to_pmf() const {
  if (rank() != 1) throw InvalidArgument("JointPmf: to_pmf needs rank 1");
  return Pmf(probs_, true);
}

Factor Factor::root(const Pmf& pmf) {
  return {{}, Channel::constant(1, pmf)};
}

Factor Factor::conditional(std::vector<std::size_t> given, Channel kernel) {
  return {std::move(given), std::move(kernel)};
}

JointPmf compose(std::span<const Factor> factors) {
  if (factors.empty()) throw InvalidArgument("compose: no factors");
  std::vector<std::size_t> dims;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    std::size_t expected_input = 1;
    for (std::size_t g : factors[f].given) {
      if (g >= f) {
        throw InvalidArgument("compose: factor " + std::to_string(f) +
                              " conditions on a later or its own axis (cyclic pattern)");
      }
      expected_input *= dims[g];
    }
    if (factors[f].kernel.input_size() != expected_input) {
      throw InvalidArgument("compose: factor " + std::to_string(f) +
                            " kernel input size does not match conditioning axes");
    }
    dims.push_back(factors[f].kernel.output_size());
  }
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  std::vector<double> probs(total);
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = dims.size(); a-- > 0;) {
      idx[a] = rem % dims[a];
      rem /= dims[a];
    }
    double p = 1.0;
    for (std::size_t f = 0; f < factors.size() && p > 0.0; ++f) {
      std::size_t in = 0;
      for (std::size_t g : factors[f].given) in = in * dims[g] + idx[g];
      p *= factors[f].kernel(in, idx[f]);
    }
    probs[flat] = p;
  }
  return JointPmf(std::move(dims), std::move(probs), true);
}

JointPmf marginal(const JointPmf& joint, std::span<const std::size_t> keep) {
  if (keep.empty()) throw InvalidArgument("marginal: empty keep set");
  std::vector<std::size_t> axes(keep.begin(), keep.end());
  std::sort(axes.begin(), axes.end());
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) {
    throw InvalidArgument("marginal: duplicate axis");
  }
  if (axes.back() >= joint.rank()) throw InvalidArgument("marginal: axis out of range");
  std::vector<std::size_t> dims;
  for (std::size_t a : axes) dims.push_back(joint.dims()[a]);
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  std::vector<double> probs(total, 0.0);
  std::vector<std::size_t> idx(joint.rank());
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    joint.unflatten(flat, idx);
    std::size_t out = 0;
    for (std::size_t a : axes) out = out * joint.dims()[a] + idx[a];
    probs[out] += joint[flat];
  }
  return JointPmf(std::move(dims), std::move(probs), true);
}

JointPmf marginal(const JointPmf& joint, std::initializer_list<std::size_t> keep) {
  return marginal(joint, std::span<const std::size_t>(keep.begin(), keep.size()));
}

Channel conditional_channel(const JointPmf& joint, std::span<const std::size_t> given,
                            std::span<const std::size_t> target) {
  if (target.empty()) throw InvalidArgument("conditional_channel: empty target");
  std::size_t in_size = 1;
  std::size_t out_size = 1;
  for (std::size_t a : given) {
    if (a >= joint.rank()) throw InvalidArgument("conditional_channel: axis out of range");
    in_size *= joint.dims()[a];
  }
  for (std::size_t a : target) {
    if (a >= joint.rank()) throw InvalidArgument("conditional_channel: axis out of range");
    if (std::find(given.begin(), given.end(), a) != given.end()) {
      throw InvalidArgument("conditional_channel: axis both given and target");
    }
    out_size *= joint.dims()[a];
  }
  std::vector<double> d(in_size * out_size, 0.0);
  std::vector<std::size_t> idx(joint.rank());
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    joint.unflatten(flat, idx);
    std::size_t in = 0;
    std::size_t out = 0;
    for (std::size_t a : given) in = in * joint.dims()[a] + idx[a];
    for (std::size_t a : target) out = out * joint.dims()[a] + idx[a];
    d[in * out_size + out] += joint[flat];
  }
  for (std::size_t i = 0; i < in_size; ++i) {
    double* row = d.data() + i * out_size;
    double s = std::accumulate(row, row + out_size, 0.0);
    for (std::size_t o = 0; o < out_size; ++o) {
      row[o] = s > 0.0 ? row[o] / s : 1.0 / static_cast<double>(out_size);
    }
  }
  return Channel(in_size, out_size, std::move(d), true);
}

double binary_entropy(double q) {
  check_probability(q, "binary_entropy");
  return plogp(q) + plogp(1.0 - q);
}

double binary_convolution(double b, double a) {
  check_probability(b, "binary_convolution");
  check_probability(a, "binary_convolution");
  return b * (1.0 - a) + (1.0 - b) * a;
}

double entropy(const Pmf& pmf) {
  double h = 0.0;
  for (double p : pmf.probs()) h += plogp(p);
  return h;
}

double entropy(const JointPmf& joint) {
  double h = 0.0;
  for (double p : joint.probs()) h += plogp(p);
  return h;
}

double mutual_information(const JointPmf& joint) {
  if (joint.rank() != 2) throw InvalidArgument("mutual_information: rank-2 joint required");
  const JointPmf pa = marginal(joint, {0});
  const JointPmf pb = marginal(joint, {1});
  const std::size_t nb = joint.dims()[1];
  double i = 0.0;
  for (std::size_t a = 0; a < joint.dims()[0]; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      double p = joint[a * nb + b];
      if (p > 0.0) i += p * std::log2(p / (pa[a] * pb[b]));
    }
  }
  return std::max(i, 0.0);
}

double conditional_entropy(const JointPmf& joint) {
  if (joint.rank() != 2) throw InvalidArgument("conditional_entropy: rank-2 joint required");
  const JointPmf pb = marginal(joint, {1});
  const std::size_t nb = joint.dims()[1];
  double h = 0.0;
  for (std::size_t a = 0; a < joint.dims()[0]; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      double p = joint[a * nb + b];
      if (p > 0.0) h -= p * std::log2(p / pb[b]);
    }
  }
  return std::max(h, 0.0);
}

}  // namespace fbl
