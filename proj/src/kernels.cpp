#include "rnpg/kernels.hpp"

#include <omp.h>

#include <stdexcept>
#include <vector>

namespace rnpg::kernels {

InverseFisherSums& InverseFisherSums::operator+=(const InverseFisherSums& other) {
  reps += other.reps;
  sum_y += other.sum_y;
  sum_y2 += other.sum_y2;
  sum_y4 += other.sum_y4;
  return *this;
}

namespace {

void check_sizes(const Eigen::MatrixXd& scores, const Eigen::VectorXd& v) {
  if (scores.cols() != v.size()) throw std::invalid_argument("kernel: size mismatch");
}

std::uint64_t chunk_reps(std::uint64_t reps, int chunk) {
  const std::uint64_t base = reps / kMonteCarloChunks;
  const std::uint64_t extra = reps % kMonteCarloChunks;
  return base + (static_cast<std::uint64_t>(chunk) < extra ? 1 : 0);
}

InverseFisherSums inverse_fisher_chunk(int batch, double epsilon, std::uint64_t reps, Rng rng) {
  InverseFisherSums out;
  out.reps = reps;
  for (std::uint64_t r = 0; r < reps; ++r) {
    double ss = 0.0;
    for (int i = 0; i < batch; ++i) {
      const double x = rng.normal();
      ss += x * x;
    }
    const double y = 1.0 / (epsilon + ss / batch);
    const double y2 = y * y;
    out.sum_y += y;
    out.sum_y2 += y2;
    out.sum_y4 += y2 * y2;
  }
  return out;
}

Eigen::Index chunk_count(Eigen::Index n) { return (n + kSampleChunk - 1) / kSampleChunk; }

}  // namespace

// ---------------------------------------------------------------------------

Eigen::VectorXd serial::weighted_sum(const Eigen::MatrixXd& scores, const Eigen::VectorXd& coeffs) {
  check_sizes(scores, coeffs);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(scores.rows());
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    for (Eigen::Index r = 0; r < scores.rows(); ++r) out[r] += coeffs[i] * scores(r, i);
  }
  return out;
}

Eigen::MatrixXd serial::weighted_gram(const Eigen::MatrixXd& scores,
                                      const Eigen::VectorXd& weights) {
  check_sizes(scores, weights);
  const Eigen::Index d = scores.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double wc = weights[i] * scores(c, i);
      for (Eigen::Index r = 0; r < d; ++r) out(r, c) += wc * scores(r, i);
    }
  }
  return out;
}

InverseFisherSums serial::inverse_fisher_sums(int batch, double epsilon, std::uint64_t reps,
                                              const Rng& base) {
  InverseFisherSums total;
  for (int c = 0; c < kMonteCarloChunks; ++c) {
    total += inverse_fisher_chunk(batch, epsilon, chunk_reps(reps, c), base.split(c));
  }
  return total;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd parallel::weighted_sum(const Eigen::MatrixXd& scores,
                                       const Eigen::VectorXd& coeffs) {
  check_sizes(scores, coeffs);
  const Eigen::Index chunks = chunk_count(scores.cols());
  if (chunks <= 1) return scores * coeffs;
  std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kSampleChunk;
    const Eigen::Index len = std::min(kSampleChunk, scores.cols() - begin);
    partial[static_cast<std::size_t>(c)] =
        scores.middleCols(begin, len) * coeffs.segment(begin, len);
  }
  Eigen::VectorXd out = partial[0];
  for (std::size_t c = 1; c < partial.size(); ++c) out += partial[c];
  return out;
}

Eigen::MatrixXd parallel::weighted_gram(const Eigen::MatrixXd& scores,
                                        const Eigen::VectorXd& weights) {
  check_sizes(scores, weights);
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("weighted_gram: negative weight");
  const Eigen::Index d = scores.rows();
  const Eigen::Index chunks = chunk_count(scores.cols());
  if (chunks == 0) return Eigen::MatrixXd::Zero(d, d);

  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kSampleChunk;
    const Eigen::Index len = std::min(kSampleChunk, scores.cols() - begin);
    const Eigen::MatrixXd scaled =
        scores.middleCols(begin, len) * weights.segment(begin, len).cwiseSqrt().asDiagonal();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    g.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    partial[static_cast<std::size_t>(c)] = std::move(g);
  }
  Eigen::MatrixXd out = std::move(partial[0]);
  for (std::size_t c = 1; c < partial.size(); ++c) out += partial[c];
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

InverseFisherSums parallel::inverse_fisher_sums(int batch, double epsilon, std::uint64_t reps,
                                                const Rng& base) {
  std::vector<InverseFisherSums> partial(kMonteCarloChunks);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < kMonteCarloChunks; ++c) {
    partial[static_cast<std::size_t>(c)] =
        inverse_fisher_chunk(batch, epsilon, chunk_reps(reps, c), base.split(c));
  }
  InverseFisherSums total;
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace rnpg::kernels
