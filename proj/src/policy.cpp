#include "rnpg/policy.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace rnpg {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void require_finite(const State& s) {
  if (!s.allFinite()) throw std::invalid_argument("policy: non-finite state");
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::gaussian_shift: return "gaussian_shift";
    case PolicyKind::softmax_mlp: return "softmax_mlp";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "gaussian_shift") return PolicyKind::gaussian_shift;
  if (name == "softmax_mlp") return PolicyKind::softmax_mlp;
  throw std::invalid_argument("unknown policy kind: " + name);
}

Eigen::VectorXd Policy::score(const Eigen::VectorXd& theta, const State& s, Action a) const {
  Eigen::VectorXd out(dim());
  logp_and_score(theta, s, a, out);
  return out;
}

// ---------------------------------------------------------------------------
// gaussian_shift

double GaussianShiftPolicy::logp(const Eigen::VectorXd& theta, const State& s, Action a) const {
  const double z = a + s[0] - theta[0];
  return -0.5 * z * z - kHalfLog2Pi;
}

double GaussianShiftPolicy::logp_and_score(const Eigen::VectorXd& theta, const State& s, Action a,
                                           Eigen::Ref<Eigen::VectorXd> score) const {
  const double z = a + s[0] - theta[0];
  score[0] = z;
  return -0.5 * z * z - kHalfLog2Pi;
}

Action GaussianShiftPolicy::sample_action(const Eigen::VectorXd& theta, const State& s,
                                          Rng& rng) const {
  return (theta[0] - s[0]) + rng.normal();
}

Eigen::VectorXd GaussianShiftPolicy::initial_params(Rng&) const {
  return Eigen::VectorXd::Zero(1);
}

// ---------------------------------------------------------------------------
// softmax_mlp

SoftmaxMlpPolicy::SoftmaxMlpPolicy(int inputs, int hidden, int actions)
    : inputs_(inputs), hidden_(hidden), actions_(actions) {
  if (inputs < 1 || hidden < 1 || actions < 2) {
    throw std::invalid_argument("softmax_mlp: bad layer sizes");
  }
}

int SoftmaxMlpPolicy::dim() const {
  return hidden_ * inputs_ + hidden_ + actions_ * hidden_ + actions_;
}

void SoftmaxMlpPolicy::check(const Eigen::VectorXd& theta, const State& s) const {
  if (theta.size() != dim()) throw std::invalid_argument("softmax_mlp: parameter size mismatch");
  if (s.size() != inputs_) throw std::invalid_argument("softmax_mlp: state size mismatch");
  require_finite(s);
}

SoftmaxMlpPolicy::Forward SoftmaxMlpPolicy::forward(const Eigen::VectorXd& theta,
                                                    const State& s) const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const double* p = theta.data();
  Eigen::Map<const RowMajor> w1(p, hidden_, inputs_);
  p += hidden_ * inputs_;
  Eigen::Map<const Eigen::VectorXd> b1(p, hidden_);
  p += hidden_;
  Eigen::Map<const RowMajor> w2(p, actions_, hidden_);
  p += actions_ * hidden_;
  Eigen::Map<const Eigen::VectorXd> b2(p, actions_);

  Forward f;
  f.pre = w1 * s + b1;
  f.hidden = f.pre.cwiseMax(0.0);
  f.logits = w2 * f.hidden + b2;
  const double top = f.logits.maxCoeff();
  f.log_norm = top + std::log((f.logits.array() - top).exp().sum());
  return f;
}

double SoftmaxMlpPolicy::logp(const Eigen::VectorXd& theta, const State& s, Action a) const {
  check(theta, s);
  const auto f = forward(theta, s);
  return f.logits[static_cast<int>(a)] - f.log_norm;
}

double SoftmaxMlpPolicy::logp_and_score(const Eigen::VectorXd& theta, const State& s, Action a,
                                        Eigen::Ref<Eigen::VectorXd> score) const {
  check(theta, s);
  const int act = static_cast<int>(a);
  const auto f = forward(theta, s);

  // d logp / d logits = onehot(a) - softmax
  Eigen::VectorXd dlogits = -(f.logits.array() - f.log_norm).exp().matrix();
  dlogits[act] += 1.0;

  const double* w2 = theta.data() + hidden_ * inputs_ + hidden_;
  double* out = score.data();
  double* g_w1 = out;
  double* g_b1 = g_w1 + hidden_ * inputs_;
  double* g_w2 = g_b1 + hidden_;
  double* g_b2 = g_w2 + actions_ * hidden_;

  for (int k = 0; k < actions_; ++k) {
    for (int j = 0; j < hidden_; ++j) g_w2[k * hidden_ + j] = dlogits[k] * f.hidden[j];
    g_b2[k] = dlogits[k];
  }
  for (int j = 0; j < hidden_; ++j) {
    double dh = 0.0;
    if (f.pre[j] > 0.0) {
      for (int k = 0; k < actions_; ++k) dh += w2[k * hidden_ + j] * dlogits[k];
    }
    for (int i = 0; i < inputs_; ++i) g_w1[j * inputs_ + i] = dh * s[i];
    g_b1[j] = dh;
  }
  return f.logits[act] - f.log_norm;
}

Eigen::VectorXd SoftmaxMlpPolicy::probabilities(const Eigen::VectorXd& theta,
                                                const State& s) const {
  check(theta, s);
  const auto f = forward(theta, s);
  return (f.logits.array() - f.log_norm).exp().matrix();
}

Action SoftmaxMlpPolicy::sample_action(const Eigen::VectorXd& theta, const State& s,
                                       Rng& rng) const {
  const Eigen::VectorXd probs = probabilities(theta, s);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (int k = 0; k < actions_ - 1; ++k) {
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  return actions_ - 1;
}

Eigen::VectorXd SoftmaxMlpPolicy::initial_params(Rng& rng) const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim());
  const double bound1 = std::sqrt(6.0 / inputs_);
  const double bound2 = std::sqrt(6.0 / hidden_);
  int idx = 0;
  for (int k = 0; k < hidden_ * inputs_; ++k) theta[idx++] = rng.uniform(-bound1, bound1);
  idx += hidden_;
  for (int k = 0; k < actions_ * hidden_; ++k) theta[idx++] = rng.uniform(-bound2, bound2);
  return theta;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Policy> make_policy(PolicyKind kind, const EnvSpec& spec) {
  switch (kind) {
    case PolicyKind::gaussian_shift:
      if (spec.state_dim != 1 || spec.action.kind != ActionKind::continuous) {
        throw std::invalid_argument("gaussian_shift needs a scalar state and continuous action");
      }
      return std::make_unique<GaussianShiftPolicy>();
    case PolicyKind::softmax_mlp:
      if (spec.action.kind != ActionKind::discrete) {
        throw std::invalid_argument("softmax_mlp needs a discrete action space");
      }
      return std::make_unique<SoftmaxMlpPolicy>(spec.state_dim, 32, spec.action.count);
  }
  throw std::invalid_argument("unknown policy kind");
}

void save_params(const PolicyParams& params, const Policy& policy,
                 const std::filesystem::path& stem) {
  nlohmann::json desc;
  desc["kind"] = to_string(params.kind);
  desc["d"] = params.theta.size();
  desc["dtype"] = "float64-le";
  if (const auto* mlp = dynamic_cast<const SoftmaxMlpPolicy*>(&policy)) {
    desc["dims"] = {mlp->inputs(), mlp->hidden(), mlp->actions()};
    desc["layout"] = "W1[hidden,inputs] row-major, b1, W2[actions,hidden] row-major, b2";
  } else {
    desc["dims"] = {1};
  }
  std::ofstream json_out(std::filesystem::path(stem).concat(".json"));
  json_out << desc.dump(2) << "\n";

  std::ofstream bin(std::filesystem::path(stem).concat(".bin"), std::ios::binary);
  for (double v : params.theta) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!bin || !json_out) throw std::runtime_error("save_params: write failed for " + stem.string());
}

PolicyParams load_params(const std::filesystem::path& stem) {
  std::ifstream json_in(std::filesystem::path(stem).concat(".json"));
  if (!json_in) throw std::runtime_error("load_params: missing descriptor for " + stem.string());
  const auto desc = nlohmann::json::parse(json_in);
  PolicyParams params;
  params.kind = policy_kind_from_string(desc.at("kind").get<std::string>());
  const auto d = desc.at("d").get<Eigen::Index>();
  params.theta.resize(d);

  std::ifstream bin(std::filesystem::path(stem).concat(".bin"), std::ios::binary);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::uint64_t bits = 0;
    bin.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    params.theta[i] = std::bit_cast<double>(bits);
  }
  if (!bin) throw std::runtime_error("load_params: truncated parameter file " + stem.string());
  return params;
}

}  // namespace rnpg
