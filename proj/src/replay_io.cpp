#include "rnpg/estimators.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rnpg {

namespace {

constexpr char kMagic[8] = {'R', 'N', 'P', 'G', 'W', 'I', 'N', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("read_window: truncated stream");
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_samples(std::ostream& out, const std::vector<Sample>& samples) {
  for (const auto& s : samples) {
    for (Eigen::Index i = 0; i < s.state.size(); ++i) put_f64(out, s.state[i]);
    put_f64(out, s.action);
    put_f64(out, s.behavior_logp);
    put_f64(out, s.advantage);
    put_f64(out, s.discount_weight);
    put_f64(out, s.reward);
  }
}

std::vector<Sample> get_samples(std::istream& in, std::size_t count, int state_dim) {
  std::vector<Sample> samples(count);
  for (auto& s : samples) {
    s.state.resize(state_dim);
    for (int i = 0; i < state_dim; ++i) s.state[i] = get_f64(in);
    s.action = get_f64(in);
    s.behavior_logp = get_f64(in);
    s.advantage = get_f64(in);
    s.discount_weight = get_f64(in);
    s.reward = get_f64(in);
  }
  return samples;
}

}  // namespace

void write_window(const ReplayWindow& window, std::ostream& out) {
  nlohmann::json header;
  header["format"] = "rnpg-replay-window";
  header["version"] = 1;
  header["capacity"] = window.capacity();
  header["state_dim"] = window.empty() ? 0 : window.newest().samples.front().state.size();
  auto& batches = header["batches"] = nlohmann::json::array();
  for (const auto& b : window.batches()) {
    batches.push_back({{"iteration", b.iteration},
                       {"mode", to_string(b.mode)},
                       {"units", b.units},
                       {"kind", to_string(b.behavior.kind)},
                       {"d", b.behavior.theta.size()},
                       {"samples", b.samples.size()},
                       {"fim_samples", b.fim_samples.size()}});
  }
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& b : window.batches()) {
    for (double v : b.behavior.theta) put_f64(out, v);
    put_samples(out, b.samples);
    put_samples(out, b.fim_samples);
  }
  if (!out) throw std::runtime_error("write_window: stream error");
}

ReplayWindow read_window(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("read_window: not a replay window checkpoint");
  }
  std::string text(get_u64(in), '\0');
  in.read(text.data(), static_cast<std::streamsize>(text.size()));
  const auto header = nlohmann::json::parse(text);
  const int state_dim = header.at("state_dim").get<int>();

  ReplayWindow window(header.at("capacity").get<int>());
  for (const auto& meta : header.at("batches")) {
    Batch b;
    b.iteration = meta.at("iteration").get<int>();
    b.mode = sampling_mode_from_string(meta.at("mode").get<std::string>());
    b.units = meta.at("units").get<double>();
    b.behavior.kind = policy_kind_from_string(meta.at("kind").get<std::string>());
    b.behavior.theta.resize(meta.at("d").get<Eigen::Index>());
    for (auto& v : b.behavior.theta) v = get_f64(in);
    b.samples = get_samples(in, meta.at("samples").get<std::size_t>(), state_dim);
    b.fim_samples = get_samples(in, meta.at("fim_samples").get<std::size_t>(), state_dim);
    window.push(std::move(b));
  }
  return window;
}

}  // namespace rnpg
