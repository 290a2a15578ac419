#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "samra/marl.hpp"

namespace samra::marl {

namespace {

constexpr const char* kMagic = "samra-checkpoint";
constexpr int kVersion = 1;

void write_values(std::ostream& out, const double* data, Eigen::Index count) {
  std::ostringstream line;
  line << std::hexfloat;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i > 0) line << ' ';
    line << data[i];
  }
  out << line.str() << '\n';
}

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("checkpoint: " + what);
}

void expect_token(std::istream& in, const std::string& want) {
  std::string tok;
  if (!(in >> tok) || tok != want) fail("expected '" + want + "', found '" + tok + "'");
}

long read_long(std::istream& in, const std::string& what) {
  long v = 0;
  if (!(in >> v)) fail("could not read " + what);
  return v;
}

void read_values(std::istream& in, double* data, Eigen::Index count) {
  // libstdc++ does not parse hexfloat via operator>>, so go through strtod.
  std::string tok;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> tok)) fail("truncated value block");
    char* end = nullptr;
    data[i] = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("bad number '" + tok + "'");
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Learner& learner, const Rng& rng) {
  const auto& d = learner.dimensions();
  out << kMagic << ' ' << kVersion << '\n';
  out << "algorithm " << to_string(learner.algorithm()) << '\n';
  out << "dims " << d.agents << ' ' << d.observation << ' ' << d.action << '\n';
  out << "updates " << learner.update_count() << '\n';
  out << "rng " << rng.serialize() << '\n';
  const auto nets = learner.networks();
  out << "networks " << nets.size() << '\n';
  for (const auto& [name, net] : nets) {
    out << "network " << name << ' ' << net->layers().size() << '\n';
    for (std::size_t i = 0; i < net->layers().size(); ++i) {
      const auto& l = net->layers()[i];
      out << "weight " << i << ' ' << l.weight.rows() << ' ' << l.weight.cols() << '\n';
      write_values(out, l.weight.data(), l.weight.size());
      out << "bias " << i << ' ' << l.bias.size() << '\n';
      write_values(out, l.bias.data(), l.bias.size());
    }
  }
  out << "end\n";
  if (!out) fail("write failed");
}

void load_checkpoint(std::istream& in, Learner& learner, Rng& rng) {
  expect_token(in, kMagic);
  if (read_long(in, "version") != kVersion) fail("unsupported version");
  expect_token(in, "algorithm");
  std::string algo;
  in >> algo;
  if (parse_algorithm(algo) != learner.algorithm()) {
    fail("algorithm " + algo + " does not match learner " + to_string(learner.algorithm()));
  }
  expect_token(in, "dims");
  const auto& d = learner.dimensions();
  const long agents = read_long(in, "agents");
  const long obs = read_long(in, "observation size");
  const long act = read_long(in, "action size");
  if (agents != d.agents || obs != d.observation || act != d.action) fail("dimension mismatch");
  expect_token(in, "updates");
  read_long(in, "update count");
  expect_token(in, "rng");
  std::string rng_line;
  std::getline(in, rng_line);
  Rng restored;
  restored.deserialize(rng_line);

  auto nets = learner.networks();
  expect_token(in, "networks");
  if (read_long(in, "network count") != static_cast<long>(nets.size())) fail("network count mismatch");
  // Parse into copies so a failure leaves the learner untouched.
  std::vector<Mlp> staged;
  for (auto& [name, net] : nets) {
    expect_token(in, "network");
    expect_token(in, name);
    if (read_long(in, "layer count") != static_cast<long>(net->layers().size())) {
      fail(name + ": layer count mismatch");
    }
    Mlp copy = *net;
    for (std::size_t i = 0; i < copy.layers().size(); ++i) {
      auto& l = copy.layers()[i];
      expect_token(in, "weight");
      if (read_long(in, "layer index") != static_cast<long>(i)) fail(name + ": layer order");
      const long rows = read_long(in, "rows");
      const long cols = read_long(in, "cols");
      if (rows != l.weight.rows() || cols != l.weight.cols()) fail(name + ": weight shape mismatch");
      read_values(in, l.weight.data(), l.weight.size());
      expect_token(in, "bias");
      if (read_long(in, "layer index") != static_cast<long>(i)) fail(name + ": layer order");
      if (read_long(in, "bias size") != l.bias.size()) fail(name + ": bias shape mismatch");
      read_values(in, l.bias.data(), l.bias.size());
    }
    staged.push_back(std::move(copy));
  }
  expect_token(in, "end");
  for (std::size_t i = 0; i < nets.size(); ++i) *nets[i].second = std::move(staged[i]);
  rng = restored;
}

}  // namespace samra::marl
