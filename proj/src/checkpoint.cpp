#include "coaching/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coaching {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_sizes(std::ostream& out, const char* tag, const std::vector<std::size_t>& sizes) {
  out << tag;
  for (std::size_t s : sizes) out << ',' << s;
  out << '\n';
}

void write_values(std::ostream& out, const char* tag, const std::vector<double>& values) {
  out << tag << ',' << values.size() << '\n';
  for (double v : values) out << format_double(v) << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> fields() {
    std::string line;
    ++line_no_;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (out.empty()) fail("empty line");
    return out;
  }

  std::vector<std::string> expect(const std::string& tag) {
    auto f = fields();
    if (f[0] != tag) fail("expected '" + tag + "', found '" + f[0] + "'");
    return f;
  }

  double number(const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail("trailing characters in number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("not a number: '" + s + "'");
    }
  }

  std::size_t count(const std::string& s) {
    const double v = number(s);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      fail("not a count: '" + s + "'");
    }
    return static_cast<std::size_t>(v);
  }

  std::vector<std::size_t> sizes(const std::string& tag) {
    auto f = expect(tag);
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < f.size(); ++i) out.push_back(count(f[i]));
    return out;
  }

  std::vector<double> values(const std::string& tag, std::size_t expected) {
    auto f = expect(tag);
    if (f.size() != 2 || count(f[1]) != expected) {
      fail("'" + tag + "' count does not match the declared shape");
    }
    std::vector<double> out(expected);
    for (auto& v : out) {
      auto line = fields();
      if (line.size() != 1) fail("expected one value per line");
      v = number(line[0]);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const PpoAgent& agent) {
  out << "coaching-checkpoint,1\n";
  write_sizes(out, "policy_layers", agent.policy_net().layer_sizes());
  write_sizes(out, "value_layers", agent.value_net().layer_sizes());
  const auto& norm = agent.normalizer();
  out << "normalizer," << norm.dim() << ',' << format_double(norm.count()) << '\n';
  write_values(out, "policy", agent.policy_params());
  write_values(out, "value", agent.value_params());
  write_values(out, "normalizer_mean", norm.mean());
  write_values(out, "normalizer_m2", norm.m2());
}

void save_checkpoint(const std::filesystem::path& path, const PpoAgent& agent) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, agent);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

PpoAgent read_checkpoint(std::istream& in, const PpoConfig& cfg) {
  LineReader r(in);
  auto header = r.expect("coaching-checkpoint");
  if (header.size() != 2 || header[1] != "1") r.fail("unsupported checkpoint version");

  Mlp policy_net;
  Mlp value_net;
  try {
    policy_net = Mlp(r.sizes("policy_layers"));
    value_net = Mlp(r.sizes("value_layers"));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  auto norm = r.expect("normalizer");
  if (norm.size() != 3) r.fail("normalizer header needs dim and count");
  const std::size_t dim = r.count(norm[1]);
  const double count = r.number(norm[2]);

  auto policy = r.values("policy", policy_net.parameter_count() + 1);
  auto value = r.values("value", value_net.parameter_count());
  auto mean = r.values("normalizer_mean", dim);
  auto m2 = r.values("normalizer_m2", dim);

  RunningNormalizer normalizer(dim);
  normalizer.restore(count, std::move(mean), std::move(m2));
  PpoConfig loaded = cfg;
  if (policy_net.num_layers() >= 2) loaded.hidden_width = static_cast<int>(policy_net.layer_sizes()[1]);
  try {
    return PpoAgent(loaded, std::move(policy_net), std::move(policy), std::move(value_net),
                    std::move(value), std::move(normalizer), 0);
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

PpoAgent load_checkpoint(const std::filesystem::path& path, const PpoConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in, cfg);
}

}  // namespace coaching
