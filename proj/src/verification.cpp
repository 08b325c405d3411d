#include "mdpabs/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

namespace mdpabs {

namespace {

constexpr long long kNano = 1000000000LL;

std::string fixed9(double x) {
  if (std::abs(x) < 5e-10) x = 0.0;
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9f", x);
  return buf.data();
}

std::string nano_string(long long v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%lld.%09lld", v / kNano, v % kNano);
  return buf.data();
}

std::string state_set(const std::vector<std::uint8_t>& mask) {
  std::string out;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s]) continue;
    if (!out.empty()) out += "|";
    out += "s=" + std::to_string(s);
  }
  return out.empty() ? "false" : out;
}

}  // namespace

std::string PropertySpec::prism() const {
  if (kind == Kind::RminC) return "R{\"step\"}min=? [ C<=" + std::to_string(horizon) + " ]";
  return "Pmax=? [ F<=" + std::to_string(horizon) + " \"" + label + "\" ]";
}

std::string PropertySpec::name() const {
  if (kind == Kind::RminC) return "RminC<=" + std::to_string(horizon);
  return "PmaxF<=" + std::to_string(horizon) + ":" + label;
}

PropertySpec parse_property(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  PropertySpec spec;
  auto horizon = [&](const std::string& s) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || n < 1) throw Error("property '" + text + "': horizon must be a positive integer");
    return n;
  };
  if (parts.size() == 2 && parts[0] == "RminC") {
    spec.kind = PropertySpec::Kind::RminC;
    spec.horizon = horizon(parts[1]);
  } else if (parts.size() == 3 && parts[0] == "PmaxF" && !parts[2].empty()) {
    spec.kind = PropertySpec::Kind::PmaxF;
    spec.horizon = horizon(parts[1]);
    spec.label = parts[2];
  } else {
    throw Error("property '" + text + "': expected RminC:<N> or PmaxF:<N>:<label>");
  }
  return spec;
}

std::vector<std::string> format_row(const std::vector<double>& probs) {
  std::vector<long long> nano(probs.size());
  long long sum = 0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    nano[i] = std::llround(probs[i] * static_cast<double>(kNano));
    sum += nano[i];
  }
  if (!probs.empty()) {
    nano.back() = kNano - sum;
    if (nano.back() < 0) {
      // rounding overshoot: take it from the largest branch instead
      nano.back() = std::llround(probs.back() * static_cast<double>(kNano));
      sum += nano.back();
      const auto big = static_cast<std::size_t>(std::max_element(nano.begin(), nano.end()) - nano.begin());
      nano[big] -= sum - kNano;
    }
  }
  std::vector<std::string> out;
  out.reserve(nano.size());
  for (long long v : nano) out.push_back(nano_string(v));
  return out;
}

std::string export_prism(const AbstractMdp& mdp) {
  mdp.validate();
  std::ostringstream os;
  const std::size_t n = mdp.n_states;
  std::size_t starts = 0;
  std::size_t first = 0;
  for (std::size_t s = n; s-- > 0;)
    if (mdp.initial[s] > 0) {
      ++starts;
      first = s;
    }

  os << "mdp\n\nmodule abstraction\n";
  os << "  s : [0.." << n - 1 << "]";
  if (starts == 1) os << " init " << first;
  os << ";\n\n";
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& c : mdp.choices[s]) {
      std::vector<double> probs;
      for (const auto& [t, p] : c.next) probs.push_back(p);
      const auto printed = format_row(probs);
      os << "  [";
      if (c.action != kNoAction) os << "a" << c.action;
      os << "] s=" << s << " -> ";
      for (std::size_t b = 0; b < c.next.size(); ++b) {
        if (b) os << " + ";
        os << printed[b] << ":(s'=" << c.next[b].first << ")";
      }
      os << ";\n";
    }
  }
  os << "endmodule\n";
  if (starts != 1) {
    std::vector<std::uint8_t> init(n);
    for (std::size_t s = 0; s < n; ++s) init[s] = mdp.initial[s] > 0;
    os << "\ninit\n  " << state_set(init) << "\nendinit\n";
  }
  os << "\nrewards \"step\"\n";
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& c : mdp.choices[s])
      if (c.action != kNoAction) os << "  [a" << c.action << "] s=" << s << " : " << fixed9(c.reward) << ";\n";
  os << "endrewards\n";
  if (!mdp.label_names.empty()) os << "\n";
  for (const auto& name : mdp.label_names) os << "label \"" << name << "\" = " << state_set(mdp.label_mask(name)) << ";\n";
  return os.str();
}

std::string export_properties(const std::vector<PropertySpec>& specs, const AbstractMdp& mdp) {
  std::string out;
  for (const auto& spec : specs) {
    if (spec.kind == PropertySpec::Kind::PmaxF && !mdp.has_label(spec.label))
      throw Error("unknown label '" + spec.label + "' in property " + spec.name());
    out += spec.prism() + "\n";
  }
  return out;
}

AbstractMdp read_prism(const std::string& text) {
  static const std::regex decl(R"(^\s*s\s*:\s*\[0\.\.(\d+)\](?:\s+init\s+(\d+))?\s*;)");
  static const std::regex command(R"(^\s*\[(?:a(\d+))?\]\s*s=(\d+)\s*->\s*(.*);\s*$)");
  static const std::regex branch(R"(([0-9.eE+-]+):\(s'=(\d+)\))");
  static const std::regex reward(R"(^\s*\[a(\d+)\]\s*s=(\d+)\s*:\s*(\S+);)");
  static const std::regex label(R"(^label\s+\"([^\"]+)\"\s*=\s*(.*);)");
  static const std::regex state_ref(R"(s=(\d+))");

  AbstractMdp mdp;
  std::vector<std::uint32_t> init_states;
  std::vector<std::pair<std::string, std::string>> label_lines;
  std::istringstream in(text);
  std::string line;
  enum class Block { none, rewards, init } block = Block::none;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::smatch m;
    if (line.rfind("rewards", 0) == 0) {
      block = Block::rewards;
      continue;
    }
    if (line.rfind("endrewards", 0) == 0 || line.rfind("endinit", 0) == 0) {
      block = Block::none;
      continue;
    }
    if (line.rfind("init", 0) == 0) {
      block = Block::init;
      continue;
    }
    if (block == Block::init) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), state_ref); it != std::sregex_iterator(); ++it)
        init_states.push_back(static_cast<std::uint32_t>(std::stoul((*it)[1])));
      continue;
    }
    if (block == Block::rewards) {
      if (!std::regex_search(line, m, reward)) continue;
      const auto a = static_cast<ActionId>(std::stoul(m[1]));
      const auto s = static_cast<std::size_t>(std::stoul(m[2]));
      if (s >= mdp.n_states) throw ParseError("reward for unknown state", line_no);
      auto& cs = mdp.choices[s];
      const auto it = std::find_if(cs.begin(), cs.end(), [&](const MdpChoice& c) { return c.action == a; });
      if (it == cs.end()) throw ParseError("reward for unknown action", line_no);
      it->reward = std::stod(m[3]);
      continue;
    }
    if (std::regex_search(line, m, decl)) {
      mdp.n_states = std::stoul(m[1]) + 1;
      mdp.choices.resize(mdp.n_states);
      if (m[2].matched) init_states.push_back(static_cast<std::uint32_t>(std::stoul(m[2])));
      continue;
    }
    if (std::regex_search(line, m, command)) {
      const auto s = static_cast<std::size_t>(std::stoul(m[2]));
      if (s >= mdp.n_states) throw ParseError("command for unknown state", line_no);
      MdpChoice c;
      c.action = m[1].matched ? static_cast<ActionId>(std::stoul(m[1])) : kNoAction;
      const std::string rhs = m[3];
      for (auto it = std::sregex_iterator(rhs.begin(), rhs.end(), branch); it != std::sregex_iterator(); ++it)
        c.next.emplace_back(static_cast<StateId>(std::stoul((*it)[2])), std::stod((*it)[1]));
      if (c.next.empty()) throw ParseError("command without branches", line_no);
      mdp.choices[s].push_back(std::move(c));
      continue;
    }
    if (std::regex_search(line, m, label)) label_lines.emplace_back(m[1], m[2]);
  }
  if (mdp.n_states == 0) throw Error("read_prism: no state variable declaration");
  mdp.degenerate.assign(mdp.n_states, 0);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    auto& cs = mdp.choices[s];
    std::sort(cs.begin(), cs.end(), [](const MdpChoice& a, const MdpChoice& b) { return a.action < b.action; });
    if (cs.size() == 1 && cs[0].action == kNoAction) mdp.degenerate[s] = 1;
    for (const auto& c : cs)
      if (c.action != kNoAction) mdp.n_actions = std::max<std::size_t>(mdp.n_actions, c.action + 1);
  }
  mdp.initial.assign(mdp.n_states, 0.0);
  if (init_states.empty()) throw Error("read_prism: no initial state");
  for (auto s : init_states) mdp.initial.at(s) = 1.0 / static_cast<double>(init_states.size());
  mdp.labels.assign(mdp.n_states, std::vector<std::uint8_t>(label_lines.size(), 0));
  for (std::size_t j = 0; j < label_lines.size(); ++j) {
    mdp.label_names.push_back(label_lines[j].first);
    const auto& expr = label_lines[j].second;
    for (auto it = std::sregex_iterator(expr.begin(), expr.end(), state_ref); it != std::sregex_iterator(); ++it)
      mdp.labels.at(std::stoul((*it)[1]))[j] = 1;
  }
  return mdp;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

double expected(const MdpChoice& c, const std::vector<double>& v) {
  double e = 0.0;
  for (const auto& [t, p] : c.next) e += p * v[t];
  return e;
}

}  // namespace

std::vector<double> bounded_reward_values(const AbstractMdp& mdp, int horizon, bool minimize, par::Exec exec) {
  if (horizon < 0) throw Error("bounded_reward_values: negative horizon");
  const std::size_t n = mdp.n_states;
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (int k = 0; k < horizon; ++k) {
    par::map(exec, n, next, [&](std::size_t s) {
      double best = minimize ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      for (const auto& c : mdp.choices[s]) {
        const double q = c.reward + expected(c, v);
        best = minimize ? std::min(best, q) : std::max(best, q);
      }
      return best;
    });
    v.swap(next);
  }
  return v;
}

std::vector<double> bounded_reach_values(const AbstractMdp& mdp, const std::vector<std::uint8_t>& goal, int horizon,
                                         par::Exec exec) {
  if (horizon < 0) throw Error("bounded_reach_values: negative horizon");
  const std::size_t n = mdp.n_states;
  std::vector<double> v(n);
  for (std::size_t s = 0; s < n; ++s) v[s] = goal[s] ? 1.0 : 0.0;
  std::vector<double> next(n);
  for (int k = 0; k < horizon; ++k) {
    par::map(exec, n, next, [&](std::size_t s) {
      if (goal[s]) return 1.0;
      double best = 0.0;
      for (const auto& c : mdp.choices[s]) best = std::max(best, expected(c, v));
      return std::min(1.0, best);
    });
    v.swap(next);
  }
  return v;
}

namespace {

double from_initial(const AbstractMdp& mdp, const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) total += mdp.initial[s] * v[s];
  return total;
}

}  // namespace

double check_bounded_reward_min(const AbstractMdp& mdp, int horizon, par::Exec exec) {
  if (horizon < 1) throw Error("check_bounded_reward_min: horizon must be >= 1");
  return from_initial(mdp, bounded_reward_values(mdp, horizon, true, exec));
}

double check_bounded_reach_max(const AbstractMdp& mdp, const std::string& label, int horizon, par::Exec exec) {
  if (horizon < 1) throw Error("check_bounded_reach_max: horizon must be >= 1");
  return from_initial(mdp, bounded_reach_values(mdp, mdp.label_mask(label), horizon, exec));
}

double check_property(const AbstractMdp& mdp, const PropertySpec& spec, par::Exec exec) {
  return spec.kind == PropertySpec::Kind::RminC ? check_bounded_reward_min(mdp, spec.horizon, exec)
                                                : check_bounded_reach_max(mdp, spec.label, spec.horizon, exec);
}

std::vector<ActionId> greedy_policy(const AbstractMdp& mdp, int horizon, par::Exec exec) {
  if (horizon < 1) throw Error("greedy_policy: horizon must be >= 1");
  const auto v = bounded_reward_values(mdp, horizon - 1, false, exec);
  std::vector<ActionId> policy(mdp.n_states, kNoAction);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : mdp.choices[s]) {
      const double q = c.reward + expected(c, v);
      if (q > best) {
        best = q;
        policy[s] = c.action;
      }
    }
  }
  return policy;
}

double empirical_property(const TrajectoryDataset& validation, const PropertySpec& spec) {
  if (validation.episodes.empty()) throw Error("empirical_property: empty validation set");
  int label = -1;
  if (spec.kind == PropertySpec::Kind::PmaxF) {
    label = validation.schema.label_index(spec.label);
    if (label < 0) throw Error("unknown label '" + spec.label + "'");
  }
  double total = 0.0;
  const auto n = static_cast<std::size_t>(spec.horizon);
  for (const auto& ep : validation.episodes) {
    if (spec.kind == PropertySpec::Kind::RminC) {
      for (std::size_t i = ep.begin; i < ep.end && i - ep.begin < n; ++i)
        if (!validation.states[i].terminal) total += validation.states[i].reward;
    } else {
      for (std::size_t i = ep.begin; i < ep.end && i - ep.begin <= n; ++i)
        if (validation.states[i].labels[static_cast<std::size_t>(label)]) {
          total += 1.0;
          break;
        }
    }
  }
  return total / static_cast<double>(validation.episodes.size());
}

GapReport semantic_gap(const AbstractMdp& mdp, const TrajectoryDataset& validation,
                       const std::vector<PropertySpec>& specs, par::Exec exec) {
  GapReport rep;
  rep.episodes = validation.episodes.size();
  for (const auto& spec : specs) {
    GapRow row;
    row.property = spec.prism();
    row.verified = check_property(mdp, spec, exec);
    row.empirical = empirical_property(validation, spec);
    row.error = row.empirical - row.verified;
    if (spec.kind == PropertySpec::Kind::PmaxF)
      row.std_error = std::sqrt(row.empirical * (1.0 - row.empirical) / static_cast<double>(rep.episodes));
    rep.rows.push_back(row);
  }
  return rep;
}

std::optional<std::vector<double>> run_prism(const std::string& binary, const std::filesystem::path& model,
                                             const std::filesystem::path& props) {
  const std::string cmd = "\"" + binary + "\" \"" + model.string() + "\" \"" + props.string() + "\" 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string output;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) output += buf.data();
  const int status = pclose(pipe);
  static const std::regex result(R"(Result:\s*([-+0-9.eE]+))");
  std::vector<double> values;
  for (auto it = std::sregex_iterator(output.begin(), output.end(), result); it != std::sregex_iterator(); ++it)
    values.push_back(std::stod((*it)[1]));
  if (status != 0 || values.empty()) return std::nullopt;
  return values;
}

}  // namespace mdpabs
