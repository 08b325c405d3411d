#include "mdpabs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace mdpabs {

using nlohmann::json;

std::vector<std::string> Schema::csv_header() const {
  std::vector<std::string> h{"episode", "t"};
  h.insert(h.end(), features.begin(), features.end());
  for (std::size_t i = 0; i < action_dim; ++i) h.push_back("action_" + std::to_string(i));
  h.emplace_back("reward");
  h.emplace_back("terminal");
  h.insert(h.end(), labels.begin(), labels.end());
  return h;
}

int Schema::label_index(const std::string& name) const {
  const auto it = std::find(labels.begin(), labels.end(), name);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

void TrajectoryDataset::reindex() {
  episodes.clear();
  if (states.empty()) throw Error("no episodes");
  std::size_t begin = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    if (i > begin) {
      const auto& prev = states[i - 1];
      if (s.episode != prev.episode)
        throw Error("episode " + std::to_string(prev.episode) + " has no terminal state");
      if (s.t <= prev.t)
        throw Error("episode " + std::to_string(s.episode) + ": step index not strictly increasing at t=" +
                    std::to_string(s.t));
    }
    if (s.terminal) {
      episodes.push_back({s.episode, begin, i + 1});
      begin = i + 1;
    }
  }
  if (begin != states.size())
    throw Error("episode " + std::to_string(states.back().episode) + " has no terminal state");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t dataset_hash(const TrajectoryDataset& ds) { return fnv1a64(to_csv(ds)); }

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("column '" + column + "': expected a number, got '" + std::string(s) + "'", line);
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line, const std::string& column) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("column '" + column + "': expected an integer, got '" + std::string(s) + "'", line);
  return v;
}

bool parse_bool01(std::string_view s, std::size_t line, const std::string& column) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError("column '" + column + "': expected 0/1, got '" + std::string(s) + "'", line);
}

void finish(TrajectoryDataset& ds, const std::string& source, std::uint64_t hash) {
  ds.source = source;
  ds.content_hash = hash;
  try {
    ds.reindex();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

TrajectoryDataset parse_csv(const std::string& text, const Schema& schema, const std::string& source) {
  TrajectoryDataset ds;
  ds.schema = schema;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> column_of;  // schema column -> file column
  const auto header = schema.csv_header();
  std::size_t n_file_columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (column_of.empty()) {
      std::vector<std::string> missing;
      for (const auto& name : header) {
        const auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) missing.push_back(name);
        column_of.push_back(static_cast<std::size_t>(it - fields.begin()));
      }
      if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ParseError("schema mismatch: missing columns: " + list, line_no);
      }
      n_file_columns = fields.size();
      continue;
    }
    if (fields.size() != n_file_columns)
      throw ParseError("expected " + std::to_string(n_file_columns) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    std::size_t c = 0;
    auto field = [&](std::size_t k) { return fields[column_of[k]]; };
    ConcreteState s;
    s.episode = parse_int(field(c), line_no, header[c]);
    ++c;
    s.t = parse_int(field(c), line_no, header[c]);
    ++c;
    for (std::size_t f = 0; f < schema.features.size(); ++f, ++c)
      s.features.push_back(parse_double(field(c), line_no, header[c]));
    for (std::size_t a = 0; a < schema.action_dim; ++a, ++c)
      s.action.push_back(parse_double(field(c), line_no, header[c]));
    s.reward = parse_double(field(c), line_no, header[c]);
    ++c;
    s.terminal = parse_bool01(field(c), line_no, header[c]);
    ++c;
    for (std::size_t l = 0; l < schema.labels.size(); ++l, ++c)
      s.labels.push_back(parse_bool01(field(c), line_no, header[c]) ? 1 : 0);
    ds.states.push_back(std::move(s));
  }
  if (ds.states.empty()) throw ParseError("no episodes", 0);
  finish(ds, source, fnv1a64(text));
  return ds;
}

TrajectoryDataset parse_jsonl(const std::string& text, const Schema& schema, const std::string& source) {
  TrajectoryDataset ds;
  ds.schema = schema;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    auto need = [&](const char* key) -> const json& {
      if (!row.is_object() || !row.contains(key)) throw ParseError(std::string("missing key '") + key + "'", line_no);
      return row.at(key);
    };
    try {
      ConcreteState s;
      s.episode = need("episode").get<std::int64_t>();
      s.t = need("t").get<std::int64_t>();
      const auto& feats = need("features");
      for (const auto& name : schema.features) {
        if (!feats.contains(name)) throw ParseError("missing feature '" + name + "'", line_no);
        s.features.push_back(feats.at(name).get<double>());
      }
      const auto& act = need("action");
      if (!act.is_array() || act.size() != schema.action_dim)
        throw ParseError("action must be an array of length " + std::to_string(schema.action_dim), line_no);
      for (const auto& a : act) s.action.push_back(a.get<double>());
      s.reward = need("reward").get<double>();
      s.terminal = need("terminal").get<bool>();
      const json empty = json::object();
      const auto& labels = row.contains("labels") ? row.at("labels") : empty;
      for (const auto& name : schema.labels)
        s.labels.push_back(labels.contains(name) && labels.at(name).get<bool>() ? 1 : 0);
      ds.states.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad value: ") + e.what(), line_no);
    }
  }
  if (ds.states.empty()) throw ParseError("no episodes", 0);
  finish(ds, source, fnv1a64(text));
  return ds;
}

TrajectoryDataset load_trajectories(const std::filesystem::path& path, const Schema& schema) {
  const std::string text = read_file(path);
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return parse_jsonl(text, schema, path.string());
  return parse_csv(text, schema, path.string());
}

std::string to_csv(const TrajectoryDataset& ds) {
  std::string out;
  const auto header = ds.schema.csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& s : ds.states) {
    out += std::to_string(s.episode);
    out += ',';
    out += std::to_string(s.t);
    for (double f : s.features) {
      out += ',';
      append_number(out, f);
    }
    for (double a : s.action) {
      out += ',';
      append_number(out, a);
    }
    out += ',';
    append_number(out, s.reward);
    out += s.terminal ? ",1" : ",0";
    for (auto l : s.labels) out += l ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

void write_csv(const TrajectoryDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_csv(ds);
}

TrajectoryDataset subset_episodes(const TrajectoryDataset& ds, const std::vector<std::size_t>& episode_indices,
                                  const std::string& tag) {
  TrajectoryDataset out;
  out.schema = ds.schema;
  for (std::size_t e : episode_indices) {
    const auto& span = ds.episodes.at(e);
    out.states.insert(out.states.end(), ds.states.begin() + static_cast<std::ptrdiff_t>(span.begin),
                      ds.states.begin() + static_cast<std::ptrdiff_t>(span.end));
  }
  out.source = ds.source + "#" + tag;
  if (!out.states.empty()) out.reindex();
  out.content_hash = dataset_hash(out);
  return out;
}

std::pair<TrajectoryDataset, TrajectoryDataset> split_dataset(const TrajectoryDataset& ds, SplitRatio ratio,
                                                              std::uint64_t seed) {
  const std::size_t n = ds.episodes.size();
  if (n < 2) throw Error("split_dataset: need at least 2 episodes, have " + std::to_string(n));
  if (ratio.modeling <= 0 || ratio.validation <= 0) throw Error("split_dataset: ratio parts must be positive");
  const auto total = static_cast<std::size_t>(ratio.modeling + ratio.validation);
  std::size_t n_val = n * static_cast<std::size_t>(ratio.validation) / total;
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> model(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(model.begin(), model.end());
  return {subset_episodes(ds, model, "modeling"), subset_episodes(ds, val, "validation")};
}

TrajectoryDataset annotate_returns(TrajectoryDataset ds, double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw Error("annotate_returns: γ must be in (0,1)");
  for (const auto& ep : ds.episodes) {
    double g = 0.0;
    for (std::size_t i = ep.end; i-- > ep.begin;) {
      g = ds.states[i].reward + gamma * g;
      ds.states[i].v_hat = g;
    }
  }
  return ds;
}

}  // namespace mdpabs
