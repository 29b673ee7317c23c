#include "nbf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "nbf/classic_bf.hpp"

namespace nbf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    NBF_REQUIRE(used == v.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long long out = std::stoll(v, &used);
    NBF_REQUIRE(used == v.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::string section, key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    auto add_int = [&t](const char* sec, const char* key, auto member) {
      t.push_back({sec, key,
                   [member](const RunConfig& c) { return std::to_string(c.*member); },
                   [member, key](RunConfig& c, const std::string& v) {
                     using T = std::remove_reference_t<decltype(c.*member)>;
                     c.*member = T(parse_int(key, v));
                   }});
    };
    auto add_double = [&t](const char* sec, const char* key, auto member) {
      t.push_back({sec, key,
                   [member](const RunConfig& c) { return format_double(c.*member); },
                   [member, key](RunConfig& c, const std::string& v) {
                     c.*member = parse_double(key, v);
                   }});
    };
    add_int("stft", "fft_size", &RunConfig::fft_size);
    add_int("stft", "window_length", &RunConfig::window_length);
    add_int("stft", "hop", &RunConfig::hop);
    add_double("stft", "sample_rate", &RunConfig::sample_rate);

    t.push_back({"array", "positions",
                 [](const RunConfig& c) {
                   std::string s;
                   for (size_t i = 0; i < c.positions.size(); ++i) {
                     if (i) s += ",";
                     s += format_double(c.positions[i]);
                   }
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.positions.clear();
                   std::istringstream is(v);
                   std::string part;
                   while (std::getline(is, part, ','))
                     c.positions.push_back(parse_double("positions", trim(part)));
                   NBF_REQUIRE(!c.positions.empty(), "config: positions must be non-empty");
                 }});
    add_double("array", "speed_of_sound", &RunConfig::speed_of_sound);

    add_int("features", "ref_channel", &RunConfig::ref_channel);

    add_int("estimator", "blocks", &RunConfig::blocks);
    add_int("estimator", "layers_per_block", &RunConfig::layers_per_block);
    add_int("estimator", "channels", &RunConfig::channels);
    add_int("estimator", "kernel", &RunConfig::kernel);
    add_int("estimator", "crf_half_width", &RunConfig::crf_half_width);

    t.push_back({"beamformer", "kind",
                 [](const RunConfig& c) { return c.beam_kind; },
                 [](RunConfig& c, const std::string& v) { c.beam_kind = v; }});
    t.push_back({"beamformer", "normalization",
                 [](const RunConfig& c) { return c.normalization; },
                 [](RunConfig& c, const std::string& v) { c.normalization = v; }});
    add_double("beamformer", "diagonal_loading", &RunConfig::diagonal_loading);
    add_int("beamformer", "rnn_hidden", &RunConfig::rnn_hidden);
    add_int("beamformer", "dnn_hidden", &RunConfig::dnn_hidden);

    add_double("training", "chunk_seconds", &RunConfig::chunk_seconds);
    add_double("training", "lr", &RunConfig::lr);
    add_double("training", "max_grad_norm", &RunConfig::max_grad_norm);
    add_int("training", "steps", &RunConfig::steps);
    add_int("training", "batch_size", &RunConfig::batch_size);
    t.push_back({"training", "seed",
                 [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) {
                   c.seed = uint64_t(parse_int("seed", v));
                 }});
    add_int("training", "checkpoint_every", &RunConfig::checkpoint_every);

    t.push_back({"evaluation", "write_per_scene",
                 [](const RunConfig& c) { return c.write_per_scene ? "true" : "false"; },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "true" || v == "1") c.write_per_scene = true;
                   else if (v == "false" || v == "0") c.write_per_scene = false;
                   else throw ConfigError("config: bad boolean for write_per_scene: '" + v + "'");
                 }});
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

}  // namespace

std::map<std::string, std::vector<std::pair<std::string, std::string>>> parse_ini(
    const std::string& text) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      NBF_REQUIRE(t.back() == ']', "config: malformed section at line " + std::to_string(line_no));
      section = trim(t.substr(1, t.size() - 2));
      out[section];
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
    NBF_REQUIRE(!section.empty(), "config: key outside any section at line " + std::to_string(line_no));
    out[section].emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Default: return "default";
    case Provenance::File: return "config";
    case Provenance::Flag: return "flag";
  }
  return "?";
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const Field& f : fields()) c.provenance[f.section + "." + f.key] = Provenance::Default;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_ini_text(text);
}

RunConfig RunConfig::from_ini_text(const std::string& text, Provenance origin) {
  RunConfig c = defaults();
  c.apply_ini_text(text, origin);
  return c;
}

void RunConfig::apply_ini_text(const std::string& text, Provenance origin) {
  const auto sections = parse_ini(text);
  for (const auto& [section, kvs] : sections) {
    if (section == "trainer_state") continue;  // appended by the trainer, not a config section
    for (const auto& [key, value] : kvs) {
      const Field* f = find_field(section, key);
      if (!f) throw ConfigError("config: unknown key " + section + "." + key);
      f->set(*this, value);
      provenance[section + "." + key] = origin;
    }
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config: override must be section.key=value, got '" + assignment + "'");
  const std::string lhs = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const size_t dot = lhs.find('.');
  if (dot == std::string::npos)
    throw ConfigError("config: override must be section.key=value, got '" + assignment + "'");
  const std::string section = lhs.substr(0, dot), key = lhs.substr(dot + 1);
  const Field* f = find_field(section, key);
  if (!f) throw ConfigError("config: unknown key " + section + "." + key);
  f->set(*this, value);
  provenance[section + "." + key] = Provenance::Flag;
}

void RunConfig::validate() const {
  try {
    stft_config().validate();
    geometry().validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  NBF_REQUIRE(sample_rate > 0, "config: sample_rate must be > 0");
  NBF_REQUIRE(ref_channel >= 0 && ref_channel < mics(), "config: ref_channel out of range");
  NBF_REQUIRE(blocks >= 1 && layers_per_block >= 1 && channels >= 1, "config: estimator sizes");
  NBF_REQUIRE(kernel >= 1 && kernel % 2 == 1, "config: kernel must be odd");
  NBF_REQUIRE(crf_half_width >= 0, "config: crf_half_width must be >= 0");
  beam_kind_from(beam_kind);
  NBF_REQUIRE(normalization == "mask-norm" || normalization == "layer-norm",
              "config: normalization must be mask-norm or layer-norm");
  NBF_REQUIRE(diagonal_loading >= 0, "config: diagonal_loading must be >= 0");
  NBF_REQUIRE(rnn_hidden >= 1 && dnn_hidden >= 1, "config: hidden sizes");
  NBF_REQUIRE(chunk_samples() >= 2 * int64_t(window_length),
              "config: chunk_seconds too small for the STFT window");
  NBF_REQUIRE(steps >= 0 && batch_size >= 1 && checkpoint_every >= 1, "config: training sizes");
  NBF_REQUIRE(lr > 0 && max_grad_norm > 0, "config: lr and max_grad_norm must be > 0");
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  std::string current;
  for (const Field& f : fields()) {
    if (f.section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get(*this) << "\n";
  }
  return os.str();
}

void RunConfig::echo(std::ostream& os) const {
  for (const Field& f : fields()) {
    const auto it = provenance.find(f.section + "." + f.key);
    const Provenance p = it == provenance.end() ? Provenance::Default : it->second;
    os << f.section << "." << f.key << " = " << f.get(*this) << "  (" << provenance_name(p)
       << ")\n";
  }
}

}  // namespace nbf
