#include "degenbranch/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <openssl/evp.h>
#include <set>
#include <sstream>

#include "degenbranch/error.hpp"

namespace degenbranch {

namespace {

class Reader {
 public:
  Reader(const Json& obj, std::string path, std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : obj_.items()) {
      if (!allowed.count(key)) throw ConfigError(child(key), "unknown key");
    }
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return obj_.contains(key); }

  const Json& get(const std::string& key) const {
    if (!obj_.contains(key)) throw ConfigError(child(key), "required key is missing");
    return obj_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key) && fallback) return *fallback;
    return as_number(get(key), child(key));
  }

  std::uint64_t unsigned_int(const std::string& key,
                             std::optional<std::uint64_t> fallback = std::nullopt) const {
    if (!has(key) && fallback) return *fallback;
    const Json& v = get(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(child(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> fallback = std::nullopt) const {
    if (!has(key) && fallback) return *fallback;
    return as_numbers(get(key), child(key));
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }

  static std::vector<double> as_numbers(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], fmt::format("{}[{}]", path, i)));
    }
    return out;
  }

 private:
  const Json& obj_;
  std::string path_;
};

GaussianSpec parse_gaussian(const Json& v, const std::string& path) {
  Reader r(v, path, {"centers", "widths", "amplitude"});
  return {r.numbers("centers"), r.numbers("widths"), r.number("amplitude", 1.0)};
}

void format_into(std::string& out, const Json& v, int indent, int depth) {
  auto newline = [&](int level) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (v.type()) {
    case Json::value_t::number_float: {
      const double x = v.get<double>();
      out += std::isfinite(x) ? fmt::format("{:.17g}", x) : "null";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(v.begin(), v.end(), [](const Json& e) {
        return e.is_structured();
      });
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        format_into(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += indent >= 0 ? ": " : ":";
        format_into(out, value, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  Reader r(doc, "$",
           {"name", "alphas", "gamma", "theta", "kappa", "n_schedule", "replicates", "phi",
            "t_grid", "box", "master_seed", "delta", "centering_mode", "refinement",
            "bootstrap_resamples", "intensity", "population_cap", "gates"});
  ExperimentConfig c;
  c.name = r.string("name", c.name);
  c.alphas = r.numbers("alphas");
  c.gamma = r.number("gamma");
  c.theta = r.number("theta");
  c.kappa = r.number("kappa");
  c.n_schedule = r.numbers("n_schedule");
  c.replicates = r.unsigned_int("replicates");
  c.master_seed = r.unsigned_int("master_seed");
  if (r.has("phi")) {
    const Json& phi = r.get("phi");
    c.phi.clear();
    if (phi.is_array()) {
      for (std::size_t i = 0; i < phi.size(); ++i) {
        c.phi.push_back(parse_gaussian(phi[i], fmt::format("$.phi[{}]", i)));
      }
    } else {
      c.phi.push_back(parse_gaussian(phi, "$.phi"));
    }
  } else {
    c.phi = {{std::vector<double>(c.alphas.size(), 0.0), std::vector<double>(c.alphas.size(), 1.0),
              1.0}};
  }
  c.t_grid = r.numbers("t_grid", c.t_grid);
  if (r.has("box")) {
    Reader b(r.get("box"), "$.box", {"scale", "secondary_factor", "max_expected_roots"});
    c.box.scale = b.number("scale", c.box.scale);
    c.box.secondary_factor = b.number("secondary_factor", c.box.secondary_factor);
    c.box.max_expected_roots = b.number("max_expected_roots", c.box.max_expected_roots);
  }
  c.delta = r.number("delta", c.delta);
  {
    const std::string mode = r.string("centering_mode", std::string(to_string(c.centering_mode)));
    const auto parsed = parse_centering_mode(mode);
    if (!parsed) {
      throw ConfigError("$.centering_mode",
                        "must be \"TruncationCorrected\" or \"ExactInfinite\"; got \"" + mode +
                            "\"");
    }
    c.centering_mode = *parsed;
  }
  if (r.has("refinement")) {
    Reader f(r.get("refinement"), "$.refinement", {"fraction", "tolerance"});
    c.refinement.fraction = f.number("fraction", c.refinement.fraction);
    c.refinement.tolerance = f.number("tolerance", c.refinement.tolerance);
  }
  c.bootstrap_resamples = r.unsigned_int("bootstrap_resamples", c.bootstrap_resamples);
  c.intensity = r.number("intensity", c.intensity);
  c.population_cap = r.unsigned_int("population_cap", c.population_cap);
  if (r.has("gates")) {
    Reader g(r.get("gates"), "$.gates",
             {"mean_zero_sigmas", "slope_tolerance", "max_abs_skewness", "max_abs_excess_kurtosis",
              "envelope_low", "envelope_high"});
    auto& s = c.gates;
    s.mean_zero_sigmas = g.number("mean_zero_sigmas", s.mean_zero_sigmas);
    s.slope_tolerance = g.number("slope_tolerance", s.slope_tolerance);
    s.max_abs_skewness = g.number("max_abs_skewness", s.max_abs_skewness);
    s.max_abs_excess_kurtosis = g.number("max_abs_excess_kurtosis", s.max_abs_excess_kurtosis);
    s.envelope_low = g.number("envelope_low", s.envelope_low);
    s.envelope_high = g.number("envelope_high", s.envelope_high);
  }
  try {
    validate(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("$", e.what());
  }
  return c;
}

ExperimentConfig parse_config_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

Json config_to_json(const ExperimentConfig& c) {
  Json phi = Json::array();
  for (const auto& g : c.phi) {
    phi.push_back({{"centers", g.centers}, {"widths", g.widths}, {"amplitude", g.amplitude}});
  }
  return {
      {"name", c.name},
      {"alphas", c.alphas},
      {"gamma", c.gamma},
      {"theta", c.theta},
      {"kappa", c.kappa},
      {"n_schedule", c.n_schedule},
      {"replicates", c.replicates},
      {"phi", phi},
      {"t_grid", c.t_grid},
      {"box",
       {{"scale", c.box.scale},
        {"secondary_factor", c.box.secondary_factor},
        {"max_expected_roots", c.box.max_expected_roots}}},
      {"master_seed", c.master_seed},
      {"delta", c.delta},
      {"centering_mode", std::string(to_string(c.centering_mode))},
      {"refinement",
       {{"fraction", c.refinement.fraction}, {"tolerance", c.refinement.tolerance}}},
      {"bootstrap_resamples", c.bootstrap_resamples},
      {"intensity", c.intensity},
      {"population_cap", c.population_cap},
      {"gates",
       {{"mean_zero_sigmas", c.gates.mean_zero_sigmas},
        {"slope_tolerance", c.gates.slope_tolerance},
        {"max_abs_skewness", c.gates.max_abs_skewness},
        {"max_abs_excess_kurtosis", c.gates.max_abs_excess_kurtosis},
        {"envelope_low", c.gates.envelope_low},
        {"envelope_high", c.gates.envelope_high}}},
  };
}

std::string format_json(const Json& value, int indent) {
  std::string out;
  format_into(out, value, indent, 0);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace degenbranch
