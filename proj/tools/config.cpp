#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

namespace macroreal::cli {
namespace {

using json = nlohmann::ordered_json;
using PathItem = std::variant<std::string, std::size_t>;

struct Position {
  std::size_t line = 1, column = 1;
};

Position position_of(const std::string& text, std::size_t offset) {
  Position p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// Best effort: walk the keys of `path` through the raw text.
Position locate(const std::string& text, const std::vector<PathItem>& path) {
  std::size_t pos = 0, found = 0;
  for (const auto& item : path) {
    if (const auto* key = std::get_if<std::string>(&item)) {
      const std::string quoted = "\"" + *key + "\"";
      std::size_t at = pos;
      while ((at = text.find(quoted, at)) != std::string::npos) {
        std::size_t after = at + quoted.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == ':') break;
        at += quoted.size();
      }
      if (at == std::string::npos) break;
      found = pos = at;
    } else {
      // skip to the n-th element of the array that follows
      std::size_t open = text.find('[', pos);
      if (open == std::string::npos) break;
      std::size_t idx = std::get<std::size_t>(item), at = open + 1;
      int depth = 0;
      while (idx > 0 && at < text.size()) {
        const char c = text[at];
        if (c == '[' || c == '{') ++depth;
        else if (c == ']' || c == '}') --depth;
        else if (c == ',' && depth == 0) --idx;
        ++at;
      }
      while (at < text.size() && std::isspace(static_cast<unsigned char>(text[at]))) ++at;
      found = pos = at;
    }
  }
  return position_of(text, found);
}

std::string describe(const std::vector<PathItem>& path) {
  std::string s;
  for (const auto& item : path) {
    if (const auto* key = std::get_if<std::string>(&item)) s += (s.empty() ? "" : ".") + *key;
    else s += "[" + std::to_string(std::get<std::size_t>(item)) + "]";
  }
  return s.empty() ? "<root>" : s;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void error(const std::vector<PathItem>& path, const std::string& what) const {
    const Position p = locate(text_, path);
    std::ostringstream msg;
    msg << "config error at line " << p.line << ", column " << p.column << " (" << describe(path)
        << "): " << what;
    fail(ErrorKind::config, msg.str());
  }

  void only_keys(const json& obj, const std::vector<PathItem>& path,
                 std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) error(path, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) {
        auto p = path;
        p.emplace_back(k);
        error(p, "unknown key \"" + k + "\"");
      }
    }
  }

  double number(const json& v, const std::vector<PathItem>& path) const {
    if (!v.is_number()) error(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) error(path, "expected a finite number");
    return x;
  }

  double positive(const json& v, const std::vector<PathItem>& path) const {
    const double x = number(v, path);
    if (!(x > 0)) error(path, "must be positive");
    return x;
  }

  long integer(const json& v, const std::vector<PathItem>& path, long lo) const {
    if (!v.is_number_integer()) error(path, "expected an integer");
    const long x = v.get<long>();
    if (x < lo) error(path, "must be >= " + std::to_string(lo));
    return x;
  }

  std::string string(const json& v, const std::vector<PathItem>& path,
                     std::initializer_list<const char*> choices = {}) const {
    if (!v.is_string()) error(path, "expected a string");
    auto s = v.get<std::string>();
    if (choices.size() == 0) return s;
    std::string list;
    for (const char* c : choices) {
      if (s == c) return s;
      list += std::string(list.empty() ? "" : ", ") + c;
    }
    error(path, "\"" + s + "\" is not one of: " + list);
  }

  bool boolean(const json& v, const std::vector<PathItem>& path) const {
    if (!v.is_boolean()) error(path, "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> increasing(const json& v, const std::vector<PathItem>& path,
                                 bool allow_zero) const {
    if (!v.is_array() || v.empty()) error(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto p = path;
      p.emplace_back(i);
      const double x = number(v[i], p);
      if (allow_zero ? x < 0 : x <= 0) error(p, allow_zero ? "must be non-negative" : "must be positive");
      if (!out.empty() && x <= out.back()) error(p, "values must be strictly increasing");
      out.push_back(x);
    }
    return out;
  }

 private:
  const std::string& text_;
};

std::vector<PathItem> operator+(std::vector<PathItem> p, const char* key) {
  p.emplace_back(std::string(key));
  return p;
}

void read_system(const Reader& r, const json& j, SystemConfig& s) {
  const std::vector<PathItem> at{std::string("system")};
  r.only_keys(j, at, {"kind", "omega0", "alpha", "barrier_height", "kinetic", "grid", "file",
                      "initial_state", "eigen_index"});
  if (!j.contains("kind")) r.error(at, "missing \"kind\"");
  const auto kind = r.string(j["kind"], at + "kind", {"double_well", "harmonic", "explicit_matrix"});
  s.kind = kind == "double_well" ? SystemKind::double_well
           : kind == "harmonic"  ? SystemKind::harmonic
                                 : SystemKind::explicit_matrix;
  if (j.contains("omega0")) s.omega0 = r.positive(j["omega0"], at + "omega0");
  if (j.contains("alpha")) s.alpha = r.positive(j["alpha"], at + "alpha");
  if (j.contains("barrier_height")) s.barrier_height = r.positive(j["barrier_height"], at + "barrier_height");
  if (j.contains("kinetic")) {
    s.kinetic = kinetic_scheme_from_string(
        r.string(j["kinetic"], at + "kinetic", {"spectral", "finite_difference"}));
  }
  if (j.contains("grid")) {
    const auto g = at + "grid";
    r.only_keys(j["grid"], g, {"x_min", "x_max", "points"});
    const auto& jg = j["grid"];
    if (jg.contains("x_min")) s.grid.x_min = r.number(jg["x_min"], g + "x_min");
    if (jg.contains("x_max")) s.grid.x_max = r.number(jg["x_max"], g + "x_max");
    if (jg.contains("points")) s.grid.points = static_cast<std::size_t>(r.integer(jg["points"], g + "points", 16));
    if (!(s.grid.x_max > s.grid.x_min)) r.error(g, "x_max must exceed x_min");
  }
  if (j.contains("file")) s.file = r.string(j["file"], at + "file");
  if (s.kind == SystemKind::explicit_matrix && s.file.empty()) r.error(at, "explicit_matrix needs \"file\"");
  if (s.kind != SystemKind::explicit_matrix && !s.file.empty()) r.error(at + "file", "\"file\" only applies to explicit_matrix");
  s.initial_state = s.kind == SystemKind::explicit_matrix ? "file" : "ground";
  if (j.contains("initial_state")) {
    s.initial_state = r.string(j["initial_state"], at + "initial_state",
                               {"ground", "h_eigenstate", "a_eigenstate", "file"});
  }
  if (s.initial_state == "file" && s.kind != SystemKind::explicit_matrix) {
    r.error(at + "initial_state", "\"file\" initial state needs an explicit_matrix system");
  }
  if (j.contains("eigen_index")) s.eigen_index = static_cast<std::size_t>(r.integer(j["eigen_index"], at + "eigen_index", 0));
}

void read_values(const Reader& r, const json& j, const std::vector<PathItem>& at, ValueList& v) {
  if (j.is_array()) {
    v = ValueList{};
    v.values = r.increasing(j, at, false);
    return;
  }
  r.only_keys(j, at, {"log"});
  if (!j.contains("log")) r.error(at, "expected an array or {\"log\": {...}}");
  const auto l = at + "log";
  r.only_keys(j["log"], l, {"min", "max", "per_decade"});
  for (const char* k : {"min", "max", "per_decade"}) {
    if (!j["log"].contains(k)) r.error(l, std::string("missing \"") + k + "\"");
  }
  v = ValueList{};
  v.log_min = r.positive(j["log"]["min"], l + "min");
  v.log_max = r.positive(j["log"]["max"], l + "max");
  v.per_decade = static_cast<int>(r.integer(j["log"]["per_decade"], l + "per_decade", 1));
  if (!(v.log_max > v.log_min)) r.error(l + "max", "max must exceed min");
}

json write_values(const ValueList& v) {
  if (!v.is_log()) return json(v.values);
  return json{{"log", {{"min", v.log_min}, {"max", v.log_max}, {"per_decade", v.per_decade}}}};
}

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::double_well: return "double_well";
    case SystemKind::harmonic: return "harmonic";
    case SystemKind::explicit_matrix: return "explicit_matrix";
  }
  return "unknown";
}

std::vector<double> ValueList::resolve() const {
  if (!is_log()) return values;
  const double decades = std::log10(log_max / log_min);
  const auto steps = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> out;
  for (int k = 0; k <= steps; ++k) {
    out.push_back(k == steps ? log_max : log_min * std::pow(10.0, double(k) / per_decade));
  }
  return out;
}

std::vector<double> TimesConfig::resolve(double omega0) const {
  const double unit_scale = unit == "pi" ? std::numbers::pi
                            : unit == "period" ? 2.0 * std::numbers::pi / omega0
                                               : 1.0;
  std::vector<double> out;
  if (samples > 0) {
    for (std::size_t k = 0; k < samples; ++k) out.push_back(unit_scale * span * double(k) / double(samples));
  } else {
    for (double v : values) out.push_back(unit_scale * v);
  }
  return out;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return schema_version == o.schema_version && system == o.system && measurement == o.measurement &&
         times == o.times && ensemble == o.ensemble && tolerances == o.tolerances &&
         protocol == o.protocol && output == o.output;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const Position p = position_of(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream msg;
    msg << "config error at line " << p.line << ", column " << p.column << ": malformed JSON ("
        << e.what() << ")";
    fail(ErrorKind::config, msg.str());
  }
  const Reader r(text);
  const std::vector<PathItem> root;
  r.only_keys(j, root, {"schema_version", "system", "measurement", "times", "ensemble",
                        "tolerances", "protocol", "output"});
  ExperimentConfig c;
  c.base_dir = base_dir;
  for (const char* k : {"schema_version", "system", "measurement", "times"}) {
    if (!j.contains(k)) r.error(root, std::string("missing \"") + k + "\"");
  }
  c.schema_version = static_cast<int>(r.integer(j["schema_version"], root + "schema_version", 1));
  if (c.schema_version != kSchemaVersion) {
    r.error(root + "schema_version", "unsupported schema version " + std::to_string(c.schema_version));
  }
  read_system(r, j["system"], c.system);

  {
    const auto at = root + "measurement";
    const auto& m = j["measurement"];
    r.only_keys(m, at, {"sigma", "sigma_unit", "include_limits", "sigma_b", "sigma_b_unit"});
    if (!m.contains("sigma")) r.error(at, "missing \"sigma\"");
    read_values(r, m["sigma"], at + "sigma", c.measurement.sigma);
    if (m.contains("sigma_unit")) c.measurement.sigma_unit = r.string(m["sigma_unit"], at + "sigma_unit", {"d_eff", "au"});
    if (m.contains("include_limits")) c.measurement.include_limits = r.boolean(m["include_limits"], at + "include_limits");
    if (m.contains("sigma_b")) c.measurement.sigma_b = r.positive(m["sigma_b"], at + "sigma_b");
    if (m.contains("sigma_b_unit")) c.measurement.sigma_b_unit = r.string(m["sigma_b_unit"], at + "sigma_b_unit", {"d_eff", "au"});
  }
  {
    const auto at = root + "times";
    const auto& t = j["times"];
    r.only_keys(t, at, {"values", "samples", "span", "unit"});
    if (t.contains("values") == (t.contains("samples") || t.contains("span"))) {
      r.error(at, "give either \"values\" or \"samples\" with \"span\"");
    }
    if (t.contains("values")) {
      c.times.values = r.increasing(t["values"], at + "values", true);
    } else {
      if (!t.contains("samples") || !t.contains("span")) r.error(at, "\"samples\" and \"span\" go together");
      c.times.samples = static_cast<std::size_t>(r.integer(t["samples"], at + "samples", 1));
      c.times.span = r.positive(t["span"], at + "span");
    }
    if (t.contains("unit")) c.times.unit = r.string(t["unit"], at + "unit", {"au", "pi", "period"});
  }
  if (j.contains("ensemble")) {
    const auto at = root + "ensemble";
    r.only_keys(j["ensemble"], at, {"N"});
    if (!j["ensemble"].contains("N")) r.error(at, "missing \"N\"");
    c.ensemble = r.increasing(j["ensemble"]["N"], at + "N", false);
    for (std::size_t i = 0; i < c.ensemble.size(); ++i) {
      auto p = at + "N";
      p.emplace_back(i);
      if (c.ensemble[i] < 1) r.error(p, "N must be >= 1");
    }
  }
  if (j.contains("tolerances")) {
    const auto at = root + "tolerances";
    const auto& t = j["tolerances"];
    r.only_keys(t, at, {"eps_iwm", "eps_nsit", "population_tail", "energy_tail", "pointer_tail",
                        "occupation_threshold", "hermite_nodes"});
    auto& o = c.tolerances;
    if (t.contains("eps_iwm")) o.eps_iwm = r.positive(t["eps_iwm"], at + "eps_iwm");
    if (t.contains("eps_nsit")) o.eps_nsit = r.positive(t["eps_nsit"], at + "eps_nsit");
    if (t.contains("population_tail")) o.population_tail = r.positive(t["population_tail"], at + "population_tail");
    if (t.contains("energy_tail")) o.energy_tail = r.positive(t["energy_tail"], at + "energy_tail");
    if (t.contains("pointer_tail")) o.pointer_tail = r.positive(t["pointer_tail"], at + "pointer_tail");
    if (t.contains("occupation_threshold")) o.occupation_threshold = r.positive(t["occupation_threshold"], at + "occupation_threshold");
    if (t.contains("hermite_nodes")) o.hermite_nodes = static_cast<int>(r.integer(t["hermite_nodes"], at + "hermite_nodes", 8));
  }
  if (j.contains("protocol")) {
    const auto at = root + "protocol";
    const auto& p = j["protocol"];
    r.only_keys(p, at, {"N", "nsit_sigma"});
    if (p.contains("N")) {
      c.protocol.n = r.number(p["N"], at + "N");
      if (c.protocol.n < 1) r.error(at + "N", "N must be >= 1");
    }
    if (p.contains("nsit_sigma") && !p["nsit_sigma"].is_null()) {
      c.protocol.nsit_sigma = r.positive(p["nsit_sigma"], at + "nsit_sigma");
    }
  }
  if (j.contains("output")) {
    const auto at = root + "output";
    const auto& o = j["output"];
    r.only_keys(o, at, {"directory", "formats"});
    if (o.contains("directory")) c.output.directory = r.string(o["directory"], at + "directory");
    if (o.contains("formats")) {
      const auto& f = o["formats"];
      if (!f.is_array()) r.error(at + "formats", "expected an array of strings");
      c.output.formats.clear();
      for (std::size_t i = 0; i < f.size(); ++i) {
        auto p = at + "formats";
        p.emplace_back(i);
        c.output.formats.push_back(r.string(f[i], p, {"csv", "json"}));
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  json s;
  s["kind"] = to_string(c.system.kind);
  if (!c.system.file.empty()) s["file"] = c.system.file;
  s["omega0"] = c.system.omega0;
  s["alpha"] = c.system.alpha;
  s["barrier_height"] = c.system.barrier_height;
  s["kinetic"] = to_string(c.system.kinetic);
  s["grid"] = {{"x_min", c.system.grid.x_min}, {"x_max", c.system.grid.x_max}, {"points", c.system.grid.points}};
  s["initial_state"] = c.system.initial_state;
  s["eigen_index"] = c.system.eigen_index;
  j["system"] = s;
  j["measurement"] = {{"sigma", write_values(c.measurement.sigma)},
                      {"sigma_unit", c.measurement.sigma_unit},
                      {"include_limits", c.measurement.include_limits},
                      {"sigma_b", c.measurement.sigma_b},
                      {"sigma_b_unit", c.measurement.sigma_b_unit}};
  json t;
  if (c.times.samples > 0) {
    t["samples"] = c.times.samples;
    t["span"] = c.times.span;
  } else {
    t["values"] = c.times.values;
  }
  t["unit"] = c.times.unit;
  j["times"] = t;
  j["ensemble"] = {{"N", c.ensemble}};
  const auto& o = c.tolerances;
  j["tolerances"] = {{"eps_iwm", o.eps_iwm},
                     {"eps_nsit", o.eps_nsit},
                     {"population_tail", o.population_tail},
                     {"energy_tail", o.energy_tail},
                     {"pointer_tail", o.pointer_tail},
                     {"occupation_threshold", o.occupation_threshold},
                     {"hermite_nodes", o.hermite_nodes}};
  j["protocol"] = {{"N", c.protocol.n},
                   {"nsit_sigma", c.protocol.nsit_sigma ? json(*c.protocol.nsit_sigma) : json(nullptr)}};
  j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return j.dump(2) + "\n";
}

}  // namespace macroreal::cli
