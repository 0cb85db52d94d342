#include "mlqmcfe/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

namespace {

struct KeySpec {
  const char* key;
  const char* def;
};

// Registry of every recognized key with its default. "auto" means derived at
// run time; the resolved value is echoed into run records.
const KeySpec kKeys[] = {
    {"field.family", "sine"},
    {"field.c", "0.5"},
    {"field.theta", "2.0"},
    {"field.a_min", "auto"},
    {"field.a_max", "auto"},
    {"field.kappa", "1.0"},
    {"field.p", "0.4"},
    {"field.q", "0.6"},
    {"field.b_const", "auto"},
    {"field.c_t", "1.0"},
    {"wavelet.a", "2"},
    {"wavelet.c", "0.3"},
    {"wavelet.theta", "1.0"},
    {"wavelet.max_level", "10"},
    {"wavelet.k", "1"},
    {"fem.dim", "1"},
    {"fem.h0", "auto"},
    {"fem.L", "4"},
    {"fem.quad_degree", "6"},
    {"fem.solver_tol", "1e-12"},
    {"qmc.delta", "0.1"},
    {"qmc.lambda_override", "auto"},
    {"qmc.seed", "auto"},
    {"run.mode", "ml"},
    {"run.epsilon", "auto"},
    {"run.L", "auto"},
    {"run.seed", "1"},
    {"run.scenario", "1"},
    {"run.tau", "2.0"},
    {"run.mstar", "16"},
    {"run.n0_scale", "1.0"},
    {"run.cap_s", "4096"},
    {"run.cap_n", "1048576"},
    {"run.cap_l", "12"},
    {"run.s", "8"},
    {"run.n", "257"},
    {"run.shifts", "32"},
    {"run.n_list", "127,257,509,1021,2039,4093"},
    {"run.s_list", "4,8,16,32"},
    {"run.smax", "64"},
    {"run.l_list", "2,3,4,5"},
    {"run.sl_levels", "2,3,4"},
    {"run.repeats", "10"},
    {"run.ref_n", "65536"},
    {"run.ref_shifts", "8"},
    {"run.y_samples", "64"},
    {"output.dir", "out"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (const auto& ks : kKeys) c.values_[ks.key] = ks.def;
  return c;
}

Config Config::from_string(const std::string& text, const std::string& origin) {
  Config c = defaults();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (c.values_.find(key) == c.values_.end())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty value for '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

bool Config::is_auto(const std::string& key) const { return raw(key) == "auto"; }

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: unregistered key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const {
  const std::string& v = raw(key);
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not a number: '" + v + "'");
  }
  if (pos != v.size())
    throw std::runtime_error("config: key '" + key + "' is not a number: '" + v + "'");
  return out;
}

long long Config::integer(const std::string& key) const {
  const std::string& v = raw(key);
  std::size_t pos = 0;
  long long out;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' is not an integer: '" + v + "'");
  }
  if (pos != v.size())
    throw std::runtime_error("config: key '" + key + "' is not an integer: '" + v + "'");
  return out;
}

std::string Config::str(const std::string& key) const { return raw(key); }

std::vector<long long> Config::int_list(const std::string& key) const {
  const std::string& v = raw(key);
  std::vector<long long> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stoll(item));
  }
  if (out.empty()) throw std::runtime_error("config: key '" + key + "' holds no integers");
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  if (values_.find(key) == values_.end())
    throw std::invalid_argument("config: unregistered key '" + key + "'");
  values_[key] = value;
}

std::string Config::resolved() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
  return os.str();
}

std::uint64_t Config::hash() const { return fnv1a64(resolved()); }

}  // namespace mlqmcfe
