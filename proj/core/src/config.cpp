#include "mpcc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mpcc/error.hpp"

namespace mpcc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& invariant) {
  if (!ok) throw ConfigError("config invariant violated: " + invariant);
}

}  // namespace

void ModelConfig::validate() const {
  require(n_points >= 1, "n_points >= 1");
  require(G >= 1 && K >= 1, "G >= 1 and K >= 1");
  require(bits >= 1 && bits <= 21, "1 <= bits <= 21");
  require(D >= 2 && D % 2 == 0, "D even and >= 2");
  require(S >= 1 && D % S == 0, "D % S == 0");
  require(n_blocks >= 1, "n_blocks >= 1");
  require(n_state >= 1, "n_state >= 1");
  require(expand >= 1, "expand >= 1");
  require(coarse_points >= 1 && fold_rows >= 1 && fold_cols >= 1,
          "coarse_points * fold_grid == n_points_out with positive factors");
  require(hidden >= 1 && fold_hidden >= 1, "hidden widths >= 1");
  require(lambda >= 0 && beta >= 0, "lambda >= 0 and beta >= 0");
  require(lr > 0, "lr > 0");
  require(weight_decay >= 0, "weight_decay >= 0");
  require(batch >= 1, "batch >= 1");
  require(ckpt_every >= 1, "ckpt_every >= 1");
}

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto sz = [&] { return parse_number<std::size_t>(key, v); };
  auto dbl = [&] { return parse_number<double>(key, v); };
  if (key == "n_points") n_points = sz();
  else if (key == "G") G = sz();
  else if (key == "K") K = sz();
  else if (key == "bits") bits = parse_number<int>(key, v);
  else if (key == "D") D = sz();
  else if (key == "n_blocks") n_blocks = sz();
  else if (key == "n_state") n_state = sz();
  else if (key == "expand") expand = sz();
  else if (key == "S") S = sz();
  else if (key == "lambda") lambda = dbl();
  else if (key == "beta") beta = dbl();
  else if (key == "use_cdps") use_cdps = parse_bool(key, v);
  else if (key == "use_cdsa") use_cdsa = parse_bool(key, v);
  else if (key == "use_cdca") use_cdca = parse_bool(key, v);
  else if (key == "modulate_forward") modulate_forward = parse_bool(key, v);
  else if (key == "tap_every_block") tap_every_block = parse_bool(key, v);
  else if (key == "pair_by_category") pair_by_category = parse_bool(key, v);
  else if (key == "coarse_points") coarse_points = sz();
  else if (key == "fold_grid") {
    const auto x = v.find('x');
    if (x == std::string::npos) throw ConfigError("fold_grid must look like RxC, got '" + v + "'");
    fold_rows = parse_number<std::size_t>(key, v.substr(0, x));
    fold_cols = parse_number<std::size_t>(key, v.substr(x + 1));
  } else if (key == "hidden") hidden = sz();
  else if (key == "fold_hidden") fold_hidden = sz();
  else if (key == "lr") lr = dbl();
  else if (key == "weight_decay") weight_decay = dbl();
  else if (key == "batch") batch = sz();
  else if (key == "epochs") epochs = sz();
  else if (key == "ckpt_every") ckpt_every = sz();
  else if (key == "max_steps") max_steps = sz();
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string ModelConfig::to_string() const {
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "n_points = " << n_points << '\n'
     << "G = " << G << '\n'
     << "K = " << K << '\n'
     << "bits = " << bits << '\n'
     << "D = " << D << '\n'
     << "n_blocks = " << n_blocks << '\n'
     << "n_state = " << n_state << '\n'
     << "expand = " << expand << '\n'
     << "S = " << S << '\n'
     << "lambda = " << fmt_double(lambda) << '\n'
     << "beta = " << fmt_double(beta) << '\n'
     << "use_cdps = " << b(use_cdps) << '\n'
     << "use_cdsa = " << b(use_cdsa) << '\n'
     << "use_cdca = " << b(use_cdca) << '\n'
     << "modulate_forward = " << b(modulate_forward) << '\n'
     << "tap_every_block = " << b(tap_every_block) << '\n'
     << "pair_by_category = " << b(pair_by_category) << '\n'
     << "coarse_points = " << coarse_points << '\n'
     << "fold_grid = " << fold_rows << 'x' << fold_cols << '\n'
     << "hidden = " << hidden << '\n'
     << "fold_hidden = " << fold_hidden << '\n'
     << "lr = " << fmt_double(lr) << '\n'
     << "weight_decay = " << fmt_double(weight_decay) << '\n'
     << "batch = " << batch << '\n'
     << "epochs = " << epochs << '\n'
     << "ckpt_every = " << ckpt_every << '\n'
     << "max_steps = " << max_steps << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void ModelConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write config: " + path.string());
  os << to_string();
}

}  // namespace mpcc
