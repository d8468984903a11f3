// Experiment runner over the shared library's C interface.
//
// Subcommands mirror the library modules: chaos_sample, widening_valley,
// airfoil, implicit_reg, homogenize, stable_check.  Each run is a pure
// function of (config, seed): sectioned key-value config in, CSV series and
// a JSON summary out, plus a resolved config echo that reruns byte-identically.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpgd.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// C boundary: invalid arguments are config mistakes at this level
void ck(int status) {
  if (status == MPGD_OK) return;
  if (status == MPGD_ERR_INVALID) throw ConfigError(mpgd_last_error());
  throw std::runtime_error(mpgd_last_error());
}

/* ------------------------------------------------------------------ */
/* value formatting: shortest text that parses back to the same number */

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

/* ------------------------------------------------------------------ */
/* sectioned key-value config                                          */

struct Section {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  bool operator==(const Section&) const = default;
};

struct ConfigDoc {
  std::vector<Section> sections;
  bool operator==(const ConfigDoc&) const = default;

  const Section* find(const std::string& name) const {
    for (const Section& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

ConfigDoc parse_config_text(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  Section* cur = nullptr;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(where + ": empty section name");
      if (doc.find(name)) throw ConfigError(where + ": duplicate section [" + name + "]");
      doc.sections.push_back(Section{name, {}});
      cur = &doc.sections.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    if (!cur) throw ConfigError(where + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    for (const auto& [k, v] : cur->entries)
      if (k == key)
        throw ConfigError(where + ": duplicate key '" + key + "' in [" + cur->name + "]");
    cur->entries.emplace_back(key, value);
  }
  return doc;
}

ConfigDoc load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string render_config(const ConfigDoc& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.sections.size(); ++i) {
    if (i) out += "\n";
    out += "[" + doc.sections[i].name + "]\n";
    for (const auto& [k, v] : doc.sections[i].entries) out += k + " = " + v + "\n";
  }
  return out;
}

// typed accessors over one section; records every resolved value so the
// echoed config carries defaults, and rejects keys nobody asked for
class Params {
 public:
  Params(const Section* sec, std::string name) : sec_(sec), resolved_{std::move(name), {}} {}

  std::string get_string(const std::string& key, const std::string& fallback) {
    const std::string* raw = lookup(key);
    const std::string v = raw ? *raw : fallback;
    resolved_.entries.emplace_back(key, v);
    return v;
  }

  double get_double(const std::string& key, double fallback) {
    const std::string* raw = lookup(key);
    if (!raw) {
      resolved_.entries.emplace_back(key, fmt(fallback));
      return fallback;
    }
    resolved_.entries.emplace_back(key, *raw);
    return parse_double(key, *raw);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const std::string* raw = lookup(key);
    if (!raw) {
      resolved_.entries.emplace_back(key, fmt_u64(fallback));
      return fallback;
    }
    resolved_.entries.emplace_back(key, *raw);
    return parse_u64(key, *raw);
  }

  bool get_bool(const std::string& key, bool fallback) {
    const std::string* raw = lookup(key);
    if (!raw) {
      resolved_.entries.emplace_back(key, fmt_bool(fallback));
      return fallback;
    }
    resolved_.entries.emplace_back(key, *raw);
    if (*raw == "true" || *raw == "1") return true;
    if (*raw == "false" || *raw == "0") return false;
    throw ConfigError(describe(key) + ": expected true/false, got '" + *raw + "'");
  }

  std::vector<double> get_double_list(const std::string& key, const std::string& fallback) {
    const std::string v = get_string(key, fallback);
    std::vector<double> out;
    for (const std::string& item : split(v))
      out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key, const std::string& fallback) {
    const std::string v = get_string(key, fallback);
    std::vector<std::uint64_t> out;
    for (const std::string& item : split(v))
      out.push_back(parse_u64(key, item));
    return out;
  }

  void finish() const {
    if (!sec_) return;
    for (const auto& [k, v] : sec_->entries)
      if (!used_.count(k))
        throw ConfigError("unknown key '" + k + "' in [" + sec_->name + "]");
  }

  const Section& resolved() const { return resolved_; }

 private:
  const std::string* lookup(const std::string& key) {
    used_.insert(key);
    if (!sec_) return nullptr;
    for (const auto& [k, v] : sec_->entries)
      if (k == key) return &v;
    return nullptr;
  }

  std::string describe(const std::string& key) const {
    return "[" + resolved_.name + "] " + key;
  }

  double parse_double(const std::string& key, const std::string& text) const {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
      throw ConfigError(describe(key) + ": not a number: '" + text + "'");
    return v;
  }

  std::uint64_t parse_u64(const std::string& key, const std::string& text) const {
    const std::string t = trim(text);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || t[0] == '-')
      throw ConfigError(describe(key) + ": not a nonnegative integer: '" + text + "'");
    return v;
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  const Section* sec_;
  Section resolved_;
  std::set<std::string> used_;
};

/* ------------------------------------------------------------------ */
/* output plumbing                                                     */

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) {
    append_row(header);
  }
  void row(const std::vector<std::string>& cells) { append_row(cells); }
  const std::string& text() const { return text_; }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ",";
      text_ += cells[i];
    }
    text_ += "\n";
  }
  std::string text_;
};

struct RunEnv {
  std::string sub;
  std::uint64_t seed = 1;
  int threads = 1;
  fs::path out;
  Section run_resolved{"run", {}};
};

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

RunEnv prepare_env(const ConfigDoc& doc, const std::string& sub, const Overrides& over) {
  for (const Section& s : doc.sections)
    if (s.name != "run" && s.name != sub)
      throw ConfigError("unknown section [" + s.name + "] for subcommand " + sub);

  Params run(doc.find("run"), "run");
  std::uint64_t seed = run.get_u64("seed", 1);
  std::string out = run.get_string("out", "");
  const std::uint64_t threads_cfg = run.get_u64("threads", 1);
  run.finish();

  if (over.seed) seed = *over.seed;
  if (!over.out.empty()) out = over.out;
  int threads = over.threads ? *over.threads : static_cast<int>(threads_cfg);
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (out.empty()) {
    const char* root = std::getenv("MPGD_OUT_ROOT");
    out = (root && *root) ? std::string(root) + "/" + sub : "runs/" + sub;
  }

  RunEnv env;
  env.sub = sub;
  env.seed = seed;
  env.threads = threads;
  env.out = out;
  env.run_resolved.entries = {{"seed", fmt_u64(seed)},
                              {"out", out},
                              {"threads", std::to_string(threads)}};
  std::error_code ec;
  fs::create_directories(env.out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
  return env;
}

void write_resolved(const RunEnv& env, const Params& own) {
  ConfigDoc doc;
  doc.sections.push_back(env.run_resolved);
  doc.sections.push_back(own.resolved());
  const std::string text = render_config(doc);
  if (!(parse_config_text(text, "resolved") == doc))
    throw std::logic_error("resolved config does not round trip");
  write_file(env.out / "resolved_config.ini", text);
}

void write_summary(const RunEnv& env, json j) {
  j["subcommand"] = env.sub;
  j["seed"] = env.seed;
  write_file(env.out / "summary.json", j.dump(2) + "\n");
}

// deterministic sub-stream seeds for fan-out inside one run
std::uint64_t sub_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = base + 0x632be59bd9b4e019ull * (a + 1) + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// uniform draws for initial points; same generator family as the library
struct MixRng {
  std::uint64_t state;
  explicit MixRng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/* ------------------------------------------------------------------ */
/* chaos_sample                                                        */

int cmd_chaos_sample(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "chaos_sample", over);
  Params p(doc.find(env.sub), env.sub);
  const double gamma = p.get_double("gamma", 0.6);
  const double beta = p.get_double("beta", 0.1);
  const std::uint64_t k = p.get_u64("k", 1000);
  const std::uint64_t n_samples = p.get_u64("n_samples", 10000);
  const std::uint64_t realization_steps = p.get_u64("realization_steps", 1000);
  const std::uint64_t burn_in = p.get_u64("burn_in", 10000);
  const bool stationary = p.get_bool("stationary_start", false);
  const double tail_fraction = p.get_double("tail_fraction", 0.01);
  p.finish();
  if (k == 0) throw ConfigError("[chaos_sample] k must be positive");
  if (n_samples == 0) throw ConfigError("[chaos_sample] n_samples must be positive");
  write_resolved(env, p);

  mpgd_observable_constants c;
  ck(mpgd_get_observable_constants(gamma, &c));

  mpgd_chain* chain = nullptr;
  ck(mpgd_chain_new(gamma, beta, env.seed, burn_in, stationary ? 1 : 0, &chain));
  Csv realization({"step", "y", "v"});
  for (std::uint64_t i = 0; i < realization_steps; ++i) {
    double y = 0.0, v = 0.0;
    ck(mpgd_chain_state(chain, &y));
    ck(mpgd_chain_next(chain, &v));
    realization.row({fmt_u64(i), fmt(y), fmt(v)});
  }
  mpgd_chain_free(chain);
  write_file(env.out / "realization.csv", realization.text());

  std::vector<double> sums(n_samples);
  ck(mpgd_birkhoff_sample(gamma, beta, k, burn_in, stationary ? 1 : 0, sums.size(),
                          env.seed, sums.data()));
  Csv sums_csv({"index", "birkhoff_sum"});
  for (std::size_t i = 0; i < sums.size(); ++i)
    sums_csv.row({fmt_u64(i), fmt(sums[i])});
  write_file(env.out / "birkhoff_sums.csv", sums_csv.text());

  double alpha_hat = 0.0, ecf = 0.0;
  ck(mpgd_hill_estimator(sums.data(), sums.size(), tail_fraction, MPGD_TAIL_ABSOLUTE,
                         &alpha_hat));
  ck(mpgd_ecf_distance(sums.data(), sums.size(), c.alpha, beta, 1.0, &ecf));

  json j;
  j["params"] = {{"gamma", gamma},   {"beta", beta},
                 {"k", k},           {"n_samples", n_samples},
                 {"burn_in", burn_in}, {"stationary_start", stationary},
                 {"tail_fraction", tail_fraction}};
  j["alpha_target"] = c.alpha;
  j["hill_alpha"] = alpha_hat;
  j["ecf_distance"] = ecf;
  j["constants"] = {{"y_star", c.y_star},
                    {"d_alpha", c.d_alpha},
                    {"v_low", c.v_low},
                    {"v_high", c.v_high}};
  write_summary(env, std::move(j));
  return kExitOk;
}

/* ------------------------------------------------------------------ */
/* widening_valley                                                     */

int cmd_widening_valley(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "widening_valley", over);
  Params p(doc.find(env.sub), env.sub);
  const std::uint64_t steps = p.get_u64("steps", 100000);
  const std::uint64_t seeds = p.get_u64("seeds", 5);
  const std::uint64_t d_u = p.get_u64("d_u", 10);
  const double eta = p.get_double("eta", 0.01);
  const double mu = p.get_double("mu", 0.02);
  const double sigma = p.get_double("sigma", 0.05);
  const double gamma = p.get_double("gamma", 0.7);
  const double beta = p.get_double("beta", 0.5);
  const double u0_scale = p.get_double("u0_scale", 5.0);
  const std::uint64_t record_every = p.get_u64("record_every", 1000);
  const std::uint64_t burn_in = p.get_u64("burn_in", 10000);
  const bool stationary = p.get_bool("stationary_start", false);
  p.finish();
  if (seeds == 0) throw ConfigError("[widening_valley] seeds must be positive");
  if (steps == 0) throw ConfigError("[widening_valley] steps must be positive");
  write_resolved(env, p);

  mpgd_loss* loss = nullptr;
  ck(mpgd_loss_widening_valley_new(d_u, &loss));
  const std::size_t dim = mpgd_loss_dim(loss);

  const char* scheme_names[] = {"gd", "gaussian", "mpgd"};
  const int methods[] = {MPGD_METHOD_GD, MPGD_METHOD_GAUSSIAN_PGD, MPGD_METHOD_MPGD};

  MixRng init_rng(env.seed);
  Csv comparison({"scheme", "seed_index", "initial_trace", "final_trace", "ratio",
                  "diverged"});
  json per_scheme = json::object();
  for (const char* name : scheme_names)
    per_scheme[name] = {{"n_reduced_below_half", 0},
                        {"n_diverged", 0},
                        {"final_ratios", json::array()}};
  bool any_diverged = false;

  for (std::uint64_t s = 0; s < seeds; ++s) {
    std::vector<double> x0(dim, 0.0);
    for (std::uint64_t i = 0; i < d_u; ++i) x0[i] = u0_scale * init_rng.uniform01();

    for (int m = 0; m < 3; ++m) {
      mpgd_run_config cfg;
      mpgd_run_config_defaults(&cfg);
      cfg.method = methods[m];
      cfg.eta = eta;
      cfg.mu = mu;
      cfg.sigma = sigma;
      cfg.gamma1 = gamma;
      cfg.beta1 = beta;
      cfg.gamma2 = gamma;
      cfg.beta2 = beta;
      cfg.burn_in = burn_in;
      cfg.stationary_start = stationary ? 1 : 0;
      cfg.steps = steps;
      cfg.record_every = record_every;
      cfg.record_trace = 1;
      mpgd_run_result* result = nullptr;
      ck(mpgd_run(loss, x0.data(), dim, &cfg, sub_seed(env.seed, 3 + m, s), &result));

      const std::size_t n_points = mpgd_result_point_count(result);
      Csv trace({"step", "loss", "grad_norm", "hessian_trace"});
      for (std::size_t i = 0; i < n_points; ++i) {
        mpgd_trajectory_point pt;
        ck(mpgd_result_point(result, i, &pt));
        trace.row({fmt_u64(pt.step), fmt(pt.loss), fmt(pt.grad_norm),
                   fmt(pt.hessian_trace)});
      }
      const std::string fname =
          std::string("trace_") + scheme_names[m] + "_seed" + fmt_u64(s) + ".csv";
      write_file(env.out / fname, trace.text());

      mpgd_trajectory_point first, last;
      ck(mpgd_result_point(result, 0, &first));
      ck(mpgd_result_point(result, n_points - 1, &last));
      const bool diverged = mpgd_result_diverged(result) != 0;
      const double ratio = last.hessian_trace / first.hessian_trace;
      comparison.row({scheme_names[m], fmt_u64(s), fmt(first.hessian_trace),
                      fmt(last.hessian_trace), fmt(ratio), diverged ? "1" : "0"});
      json& agg = per_scheme[scheme_names[m]];
      if (diverged) {
        agg["n_diverged"] = agg["n_diverged"].get<int>() + 1;
        any_diverged = true;
      } else {
        agg["final_ratios"].push_back(ratio);
        if (ratio < 0.5)
          agg["n_reduced_below_half"] = agg["n_reduced_below_half"].get<int>() + 1;
      }
      mpgd_result_free(result);
    }
  }
  mpgd_loss_free(loss);
  write_file(env.out / "comparison.csv", comparison.text());

  json j;
  j["params"] = {{"steps", steps},   {"seeds", seeds}, {"d_u", d_u},
                 {"eta", eta},       {"mu", mu},       {"sigma", sigma},
                 {"gamma", gamma},   {"beta", beta},   {"u0_scale", u0_scale}};
  j["schemes"] = per_scheme;
  j["any_diverged"] = any_diverged;
  write_summary(env, std::move(j));
  return any_diverged ? kExitDiverged : kExitOk;
}

/* ------------------------------------------------------------------ */
/* airfoil                                                             */

int cmd_airfoil(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "airfoil", over);
  Params p(doc.find(env.sub), env.sub);
  const std::string data_path = p.get_string("data", "");
  const std::uint64_t rows = p.get_u64("rows", 1503);
  const std::uint64_t target_column = p.get_u64("target_column", 5);
  const std::uint64_t train_rows = p.get_u64("train", 1053);
  const std::uint64_t test_rows = p.get_u64("test", 450);
  const std::uint64_t width = p.get_u64("width", 16);
  const std::uint64_t epochs = p.get_u64("epochs", 3000);
  const double eta = p.get_double("eta", 0.1);
  const double beta = p.get_double("beta", 0.5);
  const double mu = p.get_double("mu", 0.01);
  const double sigma = p.get_double("sigma", 0.02);
  const double mu_sym = p.get_double("mu_sym", 0.01);
  const double sigma_sym = p.get_double("sigma_sym", 0.01);
  const std::vector<double> gammas = p.get_double_list("gammas", "0.55,0.6,0.65,0.7");
  const std::uint64_t seeds = p.get_u64("seeds", 5);
  const std::uint64_t burn_in = p.get_u64("burn_in", 10000);
  const bool stationary = p.get_bool("stationary_start", false);
  p.finish();
  if (seeds == 0) throw ConfigError("[airfoil] seeds must be positive");
  if (gammas.empty()) throw ConfigError("[airfoil] gammas must be nonempty");
  write_resolved(env, p);

  mpgd_dataset* data = nullptr;
  if (data_path.empty()) {
    ck(mpgd_dataset_synthesize_airfoil_like(rows, sub_seed(env.seed, 0xda, 0), &data));
  } else {
    const int st = mpgd_dataset_load(data_path.c_str(), target_column, &data);
    if (st != MPGD_OK) throw IoError(std::string(mpgd_last_error()));
  }

  struct Scheme {
    std::string name;
    int method;
    double mu, sigma, gamma;
  };
  std::vector<Scheme> schemes;
  schemes.push_back({"baseline", MPGD_METHOD_GD, 0.0, 0.0, 0.7});
  schemes.push_back({"gaussian", MPGD_METHOD_GAUSSIAN_PGD, mu, sigma, 0.7});
  for (double g : gammas)
    schemes.push_back({"mpgd_g" + fmt(g), MPGD_METHOD_MPGD, mu, sigma, g});
  for (double g : gammas)
    schemes.push_back({"mpgd_sym_g" + fmt(g), MPGD_METHOD_MPGD_SYM, mu_sym, sigma_sym, g});

  Csv results({"scheme", "gamma", "seed_index", "train_rmse", "test_rmse", "rmse_gap",
               "diverged"});
  std::vector<double> sum_train(schemes.size(), 0.0), sum_test(schemes.size(), 0.0),
      sum_gap(schemes.size(), 0.0);
  std::vector<int> n_ok(schemes.size(), 0), n_div(schemes.size(), 0);

  for (std::uint64_t s = 0; s < seeds; ++s) {
    mpgd_split* split = nullptr;
    ck(mpgd_split_standardize(data, train_rows, test_rows, sub_seed(env.seed, 1, s),
                              &split));
    const mpgd_dataset* train = mpgd_split_train(split);
    const mpgd_dataset* test = mpgd_split_test(split);
    mpgd_loss* mlp = nullptr;
    ck(mpgd_loss_mlp_new(train, width, &mlp));
    const std::size_t dim = mpgd_loss_dim(mlp);
    std::vector<double> p0(dim);
    ck(mpgd_mlp_init_params(mlp, sub_seed(env.seed, 2, s), p0.data()));

    for (std::size_t sc = 0; sc < schemes.size(); ++sc) {
      const Scheme& scheme = schemes[sc];
      mpgd_run_config cfg;
      mpgd_run_config_defaults(&cfg);
      cfg.method = scheme.method;
      cfg.eta = eta;
      cfg.mu = scheme.mu;
      cfg.sigma = scheme.sigma;
      cfg.gamma1 = scheme.gamma;
      cfg.beta1 = beta;
      cfg.gamma2 = scheme.gamma;
      cfg.beta2 = beta;
      cfg.burn_in = burn_in;
      cfg.stationary_start = stationary ? 1 : 0;
      cfg.steps = epochs;
      cfg.record_every = 0;
      mpgd_run_result* result = nullptr;
      ck(mpgd_run(mlp, p0.data(), dim, &cfg, sub_seed(env.seed, 10 + sc, s), &result));
      const bool diverged = mpgd_result_diverged(result) != 0;
      std::vector<double> pf(dim);
      ck(mpgd_result_final(result, pf.data(), dim));
      double train_rmse = std::nan(""), test_rmse = std::nan("");
      if (!diverged) {
        ck(mpgd_mlp_rmse(mlp, train, pf.data(), &train_rmse));
        ck(mpgd_mlp_rmse(mlp, test, pf.data(), &test_rmse));
      }
      const double gap = test_rmse - train_rmse;
      results.row({scheme.name, fmt(scheme.gamma), fmt_u64(s), fmt(train_rmse),
                   fmt(test_rmse), fmt(gap), diverged ? "1" : "0"});
      if (diverged) {
        ++n_div[sc];
      } else {
        sum_train[sc] += train_rmse;
        sum_test[sc] += test_rmse;
        sum_gap[sc] += gap;
        ++n_ok[sc];
      }
      mpgd_result_free(result);
    }
    mpgd_loss_free(mlp);
    mpgd_split_free(split);
  }
  mpgd_dataset_free(data);
  write_file(env.out / "results.csv", results.text());

  Csv aggregate({"scheme", "mean_train_rmse", "mean_test_rmse", "mean_rmse_gap",
                 "n_seeds_ok", "n_diverged"});
  json agg = json::object();
  bool any_diverged = false;
  for (std::size_t sc = 0; sc < schemes.size(); ++sc) {
    const double mt = n_ok[sc] ? sum_train[sc] / n_ok[sc] : std::nan("");
    const double me = n_ok[sc] ? sum_test[sc] / n_ok[sc] : std::nan("");
    const double mg = n_ok[sc] ? sum_gap[sc] / n_ok[sc] : std::nan("");
    aggregate.row({schemes[sc].name, fmt(mt), fmt(me), fmt(mg),
                   std::to_string(n_ok[sc]), std::to_string(n_div[sc])});
    agg[schemes[sc].name] = {{"mean_train_rmse", mt},
                             {"mean_test_rmse", me},
                             {"mean_rmse_gap", mg},
                             {"n_seeds_ok", n_ok[sc]},
                             {"n_diverged", n_div[sc]}};
    if (n_div[sc]) any_diverged = true;
  }
  write_file(env.out / "aggregate.csv", aggregate.text());

  json j;
  j["params"] = {{"rows", rows},       {"train", train_rows}, {"test", test_rows},
                 {"width", width},     {"epochs", epochs},    {"eta", eta},
                 {"beta", beta},       {"mu", mu},            {"sigma", sigma},
                 {"mu_sym", mu_sym},   {"sigma_sym", sigma_sym},
                 {"seeds", seeds},     {"source", data_path.empty() ? "synthetic" : data_path}};
  j["aggregate"] = agg;
  j["any_diverged"] = any_diverged;
  write_summary(env, std::move(j));
  return any_diverged ? kExitDiverged : kExitOk;
}

/* ------------------------------------------------------------------ */
/* implicit_reg                                                        */

int cmd_implicit_reg(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "implicit_reg", over);
  Params p(doc.find(env.sub), env.sub);
  const std::vector<double> diag = p.get_double_list("diag", "2,1,0.5");
  const std::vector<double> a = p.get_double_list("a", "");
  const std::string x0_text = p.get_string("x0", "");
  const double eta = p.get_double("eta", 0.01);
  const double mu0 = p.get_double("mu0", 1.0);
  const double sigma0 = p.get_double("sigma0", 1.0);
  const double gamma1 = p.get_double("gamma1", 0.7);
  const double beta1 = p.get_double("beta1", 0.5);
  const double gamma2 = p.get_double("gamma2", 0.7);
  const double beta2 = p.get_double("beta2", 0.5);
  const std::vector<double> epsilons = p.get_double_list("epsilons", "0.04,0.02,0.01,0.005");
  const std::uint64_t k = p.get_u64("k", 50);
  const std::uint64_t n_reps = p.get_u64("n_reps", 10000);
  const std::uint64_t corr_chains = p.get_u64("corr_chains", 4000);
  const std::uint64_t max_lag = p.get_u64("max_lag", 200);
  const std::uint64_t hierarchy_reps = p.get_u64("hierarchy_reps", 20000);
  const std::string mode_text = p.get_string("mode", "full");
  p.finish();

  if (epsilons.size() < 2)
    throw ConfigError("[implicit_reg] epsilons needs at least two points");
  int mode = MPGD_PRED_FULL;
  if (mode_text == "full") mode = MPGD_PRED_FULL;
  else if (mode_text == "baseline_only") mode = MPGD_PRED_BASELINE_ONLY;
  else if (mode_text == "hierarchy") mode = MPGD_PRED_HIERARCHY;
  else throw ConfigError("[implicit_reg] mode must be full, baseline_only, or hierarchy");

  // dense matrix wins over the diagonal shorthand when both are present
  std::vector<double> a_full;
  std::size_t d = 0;
  if (!a.empty()) {
    d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(a.size()))));
    if (d * d != a.size())
      throw ConfigError("[implicit_reg] a must have d*d entries");
    a_full = a;
  } else {
    d = diag.size();
    if (d == 0) throw ConfigError("[implicit_reg] diag must be nonempty");
    a_full.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) a_full[i * d + i] = diag[i];
  }
  std::vector<double> x0(d, 1.0);
  if (!x0_text.empty()) {
    x0.clear();
    std::istringstream in(x0_text);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      char* end = nullptr;
      const double v = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError("[implicit_reg] x0: not a number: '" + item + "'");
      x0.push_back(v);
    }
    if (x0.size() != d) throw ConfigError("[implicit_reg] x0 length must match d");
  }
  write_resolved(env, p);

  mpgd_loss* loss = nullptr;
  ck(mpgd_loss_quadratic_new(a_full.data(), d, &loss));

  mpgd_order_check_config cfg;
  mpgd_order_check_config_defaults(&cfg);
  cfg.eta = eta;
  cfg.mu0 = mu0;
  cfg.sigma0 = sigma0;
  cfg.gamma1 = gamma1;
  cfg.beta1 = beta1;
  cfg.gamma2 = gamma2;
  cfg.beta2 = beta2;
  cfg.epsilons = epsilons.data();
  cfg.n_epsilons = epsilons.size();
  cfg.k = k;
  cfg.n_reps = n_reps;
  cfg.corr_chains = corr_chains;
  cfg.max_lag = max_lag;
  cfg.hierarchy_reps = hierarchy_reps;
  cfg.mode = mode;
  cfg.n_threads = env.threads;

  mpgd_order_check_result* result = nullptr;
  ck(mpgd_order_check(loss, x0.data(), d, &cfg, env.seed, &result));
  mpgd_loss_free(loss);

  Csv points({"epsilon", "mc_mean", "mc_se", "predicted", "residual", "noise_dominated"});
  for (std::size_t i = 0; i < mpgd_order_point_count(result); ++i) {
    mpgd_order_point pt;
    ck(mpgd_order_point_at(result, i, &pt));
    points.row({fmt(pt.epsilon), fmt(pt.mc_mean), fmt(pt.mc_se), fmt(pt.predicted),
                fmt(pt.residual), pt.noise_dominated ? "1" : "0"});
  }
  write_file(env.out / "points.csv", points.text());

  json j;
  j["params"] = {{"d", d},           {"eta", eta},       {"mu0", mu0},
                 {"sigma0", sigma0}, {"k", k},           {"n_reps", n_reps},
                 {"mode", mode_text}, {"epsilons", epsilons}};
  j["slope"] = mpgd_order_slope(result);
  j["points_used"] = mpgd_order_points_used(result);
  j["inconclusive"] = mpgd_order_inconclusive(result) != 0;
  mpgd_order_result_free(result);
  write_summary(env, std::move(j));
  return kExitOk;
}

/* ------------------------------------------------------------------ */
/* homogenize                                                          */

int cmd_homogenize(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "homogenize", over);
  Params p(doc.find(env.sub), env.sub);
  const double drift_rate = p.get_double("drift_rate", 1.0);
  const std::string kind_text = p.get_string("kind", "additive");
  const double coefficient = p.get_double("coefficient", 1.0);
  const double gamma = p.get_double("gamma", 0.6);
  const double beta = p.get_double("beta", 0.0);
  const double horizon = p.get_double("horizon", 1.0);
  const double x0 = p.get_double("x0", 0.1);
  const std::vector<std::uint64_t> m_list = p.get_u64_list("m_list", "128,512,2048,8192");
  const std::uint64_t n_samples = p.get_u64("n_samples", 5000);
  const double dt = p.get_double("dt", 0.001);
  const std::string reference = p.get_string("reference", "analytic");
  const bool smoke = p.get_bool("smoke", false);
  p.finish();

  int kind = MPGD_DIFF_ADDITIVE;
  if (kind_text == "additive") kind = MPGD_DIFF_ADDITIVE;
  else if (kind_text == "diagonal") kind = MPGD_DIFF_DIAGONAL;
  else throw ConfigError("[homogenize] kind must be additive or diagonal");
  int analytic = 0;
  if (reference == "analytic") analytic = 1;
  else if (reference == "simulated") analytic = 0;
  else throw ConfigError("[homogenize] reference must be analytic or simulated");
  write_resolved(env, p);

  mpgd_sde_config sde{};
  sde.drift_rate = drift_rate;
  sde.kind = kind;
  sde.coefficient = coefficient;
  sde.alpha = 1.0 / gamma;
  sde.beta = beta;
  sde.scale = 1.0;
  sde.dt = dt;
  sde.horizon = horizon;
  sde.x0 = x0;

  if (smoke) {
    // two draws from the same limiting law should be indistinguishable
    std::vector<double> a(n_samples), b(n_samples);
    std::size_t kept_a = 0, div_a = 0, kept_b = 0, div_b = 0;
    ck(mpgd_sde_sample_endpoints(&sde, n_samples, sub_seed(env.seed, 0xa, 0), a.data(),
                                 &kept_a, &div_a));
    ck(mpgd_sde_sample_endpoints(&sde, n_samples, sub_seed(env.seed, 0xb, 0), b.data(),
                                 &kept_b, &div_b));
    double ksd = 0.0;
    ck(mpgd_ks_two_sample(a.data(), kept_a, b.data(), kept_b, &ksd));
    Csv endpoints({"sample_a", "sample_b"});
    for (std::size_t i = 0; i < std::min(kept_a, kept_b); ++i)
      endpoints.row({fmt(a[i]), fmt(b[i])});
    write_file(env.out / "endpoints.csv", endpoints.text());
    json j;
    j["params"] = {{"drift_rate", drift_rate}, {"kind", kind_text},
                   {"coefficient", coefficient}, {"gamma", gamma},
                   {"beta", beta},             {"horizon", horizon},
                   {"dt", dt},                 {"n_samples", n_samples},
                   {"mode", "smoke"}};
    j["smoke_ks"] = ksd;
    j["divergences"] = div_a + div_b;
    write_summary(env, std::move(j));
    return (div_a + div_b) ? kExitDiverged : kExitOk;
  }

  mpgd_fast_slow_config fsc{};
  fsc.drift_rate = drift_rate;
  fsc.kind = kind;
  fsc.coefficient = coefficient;
  fsc.gamma = gamma;
  fsc.beta = beta;
  fsc.horizon = horizon;
  fsc.x0 = x0;

  mpgd_convergence_report* report = nullptr;
  ck(mpgd_weak_convergence(&fsc, m_list.data(), m_list.size(), &sde, n_samples,
                           analytic, env.threads, env.seed, &report));

  Csv conv({"m", "ks", "n_effective", "divergence_count"});
  std::size_t total_div = 0;
  for (std::size_t i = 0; i < mpgd_convergence_row_count(report); ++i) {
    mpgd_convergence_row row;
    ck(mpgd_convergence_row_at(report, i, &row));
    conv.row({fmt_u64(row.m), fmt(row.ks), fmt_u64(row.n_effective),
              fmt_u64(row.divergence_count)});
    total_div += row.divergence_count;
  }
  write_file(env.out / "convergence.csv", conv.text());

  json j;
  j["params"] = {{"drift_rate", drift_rate}, {"kind", kind_text},
                 {"coefficient", coefficient}, {"gamma", gamma},
                 {"beta", beta},             {"horizon", horizon},
                 {"dt", dt},                 {"n_samples", n_samples},
                 {"m_list", m_list},         {"reference", reference}};
  j["largest_m_ks"] = mpgd_convergence_largest_m_ks(report);
  j["spearman"] = mpgd_convergence_spearman(report);
  j["has_trend"] = mpgd_convergence_has_trend(report) != 0;
  j["ref_n_effective"] = mpgd_convergence_ref_effective(report);
  const std::size_t ref_div = mpgd_convergence_ref_divergences(report);
  j["ref_divergences"] = ref_div;
  j["divergences"] = total_div;
  mpgd_convergence_report_free(report);
  write_summary(env, std::move(j));
  return (total_div + ref_div) ? kExitDiverged : kExitOk;
}

/* ------------------------------------------------------------------ */
/* stable_check                                                        */

int cmd_stable_check(const ConfigDoc& doc, const Overrides& over) {
  RunEnv env = prepare_env(doc, "stable_check", over);
  Params p(doc.find(env.sub), env.sub);
  const double alpha = p.get_double("alpha", 1.5);
  const double beta = p.get_double("beta", 0.5);
  const double scale = p.get_double("scale", 1.0);
  const std::uint64_t n = p.get_u64("n", 100000);
  const double tail_fraction = p.get_double("tail_fraction", 0.01);
  const double trim = p.get_double("trim", 0.01);
  const bool write_samples = p.get_bool("write_samples", false);
  p.finish();
  if (n == 0) throw ConfigError("[stable_check] n must be positive");
  if (trim < 0.0 || trim >= 0.5)
    throw ConfigError("[stable_check] trim must lie in [0, 0.5)");
  write_resolved(env, p);

  std::vector<double> xs(n);
  ck(mpgd_stable_sample(alpha, beta, scale, env.seed, xs.size(), xs.data()));

  double ecf = 0.0, alpha_hat = 0.0;
  ck(mpgd_ecf_distance(xs.data(), xs.size(), alpha, beta, scale, &ecf));
  ck(mpgd_hill_estimator(xs.data(), xs.size(), tail_fraction, MPGD_TAIL_ABSOLUTE,
                         &alpha_hat));

  // empirical characteristic function against the target law on a fixed grid
  Csv curve({"t", "ecf_re", "ecf_im", "target_re", "target_im", "abs_diff"});
  const double skew_factor = std::tan(3.14159265358979323846 * alpha / 2.0);
  for (int i = -40; i <= 40; ++i) {
    const double t = i * 0.05;
    double re = 0.0, im = 0.0;
    for (double x : xs) {
      re += std::cos(t * x);
      im += std::sin(t * x);
    }
    re /= static_cast<double>(n);
    im /= static_cast<double>(n);
    const double at = std::abs(scale * t);
    const double mag = std::exp(-std::pow(at, alpha));
    const double sign_t = t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
    const double phase = std::pow(at, alpha) * beta * sign_t * skew_factor;
    const double tre = mag * std::cos(phase);
    const double tim = mag * std::sin(phase);
    curve.row({fmt(t), fmt(re), fmt(im), fmt(tre), fmt(tim),
               fmt(std::hypot(re - tre, im - tim))});
  }
  write_file(env.out / "ecf_curve.csv", curve.text());

  // trimmed third moment keeps the skew direction visible despite heavy tails
  std::vector<double> by_mag = xs;
  std::sort(by_mag.begin(), by_mag.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  const std::size_t kept = n - static_cast<std::size_t>(trim * static_cast<double>(n));
  double third = 0.0;
  for (std::size_t i = 0; i < kept; ++i) third += by_mag[i] * by_mag[i] * by_mag[i];
  third /= static_cast<double>(kept);

  json j;
  j["params"] = {{"alpha", alpha}, {"beta", beta}, {"scale", scale},
                 {"n", n},         {"tail_fraction", tail_fraction}, {"trim", trim}};
  j["ecf_distance"] = ecf;
  j["hill_alpha"] = alpha_hat;
  j["skew_proxy"] = third;
  j["skew_sign"] = third > 0 ? 1 : (third < 0 ? -1 : 0);
  if (alpha == 2.0) {
    // the sampler degenerates to a Gaussian; check the whole distribution
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      double cdf = 0.0;
      ck(mpgd_stable_cdf_symmetric(sorted[i], 2.0, scale, &cdf));
      const double lo = static_cast<double>(i) / static_cast<double>(n);
      const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
      ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    j["gaussian_ks"] = ks;
  } else {
    j["gaussian_ks"] = nullptr;
  }

  if (write_samples) {
    Csv samples({"index", "x"});
    for (std::size_t i = 0; i < xs.size(); ++i) samples.row({fmt_u64(i), fmt(xs[i])});
    write_file(env.out / "samples.csv", samples.text());
  }
  write_summary(env, std::move(j));
  return kExitOk;
}

}  // namespace

/* ------------------------------------------------------------------ */

int main(int argc, char** argv) {
  CLI::App app{"chaotic-perturbation optimization experiments\n"
               "output root: --out, or [run] out, or $MPGD_OUT_ROOT/<subcommand>, "
               "or ./runs/<subcommand>"};
  app.require_subcommand(1);

  struct SubDef {
    const char* name;
    const char* help;
    int (*fn)(const ConfigDoc&, const Overrides&);
  };
  const SubDef defs[] = {
      {"chaos_sample", "chain realization, scaled sums, tail and law diagnostics",
       cmd_chaos_sample},
      {"widening_valley", "flat-minimum search on the valley loss, three schemes",
       cmd_widening_valley},
      {"airfoil", "shallow network regression comparison across schemes", cmd_airfoil},
      {"implicit_reg", "second-order expansion residual slopes on a quadratic",
       cmd_implicit_reg},
      {"homogenize", "fast-slow endpoint law against the limiting jump diffusion",
       cmd_homogenize},
      {"stable_check", "heavy-tailed sampler self-consistency report", cmd_stable_check},
  };

  Overrides over;
  std::uint64_t seed_flag = 0;
  int threads_flag = 0;
  for (const SubDef& def : defs) {
    CLI::App* sub = app.add_subcommand(def.name, def.help);
    sub->add_option("--config", over.config_path, "config file (sectioned key = value)");
    sub->add_option("--seed", seed_flag, "master seed (overrides [run] seed)");
    sub->add_option("--out", over.out, "output directory (overrides [run] out)");
    sub->add_option("--threads", threads_flag, "worker threads (overrides [run] threads)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) over.seed = seed_flag;
    if (sub->count("--threads")) over.threads = threads_flag;
  }

  try {
    ConfigDoc doc;
    if (!over.config_path.empty()) doc = load_config(over.config_path);
    for (const SubDef& def : defs)
      if (app.got_subcommand(def.name)) return def.fn(doc, over);
    std::fprintf(stderr, "no subcommand selected\n");
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
