#include "covert/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "covert/covertness.hpp"
#include "covert/errors.hpp"
#include "covert/metrology.hpp"
#include "covert/simulation.hpp"

#ifndef COVERT_SENSE_VERSION
#define COVERT_SENSE_VERSION "0.0.0"
#endif

namespace covert::cli {

namespace {

using nlohmann::json;

ParamSpec real(std::string key, std::optional<std::string> def, std::string help,
               bool required = false) {
  return {std::move(key), ParamType::real, std::move(def), required, {}, std::move(help)};
}

ParamSpec integer(std::string key, std::optional<std::string> def, std::string help,
                  bool required = false) {
  return {std::move(key), ParamType::integer, std::move(def), required, {}, std::move(help)};
}

ParamSpec choice(std::string key, std::vector<std::string> options, std::string help,
                 bool required = false) {
  std::optional<std::string> def;
  if (!required) def = options.front();
  return {std::move(key), ParamType::choice, std::move(def), required, std::move(options),
          std::move(help)};
}

std::vector<ParamSpec> channel_params() {
  return {real("eta", std::nullopt, "channel transmissivity in (0,1)", true),
          real("nbar_b", std::nullopt, "thermal background mean photon number", true)};
}

std::vector<ParamSpec> with_channel(std::vector<ParamSpec> specific) {
  std::vector<ParamSpec> all = channel_params();
  all.insert(all.end(), specific.begin(), specific.end());
  return all;
}

const ParamSpec kModulation = choice("modulation", {"fixed-amplitude", "gaussian-modulated"},
                                     "probe amplitude model");
const ParamSpec kSampling = choice("sampling", {"sufficient-statistic", "per-mode"},
                                   "how per-trial readouts are drawn");
const ParamSpec kThreads = integer("threads", "0", "worker threads (0 = all cores)");

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Full-precision scientific notation used for CSV cells.
std::string format_cell_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::optional<double> parse_real(std::string_view text) {
  const std::string s(text);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> parse_integer(std::string_view text) {
  const std::string s(text);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() + s.size() && errno == 0) return v;
  // Scientific shorthand such as 1e5.
  const auto r = parse_real(text);
  if (!r || *r != std::floor(*r) || std::abs(*r) > 9.0e18) return std::nullopt;
  return static_cast<long long>(*r);
}

std::optional<std::uint64_t> parse_seed(std::string_view text) {
  const std::string s(text);
  if (s.empty() || s.front() == '-') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() + s.size() && errno == 0) return v;
  const auto r = parse_real(text);
  if (!r || *r < 0.0 || *r != std::floor(*r) || *r >= 1.8e19) return std::nullopt;
  return static_cast<std::uint64_t>(*r);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    parts.emplace_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

const ParamSpec* find_spec(Command command, std::string_view key) {
  for (const ParamSpec& p : command_schema(command)) {
    if (p.key == key) return &p;
  }
  return nullptr;
}

// Typed access to a canonical config.
class Params {
 public:
  explicit Params(const RunConfig& config) : config_(config) {}

  bool has(const std::string& key) const { return config_.params.count(key) > 0; }

  double real(const std::string& key) const { return *parse_real(at(key)); }
  std::optional<double> opt_real(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return real(key);
  }
  long long integer(const std::string& key) const { return *parse_integer(at(key)); }
  std::optional<long long> opt_integer(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return integer(key);
  }
  std::vector<long long> integer_list(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& part : split_list(at(key))) out.push_back(*parse_integer(part));
    return out;
  }
  const std::string& text(const std::string& key) const { return at(key); }

  gaussian::ChannelParams channel() const {
    return gaussian::ChannelParams(real("eta"), real("nbar_b"));
  }

 private:
  const std::string& at(const std::string& key) const {
    const auto it = config_.params.find(key);
    if (it == config_.params.end()) throw InvalidArgument("missing parameter " + key);
    return it->second;
  }

  const RunConfig& config_;
};

// nbar_s given directly, or the covert budget for epsilon.
double signal_level(const Params& p, long long n) {
  if (p.has("nbar_s")) return p.real("nbar_s");
  return covertness::covert_budget(p.real("epsilon"), n, p.channel()).nbar_s;
}

sim::Modulation modulation_of(const Params& p) {
  return p.text("modulation") == "gaussian-modulated" ? sim::Modulation::gaussian_modulated
                                                      : sim::Modulation::fixed_amplitude;
}

sim::SamplingPath sampling_of(const Params& p) {
  return p.text("sampling") == "per-mode" ? sim::SamplingPath::per_mode
                                          : sim::SamplingPath::sufficient_statistic;
}

unsigned threads_of(const Params& p) { return static_cast<unsigned>(p.integer("threads")); }

Table compute_qfi(const Params& p) {
  const auto kind = p.text("probe") == "tmsv" ? metrology::ProbeKind::tmsv
                                               : metrology::ProbeKind::coherent;
  const auto order = p.text("order") == "channel-then-phase"
                         ? metrology::ProbeOrder::channel_then_phase
                         : metrology::ProbeOrder::phase_then_channel;
  const double nbar_s = p.real("nbar_s");
  const metrology::ProbeFamily family(kind, nbar_s, p.channel(), order);
  std::optional<metrology::MomentSpec> moments;
  const auto n = p.opt_integer("n");
  if (n && p.has("var_n_s")) {
    metrology::MomentSpec spec;
    spec.n = *n;
    spec.n_s_total = static_cast<double>(*n) * nbar_s;
    spec.var_n_s = p.real("var_n_s");
    moments = spec;
  }
  const metrology::QfiReport report =
      metrology::qfi_report(family, p.real("theta"), p.real("step"), moments);

  Table t;
  t.columns = {"probe", "nbar_s", "j_numeric", "j_closed"};
  std::vector<Cell> row = {p.text("probe"), nbar_s, report.j_numeric,
                           report.j_closed.value_or(std::nan(""))};
  if (n) {
    t.columns.push_back("mse_lower_bound");
    row.emplace_back(report.mse_lower_bound(*n));
  }
  if (report.c_q_bound) {
    t.columns.push_back("c_q_bound");
    row.emplace_back(*report.c_q_bound);
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table compute_bounds(const Params& p) {
  const auto ch = p.channel();
  const auto c = metrology::covert_constants(ch);
  Table t;
  t.columns = {"eta", "nbar_b", "c_het", "c_coh", "c_sq", "c_lb"};
  std::vector<Cell> row = {ch.eta(), ch.nbar_b(), c.c_het, c.c_coh, c.c_sq, c.c_lb};
  if (p.has("epsilon") && p.has("n")) {
    const double eps = p.real("epsilon");
    const long long n = p.integer("n");
    const double ns = covertness::covert_budget(eps, n, ch).nbar_s;
    const double scale = eps * std::sqrt(static_cast<double>(n));
    for (const char* col : {"n", "epsilon", "nbar_s", "mse_het", "mse_coh", "mse_sq", "mse_lb",
                            "c_sq_exact", "c_lb_exact"}) {
      t.columns.emplace_back(col);
    }
    row.insert(row.end(), {Cell{n}, Cell{eps}, Cell{ns}, Cell{c.c_het / scale},
                           Cell{c.c_coh / scale}, Cell{c.c_sq / scale}, Cell{c.c_lb / scale},
                           Cell{metrology::c_sq_exact(ns, eps, n, ch)},
                           Cell{metrology::c_lb_exact(ns, eps, n, ch)}});
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table compute_budget(const Params& p) {
  const auto ch = p.channel();
  const double eps = p.real("epsilon");
  const long long n = p.integer("n");
  const auto b = covertness::covert_budget(eps, n, ch);
  Table t;
  t.columns = {"epsilon", "n", "nbar_s", "n_s_total", "pe_bound", "qre_total", "pinsker_bound"};
  t.rows.push_back({eps, n, b.nbar_s, b.nbar_s * static_cast<double>(n),
                    covertness::detection_error_lower_bound(b.nbar_s, n, ch),
                    static_cast<double>(n) * covertness::qre_thermal(b.nbar_s, ch),
                    covertness::pinsker_bound(b.nbar_s, n, ch)});
  return t;
}

Table compute_estimation(const Params& p, std::uint64_t seed) {
  const long long n = p.integer("n");
  sim::EstimationConfig cfg;
  cfg.theta_true = p.real("theta");
  cfg.n = n;
  cfg.channel = p.channel();
  cfg.nbar_s = signal_level(p, n);
  cfg.trials = p.integer("trials");
  cfg.seed = seed;
  cfg.modulation = modulation_of(p);
  cfg.sampling = sampling_of(p);
  cfg.epsilon = p.opt_real("epsilon");
  cfg.threads = threads_of(p);
  const auto r = sim::simulate_estimation(cfg);
  Table t;
  t.columns = {"n", "nbar_s", "trials", "mse", "mse_stderr", "sigma2_het", "mse_over_sigma2"};
  std::vector<Cell> row = {n, cfg.nbar_s, r.trials_used, r.mse, r.mse_stderr,
                           r.sigma2_het_predicted, r.mse / r.sigma2_het_predicted};
  if (r.c_het_over_eps_sqrt_n) {
    t.columns.push_back("c_het_over_eps_sqrt_n");
    row.emplace_back(*r.c_het_over_eps_sqrt_n);
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table compute_adversary(const Params& p, std::uint64_t seed) {
  const auto ch = p.channel();
  const long long n = p.integer("n");
  const double ns = signal_level(p, n);
  const auto convention = p.text("variance_convention") == "bose-einstein"
                              ? covertness::VarianceConvention::bose_einstein
                              : covertness::VarianceConvention::as_printed;
  const double gamma = p.has("gamma") ? p.real("gamma") : 1.0 - ch.eta();
  const covertness::AdversaryModel adv(gamma, p.real("lambda"), convention);
  metrology::MomentSpec spec;
  spec.n = n;
  spec.n_s_total = static_cast<double>(n) * ns;
  spec.var_n_s = p.has("var_n_s") ? p.real("var_n_s") : spec.n_s_total;
  const auto bounds = covertness::chebyshev_detector(n, spec, adv, ch, p.real("p_fa_target"));
  const double threshold = p.has("threshold") ? p.real("threshold") : bounds.threshold_s;
  const auto r = sim::simulate_detection(n, ns, adv, ch, threshold, p.integer("trials"), seed,
                                         threads_of(p));
  Table t;
  t.columns = {"n",          "nbar_s",     "threshold_s",  "p_fa_hat",   "p_md_hat",
               "p_e_hat",    "wilson_halfwidth", "p_fa_bound", "p_md_bound", "p_e_lower",
               "h0_count_mean", "h0_count_var"};
  t.rows.push_back({n, ns, threshold, r.p_fa_hat, r.p_md_hat, r.p_e_hat, r.wilson_halfwidth,
                    bounds.p_fa_bound, bounds.p_md_bound, bounds.p_e_lower, r.h0.count_mean,
                    r.h0.count_var});
  return t;
}

Table compute_exact_pe(const Params& p) {
  const auto ch = p.channel();
  const long long n = p.integer("n");
  const double ns = signal_level(p, n);
  Table t;
  t.columns = {"n", "nbar_s", "pe_exact", "pe_bound", "pinsker_bound"};
  t.rows.push_back({n, ns, sim::exact_discrimination_error(n, ns, ch, p.real("tail_tol")),
                    covertness::detection_error_lower_bound(ns, n, ch),
                    covertness::pinsker_bound(ns, n, ch)});
  return t;
}

Table compute_sweep(const Params& p, std::uint64_t seed) {
  sim::SweepOptions opt;
  opt.theta_true = p.real("theta");
  opt.modulation = modulation_of(p);
  opt.sampling = sampling_of(p);
  opt.tail_tol = p.real("tail_tol");
  opt.threads = threads_of(p);
  const auto rows = sim::sweep_scaling(p.integer_list("n"), p.real("epsilon"), p.channel(),
                                       p.integer("trials"), seed, opt);
  Table t;
  t.columns = {"n", "nbar_s", "mse", "mse_eps_sqrtn", "c_het", "pe_exact", "pe_bound"};
  for (const auto& r : rows) {
    t.rows.push_back({r.n, r.nbar_s, r.mse, r.mse_eps_sqrtn, r.c_het, r.pe_exact, r.pe_bound});
  }
  return t;
}

json param_to_json(const ParamSpec& spec, const std::string& value) {
  switch (spec.type) {
    case ParamType::real:
      return *parse_real(value);
    case ParamType::integer:
      return *parse_integer(value);
    case ParamType::integer_list: {
      json arr = json::array();
      for (const auto& part : split_list(value)) arr.push_back(*parse_integer(part));
      return arr;
    }
    case ParamType::choice:
      break;
  }
  return value;
}

std::string param_from_json(const ParamSpec& spec, const json& value) {
  if (value.is_string()) return canonicalize(spec, value.get<std::string>());
  if (spec.type == ParamType::integer_list && value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!joined.empty()) joined += ',';
      joined += item.dump();
    }
    return canonicalize(spec, joined);
  }
  if (value.is_number()) {
    if (value.is_number_float()) return canonicalize(spec, format_real(value.get<double>()));
    return canonicalize(spec, value.dump());
  }
  throw InvalidArgument("parameter " + spec.key + " has an unsupported JSON type");
}

json cell_to_json(const Cell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) return *i;
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  const double d = std::get<double>(cell);
  if (!std::isfinite(d)) return nullptr;
  return d;
}

std::string cell_to_csv(const Cell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return format_cell_real(std::get<double>(cell));
}

std::string format_name(Format f) { return f == Format::csv ? "csv" : "json"; }

std::optional<Format> parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  return std::nullopt;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view tool_version() { return COVERT_SENSE_VERSION; }

std::string_view command_name(Command command) {
  switch (command) {
    case Command::qfi: return "qfi";
    case Command::bounds: return "bounds";
    case Command::budget: return "budget";
    case Command::simulate_estimation: return "simulate-estimation";
    case Command::simulate_adversary: return "simulate-adversary";
    case Command::exact_pe: return "exact-pe";
    case Command::sweep: return "sweep";
  }
  return "";
}

const std::vector<Command>& all_commands() {
  static const std::vector<Command> commands = {
      Command::qfi,          Command::bounds,   Command::budget, Command::simulate_estimation,
      Command::simulate_adversary, Command::exact_pe, Command::sweep};
  return commands;
}

std::optional<Command> parse_command(std::string_view name) {
  for (Command c : all_commands()) {
    if (command_name(c) == name) return c;
  }
  return std::nullopt;
}

Format default_format(Command command) {
  return command == Command::sweep ? Format::csv : Format::json;
}

const std::vector<ParamSpec>& command_schema(Command command) {
  static const std::map<Command, std::vector<ParamSpec>> schemas = {
      {Command::qfi,
       with_channel({choice("probe", {"coherent", "tmsv"}, "probe state", true),
                     real("nbar_s", std::nullopt, "probe mean photon number", true),
                     real("theta", "0", "phase at which the QFI is evaluated"),
                     real("step", format_real(metrology::kDefaultQfiStep),
                          "finite-difference step"),
                     choice("order", {"phase-then-channel", "channel-then-phase"},
                            "order of phase shift and channel"),
                     integer("n", std::nullopt, "mode count for the Cramer-Rao bound"),
                     real("var_n_s", std::nullopt,
                          "total photon-number variance for the QFI upper bound (needs n)")})},
      {Command::bounds,
       with_channel({real("epsilon", std::nullopt, "covertness parameter in (0,1/2)"),
                     integer("n", std::nullopt, "mode count")})},
      {Command::budget,
       with_channel({real("epsilon", std::nullopt, "covertness parameter in (0,1/2)", true),
                     integer("n", std::nullopt, "mode count", true)})},
      {Command::simulate_estimation,
       with_channel({integer("n", std::nullopt, "mode count", true),
                     real("nbar_s", std::nullopt, "per-mode probe photons (default: budget)"),
                     real("epsilon", std::nullopt, "covertness parameter in (0,1/2)"),
                     real("theta", "0.5", "true phase in (-pi/2, pi/2)"),
                     integer("trials", "10000", "Monte Carlo trials"), kModulation, kSampling,
                     kThreads})},
      {Command::simulate_adversary,
       with_channel({integer("n", std::nullopt, "mode count", true),
                     real("nbar_s", std::nullopt, "per-mode probe photons (default: budget)"),
                     real("epsilon", std::nullopt, "covertness parameter in (0,1/2)"),
                     real("gamma", std::nullopt, "captured fraction (default 1 - eta)"),
                     real("lambda", "0", "dark counts per mode"),
                     choice("variance_convention", {"as-printed", "bose-einstein"},
                            "per-mode thermal variance for the Chebyshev bounds"),
                     real("p_fa_target", "0.1", "target false-alarm probability"),
                     real("threshold", std::nullopt, "count threshold (default: Chebyshev)"),
                     real("var_n_s", std::nullopt,
                          "total probe photon variance (default: Poisson)"),
                     integer("trials", "10000", "Monte Carlo trials per hypothesis"),
                     kThreads})},
      {Command::exact_pe,
       with_channel({integer("n", std::nullopt, "mode count", true),
                     real("nbar_s", std::nullopt, "per-mode probe photons (default: budget)"),
                     real("epsilon", std::nullopt, "covertness parameter in (0,1/2)"),
                     real("tail_tol", format_real(sim::kDefaultTailTol),
                          "truncated tail mass")})},
      {Command::sweep,
       with_channel({{"n", ParamType::integer_list, std::nullopt, true, {},
                      "ascending comma-separated mode counts"},
                     real("epsilon", std::nullopt, "covertness parameter in (0,1/2)", true),
                     real("theta", "0.5", "true phase in (-pi/2, pi/2)"),
                     integer("trials", "10000", "Monte Carlo trials per row"), kModulation,
                     kSampling,
                     real("tail_tol", format_real(sim::kDefaultTailTol),
                          "truncated tail mass"),
                     kThreads})},
  };
  return schemas.at(command);
}

std::string canonicalize(const ParamSpec& spec, std::string_view raw) {
  const auto fail = [&](const char* what) {
    return InvalidArgument("parameter " + spec.key + ": '" + std::string(raw) + "' is not " +
                           what);
  };
  switch (spec.type) {
    case ParamType::real: {
      const auto v = parse_real(raw);
      if (!v) throw fail("a finite real number");
      return format_real(*v);
    }
    case ParamType::integer: {
      const auto v = parse_integer(raw);
      if (!v) throw fail("an integer");
      return std::to_string(*v);
    }
    case ParamType::integer_list: {
      std::string out;
      for (const auto& part : split_list(raw)) {
        const auto v = parse_integer(part);
        if (!v) throw fail("a comma-separated list of integers");
        if (!out.empty()) out += ',';
        out += std::to_string(*v);
      }
      return out;
    }
    case ParamType::choice: {
      if (std::find(spec.choices.begin(), spec.choices.end(), raw) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw fail(("one of " + allowed).c_str());
      }
      return std::string(raw);
    }
  }
  return std::string(raw);
}

RunConfig make_config(Command command, const std::map<std::string, std::string>& raw,
                      std::optional<Format> format, std::string output_path,
                      std::uint64_t seed) {
  RunConfig cfg;
  cfg.command = command;
  cfg.format = format.value_or(default_format(command));
  cfg.output_path = std::move(output_path);
  cfg.seed = seed;
  for (const auto& [key, value] : raw) {
    const ParamSpec* spec = find_spec(command, key);
    if (!spec) {
      throw InvalidArgument("unknown parameter '" + key + "' for command " +
                            std::string(command_name(command)));
    }
    cfg.params[key] = canonicalize(*spec, value);
  }
  for (const ParamSpec& spec : command_schema(command)) {
    if (!cfg.params.count(spec.key) && spec.default_value) {
      cfg.params[spec.key] = canonicalize(spec, *spec.default_value);
    }
  }
  return cfg;
}

std::vector<std::string> validate(const RunConfig& config) {
  std::vector<std::string> diag;
  const Command cmd = config.command;
  for (const auto& [key, value] : config.params) {
    const ParamSpec* spec = find_spec(cmd, key);
    if (!spec) {
      diag.push_back("unknown parameter '" + key + "' for command " +
                     std::string(command_name(cmd)));
      continue;
    }
    try {
      canonicalize(*spec, value);
    } catch (const InvalidArgument& e) {
      diag.emplace_back(e.what());
    }
  }
  for (const ParamSpec& spec : command_schema(cmd)) {
    if (spec.required && !config.params.count(spec.key)) {
      diag.push_back("missing required parameter --" + kebab(spec.key));
    }
  }
  if (!diag.empty()) return diag;

  const Params p(config);
  const auto eta = p.opt_real("eta");
  if (eta && !(*eta > 0.0 && *eta < 1.0)) diag.emplace_back("eta must lie strictly inside (0,1)");
  const auto nb = p.opt_real("nbar_b");
  if (nb && !(*nb > 0.0)) {
    diag.emplace_back(
        "nbar_b must be positive: the covert budget and the detection-error bound divide by "
        "sqrt(eta nbar_b (1 + eta nbar_b)), which vanishes at nbar_b = 0, so the budget "
        "formula diverges");
  }
  const auto eps = p.opt_real("epsilon");
  if (eps && !(*eps > 0.0 && *eps < 0.5)) {
    diag.emplace_back("epsilon must lie strictly inside (0,1/2)");
  }
  if (const auto trials = p.opt_integer("trials"); trials && *trials < 1) {
    diag.emplace_back("trials must be a positive integer");
  }
  if (const auto threads = p.opt_integer("threads"); threads && *threads < 0) {
    diag.emplace_back("threads must be nonnegative");
  }
  if (p.has("n")) {
    if (cmd == Command::sweep) {
      const auto list = p.integer_list("n");
      if (std::any_of(list.begin(), list.end(), [](long long v) { return v < 1; })) {
        diag.emplace_back("every n must be a positive integer");
      }
      if (!std::is_sorted(list.begin(), list.end())) {
        diag.emplace_back("sweep n values must be ascending");
      }
    } else if (p.integer("n") < 1) {
      diag.emplace_back("n must be a positive integer");
    } else if (cmd == Command::exact_pe && p.integer("n") > sim::kMaxExactModes) {
      diag.emplace_back("exact-pe supports n up to 1000000");
    }
  }
  if (const auto ns = p.opt_real("nbar_s")) {
    if (cmd == Command::simulate_estimation ? !(*ns > 0.0) : !(*ns >= 0.0)) {
      diag.emplace_back(cmd == Command::simulate_estimation ? "nbar_s must be positive"
                                                            : "nbar_s must be nonnegative");
    }
  }
  if (cmd == Command::simulate_estimation || cmd == Command::simulate_adversary ||
      cmd == Command::exact_pe) {
    if (!p.has("nbar_s") && !p.has("epsilon")) {
      diag.emplace_back("give --nbar-s or --epsilon to set the probe level");
    }
  }
  if (const auto theta = p.opt_real("theta");
      theta && cmd != Command::qfi &&
      !(*theta > -std::numbers::pi / 2 && *theta < std::numbers::pi / 2)) {
    diag.emplace_back("theta must lie in (-pi/2, pi/2)");
  }
  if (const auto step = p.opt_real("step"); step && !(*step > 0.0)) {
    diag.emplace_back("step must be positive");
  }
  if (cmd == Command::qfi && p.has("var_n_s") && !p.has("n")) {
    diag.emplace_back("var_n_s needs n");
  }
  if (const auto v = p.opt_real("var_n_s"); v && *v < 0.0) {
    diag.emplace_back("var_n_s must be nonnegative");
  }
  if (const auto gamma = p.opt_real("gamma")) {
    if (!(*gamma > 0.0 && *gamma <= 1.0)) {
      diag.emplace_back("gamma must lie in (0,1]");
    } else if (eta && *gamma > (1.0 - *eta) * (1.0 + 1e-15)) {
      diag.emplace_back("gamma must not exceed 1 - eta");
    }
  }
  if (const auto lambda = p.opt_real("lambda"); lambda && *lambda < 0.0) {
    diag.emplace_back("lambda must be nonnegative");
  }
  if (const auto pfa = p.opt_real("p_fa_target"); pfa && !(*pfa > 0.0 && *pfa < 1.0)) {
    diag.emplace_back("p_fa_target must lie in (0,1)");
  }
  if (const auto tol = p.opt_real("tail_tol"); tol && !(*tol > 0.0 && *tol < 1.0)) {
    diag.emplace_back("tail_tol must lie in (0,1)");
  }
  if (cmd == Command::bounds && p.has("epsilon") != p.has("n")) {
    diag.emplace_back("bounds needs both --epsilon and --n, or neither");
  }
  return diag;
}

std::string config_to_json(const RunConfig& config) {
  json params = json::object();
  for (const auto& [key, value] : config.params) {
    const ParamSpec* spec = find_spec(config.command, key);
    params[key] = spec ? param_to_json(*spec, value) : json(value);
  }
  json doc = {{"command", command_name(config.command)},
              {"format", format_name(config.format)},
              {"output", config.output_path},
              {"seed", config.seed},
              {"params", params}};
  return doc.dump();
}

RunConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "command" && key != "format" && key != "output" && key != "seed" &&
        key != "params") {
      throw InvalidArgument("unknown config key '" + key + "'");
    }
  }
  if (!doc.contains("command") || !doc["command"].is_string()) {
    throw InvalidArgument("config needs a command");
  }
  const auto command = parse_command(doc["command"].get<std::string>());
  if (!command) throw InvalidArgument("unknown command " + doc["command"].dump());

  std::optional<Format> format;
  if (doc.contains("format")) {
    if (!doc["format"].is_string() || !(format = parse_format(doc["format"].get<std::string>()))) {
      throw InvalidArgument("format must be csv or json");
    }
  }
  std::string output = "-";
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw InvalidArgument("output must be a string");
    output = doc["output"].get<std::string>();
  }
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw InvalidArgument("seed must be a nonnegative integer");
    }
    if (doc["seed"].is_number_integer() && doc["seed"].get<long long>() < 0) {
      throw InvalidArgument("seed must be a nonnegative integer");
    }
    seed = doc["seed"].get<std::uint64_t>();
  }
  std::map<std::string, std::string> raw;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw InvalidArgument("params must be an object");
    for (const auto& [key, value] : doc["params"].items()) {
      const ParamSpec* spec = find_spec(*command, key);
      if (!spec) {
        throw InvalidArgument("unknown parameter '" + key + "' for command " +
                              std::string(command_name(*command)));
      }
      raw[key] = param_from_json(*spec, value);
    }
  }
  return make_config(*command, raw, format, output, seed);
}

RunConfig config_from_artifact(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos < text.size() && text[pos] == '{') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("artifact is not valid JSON: ") + e.what());
    }
    if (doc.contains("schema") && doc.contains("config")) {
      if (doc["schema"] != kSchemaVersion) throw InvalidArgument("unsupported schema version");
      return config_from_json(doc["config"].dump());
    }
    return config_from_json(text);
  }
  constexpr std::string_view kPrefix = "# config=";
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    if (line.substr(0, kPrefix.size()) == kPrefix) {
      return config_from_json(line.substr(kPrefix.size()));
    }
    start = end + 1;
  }
  throw InvalidArgument("no embedded config found");
}

Table compute(const RunConfig& config) {
  const Params p(config);
  switch (config.command) {
    case Command::qfi: return compute_qfi(p);
    case Command::bounds: return compute_bounds(p);
    case Command::budget: return compute_budget(p);
    case Command::simulate_estimation: return compute_estimation(p, config.seed);
    case Command::simulate_adversary: return compute_adversary(p, config.seed);
    case Command::exact_pe: return compute_exact_pe(p);
    case Command::sweep: return compute_sweep(p, config.seed);
  }
  throw InvalidArgument("unknown command");
}

std::string render(const RunConfig& config, const Table& table) {
  if (config.format == Format::json) {
    using ordered = nlohmann::ordered_json;
    ordered rows = ordered::array();
    for (const auto& r : table.rows) {
      ordered obj = ordered::object();
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        obj[table.columns[i]] = cell_to_json(r[i]);
      }
      rows.push_back(obj);
    }
    ordered doc = ordered::object();
    doc["schema"] = kSchemaVersion;
    doc["tool"] = kToolName;
    doc["version"] = tool_version();
    doc["seed"] = config.seed;
    doc["config"] = json::parse(config_to_json(config));
    doc["columns"] = table.columns;
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "# schema=" << kSchemaVersion << "\n";
  out << "# tool=" << kToolName << " " << tool_version() << "\n";
  out << "# seed=" << config.seed << "\n";
  out << "# config=" << config_to_json(config) << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << "\n";
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell_to_csv(r[i]);
    out << "\n";
  }
  return out.str();
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto diag = validate(config);
  if (!diag.empty()) {
    for (const auto& d : diag) err << "error: " << d << "\n";
    return 2;
  }
  std::string text;
  try {
    text = render(config, compute(config));
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  if (config.output_path == "-") {
    out << text;
    out.flush();
    return out ? 0 : 4;
  }
  std::ofstream file(config.output_path, std::ios::binary | std::ios::trunc);
  if (!file || !(file << text) || !file.flush()) {
    err << "error: cannot write " << config.output_path << "\n";
    return 4;
  }
  return 0;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covert phase sensing over lossy thermal channels", "covert_sense"};
  app.require_subcommand(0, 1);
  std::string config_file;
  app.add_option("--config", config_file,
                 "rerun the config embedded in an output file or a config JSON file");
  bool show_version = false;
  app.add_flag("--version", show_version, "print the tool version");

  struct Sub {
    Command command;
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string format;
    std::string output = "-";
    std::string seed = "0";
  };
  std::vector<Sub> subs;
  subs.reserve(all_commands().size());
  for (Command c : all_commands()) {
    subs.push_back({c, nullptr, {}, {}, "", "-", "0"});
    Sub& s = subs.back();
    s.app = app.add_subcommand(std::string(command_name(c)));
    for (const ParamSpec& spec : command_schema(c)) {
      std::string help = spec.help;
      if (spec.default_value) help += " [default " + *spec.default_value + "]";
      if (!spec.choices.empty()) {
        help += " {";
        for (std::size_t i = 0; i < spec.choices.size(); ++i) {
          help += (i ? "," : "") + spec.choices[i];
        }
        help += "}";
      }
      static const char* const kTypeNames[] = {"REAL", "INT", "INT,...", "CHOICE"};
      s.options[spec.key] = s.app->add_option("--" + kebab(spec.key), s.values[spec.key], help)
                                ->type_name(kTypeNames[static_cast<int>(spec.type)]);
    }
    s.app->add_option("--format", s.format, "csv or json");
    s.app->add_option("--output", s.output, "output file, - for stdout");
    s.app->add_option("--seed", s.seed, "64-bit seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (show_version) {
    out << kToolName << " " << tool_version() << "\n";
    return 0;
  }

  try {
    if (!config_file.empty()) {
      if (!app.get_subcommands().empty()) {
        err << "error: --config cannot be combined with a command\n";
        return 2;
      }
      std::string text;
      try {
        text = read_file(config_file);
      } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 4;
      }
      return run(config_from_artifact(text), out, err);
    }
    for (Sub& s : subs) {
      if (!s.app->parsed()) continue;
      std::map<std::string, std::string> raw;
      for (const auto& [key, opt] : s.options) {
        if (opt->count() > 0) raw[key] = s.values[key];
      }
      std::optional<Format> format;
      if (!s.format.empty()) {
        format = parse_format(s.format);
        if (!format) {
          err << "error: --format must be csv or json\n";
          return 2;
        }
      }
      const auto seed = parse_seed(s.seed);
      if (!seed) {
        err << "error: --seed must be a nonnegative 64-bit integer\n";
        return 2;
      }
      return run(make_config(s.command, raw, format, s.output, *seed), out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 2;
}

}  // namespace covert::cli
