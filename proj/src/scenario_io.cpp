#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qdion/errors.hpp"
#include "qdion/scenario.hpp"

namespace qdion {

namespace pt = boost::property_tree;

namespace {

constexpr std::string_view kSections[] = {"sweep",    "emitter", "ion",  "link",
                                          "sequence", "readout", "spin", "budget"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

// Typed access to one section; remembers which keys were read so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const pt::ptree* node, std::string name) : node_(node), name_(std::move(name)) {}

  bool present() const { return node_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!node_) return std::nullopt;
    const auto child = node_->get_child_optional(key);
    if (!child) return std::nullopt;
    return trim(child->data());
  }

  void number(const std::string& key, double& target) {
    if (auto text = raw(key)) target = parse_number(key, *text);
  }

  void optional_number(const std::string& key, std::optional<double>& target) {
    if (auto text = raw(key)) {
      if (lower(*text) == "none") {
        target.reset();
      } else {
        target = parse_number(key, *text);
      }
    }
  }

  void integer(const std::string& key, std::int64_t& target) {
    if (auto text = raw(key)) {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
      if (ec != std::errc{} || ptr != text->data() + text->size()) {
        throw ConfigError(fmt::format("{}: expected an integer, got '{}'", where(key), *text),
                          where(key));
      }
      target = v;
    }
  }

  void boolean(const std::string& key, bool& target) {
    if (auto text = raw(key)) {
      const auto t = lower(*text);
      if (t == "true" || t == "yes" || t == "1") {
        target = true;
      } else if (t == "false" || t == "no" || t == "0") {
        target = false;
      } else {
        throw ConfigError(fmt::format("{}: expected true/false, got '{}'", where(key), *text),
                          where(key));
      }
    }
  }

  double parse_number(const std::string& key, const std::string& text) const {
    if (auto v = to_double(text)) return *v;
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", where(key), text), where(key));
  }

  std::string where(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    if (!node_) return out;
    for (const auto& [key, child] : *node_) {
      if (!used_.count(key)) out.push_back(where(key));
    }
    return out;
  }

  void mark_used(const std::string& key) { used_.insert(key); }

 private:
  const pt::ptree* node_;
  std::string name_;
  std::set<std::string> used_;
};

std::vector<double> parse_axis(const std::string& text, const std::string& where, bool& automatic) {
  automatic = false;
  const auto t = lower(trim(text));
  if (t == "auto") {
    automatic = true;
    return {};
  }
  if (t.rfind("linspace(", 0) == 0 && t.back() == ')') {
    const auto args = split(std::string_view(t).substr(9, t.size() - 10), ',');
    if (args.size() != 3) {
      throw ConfigError(where + ": linspace takes (start, stop, count)", where);
    }
    const auto a = to_double(args[0]);
    const auto b = to_double(args[1]);
    const auto n = to_double(args[2]);
    if (!a || !b || !n || *n < 2 || std::floor(*n) != *n) {
      throw ConfigError(where + ": malformed linspace arguments", where);
    }
    const auto count = static_cast<std::size_t>(*n);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = *a + (*b - *a) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    out.back() = *b;
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(t, ',')) {
    const auto v = to_double(item);
    if (!v) throw ConfigError(fmt::format("{}: '{}' is not a number", where, item), where);
    out.push_back(*v);
  }
  return out;
}

template <typename F>
void wrap_domain(const std::string& section, F&& check) {
  try {
    check();
  } catch (const ParameterError& e) {
    throw ConfigError(fmt::format("[{}] {}", section, e.what()), section);
  }
}

}  // namespace

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::Fig2: return "fig2";
    case SweepKind::Fig3a: return "fig3a";
    case SweepKind::Fig3b: return "fig3b";
    case SweepKind::Fig4: return "fig4";
    case SweepKind::Spectrum: return "spectrum";
    case SweepKind::Budget: return "budget";
  }
  return "?";
}

std::optional<SweepKind> parse_sweep_kind(std::string_view text) {
  for (auto k : {SweepKind::Fig2, SweepKind::Fig3a, SweepKind::Fig3b, SweepKind::Fig4,
                 SweepKind::Spectrum, SweepKind::Budget}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view axis_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::Fig2: return "t_interact_us";
    case SweepKind::Fig3a: return "ion_offset_mhz";
    case SweepKind::Fig3b: return "s";
    case SweepKind::Fig4: return "pump_pulse_ns";
    case SweepKind::Spectrum: return "nu_mhz";
    case SweepKind::Budget: return "stage";
  }
  return "?";
}

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("scenario name is missing", "name");
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
      throw ConfigError("scenario name may only contain letters, digits, '_' and '-'", "name");
    }
  }
  wrap_domain("emitter", [&] { emitter.validate(); });
  wrap_domain("ion", [&] {
    ion.validate();
    branching(ion);
  });
  wrap_domain("link", [&] { link.validate(); });
  wrap_domain("sequence", [&] { sequence.validate(); });
  wrap_domain("readout", [&] { readout.validate(); });
  if (spin) wrap_domain("spin", [&] { spin->validate(); });
  if (budget) wrap_domain("budget", [&] { budget->validate(); });

  const bool may_be_auto = sweep.kind == SweepKind::Spectrum || sweep.kind == SweepKind::Budget;
  if (sweep.automatic) {
    if (!may_be_auto) {
      throw ConfigError(fmt::format("sweep.values: 'auto' is not available for kind {}",
                                    to_string(sweep.kind)),
                        "sweep.values");
    }
  } else {
    if (sweep.values.empty()) throw ConfigError("sweep.values: empty sweep", "sweep.values");
    for (std::size_t i = 1; i < sweep.values.size(); ++i) {
      if (!(sweep.values[i] > sweep.values[i - 1])) {
        throw ConfigError("sweep.values: values must be sorted ascending without duplicates",
                          "sweep.values");
      }
    }
    for (double v : sweep.values) {
      if (!std::isfinite(v)) throw ConfigError("sweep.values: non-finite value", "sweep.values");
    }
  }
  switch (sweep.kind) {
    case SweepKind::Fig2:
      if (sweep.values.size() < 5) {
        throw ConfigError("sweep.values: fig2 needs at least five T values", "sweep.values");
      }
      if (sweep.values.front() < 0.0) {
        throw ConfigError("sweep.values: T must be >= 0", "sweep.values");
      }
      break;
    case SweepKind::Fig3b:
      if (sweep.values.front() <= 0.0) {
        throw ConfigError("sweep.values: s must be > 0", "sweep.values");
      }
      break;
    case SweepKind::Fig4:
      if (!spin) throw ConfigError("fig4 scenarios need a [spin] section", "spin");
      if (sweep.values.front() < 0.0 || sweep.values.back() > spin->pump_pulse_max) {
        throw ConfigError("sweep.values: pump pulses must lie in [0, spin.pump_pulse_max_ns]",
                          "sweep.values");
      }
      break;
    case SweepKind::Budget:
      if (!sweep.automatic) {
        const auto n = (budget ? *budget : reference_link_budget()).stages.size();
        if (sweep.values.size() != n) {
          throw ConfigError("sweep.values: budget axis must list every stage", "sweep.values");
        }
      }
      break;
    default:
      break;
  }
}

LoadResult parse_scenario(const std::string& text, const LoadOptions& options) {
  if (trim(text).empty()) throw ConfigError("scenario file is empty");
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()), {},
                      static_cast<int>(e.line()));
  }

  LoadResult result;
  Scenario& sc = result.scenario;
  std::vector<std::string> unknown;

  std::map<std::string, const pt::ptree*> sections;
  Section top(&tree, "");
  for (const auto& [key, child] : tree) {
    const bool is_section =
        std::find(std::begin(kSections), std::end(kSections), key) != std::end(kSections);
    if (is_section) {
      sections[key] = &child;
      top.mark_used(key);
    }
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return Section(it == sections.end() ? nullptr : it->second, name);
  };

  if (auto v = top.raw("name")) sc.name = *v;
  if (auto v = top.raw("description")) sc.description = *v;
  {
    std::int64_t seed = static_cast<std::int64_t>(sc.seed);
    top.integer("seed", seed);
    if (seed < 0) throw ConfigError("seed must be >= 0", "seed");
    sc.seed = static_cast<std::uint64_t>(seed);
  }
  for (auto& k : top.unused_keys()) unknown.push_back(k);

  {
    auto s = section("sweep");
    if (!s.present()) throw ConfigError("missing [sweep] section", "sweep");
    const auto kind = s.raw("kind");
    if (!kind) throw ConfigError("sweep.kind is required", "sweep.kind");
    const auto parsed = parse_sweep_kind(lower(*kind));
    if (!parsed) {
      throw ConfigError(fmt::format("sweep.kind: unknown kind '{}'", *kind), "sweep.kind");
    }
    sc.sweep.kind = *parsed;
    const auto values = s.raw("values");
    if (!values) throw ConfigError("sweep.values is required", "sweep.values");
    sc.sweep.values = parse_axis(*values, "sweep.values", sc.sweep.automatic);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  {
    auto s = section("emitter");
    auto& e = sc.emitter;
    s.number("gamma_rad_mhz", e.gamma_rad);
    s.number("s", e.s);
    s.number("delta_mhz", e.delta);
    s.number("dephasing_coeff_mhz", e.dephasing_coeff);
    s.optional_number("dephasing_fixed_mhz", e.dephasing_fixed);
    s.number("wandering_sigma_mhz", e.wandering_sigma);
    s.number("psb_fraction", e.psb_fraction);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  {
    auto s = section("ion");
    auto& p = sc.ion;
    s.number("g_mhz", p.g);
    s.number("kappa_mhz", p.kappa);
    s.number("gamma_mhz", p.gamma_ion);
    s.number("bare_branch_to_d", p.bare_branch_to_D);
    s.number("line_fwhm_mhz", p.line_fwhm);
    s.optional_number("branch_to_d_override", p.branch_to_D_override);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  {
    auto s = section("link");
    auto& l = sc.link;
    s.number("leakage_ratio_at_sat", l.leakage_ratio_at_sat);
    s.number("scale_k", l.scale_k);
    s.number("ion_freq_offset_mhz", l.ion_freq_offset);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  {
    auto s = section("sequence");
    auto& q = sc.sequence;
    s.number("t_init_us", q.t_init);
    s.number("prep_efficiency", q.prep_efficiency);
    s.number("t_interact_us", q.t_interact);
    s.number("gamma_qd_per_s", q.gamma_qd);
    if (auto v = s.raw("p_abs")) {
      if (lower(*v) == "model") {
        sc.p_abs_from_model = true;
      } else {
        q.p_abs = s.parse_number("p_abs", *v);
      }
    }
    s.number("branch_to_s", q.branch_to_S);
    s.number("t_readout_window_us", q.t_readout_window);
    s.number("t_cool_us", q.t_cool);
    s.integer("n_reps", q.n_reps);
    s.number("d_state_lifetime_ms", q.d_state_lifetime_ms);
    s.boolean("ideal_calibration", q.ideal_calibration);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  {
    auto s = section("readout");
    auto& r = sc.readout;
    s.number("bright_rate_per_us", r.bright_rate);
    s.number("bright_decay_us", r.bright_decay);
    s.number("background_rate_per_us", r.background_rate);
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  if (auto s = section("spin"); s.present()) {
    SpinPrepConfig c;
    s.number("pump_pulse_ns", c.pump_pulse_len);
    s.number("pump_pulse_max_ns", c.pump_pulse_max);
    s.number("anchor_p_up", c.anchor_p_up);
    s.number("probe_pulse_ns", c.probe_pulse_len);
    s.number("fidelity_up", c.fidelity_up);
    s.number("fidelity_down", c.fidelity_down);
    s.optional_number("pump_time_constant_ns", c.pump_time_constant);
    s.number("rep_rate_khz", c.rep_rate);
    s.number("t_interact_us", c.t_interact);
    s.number("zeeman_split_ghz", c.zeeman_split);
    sc.spin = c;
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }
  if (auto s = section("budget"); s.present()) {
    LinkBudget b;
    s.number("extraction", b.extraction_into_first_lens);
    std::map<int, std::pair<std::string, double>> stages;
    for (const auto& [key, child] : *sections["budget"]) {
      if (key.rfind("stage", 0) != 0) continue;
      int index = 0;
      const auto [ptr, ec] = std::from_chars(key.data() + 5, key.data() + key.size(), index);
      if (ec != std::errc{} || ptr != key.data() + key.size()) continue;
      s.mark_used(key);
      const auto text = trim(child.data());
      const auto comma = text.find(',');
      const auto value = to_double(text.substr(0, comma));
      if (!value || comma == std::string::npos) {
        throw ConfigError(fmt::format("budget.{}: expected '<fraction>, <name>'", key),
                          "budget." + key);
      }
      stages[index] = {trim(std::string_view(text).substr(comma + 1)), *value};
    }
    for (auto& [i, stage] : stages) b.stages.push_back(stage);
    sc.budget = b;
    for (auto& k : s.unused_keys()) unknown.push_back(k);
  }

  for (const auto& key : unknown) {
    if (!options.lenient) throw ConfigError(fmt::format("unknown key '{}'", key), key);
    result.warnings.push_back(fmt::format("ignoring unknown key '{}'", key));
  }
  sc.validate();
  return result;
}

Scenario load_scenario(const std::filesystem::path& path, const LoadOptions& options,
                       std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto result = parse_scenario(buffer.str(), options);
  if (warnings) *warnings = std::move(result.warnings);
  return std::move(result.scenario);
}

std::string format_scenario(const Scenario& sc) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  auto num = [&](std::string_view key, double v) { line(key, fmt_double(v)); };
  auto opt = [&](std::string_view key, const std::optional<double>& v) {
    line(key, v ? fmt_double(*v) : std::string("none"));
  };

  line("name", sc.name);
  if (!sc.description.empty()) line("description", sc.description);
  line("seed", fmt::format("{}", sc.seed));

  out += "\n[sweep]\n";
  line("kind", std::string(to_string(sc.sweep.kind)));
  if (sc.sweep.automatic) {
    line("values", "auto");
  } else {
    std::string values;
    for (std::size_t i = 0; i < sc.sweep.values.size(); ++i) {
      values += (i ? ", " : "") + fmt_double(sc.sweep.values[i]);
    }
    line("values", values);
  }

  out += "\n[emitter]\n";
  num("gamma_rad_mhz", sc.emitter.gamma_rad);
  num("s", sc.emitter.s);
  num("delta_mhz", sc.emitter.delta);
  num("dephasing_coeff_mhz", sc.emitter.dephasing_coeff);
  opt("dephasing_fixed_mhz", sc.emitter.dephasing_fixed);
  num("wandering_sigma_mhz", sc.emitter.wandering_sigma);
  num("psb_fraction", sc.emitter.psb_fraction);

  out += "\n[ion]\n";
  num("g_mhz", sc.ion.g);
  num("kappa_mhz", sc.ion.kappa);
  num("gamma_mhz", sc.ion.gamma_ion);
  num("bare_branch_to_d", sc.ion.bare_branch_to_D);
  num("line_fwhm_mhz", sc.ion.line_fwhm);
  opt("branch_to_d_override", sc.ion.branch_to_D_override);

  out += "\n[link]\n";
  num("leakage_ratio_at_sat", sc.link.leakage_ratio_at_sat);
  num("scale_k", sc.link.scale_k);
  num("ion_freq_offset_mhz", sc.link.ion_freq_offset);

  out += "\n[sequence]\n";
  const auto& q = sc.sequence;
  num("t_init_us", q.t_init);
  num("prep_efficiency", q.prep_efficiency);
  num("t_interact_us", q.t_interact);
  num("gamma_qd_per_s", q.gamma_qd);
  line("p_abs", sc.p_abs_from_model ? std::string("model") : fmt_double(q.p_abs));
  num("branch_to_s", q.branch_to_S);
  num("t_readout_window_us", q.t_readout_window);
  num("t_cool_us", q.t_cool);
  line("n_reps", fmt::format("{}", q.n_reps));
  num("d_state_lifetime_ms", q.d_state_lifetime_ms);
  line("ideal_calibration", q.ideal_calibration ? "true" : "false");

  out += "\n[readout]\n";
  num("bright_rate_per_us", sc.readout.bright_rate);
  num("bright_decay_us", sc.readout.bright_decay);
  num("background_rate_per_us", sc.readout.background_rate);

  if (sc.spin) {
    const auto& c = *sc.spin;
    out += "\n[spin]\n";
    num("pump_pulse_ns", c.pump_pulse_len);
    num("pump_pulse_max_ns", c.pump_pulse_max);
    num("anchor_p_up", c.anchor_p_up);
    num("probe_pulse_ns", c.probe_pulse_len);
    num("fidelity_up", c.fidelity_up);
    num("fidelity_down", c.fidelity_down);
    opt("pump_time_constant_ns", c.pump_time_constant);
    num("rep_rate_khz", c.rep_rate);
    num("t_interact_us", c.t_interact);
    num("zeeman_split_ghz", c.zeeman_split);
  }
  if (sc.budget) {
    out += "\n[budget]\n";
    num("extraction", sc.budget->extraction_into_first_lens);
    for (std::size_t i = 0; i < sc.budget->stages.size(); ++i) {
      const auto& [name, f] = sc.budget->stages[i];
      line(fmt::format("stage{}", i + 1), fmt::format("{}, {}", fmt_double(f), name));
    }
  }
  return out;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write scenario file '{}'", path.string()));
  out << format_scenario(scenario);
}

std::vector<double> resolved_axis(const Scenario& sc) {
  if (!sc.sweep.automatic) return sc.sweep.values;
  if (sc.sweep.kind == SweepKind::Spectrum) return default_spectrum_grid(sc.emitter);
  const auto n = (sc.budget ? *sc.budget : reference_link_budget()).stages.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i + 1);
  return out;
}

}  // namespace qdion
