#include <array>
#include <string>

#include "qdion/errors.hpp"
#include "qdion/scenario.hpp"

namespace qdion {

namespace {

struct Preset {
  std::string_view name;
  std::string_view text;
};

constexpr std::array kPresets{
    Preset{"fig2b", R"(name = fig2b
description = Ion-state transfer versus QD exposure time
seed = 2015

[sweep]
kind = fig2
values = 0, 50, 100, 200, 300, 400, 600, 800, 1000, 1200, 1500

[emitter]
s = 0.5

[sequence]
gamma_qd_per_s = 90000
p_abs = 0.01
branch_to_s = 0.91
prep_efficiency = 0.9
n_reps = 50000
)"},
    Preset{"fig3a", R"(name = fig3a
description = Absorption probability versus ion-laser detuning at s = 11
seed = 2015

[sweep]
kind = fig3a
values = linspace(-1500, 1500, 1201)

[emitter]
s = 11
delta_mhz = 250
dephasing_fixed_mhz = 93

[link]
leakage_ratio_at_sat = 70
scale_k = 0.018
)"},
    Preset{"fig3b", R"(name = fig3b
description = Absorption probability versus QD excitation intensity
seed = 2015

[sweep]
kind = fig3b
values = 0.1, 0.2, 0.3, 0.5, 0.7, 1, 1.5, 2, 3, 5, 7, 11

[emitter]
delta_mhz = 0

[link]
leakage_ratio_at_sat = 70
scale_k = 0.018
)"},
    Preset{"fig4b", R"(name = fig4b
description = Ion-state transfer versus QD spin pumping pulse length
seed = 2015

[sweep]
kind = fig4
values = linspace(0, 700, 15)

[link]
leakage_ratio_at_sat = 20

[sequence]
p_abs = 0.01
n_reps = 50000

[spin]
pump_pulse_max_ns = 700
anchor_p_up = 0.81
probe_pulse_ns = 600
fidelity_up = 0.922
fidelity_down = 0.928
rep_rate_khz = 670
t_interact_us = 700
zeeman_split_ghz = 20
)"},
    Preset{"spectrum", R"(name = spectrum
description = Resonance fluorescence spectrum at s = 11
seed = 2015

[sweep]
kind = spectrum
values = auto

[emitter]
s = 11
)"},
    Preset{"budget", R"(name = budget
description = Optical path from the QD sample to the ion cavity
seed = 2015

[sweep]
kind = budget
values = auto
)"},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::optional<std::string> preset_text(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return std::string(p.text);
  }
  return std::nullopt;
}

Scenario load_preset(std::string_view name) {
  const auto text = preset_text(name);
  if (!text) throw ConfigError("unknown preset '" + std::string(name) + "'");
  return parse_scenario(*text).scenario;
}

}  // namespace qdion
