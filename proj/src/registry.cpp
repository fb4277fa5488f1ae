#include <algorithm>
#include <sstream>

#include "ddelyap/scenario.hpp"
#include "json.hpp"

namespace ddelyap {

namespace {

const char* const kWright = R"([scenario]
name = wright_linear
description = x' = -(pi/2) x(t - 1) with phi(s) = cos(pi s / 2); exact solution cos(pi t / 2)
t0 = 0
t_end = 10
delta = -1
seed = 1
audits = all
svg = true

[system]
name = wright_linear
alpha = pi/2
mu = 0

[delay]
model = constant
tau = 1

[initial]
expr = cos(pi*s/2)

[tolerances]
integrator = 1e-10
zeta = 1e-9
delay = 1e-10
)";

const char* const kCyclicN1 = R"([scenario]
name = cyclic_n1_linear
description = two-component linear loop with negative feedback through a unit delay
t0 = 0
t_end = 20
delta = -1
seed = 2
audits = all
svg = true

[system]
name = cyclic_linear
n = 1
mu = 1, 0.5
beta = 1, -2

[delay]
model = constant
tau = 1

[initial]
expr = 0.5 + s + 0.3*sin(3*s)
discrete = 0.2

[tolerances]
integrator = 1e-8
zeta = 1e-9
delay = 1e-10
)";

const char* const kCyclicN2 = R"([scenario]
name = cyclic_n2_saturating
description = three-component saturating loop, modulated closing gain, prescribed time-varying delay
t0 = 0
t_end = 30
delta = -1
seed = 3
audits = all
svg = true

[system]
name = cyclic_saturating
n = 2
mu = 1, 1, 0.5
beta = 1, 1, -3
modulation = 0.3
omega = 2

[delay]
model = explicit
tau = 1 + 0.25*sin(t)
r = 1.25
tau_min = 0.75

[initial]
expr = sin(2*s) + 0.3
discrete = 0.1, -0.2

[tolerances]
integrator = 1e-8
zeta = 1e-9
delay = 1e-10
)";

const char* const kThreshold = R"([scenario]
name = threshold_demo
description = saturating loop with a threshold delay, a(u) = 1 + tanh(u)^2 / 2
t0 = 0
t_end = 30
delta = -1
seed = 4
audits = all
svg = true

[system]
name = cyclic_saturating
n = 1
mu = 1, 0.5
beta = 1, -2

[delay]
model = threshold
a = 1 + 0.5*tanh(u)^2
a_min = 1
a_max = 1.5

[initial]
expr = 0.6*cos(2*s) - 0.1
discrete = 0.3

[tolerances]
integrator = 1e-8
zeta = 1e-9
delay = 1e-10
)";

const char* const kImplicit = R"([scenario]
name = implicit_demo
description = saturating loop with an implicitly defined state-dependent delay
t0 = 0
t_end = 30
delta = -1
seed = 5
audits = all
svg = true

[system]
name = cyclic_saturating
n = 1
mu = 1, 1
beta = 1, -2

[delay]
model = implicit
R = 1 + 0.1*atan(v) + 0.05*tanh(x1) + 0.05*sin(t)
lip_r1 = 0.05
lip_r2 = 0.1
lip_r3 = 0.05
r = 1.3
L0 = 2.5
tau_min = 0.7

[initial]
expr = 0.5*sin(2*s) + 0.2
discrete = -0.3

[tolerances]
integrator = 1e-8
zeta = 1e-9
delay = 1e-10
)";

}  // namespace

const Registry& default_registry() {
  static const Registry reg = [] {
    Registry r;
    r.scenarios = {{"cyclic_n1_linear", kCyclicN1},
                   {"cyclic_n2_saturating", kCyclicN2},
                   {"implicit_demo", kImplicit},
                   {"threshold_demo", kThreshold},
                   {"wright_linear", kWright}};
    r.systems = builtin_system_names();
    r.delay_models = delay_model_names();
    r.audits = audit_names();
    return r;
  }();
  return reg;
}

std::optional<Scenario> find_scenario(const Registry& reg, const std::string& name) {
  for (const auto& e : reg.scenarios)
    if (e.name == name) return parse_scenario(e.ini, "builtin:" + name);
  return std::nullopt;
}

std::string list_registry(const Registry& reg, bool json) {
  if (json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    auto scen = nlohmann::ordered_json::array();
    for (const auto& e : reg.scenarios) {
      const auto s = parse_scenario(e.ini, "builtin:" + e.name);
      nlohmann::ordered_json sj;
      sj["name"] = s.name;
      sj["description"] = s.description;
      sj["system"] = s.system;
      sj["delay"] = s.delay.model;
      sj["delta"] = s.delta;
      sj["audits"] = s.audits;
      scen.push_back(std::move(sj));
    }
    j["scenarios"] = std::move(scen);
    j["systems"] = reg.systems;
    j["delay_models"] = reg.delay_models;
    j["audits"] = reg.audits;
    return j.dump(2) + "\n";
  }
  if (reg.empty()) return {};
  std::ostringstream os;
  auto block = [&](const char* title, const std::vector<std::string>& items) {
    os << title << ":\n";
    for (const auto& it : items) os << "  " << it << '\n';
  };
  os << "scenarios:\n";
  for (const auto& e : reg.scenarios) {
    const auto s = parse_scenario(e.ini, "builtin:" + e.name);
    os << "  " << s.name << "  (" << s.system << ", " << s.delay.model << " delay, delta " << s.delta << ")";
    if (!s.description.empty()) os << "  " << s.description;
    os << '\n';
  }
  block("systems", reg.systems);
  block("delay models", reg.delay_models);
  block("audits", reg.audits);
  return os.str();
}

}  // namespace ddelyap
