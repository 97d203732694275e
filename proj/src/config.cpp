#include "pinchlab/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pinchlab/error.hpp"

namespace pinchlab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Line of every "section.key" (and of every "[section]" under the bare section name), so that
/// value errors can point at the source; Boost's tree does not keep positions.
std::map<std::string, int> line_index(std::string_view text) {
  std::map<std::string, int> lines;
  std::string section;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    const std::string_view line = trim(text.substr(start, end - start));
    ++number;
    if (!line.empty() && line.front() == '[' && line.back() == ']') {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      lines.emplace(section, number);
    } else if (const std::size_t eq = line.find('='); !line.empty() && line.front() != ';' && line.front() != '#' &&
                                                      eq != std::string_view::npos) {
      lines.emplace(section + "." + std::string(trim(line.substr(0, eq))), number);
    }
    start = end + 1;
  }
  return lines;
}

class Diagnostics {
 public:
  Diagnostics(std::string_view origin, std::string_view text) : origin_(origin), lines_(line_index(text)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message, ErrorCode code = ErrorCode::ConfigError) const {
    const auto it = lines_.find(key);
    const std::string where = it == lines_.end() ? origin_ : fmt::format("{}:{}", origin_, it->second);
    throw Error(code, fmt::format("{}: key '{}': {}", where, key, message));
  }

 private:
  std::string origin_;
  std::map<std::string, int> lines_;
};

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !std::isnan(out);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    items.push_back(trim(s.substr(start, end - start)));
    start = end + 1;
  }
  return items;
}

bool is_auto(std::string_view s) { return trim(s) == "auto"; }

using Setter = std::function<void(RunConfig&, std::string_view, const std::function<void(const std::string&)>&)>;

struct Field {
  const char* key;
  Setter set;
  std::function<std::string(const RunConfig&)> get;
};

std::string number(double v) { return fmt::format("{:.17g}", v); }

std::string number_list(const std::vector<double>& v) {
  if (v.empty()) return "auto";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + number(v[i]);
  return out;
}

template <typename T>
Field real(const char* key, T RunConfig::*section, double T::*member) {
  return {key,
          [=](RunConfig& c, std::string_view v, const auto& fail) {
            double x;
            if (!parse_double(v, x)) fail(fmt::format("expected a number, got '{}'", v));
            c.*section.*member = x;
          },
          [=](const RunConfig& c) { return number(c.*section.*member); }};
}

template <typename T, typename U>
Field count(const char* key, T RunConfig::*section, U T::*member) {
  return {key,
          [=](RunConfig& c, std::string_view v, const auto& fail) {
            v = trim(v);
            U x{};
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
              fail(fmt::format("expected a nonnegative integer, got '{}'", v));
            }
            c.*section.*member = x;
          },
          [=](const RunConfig& c) { return fmt::format("{}", c.*section.*member); }};
}

Field flag(const char* key, bool OutputSettings::*member) {
  return {key,
          [=](RunConfig& c, std::string_view v, const auto& fail) {
            v = trim(v);
            if (v == "true" || v == "yes" || v == "1") {
              c.output.*member = true;
            } else if (v == "false" || v == "no" || v == "0") {
              c.output.*member = false;
            } else {
              fail(fmt::format("expected true or false, got '{}'", v));
            }
          },
          [=](const RunConfig& c) { return std::string(c.output.*member ? "true" : "false"); }};
}

/// Comma-separated numbers; `allow_auto` maps "auto" to the empty list.
Field grid(const char* key, std::vector<double> EstimateSettings::*member, bool allow_auto) {
  return {key,
          [=](RunConfig& c, std::string_view v, const auto& fail) {
            std::vector<double> out;
            if ((allow_auto && is_auto(v)) || trim(v).empty()) {
              c.estimates.*member = out;
              return;
            }
            for (std::string_view item : split_list(v)) {
              double x;
              if (!parse_double(item, x)) {
                fail(item.empty() ? std::string("empty grid entry") : fmt::format("expected a number, got '{}'", item));
              }
              out.push_back(x);
            }
            c.estimates.*member = out;
          },
          [=](const RunConfig& c) { return number_list(c.estimates.*member); }};
}

Field optional_real(const char* key, std::optional<double> EstimateSettings::*member) {
  return {key,
          [=](RunConfig& c, std::string_view v, const auto& fail) {
            if (is_auto(v)) {
              (c.estimates.*member).reset();
              return;
            }
            double x;
            if (!parse_double(v, x)) fail(fmt::format("expected a number or 'auto', got '{}'", v));
            c.estimates.*member = x;
          },
          [=](const RunConfig& c) { return c.estimates.*member ? number(*(c.estimates.*member)) : std::string("auto"); }};
}

const std::map<std::string, std::vector<Field>>& schema() {
  static const std::map<std::string, std::vector<Field>> s = {
      {"scenario",
       {
           {"kind",
            [](RunConfig& c, std::string_view v, const auto& fail) {
              try {
                c.scenario.kind = parse_scenario_kind(trim(v));
              } catch (const Error& e) {
                fail(e.what());
              }
            },
            [](const RunConfig& c) { return std::string(to_string(c.scenario.kind)); }},
           count("resolution", &RunConfig::scenario, &ScenarioSpec::resolution),
           real("radius", &RunConfig::scenario, &ScenarioSpec::radius),
           real("semi_major", &RunConfig::scenario, &ScenarioSpec::semi_major),
           real("semi_minor", &RunConfig::scenario, &ScenarioSpec::semi_minor),
           real("amplitude", &RunConfig::scenario, &ScenarioSpec::amplitude),
           count("seed", &RunConfig::scenario, &ScenarioSpec::seed),
           real("bell", &RunConfig::scenario, &ScenarioSpec::bell),
           real("neck", &RunConfig::scenario, &ScenarioSpec::neck),
           real("flare", &RunConfig::scenario, &ScenarioSpec::flare),
       }},
      {"flow",
       {
           real("cfl_factor", &RunConfig::flow, &FlowConfig::cfl_factor),
           count("remesh_every", &RunConfig::flow, &FlowConfig::remesh_every),
           real("stop_H_max", &RunConfig::flow, &FlowConfig::stop_H_max),
           real("stop_time", &RunConfig::flow, &FlowConfig::stop_time),
           real("sample_interval", &RunConfig::flow, &FlowConfig::sample_interval),
           count("max_steps", &RunConfig::flow, &FlowConfig::max_steps),
           count("azimuths", &RunConfig::flow, &FlowConfig::azimuths),
       }},
      {"estimates",
       {
           grid("delta", &EstimateSettings::delta, false),
           grid("sigma", &EstimateSettings::sigma, false),
           grid("p", &EstimateSettings::p, false),
           real("c0", &RunConfig::estimates, &EstimateSettings::c0),
           optional_real("epsilon", &EstimateSettings::epsilon),
           grid("levels", &EstimateSettings::levels, true),
           grid("witness_deltas", &EstimateSettings::witness_deltas, true),
           optional_real("C_hat", &EstimateSettings::C_hat),
           count("training_resolution", &RunConfig::estimates, &EstimateSettings::training_resolution),
       }},
      {"output",
       {
           {"directory", [](RunConfig& c, std::string_view v, const auto& fail) {
              if (trim(v).empty()) fail("empty directory");
              c.output.directory = std::string(trim(v));
            },
            [](const RunConfig& c) { return c.output.directory.string(); }},
           flag("frames", &OutputSettings::frames),
           flag("contacts", &OutputSettings::contacts),
           flag("plots", &OutputSettings::plots),
       }},
      {"sweep",
       {
           {"scenarios",
            [](RunConfig& c, std::string_view v, const auto& fail) {
              c.sweep.scenarios.reset();
              if (is_auto(v)) return;
              std::vector<ScenarioKind> kinds;
              if (!trim(v).empty()) {
                for (std::string_view item : split_list(v)) {
                  if (item.empty()) fail("empty grid entry");
                  try {
                    kinds.push_back(parse_scenario_kind(item));
                  } catch (const Error& e) {
                    fail(e.what());
                  }
                }
              }
              c.sweep.scenarios = std::move(kinds);
            },
            [](const RunConfig& c) {
              if (!c.sweep.scenarios) return std::string("auto");
              std::string out;
              for (std::size_t i = 0; i < c.sweep.scenarios->size(); ++i) {
                out += (i ? ", " : "") + std::string(to_string((*c.sweep.scenarios)[i]));
              }
              return out;
            }},
       }},
  };
  return s;
}

}  // namespace

std::optional<std::string> admissibility_problem(double sigma, double p, double c0) {
  if (p >= 1.0 / c0 && sigma <= c0 / std::sqrt(p)) return std::nullopt;
  return fmt::format(
      "(sigma, p) = ({}, {}) violates the L^p growth inequality precondition p >= 1/c0 and sigma <= c0 p^(-1/2) "
      "(c0 = {}, so p >= {:.4g} and sigma <= {:.4g})",
      sigma, p, c0, 1.0 / c0, c0 / std::sqrt(p));
}

RunConfig parse_config(std::string_view text, std::string_view origin, ConfigMode mode) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  const Diagnostics diag(origin, text);
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) diag.fail("." + section, "key outside a section");
    const auto it = schema().find(section);
    if (it == schema().end()) diag.fail(section, "unknown section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto field = std::find_if(it->second.begin(), it->second.end(), [&](const Field& f) { return key == f.key; });
      if (field == it->second.end()) diag.fail(full, "unknown key");
      field->set(config, value.data(), [&](const std::string& message) { diag.fail(full, message); });
    }
  }

  const EstimateSettings& e = config.estimates;
  for (const auto& [key, values] : {std::pair{"delta", &e.delta}, {"sigma", &e.sigma}, {"p", &e.p}}) {
    if (values->empty() && mode == ConfigMode::Run) diag.fail(std::string("estimates.") + key, "empty grid");
  }
  for (double d : e.delta) {
    if (!(d > 0.0)) diag.fail("estimates.delta", fmt::format("delta = {} must be positive", d));
  }
  for (double d : e.witness_deltas) {
    if (!(d > 0.0)) diag.fail("estimates.witness_deltas", fmt::format("delta = {} must be positive", d));
  }
  for (double s : e.sigma) {
    if (!(s > 0.0 && s < 0.5)) diag.fail("estimates.sigma", fmt::format("sigma = {} outside (0, 1/2)", s));
  }
  for (double p : e.p) {
    if (!(p >= 1.0)) diag.fail("estimates.p", fmt::format("p = {} below 1", p));
  }
  if (!(e.c0 > 0.0)) diag.fail("estimates.c0", "c0 must be positive");
  if (e.epsilon && !(*e.epsilon >= 0.0)) diag.fail("estimates.epsilon", "epsilon must be nonnegative");
  if (e.C_hat && !(*e.C_hat >= 0.0)) diag.fail("estimates.C_hat", "C_hat must be nonnegative");
  try {
    config.flow.validate();
  } catch (const Error& err) {
    diag.fail("flow", err.what());
  }
  if (mode == ConfigMode::Run) {
    for (double s : e.sigma) {
      for (double p : e.p) {
        if (auto problem = admissibility_problem(s, p, e.c0)) {
          diag.fail("estimates.sigma", *problem, ErrorCode::PreconditionViolated);
        }
      }
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, ConfigMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string(), mode);
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const char* section : {"scenario", "flow", "estimates", "output", "sweep"}) {
    out += fmt::format("[{}]\n", section);
    for (const Field& f : schema().at(section)) out += fmt::format("{} = {}\n", f.key, f.get(config));
    out += "\n";
  }
  return out;
}

}  // namespace pinchlab
