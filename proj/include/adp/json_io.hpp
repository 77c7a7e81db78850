#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adp/adp_core.hpp"
#include "adp/errors.hpp"
#include "adp/maxent_rl.hpp"
#include "adp/point_process.hpp"
#include "adp/rates.hpp"
#include "adp/spiking.hpp"

namespace adp::io {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key))
    throw ParseError(where + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field \"" + key + "\": " + e.what());
  }
}

}  // namespace detail

// {"kind": "constant" | "exp_affine" | "piecewise", ...}
inline RateFunction parse_rate(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": rate must be an object");
  const auto kind = detail::field<std::string>(j, "kind", where);
  try {
    if (kind == "constant")
      return RateFunction::constant(detail::field<double>(j, "level", where));
    if (kind == "exp_affine")
      return RateFunction::exp_affine(detail::field<double>(j, "offset", where),
                                      detail::field<double>(j, "slope", where));
    if (kind == "piecewise")
      return RateFunction::piecewise(
          detail::field<std::vector<double>>(j, "breakpoints", where),
          detail::field<std::vector<double>>(j, "levels", where));
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + ": unknown rate kind \"" + kind + "\"");
}

inline json rate_to_json(const RateFunction& f) {
  if (const auto* c = f.as<RateFunction::Constant>())
    return json{{"kind", "constant"}, {"level", c->level}};
  if (const auto* e = f.as<RateFunction::ExpAffine>())
    return json{{"kind", "exp_affine"}, {"offset", e->offset}, {"slope", e->slope}};
  if (const auto* p = f.as<RateFunction::Piecewise>())
    return json{{"kind", "piecewise"},
                {"breakpoints", p->breakpoints},
                {"levels", p->levels}};
  throw IoError("rate_to_json: callback rates have no JSON form");
}

// {"horizon": T, "arrivals": [t1, t2, ...]}
inline ArrivalPath parse_arrival_path(const json& j, const std::string& where) {
  ArrivalPath path;
  path.horizon = detail::field<double>(j, "horizon", where);
  path.arrivals = detail::field<std::vector<double>>(j, "arrivals", where);
  try {
    path.validate();
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
  return path;
}

inline json arrival_path_to_json(const ArrivalPath& path) {
  return json{{"horizon", path.horizon}, {"arrivals", path.arrivals}};
}

namespace detail {

// Keys of the form "<state>,<action>", action by name or by index.
inline std::pair<int, int> parse_state_action_key(
    const std::string& key, int states, const std::vector<std::string>& actions,
    const std::string& where) {
  const auto comma = key.find(',');
  if (comma == std::string::npos)
    throw ParseError(where + ": key \"" + key + "\" is not \"state,action\"");
  int state = -1;
  try {
    std::size_t used = 0;
    state = std::stoi(key.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument(key);
  } catch (const std::exception&) {
    throw ParseError(where + ": key \"" + key + "\" has a malformed state index");
  }
  if (state < 0 || state >= states)
    throw ParseError(where + ": key \"" + key + "\" state out of range");
  const std::string action = key.substr(comma + 1);
  for (std::size_t a = 0; a < actions.size(); ++a)
    if (actions[a] == action) return {state, static_cast<int>(a)};
  try {
    std::size_t used = 0;
    const int a = std::stoi(action, &used);
    if (used == action.size() && a >= 0 && a < static_cast<int>(actions.size()))
      return {state, a};
  } catch (const std::exception&) {
  }
  throw ParseError(where + ": key \"" + key + "\" names no action");
}

inline bool rate_is_identically_zero(const RateFunction& f) {
  if (const auto* c = f.as<RateFunction::Constant>()) return c->level == 0.0;
  if (const auto* p = f.as<RateFunction::Piecewise>()) {
    for (double l : p->levels)
      if (l != 0.0) return false;
    return true;
  }
  return false;
}

}  // namespace detail

// {"states": S, "actions": [names...], "initial": x0,
//  "rates": {"x,a": rate...}, "transitions": {"x,a": pmf-or-kernel...}}
// An action named "Id" is the trivial self-loop and may not carry a rate.
// Unlisted rates default to zero; every action with a nonzero rate needs a
// transition entry.
inline TabularAdp parse_tabular_model(const json& j,
                                      const std::string& where = "model") {
  const int states = detail::field<int>(j, "states", where);
  const auto actions = detail::field<std::vector<std::string>>(j, "actions", where);
  const int initial = detail::field<int>(j, "initial", where);

  std::optional<int> trivial;
  for (std::size_t a = 0; a < actions.size(); ++a)
    if (actions[a] == "Id") {
      if (trivial) throw ParseError(where + ": more than one action named Id");
      trivial = static_cast<int>(a);
    }

  TabularAdp model = [&] {
    try {
      return TabularAdp(states, actions, trivial, initial);
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
  }();

  if (j.contains("rates")) {
    if (!j.at("rates").is_object())
      throw ParseError(where + ": \"rates\" must be an object");
    for (const auto& [key, value] : j.at("rates").items()) {
      const auto [x, a] =
          detail::parse_state_action_key(key, states, actions, where);
      if (trivial && a == *trivial)
        throw ParseError(where + ": the Id action may not carry a rate");
      model.set_action_rate(x, a, parse_rate(value, where + " rates[" + key + "]"));
    }
  }

  if (j.contains("transitions")) {
    if (!j.at("transitions").is_object())
      throw ParseError(where + ": \"transitions\" must be an object");
    for (const auto& [key, value] : j.at("transitions").items()) {
      const auto [x, a] =
          detail::parse_state_action_key(key, states, actions, where);
      const std::string ctx = where + " transitions[" + key + "]";
      try {
        if (value.is_array()) {
          model.set_transition(x, a, value.get<std::vector<double>>());
        } else if (value.is_object()) {
          TabularAdp::TransitionKernel k;
          k.wait_bounds = detail::field<std::vector<double>>(value, "wait_bounds", ctx);
          k.rows = detail::field<std::vector<std::vector<double>>>(value, "rows", ctx);
          model.set_transition(x, a, std::move(k));
        } else {
          throw ParseError(ctx + ": expected a pmf array or a kernel object");
        }
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(ctx + ": " + e.what());
      } catch (const json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
      }
    }
  }

  for (int x = 0; x < model.state_count(); ++x)
    for (int a = 0; a < model.action_count(); ++a) {
      if (trivial && a == *trivial) continue;
      if (detail::rate_is_identically_zero(model.action_rate(x, a))) continue;
      try {
        model.transition_pmf(x, a, 0.0);
      } catch (const Error&) {
        throw ParseError(where + ": state " + std::to_string(x) + " action \"" +
                         actions[static_cast<std::size_t>(a)] +
                         "\" has a rate but no transition row");
      }
    }
  return model;
}

// {"n": neurons, "weights": [[...]], "tau": .., "gain": .., "threshold": ..,
//  "reset": .., "u0": [...]}
inline SpikingNetwork parse_spiking_network(const json& j,
                                            const std::string& where = "spiking") {
  const int n = detail::field<int>(j, "n", where);
  auto weights =
      detail::field<std::vector<std::vector<double>>>(j, "weights", where);
  if (static_cast<int>(weights.size()) != n)
    throw ParseError(where + ": \"weights\" must have n rows");
  try {
    return SpikingNetwork(std::move(weights),
                          detail::field<double>(j, "tau", where),
                          detail::field<double>(j, "gain", where),
                          detail::field<double>(j, "threshold", where),
                          detail::field<double>(j, "reset", where),
                          detail::field<std::vector<double>>(j, "u0", where));
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

// {"S": states, "A": actions, "initial": [...],
//  "transition": [[[...]]] indexed [s][a][s'], "reward": [[...]] indexed [s][a]}
inline rl::TabularMdp parse_mdp(const json& j, const std::string& where = "mdp") {
  const int S = detail::field<int>(j, "S", where);
  const int A = detail::field<int>(j, "A", where);
  const auto initial = detail::field<std::vector<double>>(j, "initial", where);
  const auto transition =
      detail::field<std::vector<std::vector<std::vector<double>>>>(j, "transition",
                                                                   where);
  const auto reward =
      detail::field<std::vector<std::vector<double>>>(j, "reward", where);
  if (static_cast<int>(transition.size()) != S)
    throw ParseError(where + ": \"transition\" must have S rows");
  std::vector<double> flat_t;
  for (const auto& per_state : transition) {
    if (static_cast<int>(per_state.size()) != A)
      throw ParseError(where + ": \"transition\" rows must have A entries");
    for (const auto& row : per_state) {
      if (static_cast<int>(row.size()) != S)
        throw ParseError(where + ": \"transition\" pmfs must have S entries");
      flat_t.insert(flat_t.end(), row.begin(), row.end());
    }
  }
  if (static_cast<int>(reward.size()) != S)
    throw ParseError(where + ": \"reward\" must have S rows");
  std::vector<double> flat_r;
  for (const auto& row : reward) {
    if (static_cast<int>(row.size()) != A)
      throw ParseError(where + ": \"reward\" rows must have A entries");
    flat_r.insert(flat_r.end(), row.begin(), row.end());
  }
  try {
    return rl::TabularMdp(S, A, initial, std::move(flat_t), std::move(flat_r));
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

// One trajectory record as a JSON line. Keys are emitted in sorted order
// and doubles in shortest round-trip form, so output is byte-stable.
inline std::string trajectory_line(const TrajectoryRecord<int>& rec,
                                   const std::string& action_name,
                                   std::optional<int> run = std::nullopt) {
  json j{{"n", rec.n}, {"t", rec.time}, {"w", rec.wait},
         {"a", action_name}, {"x", rec.state}};
  if (run) j["run"] = *run;
  return j.dump();
}

}  // namespace adp::io
