#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <variant>

#include "json.hpp"
#include "sdwave/bounds.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/integrator.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave::cli {

using json = nlohmann::json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw NumericalError("cannot format a double");
  return std::string(buf, end);
}

/// JSON has no inf/nan; those are written as strings.
inline json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline constexpr const char* kTraceHeader = "t,E,I,K,M,Q,sup_abs_u,dt,energy_residual";

inline std::string trace_csv(const Trace& trace) {
  std::string s = kTraceHeader;
  s += '\n';
  for (const auto& r : trace.rows) {
    for (double x : {r.t, r.E, r.I, r.K, r.M, r.Q, r.sup_abs_u, r.dt}) {
      s += format_double(x);
      s += ',';
    }
    s += format_double(r.energy_residual);
    s += '\n';
  }
  return s;
}

inline json to_json(const Outcome& o) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Completed>) {
          return {{"kind", "Completed"}, {"t_end", number(x.t_end)}};
        } else if constexpr (std::is_same_v<T, BlowupDetected>) {
          return {{"kind", "BlowupDetected"},
                  {"t_stop", number(x.t_stop)},
                  {"T_extrapolated", number(x.T_extrapolated)},
                  {"extrapolation_quality", number(x.extrapolation_quality)},
                  {"extrapolation_fallback", x.extrapolation_fallback},
                  {"Q", number(x.Q)}};
        } else if constexpr (std::is_same_v<T, DtUnderflow>) {
          return {{"kind", "DtUnderflow"},
                  {"t_stop", number(x.t_stop)},
                  {"Q", number(x.Q)},
                  {"dt", number(x.dt)}};
        } else {
          return {{"kind", "Overflow"},
                  {"t_stop", number(x.t_stop)},
                  {"T_extrapolated", number(x.T_extrapolated)},
                  {"extrapolation_quality", number(x.extrapolation_quality)},
                  {"extrapolation_fallback", x.extrapolation_fallback}};
        }
      },
      o);
}

inline json to_json(const UpperBoundVariant& v) {
  return {{"name", v.name},     {"lambda", number(v.lambda)}, {"a", number(v.a)},
          {"b0", number(v.b0)}, {"eta0", number(v.eta0)},     {"T", number(v.T)},
          {"formula", v.formula}};
}

inline json to_json(const BoundsReport& b) {
  json j;
  j["initial"] = {{"u0_l2_sq", number(b.data.u0_l2_sq)},
                  {"u0_full_sq", number(b.data.u0_full_sq)},
                  {"cross", number(b.data.cross)},
                  {"E0", number(b.data.E0)},
                  {"I0", number(b.data.I0)},
                  {"K0", number(b.data.K0)},
                  {"M0", number(b.data.M0)},
                  {"lambda1", number(b.data.lambda1)}};
  j["high_energy_criterion"] = {{"holds", b.high_energy.holds},
                                {"margin", number(b.high_energy.margin)},
                                {"factor", number(b.high_energy.factor)},
                                {"in_unstable_set", b.high_energy.in_unstable_set}};
  j["negative_energy"] = b.negative_energy;
  if (b.upper) {
    json u;
    u["T_upper"] = number(b.upper->T_upper);
    u["winner"] = b.upper->winner;
    u["main"] = b.upper->main ? to_json(*b.upper->main) : json();
    u["negative_energy"] = b.upper->negative_energy ? to_json(*b.upper->negative_energy) : json();
    j["upper"] = u;
  } else {
    j["upper"] = {{"error", b.upper_error}};
  }
  if (b.lower) {
    const auto& g = b.lower->constants;
    j["lower"] = {{"T_lower", number(b.lower->T_lower)},
                  {"M0", number(b.lower->M0)},
                  {"method", b.lower->method},
                  {"C4", number(g.C4)},
                  {"C5", number(g.C5)},
                  {"q", number(g.q)},
                  {"S", number(g.S.value)},
                  {"S_r", number(g.S.r)},
                  {"S_certified", g.S.certified},
                  {"S_status", g.S.certified ? "certified" : "estimated"},
                  {"derivation", g.derivation}};
  } else {
    j["lower"] = {{"error", b.lower_error}};
  }
  return j;
}

inline json to_json(const Nonlinearity& nl) {
  return {{"name", nl.name},       {"p", number(nl.p)},   {"alpha", number(nl.alpha)},
          {"beta", number(nl.beta)}, {"q", number(nl.q)}, {"k0", number(nl.k0)},
          {"k1", number(nl.k1)},   {"l1", number(nl.l1)}, {"constants", nl.constants_note}};
}

inline json to_json(const CheckReport& c) {
  return {{"hypothesis", c.hypothesis},
          {"passed", c.passed},
          {"worst_residual", number(c.worst_residual)},
          {"worst_at", number(c.worst_at)},
          {"samples", c.samples},
          {"note", c.note}};
}

}  // namespace sdwave::cli
