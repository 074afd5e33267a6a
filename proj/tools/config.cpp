#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <ostream>
#include <sstream>

#include "aqcast/errors.hpp"

namespace aqcast::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw DataError("config key '" + key + "': expected " + what + ", got '" + value + "'");
}

long parse_long(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, text, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    bad_value(key, text, "a number");
  }
  if (used != v.size()) bad_value(key, text, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, text, "true or false");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  const std::string v = trim(text);
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(static_cast<int>(parse_long(key, part)));
  return out;
}

std::string join(const std::vector<int>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

/// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct Entry {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

using Table = std::vector<std::pair<std::string, Entry>>;

const Table& table() {
  static const Table t = {
      {"data.stations", {[](const RunConfig& c) { return c.stations; },
                         [](RunConfig& c, const std::string&, const std::string& v) { c.stations = trim(v); }}},
      {"data.observations", {[](const RunConfig& c) { return c.observations; },
                             [](RunConfig& c, const std::string&, const std::string& v) { c.observations = trim(v); }}},
      {"data.warmup_hours",
       {[](const RunConfig& c) { return std::to_string(c.warmup_hours); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.warmup_hours = static_cast<int>(parse_long(k, v));
          if (c.warmup_hours < 0) bad_value(k, v, "a nonnegative integer");
        }}},
      {"data.impute", {[](const RunConfig& c) { return std::string(c.impute_nearest ? "true" : "false"); },
                       [](RunConfig& c, const std::string& k, const std::string& v) {
                         c.impute_nearest = parse_bool(k, v);
                       }}},
      {"model.ozone_lags", {[](const RunConfig& c) { return join(c.lags.ozone_lags); },
                            [](RunConfig& c, const std::string& k, const std::string& v) {
                              c.lags.ozone_lags = parse_int_list(k, v);
                            }}},
      {"model.pm10_lags", {[](const RunConfig& c) { return join(c.lags.pm10_lags); },
                           [](RunConfig& c, const std::string& k, const std::string& v) {
                             c.lags.pm10_lags = parse_int_list(k, v);
                           }}},
      {"model.ozone_transform",
       {[](const RunConfig& c) { return std::string(c.transforms.ozone == OzoneScale::Sqrt ? "sqrt" : "identity"); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          const std::string t = trim(v);
          if (t == "sqrt") c.transforms.ozone = OzoneScale::Sqrt;
          else if (t == "identity") c.transforms.ozone = OzoneScale::Identity;
          else bad_value(k, v, "sqrt or identity");
        }}},
      {"model.pm10_transform",
       {[](const RunConfig& c) { return std::string(c.transforms.pm10 == PmScale::Log ? "log" : "identity"); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          const std::string t = trim(v);
          if (t == "log") c.transforms.pm10 = PmScale::Log;
          else if (t == "identity") c.transforms.pm10 = PmScale::Identity;
          else bad_value(k, v, "log or identity");
        }}},
      {"model.variance", {[](const RunConfig& c) { return variance_name(c.chain.variant); },
                          [](RunConfig& c, const std::string& k, const std::string& v) {
                            try {
                              c.chain.variant = parse_variance(trim(v));
                            } catch (const DataError&) {
                              bad_value(k, v, "homoscedastic or heteroscedastic_hourly");
                            }
                          }}},
      {"prior.mean_var", {[](const RunConfig& c) { return fmt(c.prior.mean_var); },
                          [](RunConfig& c, const std::string& k, const std::string& v) {
                            c.prior.mean_var = parse_double(k, v);
                          }}},
      {"prior.iw_scale", {[](const RunConfig& c) { return fmt(c.prior.iw_scale); },
                          [](RunConfig& c, const std::string& k, const std::string& v) {
                            c.prior.iw_scale = parse_double(k, v);
                          }}},
      {"prior.iw_df_offset", {[](const RunConfig& c) { return fmt(c.prior.iw_df_offset); },
                              [](RunConfig& c, const std::string& k, const std::string& v) {
                                c.prior.iw_df_offset = parse_double(k, v);
                              }}},
      {"prior.ig_shape", {[](const RunConfig& c) { return fmt(c.prior.ig_shape); },
                          [](RunConfig& c, const std::string& k, const std::string& v) {
                            c.prior.ig_shape = parse_double(k, v);
                          }}},
      {"prior.ig_rate", {[](const RunConfig& c) { return fmt(c.prior.ig_rate); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.prior.ig_rate = parse_double(k, v);
                         }}},
      {"chain.n_iter", {[](const RunConfig& c) { return std::to_string(c.chain.n_iter); },
                        [](RunConfig& c, const std::string& k, const std::string& v) { c.chain.n_iter = parse_long(k, v); }}},
      {"chain.burn_in", {[](const RunConfig& c) { return std::to_string(c.chain.burn_in); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.chain.burn_in = parse_long(k, v);
                         }}},
      {"chain.thin", {[](const RunConfig& c) { return std::to_string(c.chain.thin); },
                      [](RunConfig& c, const std::string& k, const std::string& v) { c.chain.thin = parse_long(k, v); }}},
      {"chain.seed", {[](const RunConfig& c) { return std::to_string(c.chain.seed); },
                      [](RunConfig& c, const std::string& k, const std::string& v) {
                        c.chain.seed = static_cast<std::uint64_t>(parse_long(k, v));
                      }}},
      {"thresholds.phase1_ozone", {[](const RunConfig& c) { return fmt(c.thresholds.l1_o); },
                                   [](RunConfig& c, const std::string& k, const std::string& v) {
                                     c.thresholds.l1_o = parse_double(k, v);
                                   }}},
      {"thresholds.phase2_ozone", {[](const RunConfig& c) { return fmt(c.thresholds.l2_o); },
                                   [](RunConfig& c, const std::string& k, const std::string& v) {
                                     c.thresholds.l2_o = parse_double(k, v);
                                   }}},
      {"thresholds.phase1_pm10", {[](const RunConfig& c) { return fmt(c.thresholds.l1_pm); },
                                  [](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.thresholds.l1_pm = parse_double(k, v);
                                  }}},
      {"thresholds.phase2_pm10", {[](const RunConfig& c) { return fmt(c.thresholds.l2_pm); },
                                  [](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.thresholds.l2_pm = parse_double(k, v);
                                  }}},
      {"thresholds.maaqs_ozone_1h", {[](const RunConfig& c) { return fmt(c.thresholds.maaqs_o3_1h); },
                                     [](RunConfig& c, const std::string& k, const std::string& v) {
                                       c.thresholds.maaqs_o3_1h = parse_double(k, v);
                                     }}},
      {"thresholds.maaqs_ozone_8h", {[](const RunConfig& c) { return fmt(c.thresholds.maaqs_o3_8h); },
                                     [](RunConfig& c, const std::string& k, const std::string& v) {
                                       c.thresholds.maaqs_o3_8h = parse_double(k, v);
                                     }}},
      {"thresholds.maaqs_pm10_24h", {[](const RunConfig& c) { return fmt(c.thresholds.maaqs_pm24); },
                                     [](RunConfig& c, const std::string& k, const std::string& v) {
                                       c.thresholds.maaqs_pm24 = parse_double(k, v);
                                     }}},
      {"predict.hours_of_day", {[](const RunConfig& c) { return join(c.evaluation_hours); },
                                [](RunConfig& c, const std::string& k, const std::string& v) {
                                  c.evaluation_hours = parse_int_list(k, v);
                                  for (int h : c.evaluation_hours) {
                                    if (h < 0 || h > 23) bad_value(k, v, "hours of day in 0..23");
                                  }
                                }}},
      {"predict.all_hours", {[](const RunConfig& c) { return std::string(c.all_hours ? "true" : "false"); },
                             [](RunConfig& c, const std::string& k, const std::string& v) {
                               c.all_hours = parse_bool(k, v);
                             }}},
      {"evaluate.holdout_fraction", {[](const RunConfig& c) { return fmt(c.holdout_fraction); },
                                     [](RunConfig& c, const std::string& k, const std::string& v) {
                                       c.holdout_fraction = parse_double(k, v);
                                       if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0)) {
                                         bad_value(k, v, "a fraction in (0, 1)");
                                       }
                                     }}},
      {"evaluate.holdout_seed", {[](const RunConfig& c) { return std::to_string(c.holdout_seed); },
                                 [](RunConfig& c, const std::string& k, const std::string& v) {
                                   c.holdout_seed = static_cast<std::uint64_t>(parse_long(k, v));
                                 }}},
      {"evaluate.candidates",
       {[](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.candidates.size(); ++i) s += (i ? " | " : "") + c.candidates[i];
          return s.empty() ? std::string("default") : s;
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.candidates.clear();
          const std::string t = trim(v);
          if (t.empty() || t == "default") return;
          std::stringstream ss(t);
          std::string part;
          while (std::getline(ss, part, '|')) {
            const std::string p = trim(part);
            try {
              parse_candidate(p);
            } catch (const DataError&) {
              bad_value(k, v, "'|'-separated lag sets");
            }
            c.candidates.push_back(p);
          }
        }}},
      {"simulate.n_stations", {[](const RunConfig& c) { return std::to_string(c.sim_stations); },
                               [](RunConfig& c, const std::string& k, const std::string& v) {
                                 c.sim_stations = static_cast<int>(parse_long(k, v));
                               }}},
      {"simulate.analysis_hours", {[](const RunConfig& c) { return std::to_string(c.sim_hours); },
                                   [](RunConfig& c, const std::string& k, const std::string& v) {
                                     c.sim_hours = static_cast<int>(parse_long(k, v));
                                   }}},
      {"simulate.seed", {[](const RunConfig& c) { return std::to_string(c.sim_seed); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.sim_seed = static_cast<std::uint64_t>(parse_long(k, v));
                         }}},
      {"output.dir", {[](const RunConfig& c) { return c.out_dir; },
                      [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = trim(v); }}},
  };
  return t;
}

const Entry* find(const std::string& key) {
  for (const auto& [name, e] : table()) {
    if (name == key) return &e;
  }
  return nullptr;
}

}  // namespace

RunConfig default_config(bool desk_scale) {
  RunConfig c;
  if (desk_scale) c.chain = ChainConfig::desk();
  return c;
}

void apply_setting(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const Entry* e = find(dotted_key);
  if (!e) throw DataError("unknown config key '" + dotted_key + "'");
  e->set(cfg, dotted_key, value);
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError("cannot read config " + path.string() + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw DataError("config key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) apply_setting(cfg, section + "." + key, value.data());
  }
}

void print_config(std::ostream& out, const RunConfig& cfg) {
  std::string section;
  for (const auto& [name, e] : table()) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << name.substr(dot + 1) << " = " << e.get(cfg) << '\n';
  }
}

}  // namespace aqcast::cli
