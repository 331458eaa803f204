// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "came/error.hpp"

namespace came {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw InvalidArgument("empty list element in '" + v + "'");
    out.push_back(item);
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

double parse_real(const std::string& v) {
  const auto slash = v.find('/');
  if (slash != std::string::npos) {
    const double num = parse_real(trim(v.substr(0, slash)));
    const double den = parse_real(trim(v.substr(slash + 1)));
    if (den == 0.0) throw InvalidArgument("division by zero in '" + v + "'");
    return num / den;
  }
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    throw InvalidArgument("'" + v + "' is not a finite real number");
  return d;
}

std::uint64_t parse_uint(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("'" + v + "' is not a non-negative integer");
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw InvalidArgument("'" + v + "' is out of range");
  return u;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidArgument("'" + v + "' is not a boolean (true/false)");
}

std::string fmt_real(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char b2[40];
    std::snprintf(b2, sizeof b2, "%.*g", prec, d);
    if (std::strtod(b2, nullptr) == d) return b2;
  }
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += f(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CAME_UINT(key, member)                                                               \
  {key, {[](RunConfig& c, const std::string& v) { c.member = parse_uint(v); },              \
         [](const RunConfig& c) { return std::to_string(c.member); }}}
#define CAME_REAL(key, member)                                                               \
  {key, {[](RunConfig& c, const std::string& v) { c.member = parse_real(v); },              \
         [](const RunConfig& c) { return fmt_real(c.member); }}}
#define CAME_BOOL(key, member)                                                               \
  {key, {[](RunConfig& c, const std::string& v) { c.member = parse_bool(v); },              \
         [](const RunConfig& c) { return fmt_bool(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      CAME_UINT("data.num_classes", data.num_classes),
      CAME_REAL("data.zipf_exponent", data.zipf_exponent),
      CAME_UINT("data.total", data.total),
      CAME_UINT("data.d_x", data.d_x),
      CAME_UINT("data.d_c", data.d_c),
      CAME_REAL("data.noise", data.noise),
      CAME_REAL("data.context_noise", data.context_noise),
      CAME_UINT("data.pairs_per_image", data.pairs_per_image),
      {"data.split_fractions",
       {[](RunConfig& c, const std::string& v) {
          const auto items = split_list(v);
          if (items.size() != 3) throw InvalidArgument("split_fractions needs three values (train, val, test)");
          for (std::size_t i = 0; i < 3; ++i) c.data.fractions[i] = parse_real(items[i]);
        },
        [](const RunConfig& c) {
          return fmt_real(c.data.fractions[0]) + ", " + fmt_real(c.data.fractions[1]) + ", " +
                 fmt_real(c.data.fractions[2]);
        }}},
      {"data.path",
       {[](RunConfig& c, const std::string& v) { c.dataset_path = v; },
        [](const RunConfig& c) { return c.dataset_path; }}},
      CAME_UINT("model.num_experts", model.num_experts),
      CAME_UINT("model.hidden_dim", model.hidden_dim),
      CAME_UINT("model.edge_dim", model.edge_dim),
      CAME_REAL("model.pw_temperature", model.pw_temperature),
      CAME_BOOL("model.ew_enabled", model.ew_enabled),
      CAME_BOOL("model.pw_enabled", model.pw_enabled),
      CAME_REAL("model.pw_aux_weight", model.pw_aux_weight),
      {"model.activation",
       {[](RunConfig& c, const std::string& v) {
          if (v == "tanh") c.model.activation = Activation::tanh;
          else if (v == "identity") c.model.activation = Activation::identity;
          else throw InvalidArgument("activation must be tanh or identity");
        },
        [](const RunConfig& c) { return std::string(c.model.activation == Activation::tanh ? "tanh" : "identity"); }}},
      {"loss.base",
       {[](RunConfig& c, const std::string& v) { c.loss.base = base_loss_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.loss.base)); }}},
      CAME_REAL("loss.focal_gamma", loss.focal_gamma),
      CAME_REAL("loss.ldam_c", loss.ldam_c),
      CAME_REAL("loss.cb_beta", loss.cb_beta),
      CAME_REAL("train.learning_rate", train.learning_rate),
      CAME_REAL("train.warmup_factor", train.warmup_factor),
      CAME_UINT("train.warmup_steps", train.warmup_steps),
      CAME_REAL("train.weight_decay", train.weight_decay),
      CAME_REAL("train.momentum", train.momentum),
      CAME_REAL("train.grad_clip_norm", train.grad_clip_norm),
      CAME_UINT("train.batch_size", train.batch_size),
      CAME_UINT("train.epochs", train.epochs),
      {"eval.ks",
       {[](RunConfig& c, const std::string& v) {
          c.eval.ks.clear();
          for (const auto& s : split_list(v)) c.eval.ks.push_back(parse_uint(s));
        },
        [](const RunConfig& c) { return join(c.eval.ks, [](std::size_t k) { return std::to_string(k); }); }}},
      CAME_BOOL("eval.graph_constraint", eval.graph_constraint),
      {"eval.split",
       {[](RunConfig& c, const std::string& v) { c.eval.split = split_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.eval.split)); }}},
      {"ablate.grids",
       {[](RunConfig& c, const std::string& v) {
          c.ablate.grids = split_list(v);
          for (const auto& g : c.ablate.grids)
            if (g != "modules" && g != "experts" && g != "gamma")
              throw InvalidArgument("unknown ablation grid '" + g + "' (modules, experts, gamma)");
        },
        [](const RunConfig& c) { return join(c.ablate.grids, [](const std::string& s) { return s; }); }}},
      {"ablate.expert_counts",
       {[](RunConfig& c, const std::string& v) {
          c.ablate.expert_counts.clear();
          for (const auto& s : split_list(v)) c.ablate.expert_counts.push_back(parse_uint(s));
        },
        [](const RunConfig& c) {
          return join(c.ablate.expert_counts, [](std::size_t k) { return std::to_string(k); });
        }}},
      {"ablate.gamma_values",
       {[](RunConfig& c, const std::string& v) {
          c.ablate.gamma_values.clear();
          for (const auto& s : split_list(v)) c.ablate.gamma_values.push_back(parse_real(s));
        },
        [](const RunConfig& c) { return join(c.ablate.gamma_values, fmt_real); }}},
      {"ablate.loss",
       {[](RunConfig& c, const std::string& v) { c.ablate.cell_loss.base = base_loss_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.ablate.cell_loss.base)); }}},
      CAME_REAL("ablate.focal_gamma", ablate.cell_loss.focal_gamma),
      CAME_REAL("ablate.ldam_c", ablate.cell_loss.ldam_c),
      CAME_REAL("ablate.cb_beta", ablate.cell_loss.cb_beta),
      CAME_UINT("ablate.jobs", ablate.jobs),
      CAME_UINT("gradcheck.points", gradcheck.points),
      CAME_REAL("gradcheck.tolerance", gradcheck.tolerance),
      CAME_REAL("gradcheck.step", gradcheck.step),
      CAME_UINT("gradcheck.num_classes", gradcheck.num_classes),
      CAME_UINT("gradcheck.d_x", gradcheck.d_x),
      CAME_UINT("gradcheck.d_c", gradcheck.d_c),
      CAME_UINT("gradcheck.hidden_dim", gradcheck.hidden_dim),
      CAME_UINT("gradcheck.edge_dim", gradcheck.edge_dim),
      {"gradcheck.inject_sign_flip",
       {[](RunConfig& c, const std::string& v) { c.gradcheck.inject_sign_flip = v; },
        [](const RunConfig& c) { return c.gradcheck.inject_sign_flip; }}},
      CAME_UINT("run.seed", seed),
      {"run.out",
       {[](RunConfig& c, const std::string& v) {
          if (v.empty()) throw InvalidArgument("run.out must not be empty");
          c.out_dir = v;
        },
        [](const RunConfig& c) { return c.out_dir; }}},
  };
  return table;
}

#undef CAME_UINT
#undef CAME_REAL
#undef CAME_BOOL

}  // namespace

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto& t = fields();
  const auto it = t.find(dotted_key);
  if (it == t.end()) throw InvalidArgument("unknown config key '" + dotted_key + "'");
  try {
    it->second.set(*this, value);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(dotted_key + ": " + e.what());
  }
}

std::string RunConfig::get(const std::string& dotted_key) const {
  const auto& t = fields();
  const auto it = t.find(dotted_key);
  if (it == t.end()) throw InvalidArgument("unknown config key '" + dotted_key + "'");
  return it->second.get(*this);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : fields()) out.push_back(k);
  return out;
}

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  ablate.cell_loss.validate();
  train.validate();
  if (data.num_classes < 3) throw InvalidArgument("data.num_classes must be >= 3");
  if (data.total < data.num_classes)
    throw InvalidArgument("data.total (" + std::to_string(data.total) + ") is smaller than data.num_classes (" +
                          std::to_string(data.num_classes) + ")");
  if (data.d_x < 2 || data.d_c < 2) throw InvalidArgument("data.d_x and data.d_c must be >= 2");
  if (!(data.noise >= 0.0) || !(data.context_noise >= 0.0)) throw InvalidArgument("data noise must be >= 0");
  if (!(data.zipf_exponent >= 0.0)) throw InvalidArgument("data.zipf_exponent must be >= 0");
  if (data.pairs_per_image == 0) throw InvalidArgument("data.pairs_per_image must be positive");
  double fsum = 0.0;
  for (double f : data.fractions) {
    if (!(f > 0.0)) throw InvalidArgument("data.split_fractions must be positive");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-9) throw InvalidArgument("data.split_fractions must sum to 1");
  if (eval.ks.empty()) throw InvalidArgument("eval.ks must not be empty");
  for (std::size_t k : eval.ks)
    if (k == 0) throw InvalidArgument("eval.ks entries must be >= 1");
  for (std::size_t n : ablate.expert_counts)
    if (n < 1 || n > 8) throw InvalidArgument("ablate.expert_counts entries must be in [1, 8]");
  for (double g : ablate.gamma_values)
    if (!(g >= 0.0 && g <= 10.0)) throw InvalidArgument("ablate.gamma_values entries must be in [0, 10]");
  if (gradcheck.points == 0) throw InvalidArgument("gradcheck.points must be positive");
  if (!(gradcheck.tolerance > 0.0) || !(gradcheck.step > 0.0))
    throw InvalidArgument("gradcheck tolerance and step must be positive");
  if (gradcheck.num_classes < 2 || gradcheck.d_x < 1 || gradcheck.d_c < 1 || gradcheck.hidden_dim < 1 ||
      gradcheck.edge_dim < 1)
    throw InvalidArgument("gradcheck dimensions too small");
}

SynthParams RunConfig::synth_params() const {
  SynthParams p = data;
  p.seed = seed;
  return p;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"data", "model", "loss", "train", "eval", "ablate", "gradcheck", "run"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ParseError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    if (section.empty()) throw ParseError("entry outside of a section", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    try {
      cfg.set(section + "." + key, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& key : RunConfig::keys()) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += key.substr(dot + 1) + " = " + c.get(key) + "\n";
  }
  return out;
}

}  // namespace came
