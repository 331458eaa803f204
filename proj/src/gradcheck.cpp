// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "came/error.hpp"
#include "came/losses.hpp"
#include "came/model.hpp"
#include "came/numerics.hpp"

namespace came {

std::vector<std::string> GradcheckResult::failing() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (!e.passed) out.push_back(e.check + ":" + e.group);
  return out;
}

std::string GradcheckResult::to_text() const {
  std::string out;
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-4s %-22s %-10s max_rel_err=%.3e points=%zu\n", e.passed ? "PASS" : "FAIL",
                  e.check.c_str(), e.group.c_str(), e.max_relative_error, e.points);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%s: %zu checks, tolerance %.1e\n", passed ? "ALL PASSED" : "FAILED",
                entries.size(), tolerance);
  out += buf;
  return out;
}

namespace {

constexpr BaseLoss kAllLosses[] = {BaseLoss::ce, BaseLoss::focal, BaseLoss::ldam, BaseLoss::class_balanced};

std::vector<std::uint64_t> random_counts(Rng& rng, std::size_t m) {
  std::vector<std::uint64_t> c(m);
  for (auto& v : c) v = 1 + rng.below(200);
  return c;
}

Vector random_vector(Rng& rng, std::size_t n, double scale) {
  Vector v(n);
  for (double& e : v) e = scale * rng.normal();
  return v;
}

struct Accumulator {
  std::map<std::string, GradcheckEntry> by_group;
  std::vector<std::string> order;
  void add(const std::string& check, const std::string& group, const GradientCheckReport& rep) {
    auto [it, fresh] = by_group.try_emplace(group);
    if (fresh) {
      order.push_back(group);
      it->second.check = check;
      it->second.group = group;
    }
    it->second.max_relative_error = std::max(it->second.max_relative_error, rep.max_relative_error);
    ++it->second.points;
  }
  void flush(GradcheckResult& res, double tol) {
    for (const auto& g : order) {
      auto e = by_group[g];
      e.passed = e.max_relative_error < tol;
      res.passed = res.passed && e.passed;
      res.entries.push_back(e);
    }
  }
};

// Splits flat analytic/numeric gradients by parameter group and records them.
void record_groups(Accumulator& acc, const std::string& check, const CameParams& shape, const Vector& analytic,
                   const Vector& numeric, double tol) {
  std::size_t pos = 0;
  std::map<std::string, std::pair<Vector, Vector>> groups;
  std::vector<std::string> order;
  for (const auto& t : shape.tensors()) {
    auto [it, fresh] = groups.try_emplace(t.group);
    if (fresh) order.push_back(t.group);
    const auto n = static_cast<std::ptrdiff_t>(t.tensor->size());
    it->second.first.insert(it->second.first.end(), analytic.begin() + static_cast<std::ptrdiff_t>(pos),
                            analytic.begin() + static_cast<std::ptrdiff_t>(pos) + n);
    it->second.second.insert(it->second.second.end(), numeric.begin() + static_cast<std::ptrdiff_t>(pos),
                             numeric.begin() + static_cast<std::ptrdiff_t>(pos) + n);
    pos += t.tensor->size();
  }
  for (const auto& g : order) acc.add(check, g, check_gradients(groups[g].first, groups[g].second, tol));
}

void apply_fault(const std::string& flip, const CameParams& shape, Vector& analytic) {
  if (flip.empty()) return;
  std::size_t pos = 0;
  bool found = false;
  for (const auto& t : shape.tensors()) {
    if (t.group == flip) {
      found = true;
      for (std::size_t k = 0; k < t.tensor->size(); ++k) analytic[pos + k] = -analytic[pos + k];
    }
    pos += t.tensor->size();
  }
  if (!found && flip != "logits") throw InvalidArgument("inject_sign_flip: unknown parameter group '" + flip + "'");
}

}  // namespace

GradcheckResult run_gradcheck(const GradcheckConfig& opts, const CameConfig& model, std::uint64_t seed) {
  model.validate();
  GradcheckResult res;
  res.tolerance = opts.tolerance;
  const std::size_t m = opts.num_classes;
  CameConfig cfg = model;
  cfg.hidden_dim = opts.hidden_dim;
  cfg.edge_dim = opts.edge_dim;

  // Base losses w.r.t. logits.
  for (BaseLoss base : kAllLosses) {
    Accumulator acc;
    Rng rng(mix_seed(seed, 100 + static_cast<std::uint64_t>(base)));
    const std::string check = std::string("loss.") + to_string(base);
    for (std::size_t p = 0; p < opts.points; ++p) {
      const auto counts = random_counts(rng, m);
      const Vector logits = random_vector(rng, m, 2.0);
      const auto target = static_cast<ClassId>(rng.below(m));
      LossConfig lc;
      lc.base = base;
      const BaseLossFn fn(lc, counts);
      Vector analytic = fn(logits, target).grad;
      if (opts.inject_sign_flip == "logits")
        for (double& g : analytic) g = -g;
      const Vector numeric =
          finite_diff_gradient([&](std::span<const double> z) { return fn(z, target).loss; }, logits, opts.step);
      acc.add(check, "logits", check_gradients(analytic, numeric, opts.tolerance));
    }
    acc.flush(res, opts.tolerance);
  }

  // Context-aware loss through the whole network, then the ensemble loss.
  auto network_check = [&](const std::string& check, BaseLoss base, bool ensemble, std::uint64_t stream) {
    Accumulator acc;
    Rng rng(mix_seed(seed, stream));
    for (std::size_t p = 0; p < opts.points; ++p) {
      CameParams params = CameParams::initialize(cfg, opts.d_x, opts.d_c, m, rng.next_u64());
      // Wider spread than the fan-in init so gates are far from uniform.
      for (auto& t : params.tensors())
        for (double& v : t.tensor->data()) v *= 2.0;
      const Vector x = random_vector(rng, opts.d_x, 1.0);
      const Vector c = random_vector(rng, opts.d_c, 1.0);
      const auto target = static_cast<ClassId>(rng.below(m));
      LossConfig lc;
      lc.base = base;
      const BaseLossFn fn(lc, random_counts(rng, m));

      auto objective = [&](const CameParams& prm) {
        const ForwardTrace t = forward(prm, cfg, x, c);
        if (ensemble) return fn(t.y_came, target).loss;
        return context_aware_loss(t.expert_logits, t.beta, target, fn).loss;
      };

      const ForwardTrace t = forward(params, cfg, x, c);
      BackwardSeed bseed;
      if (ensemble) {
        bseed.d_came = fn(t.y_came, target).grad;
      } else {
        auto ca = context_aware_loss(t.expert_logits, t.beta, target, fn);
        bseed.d_expert_logits = std::move(ca.expert_grads);
        bseed.d_beta = std::move(ca.beta_grad);
      }
      CameParams grads = CameParams::zeros(cfg, opts.d_x, opts.d_c, m);
      backward(params, cfg, x, c, t, bseed, grads);
      Vector analytic = grads.flatten();
      apply_fault(opts.inject_sign_flip, params, analytic);

      CameParams probe = params;
      const Vector numeric = finite_diff_gradient(
          [&](std::span<const double> flat) {
            probe.unflatten(flat);
            return objective(probe);
          },
          params.flatten(), opts.step);
      record_groups(acc, check, params, analytic, numeric, opts.tolerance);
    }
    acc.flush(res, opts.tolerance);
  };

  for (BaseLoss base : kAllLosses)
    network_check(std::string("came.") + to_string(base), base, false, 200 + static_cast<std::uint64_t>(base));
  network_check("came.ensemble", BaseLoss::ce, true, 300);
  return res;
}

}  // namespace came
