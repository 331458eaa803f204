// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/ablate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "came/error.hpp"
#include "came/report.hpp"
#include "came/train.hpp"

namespace came {

namespace {

std::string fmt_gamma(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", g);
  return buf;
}

bool wants(const RunConfig& cfg, const char* grid) {
  return std::find(cfg.ablate.grids.begin(), cfg.ablate.grids.end(), grid) != cfg.ablate.grids.end();
}

}  // namespace

std::vector<AblationCell> ablation_grid(const RunConfig& cfg) {
  std::vector<AblationCell> cells;
  const CameConfig base = cfg.model;
  const LossConfig cell_loss = cfg.ablate.cell_loss;
  auto make = [&](std::size_t n, bool ew, bool pw, double gamma) {
    CameConfig c = base;
    c.num_experts = n;
    c.ew_enabled = ew;
    c.pw_enabled = pw;
    c.pw_temperature = gamma;
    return c;
  };
  if (wants(cfg, "modules")) {
    cells.push_back({"modules", "Baseline", make(1, false, false, base.pw_temperature), LossConfig{}});
    cells.push_back({"modules", "ME", make(base.num_experts, false, false, base.pw_temperature), cell_loss});
    cells.push_back({"modules", "ME+EW", make(base.num_experts, true, false, base.pw_temperature), cell_loss});
    cells.push_back({"modules", "ME+EW+PW", make(base.num_experts, true, true, base.pw_temperature), cell_loss});
  }
  if (wants(cfg, "experts"))
    for (std::size_t n : cfg.ablate.expert_counts)
      cells.push_back({"experts", std::to_string(n), make(n, true, false, base.pw_temperature), cell_loss});
  if (wants(cfg, "gamma"))
    for (double g : cfg.ablate.gamma_values)
      cells.push_back({"gamma", fmt_gamma(g), make(base.num_experts, true, true, g), cell_loss});
  return cells;
}

std::vector<AblationRow> run_ablation(const DatasetSplit& ds, const RunConfig& cfg) {
  const auto cells = ablation_grid(cfg);
  std::vector<AblationRow> rows(cells.size());
  // Map every cell onto its first identical configuration.
  std::vector<std::size_t> unique_of(cells.size());
  std::vector<std::size_t> uniques;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i].cell = cells[i];
    std::size_t u = uniques.size();
    for (std::size_t k = 0; k < uniques.size(); ++k) {
      const auto& o = cells[uniques[k]];
      if (o.model == cells[i].model && o.loss == cells[i].loss) {
        u = k;
        break;
      }
    }
    if (u == uniques.size()) uniques.push_back(i);
    unique_of[i] = u;
  }

  const auto& eval_part = ds.test.empty() ? ds.val : ds.test;
  if (eval_part.empty()) throw InvalidArgument("ablate: dataset has neither test nor val instances");

  std::vector<AblationRow> results(uniques.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < uniques.size(); u = next++) {
      const auto& cell = cells[uniques[u]];
      AblationRow& row = results[u];
      row.cell = cell;
      row.seed = mix_seed(cfg.seed, u);
      try {
        TrainConfig tc = cfg.train_config();
        tc.seed = row.seed;
        FitOptions fo;
        fo.evaluate_val = false;
        fo.eval_ks = cfg.eval.ks;
        fo.graph_constraint = cfg.eval.graph_constraint;
        const FitResult fr = fit(ds, cell.model, cell.loss, tc, fo);
        row.report = evaluate(fr.params, cell.model, eval_part, cfg.eval.ks, ds.vocabulary, cfg.eval.graph_constraint);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  std::size_t jobs = cfg.ablate.jobs ? cfg.ablate.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, uniques.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& res = results[unique_of[i]];
    rows[i].seed = res.seed;
    rows[i].report = res.report;
    rows[i].error = res.error;
  }
  return rows;
}

std::string ablation_markdown(const std::vector<AblationRow>& rows, const std::vector<std::size_t>& ks_in) {
  std::vector<std::size_t> ks = ks_in;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::string kcol;
  for (std::size_t i = 0; i < ks.size(); ++i) kcol += (i ? "/" : "") + std::to_string(ks[i]);

  std::string out;
  for (const char* grid : {"modules", "experts", "gamma"}) {
    const bool any = std::any_of(rows.begin(), rows.end(), [&](const AblationRow& r) { return r.cell.grid == grid; });
    if (!any) continue;
    const std::string g = grid;
    if (!out.empty()) out += "\n";
    std::string lead;
    if (g == "modules") {
      out += "### Modules\n\n";
      lead = "| Model ";
    } else if (g == "experts") {
      out += "### Number of experts\n\n";
      lead = "| ME | EW ";
    } else {
      out += "### Predicate-weighting temperature\n\n";
      lead = "| gamma ";
    }
    out += lead + "| mR@" + kcol + " | R@" + kcol + " | Mean |\n";
    out += g == "experts" ? "|---|---|---|---|---|\n" : "|---|---|---|---|\n";
    for (const auto& r : rows) {
      if (r.cell.grid != g) continue;
      out += g == "experts" ? "| " + r.cell.label + " | yes " : "| " + r.cell.label + " ";
      if (!r.report) {
        out += "| failed: " + r.error + " | | |\n";
        continue;
      }
      std::string mr, rr;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const auto& a = r.report->metrics_at(ks[i]);
        mr += (i ? " / " : "") + percent(a.mean_recall);
        rr += (i ? " / " : "") + percent(a.recall);
      }
      char mean[32];
      std::snprintf(mean, sizeof mean, "%.1f", r.report->mean);
      out += "| " + mr + " | " + rr + " | " + mean + " |\n";
    }
  }
  return out;
}

}  // namespace came
