// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/report.hpp"

#include <cstdio>

namespace came {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string percent(double v) { return fmt("%.1f", 100.0 * v); }

std::string per_class_recall_csv(const EvalReport& r) {
  std::string out = "class_id,name,group,train_count,gt_count,present";
  for (const auto& a : r.at) out += ",recall@" + std::to_string(a.k);
  out += "\n";
  for (std::size_t c = 0; c < r.num_classes; ++c) {
    out += std::to_string(c) + "," + csv_escape(r.class_names[c]) + "," + to_string(r.partition.group_of[c]) + "," +
           std::to_string(r.train_count[c]) + "," + std::to_string(r.gt_count[c]) + "," +
           (r.present[c] ? "true" : "false");
    for (const auto& a : r.at) out += "," + (r.present[c] ? fmt("%.6f", a.per_class_recall[c]) : std::string());
    out += "\n";
  }
  return out;
}

std::string per_class_recall_svg(const EvalReport& r) {
  const KMetrics& top = r.at.back();
  const std::size_t m = r.num_classes;
  const double bar = 14.0, left = 50.0, top_pad = 30.0, plot_h = 200.0;
  const double width = left + bar * static_cast<double>(m) + 20.0;
  const double height = top_pad + plot_h + 110.0;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", width) + "\" height=\"" +
       fmt("%.0f", height) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s += "<text x=\"" + fmt("%.1f", left) + "\" y=\"18\" font-size=\"12\">Per-class recall@" + std::to_string(top.k) +
       " (mR=" + percent(top.mean_recall) + ", R=" + percent(top.recall) + ")</text>\n";
  static const char* shade[] = {"#dbe8f6", "#e6f2dc", "#f8e3d6"};
  // Group bands along the frequency axis.
  std::size_t pos = 0;
  for (int g = 0; g < 3; ++g) {
    const auto& ids = r.partition.members(static_cast<ClassGroup>(g));
    if (ids.empty()) continue;
    const double x0 = left + bar * static_cast<double>(pos);
    s += "<rect x=\"" + fmt("%.1f", x0) + "\" y=\"" + fmt("%.1f", top_pad) + "\" width=\"" +
         fmt("%.1f", bar * static_cast<double>(ids.size())) + "\" height=\"" + fmt("%.1f", plot_h) + "\" fill=\"" +
         shade[g] + "\"/>\n";
    s += "<text x=\"" + fmt("%.1f", x0 + 2.0) + "\" y=\"" + fmt("%.1f", top_pad + 12.0) + "\">" +
         to_string(static_cast<ClassGroup>(g)) + "</text>\n";
    pos += ids.size();
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = top_pad + plot_h - plot_h * tick / 4.0;
    s += "<line x1=\"" + fmt("%.1f", left - 4.0) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" + fmt("%.1f", left) +
         "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + fmt("%.1f", left - 6.0) + "\" y=\"" + fmt("%.1f", y + 3.0) + "\" text-anchor=\"end\">" +
         fmt("%.2f", tick / 4.0) + "</text>\n";
  }
  for (std::size_t rank = 0; rank < r.partition.frequency_order.size(); ++rank) {
    const ClassId c = r.partition.frequency_order[rank];
    const double x = left + bar * static_cast<double>(rank);
    const double v = r.present[c] ? top.per_class_recall[c] : 0.0;
    const double h = plot_h * v;
    s += "<rect x=\"" + fmt("%.1f", x + 1.0) + "\" y=\"" + fmt("%.1f", top_pad + plot_h - h) + "\" width=\"" +
         fmt("%.1f", bar - 2.0) + "\" height=\"" + fmt("%.1f", h) + "\" fill=\"" +
         (r.present[c] ? "#3b6ea5" : "#bbbbbb") + "\"><title>" + xml_escape(r.class_names[c]) + ": " +
         (r.present[c] ? fmt("%.4f", v) : std::string("absent")) + "</title></rect>\n";
    const double tx = x + bar / 2.0 + 3.0, ty = top_pad + plot_h + 6.0;
    s += "<text x=\"" + fmt("%.1f", tx) + "\" y=\"" + fmt("%.1f", ty) + "\" transform=\"rotate(60 " +
         fmt("%.1f", tx) + " " + fmt("%.1f", ty) + ")\" font-size=\"8\">" + xml_escape(r.class_names[c]) +
         "</text>\n";
  }
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top_pad + plot_h) + "\" x2=\"" +
       fmt("%.1f", left + bar * static_cast<double>(m)) + "\" y2=\"" + fmt("%.1f", top_pad + plot_h) +
       "\" stroke=\"#333\"/>\n";
  s += "</svg>\n";
  return s;
}

std::string summary_markdown(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? percent(*v) : std::string("absent"); };
  std::string s = "| K | R@K | mR@K | head | body | tail | var/m |\n|---|---|---|---|---|---|---|\n";
  for (const auto& a : r.at) {
    s += "| " + std::to_string(a.k) + " | " + percent(a.recall) + " | " + percent(a.mean_recall) + " | " +
         opt(a.groups.head) + " | " + opt(a.groups.body) + " | " + opt(a.groups.tail) + " | " +
         fmt("%.1f", a.var_over_mean.value) + (a.var_over_mean.zero_mean ? " (zero mean)" : "") + " |\n";
  }
  s += "\nMean: " + fmt("%.2f", r.mean) + "\n";
  return s;
}

}  // namespace came
