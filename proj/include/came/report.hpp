// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "came/metrics.hpp"

namespace came {

/// Header plus one row per class, ordered by class id. Recalls are printed
/// with 6 decimals; absent classes leave their recall cells empty.
std::string per_class_recall_csv(const EvalReport& r);

/// Bar chart of per-class recall at the largest K, classes ordered by
/// training frequency, head/body/tail ranges shaded.
std::string per_class_recall_svg(const EvalReport& r);

/// Human-readable summary in Markdown.
std::string summary_markdown(const EvalReport& r);

/// "%.1f" of a [0,1] value scaled to percent.
std::string percent(double v);

}  // namespace came
