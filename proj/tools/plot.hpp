#pragma once

#include "penseg/simlab.hpp"

#include <string>

namespace penseg::cli {

/// Rows of the sweep as tab-separated columns with a header line.
std::string sweep_tsv(const SweepTable& table);

/// Static vector plot of the error quantile and the reference line against
/// log T.
std::string sweep_svg(const SweepTable& table);

/// One row per replicate: index, m_hat, event, objective, changepoints.
std::string replicates_tsv(const McReport& report);

}  // namespace penseg::cli
