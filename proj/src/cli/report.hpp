#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lorentzscope::cli {

struct ReportArgs {
  std::string run_dir;
  bool html = false;
  std::string out;
};

// Gathers the manifests under a run directory into one Markdown or HTML
// document with component plots, fit overlays, distributions and the
// strength-function table. Sections without artifacts are flagged.
int cmd_report(const ReportArgs& args, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace lorentzscope::cli
