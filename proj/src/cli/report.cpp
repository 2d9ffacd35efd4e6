#include "cli/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/common.hpp"
#include "lorentzscope/error.hpp"
#include "lorentzscope/io.hpp"

namespace lorentzscope::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct Entry {
  fs::path path;
  fs::path dir;
  Json json;

  std::string command() const { return json.value("command", std::string{}); }

  std::vector<fs::path> outputs(std::string_view extension) const {
    std::vector<fs::path> out;
    for (const auto& o : json.value("outputs", Json::array())) {
      const fs::path p = dir / o.at("path").get<std::string>();
      if (extension.empty() || p.extension() == extension) out.push_back(p);
    }
    return out;
  }
};

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Document {
 public:
  Document(bool html, fs::path out_dir) : html_(html), out_dir_(std::move(out_dir)) {}

  void heading(int level, const std::string& text) {
    if (html_) {
      body_ += fmt::format("<h{0}>{1}</h{0}>\n", level, html_escape(text));
    } else {
      body_ += fmt::format("{} {}\n\n", std::string(static_cast<std::size_t>(level), '#'), text);
    }
  }

  void paragraph(const std::string& text) {
    body_ += html_ ? fmt::format("<p>{}</p>\n", html_escape(text)) : text + "\n\n";
  }

  void missing(const std::string& text) {
    body_ += html_ ? fmt::format("<p class=\"missing\"><strong>Missing:</strong> {}</p>\n", html_escape(text))
                   : fmt::format("> **Missing:** {}\n\n", text);
  }

  void table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    if (html_) {
      body_ += "<table>\n<tr>";
      for (const auto& h : header) body_ += "<th>" + html_escape(h) + "</th>";
      body_ += "</tr>\n";
      for (const auto& row : rows) {
        body_ += "<tr>";
        for (const auto& cell : row) body_ += "<td>" + html_escape(cell) + "</td>";
        body_ += "</tr>\n";
      }
      body_ += "</table>\n";
      return;
    }
    auto line = [](const std::vector<std::string>& cells) {
      std::string s = "|";
      for (const auto& c : cells) s += " " + c + " |";
      return s + "\n";
    };
    body_ += line(header);
    body_ += line(std::vector<std::string>(header.size(), "---"));
    for (const auto& row : rows) body_ += line(row);
    body_ += "\n";
  }

  void figure(const fs::path& svg, const std::string& caption) {
    if (html_) {
      body_ += fmt::format("<figure>\n{}<figcaption>{}</figcaption>\n</figure>\n", read_file(svg),
                           html_escape(caption));
    } else {
      body_ += fmt::format("![{}]({})\n\n", caption, relative_to_out(svg));
    }
  }

  std::string relative_to_out(const fs::path& p) const {
    std::error_code ec;
    const auto rel = fs::relative(p, out_dir_, ec);
    return (ec || rel.empty() ? p : rel).generic_string();
  }

  std::string finish(const std::string& title) const {
    if (!html_) return fmt::format("# {}\n\n{}", title, body_);
    return fmt::format(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{0}</title>\n"
        "<style>body{{font-family:sans-serif;max-width:900px;margin:auto}}"
        "table{{border-collapse:collapse}}td,th{{border:1px solid #999;padding:2px 6px}}"
        ".missing{{color:#a00}}</style>\n</head>\n<body>\n<h1>{0}</h1>\n{1}</body>\n</html>\n",
        html_escape(title), body_);
  }

 private:
  bool html_;
  fs::path out_dir_;
  std::string body_;
};

std::vector<Entry> load_manifests(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw PreconditionError(fmt::format("'{}' is not a directory", run_dir.string()));
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 14 && name.ends_with(".manifest.json")) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Entry> out;
  for (const auto& p : paths) {
    Entry entry{p, p.parent_path(), io::read_json_file(p)};
    if (entry.command() == "report") continue;
    out.push_back(std::move(entry));
  }
  return out;
}

std::string arguments_of(const Entry& e) {
  std::string s;
  for (const auto& a : e.json.value("arguments", Json::array())) {
    if (!s.empty()) s += ' ';
    s += a.get<std::string>();
  }
  return s;
}

std::string num(const Json& j) { return j.is_number() ? short_number(j.get<double>()) : "n/a"; }

void components_section(Document& doc, const std::vector<const Entry*>& runs) {
  doc.heading(2, "Components");
  if (runs.empty()) {
    doc.missing("no decompose run in this directory.");
    return;
  }
  for (const auto* e : runs) {
    doc.paragraph(fmt::format("Mode {}, unit scale {}, reconstruction error {}.", e->json.value("mode", "?"),
                              num(e->json.value("unit_scale", Json())),
                              num(e->json.value("reconstruction_error", Json()))));
    for (const auto& svg : e->outputs(".svg")) doc.figure(svg, "Structural components");
  }
}

void fits_section(Document& doc, const std::vector<const Entry*>& runs) {
  doc.heading(2, "Fit overlays");
  if (runs.empty()) {
    doc.missing("no fit run in this directory.");
    return;
  }
  for (const auto* e : runs) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& f : e->json.value("fits", Json::array())) {
      rows.push_back({fmt::format("{} to {}", num(f.at("window").at(0)), num(f.at("window").at(1))),
                      std::to_string(f.value("states", std::size_t{0})), f.value("converged", false) ? "yes" : "no",
                      f.value("stop_reason", std::string{})});
    }
    doc.table({"window (s)", "states", "converged", "stop reason"}, rows);
    for (const auto& svg : e->outputs(".svg")) doc.figure(svg, fmt::format("Fit overlay {}", svg.stem().string()));
  }
}

std::optional<Json> stats_json(const Entry& e) {
  for (const auto& p : e.outputs(".json")) {
    if (p.filename() == "stats.json") return io::read_json_file(p);
  }
  return std::nullopt;
}

std::string fit_line(const Json& ensemble) {
  const auto fit = ensemble.value("fit", Json());
  if (fit.is_null()) return fmt::format("n = {}, no fit ({})", num(ensemble.value("n", Json())),
                                        ensemble.value("fit_note", std::string("too few values")));
  std::string params;
  for (const auto& [k, v] : fit.at("params").items()) params += fmt::format(" {}={}", k, num(v));
  return fmt::format("n = {}, {}{}, KS D = {}, p = {}", num(fit.at("n")), fit.at("family").get<std::string>(), params,
                     num(fit.at("ks_statistic")), num(fit.at("ks_pvalue")));
}

void distributions_section(Document& doc, const std::vector<const Entry*>& runs) {
  doc.heading(2, "Distributions");
  if (runs.empty()) {
    doc.missing("no stats run in this directory.");
    return;
  }
  for (const auto* e : runs) {
    if (const auto j = stats_json(*e)) {
      doc.paragraph("Spacings: " + fit_line(j->at("spacings")) + ".");
      doc.paragraph("Widths: " + fit_line(j->at("widths")) + ".");
      doc.paragraph(j->value("ks_note", std::string{}) + ".");
      if (j->contains("naming_note")) doc.paragraph("Note: " + j->at("naming_note").get<std::string>() + ".");
    }
    for (const auto& svg : e->outputs(".svg")) doc.figure(svg, svg.stem().string());
  }
}

void strength_section(Document& doc, const std::vector<const Entry*>& runs) {
  doc.heading(2, "Strength function");
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> cv;
  auto row = [](const std::string& label, const Json& r) {
    return std::vector<std::string>{label,
                                    num(r.at("window").at(0)) + " to " + num(r.at("window").at(1)),
                                    num(r.at("state_count")),
                                    num(r.at("mean_spacing")),
                                    num(r.at("mean_width")),
                                    num(r.at("ratio")),
                                    r.at("ericson_regime").get<bool>() ? "yes" : "no"};
  };
  for (const auto* e : runs) {
    const auto j = stats_json(*e);
    if (!j) continue;
    rows.push_back(row("pooled", j->at("strength_function")));
    if (j->contains("rolling_ratio")) {
      std::size_t i = 0;
      for (const auto& r : j->at("rolling_ratio").at("reports")) rows.push_back(row(fmt::format("window {}", ++i), r));
      cv.push_back(num(j->at("rolling_ratio").at("coefficient_of_variation")));
    }
  }
  if (rows.empty()) {
    doc.missing("no strength-function results in this directory.");
    return;
  }
  doc.table({"scope", "window (s)", "states", "<D> (s)", "<width> (s)", "ratio", "Ericson regime"}, rows);
  for (const auto& c : cv) doc.paragraph(fmt::format("Rolling ratio coefficient of variation: {}.", c));

  std::vector<std::vector<std::string>> averages;
  for (const auto* e : runs) {
    const auto j = stats_json(*e);
    if (!j || !j->contains("window_average")) continue;
    for (const auto& a : j->at("window_average")) {
      averages.push_back({num(a.at("window").at(0)) + " to " + num(a.at("window").at(1)), num(a.at("grid_mean")),
                          num(a.at("analytic_estimate"))});
    }
  }
  if (!averages.empty()) {
    doc.paragraph("Window mean of the fitted model beside the estimate baseline + (pi/2) <M> <width> / <D>.");
    doc.table({"window (s)", "grid mean", "estimate"}, averages);
  }
}

}  // namespace

int cmd_report(const ReportArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  const fs::path run_dir = a.run_dir;
  const auto entries = load_manifests(run_dir);
  if (entries.empty()) throw PreconditionError(fmt::format("no manifests found in '{}'", run_dir.string()));
  for (const auto& e : entries) {
    for (const auto& p : e.outputs("")) {
      if (!fs::exists(p)) {
        throw PreconditionError(
            fmt::format("'{}' lists '{}', which is missing", e.path.generic_string(), p.generic_string()));
      }
    }
  }

  const fs::path target = a.out.empty() ? run_dir / (a.html ? "report.html" : "report.md") : fs::path(a.out);
  const fs::path out_dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  ensure_directory(out_dir);

  std::vector<const Entry*> decomposes, fits, stats, synths;
  for (const auto& e : entries) {
    const auto c = e.command();
    if (c == "decompose") decomposes.push_back(&e);
    if (c == "fit") fits.push_back(&e);
    if (c == "stats") stats.push_back(&e);
    if (c == "synth") synths.push_back(&e);
  }

  Document doc(a.html, out_dir);
  doc.heading(2, "Runs");
  std::vector<std::vector<std::string>> runs;
  for (const auto& e : entries) {
    runs.push_back({e.command(), doc.relative_to_out(e.path), arguments_of(e), e.json.value("version", "?")});
  }
  doc.table({"command", "manifest", "arguments", "version"}, runs);
  components_section(doc, decomposes);
  fits_section(doc, fits);
  distributions_section(doc, stats);
  strength_section(doc, stats);

  Manifest manifest("report", argv);
  for (const auto& e : entries) manifest.add_input(e.path);
  emit(manifest, target, doc.finish("lorentzscope report"));
  manifest.write(out_dir);

  std::size_t missing = 0;
  for (const auto* group : {&decomposes, &fits, &stats}) missing += group->empty() ? 1 : 0;
  if (missing > 0) err << fmt::format("lorentzscope report: {} section(s) have no artifacts\n", missing);
  out << fmt::format("report written to {}\n", target.generic_string());
  return kExitOk;
}

}  // namespace lorentzscope::cli
