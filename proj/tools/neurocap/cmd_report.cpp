#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap::cli {
namespace {

constexpr double kWidth = 640;
constexpr double kPanelHeight = 240;
constexpr double kMargin = 56;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Table read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else if (cells.size() != t.header.size()) {
      throw DataError(path.string() + ": row with " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(t.header.size()));
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw DataError(path.string() + ": empty file");
  return t;
}

double parse_number(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(path.string() + ": bad number \"" + s + "\"");
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

using Series = std::vector<std::pair<double, double>>;

// One panel: axes, y range labels and a polyline per series.
void line_panel(std::ostringstream& svg, double top, const std::string& title,
                const std::map<std::string, Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& [name, pts] : series) {
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double w = kWidth - 2 * kMargin;
  const double h = kPanelHeight - 2 * kMargin;
  const auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * w; };
  const auto py = [&](double y) { return top + kMargin + (1 - (y - y0) / (y1 - y0)) * h; };

  svg << "<text x=\"" << kMargin << "\" y=\"" << top + 24 << "\" font-size=\"14\">" << escape(title) << "</text>\n";
  svg << "<rect x=\"" << kMargin << "\" y=\"" << top + kMargin << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<text x=\"4\" y=\"" << py(y1) + 4 << "\" font-size=\"10\">" << fmt(y1) << "</text>\n";
  svg << "<text x=\"4\" y=\"" << py(y0) + 4 << "\" font-size=\"10\">" << fmt(y0) << "</text>\n";
  svg << "<text x=\"" << px(x0) << "\" y=\"" << py(y0) + 14 << "\" font-size=\"10\">" << fmt(x0) << "</text>\n";
  svg << "<text x=\"" << px(x1) - 20 << "\" y=\"" << py(y0) + 14 << "\" font-size=\"10\">" << fmt(x1)
      << "</text>\n";
  std::size_t color = 0;
  for (const auto& [name, pts] : series) {
    const char* stroke = kPalette[color % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" points=\"";
    for (const auto& [x, y] : pts) svg << fmt(px(x)) << "," << fmt(py(y)) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << kWidth - kMargin + 4 - 120 << "\" y=\"" << top + kMargin + 12 + 12 * color
        << "\" font-size=\"10\" fill=\"" << stroke << "\">" << escape(name) << "</text>\n";
    ++color;
  }
}

std::string document(double height, const std::string& body) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
  return svg.str();
}

// Training logs: one panel per metric, one line per (file, split).
std::string loss_curves(const std::vector<std::pair<std::string, Table>>& logs) {
  std::map<std::string, std::map<std::string, Series>> panels;
  for (const auto& [name, t] : logs) {
    for (const auto& row : t.rows) {
      const std::string label = logs.size() > 1 ? name + " " + row[1] : row[1];
      panels[row[2]][label].emplace_back(parse_number(row[0], name), parse_number(row[3], name));
    }
  }
  std::ostringstream body;
  double top = 0;
  for (const auto& [metric, series] : panels) {
    line_panel(body, top, metric, series);
    top += kPanelHeight;
  }
  return document(std::max(top, kPanelHeight), body.str());
}

// Metric reports: per-sample score bars with the corpus score as a line.
std::string score_bars(const std::vector<std::pair<std::string, Table>>& reports) {
  std::map<std::string, std::pair<std::vector<double>, double>> panels;
  for (const auto& [name, t] : reports) {
    for (const auto& row : t.rows) {
      const std::string label = reports.size() > 1 ? name + " " + row[0] : row[0];
      const double v = parse_number(row[2], name);
      if (row[1] == "corpus") {
        panels[label].second = v;
      } else {
        panels[label].first.push_back(v);
      }
    }
  }
  std::ostringstream body;
  double top = 0;
  const double w = kWidth - 2 * kMargin;
  const double h = kPanelHeight - 2 * kMargin;
  for (const auto& [label, data] : panels) {
    const auto& [scores, corpus] = data;
    body << "<text x=\"" << kMargin << "\" y=\"" << top + 24 << "\" font-size=\"14\">" << escape(label)
         << " (corpus " << fmt(corpus) << ")</text>\n";
    body << "<rect x=\"" << kMargin << "\" y=\"" << top + kMargin << "\" width=\"" << w << "\" height=\"" << h
         << "\" fill=\"none\" stroke=\"#888\"/>\n";
    const double bar = scores.empty() ? w : w / double(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double v = std::clamp(scores[i], 0.0, 1.0);
      body << "<rect x=\"" << fmt(kMargin + i * bar) << "\" y=\"" << fmt(top + kMargin + (1 - v) * h)
           << "\" width=\"" << fmt(std::max(bar - 1, 0.5)) << "\" height=\"" << fmt(v * h)
           << "\" fill=\"#1f77b4\"/>\n";
    }
    const double cy = top + kMargin + (1 - std::clamp(corpus, 0.0, 1.0)) * h;
    body << "<line x1=\"" << kMargin << "\" x2=\"" << kMargin + w << "\" y1=\"" << fmt(cy) << "\" y2=\"" << fmt(cy)
         << "\" stroke=\"#d62728\"/>\n";
    body << "<text x=\"4\" y=\"" << top + kMargin + 4 << "\" font-size=\"10\">1</text>\n";
    body << "<text x=\"4\" y=\"" << top + kMargin + h + 4 << "\" font-size=\"10\">0</text>\n";
    top += kPanelHeight;
  }
  return document(std::max(top, kPanelHeight), body.str());
}

}  // namespace

void run_report(const ReportOptions& o) {
  if (o.inputs.empty()) throw ConfigError("report needs at least one CSV input");
  const std::vector<std::string> log_header{"epoch", "split", "metric", "value"};
  const std::vector<std::string> metric_header{"metric", "id", "score"};
  std::vector<std::pair<std::string, Table>> logs;
  std::vector<std::pair<std::string, Table>> reports;
  for (const auto& path : o.inputs) {
    Table t = read_csv(path);
    if (t.header == log_header) {
      logs.emplace_back(path.string(), std::move(t));
    } else if (t.header == metric_header) {
      reports.emplace_back(path.string(), std::move(t));
    } else {
      throw DataError(path.string() + ": not a training log or metric report");
    }
  }
  StagedDirectory out(o.out);
  if (!logs.empty()) write_file_atomic(out / "loss_curves.svg", loss_curves(logs));
  if (!reports.empty()) write_file_atomic(out / "scores.svg", score_bars(reports));
  out.commit();
  std::cout << "wrote report to " << o.out.string() << "\n";
}

}  // namespace neurocap::cli
