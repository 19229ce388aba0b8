#include "drc/report.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "drc/data_io.hpp"
#include "drc/error.hpp"

namespace drc {

double ReportGroup::mean() const {
  require(!errors.empty(), "report group has no values");
  return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
}

double ReportGroup::sd() const {
  if (errors.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double e : errors) ss += (e - m) * (e - m);
  return std::sqrt(ss / static_cast<double>(errors.size() - 1));
}

std::string ReportGroup::series() const {
  return snr_db ? architecture + " (snr " + *snr_db + " dB)" : architecture;
}

std::vector<ReportGroup> collect_groups(const std::vector<std::string>& jsonl_texts,
                                        const std::string& architecture_filter) {
  using Key = std::tuple<std::string, std::string, std::string, Index, Index>;
  std::map<Key, ReportGroup> groups;
  for (const auto& text : jsonl_texts) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, "results line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!rec.is_object() || rec.value("record", "") != "repeat") continue;
      try {
        ReportGroup g;
        g.architecture = rec.at("architecture").get<std::string>();
        if (!architecture_filter.empty() && g.architecture != architecture_filter) continue;
        g.task = rec.at("task").get<std::string>();
        g.layers = rec.at("layers").get<Index>();
        g.nodes = rec.at("nodes").get<Index>();
        if (rec.contains("snr_db") && !rec["snr_db"].is_null()) g.snr_db = format_double(rec["snr_db"].get<double>());
        const double err = rec.at("error_rate").get<double>();
        const Key key{g.task, g.architecture, g.snr_db.value_or(""), g.layers, g.nodes};
        auto [it, fresh] = groups.try_emplace(key, std::move(g));
        it->second.errors.push_back(err);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, "results line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  require(!groups.empty(), "no result records matched the selection");
  std::vector<ReportGroup> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

std::string report_table(const std::vector<ReportGroup>& groups) {
  require(!groups.empty(), "no result records matched the selection");
  std::ostringstream os;
  os << "architecture\ttask\tsnr_db\tlayers\tnodes\ttotal_nodes\trepeats\tmean_error\tsd_error\n";
  for (const auto& g : groups)
    os << g.architecture << '\t' << g.task << '\t' << g.snr_db.value_or("none") << '\t' << g.layers << '\t'
       << g.nodes << '\t' << g.total_nodes() << '\t' << g.errors.size() << '\t' << format_double(g.mean()) << '\t'
       << format_double(g.sd()) << '\n';
  return os.str();
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::string tick_label(double v, double step) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9))));
  os << v;
  return os.str();
}

// A "nice" tick step covering span with about `target` ticks.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string report_svg(const std::vector<ReportGroup>& groups, const std::string& title) {
  require(!groups.empty(), "no result records matched the selection");
  std::map<std::string, std::vector<const ReportGroup*>> series;
  double x_max = 0.0, y_max = 0.0;
  for (const auto& g : groups) {
    series[g.series()].push_back(&g);
    x_max = std::max(x_max, static_cast<double>(g.total_nodes()));
    y_max = std::max(y_max, g.mean() + g.sd());
  }
  for (auto& [name, pts] : series)
    std::sort(pts.begin(), pts.end(), [](const ReportGroup* a, const ReportGroup* b) { return a->total_nodes() < b->total_nodes(); });

  const double width = 640, height = 420, left = 70, right = 180, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  const double x_step = tick_step(std::max(1.0, x_max), 6);
  const double x_hi = std::ceil(std::max(1.0, x_max) / x_step) * x_step;
  const double y_step = tick_step(std::max(1e-3, y_max), 5);
  const double y_hi = std::ceil(std::max(1e-3, y_max) / y_step) * y_step;
  auto px = [&](double x) { return left + pw * x / x_hi; };
  auto py = [&](double y) { return top + ph * (1.0 - y / y_hi); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
  os << "<g stroke=\"#444\" fill=\"none\"><line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
     << "\" y2=\"" << top + ph << "\"/><line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << top + ph << "\"/></g>\n";
  for (double x = 0.0; x <= x_hi + 1e-9; x += x_step)
    os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(px(x)) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"#444\"/><text x=\"" << num(px(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << tick_label(x, x_step) << "</text>\n";
  for (double y = 0.0; y <= y_hi + 1e-12; y += y_step)
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << num(py(y)) << "\" x2=\"" << left << "\" y2=\"" << num(py(y))
       << "\" stroke=\"#444\"/><text x=\"" << left - 8 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
       << tick_label(y, y_step) << "</text>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\">total nodes (layers x nodes per layer)</text>\n";
  os << "<text transform=\"translate(18 " << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">error rate (mean, bars +-1 sd)</text>\n";

  std::size_t colour = 0;
  for (const auto& [name, pts] : series) {
    const char* c = palette[colour % (sizeof(palette) / sizeof(palette[0]))];
    os << "<g class=\"series\" data-name=\"" << escape(name) << "\" stroke=\"" << c << "\" fill=\"" << c << "\">\n";
    std::string path;
    for (const auto* g : pts) path += (path.empty() ? "" : " ") + num(px(static_cast<double>(g->total_nodes()))) + "," + num(py(g->mean()));
    os << "<polyline fill=\"none\" stroke-width=\"2\" points=\"" << path << "\"/>\n";
    for (const auto* g : pts) {
      const double x = px(static_cast<double>(g->total_nodes()));
      os << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(g->mean() - g->sd())) << "\" x2=\"" << num(x) << "\" y2=\""
         << num(py(g->mean() + g->sd())) << "\"/>";
      os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(g->mean())) << "\" r=\"3.5\"/>\n";
    }
    const double ly = top + 10 + 20.0 * static_cast<double>(colour);
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
       << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\" stroke=\"none\" fill=\"#000\">"
       << escape(name) << "</text>\n</g>\n";
    ++colour;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace drc
