#include "nmg/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nmg/num.hpp"

namespace nmg {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read csv file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      if (header) *header = cells;
      first = false;
    } else {
      rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error("csv file has no header: " + path);
  return rows;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// SVG helpers -----------------------------------------------------------

struct Panel {
  double x, y, w, h;
  double tmin, tmax, ymin, ymax;

  double px(double t) const { return x + (t - tmin) / (tmax - tmin) * w; }
  double py(double v) const { return y + h - (v - ymin) / (ymax - ymin) * h; }
};

void append_polyline(std::string& svg, const Panel& p,
                     const std::vector<std::pair<double, double>>& pts,
                     const char* color) {
  svg += "<polyline fill=\"none\" stroke=\"";
  svg += color;
  svg += "\" stroke-width=\"1\" points=\"";
  for (const auto& [t, v] : pts) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", p.px(t),
                  p.py(std::min(p.ymax, std::max(p.ymin, v))));
    svg += buf;
  }
  svg += "\"/>\n";
}

void append_text(std::string& svg, double x, double y, const std::string& text,
                 const char* color = "#333") {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"%s\">", x, y,
                color);
  svg += buf;
  svg += text;
  svg += "</text>\n";
}

}  // namespace

std::string steps_csv(const Trace& tr) {
  std::string out = "t,delta_f,v";
  const std::size_t n_dg = tr.steps.empty() ? 0 : tr.steps.front().p_dg.size();
  for (std::size_t i = 0; i < n_dg; ++i) out += ",p_dg_" + std::to_string(i);
  out += ",p_ess,soc,p_load,shed_fraction,breaker_feeder,prearm\n";
  for (const auto& s : tr.steps) {
    out += format_double(s.t);
    out += ',';
    out += format_double(s.delta_f);
    out += ',';
    out += format_double(s.v);
    for (double p : s.p_dg) {
      out += ',';
      out += format_double(p);
    }
    out += ',';
    out += format_double(s.p_ess);
    out += ',';
    out += format_double(s.soc);
    out += ',';
    out += format_double(s.p_load);
    out += ',';
    out += format_double(s.shed_fraction);
    out += ',';
    out += s.breaker_feeder ? '1' : '0';
    out += ',';
    out += s.prearm ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string hops_csv(const Trace& tr) {
  std::string out =
      "t,sag_depth,sag_duration,rocof,thd,df_mag,persistence,t_since_precursor,"
      "a,criteria_mask,decision,confidence,i_mag,g,s_out\n";
  for (const auto& h : tr.hops) {
    out += format_double(h.t);
    out += ',';
    out += format_double(h.features.sag_depth);
    out += ',';
    out += format_double(h.features.sag_duration);
    out += ',';
    out += format_double(h.features.rocof);
    out += ',';
    out += format_double(h.features.thd);
    out += ',';
    out += format_double(h.features.df_mag);
    out += ',';
    out += std::to_string(h.features.persistence);
    out += ',';
    out += format_double(h.features.t_since_precursor);
    out += ',';
    out += format_double(h.a);
    out += ',';
    out += std::to_string(h.criteria_mask);
    out += ',';
    out += decision_kind_name(h.decision);
    out += ',';
    out += format_double(h.confidence);
    out += ',';
    out += format_double(h.i_mag);
    out += ',';
    out += format_double(h.g);
    out += ',';
    out += format_double(h.s_out);
    out += '\n';
  }
  return out;
}

std::string events_csv(const Trace& tr) {
  std::string out = "t,type,detail,value\n";
  for (const auto& e : tr.events) {
    out += format_double(e.t);
    out += ',';
    out += e.type;
    out += ',';
    out += e.detail;
    out += ',';
    out += format_double(e.value);
    out += '\n';
  }
  return out;
}

std::string kpis_json(const Trace& tr, const KpiReport& k) {
  json j;
  j["meta"] = {{"scenario", tr.scenario_name},
               {"ground_truth", ground_truth_name(tr.ground_truth)},
               {"dt_sim", tr.dt_sim},
               {"hop", tr.hop}};
  j["kpis"] = {{"freq_dev_area", k.freq_dev_area},
               {"nadir", k.nadir},
               {"overshoot", k.overshoot},
               {"rocof_violations", k.rocof_violations},
               {"false_trips", k.false_trips},
               {"missed_faults", k.missed_faults},
               {"ess_stress", k.ess_stress},
               {"served_fraction", k.served_fraction}};
  return j.dump(2);
}

KpiReport kpis_from_json(const std::string& text) {
  const json j = json::parse(text);
  const auto& k = j.at("kpis");
  KpiReport r;
  r.freq_dev_area = k.at("freq_dev_area").get<double>();
  r.nadir = k.at("nadir").get<double>();
  r.overshoot = k.at("overshoot").get<double>();
  r.rocof_violations = k.at("rocof_violations").get<int>();
  r.false_trips = k.at("false_trips").get<int>();
  r.missed_faults = k.at("missed_faults").get<int>();
  r.ess_stress = k.at("ess_stress").get<double>();
  r.served_fraction = k.at("served_fraction").get<double>();
  return r;
}

std::string trace_svg(const Trace& tr) {
  if (tr.steps.empty()) throw std::invalid_argument("trace_svg: empty trace");
  const double tmax = tr.steps.back().t;

  double fmin = 0.0, fmax = 0.0, vmin = 1.0, vmax = 1.0, smax = 1.0;
  for (const auto& s : tr.steps) {
    fmin = std::min(fmin, s.delta_f);
    fmax = std::max(fmax, s.delta_f);
    vmin = std::min(vmin, s.v);
    vmax = std::max(vmax, s.v);
  }
  for (const auto& h : tr.hops) smax = std::max(smax, h.s_out);
  const double fpad = std::max(1e-4, (fmax - fmin) * 0.1);
  const double vpad = std::max(0.02, (vmax - vmin) * 0.1);

  const Panel pf{60, 20, 820, 110, 0, tmax, fmin - fpad, fmax + fpad};
  const Panel pv{60, 150, 820, 110, 0, tmax, vmin - vpad, vmax + vpad};
  const Panel pg{60, 280, 820, 110, 0, tmax, 0.0, std::max(2.05, smax * 1.05)};

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"420\" "
      "viewBox=\"0 0 900 420\">\n"
      "<rect width=\"900\" height=\"420\" fill=\"#fff\"/>\n";

  for (const Panel& p : {pf, pv, pg}) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                  "fill=\"none\" stroke=\"#ccc\"/>\n",
                  p.x, p.y, p.w, p.h);
    svg += buf;
  }

  std::vector<std::pair<double, double>> pts;
  pts.reserve(tr.steps.size());
  for (const auto& s : tr.steps) pts.emplace_back(s.t, s.delta_f);
  append_polyline(svg, pf, pts, "#1f77b4");
  pts.clear();
  for (const auto& s : tr.steps) pts.emplace_back(s.t, s.v);
  append_polyline(svg, pv, pts, "#2ca02c");
  pts.clear();
  for (const auto& h : tr.hops) pts.emplace_back(h.t, h.g);
  append_polyline(svg, pg, pts, "#9467bd");
  pts.clear();
  for (const auto& h : tr.hops) pts.emplace_back(h.t, h.s_out);
  append_polyline(svg, pg, pts, "#d62728");

  // Event markers across the top panel.
  for (const auto& e : tr.events) {
    const char* color = e.type == "injection"    ? "#ff7f0e"
                        : e.type == "action"     ? "#d62728"
                        : e.type == "breaker_open" ? "#000"
                                                   : "#bbb";
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"20\" x2=\"%.1f\" y2=\"390\" stroke=\"%s\" "
                  "stroke-dasharray=\"3,3\" opacity=\"0.6\"/>\n",
                  pf.px(e.t), pf.px(e.t), color);
    svg += buf;
  }

  append_text(svg, 62, 16, tr.scenario_name + "  (delta_f)");
  append_text(svg, 62, 146, "bus voltage");
  append_text(svg, 62, 276, "gate factor g (purple), gated output s_out (red)");
  svg += "</svg>\n";
  return svg;
}

void write_trace(const Trace& tr, const KpiReport& k, const std::string& dir,
                 const std::string& format) {
  if (format != "csv" && format != "json" && format != "svg")
    throw std::invalid_argument("unknown output format '" + format +
                                "' (expected csv|json|svg)");
  std::filesystem::create_directories(dir);
  const std::string base = dir + "/" + tr.scenario_name;
  write_file(base + "_steps.csv", steps_csv(tr));
  write_file(base + "_hops.csv", hops_csv(tr));
  write_file(base + "_events.csv", events_csv(tr));
  write_file(base + "_kpis.json", kpis_json(tr, k));
  if (format == "svg") write_file(base + ".svg", trace_svg(tr));
}

Trace load_trace_csv(const std::string& dir, const std::string& name) {
  const std::string base = dir + "/" + name;
  Trace tr;
  tr.scenario_name = name;

  {
    const json meta = json::parse(read_file(base + "_kpis.json")).at("meta");
    tr.ground_truth =
        ground_truth_from_name(meta.at("ground_truth").get<std::string>());
    tr.dt_sim = meta.at("dt_sim").get<double>();
    tr.hop = meta.at("hop").get<double>();
  }

  std::vector<std::string> header;
  for (const auto& row : read_csv(base + "_steps.csv", &header)) {
    StepRecord s;
    std::size_t c = 0;
    s.t = parse_double(row.at(c++));
    s.delta_f = parse_double(row.at(c++));
    s.v = parse_double(row.at(c++));
    while (c < header.size() && header[c].rfind("p_dg_", 0) == 0)
      s.p_dg.push_back(parse_double(row.at(c++)));
    s.p_ess = parse_double(row.at(c++));
    s.soc = parse_double(row.at(c++));
    s.p_load = parse_double(row.at(c++));
    s.shed_fraction = parse_double(row.at(c++));
    s.breaker_feeder = parse_int(row.at(c++)) != 0;
    s.prearm = parse_int(row.at(c++)) != 0;
    if (c != row.size())
      throw std::runtime_error("steps csv: unexpected column count");
    tr.steps.push_back(std::move(s));
  }

  for (const auto& row : read_csv(base + "_hops.csv", nullptr)) {
    if (row.size() != 15) throw std::runtime_error("hops csv: unexpected column count");
    HopRecord h;
    h.t = parse_double(row[0]);
    h.features.sag_depth = parse_double(row[1]);
    h.features.sag_duration = parse_double(row[2]);
    h.features.rocof = parse_double(row[3]);
    h.features.thd = parse_double(row[4]);
    h.features.df_mag = parse_double(row[5]);
    h.features.persistence = static_cast<int>(parse_int(row[6]));
    h.features.t_since_precursor = parse_double(row[7]);
    h.a = parse_double(row[8]);
    h.criteria_mask = static_cast<int>(parse_int(row[9]));
    h.decision = decision_kind_from_name(row[10]);
    h.confidence = parse_double(row[11]);
    h.i_mag = parse_double(row[12]);
    h.g = parse_double(row[13]);
    h.s_out = parse_double(row[14]);
    tr.hops.push_back(h);
  }

  for (const auto& row : read_csv(base + "_events.csv", nullptr)) {
    if (row.size() != 4) throw std::runtime_error("events csv: unexpected column count");
    EventRecord e;
    e.t = parse_double(row[0]);
    e.type = row[1];
    e.detail = row[2];
    e.value = parse_double(row[3]);
    tr.events.push_back(std::move(e));
  }

  return tr;
}

SuiteSummary summarize_kpis(const std::vector<KpiReport>& kpis) {
  if (kpis.empty()) throw std::invalid_argument("summarize_kpis: no reports");
  SuiteSummary s;
  s.scenarios = static_cast<int>(kpis.size());
  double dev = 0, nad = 0, over = 0, stress = 0, served = 0;
  for (const auto& k : kpis) {
    dev += k.freq_dev_area;
    nad += k.nadir;
    over += k.overshoot;
    stress += k.ess_stress;
    served += k.served_fraction;
    s.rocof_violations += k.rocof_violations;
    s.false_trips += k.false_trips;
    s.missed_faults += k.missed_faults;
  }
  const double n = static_cast<double>(kpis.size());
  s.mean_freq_dev_area = dev / n;
  s.mean_nadir = nad / n;
  s.mean_overshoot = over / n;
  s.mean_ess_stress = stress / n;
  s.mean_served_fraction = served / n;
  return s;
}

namespace {

json summary_to_json_obj(const SuiteSummary& s) {
  return {{"scenarios", s.scenarios},
          {"mean_freq_dev_area", s.mean_freq_dev_area},
          {"mean_nadir", s.mean_nadir},
          {"mean_overshoot", s.mean_overshoot},
          {"rocof_violations", s.rocof_violations},
          {"false_trips", s.false_trips},
          {"missed_faults", s.missed_faults},
          {"mean_ess_stress", s.mean_ess_stress},
          {"mean_served_fraction", s.mean_served_fraction}};
}

constexpr const char* kSummaryHeader =
    "scenarios,mean_freq_dev_area,mean_nadir,mean_overshoot,rocof_violations,"
    "false_trips,missed_faults,mean_ess_stress,mean_served_fraction";

std::string summary_row(const SuiteSummary& s) {
  std::string out = std::to_string(s.scenarios);
  out += ',' + format_double(s.mean_freq_dev_area);
  out += ',' + format_double(s.mean_nadir);
  out += ',' + format_double(s.mean_overshoot);
  out += ',' + std::to_string(s.rocof_violations);
  out += ',' + std::to_string(s.false_trips);
  out += ',' + std::to_string(s.missed_faults);
  out += ',' + format_double(s.mean_ess_stress);
  out += ',' + format_double(s.mean_served_fraction);
  return out;
}

}  // namespace

std::string suite_summary_json(const SuiteSummary& s) {
  return summary_to_json_obj(s).dump(2);
}

std::string suite_summary_csv(const SuiteSummary& s) {
  return std::string(kSummaryHeader) + "\n" + summary_row(s) + "\n";
}

std::string compare_csv(const std::vector<ControllerSummary>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("compare: need at least two controllers");
  for (const auto& r : rows)
    if (r.summary.scenarios != rows.front().summary.scenarios)
      throw std::invalid_argument("compare: controllers ran different scenario counts");

  std::string out = std::string("controller,") + kSummaryHeader + "\n";
  for (const auto& r : rows) out += r.controller + ',' + summary_row(r.summary) + '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const auto& a = rows[i].summary;
      const auto& b = rows[j].summary;
      out += "delta(" + rows[i].controller + "-" + rows[j].controller + ")," +
             std::to_string(a.scenarios);
      out += ',' + format_double(a.mean_freq_dev_area - b.mean_freq_dev_area);
      out += ',' + format_double(a.mean_nadir - b.mean_nadir);
      out += ',' + format_double(a.mean_overshoot - b.mean_overshoot);
      out += ',' + std::to_string(a.rocof_violations - b.rocof_violations);
      out += ',' + std::to_string(a.false_trips - b.false_trips);
      out += ',' + std::to_string(a.missed_faults - b.missed_faults);
      out += ',' + format_double(a.mean_ess_stress - b.mean_ess_stress);
      out += ',' + format_double(a.mean_served_fraction - b.mean_served_fraction);
      out += '\n';
    }
  }
  return out;
}

std::string compare_json(const std::vector<ControllerSummary>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("compare: need at least two controllers");
  for (const auto& r : rows)
    if (r.summary.scenarios != rows.front().summary.scenarios)
      throw std::invalid_argument("compare: controllers ran different scenario counts");
  json j;
  j["controllers"] = json::array();
  for (const auto& r : rows)
    j["controllers"].push_back(
        {{"controller", r.controller}, {"summary", summary_to_json_obj(r.summary)}});
  json deltas = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = i + 1; k < rows.size(); ++k) {
      const auto& a = rows[i].summary;
      const auto& b = rows[k].summary;
      deltas.push_back(
          {{"pair", rows[i].controller + "-" + rows[k].controller},
           {"mean_freq_dev_area", a.mean_freq_dev_area - b.mean_freq_dev_area},
           {"mean_nadir", a.mean_nadir - b.mean_nadir},
           {"mean_overshoot", a.mean_overshoot - b.mean_overshoot},
           {"rocof_violations", a.rocof_violations - b.rocof_violations},
           {"false_trips", a.false_trips - b.false_trips},
           {"missed_faults", a.missed_faults - b.missed_faults},
           {"mean_ess_stress", a.mean_ess_stress - b.mean_ess_stress},
           {"mean_served_fraction",
            a.mean_served_fraction - b.mean_served_fraction}});
    }
  }
  j["deltas"] = deltas;
  return j.dump(2);
}

}  // namespace nmg
