#include "oculolipid/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "oculolipid/csv.hpp"
#include "oculolipid/errors.hpp"

namespace oculolipid::report {

namespace {

using json = nlohmann::ordered_json;

// Fixed two-decimal coordinates keep the markup short and byte-stable.
std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

std::string svg_open(double w, double h) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
                    "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
                    "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
    s += "<style>\n"
         "text{font-size:11px;fill:#222}\n"
         ".title{font-size:14px;font-weight:bold}\n"
         ".pos{fill:#2471a3}.neg{fill:#c0392b}\n"
         "line.pos,path.pos,polyline.pos{stroke:#2471a3;fill:none}\n"
         "line.neg,path.neg,polyline.neg{stroke:#c0392b;fill:none}\n"
         ".sig{fill:#c0392b;font-weight:bold}\n"
         ".axis{stroke:#555;stroke-width:1}\n"
         ".grid{stroke:#e3e3e3;stroke-width:1}\n"
         ".bar{fill:#5b8db8}\n"
         ".band{fill:#b0c4de;fill-opacity:0.6;stroke:none}\n"
         ".median{stroke:#333;fill:none}\n"
         ".box{fill:#dce9f5;stroke:#4a6b8a}\n"
         ".whisker{stroke:#4a6b8a}\n"
         ".kde{stroke:#6a51a3;fill:none;stroke-width:1.5}\n"
         "</style>\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"#ffffff\"/>\n";
    return s;
}

std::string text_at(double x, double y, const std::string& content,
                    const std::string& attrs = "") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" +
           (attrs.empty() ? "" : " " + attrs) + ">" + esc(content) + "</text>\n";
}

std::string line_at(double x1, double y1, double x2, double y2, const std::string& cls,
                    const std::string& extra = "") {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\" class=\"" + cls + "\"" + (extra.empty() ? "" : " " + extra) + "/>\n";
}

// Deterministic subclass palette: listed order, not hashing.
const std::vector<std::pair<std::string, std::string>>& subclass_palette() {
    static const std::vector<std::pair<std::string, std::string>> palette = {
        {"tag", "#e6550d"},    {"dag", "#fd8d3c"},     {"cer", "#756bb1"},
        {"pc", "#3182bd"},     {"pe", "#6baed6"},      {"ps", "#31a354"},
        {"pg", "#74c476"},     {"pi", "#a1d99b"},      {"sm", "#9e9ac8"},
        {"lysopc", "#fdae6b"}, {"lysope", "#fdd0a2"},  {"glccer", "#bcbddc"},
        {"laccer", "#dadaeb"}, {"fa", "#969696"},      {"acca", "#bdbdbd"},
        {"gsl", "#d9d9d9"},    {"coenzyme_q10", "#636363"},
        {"cholesteryl_ester", "#8c6d31"},              {"other", "#7f7f7f"},
    };
    return palette;
}

std::string subclass_color(const std::string& subclass) {
    for (const auto& [name, color] : subclass_palette())
        if (name == subclass) return color;
    return "#7f7f7f";
}

std::string sign_class(double r) { return r < 0.0 ? "neg" : "pos"; }

} // namespace

double quantile_linear(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    p = std::clamp(p, 0.0, 1.0);
    double h = double(values.size() - 1) * p;
    size_t lo = size_t(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - double(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<double> gaussian_kde(const std::vector<double>& sample,
                                 const std::vector<double>& grid) {
    std::vector<double> density(grid.size(), 0.0);
    if (sample.empty()) return density;
    double n = double(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    double sd = sample.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 1.0;
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    double iqr = quantile_linear(sorted, 0.75) - quantile_linear(sorted, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    if (spread <= 0.0) spread = 1.0;
    double bw = 0.9 * spread * std::pow(n, -0.2); // Silverman's rule of thumb
    const double inv_norm = 1.0 / (n * bw * std::sqrt(2.0 * 3.141592653589793));
    for (size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double v : sample) {
            double t = (grid[g] - v) / bw;
            acc += std::exp(-0.5 * t * t);
        }
        density[g] = acc * inv_norm;
    }
    return density;
}

Figure render_bubble(const stats::AdjustedResultSet& results,
                     const std::vector<std::string>& fundus_list,
                     const std::vector<std::string>& lipid_list, double min_radius,
                     double max_radius) {
    if (fundus_list.empty() || lipid_list.empty())
        throw Error(ErrorKind::Data, "bubble grid requires nonempty feature and lipid lists");

    std::map<std::pair<std::string, std::string>, size_t> cell_index;
    for (size_t i = 0; i < results.results.size(); ++i)
        cell_index[{results.results[i].x_name, results.results[i].y_name}] = i;

    double max_abs = 0.0;
    for (const auto& f : fundus_list)
        for (const auto& l : lipid_list) {
            auto it = cell_index.find({f, l});
            if (it != cell_index.end())
                max_abs = std::max(max_abs, std::abs(results.results[it->second].r));
        }

    const double cell = 26.0, left = 240.0, top = 150.0;
    double width = left + cell * double(fundus_list.size()) + 40.0;
    double height = top + cell * double(lipid_list.size()) + 40.0;

    std::string svg = svg_open(width, height);
    svg += text_at(20, 24, "Lipid x fundus-feature correlation grid", "class=\"title\"");

    json data;
    data["cols"] = fundus_list;
    data["rows"] = lipid_list;
    data["max_abs_r"] = max_abs;
    data["min_radius_px"] = min_radius;
    data["max_radius_px"] = max_radius;
    data["cells"] = json::array();
    data["missing"] = json::array();

    for (size_t fi = 0; fi < fundus_list.size(); ++fi) {
        double x = left + cell * double(fi) + cell / 2.0;
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(top - 8.0) + "\" transform=\"rotate(-45 " +
               num(x) + " " + num(top - 8.0) + ")\">" + esc(fundus_list[fi]) + "</text>\n";
    }
    for (size_t li = 0; li < lipid_list.size(); ++li) {
        double y = top + cell * double(li) + cell / 2.0;
        svg += text_at(left - 8.0, y + 4.0, lipid_list[li], "text-anchor=\"end\"");
        svg += line_at(left, y + cell / 2.0, left + cell * double(fundus_list.size()),
                       y + cell / 2.0, "grid");
    }

    for (size_t li = 0; li < lipid_list.size(); ++li) {
        for (size_t fi = 0; fi < fundus_list.size(); ++fi) {
            auto it = cell_index.find({fundus_list[fi], lipid_list[li]});
            double cx = left + cell * double(fi) + cell / 2.0;
            double cy = top + cell * double(li) + cell / 2.0;
            if (it == cell_index.end()) {
                json miss;
                miss["fundus"] = fundus_list[fi];
                miss["lipid"] = lipid_list[li];
                data["missing"].push_back(miss);
                continue;
            }
            const auto& res = results.results[it->second];
            bool significant = results.significant[it->second];
            double frac = max_abs > 0.0 ? std::abs(res.r) / max_abs : 0.0;
            double radius = min_radius + (max_radius - min_radius) * frac;
            svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(radius) +
                   "\" class=\"" + sign_class(res.r) + "\"/>\n";
            if (significant)
                svg += text_at(cx, cy - radius - 2.0, "*",
                               "class=\"sig\" text-anchor=\"middle\"");
            json c;
            c["fundus"] = res.x_name;
            c["lipid"] = res.y_name;
            c["r"] = res.r;
            c["p_adjusted"] = results.p_adjusted[it->second];
            c["significant"] = significant;
            c["radius_px"] = radius;
            data["cells"].push_back(c);
        }
    }
    svg += "</svg>\n";
    return {"bubble", svg, data.dump(2) + "\n"};
}

Figure render_forest(std::vector<pipeline::RankedAssociation> top) {
    std::sort(top.begin(), top.end(),
              [](const pipeline::RankedAssociation& a, const pipeline::RankedAssociation& b) {
                  double ra = std::abs(a.result.r), rb = std::abs(b.result.r);
                  if (ra != rb) return ra > rb;
                  if (a.result.p != b.result.p) return a.result.p < b.result.p;
                  return a.result.x_name + "|" + a.result.y_name <
                         b.result.x_name + "|" + b.result.y_name;
              });

    const double left = 320.0, row_h = 22.0, plot_w = 340.0, top_m = 50.0;
    double height = top_m + row_h * std::max<size_t>(top.size(), 1) + 40.0;
    double width = left + plot_w + 200.0;

    double lo = 0.0, hi = 0.0;
    for (const auto& entry : top) {
        lo = std::min(lo, entry.result.ci_lower);
        hi = std::max(hi, entry.result.ci_upper);
    }
    if (lo == hi) {
        lo -= 0.1;
        hi += 0.1;
    }
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto xmap = [&](double r) { return left + (r - lo) / (hi - lo) * plot_w; };

    std::string svg = svg_open(width, height);
    svg += text_at(20, 24, "Top associations: partial r with 95% CI", "class=\"title\"");
    svg += line_at(xmap(0.0), top_m - 10.0, xmap(0.0), top_m + row_h * double(top.size()) + 6.0,
                   "axis", "stroke-dasharray=\"4 3\"");

    json data;
    data["rows"] = json::array();
    if (top.empty()) svg += text_at(left, top_m + 14.0, "no significant associations");

    for (size_t i = 0; i < top.size(); ++i) {
        const auto& res = top[i].result;
        double y = top_m + row_h * double(i) + row_h / 2.0;
        std::string cls = sign_class(res.r);
        svg += text_at(left - 10.0, y + 4.0, res.x_name + " x " + res.y_name,
                       "text-anchor=\"end\"");
        svg += line_at(xmap(res.ci_lower), y, xmap(res.ci_upper), y, cls);
        svg += line_at(xmap(res.ci_lower), y - 4.0, xmap(res.ci_lower), y + 4.0, cls);
        svg += line_at(xmap(res.ci_upper), y - 4.0, xmap(res.ci_upper), y + 4.0, cls);
        svg += "<circle cx=\"" + num(xmap(res.r)) + "\" cy=\"" + num(y) + "\" r=\"3.5\" class=\"" +
               cls + "\"/>\n";
        svg += text_at(left + plot_w + 12.0, y + 4.0,
                       format_double(res.r) + " (" + format_double(res.ci_lower) + ", " +
                           format_double(res.ci_upper) + ")");
        json row;
        row["fundus"] = res.x_name;
        row["lipid"] = res.y_name;
        row["r"] = res.r;
        row["ci_lower"] = res.ci_lower;
        row["ci_upper"] = res.ci_upper;
        row["p"] = res.p;
        row["p_adjusted"] = top[i].p_adjusted;
        row["n"] = res.n_used;
        data["rows"].push_back(row);
    }
    svg += "</svg>\n";
    return {"forest", svg, data.dump(2) + "\n"};
}

Figure render_network(const pipeline::AssociationNetwork& net) {
    json data;
    data["empty"] = net.edges.empty();
    data["nodes"] = json::array();
    data["edges"] = json::array();

    if (net.edges.empty()) {
        std::string svg = svg_open(520, 120);
        svg += text_at(20, 24, "Fundus-lipid association network", "class=\"title\"");
        svg += text_at(20, 64,
                       "no fundus feature exceeded the degree threshold (n > " +
                           std::to_string(net.min_degree) + ")");
        svg += "</svg>\n";
        return {"network", svg, data.dump(2) + "\n"};
    }

    const double left_x = 210.0, right_x = 640.0, top_m = 60.0;
    size_t nl = net.fundus_nodes.size(), nr = net.lipid_nodes.size();
    double plot_h = 26.0 * double(std::max(nl, nr));
    double height = top_m + plot_h + 80.0;
    double width = right_x + 260.0;

    std::map<std::string, double> left_y, right_y;
    for (size_t i = 0; i < nl; ++i)
        left_y[net.fundus_nodes[i].id] = top_m + (double(i) + 0.5) * plot_h / double(nl);
    for (size_t i = 0; i < nr; ++i)
        right_y[net.lipid_nodes[i].id] = top_m + (double(i) + 0.5) * plot_h / double(nr);

    double max_abs = 0.0;
    for (const auto& e : net.edges) max_abs = std::max(max_abs, std::abs(e.r));

    std::string svg = svg_open(width, height);
    svg += text_at(20, 24, "Fundus-lipid association network", "class=\"title\"");
    svg += text_at(left_x - 150.0, top_m - 16.0, "fundus features");
    svg += text_at(right_x, top_m - 16.0, "lipid species");

    for (const auto& e : net.edges) {
        double sw = 0.8 + (max_abs > 0.0 ? 2.0 * std::abs(e.r) / max_abs : 0.0);
        svg += line_at(left_x + 4.0, left_y[e.source], right_x - 10.0, right_y[e.target],
                       sign_class(e.r), "stroke-width=\"" + num(sw) + "\"");
        json ej;
        ej["source"] = e.source;
        ej["target"] = e.target;
        ej["r"] = e.r;
        ej["p_adjusted"] = e.p_adjusted;
        ej["sign"] = e.sign;
        data["edges"].push_back(ej);
    }

    auto node_json = [&](const pipeline::NetworkNode& n) {
        json nj;
        nj["id"] = n.id;
        nj["side"] = n.side;
        nj["subclass"] = n.subclass;
        nj["degree"] = n.degree;
        data["nodes"].push_back(nj);
    };
    for (const auto& n : net.fundus_nodes) {
        double y = left_y[n.id];
        svg += "<rect x=\"" + num(left_x - 8.0) + "\" y=\"" + num(y - 7.0) +
               "\" width=\"12\" height=\"14\" rx=\"3\" fill=\"#34495e\"/>\n";
        svg += text_at(left_x - 16.0, y + 4.0, n.id + " (" + std::to_string(n.degree) + ")",
                       "text-anchor=\"end\"");
        node_json(n);
    }
    for (const auto& n : net.lipid_nodes) {
        double y = right_y[n.id];
        svg += "<circle cx=\"" + num(right_x) + "\" cy=\"" + num(y) + "\" r=\"5\" fill=\"" +
               subclass_color(n.subclass) + "\" stroke=\"#444\"/>\n";
        svg += text_at(right_x + 12.0, y + 4.0, n.id);
        node_json(n);
    }

    // Legend: subclasses actually present, palette order.
    std::vector<std::string> present;
    for (const auto& [name, color] : subclass_palette()) {
        for (const auto& n : net.lipid_nodes)
            if (n.subclass == name) {
                present.push_back(name);
                break;
            }
    }
    double lx = 20.0, ly = height - 30.0;
    svg += text_at(lx, ly - 14.0, "subclass:");
    for (const auto& name : present) {
        svg += "<circle cx=\"" + num(lx + 6.0) + "\" cy=\"" + num(ly - 4.0) + "\" r=\"5\" fill=\"" +
               subclass_color(name) + "\" stroke=\"#444\"/>\n";
        svg += text_at(lx + 16.0, ly, name);
        lx += 16.0 + 7.0 * double(name.size()) + 24.0;
    }

    svg += "</svg>\n";
    return {"network", svg, data.dump(2) + "\n"};
}

Figure render_count_bars(const stats::AdjustedResultSet& results) {
    std::map<std::string, size_t> counts;
    for (size_t i = 0; i < results.results.size(); ++i) {
        counts.emplace(results.results[i].x_name, 0);
        if (results.significant[i]) ++counts[results.results[i].x_name];
    }
    std::vector<std::pair<std::string, size_t>> bars(counts.begin(), counts.end());
    std::sort(bars.begin(), bars.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const double left = 280.0, bar_h = 16.0, gap = 6.0, top_m = 50.0, scale_w = 420.0;
    size_t max_count = bars.empty() ? 0 : bars.front().second;
    double height = top_m + double(bars.size()) * (bar_h + gap) + 30.0;
    double width = left + scale_w + 80.0;

    std::string svg = svg_open(width, height);
    svg += text_at(20, 24, "Significant lipid partners per fundus feature", "class=\"title\"");

    json data;
    data["bars"] = json::array();
    for (size_t i = 0; i < bars.size(); ++i) {
        double y = top_m + double(i) * (bar_h + gap);
        double w = max_count > 0 ? scale_w * double(bars[i].second) / double(max_count) : 0.0;
        svg += text_at(left - 10.0, y + bar_h - 4.0, bars[i].first, "text-anchor=\"end\"");
        svg += "<rect x=\"" + num(left) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
               "\" height=\"" + num(bar_h) + "\" class=\"bar\"/>\n";
        svg += text_at(left + w + 6.0, y + bar_h - 4.0, std::to_string(bars[i].second));
        json b;
        b["feature"] = bars[i].first;
        b["count"] = bars[i].second;
        data["bars"].push_back(b);
    }
    svg += "</svg>\n";
    return {"count_bars", svg, data.dump(2) + "\n"};
}

namespace {

struct AgeBin {
    double lo = 0.0, hi = 0.0;
    std::vector<double> values;
    double p10 = 0.0, p50 = 0.0, p90 = 0.0;
    size_t merged_from = 1;
};

// 5-year bins over the observed age span; bins under min_rows are folded into
// their right neighbor (the trailing remainder folds leftward).
std::vector<AgeBin> age_bins(const std::vector<double>& age, const std::vector<double>& value,
                             size_t min_rows) {
    std::vector<AgeBin> bins;
    double lo_age = std::numeric_limits<double>::infinity(), hi_age = -lo_age;
    for (size_t i = 0; i < age.size(); ++i) {
        if (std::isnan(value[i])) continue;
        lo_age = std::min(lo_age, age[i]);
        hi_age = std::max(hi_age, age[i]);
    }
    if (!(lo_age <= hi_age)) return bins;

    double start = std::floor(lo_age / 5.0) * 5.0;
    for (double b = start; b <= hi_age; b += 5.0) bins.push_back({b, b + 5.0, {}, 0, 0, 0, 1});
    for (size_t i = 0; i < age.size(); ++i) {
        if (std::isnan(value[i])) continue;
        size_t idx = std::min(bins.size() - 1, size_t((age[i] - start) / 5.0));
        bins[idx].values.push_back(value[i]);
    }

    std::vector<AgeBin> merged;
    AgeBin acc;
    bool open = false;
    for (auto& bin : bins) {
        if (!open) {
            acc = std::move(bin);
            open = true;
        } else {
            acc.hi = bin.hi;
            acc.merged_from += 1;
            acc.values.insert(acc.values.end(), bin.values.begin(), bin.values.end());
        }
        if (acc.values.size() >= min_rows) {
            merged.push_back(std::move(acc));
            open = false;
        }
    }
    if (open) {
        if (!merged.empty()) {
            merged.back().hi = acc.hi;
            merged.back().merged_from += acc.merged_from;
            merged.back().values.insert(merged.back().values.end(), acc.values.begin(),
                                        acc.values.end());
        } else if (!acc.values.empty()) {
            merged.push_back(std::move(acc));
        }
    }
    for (auto& bin : merged) {
        bin.p10 = quantile_linear(bin.values, 0.10);
        bin.p50 = quantile_linear(bin.values, 0.50);
        bin.p90 = quantile_linear(bin.values, 0.90);
    }
    return merged;
}

struct BoxStats {
    double q1 = 0.0, q2 = 0.0, q3 = 0.0, lo = 0.0, hi = 0.0;
    size_t n = 0;
};

BoxStats box_stats(const std::vector<double>& values) {
    BoxStats b;
    b.n = values.size();
    if (values.empty()) return b;
    b.q1 = quantile_linear(values, 0.25);
    b.q2 = quantile_linear(values, 0.50);
    b.q3 = quantile_linear(values, 0.75);
    double iqr = b.q3 - b.q1;
    double fence_lo = b.q1 - 1.5 * iqr, fence_hi = b.q3 + 1.5 * iqr;
    b.lo = b.q2;
    b.hi = b.q2;
    bool first = true;
    for (double v : values) {
        if (v < fence_lo || v > fence_hi) continue;
        if (first) {
            b.lo = b.hi = v;
            first = false;
        } else {
            b.lo = std::min(b.lo, v);
            b.hi = std::max(b.hi, v);
        }
    }
    return b;
}

} // namespace

Figure render_demographic_panels(const pipeline::DemographicProfile& profile,
                                 const cohort::MergedCohort& cohort, bool with_kde) {
    const double panel_w = 280.0, panel_h = 170.0, margin = 20.0;
    const size_t per_row = 3;
    size_t n_panels = profile.entries.size() + (with_kde ? 1 : 0);
    size_t rows = (n_panels + per_row - 1) / per_row;
    double width = margin + per_row * (panel_w + margin);
    double height = 40.0 + margin + double(rows) * (panel_h + margin);

    std::vector<double> age;
    for (const auto& p : cohort.participants) age.push_back(p.age);

    std::string svg = svg_open(width, height);
    svg += text_at(20, 24, "Fundus features by age and sex", "class=\"title\"");
    json data;
    data["features"] = json::array();

    for (size_t e = 0; e < profile.entries.size(); ++e) {
        const auto& entry = profile.entries[e];
        double px = margin + double(e % per_row) * (panel_w + margin);
        double py = 40.0 + margin + double(e / per_row) * (panel_h + margin);

        int col = -1;
        for (size_t c = 0; c < cohort.fundus_names.size(); ++c)
            if (cohort.fundus_names[c] == entry.feature) col = int(c);
        std::vector<double> value(cohort.participants.size(),
                                  std::numeric_limits<double>::quiet_NaN());
        std::vector<double> male_vals, female_vals;
        if (col >= 0)
            for (size_t r = 0; r < cohort.participants.size(); ++r) {
                double v = size_t(col) < cohort.fundus[r].size() ? cohort.fundus[r][size_t(col)]
                                                                 : value[r];
                value[r] = v;
                if (std::isnan(v)) continue;
                (cohort.participants[r].sex == cohort::Sex::Male ? male_vals : female_vals)
                    .push_back(v);
            }

        std::vector<AgeBin> bins = age_bins(age, value, 20);
        BoxStats male_box = box_stats(male_vals), female_box = box_stats(female_vals);

        // panel frame + title + annotation
        svg += "<rect x=\"" + num(px) + "\" y=\"" + num(py) + "\" width=\"" + num(panel_w) +
               "\" height=\"" + num(panel_h) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        svg += text_at(px + 8.0, py + 16.0, entry.feature);
        svg += text_at(px + 8.0, py + 30.0,
                       "age r=" + format_double(entry.age.r) + " CI [" +
                           format_double(entry.age.ci_lower) + ", " +
                           format_double(entry.age.ci_upper) +
                           "] p_adj=" + format_double(entry.age_p_adjusted));

        double value_lo = std::numeric_limits<double>::infinity(), value_hi = -value_lo;
        for (const auto& bin : bins) {
            value_lo = std::min(value_lo, bin.p10);
            value_hi = std::max(value_hi, bin.p90);
        }
        for (const auto& box : {male_box, female_box}) {
            if (box.n == 0) continue;
            value_lo = std::min(value_lo, box.lo);
            value_hi = std::max(value_hi, box.hi);
        }
        if (!(value_lo < value_hi)) {
            value_lo -= 1.0;
            value_hi += 1.0;
        }
        double vpad = 0.05 * (value_hi - value_lo);
        value_lo -= vpad;
        value_hi += vpad;

        const double trend_x = px + 10.0, trend_w = panel_w - 110.0;
        const double plot_y = py + 44.0, plot_h = panel_h - 58.0;
        auto ymap = [&](double v) {
            return plot_y + plot_h - (v - value_lo) / (value_hi - value_lo) * plot_h;
        };

        if (!bins.empty()) {
            double age_lo = bins.front().lo, age_hi = bins.back().hi;
            auto xmap = [&](double a) {
                return trend_x + (a - age_lo) / std::max(age_hi - age_lo, 1e-9) * trend_w;
            };
            std::string band = "<path class=\"band\" d=\"M";
            for (size_t b = 0; b < bins.size(); ++b) {
                double cx = xmap((bins[b].lo + bins[b].hi) / 2.0);
                band += (b ? " L" : "") + std::string(" ") + num(cx) + " " + num(ymap(bins[b].p90));
            }
            for (size_t b = bins.size(); b-- > 0;) {
                double cx = xmap((bins[b].lo + bins[b].hi) / 2.0);
                band += " L " + num(cx) + " " + num(ymap(bins[b].p10));
            }
            band += " Z\"/>\n";
            svg += band;
            std::string median = "<polyline class=\"median\" points=\"";
            for (size_t b = 0; b < bins.size(); ++b) {
                double cx = xmap((bins[b].lo + bins[b].hi) / 2.0);
                median += num(cx) + "," + num(ymap(bins[b].p50)) + " ";
            }
            median += "\"/>\n";
            svg += median;
            svg += line_at(trend_x, plot_y + plot_h, trend_x + trend_w, plot_y + plot_h, "axis");
            svg += text_at(trend_x, plot_y + plot_h + 12.0,
                           format_double(age_lo) + "-" + format_double(age_hi) + " yr");
        }

        // sex boxes on the right of the panel
        double bx = px + panel_w - 84.0;
        const char* labels[2] = {"M", "F"};
        const BoxStats* boxes[2] = {&male_box, &female_box};
        for (int s = 0; s < 2; ++s) {
            const BoxStats& box = *boxes[s];
            double cx = bx + double(s) * 40.0;
            if (box.n > 0) {
                svg += line_at(cx, ymap(box.lo), cx, ymap(box.q1), "whisker");
                svg += line_at(cx, ymap(box.q3), cx, ymap(box.hi), "whisker");
                svg += "<rect x=\"" + num(cx - 9.0) + "\" y=\"" + num(ymap(box.q3)) +
                       "\" width=\"18\" height=\"" +
                       num(std::max(ymap(box.q1) - ymap(box.q3), 0.5)) + "\" class=\"box\"/>\n";
                svg += line_at(cx - 9.0, ymap(box.q2), cx + 9.0, ymap(box.q2), "axis");
            }
            svg += text_at(cx - 3.0, plot_y + plot_h + 12.0, labels[s]);
        }

        json feature;
        feature["feature"] = entry.feature;
        feature["age_r"] = entry.age.r;
        feature["age_ci_lower"] = entry.age.ci_lower;
        feature["age_ci_upper"] = entry.age.ci_upper;
        feature["age_p_adjusted"] = entry.age_p_adjusted;
        feature["retained"] = entry.retained;
        feature["bins"] = json::array();
        for (const auto& bin : bins) {
            json bj;
            bj["age_lo"] = bin.lo;
            bj["age_hi"] = bin.hi;
            bj["n"] = bin.values.size();
            bj["merged_from"] = bin.merged_from;
            bj["p10"] = bin.p10;
            bj["p50"] = bin.p50;
            bj["p90"] = bin.p90;
            feature["bins"].push_back(bj);
        }
        auto box_json = [](const BoxStats& b) {
            json bj;
            bj["q1"] = b.q1;
            bj["median"] = b.q2;
            bj["q3"] = b.q3;
            bj["whisker_lo"] = b.lo;
            bj["whisker_hi"] = b.hi;
            bj["n"] = b.n;
            return bj;
        };
        feature["box_male"] = box_json(male_box);
        feature["box_female"] = box_json(female_box);
        data["features"].push_back(feature);
    }

    if (with_kde && !age.empty()) {
        size_t e = profile.entries.size();
        double px = margin + double(e % per_row) * (panel_w + margin);
        double py = 40.0 + margin + double(e / per_row) * (panel_h + margin);
        double lo = *std::min_element(age.begin(), age.end());
        double hi = *std::max_element(age.begin(), age.end());
        if (!(lo < hi)) hi = lo + 1.0;
        std::vector<double> grid(100);
        for (size_t g = 0; g < grid.size(); ++g)
            grid[g] = lo + (hi - lo) * double(g) / double(grid.size() - 1);
        std::vector<double> dens = gaussian_kde(age, grid);
        double dmax = *std::max_element(dens.begin(), dens.end());
        if (dmax <= 0.0) dmax = 1.0;
        svg += "<rect x=\"" + num(px) + "\" y=\"" + num(py) + "\" width=\"" + num(panel_w) +
               "\" height=\"" + num(panel_h) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        svg += text_at(px + 8.0, py + 16.0, "age density (Gaussian KDE)");
        std::string poly = "<polyline class=\"kde\" points=\"";
        for (size_t g = 0; g < grid.size(); ++g) {
            double x = px + 10.0 + (grid[g] - lo) / (hi - lo) * (panel_w - 20.0);
            double y = py + panel_h - 14.0 - dens[g] / dmax * (panel_h - 46.0);
            poly += num(x) + "," + num(y) + " ";
        }
        poly += "\"/>\n";
        svg += poly;
        json kde;
        kde["grid"] = grid;
        kde["density"] = dens;
        data["age_kde"] = kde;
    }

    svg += "</svg>\n";
    return {"demographics", svg, data.dump(2) + "\n"};
}

std::string summary_table_csv(const cohort::MergedCohort& cohort) {
    std::vector<std::string> names = {"age"};
    for (const auto& n : cohort.fundus_names) names.push_back(n);

    std::vector<std::vector<double>> rows(cohort.participants.size());
    std::vector<cohort::Sex> sex;
    for (size_t r = 0; r < cohort.participants.size(); ++r) {
        rows[r].push_back(cohort.participants[r].age);
        for (double v : cohort.fundus[r]) rows[r].push_back(v);
        sex.push_back(cohort.participants[r].sex);
    }
    auto summaries = cohort::summarize(names, rows, sex);

    CsvTable table;
    table.header = {"characteristic", "male_mean", "male_sd",   "male_n",
                    "female_mean",    "female_sd", "female_n",  "all_mean",
                    "all_sd",         "all_n"};
    auto cell_sd = [](const cohort::StratumStat& s) {
        return s.sd_defined ? format_double(s.sd) : std::string("NA");
    };
    auto cell_mean = [](const cohort::StratumStat& s) {
        return s.n > 0 ? format_double(s.mean) : std::string("NA");
    };
    for (const auto& summary : summaries) {
        table.rows.push_back({summary.column, cell_mean(summary.male), cell_sd(summary.male),
                              std::to_string(summary.male.n), cell_mean(summary.female),
                              cell_sd(summary.female), std::to_string(summary.female.n),
                              cell_mean(summary.all), cell_sd(summary.all),
                              std::to_string(summary.all.n)});
    }
    return emit_csv(table);
}

} // namespace oculolipid::report
