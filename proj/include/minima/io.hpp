#ifndef MINIMA_IO_HPP
#define MINIMA_IO_HPP

#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minima/benchmark.hpp"
#include "minima/driver.hpp"
#include "minima/synthetic.hpp"

namespace minima {

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
    os << "case,strategy,step,precision_mean,recall_mean,fscore_mean\n";
    for (const MetricsRow& r : rows) {
        os << r.case_name << ',' << r.strategy << ',' << r.step << ','
           << detail::format_double(r.precision_mean) << ','
           << detail::format_double(r.recall_mean) << ','
           << detail::format_double(r.fscore_mean) << '\n';
    }
}

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    write_metrics_csv(os, rows);
    return os.str();
}

inline nlohmann::json point_json(const Point& p) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p[i]);
    return out;
}

inline nlohmann::json step_record_json(const StepRecord& r) {
    return {{"step", r.step},
            {"x", point_json(r.x)},
            {"y", r.y},
            {"sizes",
             {{"minimum", r.n_minimum}, {"not_minimum", r.n_not_minimum}, {"unknown", r.n_unknown}}},
            {"eta", r.eta},
            {"branch", branch_name(r.branch)}};
}

/// Per-candidate classification snapshot: index, coordinates, label and
/// the CI bounds the label was derived from.
inline nlohmann::json snapshot_json(const StepSnapshot& snap) {
    nlohmann::json records = nlohmann::json::array();
    for (int i = 0; i < snap.cls.size(); ++i) {
        nlohmann::json grad = nlohmann::json::array();
        for (Eigen::Index k = 0; k < snap.cis.grad_lower.cols(); ++k) {
            grad.push_back({snap.cis.grad_lower(i, k), snap.cis.grad_upper(i, k)});
        }
        records.push_back({{"index", i},
                           {"coords", point_json(snap.candidates[static_cast<std::size_t>(i)])},
                           {"label", label_name(snap.cls.label(i))},
                           {"grad_ci", grad},
                           {"eig_ci", {snap.cis.eig_lower[i], snap.cis.eig_upper[i]}}});
    }
    return {{"step", snap.step}, {"candidates", records}};
}

/// One JSON object per evaluated step; when per-step snapshots are given
/// they are attached to the matching step under "classification".
inline void write_trace_jsonl(std::ostream& os, const std::vector<StepRecord>& trace,
                              const std::vector<nlohmann::json>* snapshots = nullptr) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        nlohmann::json line = step_record_json(trace[i]);
        if (snapshots) {
            for (const auto& snap : *snapshots) {
                if (snap.at("step").get<int>() == trace[i].step) {
                    line["classification"] = snap.at("candidates");
                    break;
                }
            }
        }
        os << line.dump() << '\n';
    }
}

/// Reads a delimited numeric table of (coordinates..., value) rows.
/// Accepts commas, semicolons and whitespace as separators; lines starting
/// with '#' and an optional non-numeric header line are skipped.
inline std::vector<std::pair<Point, double>> read_numeric_table(std::istream& is) {
    std::vector<std::pair<Point, double>> rows;
    std::string line;
    bool first_content = true;
    Eigen::Index width = -1;
    while (std::getline(is, line)) {
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        for (char& ch : line) {
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        }
        std::istringstream ls(line);
        std::vector<double> vals;
        std::string token;
        bool bad = false;
        while (ls >> token) {
            try {
                std::size_t used = 0;
                double v = std::stod(token, &used);
                if (used != token.size()) throw std::invalid_argument(token);
                vals.push_back(v);
            } catch (const std::exception&) {
                bad = true;
                break;
            }
        }
        if (vals.empty() && !bad) continue; // blank line
        if (bad) {
            if (first_content) { // header
                first_content = false;
                continue;
            }
            throw UsageError("read_numeric_table: non-numeric token '" + token + "'");
        }
        first_content = false;
        if (width < 0) {
            width = static_cast<Eigen::Index>(vals.size());
            detail::require(width >= 2, "read_numeric_table: need at least one coordinate column");
        }
        detail::require(static_cast<Eigen::Index>(vals.size()) == width,
                        "read_numeric_table: ragged row");
        Point x(width - 1);
        for (Eigen::Index i = 0; i + 1 < width; ++i) x[i] = vals[static_cast<std::size_t>(i)];
        rows.emplace_back(x, vals.back());
    }
    detail::require(!rows.empty(), "read_numeric_table: no data rows");
    return rows;
}

/// Serialized fitted-truth model: kernel, noise and the retained rows.
inline nlohmann::json truth_model_json(const FittedTruth& t) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const Point& p : t.inputs()) inputs.push_back(point_json(p));
    nlohmann::json outputs = nlohmann::json::array();
    for (Eigen::Index i = 0; i < t.outputs().size(); ++i) outputs.push_back(t.outputs()[i]);
    return {{"kernel",
             {{"signal_variance", t.kernel().signal_variance},
              {"lengthscale", t.kernel().lengthscale}}},
            {"noise_variance", t.noise_variance()},
            {"inputs", inputs},
            {"outputs", outputs}};
}

inline FittedTruth truth_model_from_json(const nlohmann::json& j) {
    KernelParams kernel{j.at("kernel").at("signal_variance").get<double>(),
                        j.at("kernel").at("lengthscale").get<double>()};
    const double noise = j.at("noise_variance").get<double>();
    const auto& in = j.at("inputs");
    const auto& out = j.at("outputs");
    detail::require(in.size() == out.size() && !in.empty(),
                    "truth model: inputs and outputs must align");
    std::vector<std::pair<Point, double>> rows;
    for (std::size_t r = 0; r < in.size(); ++r) {
        Point p(in[r].size());
        for (std::size_t k = 0; k < in[r].size(); ++k) {
            p[static_cast<Eigen::Index>(k)] = in[r][k].get<double>();
        }
        rows.emplace_back(p, out[r].get<double>());
    }
    return FittedTruth(rows, kernel, noise);
}

} // namespace minima

#endif
