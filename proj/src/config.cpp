#include "itseval/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "itseval/error.hpp"

using nlohmann::ordered_json;

namespace itseval::config {

namespace {

void require_keys(const ordered_json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError(context + ": unknown key '" + key + "'");
    }
}

}  // namespace

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InputError("config: alpha must lie in (0,1]");
    if (k_neighbors < 1) throw InputError("config: k_neighbors must be at least 1");
    if (p_max < 0) throw InputError("config: p_max must be non-negative");
    if (!(dw_low < dw_high))
        throw InputError("config: dw band is empty (dw_low >= dw_high)");
    if (!(scale > 0.0)) throw InputError("config: scale must be positive");
    for (int y : eval_years)
        if (y < window.start().year || y > window.end().year)
            throw InputError("config: eval year " + std::to_string(y) +
                             " outside the study window");
}

std::vector<int> RunConfig::effective_eval_years() const {
    if (!eval_years.empty()) return eval_years;
    std::vector<int> years;
    for (int y = window.start().year; y <= window.end().year; ++y) {
        if (CalendarMonth{y, 1} < window.start() || CalendarMonth{y, 12} > window.end())
            continue;
        if (window.index_of({y, 1}) + 1 >= window.intervention_month())
            years.push_back(y);
    }
    return years;
}

std::string RunConfig::to_json() const {
    ordered_json j;
    j["window"] = {{"start", window.start().to_string()},
                   {"end", window.end().to_string()},
                   {"intervention_month", window.intervention_month()}};
    j["alpha"] = alpha;
    j["k_neighbors"] = k_neighbors;
    j["p_max"] = p_max;
    j["dw_band"] = {dw_low, dw_high};
    j["trend_coding"] = itsa::to_string(trend_coding);
    j["link_sign"] = link_sign == psm::LinkSign::standard ? "standard" : "literal";
    j["scale"] = scale;
    j["eval_years"] = effective_eval_years();
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    require_keys(j, {"window", "alpha", "k_neighbors", "p_max", "dw_band", "trend_coding",
                     "link_sign", "scale", "eval_years", "seed"},
                 "config");

    RunConfig c;
    if (j.contains("window")) {
        const auto& w = j["window"];
        require_keys(w, {"start", "end", "intervention_month"}, "config.window");
        c.window = StudyWindow(CalendarMonth::parse(w.at("start").get<std::string>()),
                               CalendarMonth::parse(w.at("end").get<std::string>()),
                               w.at("intervention_month").get<int>());
    }
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("k_neighbors")) c.k_neighbors = j["k_neighbors"].get<int>();
    if (j.contains("p_max")) c.p_max = j["p_max"].get<int>();
    if (j.contains("dw_band")) {
        const auto band = j["dw_band"].get<std::vector<double>>();
        if (band.size() != 2)
            throw InputError("config: dw_band must be [low, high]");
        c.dw_low = band[0];
        c.dw_high = band[1];
    }
    if (j.contains("trend_coding"))
        c.trend_coding = itsa::trend_coding_from_string(j["trend_coding"].get<std::string>());
    if (j.contains("link_sign")) {
        const std::string s = j["link_sign"].get<std::string>();
        if (s == "standard")
            c.link_sign = psm::LinkSign::standard;
        else if (s == "literal")
            c.link_sign = psm::LinkSign::literal;
        else
            throw InputError("config: unknown link_sign '" + s + "'");
    }
    if (j.contains("scale")) c.scale = j["scale"].get<double>();
    if (j.contains("eval_years")) c.eval_years = j["eval_years"].get<std::vector<int>>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace itseval::config
