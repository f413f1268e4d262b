#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itseval/calendar.hpp"
#include "itseval/itsa.hpp"
#include "itseval/psm.hpp"

namespace itseval::config {

/// Every tuning knob of the pipeline, serialized with explicit values so
/// a run is fully auditable. Unknown keys in a config file are rejected.
struct RunConfig {
    StudyWindow window{{1995, 1}, {2010, 12}, 90};
    double alpha = 0.05;           // seasonality pruning significance
    int k_neighbors = 5;           // matching neighbors
    int p_max = 12;                // AR order search ceiling
    double dw_low = 1.6;           // Durbin-Watson acceptance band
    double dw_high = 2.4;
    itsa::TrendCoding trend_coding = itsa::TrendCoding::since_intervention;
    psm::LinkSign link_sign = psm::LinkSign::standard;
    double scale = 100.0;          // outcome per `scale` lane-miles
    std::vector<int> eval_years;   // empty: all complete post-intervention years
    std::uint64_t seed = 12345;

    void validate() const;

    /// Evaluation years, defaulting to every complete calendar year at or
    /// after the intervention month.
    [[nodiscard]] std::vector<int> effective_eval_years() const;

    [[nodiscard]] std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
};

}  // namespace itseval::config
