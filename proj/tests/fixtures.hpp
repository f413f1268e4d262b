// Shared test fixtures: a 13-treated / 10-control street-section file in
// the sections CSV schema. Lanes, lengths, AADT, and control match
// weights follow the published corridor table; the remaining covariates
// are synthetic with overlap between groups so the selection logit stays
// well conditioned.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace fixtures {

inline std::string sections_csv() {
    return
        "section_id,group,lanes,length_mi,oneway,median_ratio,aadt,bus_routes,"
        "major_freq,secondary_freq,signal_density,match_weight\n"
        "T01,treated,4,2.75,0,0,19967,2,6,0,4.7,1\n"
        "T02,treated,4,1.40,0,0,22411,2,8,0,5.0,1\n"
        "T03,treated,3,0.24,1,0,28866,2,6,0,8.3,1\n"
        "T04,treated,4,6.36,0,0,28302,2,10,0,3.1,1\n"
        "T05,treated,2,0.51,0,0,9613,2,4,0,5.9,1\n"
        "T06,treated,2,2.93,0,0,22009,2,8,0,3.4,1\n"
        "T07,treated,4,1.96,0,0.5,29359,2,8,0,5.1,1\n"
        "T08,treated,4,2.13,0,0,43621,2,10,0,4.7,1\n"
        "T09,treated,3,0.78,1,0,17192,2,6,0,6.4,1\n"
        "T10,treated,3,0.61,1,0,16753,2,6,0,6.6,1\n"
        "T11,treated,4,0.81,0,0,17969,2,8,0,6.2,1\n"
        "T12,treated,2,0.42,0,0,13384,2,8,0,7.1,1\n"
        "T13,treated,4,1.72,0,0,21782,2,6,0,4.1,1\n"
        "C01,control,2,1.51,0,0,5255,2,4,0,2.6,12\n"
        "C02,control,4,0.53,0,0,28158,2,8,0,3.8,1\n"
        "C03,control,2,0.26,1,0.01,21771,2,6,0,7.7,1\n"
        "C04,control,2,0.35,0,0,16299,2,4,0,5.7,12\n"
        "C05,control,2,0.30,0,0,12503,2,6,0,6.7,12\n"
        "C06,control,2,0.42,0,0,18025,2,6,0,4.8,1\n"
        "C07,control,4,0.68,1,0,43174,2,10,0,4.4,12\n"
        "C08,control,4,0.27,0,0,41805,2,8,0,7.4,12\n"
        "C09,control,4,0.49,0,0,33660,2,8,0,4.1,1\n"
        "C10,control,3,0.30,0,0,21171,2,4,0,6.7,1\n";
}

// The same sections with every match weight reset to 1, for flows where
// matching has not happened yet.
inline std::string sections_csv_unweighted() {
    std::string s = sections_csv();
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i + 3 <= s.size() && s[i + 1] == '1' && s[i + 2] == '2' &&
            (i + 3 == s.size() || s[i + 3] == '\n')) {
            out += ",1";
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

inline std::filesystem::path write_file(const std::filesystem::path& dir,
                                        const std::string& name,
                                        const std::string& content) {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace fixtures
