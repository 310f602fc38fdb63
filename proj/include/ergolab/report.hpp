#pragma once

// JSON report assembly and CSV export.  Reports use insertion-ordered JSON
// so identical runs serialize to identical bytes; the only volatile data
// (wall-clock and runtime) lives inside the single "timestamp" object.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergolab/common.hpp"

namespace ergolab {

using ojson = nlohmann::ordered_json;

inline ojson json_of_space(const MeasureSpace& s) {
    ojson j;
    switch (s.model()) {
        case MeasureSpace::Model::FourierTorus: {
            j["kind"] = "fourier_torus";
            j["cutoffs"] = s.cutoffs();
            break;
        }
        case MeasureSpace::Model::PointSpace: {
            j["kind"] = "point_space";
            std::vector<double> w(s.weights().data(), s.weights().data() + s.dim());
            j["weights"] = w;
            break;
        }
        case MeasureSpace::Model::Product: {
            j["kind"] = "product";
            j["dim"] = static_cast<long>(s.dim());
            break;
        }
    }
    return j;
}

inline ojson json_of_map(const NonSingularMap& m) {
    ojson j;
    if (m.is_rotation()) {
        j["kind"] = "mode_rotation";
        j["angles"] = m.angles();
    } else {
        j["kind"] = "permutation";
        j["perm"] = m.perm();
        std::vector<double> rn(m.rn_weight().data(), m.rn_weight().data() + m.rn_weight().size());
        j["rn_weight"] = rn;
    }
    return j;
}

inline ojson json_complex(const cplx& z) {
    ojson j;
    j["re"] = z.real();
    j["im"] = z.imag();
    return j;
}

// Atomic write: temp file in the target directory, then rename.
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("write_atomic: cannot open " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

inline std::string utc_now_string() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Two-column CSV with a header; stable ordering is the caller's job.
inline std::string csv_of_series(const std::string& xname, const std::string& yname,
                                 const std::vector<std::pair<double, double>>& rows) {
    std::ostringstream out;
    out << xname << "," << yname << "\n";
    char buf[64];
    for (const auto& [x, y] : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, y);
        out << buf;
    }
    return out.str();
}

} // namespace ergolab
